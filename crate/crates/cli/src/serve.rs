//! Live protocol endpoint: one client, newline-delimited JSON over plain TCP,
//! or the same messages as WebSocket text frames when the client opens with
//! an HTTP upgrade.

use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::thread;
use std::time::Duration;

use tungstenite::{Message, WebSocket};

use iscore::engine::live::{run_live, Clock, Stimulus};
use iscore::engine::{compile, init_execution, Incoming, Outgoing, Status, TriggerPolicy};
use iscore::persist::{network_to_json, score_to_string};
use iscore::Score;

use crate::{CliError, Outcome, EXIT_OK, EXIT_UNPLAYABLE};

const PROBE: Duration = Duration::from_millis(300);

pub fn serve(score: &Score, port: u16, policy: TriggerPolicy, clock: Clock) -> Result<Outcome, CliError> {
    let listener = TcpListener::bind(("127.0.0.1", port))
        .map_err(|source| CliError::Io { path: format!("127.0.0.1:{port}").into(), source })?;
    let addr = listener.local_addr().map_err(|source| CliError::Io { path: "listener".into(), source })?;
    log::info!("serving {} on {addr}", score.name);
    let status = serve_on(&listener, score, policy, clock, |line| {
        println!("{line}");
        let _ = std::io::stdout().flush();
    })?;
    Ok(Outcome {
        code: if status == Status::Finished { EXIT_OK } else { EXIT_UNPLAYABLE },
        stdout: String::new(),
        stderr: String::new(),
    })
}

fn snapshot(score: &Score, network: &iscore::stp::DispatchableNetwork) -> Outgoing {
    let parse = |s: String| serde_json::from_str(&s).expect("canonical JSON parses");
    Outgoing::Score {
        name: score.name.clone(),
        score: parse(score_to_string(score)),
        network: parse(network_to_json(network)),
    }
}

fn parse_incoming(line: &str) -> Option<Stimulus> {
    match serde_json::from_str::<Incoming>(line) {
        Ok(m) => Some(m.into()),
        Err(e) => {
            log::warn!("ignoring message {line:?}: {e}");
            None
        }
    }
}

/// Accepts one client on `listener` and performs the score for it. Every
/// message sent to the client is also passed to `log`.
pub fn serve_on(
    listener: &TcpListener,
    score: &Score,
    policy: TriggerPolicy,
    clock: Clock,
    mut log: impl FnMut(&str),
) -> Result<Status, CliError> {
    let compiled = compile(score)?;
    let io_err = |source| CliError::Io { path: "client".into(), source };
    let (stream, peer) = listener.accept().map_err(io_err)?;
    log::info!("client {peer} connected");

    // WebSocket clients speak first; a silent client gets NDJSON
    let mut head = [0u8; 4];
    stream.set_read_timeout(Some(PROBE)).map_err(io_err)?;
    let mut n = 0;
    let probe_end = std::time::Instant::now() + PROBE;
    while n < head.len() && std::time::Instant::now() < probe_end {
        match stream.peek(&mut head) {
            Ok(0) => break,
            Ok(k) if head[..k] != b"GET "[..k] => break,
            Ok(k) => n = k,
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => break,
            Err(e) => return Err(io_err(e)),
        }
    }
    stream.set_read_timeout(None).map_err(io_err)?;
    let websocket = n == head.len();

    let (stim_tx, stim_rx) = mpsc::channel::<Stimulus>();
    let (out_tx, out_rx) = mpsc::channel::<String>();

    let transport = if websocket {
        let ws = tungstenite::accept(stream)
            .map_err(|e| io_err(std::io::Error::new(ErrorKind::InvalidData, e.to_string())))?;
        thread::spawn(move || websocket_loop(ws, out_rx, stim_tx))
    } else {
        let reader = stream.try_clone().map_err(io_err)?;
        let tx = stim_tx.clone();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let Ok(line) = line else { break };
                if let Some(s) = parse_incoming(line.trim()) {
                    if tx.send(s).is_err() {
                        break;
                    }
                }
            }
            let _ = tx.send(Stimulus::Stop);
        });
        thread::spawn(move || ndjson_writer(stream, out_rx))
    };

    let mut emit = |m: &Outgoing| {
        let line = m.to_line();
        log(&line);
        let _ = out_tx.send(line);
    };
    emit(&snapshot(&compiled.score, &compiled.network));
    let state = init_execution(compiled.network.clone(), policy);
    let state = run_live(&compiled, state, stim_rx, clock, |m| emit(&m));
    drop(out_tx);
    let _ = transport.join();
    Ok(state.status())
}

fn ndjson_writer(mut stream: TcpStream, out: Receiver<String>) {
    for line in out {
        if writeln!(stream, "{line}").and_then(|_| stream.flush()).is_err() {
            break;
        }
    }
    let _ = stream.shutdown(std::net::Shutdown::Both);
}

fn websocket_loop(mut ws: WebSocket<TcpStream>, out: Receiver<String>, stim: Sender<Stimulus>) {
    let _ = ws.get_ref().set_read_timeout(Some(Duration::from_millis(5)));
    loop {
        loop {
            match out.try_recv() {
                Ok(line) => {
                    if ws.send(Message::text(line)).is_err() {
                        return;
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    return;
                }
            }
        }
        match ws.read() {
            Ok(Message::Text(t)) => {
                if let Some(s) = parse_incoming(t.as_str()) {
                    let _ = stim.send(s);
                }
            }
            Ok(Message::Close(_)) => {
                let _ = stim.send(Stimulus::Stop);
                return;
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => {
                let _ = stim.send(Stimulus::Stop);
                return;
            }
        }
    }
}
