use std::io::Write;

use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ISCORE_LOG")).init();
    let outcome = iscore_cli::execute(iscore_cli::Cli::parse());
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(outcome.code);
}
