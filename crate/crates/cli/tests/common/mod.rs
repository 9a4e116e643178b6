//! Golden cases for the `iscore` binary, shared by the golden test and the
//! acceptance runner.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub code: i32,
}

/// `{scores}` and `{data}` expand to the sample score and test data directories.
pub const CASES: &[Case] = &[
    Case { name: "check_seq2.json", args: &["check", "{scores}/seq2.json"], code: 0 },
    Case { name: "check_lights.json", args: &["check", "{scores}/lights.json"], code: 0 },
    Case { name: "check_scene.json", args: &["check", "{scores}/scene.json"], code: 0 },
    Case { name: "check_subset_sum_2.json", args: &["check", "{data}/subset_sum_2.json"], code: 1 },
    Case { name: "check_subset_sum_8.json", args: &["check", "{data}/subset_sum_8.json"], code: 0 },
    Case {
        name: "analyze_lights.json",
        args: &[
            "analyze",
            "{scores}/lights.json",
            "--horizon",
            "10",
            "--word",
            "red.on,sound.play",
            "--mode",
            "consecutive",
        ],
        code: 0,
    },
    Case {
        name: "analyze_scene.json",
        args: &[
            "analyze",
            "{scores}/scene.json",
            "--horizon",
            "12",
            "--word",
            "loop.stop,intro.out",
            "--quantifier",
            "all",
        ],
        code: 0,
    },
    Case { name: "analyze_subset_sum_2.json", args: &["analyze", "{data}/subset_sum_2.json"], code: 1 },
    Case {
        name: "encode_seq2_normal.json",
        args: &["encode", "{scores}/seq2.json", "--form", "normal", "--format", "json"],
        code: 0,
    },
    Case {
        name: "encode_overlaps_raw.json",
        args: &["encode", "{scores}/overlaps.json", "--form", "raw", "--format", "json"],
        code: 0,
    },
    Case {
        name: "encode_lights_raw.dot",
        args: &["encode", "{scores}/lights.json", "--form", "raw", "--format", "dot"],
        code: 0,
    },
    Case {
        name: "encode_lights_normal.dot",
        args: &["encode", "{scores}/lights.json", "--form", "normal", "--format", "dot"],
        code: 0,
    },
    Case {
        name: "encode_lights_dispatchable.json",
        args: &["encode", "{scores}/lights.json", "--form", "dispatchable", "--format", "json"],
        code: 0,
    },
    Case {
        name: "encode_seq2_dispatchable.dot",
        args: &["encode", "{scores}/seq2.json", "--form", "dispatchable", "--format", "dot"],
        code: 0,
    },
    Case {
        name: "encode_scene_dispatchable.stderr",
        args: &["encode", "{scores}/scene.json", "--form", "dispatchable"],
        code: 2,
    },
    Case {
        name: "gen_subset_sum_3_5_7_8.json",
        args: &["gen", "subset-sum", "--set", "3,5,7", "--target", "8"],
        code: 0,
    },
    Case {
        name: "run_lights_autofire.ndjson",
        args: &["run", "{scores}/lights.json", "--simulate", "--triggers", "{data}/lights_triggers.json"],
        code: 0,
    },
    Case {
        name: "run_lights_cancel.ndjson",
        args: &["run", "{scores}/lights.json", "--triggers", "{data}/lights_late.json", "--policy", "cancel"],
        code: 1,
    },
    Case { name: "check_missing.stderr", args: &["check", "{data}/missing.json"], code: 2 },
    Case { name: "check_inverted.stderr", args: &["check", "{data}/inverted.json"], code: 2 },
    Case { name: "check_invalid.stderr", args: &["check", "{data}/invalid.json"], code: 2 },
];

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn golden_dir() -> PathBuf {
    manifest_dir().join("tests/golden")
}

fn expand(arg: &str) -> String {
    let root = manifest_dir();
    arg.replace("{scores}", root.join("../../scores").to_str().unwrap())
        .replace("{data}", root.join("tests/data").to_str().unwrap())
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_bin(bin: &Path, args: &[&str]) -> Output {
    let out = Command::new(bin)
        .args(args.iter().map(|a| expand(a)))
        .current_dir(manifest_dir())
        .env_remove("ISCORE_LOG")
        .output()
        .expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// Golden text of a case: stdout, or stderr for `.stderr` cases. Absolute
/// paths are replaced so the files do not depend on the checkout location.
pub fn golden_text(case: &Case, out: &Output) -> String {
    let text = if case.name.ends_with(".stderr") { &out.stderr } else { &out.stdout };
    text.replace(manifest_dir().join("tests/data").to_str().unwrap(), "<data>")
}

/// Runs one case twice and compares with its golden file. With
/// `UPDATE_GOLDEN=1` the golden file is rewritten instead.
pub fn check_case(bin: &Path, case: &Case) -> Result<(), String> {
    let first = run_bin(bin, case.args);
    let second = run_bin(bin, case.args);
    if first.code != case.code {
        return Err(format!("{}: exit {} (expected {}), stderr {}", case.name, first.code, case.code, first.stderr));
    }
    let (a, b) = (golden_text(case, &first), golden_text(case, &second));
    if a != b {
        return Err(format!("{}: output differs between two runs", case.name));
    }
    let path = golden_dir().join(case.name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &a).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if a != expected {
        return Err(format!("{}: output differs from golden file", case.name));
    }
    Ok(())
}
