#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn sonobio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sonobio"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Renders the default phantom into `dir` and returns the exit code.
pub fn phantom(dir: &Path, seed: u64, extra: &[&str]) -> i32 {
    let seed = seed.to_string();
    let mut args = vec!["phantom", "--quiet", "--out", p(dir), "--seed", &seed];
    args.extend_from_slice(extra);
    code(&sonobio(&args))
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("output exists")).expect("valid json")
}

/// Report text with the wall-clock field zeroed.
pub fn report_without_timing(path: &Path) -> String {
    let mut v = read_json(path);
    v["timing_ms"] = serde_json::json!(0.0);
    serde_json::to_string_pretty(&v).unwrap()
}

/// Every file in `dir` as (name, bytes), sorted by name.
pub fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}
