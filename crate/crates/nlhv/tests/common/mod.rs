#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub const MINIMAL: &str =
    r#"{"model":{"d":2,"n":3,"mu":1.0,"omega":1.0},"integrator":{"mode":"microcanonical","steps":10}}"#;

/// Runs the `nlhv` binary with `args`.
pub fn nlhv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlhv"))
        .args(args)
        .env_remove("NLHV_OUT_DIR")
        .output()
        .expect("binary runs")
}

pub fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}
