//! Helpers for driving the `lowp` binary.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lowp_core::Tensor;

pub fn lowp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowp")).args(args).output().expect("spawn lowp")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn write_tensor(dir: &Path, name: &str, t: &Tensor) -> PathBuf {
    let path = dir.join(name);
    lowp::tensorfile::write_path(&path, t).unwrap();
    path
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// A validation failure the CLI must report with exit code 2, and a word
/// the one-line diagnostic must contain.
pub struct Rejection {
    pub args: Vec<String>,
    pub mentions: &'static str,
}

/// Every documented validation error, including each format invariant,
/// reached through the command line. Files are created in `dir`.
pub fn rejections(dir: &Path) -> Vec<Rejection> {
    let good = write_tensor(dir, "good.lpt", &Tensor::new(vec![2, 2], vec![0.5, -1.0, 2.0, 0.25]).unwrap());
    let bad_magic = write_text(dir, "bad.lpt", "LPT2\0\0\0\0");
    let mut truncated = std::fs::read(&good).unwrap();
    truncated.pop();
    let truncated_path = dir.join("short.lpt");
    std::fs::write(&truncated_path, truncated).unwrap();
    let out = dir.join("out.lpt").display().to_string();
    let (good, bad_magic, truncated_path) =
        (good.display().to_string(), bad_magic.display().to_string(), truncated_path.display().to_string());
    let missing = dir.join("missing.lpt").display().to_string();

    let quantize = |input: &str, format: &str, extra: &[&str]| {
        let mut v: Vec<String> =
            ["quantize", "--in", input, "--out", &out, "--format", format].iter().map(|s| s.to_string()).collect();
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    };
    let train_with = |name: &str, json: &str| {
        let p = write_text(dir, name, json);
        vec!["train".to_string(), "--epochs".into(), "1".into(), "--config".into(), p.display().to_string()]
    };
    let args = |a: &[&str]| a.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let r = |args: Vec<String>, mentions| Rejection { args, mentions };

    vec![
        r(quantize(&missing, "fixed:8:4", &[]), "missing.lpt"),
        r(quantize(&bad_magic, "fixed:8:4", &[]), "magic"),
        r(quantize(&truncated_path, "fixed:8:4", &[]), "short.lpt"),
        r(quantize(&good, "fixed:25:4", &[]), "wl"),
        r(quantize(&good, "fixed:1:0", &[]), "wl"),
        r(quantize(&good, "fixed:8:127", &[]), "fl"),
        r(quantize(&good, "fixed:8:-121", &[]), "fl"),
        r(quantize(&good, "fixed:8:x", &[]), "fl"),
        r(quantize(&good, "fixed:8:4:wrap:wrap", &[]), "format"),
        r(quantize(&good, "float:0:2", &[]), "exp"),
        r(quantize(&good, "float:9:2", &[]), "exp"),
        r(quantize(&good, "float:5:24", &[]), "man"),
        r(quantize(&good, "block:1", &[]), "wl"),
        r(quantize(&good, "block:25", &[]), "wl"),
        r(quantize(&good, "block:8:2", &[]), "dim"),
        r(quantize(&good, "block:8:x", &[]), "dim"),
        r(quantize(&good, "posit:8", &[]), "format"),
        r(quantize(&good, "fixed:8", &[]), "format"),
        r(quantize(&good, "fixed:8:4", &["--rounding", "up"]), "rounding"),
        r(quantize(&good, "fixed:8:4", &["--threads", "0"]), "threads"),
        r(args(&["enumerate", "--format", "float:8:23"]), "cap"),
        r(args(&["enumerate", "--format", "block:8"]), "block-exponent"),
        r(args(&["enumerate", "--format", "fixed:8:4", "--block-exponent", "1"]), "block-exponent"),
        r(train_with("wl.json", r#"{"weight": {"kind": "fixed", "wl": 30, "fl": 4}}"#), "wl"),
        r(train_with("unknown.json", r#"{"weights": {"kind": "fixed", "wl": 8, "fl": 4}}"#), "weights"),
        r(train_with("field.json", r#"{"error": {"kind": "block", "wl": 8, "fl": 4}}"#), "error.fl"),
        r(train_with("kind.json", r#"{"error": {"kind": "posit"}}"#), "error.kind"),
        r(train_with("exp.json", r#"{"gradient": {"kind": "float", "exp": 9, "man": 2}}"#), "gradient.exp"),
        r(train_with("man.json", r#"{"gradient": {"kind": "float", "exp": 5, "man": 30}}"#), "gradient.man"),
        r(train_with("fl.json", r#"{"activation": {"kind": "fixed", "wl": 8, "fl": 300}}"#), "activation.fl"),
        r(train_with("block.json", r#"{"weight": {"kind": "block", "wl": 8, "block": "rows"}}"#), "weight.block"),
        r(train_with("rounding.json", r#"{"weight": {"kind": "block", "wl": 8, "rounding": "up"}}"#), "weight.rounding"),
        r(train_with("syntax.json", "{"), "config"),
        r(args(&["train", "--config", &missing]), "missing.lpt"),
        r(args(&["train", "--lr", "-1"]), "lr"),
        r(args(&["train", "--momentum", "1.5"]), "momentum"),
        r(args(&["train", "--batch-size", "0"]), "batch-size"),
        r(args(&["bench", "--formats", "float", "--impl", "composed", "--sizes", "1024"]), "floating point"),
        r(args(&["bench", "--impl", "neither", "--sizes", "1024"]), "impl"),
        r(args(&["bench", "--sizes", "1024", "--repeats", "4"]), "repeats"),
        r(args(&["bench", "--sizes", "1024", "--warmup", "0"]), "warmup"),
        r(args(&["bench", "--sizes", "0"]), "elements"),
        r(args(&["frobnicate"]), "frobnicate"),
    ]
}

/// Runs one rejection; `Err` describes how the CLI fell short.
pub fn check_rejection(r: &Rejection) -> Result<(), String> {
    let args: Vec<&str> = r.args.iter().map(String::as_str).collect();
    let o = lowp(&args);
    let err = stderr(&o);
    if o.status.code() != Some(2) {
        return Err(format!("{:?}: exit {:?}, stderr {err:?}", r.args, o.status.code()));
    }
    if err.trim_end().lines().count() != 1 {
        return Err(format!("{:?}: diagnostic is not one line: {err:?}", r.args));
    }
    if !err.contains(r.mentions) {
        return Err(format!("{:?}: diagnostic {err:?} does not mention `{}`", r.args, r.mentions));
    }
    Ok(())
}
