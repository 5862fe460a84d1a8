use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_propinfer"));
    c.env("RUST_LOG", "error");
    c
}

fn smoke_conf() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.conf")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn with_line(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("cfg.conf");
    fs::write(&path, format!("{}\n{extra}\n", fs::read_to_string(smoke_conf()).unwrap())).unwrap();
    path
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", smoke_conf().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.csv", "report.txt", "result.json", "timing.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let rebuilt = dir.path().join("again");
    let o = run(&["report", out.join("result.json").to_str().unwrap(), "--out", rebuilt.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(out.join("report.csv")).unwrap(), fs::read(rebuilt.join("report.csv")).unwrap());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", with_line(dir.path(), "bogus = 1").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    let o = run(&["sweep", smoke_conf().to_str().unwrap(), "--axis", "colour", "--values", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn too_many_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", with_line(dir.path(), "target.lr = 1e300").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unreadable_config_is_a_config_error() {
    let o = run(&["run", "/nonexistent/x.conf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_serve_and_attack_remote() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("target.json");
    let conf = smoke_conf();
    let o = run(&["train-target", conf.to_str().unwrap(), "--ratio", "0.67", "--out", model.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut server = bin().args(["serve", "--model", model.to_str().unwrap(), "--listen", "127.0.0.1:0"]).stdout(Stdio::piped()).spawn().unwrap();
    let mut line = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("serving on ").unwrap().to_string();
    let o = run(&["attack-remote", conf.to_str().unwrap(), "--endpoint", &addr]);
    server.kill().unwrap();
    server.wait().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("predicted "), "{text}");
}
