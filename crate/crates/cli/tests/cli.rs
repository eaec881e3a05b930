use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

fn trailer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trailer"))
        .args(args)
        .env_remove("TRAILER_SERVER")
        .output()
        .expect("spawn trailer")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "stdout:\n{}\nstderr:\n{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn line_value<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{out}"))
        .trim()
}

fn synth(dir: &Path) -> String {
    let out = ok(trailer(&["synth", dir.to_str().unwrap()]));
    line_value(&out, "config:").to_string()
}

#[test]
fn synth_then_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());
    let out = ok(trailer(&["run", "--config", &cfg, "--seed", "5"]));
    let video = line_value(&out, "trailer:");
    assert!(Path::new(video).exists());
    assert!(Path::new(line_value(&out, "log:")).exists());
    assert!(Path::new(line_value(&out, "report:")).exists());
}

#[test]
fn stage_before_prep_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());
    let o = trailer(&["stage", "visual", "--config", &cfg]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("prep"), "{err}");

    let o = trailer(&["stage", "nonsense", "--config", &cfg]);
    assert!(!o.status.success());
}

#[test]
fn record_then_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());
    let fx = tmp.path().join("fixtures");
    let fx = fx.to_str().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");

    let o = trailer(&["run", "--config", &cfg, "--fixtures", fx, "--out", out_a.to_str().unwrap()]);
    assert!(!o.status.success(), "replay from an empty fixture dir must fail");

    let a = ok(trailer(&["run", "--config", &cfg, "--fixtures", fx, "--record", "--out", out_a.to_str().unwrap()]));
    let b = ok(trailer(&["run", "--config", &cfg, "--fixtures", fx, "--out", out_b.to_str().unwrap()]));
    let log_a = std::fs::read(line_value(&a, "log:")).unwrap();
    let log_b = std::fs::read(line_value(&b, "log:")).unwrap();
    assert_eq!(log_a, log_b);
}

#[test]
fn survey_table_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("ratings.csv");
    std::fs::write(
        &csv,
        "participant,movie,method,appropriateness,attractiveness,interest\n\
         p1,m,ours,3,3,2\np1,m,base,1,2,2\np2,m,ours,2,2,2\n",
    )
    .unwrap();
    let out = ok(trailer(&["survey", csv.to_str().unwrap()]));
    let ours = out.lines().find(|l| l.starts_with("ours\t")).unwrap();
    let cols: Vec<&str> = ours.split('\t').collect();
    assert_eq!(cols[1], "2");
    assert_eq!(cols[2], "7.000");

    let json = ok(trailer(&["survey", "--json", csv.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["by_method"]["base"]["mean"]["total"], 5.0);

    let o = trailer(&["survey", tmp.path().join("missing.csv").to_str().unwrap()]);
    assert!(!o.status.success());
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_server() -> (Server, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_trailer"))
        .args(["serve", "--addr", "127.0.0.1:0", "--scripted"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("listening line").to_string();
    (Server(child), format!("http://{addr}"))
}

#[test]
fn run_through_a_server() {
    let (_server, url) = start_server();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());

    let out = ok(trailer(&["--server", &url, "stage", "prep", "--config", &cfg]));
    assert!(out.contains("stage prep done"), "{out}");
    let out = ok(trailer(&["--server", &url, "run", "--config", &cfg]));
    assert!(Path::new(line_value(&out, "trailer:")).exists());

    let csv = tmp.path().join("r.csv");
    std::fs::write(&csv, "participant,movie,method,appropriateness,attractiveness,interest\np,m,x,1,1,1\n").unwrap();
    let out = ok(trailer(&["--server", &url, "survey", csv.to_str().unwrap()]));
    assert!(out.contains("x\t1\t3.000"), "{out}");

    let o = trailer(&["--server", &url, "run", "--config", tmp.path().join("nope.toml").to_str().unwrap()]);
    assert!(!o.status.success());
}
