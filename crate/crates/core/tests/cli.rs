use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_filterbound"))
}

fn network(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("networks").join(name)
}

fn scratch(name: &str, src: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("filterbound-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, src).unwrap();
    p
}

fn run(args: &[&str], file: &PathBuf) -> Output {
    bin().arg("analyze").arg(file).args(args).output().unwrap()
}

#[test]
fn bounded_network_exits_zero() {
    let out = run(&["--strict"], &network("filter1.flt"));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("10 - 15z + 7z^2"), "{text}");
}

#[test]
fn json_report_is_byte_identical() {
    let a = run(&["--report", "json"], &network("filter2.flt"));
    let b = run(&["--report", "json"], &network("filter2.flt"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let bound = &v["outputs"][0]["bound"];
    assert!(bound["hex"].as_str().unwrap().starts_with("0x1.1"), "{bound}");
}

#[test]
fn parse_errors_exit_three_with_position() {
    let p = scratch("bad.flt", "input u;\noutput x;\nx = u + 1/2 x;\n");
    let out = run(&[], &p);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":3:") && err.contains("non-causal"), "{err}");
}

#[test]
fn unstable_network_exits_two_under_strict() {
    let p = scratch("unstable.flt", "input u <= 1;\noutput y;\ny = u + 2 delay(y, 1);\n");
    assert_eq!(run(&[], &p).status.code(), Some(0));
    let out = run(&["--strict", "--report", "json"], &p);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bounded"], false);
    assert_eq!(v["stability"], "unstable");
    assert_eq!(v["outputs"][0]["bound"]["hex"], "inf");
}

#[test]
fn check_passes_and_lowered_bound_fails() {
    let f = network("tf2.flt");
    let ok = run(&["--check", "--steps", "500", "--seed", "4"], &f);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8(ok.stdout).unwrap().contains("0 violation(s)"));
    let bad = run(&["--check", "--steps", "500", "--seed", "4", "--bound-scale", "0.5"], &f);
    assert_eq!(bad.status.code(), Some(4));
    let err = String::from_utf8(bad.stderr).unwrap();
    assert!(err.contains("violation") && err.contains("inputs"), "{err}");
}

#[test]
fn format_option_and_usage_errors() {
    let f = network("filter1.flt");
    let out = run(&["--format", "fixed:2^-8:rne", "--report", "json"], &f);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["format"], "fixed:0.00390625:rne");
    assert_eq!(run(&["--format", "ieee16"], &f).status.code(), Some(1));
}
