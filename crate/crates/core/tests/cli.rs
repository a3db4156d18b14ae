mod common;

use iot_taint::cli::main_with;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["iot-taint"];
    argv.extend_from_slice(args);
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

const CLEAN: &str = "def installed() {\n  subscribe(app, h)\n}\ndef h() {\n  sendPush(\"hello\")\n}\n";

#[test]
fn warning_free_app() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("clean.groovy");
    std::fs::write(&p, CLEAN).unwrap();
    let (code, out, _) = run(&[p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("0 warnings"), "{out}");
}

#[test]
fn missing_file_exits_2_naming_it() {
    let (code, _, err) = run(&["missing.groovy"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing.groovy"), "{err}");
}

#[test]
fn errors_do_not_stop_other_inputs() {
    let threshold = common::fixture_path("threshold.groovy");
    let (code, out, err) = run(&["--format", "json", "missing.groovy", &threshold]);
    assert_eq!(code, 2);
    assert!(err.contains("missing.groovy"));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
}

#[test]
fn parse_errors_name_file_and_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.groovy");
    std::fs::write(&p, "def f() {\n  x = §\n}\n").unwrap();
    let (code, _, err) = run(&[p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.groovy") && err.contains("2:"), "{err}");
}

#[test]
fn json_array_one_element_per_file() {
    let files: Vec<String> = ["threshold.groovy", "battery.groovy", "sample_apps.groovy"]
        .iter()
        .map(|f| common::fixture_path(f))
        .collect();
    let mut args = vec!["--implicit-flows", "--format", "json"];
    args.extend(files.iter().map(String::as_str));
    let (code, out, _) = run(&args);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let apps: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["app"].as_str().unwrap())
        .collect();
    let mut sorted = files.clone();
    sorted.sort();
    assert_eq!(apps, sorted);
}

#[test]
fn fail_on_warning() {
    let threshold = common::fixture_path("threshold.groovy");
    assert_eq!(run(&[&threshold]).0, 0);
    assert_eq!(run(&["--fail-on-warning", &threshold]).0, 1);
    let battery = common::fixture_path("battery.groovy");
    assert_eq!(run(&["--fail-on-warning", &battery]).0, 0);
    assert_eq!(run(&["--fail-on-warning", "--implicit-flows", &battery]).0, 1);
}

#[test]
fn jobs_do_not_change_output() {
    let files: Vec<String> = std::fs::read_dir(common::fixture_path(""))
        .unwrap()
        .map(|e| e.unwrap().path().display().to_string())
        .collect();
    let mut outputs = Vec::new();
    for jobs in ["1", "2", "8"] {
        let mut args = vec!["--implicit-flows", "--jobs", jobs];
        args.extend(files.iter().map(String::as_str));
        outputs.push(run(&args).1);
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn bad_flags() {
    assert_eq!(run(&["--jobs", "0", "a.groovy"]).0, 2);
    assert_eq!(run(&["--format", "xml", "a.groovy"]).0, 2);
    assert_eq!(run(&[]).0, 2);
}

#[test]
fn catalog_override() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().join("cat.tsv");
    std::fs::write(&cat, "sink\tsendPush\tInternet:-:0\n").unwrap();
    let app = dir.path().join("push.groovy");
    let src = "preferences {\n  section(\"s\") {\n    input \"door\", \"capability.contactSensor\"\n  }\n}\n\
               def installed() {\n  subscribe(door, \"contact\", h)\n}\n\
               def h(evt) {\n  sendPush(\"door is ${door.currentContact}\")\n}\n";
    std::fs::write(&app, src).unwrap();
    let kind = |args: &[&str]| {
        let (code, out, err) = run(args);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        v[0]["warnings"][0]["sink"]["kind"].as_str().unwrap().to_string()
    };
    let a = app.to_str().unwrap();
    assert_eq!(kind(&["--format", "json", a]), "Messaging");
    assert_eq!(
        kind(&["--format", "json", "--catalog", cat.to_str().unwrap(), a]),
        "Internet"
    );
    let bogus = dir.path().join("bogus.tsv");
    std::fs::write(&bogus, "source\tfoo\tBogus\n").unwrap();
    assert_eq!(run(&["--catalog", bogus.to_str().unwrap(), a]).0, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_iot-taint");
    let st = Command::new(bin).arg("missing.groovy").output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = Command::new(bin)
        .arg(common::fixture_path("battery.groovy"))
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&st.stdout).contains("0 warnings"));
}
