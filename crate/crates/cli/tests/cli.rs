use std::path::PathBuf;
use std::process::{Command, Output};

use blimp_cli::report::{check_text, evaluate, payload_text, perf_text};
use blimp_core::sim::csv::to_csv_string;
use blimp_core::sim::{run, Actuation};
use blimp_core::{max_performance, parse_design, DesignSpec, SimConfig, SimState};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.toml"))
}

fn design(name: &str) -> DesignSpec {
    parse_design(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

fn blimp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blimp")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const ALL: [&str; 9] = [
    "case1", "case2", "case2_31mm", "case2_65mm", "group3_oval", "group3_saucer", "prose", "reference", "single_motor",
];

#[test]
fn check_matches_the_library_and_sets_exit_codes() {
    for name in ALL {
        let path = fixture(name);
        let out = blimp(&["check", path.to_str().unwrap()]);
        let d = design(name);
        let eval = evaluate(&d).unwrap();
        assert_eq!(stdout(&out), check_text(&d, &eval.feasibility), "{name}");
        assert_eq!(out.status.code(), Some(if eval.passes() { 0 } else { 1 }), "{name}");

        let out = blimp(&["check", "--json", path.to_str().unwrap()]);
        let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(json, serde_json::to_value(&eval.feasibility).unwrap(), "{name}");
    }
    assert_eq!(blimp(&["check", fixture("case1").to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(blimp(&["check", fixture("single_motor").to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn perf_matches_the_library() {
    for name in ALL {
        let path = fixture(name);
        let d = design(name);
        let out = blimp(&["perf", path.to_str().unwrap()]);
        match max_performance(&d) {
            Ok(report) => {
                assert_eq!(out.status.code(), Some(0), "{name}");
                assert_eq!(stdout(&out), perf_text(&d, &report));
                let out = blimp(&["perf", "--json", path.to_str().unwrap()]);
                let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
                assert_eq!(json, serde_json::to_value(&report).unwrap(), "{name}");
            }
            Err(_) => {
                assert_eq!(out.status.code(), Some(1), "{name}");
                assert!(out.stdout.is_empty());
                assert!(!out.stderr.is_empty());
            }
        }
    }
}

#[test]
fn payload_matches_the_library() {
    let d = design("case1");
    let out = blimp(&["payload", fixture("case1").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), payload_text(&d, &evaluate(&d).unwrap().feasibility));
}

#[test]
fn heavy_payload_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("case1")).unwrap().replace("electronics_mass = 0.030", "electronics_mass = 0.500");
    let path = dir.path().join("heavy.toml");
    std::fs::write(&path, text).unwrap();
    let out = blimp(&["payload", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("payload: FAIL"));
    assert_eq!(blimp(&["check", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"x\"\n[balloon]\nshape = \"cube\"\n").unwrap();
    for cmd in ["check", "payload", "perf"] {
        let out = blimp(&[cmd, path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
    let missing = dir.path().join("missing.toml");
    assert_eq!(blimp(&["check", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sim_writes_the_library_trajectory() {
    let path = fixture("case1");
    let out = blimp(&["sim", path.to_str().unwrap(), "--duration", "2", "--duty", "1,0,0,1", "--dt", "0.01"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let d = design("case1");
    let actuation = Actuation { duties: vec![1.0, 0.0, 0.0, 1.0], deflections: vec![0.0; 4] };
    let config = SimConfig { dt: 0.01, ..SimConfig::default() };
    let expected = run(&d, SimState::default(), |_| actuation.clone(), 2.0, &config).unwrap();
    assert_eq!(stdout(&out), to_csv_string(&expected));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = blimp(&["sim", path.to_str().unwrap(), "--duration", "2", "--duty", "1,0,0,1", "--dt", "0.01", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(csv).unwrap(), to_csv_string(&expected));

    let out = blimp(&["sim", path.to_str().unwrap(), "--duration", "1", "--duty", "2,0,0,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn remap_parse_reports_structure_and_errors() {
    let out = blimp(&["remap-parse", "1F2U3U4BC4L1R"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for line in ["command = 1F2U3U4BC4L1R", "channel.1 = forward", "channel.4 = backward", "mode = dc", "yaw.left = 4", "yaw.right = 1"] {
        assert!(text.lines().any(|l| l == line), "missing {line:?} in\n{text}");
    }

    let out = blimp(&["remap-parse", "1F2B3U"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("position 7"), "{err}");
    let lines: Vec<&str> = err.lines().collect();
    let echo = lines.iter().position(|l| l.trim() == "1F2B3U").unwrap();
    // Position 7 is one past the last character.
    let start = lines[echo].find('1').unwrap();
    assert_eq!(lines[echo + 1].find('^'), Some(start + 6));
}
