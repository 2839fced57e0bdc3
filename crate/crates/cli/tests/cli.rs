//! End-to-end tests of the binary: exit codes, field-file round trips,
//! determinism, config-file merging and report shape.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pjn")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pjn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn pjn")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout not JSON: {e}\n{}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn gen_field(path: &Path, seed: u64) {
    let out = run(&[
        "gen",
        "--preset",
        "random-cells",
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
}

#[test]
fn gen_is_byte_deterministic() {
    let a = tmp("det-a.pjnf");
    let b = tmp("det-b.pjnf");
    gen_field(&a, 11);
    gen_field(&b, 11);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = tmp("det-c.pjnf");
    gen_field(&c, 12);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn reports_are_deterministic_modulo_timing() {
    let f = tmp("norm.pjnf");
    gen_field(&f, 5);
    let args = ["norm", "--field", f.to_str().unwrap(), "--q", "2", "--r", "1"];
    let mut a = stdout_json(&run(&args));
    let mut b = stdout_json(&run(&args));
    a.as_object_mut().unwrap().remove("timing_ms");
    b.as_object_mut().unwrap().remove("timing_ms");
    assert_eq!(a, b);
}

#[test]
fn exit_codes_follow_the_contract() {
    // usage error: missing required flag
    let out = run(&["osc"]);
    assert_eq!(out.status.code(), Some(2));
    // usage error: parameter out of range
    let f = tmp("codes.pjnf");
    gen_field(&f, 1);
    let out = run(&["norm", "--field", f.to_str().unwrap(), "--q", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    // I/O error: malformed header, and no partial report on stdout
    let broken = tmp("broken.pjnf");
    std::fs::write(&broken, b"{bad json\nxxxx").unwrap();
    let out = run(&["osc", "--field", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    // I/O error: missing file
    let out = run(&["osc", "--field", "/nonexistent/never.pjnf"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn report_matches_schema_shape() {
    let f = tmp("schema.pjnf");
    gen_field(&f, 2);
    let report = stdout_json(&run(&["norm", "--field", f.to_str().unwrap()]));
    let schema_text = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json"),
    )
    .unwrap();
    let schema: serde_json::Value = serde_json::from_str(&schema_text).unwrap();

    // Required top-level keys and the declared key set.
    let required: Vec<&str> = schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let obj = report.as_object().unwrap();
    for key in &required {
        assert!(obj.contains_key(*key), "missing key {key}");
    }
    let declared = schema["properties"].as_object().unwrap();
    for key in obj.keys() {
        assert!(declared.contains_key(key), "undeclared key {key}");
    }
    // Check entries carry the declared fields.
    let check_props = schema["properties"]["checks"]["items"]["properties"]
        .as_object()
        .unwrap();
    for check in report["checks"].as_array().unwrap() {
        for key in check.as_object().unwrap().keys() {
            assert!(check_props.contains_key(key), "undeclared check key {key}");
        }
    }
    assert_eq!(report["result"]["certified"], "lower_bound");
}

#[test]
fn field_files_round_trip_through_osc() {
    let f = tmp("roundtrip.pjnf");
    gen_field(&f, 9);
    let report = stdout_json(&run(&[
        "osc",
        "--field",
        f.to_str().unwrap(),
        "--edge",
        "1.0",
        "--c",
        "0.0",
    ]));
    assert_eq!(report["command"], "osc");
    assert!(report["result"]["value"].as_f64().unwrap() >= 0.0);
    assert!(report["result"]["oscillation_at_c"].as_f64().unwrap() >= 0.0);
}

#[test]
fn config_file_fills_defaults_and_flags_win() {
    let f = tmp("config.pjnf");
    gen_field(&f, 3);
    let cfg = tmp("config.json");
    std::fs::write(&cfg, r#"{"gamma": 0.3, "r": 1.0, "q": 4.0}"#).unwrap();
    let from_file = stdout_json(&run(&[
        "norm",
        "--field",
        f.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]));
    assert_eq!(from_file["config_echo"]["gamma"], 0.3);
    assert_eq!(from_file["config_echo"]["q"], 4.0);
    let flag_wins = stdout_json(&run(&[
        "norm",
        "--field",
        f.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--q",
        "2.0",
    ]));
    assert_eq!(flag_wins["config_echo"]["q"], 2.0);
    // unknown keys are rejected
    let bad = tmp("bad-config.json");
    std::fs::write(&bad, r#"{"qq": 1}"#).unwrap();
    let out = run(&[
        "norm",
        "--field",
        f.to_str().unwrap(),
        "--config",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn constants_command_reports_reference_values() {
    let report = stdout_json(&run(&[
        "constants", "--n", "1", "--p", "2", "--q", "2", "--r", "1", "--gamma", "0", "--alpha",
        "0.5",
    ]));
    let c1 = report["result"]["c1"]["value"].as_f64().unwrap();
    assert!((c1 - 45.0).abs() < 1e-9);
    let c2 = report["result"]["c2"]["value"].as_f64().unwrap();
    assert!((c2 - 90000.0).abs() < 1e-3);
    assert_eq!(report["result"]["m"], 1);
}

#[test]
fn cz_and_chain_emit_exact_verdicts() {
    let f = tmp("czchain.pjnf");
    gen_field(&f, 4);
    let cz = stdout_json(&run(&[
        "cz",
        "--field",
        f.to_str().unwrap(),
        "--lambda",
        "0.05",
        "--max-depth",
        "2",
    ]));
    assert!(!cz["checks"].as_array().unwrap().is_empty());
    assert!(cz["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["verdict"] == "pass"));
    let chain = stdout_json(&run(&[
        "chain",
        "--field",
        f.to_str().unwrap(),
        "--samples",
        "2",
        "--emit-links",
        "4",
    ]));
    let chains = chain["result"]["chains"].as_array().unwrap();
    assert!(!chains.is_empty());
    for c in chains {
        assert_eq!(c["verdict"], true);
        assert!(c["rects"].as_array().unwrap().len() <= 4);
    }
}

#[test]
fn sharp_writes_a_loadable_field() {
    let f = tmp("sharp-in.pjnf");
    gen_field(&f, 6);
    let out_path = tmp("sharp-out.pjnf");
    let report = stdout_json(&run(&[
        "sharp",
        "--field",
        f.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]));
    assert!(report["result"]["max_sharp"].as_f64().unwrap() >= 0.0);
    // the produced file parses as a field again
    let reread = stdout_json(&run(&["osc", "--field", out_path.to_str().unwrap(), "--edge", "0.5"]));
    assert_eq!(reread["command"], "osc");
}

#[test]
fn verify_all_passes_on_monotone_field() {
    let f = tmp("mono.pjnf");
    let out = run(&[
        "gen",
        "--preset",
        "time-step",
        "--jump",
        "4",
        "--out",
        f.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&["verify", "--field", f.to_str().unwrap(), "--samples", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["verdict"] == "pass"));
}
