use std::process::{Command, Output};

use serde_json::Value;

fn cga(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cga"))
        .args(args)
        .env_remove("CGA_REPORT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a json report")
}

/// Every record and row of a report, checked against the exit status.
fn failures(doc: &Value) -> usize {
    let mut n = 0;
    for s in doc["sections"].as_array().unwrap() {
        n += s["errors"].as_array().unwrap().len();
        for r in s["records"].as_array().unwrap() {
            if matches!(r["status"].as_str().unwrap(), "mismatch" | "failed") {
                n += 1;
            }
        }
        for r in s["spectrum"].as_array().unwrap() {
            if !r["verified"].as_bool().unwrap() {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn verify_osc_passes() {
    let out = cga(&["verify", "--family", "osc-l1", "--gamma", "2", "--xi", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["schema"], "cga-report");
    assert_eq!(doc["command"], "verify");
    assert_eq!(doc["passed"], true);
    assert_eq!(failures(&doc), 0);
    let table = &doc["sections"][0];
    assert_eq!(table["params"]["gamma"], "2");
    assert_eq!(table["records"].as_array().unwrap().len(), 66);
}

#[test]
fn uncalibrated_free_reports_the_shift() {
    let out = cga(&["verify", "--family", "free-l1", "--calibrate", "false"]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_eq!(failures(&doc), 1);
    let bad: Vec<&Value> = doc["sections"][0]["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["status"] == "failed" || r["status"] == "mismatch")
        .collect();
    assert_eq!(bad[0]["lhs"], "[z+, z-]");
    assert_eq!(bad[0]["residual-text"], "-4");

    let out = cga(&["verify", "--family", "free-l1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["sections"][0]["calibration"]["z0"], "-2");
}

#[test]
fn oscillator_multiplicities() {
    let out = cga(&["spectrum", "--l", "1", "--emax", "6", "--k", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let table = doc["sections"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| !s["spectrum"].as_array().unwrap().is_empty())
        .unwrap();
    for e in 0..=6u64 {
        assert_eq!(table["multiplicities"][e.to_string()], e + 1, "level {e}");
    }
    assert!(table["multiplicities"].get("7").is_none());
    for row in table["spectrum"].as_array().unwrap() {
        assert_eq!(row["verified"], true);
        assert_eq!(row["level"], row["eigenvalue"]);
    }
}

#[test]
fn rigidity_probe_names_failures() {
    let out = cga(&["onshell", "--family", "free-l1", "--omega", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for g in ["z+", "z-", "v-1", "w+1", "w0", "w-1", "q"] {
        assert!(stderr.contains(&format!("[{g}, Omega")), "{g} missing from {stderr}");
    }
    let doc = json(&out);
    assert_eq!(doc["passed"], false);
    assert_eq!(failures(&doc), 7);

    let out = cga(&["onshell", "--family", "osc-l1", "--omega", "1"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        &["verify", "--gamma", "1/0"][..],
        &["verify", "--xi", "0"],
        &["verify", "--gamma", "0.5"],
        &["verify", "--family", "nope"],
        &["verify", "--family", "xi0(1,0,2)"],
        &["spectrum", "--family", "free-l1"],
        &["infinite", "--family", "osc-l1"],
        &["onshell", "--family", "ladder(2)", "--omega", "2"],
        &["frobnicate"],
        &["verify", "--format", "yaml"],
    ] {
        let out = cga(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn deterministic_output() {
    for args in [
        &["similarity"][..],
        &["infinite", "--family", "xi0(2,3,1)", "--format", "markdown"],
        &["spectrum", "--family", "ladder(2)", "--emax", "3"],
    ] {
        let a = cga(args);
        let b = cga(args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn exit_status_matches_report() {
    for args in [
        &["verify", "--family", "free-general(2)"][..],
        &["verify", "--family", "free-general(2)", "--calibrate", "false"],
        &["verify", "--family", "ladder(2)"],
        &["verify", "--family", "xi0(1,1,1)", "--calibrate", "false"],
        &["onshell", "--family", "xi0(1,2,1)"],
        &["spectrum", "--family", "xi0(1,2,0)", "--emax", "2"],
        &["similarity"],
    ] {
        let out = cga(args);
        let doc = json(&out);
        let clean = failures(&doc) == 0;
        assert_eq!(doc["passed"].as_bool().unwrap(), clean, "{args:?}");
        assert_eq!(out.status.code(), Some(if clean { 0 } else { 1 }), "{args:?}");
    }
}

#[test]
fn report_directory_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cga"))
        .args(["similarity", "--format", "markdown"])
        .env("CGA_REPORT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let md = std::fs::read_to_string(dir.path().join("similarity.md")).unwrap();
    assert!(md.starts_with("# similarity report: passed"));

    let target = dir.path().join("nested").join("r.json");
    let out = cga(&["verify", "--family", "osc-l1", "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(doc["passed"], true);
    let leftovers = std::fs::read_dir(target.parent().unwrap()).unwrap().count();
    assert_eq!(leftovers, 1);
}
