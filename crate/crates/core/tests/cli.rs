use std::process::Command;

use serde_json::{json, Value};

fn ucoh(args: &[&str], manifest: Option<&Value>) -> (i32, String) {
    let dir = std::env::temp_dir().join(format!("ucoh-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ucoh"));
    cmd.args(args);
    if let Some(m) = manifest {
        let path = dir.join(format!("{}.json", args[0]));
        std::fs::write(&path, m.to_string()).unwrap();
        cmd.arg("--manifest").arg(path);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn consv_exclusion() {
    let (code, out) = ucoh(&["consv"], Some(&json!({"interaction": "exclusion"})));
    assert_eq!(code, 0);
    assert_eq!(parse(&out), json!({"c_phi": 1, "basis": [["0", "1"]]}));
}

#[test]
fn counterexample_reports_asymmetry() {
    let (code, out) = ucoh(&["counterexample"], None);
    assert_eq!(code, 0);
    let r = parse(&out);
    assert_eq!(r["report"]["closed"], json!(true));
    assert_eq!(r["report"]["symmetric"], json!(false));
    assert_eq!(r["report"]["splitting_feasible"], json!(false));
    assert_eq!(r["report"]["asymmetry"], json!(["1", "0"]));
}

#[test]
fn malformed_manifests_exit_2() {
    let dir = std::env::temp_dir().join(format!("ucoh-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"interaction\": ").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_ucoh")).args(["consv", "--manifest"]).arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));
    assert_eq!(ucoh(&["consv"], Some(&json!({"interaction": "exclusion", "budget": 0}))).0, 2);
    assert_eq!(ucoh(&["frobnicate"], None).0, 2);
    assert_eq!(ucoh(&["closed"], Some(&json!({"interaction": "exclusion"}))).0, 2);
}

#[test]
fn budget_override_is_enforced() {
    let m = json!({
        "locale": {"kind": "euclidean", "d": 1},
        "interaction": "exclusion",
        "window": {"box": {"lo": [0], "hi": [11]}},
    });
    assert_eq!(ucoh(&["irreducible"], Some(&m)).0, 0);
    let (code, out) = ucoh(&["irreducible", "--budget", "100"], Some(&m));
    assert_eq!(code, 2);
    assert!(parse(&out)["error"].as_str().unwrap().contains("budget"));
}

#[test]
fn property_violations_exit_1() {
    let m = json!({
        "locale": {"kind": "euclidean", "d": 1},
        "interaction": "pair-creation",
        "window": {"box": {"lo": [0], "hi": [1]}},
    });
    let (code, out) = ucoh(&["irreducible"], Some(&m));
    assert_eq!(code, 1);
    assert!(parse(&out)["report"]["witness"].is_array());
    let table = json!({"table": {"cells": [
        {"a": [1, 0], "b": [0, 1], "v": "1"},
        {"a": [0, 1], "b": [1, 0], "v": "0"},
        {"a": [0, 0], "b": [0, 0], "v": "0"},
        {"a": [1, 0], "b": [0, 0], "v": "0"},
        {"a": [0, 0], "b": [1, 0], "v": "0"},
        {"a": [0, 1], "b": [0, 0], "v": "0"},
        {"a": [0, 0], "b": [0, 1], "v": "0"}
    ]}});
    let (code, out) = ucoh(&["split"], Some(&table));
    assert_eq!(code, 1);
    assert_eq!(parse(&out)["splitting"]["feasible"], json!(false));
}

#[test]
fn reports_are_deterministic_and_embed_plans() {
    let m = json!({
        "locale": {"kind": "euclidean", "d": 1},
        "interaction": "exclusion",
        "window": {"box": {"lo": [0], "hi": [8]}},
        "cocycle": {"a": [["2/3"]]},
    });
    let (code, omega) = ucoh(&["omega-rho", "--seed", "5"], Some(&m));
    assert_eq!(code, 0);
    let form = parse(&omega)["form"].clone();
    let dm = json!({
        "locale": {"kind": "euclidean", "d": 1},
        "interaction": "exclusion",
        "window": {"box": {"lo": [0], "hi": [8]}},
        "form": form,
    });
    let (c1, a) = ucoh(&["decompose", "--seed", "5"], Some(&dm));
    let (c2, b) = ucoh(&["decompose", "--seed", "5"], Some(&dm));
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let r = parse(&a);
    assert_eq!(r["rho"]["a"], json!([["2/3"]]));
    assert_eq!(r["residual"], json!("0"));
    assert!(r["margin"].is_u64() && r["plan"]["pairs"].is_array());
    let (code, d) = ucoh(&["delta"], Some(&dm));
    assert_eq!(code, 0);
    assert_eq!(parse(&d)["cocycle"]["a"], json!([["2/3"]]));
    assert!(parse(&d)["margin"].is_u64());
}

#[test]
fn out_flag_writes_report() {
    let path = std::env::temp_dir().join(format!("ucoh-out-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let (code, stdout) = ucoh(&["transfer", "--out", p], Some(&json!({"locale": {"kind": "free-group", "rank": 2}})));
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let r = parse(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(r["report"]["verdict"], json!("transferable"));
}

#[test]
fn function_commands() {
    let base = json!({
        "locale": {"kind": "euclidean", "d": 1},
        "interaction": "exclusion",
        "window": {"box": {"lo": [0], "hi": [3]}},
        "function": {"support": [[0], [2]], "values": ["0", "1", "2", "5"]},
    });
    let (code, out) = ucoh(&["expand"], Some(&base));
    assert_eq!(code, 0);
    let r = parse(&out);
    assert_eq!(r["recursion_matches_mobius"], json!(true));
    assert_eq!(r["uniformity"]["max_diameter"], json!(2));
    let (code, out) = ucoh(&["diff"], Some(&base));
    assert_eq!(code, 0);
    let mut m = base.clone();
    m["form"] = parse(&out)["form"].clone();
    m.as_object_mut().unwrap().remove("function");
    let (code, out) = ucoh(&["closed"], Some(&m));
    assert_eq!(code, 0);
    assert_eq!(parse(&out)["closed"], json!(true));
    let (code, out) = ucoh(&["integrate"], Some(&m));
    assert_eq!(code, 0);
    assert_eq!(parse(&out)["pins"].as_array().unwrap().len(), 5);
}

#[test]
fn validate_and_h0() {
    let (code, out) = ucoh(&["validate"], Some(&json!({"interaction": "glauber"})));
    assert_eq!(code, 0);
    let r = parse(&out);
    assert_eq!(r["validity"]["strict"], json!(false));
    assert_eq!(r["validity"]["relaxed"], json!(true));
    let custom = json!({"interaction": {"states": [0, 1], "base": 0, "map": [[0, 0, 1, 0], [1, 0, 1, 0]]}});
    assert_eq!(ucoh(&["validate"], Some(&custom)).0, 1);
    let m = json!({
        "locale": {"kind": "euclidean", "d": 1},
        "interaction": "exclusion",
        "window": {"box": {"lo": [0], "hi": [2]}},
    });
    let (code, out) = ucoh(&["h0"], Some(&m));
    assert_eq!(code, 0);
    assert_eq!(parse(&out)["report"]["components"], json!(4));
}
