use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nsp_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsp-lab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn nsc_on_inline_generators() {
    let v = json(&nsp_lab(&["nsc", "--generators", "1,2,4", "--measure", "l1", "--k", "1"]));
    assert!((v["result"]["nsc"]["theta"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["result"]["nsp"]["verdict"], "fails");
    assert_eq!(v["command"], "nsc");
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 16);

    let v = json(&nsp_lab(&["nsc", "--generators", "1,1,2", "--measure", "exp_ce1", "--k", "1"]));
    assert_eq!(v["result"]["nsp"]["verdict"], "holds_strict");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(nsp_lab(&["suite", "nonsense"]).status.code(), Some(2));
    assert_eq!(nsp_lab(&["nsc", "--generators", "1,1", "--measure", "huber"]).status.code(), Some(2));
    assert_eq!(nsp_lab(&["nsc", "--measure", "l1"]).status.code(), Some(2));
    assert_eq!(nsp_lab(&["boundary", "--grid", "0x0"]).status.code(), Some(2));
    assert_eq!(nsp_lab(&["mc", "--n", "3", "--m", "3"]).status.code(), Some(2));
    assert_eq!(nsp_lab(&["tradeoff", "--beta", "10", "--gamma", "20"]).status.code(), Some(2));
    assert_eq!(nsp_lab(&["plot", "tradeoff-curve", "--gamma-sweep", "5:1:1"]).status.code(), Some(2));
}

#[test]
fn mc_is_deterministic_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "# small run\nn = 5\nm = 3\nk = 1\ntrials = 12\nd_grid = 0.001, 0.1\nseed = 3\n").unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = nsp_lab(&["mc", "--config", p(&cfg), "--trials", "7", "--out", p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# seed=3 config_hash="));
    assert!(lines[1].starts_with("trial,erc,margin,boundary,rrc_d="));
    assert_eq!(lines.len(), 2 + 7);

    let o = nsp_lab(&["mc", "--config", p(&cfg), "--seed", "4", "--format", "json"]);
    let v = json(&o);
    assert_eq!(v["seed"], 4);
    assert_eq!(v["result"]["trials"], 12);
    assert_eq!(v["result"]["subset_violations"], 0);

    fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(nsp_lab(&["mc", "--config", p(&cfg)]).status.code(), Some(2));
}

#[test]
fn tradeoff_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tradeoff.csv");
    let o = nsp_lab(&["tradeoff", "--beta", "100", "--gamma-sweep", "62:99:1", "--out", p(&out)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "gamma,delta,C,oracle_C,gordon_bound");
    assert_eq!(lines.len(), 2 + 38);
    let first: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(first[0].parse::<f64>().unwrap(), 62.0);
    assert!(first[1].parse::<f64>().unwrap() > 0.0);
    // 17 significant digits
    assert!(first[2].contains('e') && first[2].split('e').next().unwrap().len() >= 18);

    let o = nsp_lab(&["tradeoff", "--beta", "100", "--gamma", "61"]);
    let v = json(&o);
    assert!(v["result"][0]["c"].is_null());
}

#[test]
fn boundary_and_plot_outputs() {
    let o = nsp_lab(&["boundary", "--measure", "l1", "--grid", "5x5", "--format", "csv"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 2 + 25);
    for line in text.lines().skip(2) {
        let f: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(f[2], if f[0] >= 1.0 || f[1] >= 1.0 { 1.0 } else { 0.0 });
    }
    let o = nsp_lab(&["plot", "boundary-map", "--measure", "l1", "--grid", "10x10", "--seed", "5"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# boundary_map measure=l1 grid=10x10 seed=5 config_hash="));
}

#[test]
fn recover_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("A.csv");
    let y = dir.path().join("y.csv");
    fs::write(&a, "# shape 2x3\n1,0,-0.5\n0,1,-0.5\n").unwrap();
    fs::write(&y, "0\n3\n").unwrap();
    let v = json(&nsp_lab(&["recover", "--matrix", p(&a), "--y", p(&y), "--measure", "lp(p=1)", "--k", "1"]));
    let x: Vec<f64> = v["result"]["x"].as_array().unwrap().iter().map(|t| t.as_f64().unwrap()).collect();
    assert!((x[0]).abs() < 1e-9 && (x[1] - 3.0).abs() < 1e-9 && x[2].abs() < 1e-9, "{x:?}");

    let o = nsp_lab(&[
        "recover", "--matrix", p(&a), "--measure", "l1", "--k", "1", "--eps", "0.01", "--method", "irls", "--trials", "4",
        "--format", "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2 + 4);
}

#[test]
fn probe_and_ce1_report_violations() {
    let v = json(&nsp_lab(&["probe", "--generators", "1,1,2", "--measure", "exp_ce1", "--k", "1", "--d", "0.1"]));
    assert_eq!(v["result"]["outcome"], "violated");
    let v = json(&nsp_lab(&["ce1", "--d-list", "0.1,0.01"]));
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["deficit"].as_f64().unwrap() > 1e-12));
    assert_eq!(nsp_lab(&["ce1", "--d-list", "1.5"]).status.code(), Some(2));
}

#[test]
fn width_reports_extended_set() {
    let v = json(&nsp_lab(&["width", "--measure", "l1", "--n", "6", "--k", "1", "--draws", "2000", "--d", "0.1"]));
    let base = v["result"]["width"]["mean"].as_f64().unwrap();
    let ext = v["result"]["extended"]["mean"].as_f64().unwrap();
    assert!(ext >= base && ext <= base + 0.1 * 6f64.sqrt());
    assert_eq!(v["result"]["width"]["inner_search"], "enumerate_supports");
}

#[test]
fn quick_suite_passes_and_mutation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle.json");
    let o = nsp_lab(&["suite", "quick", "--out", p(&bundle)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&bundle).unwrap()).unwrap();
    assert_eq!(v["result"]["passed"], true);

    let o = nsp_lab(&["suite", "quick", "--mutate-mcp", "--out", p(&bundle)]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&fs::read_to_string(&bundle).unwrap()).unwrap();
    let failed: Vec<&Value> = v["result"]["criteria"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "mcp comparison rule");
}
