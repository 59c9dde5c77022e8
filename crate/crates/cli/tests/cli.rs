//! End-to-end tests of the `metastab` binary: exit codes, output files,
//! and bitwise reproducibility of the result bundle.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metastab"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const QUICK_CONFIG: &str = r#"
potential = "double_well_1d"
eps = [0.25, 0.2]
delta = 0.1
tasks = ["critical_points", "network", "d_eps", "v_eps", "capacity_geometric", "capacity_pde", "simulate", "convex_checks"]
seed = 11

[lattice]
box = [[-1.6, 1.6]]
h = 0.01

[sim]
dt = 1e-3
max_steps = 400000
paths = 40
target_radius = 0.2
"#;

#[test]
fn list_catalog_names_every_entry() {
    let out = bin().arg("list-catalog").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "double_well_1d",
        "double_well_2d",
        "double_well_3d",
        "degenerate_p4",
        "degenerate_p6",
        "triple_parallel",
        "chain_series_3",
    ] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn schema_is_valid_json() {
    let out = bin().arg("schema").output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["title"], "ExperimentConfig");
    assert!(v["config"]["properties"]["tasks"].is_object());
    assert_eq!(v["results"]["title"], "ResultBundle");
}

/// Structural validation of results.json against the shipped schema:
/// required fields present with the declared types.
#[test]
fn results_json_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
potential = "double_well_2d"
eps = [0.1]
delta = 0.1
tasks = ["critical_points"]
[lattice]
box = [[-1.8, 1.8], [-1.2, 1.2]]
h = 0.02
"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
            .unwrap();

    let schema_out = bin().arg("schema").output().unwrap();
    let schema: serde_json::Value = serde_json::from_slice(&schema_out.stdout).unwrap();
    for field in schema["results"]["required"].as_array().unwrap() {
        let key = field.as_str().unwrap();
        assert!(!bundle[key].is_null() || key == "compare", "missing {key}");
    }
    assert!(bundle["schema_version"].is_u64());
    assert!(bundle["config_hash"].is_string());
    for rec in bundle["records"].as_array().unwrap() {
        assert!(rec["task"].is_string());
        assert!(rec["ok"].is_boolean());
        assert!(rec["timing_ms"].is_number());
    }

    // catalog ground truth: the quadratic double well has 3 critical points
    let cps = bundle["records"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["task"] == "critical_points")
        .unwrap();
    assert_eq!(cps["value"]["count"], 3);
}

#[test]
fn empty_task_list_is_config_error() {
    assert!(metastab_cli::config::ExperimentConfig::parse(
        r#"
potential = "double_well_1d"
eps = [0.1]
delta = 0.1
tasks = []
[lattice]
box = [[-1.6, 1.6]]
h = 0.01
"#
    )
    .is_err());
}

#[test]
fn compare_report_contract() {
    use metastab_cli::runner::{compare_report, EpsDiagnostic, ResultBundle, TaskRecord};
    let record = |task: &str, eps: f64, ln: f64| TaskRecord {
        task: task.to_string(),
        eps: Some(eps),
        ok: true,
        value: Some(serde_json::json!({ "ln_value_at_eps": ln })),
        error: None,
        timing_ms: 0.0,
    };
    let bundle = |eps: Vec<f64>, pairs: Vec<(f64, f64, f64)>| ResultBundle {
        schema_version: 1,
        config_hash: String::new(),
        potential: "test".to_string(),
        eps,
        records: pairs
            .iter()
            .flat_map(|&(e, g, p)| {
                vec![record("capacity_geometric", e, g), record("capacity_pde", e, p)]
            })
            .collect(),
        diagnostics: vec![EpsDiagnostic { eps: 0.1, eps1: None, eta_hat: None }],
        compare: None,
    };

    // a single eps cannot support a trend
    assert!(compare_report(&bundle(vec![0.1], vec![(0.1, -1.0, -1.0)])).is_err());

    // identical estimates: all ratios 1, trend holds
    let b = bundle(
        vec![0.1, 0.05],
        vec![(0.1, -1.0, -1.0), (0.05, -2.0, -2.0)],
    );
    let table = compare_report(&b).unwrap();
    assert!(table.rows.iter().all(|r| (r.ratio - 1.0).abs() < 1e-12));
    assert!(table.trend_improving);

    // worsening ratios clear the trend flag
    let b = bundle(
        vec![0.1, 0.05],
        vec![(0.1, -1.0, -1.0), (0.05, -1.5, -2.0)],
    );
    assert!(!compare_report(&b).unwrap().trend_improving);
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // eps not descending
    let cfg = write_config(
        dir.path(),
        r#"
potential = "double_well_1d"
eps = [0.05, 0.1]
delta = 0.1
tasks = ["d_eps"]
[lattice]
box = [[-1.6, 1.6]]
h = 0.01
"#,
    );
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let missing = bin().arg("run").arg(dir.path().join("nope.toml")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let unknown = write_config(
        dir.path(),
        r#"
potential = "no_such_landscape"
eps = [0.1]
delta = 0.1
tasks = ["d_eps"]
[lattice]
box = [[-1.6, 1.6]]
h = 0.01
"#,
    );
    let out = bin().arg("run").arg(&unknown).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn task_failure_is_recorded_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // pair inside the same basin: the network task must fail while the
    // transport tasks still run
    let cfg = write_config(
        dir.path(),
        r#"
potential = "double_well_1d"
eps = [0.1]
delta = 0.1
tasks = ["network", "d_eps"]
pair = [[0.8], [1.2]]
[lattice]
box = [[-1.6, 1.6]]
h = 0.01
"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
            .unwrap();
    let records = bundle["records"].as_array().unwrap();
    let net = records.iter().find(|r| r["task"] == "network").unwrap();
    assert_eq!(net["ok"], false);
    assert!(net["error"].as_str().unwrap().contains("not separated"));
    let d = records.iter().find(|r| r["task"] == "d_eps").unwrap();
    assert_eq!(d["ok"], true);
}

#[test]
fn run_produces_bundle_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), QUICK_CONFIG);
    let out_dir = dir.path().join("out");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
            .unwrap();
    assert_eq!(bundle["schema_version"], 1);
    assert_eq!(bundle["potential"], "double_well_1d");
    assert_eq!(bundle["config_hash"].as_str().unwrap().len(), 64);
    let records = bundle["records"].as_array().unwrap();
    assert!(records.iter().all(|r| r["ok"] == true));
    // eps-dependent tasks appear once per noise level
    let caps: Vec<_> =
        records.iter().filter(|r| r["task"] == "capacity_geometric").collect();
    assert_eq!(caps.len(), 2);
    assert!(bundle["compare"]["rows"].as_array().unwrap().len() == 2);

    for table in [
        "critical_points.csv",
        "network.csv",
        "d_eps.csv",
        "v_eps.csv",
        "capacity_geometric.csv",
        "capacity_pde.csv",
        "simulate.csv",
        "convex_checks.csv",
        "compare.csv",
    ] {
        assert!(out_dir.join(table).exists(), "missing {table}");
    }
}

/// [criterion 9] Rerunning with an identical config and seed reproduces
/// results.json byte-for-byte once timing fields are cleared.
#[test]
fn determinism_rerun_is_byte_identical_modulo_timings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), QUICK_CONFIG);
    let mut normalized = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("out{run}"));
        let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let mut bundle: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
                .unwrap();
        for rec in bundle["records"].as_array_mut().unwrap() {
            rec["timing_ms"] = serde_json::json!(0.0);
        }
        normalized.push(serde_json::to_string(&bundle).unwrap());
    }
    println!(
        "[criterion 9] determinism: rerun byte-identical modulo timings: {}",
        if normalized[0] == normalized[1] { "PASS" } else { "FAIL" }
    );
    assert_eq!(normalized[0], normalized[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), QUICK_CONFIG);
    let mut means = Vec::new();
    for (run, seed) in [(0, "11"), (1, "12")] {
        let out_dir = dir.path().join(format!("seed{run}"));
        let out = bin()
            .arg("run")
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .arg("--seed")
            .arg(seed)
            .output()
            .unwrap();
        assert!(out.status.success());
        let bundle: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
                .unwrap();
        let sim = bundle["records"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["task"] == "simulate")
            .unwrap();
        means.push(sim["value"]["mean"].as_f64().unwrap());
    }
    assert_ne!(means[0], means[1]);
}

#[test]
fn inline_potential_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
eps = [0.1, 0.07]
delta = 0.1
tasks = ["critical_points", "network", "capacity_geometric", "capacity_pde"]
pair = [[-1.0], [1.0]]

[potential]
inline = "0.25*x1^4 - 0.5*x1^2 + 0.25"
growth_const = 4.0

[lattice]
box = [[-1.6, 1.6]]
h = 0.01
"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
            .unwrap();
    assert_eq!(bundle["potential"], "inline");
    // same landscape as the catalog double well: ratio close to 1
    let rows = bundle["compare"]["rows"].as_array().unwrap();
    for row in rows {
        let ratio = row["ratio"].as_f64().unwrap();
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }
}
