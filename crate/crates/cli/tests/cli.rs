use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn hmfg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmfg"))
        .args(args)
        .output()
        .unwrap()
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn write_config(dir: &Path, name: &str, config: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path.display().to_string()
}

fn run_ok(sub: &str, config: &str, out: &Path) -> Value {
    let o = hmfg(&[sub, "--config", config, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn small_rumor() -> Value {
    json!({
        "version": 1,
        "problem": {"name": "rumor", "params": {"horizon": 10, "mu0_aware": 0.1}},
        "layers": [{"name": "rank2"}, {"name": "inv_unif3"}],
        "M": 6,
        "simulation": {"N_list": [16], "realizations": 2, "seed": 3}
    })
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn rumor_default_config_reaches_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_ok(
        "solve",
        repo_file("configs/rumor.json").to_str().unwrap(),
        dir.path(),
    );
    assert_eq!(summary["converged"], true);
    let rows = csv_rows(&dir.path().join("diagnostics.csv"));
    let last: f64 = rows.last().unwrap()[1].parse().unwrap();
    assert!(last <= 1e-3, "{last}");
}

#[test]
fn run_meta_replays_to_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", &small_rumor());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok("solve", &config, &a);
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(a.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["meta"]["command"], "solve");
    assert_eq!(meta["problem"]["params"]["tau"], json!([0.3, 0.5]));
    run_ok("solve", a.join("run_meta.json").to_str().unwrap(), &b);
    for f in [
        "mean_field.csv",
        "policy.csv",
        "diagnostics.csv",
        "run_meta.json",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn degenerate_single_population() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "version": 1,
        "problem": {"name": "sis", "params": {"tau": [0.8], "horizon": 5}},
        "layers": [{"name": "flat2", "params": {"p": 0.0}}],
        "M": 1
    });
    let config = write_config(dir.path(), "c.json", &config);
    run_ok("solve", &config, dir.path());
    // M = 1, two states, T = 5
    assert_eq!(csv_rows(&dir.path().join("mean_field.csv")).len(), 12);
    assert_eq!(csv_rows(&dir.path().join("policy.csv")).len(), 20);
}

#[test]
fn malformed_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = small_rumor();
    bad["solver"] = json!({"fixed_point": {"damping": "high"}});
    let config = write_config(dir.path(), "bad.json", &bad);
    let o = hmfg(&[
        "solve",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["path"], "solver.fixed_point.damping");

    let truncated = dir.path().join("truncated.json");
    fs::write(&truncated, r#"{"version": 1, "layers": [{"name": "#).unwrap();
    let o = hmfg(&["solve", "--config", truncated.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(serde_json::from_slice::<Value>(&o.stderr).unwrap()["error"]["path"].is_string());

    // converge without a simulation block
    let mut missing = small_rumor();
    missing.as_object_mut().unwrap().remove("simulation");
    let config = write_config(dir.path(), "missing.json", &missing);
    let o = hmfg(&[
        "converge",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("convergence.csv").exists());
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = hmfg(&["solve", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
}

#[test]
fn converge_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", &small_rumor());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok("converge", &config, &a);
    let o = hmfg(&[
        "converge",
        "--config",
        &config,
        "--out",
        b.to_str().unwrap(),
        "--threads",
        "1",
        "--trajectories",
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&a.join("convergence.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0].as_str(), rows[1][1].as_str()), ("16", "1"));
    for f in ["convergence.csv", "convergence_summary.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    // 2 realizations of 16 agents over 11 epochs
    let lines = fs::read_to_string(b.join("trajectories.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 2 * 16 * 11);
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(
        (first["N"].as_u64(), first["t"].as_u64()),
        (Some(16), Some(0))
    );
    let summary = csv_rows(&a.join("convergence_summary.csv"));
    let v: Vec<f64> = summary[0][1..].iter().map(|s| s.parse().unwrap()).collect();
    assert!(v[2] <= v[0] && v[0] <= v[3]);
}

#[test]
fn trajectory_dump_reproduces_the_recorded_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", &small_rumor());
    let out = dir.path().join("o");
    let o = hmfg(&[
        "converge",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--trajectories",
    ]);
    assert!(o.status.success());
    run_ok("solve", &config, &out);
    let mf = csv_rows(&out.join("mean_field.csv"));
    let (m, horizon, states) = (6usize, 10usize, 6usize);
    let mut grid = vec![0.0; (horizon + 1) * states];
    for r in &mf {
        let (t, x, p): (usize, usize, f64) = (
            r[1].parse().unwrap(),
            r[2].parse().unwrap(),
            r[3].parse().unwrap(),
        );
        grid[t * states + x] += p / m as f64;
    }
    let mut counts = vec![vec![0.0; (horizon + 1) * states]; 2];
    for line in fs::read_to_string(out.join("trajectories.jsonl"))
        .unwrap()
        .lines()
    {
        let rec: Value = serde_json::from_str(line).unwrap();
        let r = rec["realization"].as_u64().unwrap() as usize;
        let (t, x) = (
            rec["t"].as_u64().unwrap() as usize,
            rec["state"].as_u64().unwrap() as usize,
        );
        counts[r][t * states + x] += 1.0 / 16.0;
    }
    let recorded = csv_rows(&out.join("convergence.csv"));
    for r in 0..2 {
        let delta: f64 = counts[r]
            .iter()
            .zip(&grid)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let expected: f64 = recorded[r][2].parse().unwrap();
        assert!((delta - expected).abs() < 1e-9, "{delta} vs {expected}");
    }
}

#[test]
fn sampling_complete_and_empty_layers() {
    let dir = tempfile::tempdir().unwrap();
    for (p, edges) in [(1.0, [6, 4]), (0.0, [0, 0])] {
        let config = json!({
            "version": 1,
            "problem": {"name": "sis"},
            "layers": [{"name": "flat2", "params": {"p": p}}, {"name": "flat3", "params": {"p": p}}],
            "M": 2,
            "sample": {"N": 4, "seed": 0}
        });
        let config = write_config(dir.path(), "c.json", &config);
        let summary = run_ok("sample", &config, dir.path());
        assert_eq!(summary["edges"], json!(edges));
        let h: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("hypergraph.json")).unwrap())
                .unwrap();
        assert_eq!(h["N"], 4);
        assert_eq!(h["layers"][1]["k"], 3);
        assert_eq!(h["layers"][1]["edges"].as_array().unwrap().len(), edges[1]);
    }
}

#[test]
fn sampled_hypergraphs_load_back() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        "sample",
        repo_file("configs/sample.json").to_str().unwrap(),
        dir.path(),
    );
    let text = fs::read_to_string(dir.path().join("hypergraph.json")).unwrap();
    let h: hmfg_core::MultiLayerHypergraph = serde_json::from_str(&text).unwrap();
    assert_eq!(h.n(), 60);
    assert_eq!(h.layers().len(), 2);
}

#[test]
fn stored_policy_exploitability_matches_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_rumor();
    config["solver"] = json!({"method": "omd", "omd": {"iterations": 5}});
    let config = write_config(dir.path(), "c.json", &config);
    run_ok("solve", &config, dir.path());
    let summary = run_ok("exploitability", &config, dir.path());
    let last: f64 = csv_rows(&dir.path().join("diagnostics.csv"))
        .last()
        .unwrap()[1]
        .parse()
        .unwrap();
    assert_eq!(summary["exploitability"].as_f64().unwrap(), last);
    assert_eq!(csv_rows(&dir.path().join("diagnostics.csv")).len(), 6);

    fs::write(
        dir.path().join("broken.csv"),
        "alpha_index,t,state,probability\n0,0,0,1\n",
    )
    .unwrap();
    let o = hmfg(&[
        "exploitability",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
        "--policy",
        dir.path().join("broken.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("action"));
}

#[test]
fn plotdata_labels_the_solver_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.json", &small_rumor());
    let o = hmfg(&[
        "plotdata",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "needs solver artifacts first");
    run_ok("solve", &config, dir.path());
    run_ok("plotdata", &config, dir.path());
    let policy = csv_rows(&dir.path().join("plot_policy.csv"));
    assert_eq!(policy.len(), 6 * 10 * 6 * 2);
    assert_eq!(
        policy[1][..5],
        ["0.08333333333333333", "0", "0", "I", "spread"]
    );
    let kernel = csv_rows(&dir.path().join("kernel_layer1.csv"));
    assert_eq!(kernel.len(), 216);
    assert_eq!(kernel[0].len(), 4);
    let expl = csv_rows(&dir.path().join("plot_exploitability.csv"));
    assert_eq!(
        expl.len(),
        csv_rows(&dir.path().join("diagnostics.csv")).len()
    );
}

#[test]
fn shipped_configs_parse() {
    for entry in fs::read_dir(repo_file("configs")).unwrap() {
        let path = entry.unwrap().path();
        let config = hmfg_cli::load_config(&path).unwrap();
        hmfg_cli::Experiment::new(config).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn schema_lists_the_accepted_names() {
    let schema: Value = serde_json::from_str(
        &fs::read_to_string(repo_file("schema/experiment.schema.json")).unwrap(),
    )
    .unwrap();
    let top: Vec<&String> = schema["properties"].as_object().unwrap().keys().collect();
    let config = hmfg_cli::parse_config(
        r#"{"version": 1, "problem": {"name": "sis"}, "layers": [], "M": 1, "simulation": {"N_list": [], "realizations": 2, "seed": 0}, "sample": {"N": 1, "seed": 0}, "output": "o", "meta": {}}"#,
    )
    .unwrap();
    let mut fields: Vec<String> = serde_json::to_value(&config)
        .unwrap()
        .as_object()
        .unwrap()
        .keys()
        .cloned()
        .collect();
    fields.sort();
    let mut top: Vec<String> = top.into_iter().cloned().collect();
    top.sort();
    assert_eq!(fields, top);

    let with_p = ["flat2", "ind3", "block3", "flat3"];
    for name in schema["$defs"]["kernel"]["properties"]["name"]["enum"]
        .as_array()
        .unwrap()
    {
        let name = name.as_str().unwrap();
        let mut spec = hmfg_core::KernelSpec::new(name);
        if with_p.contains(&name) {
            spec = spec.with_param("p", 0.5);
        }
        assert!(spec.build().is_ok(), "{name}");
    }
    for (def, params) in [
        (
            "rumor_params",
            serde_json::to_value(hmfg_core::game::RumorParams::default()).unwrap(),
        ),
        (
            "sis_params",
            serde_json::to_value(hmfg_core::game::SisParams::default()).unwrap(),
        ),
    ] {
        let props = schema["$defs"][def]["properties"].as_object().unwrap();
        let keys: Vec<&String> = params.as_object().unwrap().keys().collect();
        assert_eq!(keys, props.keys().collect::<Vec<_>>(), "{def}");
        for (k, v) in params.as_object().unwrap() {
            let default = &props[k]["default"];
            match (default.as_f64(), v.as_f64()) {
                (Some(a), Some(b)) => assert_eq!(a, b, "{def}.{k}"),
                _ => assert_eq!(default, v, "{def}.{k}"),
            }
        }
    }
}
