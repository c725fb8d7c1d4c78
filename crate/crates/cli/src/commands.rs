//! Subcommand implementations. Each writes its artifacts into `out`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hmfg_core::meanfield::{exploitability, fixed_point_iteration, omd_iteration};
use hmfg_core::simulate::{
    delta_mu_experiment, realization_seeds, share_policy, simulate_game, DeltaMuRow,
};
use hmfg_core::{MeanFieldEnsemble, MultiLayerHypergraph, PolicyEnsemble};
use serde::Serialize;
use serde_json::{json, Value};

use crate::artifacts::{self, DiagnosticsRow};
use crate::config::{Experiment, SolverMethod};
use crate::error::CliError;

pub const MEAN_FIELD_CSV: &str = "mean_field.csv";
pub const POLICY_CSV: &str = "policy.csv";
pub const DIAGNOSTICS_CSV: &str = "diagnostics.csv";
pub const RUN_META_JSON: &str = "run_meta.json";
pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const CONVERGENCE_SUMMARY_CSV: &str = "convergence_summary.csv";
pub const TRAJECTORIES_JSONL: &str = "trajectories.jsonl";
pub const HYPERGRAPH_JSON: &str = "hypergraph.json";
pub const EXPLOITABILITY_JSON: &str = "exploitability.json";

#[derive(Debug, Clone)]
pub struct Solution {
    pub policy: PolicyEnsemble,
    pub mean_field: MeanFieldEnsemble,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// `None` for mirror descent, which has no stopping rule.
    pub converged: Option<bool>,
}

impl Solution {
    pub fn final_exploitability(&self) -> f64 {
        self.diagnostics
            .last()
            .map_or(f64::NAN, |d| d.exploitability)
    }

    fn meta(&self, exp: &Experiment) -> Value {
        json!({
            "method": exp.config.solver.method,
            "iterations_run": self.diagnostics.len().saturating_sub(1),
            "converged": self.converged,
            "final_exploitability": self.final_exploitability(),
            "init_policy": "uniform",
        })
    }
}

/// Runs the configured solver from the uniform policy.
pub fn run_solver(exp: &Experiment) -> Result<Solution, CliError> {
    let p = exp.problem.as_ref();
    let m = exp.config.m;
    match exp.config.solver.method {
        SolverMethod::FixedPoint => {
            let init = PolicyEnsemble::uniform(m, p.horizon(), p.n_states(), p.n_actions());
            let r = fixed_point_iteration(p, &exp.grids, &init, &exp.config.solver.fixed_point)?;
            let diagnostics = r
                .diagnostics
                .iter()
                .map(|d| DiagnosticsRow {
                    iteration: d.iteration,
                    exploitability: d.exploitability,
                    mf_distance_to_previous: d.mf_distance_to_previous,
                })
                .collect();
            Ok(Solution {
                policy: r.policy,
                mean_field: r.mean_field,
                diagnostics,
                converged: Some(r.converged),
            })
        }
        SolverMethod::Omd => {
            let r = omd_iteration(p, &exp.grids, m, &exp.config.solver.omd)?;
            let diagnostics = r
                .exploitability
                .iter()
                .enumerate()
                .map(|(iteration, &e)| DiagnosticsRow {
                    iteration,
                    exploitability: e,
                    mf_distance_to_previous: None,
                })
                .collect();
            Ok(Solution {
                policy: r.policy,
                mean_field: r.mean_field,
                diagnostics,
                converged: None,
            })
        }
    }
}

fn create_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

/// `run_meta.json`: the resolved config, replayable as-is, with run details under `meta`.
fn write_run_meta(
    exp: &Experiment,
    out: &Path,
    command: &str,
    details: Value,
) -> Result<(), CliError> {
    let mut config = exp.config.clone();
    let mut meta = json!({
        "command": command,
        "generator": concat!("hmfg ", env!("CARGO_PKG_VERSION")),
        "state_labels": exp.problem.state_labels(),
        "action_labels": exp.problem.action_labels(),
    });
    if let (Value::Object(m), Value::Object(d)) = (&mut meta, details) {
        m.extend(d);
    }
    config.meta = Some(meta);
    artifacts::write_json(&out.join(RUN_META_JSON), &config, true)
}

pub fn solve(exp: &Experiment, out: &Path) -> Result<Solution, CliError> {
    let solution = run_solver(exp)?;
    create_dir(out)?;
    artifacts::write_mean_field(&out.join(MEAN_FIELD_CSV), &solution.mean_field)?;
    artifacts::write_policy(&out.join(POLICY_CSV), &solution.policy)?;
    artifacts::write_diagnostics(&out.join(DIAGNOSTICS_CSV), &solution.diagnostics)?;
    write_run_meta(exp, out, "solve", json!({ "solver": solution.meta(exp) }))?;
    Ok(solution)
}

#[derive(Serialize)]
struct TrajectoryRecord {
    #[serde(rename = "N")]
    n: usize,
    realization: usize,
    t: usize,
    agent: usize,
    alpha: f64,
    state: usize,
    action: Option<usize>,
}

/// Solves, then measures Δμ of finite games against the solution.
pub fn converge(
    exp: &Experiment,
    out: &Path,
    trajectories: bool,
) -> Result<Vec<DeltaMuRow>, CliError> {
    let sim = exp.simulation()?;
    let solution = run_solver(exp)?;
    let p = exp.problem.as_ref();
    let rows = delta_mu_experiment(
        p,
        &exp.hypergraphon,
        &solution.policy,
        &solution.mean_field,
        &sim.n_list,
        sim.realizations,
        sim.seed,
        sim.alpha_mode,
    )?;
    create_dir(out)?;
    artifacts::write_convergence(&out.join(CONVERGENCE_CSV), &rows)?;
    artifacts::write_convergence_summary(&out.join(CONVERGENCE_SUMMARY_CSV), &rows)?;
    if trajectories {
        // replays the exact realisations of the experiment
        let path = out.join(TRAJECTORIES_JSONL);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for &n in &sim.n_list {
            let policies = share_policy(&solution.policy, n);
            for r in 0..sim.realizations {
                let (graph_seed, run_seed) = realization_seeds(sim.seed, n, r);
                let h =
                    MultiLayerHypergraph::sample(&exp.hypergraphon, n, graph_seed, sim.alpha_mode)?;
                let run = simulate_game(p, Arc::new(h), &policies, None, run_seed)?;
                for t in 0..=run.horizon() {
                    for agent in 0..n {
                        let record = TrajectoryRecord {
                            n,
                            realization: r,
                            t,
                            agent,
                            alpha: run.hypergraph().alphas()[agent],
                            state: run.states(t)[agent],
                            action: (t < run.horizon()).then(|| run.actions(t)[agent]),
                        };
                        serde_json::to_writer(&mut w, &record)
                            .map_err(|e| CliError::input(&path, e.to_string()))?;
                        w.write_all(b"\n").map_err(|e| CliError::io(&path, e))?;
                    }
                }
            }
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
    }
    let seeds: Vec<Value> = sim
        .n_list
        .iter()
        .flat_map(|&n| {
            (0..sim.realizations).map(move |r| {
                let (graph, run) = realization_seeds(sim.seed, n, r);
                json!({ "N": n, "realization": r, "hypergraph_seed": graph, "trajectory_seed": run })
            })
        })
        .collect();
    write_run_meta(
        exp,
        out,
        "converge",
        json!({ "solver": solution.meta(exp), "realization_seeds": seeds }),
    )?;
    Ok(rows)
}

pub fn sample(exp: &Experiment, out: &Path) -> Result<MultiLayerHypergraph, CliError> {
    let s = exp.sample()?;
    let h = MultiLayerHypergraph::sample(&exp.hypergraphon, s.n, s.seed, s.alpha_mode)?;
    create_dir(out)?;
    artifacts::write_json(&out.join(HYPERGRAPH_JSON), &h, false)?;
    let edges: Vec<usize> = h.layers().iter().map(|l| l.len()).collect();
    write_run_meta(exp, out, "sample", json!({ "edge_counts": edges }))?;
    Ok(h)
}

/// Exploitability of a stored policy (default `<out>/policy.csv`).
pub fn exploitability_of(
    exp: &Experiment,
    out: &Path,
    policy_path: Option<&Path>,
) -> Result<f64, CliError> {
    let path: PathBuf = policy_path.map_or_else(|| out.join(POLICY_CSV), Path::to_path_buf);
    let p = exp.problem.as_ref();
    let policy = artifacts::read_policy(
        &path,
        exp.config.m,
        p.horizon(),
        p.n_states(),
        p.n_actions(),
    )?;
    let value = exploitability(p, &exp.grids, &policy)?;
    create_dir(out)?;
    artifacts::write_json(
        &out.join(EXPLOITABILITY_JSON),
        &json!({ "policy": path.display().to_string(), "exploitability": value }),
        true,
    )?;
    Ok(value)
}

/// Re-exports solver artifacts in `out` as labelled long-format tables,
/// plus the discretised kernels.
pub fn plotdata(exp: &Experiment, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let p = exp.problem.as_ref();
    let m = exp.config.m;
    let (states, actions) = (p.state_labels(), p.action_labels());
    let alpha = |i: usize| hmfg_core::kernels::grid_point(i, m);
    let mut written = Vec::new();

    let mf = artifacts::read_mean_field(&out.join(MEAN_FIELD_CSV), m, p.horizon(), p.n_states())?;
    let path = out.join("plot_mean_field.csv");
    let mut w = artifacts::CsvOut::create(
        &path,
        &["alpha", "alpha_index", "t", "state", "probability"],
    )?;
    for i in 0..m {
        for t in 0..=p.horizon() {
            for (x, &v) in mf.get(i, t).iter().enumerate() {
                w.row([
                    artifacts::num(alpha(i)),
                    i.to_string(),
                    t.to_string(),
                    states[x].clone(),
                    artifacts::num(v),
                ])?;
            }
        }
    }
    w.finish()?;
    written.push(path);

    let policy = artifacts::read_policy(
        &out.join(POLICY_CSV),
        m,
        p.horizon(),
        p.n_states(),
        p.n_actions(),
    )?;
    let path = out.join("plot_policy.csv");
    let mut w = artifacts::CsvOut::create(
        &path,
        &[
            "alpha",
            "alpha_index",
            "t",
            "state",
            "action",
            "probability",
        ],
    )?;
    for i in 0..m {
        for t in 0..p.horizon() {
            for (x, label) in states.iter().enumerate() {
                for (u, &v) in policy.probs(i, t, x).iter().enumerate() {
                    w.row([
                        artifacts::num(alpha(i)),
                        i.to_string(),
                        t.to_string(),
                        label.clone(),
                        actions[u].clone(),
                        artifacts::num(v),
                    ])?;
                }
            }
        }
    }
    w.finish()?;
    written.push(path);

    let diagnostics = artifacts::read_diagnostics(&out.join(DIAGNOSTICS_CSV))?;
    let path = out.join("plot_exploitability.csv");
    let mut w = artifacts::CsvOut::create(&path, &["iteration", "exploitability"])?;
    for (n, e) in diagnostics {
        w.row([n.to_string(), artifacts::num(e)])?;
    }
    w.finish()?;
    written.push(path);

    for (d, grid) in exp.grids.iter().enumerate() {
        let path = out.join(format!("kernel_layer{d}.csv"));
        artifacts::write_grid(&path, grid)?;
        written.push(path);
    }
    Ok(written)
}
