use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hmfg_cli::{commands, load_config, CliError, Experiment};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "hmfg",
    version,
    about = "Mean field games on multi-layer hypergraphons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for an equilibrium and write mean field, policy and diagnostics.
    Solve(Common),
    /// Solve, then measure finite-game deviation from the mean field.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Also dump every agent trajectory as JSON lines.
        #[arg(long)]
        trajectories: bool,
    },
    /// Sample a finite hypergraph from the configured layers.
    Sample(Common),
    /// Exploitability of a stored policy.
    Exploitability {
        #[command(flatten)]
        common: Common,
        /// Policy CSV; defaults to `<out>/policy.csv`.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Re-export solver artifacts in `<out>` as labelled plot tables.
    Plotdata(Common),
}

fn setup(common: &Common) -> Result<(Experiment, PathBuf), CliError> {
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::config("--threads", e.to_string()))?;
    }
    let config = load_config(&common.config)?;
    let out = common
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((Experiment::new(config)?, out))
}

fn paths(out: &Path, names: &[&str]) -> Vec<String> {
    names
        .iter()
        .map(|n| out.join(n).display().to_string())
        .collect()
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    use commands::*;
    Ok(match cli.command {
        Command::Solve(common) => {
            let (exp, out) = setup(&common)?;
            let s = solve(&exp, &out)?;
            json!({
                "command": "solve",
                "final_exploitability": s.final_exploitability(),
                "converged": s.converged,
                "artifacts": paths(&out, &[MEAN_FIELD_CSV, POLICY_CSV, DIAGNOSTICS_CSV, RUN_META_JSON]),
            })
        }
        Command::Converge {
            common,
            trajectories,
        } => {
            let (exp, out) = setup(&common)?;
            let rows = converge(&exp, &out, trajectories)?;
            let means: Vec<_> = rows
                .iter()
                .map(|r| json!({ "N": r.n, "mean": r.mean }))
                .collect();
            let mut files = vec![CONVERGENCE_CSV, CONVERGENCE_SUMMARY_CSV, RUN_META_JSON];
            if trajectories {
                files.push(TRAJECTORIES_JSONL);
            }
            json!({ "command": "converge", "delta_mu": means, "artifacts": paths(&out, &files) })
        }
        Command::Sample(common) => {
            let (exp, out) = setup(&common)?;
            let h = sample(&exp, &out)?;
            let edges: Vec<usize> = h.layers().iter().map(|l| l.len()).collect();
            json!({ "command": "sample", "edges": edges, "artifacts": paths(&out, &[HYPERGRAPH_JSON, RUN_META_JSON]) })
        }
        Command::Exploitability { common, policy } => {
            let (exp, out) = setup(&common)?;
            let value = exploitability_of(&exp, &out, policy.as_deref())?;
            json!({ "command": "exploitability", "exploitability": value, "artifacts": paths(&out, &[EXPLOITABILITY_JSON]) })
        }
        Command::Plotdata(common) => {
            let (exp, out) = setup(&common)?;
            let files: Vec<String> = plotdata(&exp, &out)?
                .iter()
                .map(|p| p.display().to_string())
                .collect();
            json!({ "command": "plotdata", "artifacts": files })
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
