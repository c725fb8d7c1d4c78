//! Experiment configuration files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use hmfg_core::game::{rumor_problem, sis_problem, RumorParams, SisParams};
use hmfg_core::meanfield::{FixedPointOptions, OmdOptions};
use hmfg_core::{AlphaMode, KernelSpec, MfgProblem, MultiLayerHypergraphon, VertexKernelGrid};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub problem: ProblemConfig,
    pub layers: Vec<KernelSpec>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleConfig>,
    /// Default output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Free-form block, ignored on input. `run_meta.json` stores run details here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    FixedPoint,
    Omd,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub fixed_point: FixedPointOptions,
    pub omd: OmdOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    pub realizations: usize,
    pub seed: u64,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
}

/// Parses a config, reporting the JSON path of the first offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::config(e.path().to_string(), e.inner().to_string()))?;
    if config.version != CONFIG_VERSION {
        return Err(CliError::config(
            "version",
            format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                config.version
            ),
        ));
    }
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

/// A problem instance resolved from its config entry.
#[derive(Clone)]
pub enum Problem {
    Rumor(RumorParams),
    Sis(SisParams),
}

impl Problem {
    pub fn params_json(&self) -> Value {
        match self {
            Problem::Rumor(p) => serde_json::to_value(p),
            Problem::Sis(p) => serde_json::to_value(p),
        }
        .expect("problem parameters serialise")
    }
}

fn parse_params<T: serde::de::DeserializeOwned>(params: &Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(params).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            "problem.params".to_string()
        } else {
            format!("problem.params.{inner}")
        };
        CliError::config(path, e.inner().to_string())
    })
}

/// Everything a command needs, validated.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem_params: Problem,
    pub problem: Arc<dyn MfgProblem>,
    pub hypergraphon: MultiLayerHypergraphon,
    pub grids: Vec<VertexKernelGrid>,
}

impl Experiment {
    pub fn new(mut config: ExperimentConfig) -> Result<Self, CliError> {
        if config.m == 0 {
            return Err(CliError::config("M", "grid resolution must be >= 1"));
        }
        if config.layers.is_empty() {
            return Err(CliError::config("layers", "at least one layer is required"));
        }
        let layers = config
            .layers
            .iter()
            .enumerate()
            .map(|(d, spec)| {
                spec.build()
                    .map_err(|e| CliError::config(format!("layers[{d}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let hypergraphon = MultiLayerHypergraphon::new(layers)
            .map_err(|e| CliError::config("layers", e.to_string()))?;
        let cards = hypergraphon.cardinalities();
        let invalid = |e: hmfg_core::Error| CliError::config("problem.params", e.to_string());
        let (problem_params, problem): (Problem, Arc<dyn MfgProblem>) =
            match config.problem.name.as_str() {
                "rumor" => {
                    let p: RumorParams = parse_params(&config.problem.params)?;
                    (
                        Problem::Rumor(p.clone()),
                        Arc::new(rumor_problem(p, &cards).map_err(invalid)?),
                    )
                }
                "sis" => {
                    let p: SisParams = parse_params(&config.problem.params)?;
                    (
                        Problem::Sis(p.clone()),
                        Arc::new(sis_problem(p, &cards).map_err(invalid)?),
                    )
                }
                "custom" => {
                    return Err(CliError::config(
                        "problem.name",
                        "custom problems are only available through the library",
                    ))
                }
                other => {
                    return Err(CliError::config(
                        "problem.name",
                        format!("unknown problem `{other}`"),
                    ))
                }
            };
        if let Some(sim) = &config.simulation {
            if sim.n_list.is_empty() || sim.n_list.contains(&0) {
                return Err(CliError::config(
                    "simulation.N_list",
                    "sizes must be nonempty and positive",
                ));
            }
            if sim.realizations < 2 {
                return Err(CliError::config(
                    "simulation.realizations",
                    "at least 2 realizations are required",
                ));
            }
        }
        // store the fully resolved parameters so the config can be replayed
        config.problem.params = problem_params.params_json();
        let grids = hypergraphon.discretize(config.m);
        Ok(Experiment {
            config,
            problem_params,
            problem,
            hypergraphon,
            grids,
        })
    }

    pub fn simulation(&self) -> Result<&SimulationConfig, CliError> {
        self.config.simulation.as_ref().ok_or_else(|| {
            CliError::config("simulation", "this command needs a `simulation` block")
        })
    }

    pub fn sample(&self) -> Result<&SampleConfig, CliError> {
        self.config
            .sample
            .as_ref()
            .ok_or_else(|| CliError::config("sample", "this command needs a `sample` block"))
    }
}
