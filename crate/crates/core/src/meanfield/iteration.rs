//! Equilibrium learning: fixed-point iteration and online mirror descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MfgProblem;
use crate::kernels::VertexKernelGrid;
use crate::meanfield::neighborhood::NeighborhoodCache;
use crate::meanfield::solver::{
    best_response_cached, evaluate_policy, exploitability_from_values, propagate,
};
use crate::meanfield::{mf_distance, MeanFieldEnsemble, PolicyEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointOptions {
    /// Maximum number of best-response steps.
    pub iterations: usize,
    /// Weight of the previous mean field when mixing, in `[0, 1)`.
    pub damping: f64,
    /// Stop once the current policy's exploitability is at most this.
    pub tolerance: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            iterations: 200,
            damping: 0.0,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    /// Exploitability of the policy evaluated in this iteration.
    pub exploitability: f64,
    /// Distance between this iteration's induced mean field and the previous one.
    pub mf_distance_to_previous: Option<f64>,
    /// Whether the next policy differs from this one.
    pub policy_changed: bool,
}

#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub policy: PolicyEnsemble,
    /// Mean field induced by `policy`.
    pub mean_field: MeanFieldEnsemble,
    pub diagnostics: Vec<IterationDiagnostics>,
    pub converged: bool,
}

impl FixedPointResult {
    pub fn final_exploitability(&self) -> f64 {
        self.diagnostics
            .last()
            .map_or(f64::NAN, |d| d.exploitability)
    }
}

/// Alternates `mu <- Psi(pi)` and `pi <- best response(mu)`.
///
/// Row `n` of the diagnostics evaluates the `n`-th policy (row 0 is
/// `init_policy`), so at most `iterations + 1` rows are produced and the
/// last row always describes the returned pair. With `damping = w > 0` the
/// best response is taken against `(1 - w) Psi(pi) + w mu_prev`, where
/// `mu_prev` is the previously mixed mean field; exploitability is always
/// measured against `Psi(pi)` itself. Convergence is not guaranteed; the
/// diagnostics expose oscillation.
pub fn fixed_point_iteration<P: MfgProblem + ?Sized>(
    problem: &P,
    grids: &[VertexKernelGrid],
    init_policy: &PolicyEnsemble,
    options: &FixedPointOptions,
) -> Result<FixedPointResult> {
    if !(0.0..1.0).contains(&options.damping) {
        return Err(Error::ParameterOutOfRange {
            name: "damping".into(),
            value: options.damping,
            expected: "[0, 1)",
        });
    }
    let m = init_policy.resolution();
    let mut policy = init_policy.clone();
    let mut previous: Option<MeanFieldEnsemble> = None;
    let mut mixed: Option<MeanFieldEnsemble> = None;
    let mut diagnostics = Vec::new();
    for n in 0..=options.iterations {
        let (mf, cache) = propagate(problem, grids, &policy)?;
        let (response, best) = best_response_cached(problem, &cache, m);
        let current = evaluate_policy(problem, &cache, &policy)?;
        let gap = exploitability_from_values(problem, &best, &current, m)?;
        let distance = previous.as_ref().map(|p| mf_distance(&mf, p)).transpose()?;

        let next = if options.damping > 0.0 {
            let target = match &mixed {
                Some(old) => mf.mix(old, options.damping)?,
                None => mf.clone(),
            };
            let cache = NeighborhoodCache::from_mean_field(grids, &target)?;
            mixed = Some(target);
            best_response_cached(problem, &cache, m).0
        } else {
            response
        };
        let changed = next != policy;
        diagnostics.push(IterationDiagnostics {
            iteration: n,
            exploitability: gap,
            mf_distance_to_previous: distance,
            policy_changed: changed,
        });
        let converged = gap <= options.tolerance;
        if converged || n == options.iterations {
            return Ok(FixedPointResult {
                policy,
                mean_field: mf,
                diagnostics,
                converged,
            });
        }
        policy = next;
        previous = Some(mf);
    }
    unreachable!("the loop returns on its last iteration")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmdOptions {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Softmax temperature, held constant.
    pub temperature: f64,
}

impl Default for OmdOptions {
    fn default() -> Self {
        OmdOptions {
            iterations: 2000,
            learning_rate: 1.0,
            temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OmdResult {
    pub policy: PolicyEnsemble,
    pub mean_field: MeanFieldEnsemble,
    /// Exploitability of the policy at each iteration, starting with the uniform one.
    pub exploitability: Vec<f64>,
}

/// Online mirror descent on cumulative action values.
///
/// Starting from `y = 0`, each iteration evaluates `Q^pi` under the mean
/// field induced by the current policy, accumulates `y += eta * Q^pi` and
/// sets `pi = softmax(y / temperature)` per grid point, epoch and state.
pub fn omd_iteration<P: MfgProblem + ?Sized>(
    problem: &P,
    grids: &[VertexKernelGrid],
    m: usize,
    options: &OmdOptions,
) -> Result<OmdResult> {
    if options.learning_rate.is_nan() || options.learning_rate <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "learning_rate".into(),
            value: options.learning_rate,
            expected: "> 0",
        });
    }
    if options.temperature.is_nan() || options.temperature <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "temperature".into(),
            value: options.temperature,
            expected: "> 0",
        });
    }
    let (horizon, s, n_actions) = (problem.horizon(), problem.n_states(), problem.n_actions());
    let mut preferences = vec![0.0; m * horizon * s * n_actions];
    let mut policy = PolicyEnsemble::uniform(m, horizon, s, n_actions);
    let mut trace = Vec::with_capacity(options.iterations + 1);
    for n in 0..=options.iterations {
        let (mf, cache) = propagate(problem, grids, &policy)?;
        let (_, best) = best_response_cached(problem, &cache, m);
        let current = evaluate_policy(problem, &cache, &policy)?;
        trace.push(exploitability_from_values(problem, &best, &current, m)?);
        if n == options.iterations {
            return Ok(OmdResult {
                policy,
                mean_field: mf,
                exploitability: trace,
            });
        }
        for (y, q) in preferences.iter_mut().zip(current.q_values()) {
            *y += options.learning_rate * q;
        }
        policy = softmax_policy(&preferences, m, horizon, s, n_actions, options.temperature);
    }
    unreachable!("the loop returns on its last iteration")
}

pub(crate) fn softmax_policy(
    preferences: &[f64],
    m: usize,
    horizon: usize,
    s: usize,
    n_actions: usize,
    temperature: f64,
) -> PolicyEnsemble {
    let mut policy = PolicyEnsemble::uniform(m, horizon, s, n_actions);
    for table in policy.tables_mut() {
        table.fill(0.0);
    }
    for i in 0..m {
        for t in 0..horizon {
            for x in 0..s {
                let off = ((i * horizon + t) * s + x) * n_actions;
                let logits = &preferences[off..off + n_actions];
                let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let probs = policy.probs_mut(i, t, x);
                let mut z = 0.0;
                for (p, &l) in probs.iter_mut().zip(logits) {
                    *p = ((l - top) / temperature).exp();
                    z += *p;
                }
                probs.iter_mut().for_each(|p| *p /= z);
            }
        }
    }
    policy
}
