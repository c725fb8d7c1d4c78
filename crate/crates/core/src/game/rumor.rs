//! Rumor spreading with intrinsic motivation to spread.
//!
//! Agents are ignorant (`I`) or aware (`A`) and choose to refrain (`S̄`) or
//! spread (`S`). Because infection depends on the neighbours' actions, the
//! problem lives directly on the extended space
//!
//! | index | state    |
//! |-------|----------|
//! | 0     | `I`      |
//! | 1     | `A`      |
//! | 2     | `(I, S̄)` |
//! | 3     | `(I, S)` |
//! | 4     | `(A, S̄)` |
//! | 5     | `(A, S)` |
//!
//! with actions `0 = S̄`, `1 = S`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{check_nonnegative, check_probability, MfgProblem, NeighborhoodMeanField};

pub const IGNORANT: usize = 0;
pub const AWARE: usize = 1;
pub const REFRAIN: usize = 0;
pub const SPREAD: usize = 1;

/// Extended index of the pair `(x, u)` for a base state `x`.
pub const fn pair(x: usize, u: usize) -> usize {
    2 + 2 * x + u
}

/// Base component (`IGNORANT` or `AWARE`) of an extended state.
pub const fn base_state(state: usize) -> usize {
    if state < 2 {
        state
    } else {
        (state - 2) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RumorInitial {
    /// `mu0(A) = aware` for every agent.
    #[default]
    Constant,
    /// `mu0(A) = 1` iff `alpha > 0.5`.
    UpperHalf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RumorParams {
    /// Per-layer infection weights.
    pub tau: Vec<f64>,
    /// Per-layer reward for reaching an ignorant neighbour.
    pub r: Vec<f64>,
    /// Per-layer penalty for reaching an aware neighbour.
    pub c: Vec<f64>,
    pub mu0_aware: f64,
    pub horizon: usize,
    pub initial: RumorInitial,
}

impl Default for RumorParams {
    fn default() -> Self {
        RumorParams {
            tau: vec![0.3, 0.5],
            r: vec![0.5, 0.5],
            c: vec![0.8, 0.8],
            mu0_aware: 0.01,
            horizon: 50,
            initial: RumorInitial::Constant,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rumor {
    params: RumorParams,
    layer_cards: Vec<usize>,
}

pub fn rumor_problem(params: RumorParams, layer_cards: &[usize]) -> Result<Rumor> {
    let d = layer_cards.len();
    for (name, v) in [("tau", &params.tau), ("r", &params.r), ("c", &params.c)] {
        if v.len() != d {
            return Err(Error::InvalidProblem(format!(
                "`{name}` has {} entries for {d} layer(s)",
                v.len()
            )));
        }
        for &x in v {
            check_nonnegative(name, x)?;
        }
    }
    check_probability("mu0_aware", params.mu0_aware)?;
    if params.horizon == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "horizon".into(),
            value: 0.0,
            expected: ">= 1",
        });
    }
    if layer_cards.iter().any(|&k| k < 2) {
        return Err(Error::InvalidProblem(
            "layer cardinalities must be >= 2".into(),
        ));
    }
    Ok(Rumor {
        params,
        layer_cards: layer_cards.to_vec(),
    })
}

impl Rumor {
    pub fn params(&self) -> &RumorParams {
        &self.params
    }

    /// `min(1, sum_d tau_d * E_nu_d[# neighbour slots in (A, S)])`.
    pub fn infection_probability(&self, nu: &NeighborhoodMeanField) -> f64 {
        let total: f64 = nu
            .layers()
            .iter()
            .zip(&self.params.tau)
            .map(|(layer, tau)| tau * layer.slot_counts()[pair(AWARE, SPREAD)])
            .sum();
        total.min(1.0)
    }

    /// Reward of a spreading aware agent: per layer, `r_d` for every
    /// neighbour slot whose base state is ignorant, minus `c_d` for every
    /// slot whose base state is aware.
    pub fn spreading_reward(&self, nu: &NeighborhoodMeanField) -> f64 {
        nu.layers()
            .iter()
            .enumerate()
            .map(|(d, layer)| {
                let counts = layer.slot_counts();
                let (mut ignorant, mut aware) = (0.0, 0.0);
                for (state, c) in counts.iter().enumerate() {
                    if base_state(state) == IGNORANT {
                        ignorant += c;
                    } else {
                        aware += c;
                    }
                }
                self.params.r[d] * ignorant - self.params.c[d] * aware
            })
            .sum()
    }
}

impl MfgProblem for Rumor {
    fn n_states(&self) -> usize {
        6
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn layer_cards(&self) -> &[usize] {
        &self.layer_cards
    }

    fn initial(&self, alpha: f64) -> Vec<f64> {
        let aware = match self.params.initial {
            RumorInitial::Constant => self.params.mu0_aware,
            RumorInitial::UpperHalf => {
                if alpha > 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        vec![1.0 - aware, aware, 0.0, 0.0, 0.0, 0.0]
    }

    fn transition(
        &self,
        _t: usize,
        x: usize,
        u: usize,
        nu: &NeighborhoodMeanField,
        out: &mut [f64],
    ) {
        out.fill(0.0);
        match x {
            IGNORANT | AWARE => out[pair(x, u)] = 1.0,
            _ if base_state(x) == AWARE => out[AWARE] = 1.0,
            _ => {
                let p = self.infection_probability(nu);
                out[AWARE] = p;
                out[IGNORANT] = 1.0 - p;
            }
        }
    }

    fn reward(&self, _t: usize, x: usize, _u: usize, nu: &NeighborhoodMeanField) -> f64 {
        if x == pair(AWARE, SPREAD) {
            self.spreading_reward(nu)
        } else {
            0.0
        }
    }

    fn state_labels(&self) -> Vec<String> {
        ["I", "A", "I,refrain", "I,spread", "A,refrain", "A,spread"]
            .map(String::from)
            .to_vec()
    }

    fn action_labels(&self) -> Vec<String> {
        vec!["refrain".into(), "spread".into()]
    }
}
