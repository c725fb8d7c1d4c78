//! Mean field game problems coupled through neighbourhood mean fields.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

mod extend;
pub mod rumor;
pub mod sis;

pub use extend::{extend_state_space, ActionCoupledProblem, ExtendedProblem};
pub use rumor::{rumor_problem, Rumor, RumorInitial, RumorParams};
pub use sis::{sis_problem, Sis, SisParams};

/// Slack allowed on the total mass of a neighbourhood measure.
pub const MASS_SLACK: f64 = 1e-9;

/// A non-negative measure on `symbols^arity`, stored row-major with the
/// first slot most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMeasure {
    arity: usize,
    n_symbols: usize,
    values: Vec<f64>,
}

impl LayerMeasure {
    pub fn zeros(arity: usize, n_symbols: usize) -> Self {
        LayerMeasure {
            arity,
            n_symbols,
            values: vec![0.0; n_symbols.pow(arity as u32)],
        }
    }

    pub fn from_values(arity: usize, n_symbols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_symbols.pow(arity as u32) {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a measure on {}^{}",
                values.len(),
                n_symbols,
                arity
            )));
        }
        Ok(LayerMeasure {
            arity,
            n_symbols,
            values,
        })
    }

    /// `arity`-fold product of a single distribution.
    pub fn product(dist: &[f64], arity: usize) -> Self {
        let mut m = LayerMeasure::zeros(arity, dist.len());
        for (off, v) in m.values.iter_mut().enumerate() {
            let mut rest = off;
            let mut p = 1.0;
            for _ in 0..arity {
                p *= dist[rest % dist.len()];
                rest /= dist.len();
            }
            *v = p;
        }
        m
    }

    /// Number of neighbour slots, `k - 1`.
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn offset(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &x| acc * self.n_symbols + x)
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.values[self.offset(tuple)]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Expected number of neighbour slots holding each symbol:
    /// `out[x] = sum over tuples of nu(tuple) * #{slots r : tuple_r = x}`.
    pub fn slot_counts(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_symbols];
        for (off, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut rest = off;
            for _ in 0..self.arity {
                out[rest % self.n_symbols] += v;
                rest /= self.n_symbols;
            }
        }
        out
    }
}

/// Per-layer neighbourhood measures fed to transitions and rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodMeanField {
    layers: Vec<LayerMeasure>,
}

impl NeighborhoodMeanField {
    pub fn new(layers: Vec<LayerMeasure>) -> Self {
        NeighborhoodMeanField { layers }
    }

    /// Zero measure for the given layer cardinalities.
    pub fn zeros(layer_cards: &[usize], n_symbols: usize) -> Self {
        NeighborhoodMeanField {
            layers: layer_cards
                .iter()
                .map(|&k| LayerMeasure::zeros(k - 1, n_symbols))
                .collect(),
        }
    }

    pub fn layers(&self) -> &[LayerMeasure] {
        &self.layers
    }

    pub fn layer(&self, d: usize) -> &LayerMeasure {
        &self.layers[d]
    }

    pub fn masses(&self) -> Vec<f64> {
        self.layers.iter().map(LayerMeasure::mass).collect()
    }

    /// Checks non-negativity and the sub-probability bound on every layer.
    pub fn validate(&self) -> Result<()> {
        for (d, l) in self.layers.iter().enumerate() {
            if l.values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidProblem(format!(
                    "layer {d}: negative or non-finite mass"
                )));
            }
            if l.mass() > 1.0 + MASS_SLACK {
                return Err(Error::InvalidProblem(format!(
                    "layer {d}: total mass {} > 1",
                    l.mass()
                )));
            }
        }
        Ok(())
    }
}

/// A finite-horizon mean field game with neighbourhood coupling.
///
/// States and actions are `0..n_states()` and `0..n_actions()`; decision
/// epochs run over `0..horizon()`.
pub trait MfgProblem: Send + Sync {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn horizon(&self) -> usize;
    fn gamma(&self) -> f64 {
        1.0
    }
    /// Hyperedge cardinalities `k_d` of the layers the problem is coupled to.
    fn layer_cards(&self) -> &[usize];
    /// Initial state distribution of the agent at graphon index `alpha`.
    fn initial(&self, alpha: f64) -> Vec<f64>;
    /// Writes `P_t(. | x, u, nu)` into `out` (length `n_states()`).
    fn transition(&self, t: usize, x: usize, u: usize, nu: &NeighborhoodMeanField, out: &mut [f64]);
    fn reward(&self, t: usize, x: usize, u: usize, nu: &NeighborhoodMeanField) -> f64;

    fn state_labels(&self) -> Vec<String> {
        (0..self.n_states()).map(|x| x.to_string()).collect()
    }
    fn action_labels(&self) -> Vec<String> {
        (0..self.n_actions()).map(|u| u.to_string()).collect()
    }
}

impl<P: MfgProblem + ?Sized> MfgProblem for Arc<P> {
    fn n_states(&self) -> usize {
        (**self).n_states()
    }
    fn n_actions(&self) -> usize {
        (**self).n_actions()
    }
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn gamma(&self) -> f64 {
        (**self).gamma()
    }
    fn layer_cards(&self) -> &[usize] {
        (**self).layer_cards()
    }
    fn initial(&self, alpha: f64) -> Vec<f64> {
        (**self).initial(alpha)
    }
    fn transition(
        &self,
        t: usize,
        x: usize,
        u: usize,
        nu: &NeighborhoodMeanField,
        out: &mut [f64],
    ) {
        (**self).transition(t, x, u, nu, out)
    }
    fn reward(&self, t: usize, x: usize, u: usize, nu: &NeighborhoodMeanField) -> f64 {
        (**self).reward(t, x, u, nu)
    }
    fn state_labels(&self) -> Vec<String> {
        (**self).state_labels()
    }
    fn action_labels(&self) -> Vec<String> {
        (**self).action_labels()
    }
}

/// Checks that `P_t(. | x, u, nu)` is a probability vector within `1e-12`.
pub fn check_transition<P: MfgProblem + ?Sized>(
    problem: &P,
    t: usize,
    x: usize,
    u: usize,
    nu: &NeighborhoodMeanField,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; problem.n_states()];
    problem.transition(t, x, u, nu, &mut out);
    let sum: f64 = out.iter().sum();
    if out.iter().any(|&p| p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProblem(format!(
            "P_{t}(.|{x},{u}) = {out:?} is not a probability vector"
        )));
    }
    Ok(out)
}

type InitialFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
type TransitionFn =
    Arc<dyn Fn(usize, usize, usize, &NeighborhoodMeanField, &mut [f64]) + Send + Sync>;
type RewardFn = Arc<dyn Fn(usize, usize, usize, &NeighborhoodMeanField) -> f64 + Send + Sync>;

/// A problem assembled from closures; the entry point for custom problems.
#[derive(Clone)]
pub struct FnProblem {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    gamma: f64,
    layer_cards: Vec<usize>,
    initial: InitialFn,
    transition: TransitionFn,
    reward: RewardFn,
}

impl fmt::Debug for FnProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProblem")
            .field("n_states", &self.n_states)
            .field("n_actions", &self.n_actions)
            .field("horizon", &self.horizon)
            .field("gamma", &self.gamma)
            .field("layer_cards", &self.layer_cards)
            .finish()
    }
}

impl FnProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new<I, T, R>(
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        gamma: f64,
        layer_cards: Vec<usize>,
        initial: I,
        transition: T,
        reward: R,
    ) -> Result<Self>
    where
        I: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        T: Fn(usize, usize, usize, &NeighborhoodMeanField, &mut [f64]) + Send + Sync + 'static,
        R: Fn(usize, usize, usize, &NeighborhoodMeanField) -> f64 + Send + Sync + 'static,
    {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidProblem(
                "state and action spaces must be non-empty".into(),
            ));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "gamma".into(),
                value: gamma,
                expected: "(0, 1]",
            });
        }
        if layer_cards.iter().any(|&k| k < 2) {
            return Err(Error::InvalidProblem(
                "layer cardinalities must be >= 2".into(),
            ));
        }
        Ok(FnProblem {
            n_states,
            n_actions,
            horizon,
            gamma,
            layer_cards,
            initial: Arc::new(initial),
            transition: Arc::new(transition),
            reward: Arc::new(reward),
        })
    }
}

impl MfgProblem for FnProblem {
    fn n_states(&self) -> usize {
        self.n_states
    }
    fn n_actions(&self) -> usize {
        self.n_actions
    }
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
    fn layer_cards(&self) -> &[usize] {
        &self.layer_cards
    }
    fn initial(&self, alpha: f64) -> Vec<f64> {
        (self.initial)(alpha)
    }
    fn transition(
        &self,
        t: usize,
        x: usize,
        u: usize,
        nu: &NeighborhoodMeanField,
        out: &mut [f64],
    ) {
        (self.transition)(t, x, u, nu, out)
    }
    fn reward(&self, t: usize, x: usize, u: usize, nu: &NeighborhoodMeanField) -> f64 {
        (self.reward)(t, x, u, nu)
    }
}

pub(crate) fn check_nonnegative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name: name.to_string(),
            value,
            expected: ">= 0",
        })
    }
}

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name: name.to_string(),
            value,
            expected: "[0, 1]",
        })
    }
}
