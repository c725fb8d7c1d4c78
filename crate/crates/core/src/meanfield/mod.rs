//! Grid-discretised mean fields, policies and the equilibrium solvers.
//!
//! Graphon indices are discretised into `M` equal subintervals represented by
//! their midpoints; grid point `i` stands for `(i + 1/2) / M`.

use crate::error::{Error, Result};

mod iteration;
mod neighborhood;
mod solver;

pub use iteration::{
    fixed_point_iteration, omd_iteration, FixedPointOptions, FixedPointResult,
    IterationDiagnostics, OmdOptions, OmdResult,
};
pub use neighborhood::{neighborhood_mf, NeighborhoodCache};
pub use solver::{
    best_response, best_response_cached, evaluate_policy, exploitability, forward_propagate,
    propagate,
};

/// `mu^{alpha_i}_t` for every grid point `i` and time `t` in `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldEnsemble {
    m: usize,
    horizon: usize,
    n_states: usize,
    data: Vec<f64>,
}

impl MeanFieldEnsemble {
    pub fn zeros(m: usize, horizon: usize, n_states: usize) -> Self {
        MeanFieldEnsemble {
            m,
            horizon,
            n_states,
            data: vec![0.0; m * (horizon + 1) * n_states],
        }
    }

    /// Builds an ensemble from `f(i, t) -> distribution`.
    pub fn from_fn(
        m: usize,
        horizon: usize,
        n_states: usize,
        mut f: impl FnMut(usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let mut mf = MeanFieldEnsemble::zeros(m, horizon, n_states);
        for i in 0..m {
            for t in 0..=horizon {
                let dist = f(i, t);
                if dist.len() != n_states {
                    return Err(Error::ShapeMismatch(format!(
                        "distribution of length {}",
                        dist.len()
                    )));
                }
                mf.get_mut(i, t).copy_from_slice(&dist);
            }
        }
        Ok(mf)
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn get(&self, i: usize, t: usize) -> &[f64] {
        let off = (i * (self.horizon + 1) + t) * self.n_states;
        &self.data[off..off + self.n_states]
    }

    pub fn get_mut(&mut self, i: usize, t: usize) -> &mut [f64] {
        let off = (i * (self.horizon + 1) + t) * self.n_states;
        &mut self.data[off..off + self.n_states]
    }

    /// The distributions of all grid points at time `t`, flattened as `j * S + x`.
    pub fn slice_at(&self, t: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.m * self.n_states);
        for i in 0..self.m {
            out.extend_from_slice(self.get(i, t));
        }
        out
    }

    /// `M^{-1} sum_i mu^{alpha_i}_t`.
    pub fn aggregate(&self, t: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states];
        for i in 0..self.m {
            for (o, v) in out.iter_mut().zip(self.get(i, t)) {
                *o += v;
            }
        }
        let m = self.m as f64;
        out.iter_mut().for_each(|o| *o /= m);
        out
    }

    /// Convex combination `(1 - w) * self + w * other`.
    pub fn mix(&self, other: &MeanFieldEnsemble, w: f64) -> Result<MeanFieldEnsemble> {
        check_same_shape(self, other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = (1.0 - w) * *a + w * b;
        }
        Ok(out)
    }

    /// Maximum deviation of any distribution from unit mass, and the most negative entry.
    pub fn normalisation_error(&self) -> (f64, f64) {
        let mut worst_sum: f64 = 0.0;
        let mut min_entry = f64::INFINITY;
        for chunk in self.data.chunks(self.n_states) {
            worst_sum = worst_sum.max((chunk.iter().sum::<f64>() - 1.0).abs());
            min_entry = chunk.iter().copied().fold(min_entry, f64::min);
        }
        (worst_sum, min_entry)
    }
}

fn check_same_shape(a: &MeanFieldEnsemble, b: &MeanFieldEnsemble) -> Result<()> {
    if (a.m, a.horizon, a.n_states) != (b.m, b.horizon, b.n_states) {
        return Err(Error::ShapeMismatch(format!(
            "mean fields of shape (M={}, T={}, S={}) and (M={}, T={}, S={})",
            a.m, a.horizon, a.n_states, b.m, b.horizon, b.n_states
        )));
    }
    Ok(())
}

/// Aggregate L1 distance `sum_x sum_t | mean_i a^i_t(x) - mean_i b^i_t(x) |`.
///
/// The absolute value is taken after averaging over grid points. The two
/// ensembles must agree in horizon and state count; their resolutions may differ.
pub fn mf_distance(a: &MeanFieldEnsemble, b: &MeanFieldEnsemble) -> Result<f64> {
    if (a.horizon, a.n_states) != (b.horizon, b.n_states) {
        return Err(Error::ShapeMismatch(format!(
            "mean fields with (T={}, S={}) and (T={}, S={})",
            a.horizon, a.n_states, b.horizon, b.n_states
        )));
    }
    let mut total = 0.0;
    for t in 0..=a.horizon {
        let (pa, pb) = (a.aggregate(t), b.aggregate(t));
        total += pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>();
    }
    Ok(total)
}

/// `pi^{alpha_i}_t(u | x)` for every grid point, epoch `t < T` and state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEnsemble {
    m: usize,
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    data: Vec<f64>,
}

impl PolicyEnsemble {
    pub fn uniform(m: usize, horizon: usize, n_states: usize, n_actions: usize) -> Self {
        PolicyEnsemble {
            m,
            horizon,
            n_states,
            n_actions,
            data: vec![1.0 / n_actions as f64; m * horizon * n_states * n_actions],
        }
    }

    /// Deterministic policy choosing `f(i, t, x)`.
    pub fn deterministic(
        m: usize,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        mut f: impl FnMut(usize, usize, usize) -> usize,
    ) -> Self {
        let mut p = PolicyEnsemble {
            m,
            horizon,
            n_states,
            n_actions,
            data: vec![0.0; m * horizon * n_states * n_actions],
        };
        for i in 0..m {
            for t in 0..horizon {
                for x in 0..n_states {
                    let u = f(i, t, x);
                    p.probs_mut(i, t, x)[u] = 1.0;
                }
            }
        }
        p
    }

    /// Builds a policy from `f(i, t, x) -> action distribution`, checking normalisation.
    pub fn from_fn(
        m: usize,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        mut f: impl FnMut(usize, usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let mut p = PolicyEnsemble::uniform(m, horizon, n_states, n_actions);
        for i in 0..m {
            for t in 0..horizon {
                for x in 0..n_states {
                    let probs = f(i, t, x);
                    let sum: f64 = probs.iter().sum();
                    if probs.len() != n_actions
                        || probs.iter().any(|&q| q < 0.0)
                        || (sum - 1.0).abs() > 1e-12
                    {
                        return Err(Error::ShapeMismatch(format!(
                            "pi at (i={i}, t={t}, x={x}) = {probs:?} is not a distribution over {n_actions} actions"
                        )));
                    }
                    p.probs_mut(i, t, x).copy_from_slice(&probs);
                }
            }
        }
        Ok(p)
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn offset(&self, i: usize, t: usize, x: usize) -> usize {
        ((i * self.horizon + t) * self.n_states + x) * self.n_actions
    }

    pub fn probs(&self, i: usize, t: usize, x: usize) -> &[f64] {
        let off = self.offset(i, t, x);
        &self.data[off..off + self.n_actions]
    }

    pub fn probs_mut(&mut self, i: usize, t: usize, x: usize) -> &mut [f64] {
        let off = self.offset(i, t, x);
        &mut self.data[off..off + self.n_actions]
    }

    /// Table of grid point `i`, flattened as `(t * S + x) * U + u`.
    pub fn table(&self, i: usize) -> &[f64] {
        let len = self.horizon * self.n_states * self.n_actions;
        &self.data[i * len..(i + 1) * len]
    }

    pub(crate) fn table_mut(&mut self, i: usize) -> &mut [f64] {
        let len = self.horizon * self.n_states * self.n_actions;
        &mut self.data[i * len..(i + 1) * len]
    }

    pub(crate) fn tables_mut(&mut self) -> std::slice::ChunksMut<'_, f64> {
        let len = self.horizon * self.n_states * self.n_actions;
        self.data.chunks_mut(len.max(1))
    }

    /// The action chosen with probability one, if the policy is deterministic there.
    pub fn deterministic_action(&self, i: usize, t: usize, x: usize) -> Option<usize> {
        self.probs(i, t, x).iter().position(|&p| p == 1.0)
    }
}

/// Optimal values `V_t(x)` for `t` in `0..=T` and action values `Q_t(x, u)`
/// for `t < T`, per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    m: usize,
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    v: Vec<f64>,
    q: Vec<f64>,
}

impl ValueTable {
    pub(crate) fn from_parts(
        m: usize,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        v: Vec<f64>,
        q: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(v.len(), m * (horizon + 1) * n_states);
        debug_assert_eq!(q.len(), m * horizon * n_states * n_actions);
        ValueTable {
            m,
            horizon,
            n_states,
            n_actions,
            v,
            q,
        }
    }

    pub fn v(&self, i: usize, t: usize, x: usize) -> f64 {
        self.v[(i * (self.horizon + 1) + t) * self.n_states + x]
    }

    pub fn q(&self, i: usize, t: usize, x: usize, u: usize) -> f64 {
        self.q[((i * self.horizon + t) * self.n_states + x) * self.n_actions + u]
    }

    pub fn q_row(&self, i: usize, t: usize, x: usize) -> &[f64] {
        let off = ((i * self.horizon + t) * self.n_states + x) * self.n_actions;
        &self.q[off..off + self.n_actions]
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// All action values, laid out like [`PolicyEnsemble`] entries.
    pub(crate) fn q_values(&self) -> &[f64] {
        &self.q
    }

    /// `sum_x mu0(x) V_0(x)` at grid point `i`.
    pub fn initial_value(&self, i: usize, mu0: &[f64]) -> f64 {
        mu0.iter()
            .enumerate()
            .map(|(x, p)| p * self.v(i, 0, x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_of_identical_fields_is_zero() {
        let a = MeanFieldEnsemble::from_fn(3, 2, 2, |i, t| {
            vec![0.1 * i as f64, 1.0 - 0.1 * i as f64 + 0.0 * t as f64]
        })
        .unwrap();
        assert_eq!(mf_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn distance_between_opposite_point_masses() {
        let a = MeanFieldEnsemble::from_fn(2, 1, 2, |_, _| vec![1.0, 0.0]).unwrap();
        let b = MeanFieldEnsemble::from_fn(2, 1, 2, |_, _| vec![0.0, 1.0]).unwrap();
        assert_eq!(mf_distance(&a, &b).unwrap(), 4.0);
    }

    #[test]
    fn distance_shape_mismatch() {
        let a = MeanFieldEnsemble::zeros(2, 1, 2);
        let b = MeanFieldEnsemble::zeros(2, 2, 2);
        assert!(matches!(mf_distance(&a, &b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn policy_constructors() {
        let p = PolicyEnsemble::deterministic(2, 3, 2, 3, |i, t, x| (i + t + x) % 3);
        assert_eq!(p.probs(1, 2, 1), &[0.0, 1.0, 0.0]);
        assert_eq!(p.deterministic_action(0, 1, 0), Some(1));
        assert!(PolicyEnsemble::from_fn(1, 1, 1, 2, |_, _, _| vec![0.5, 0.6]).is_err());
        let u = PolicyEnsemble::uniform(1, 1, 1, 4);
        assert_eq!(u.deterministic_action(0, 0, 0), None);
    }
}
