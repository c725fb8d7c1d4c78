//! Encoding state-action coupled problems on the extended state space
//! `X ∪ (X × U)`.

use crate::error::Result;
use crate::game::{LayerMeasure, MfgProblem, NeighborhoodMeanField};

/// A problem whose transitions and rewards read the neighbours' joint
/// state-action distribution. Its neighbourhood measures are over pair
/// symbols `x * n_actions + u`.
pub trait ActionCoupledProblem: Send + Sync {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn horizon(&self) -> usize;
    fn gamma(&self) -> f64 {
        1.0
    }
    fn layer_cards(&self) -> &[usize];
    fn initial(&self, alpha: f64) -> Vec<f64>;
    fn transition(&self, t: usize, x: usize, u: usize, nu: &NeighborhoodMeanField, out: &mut [f64]);
    fn reward(&self, t: usize, x: usize, u: usize, nu: &NeighborhoodMeanField) -> f64;
}

/// State-coupled encoding of an [`ActionCoupledProblem`].
///
/// States `0..S` are the base states, state `S + x * U + u` is the pair
/// `(x, u)`. A base state moves deterministically to the pair of the action
/// taken, with zero reward. A pair state `(x, u)` at epoch `t` applies the
/// base transition and reward of epoch `t / 2`, reading only the pair
/// components of the neighbourhood measure; the action taken there is
/// ignored. From base initial states, epochs alternate base/pair, so each
/// base epoch spans two extended ones. The discount is `sqrt(gamma)` and
/// rewards are divided by `sqrt(gamma)` so objectives coincide.
#[derive(Debug, Clone)]
pub struct ExtendedProblem<P> {
    base: P,
    sqrt_gamma: f64,
}

pub fn extend_state_space<P: ActionCoupledProblem>(base: P) -> ExtendedProblem<P> {
    let sqrt_gamma = base.gamma().sqrt();
    ExtendedProblem { base, sqrt_gamma }
}

impl<P: ActionCoupledProblem> ExtendedProblem<P> {
    pub fn base(&self) -> &P {
        &self.base
    }

    /// Extended index of the pair `(x, u)`.
    pub fn pair_state(&self, x: usize, u: usize) -> usize {
        self.base.n_states() + x * self.base.n_actions() + u
    }

    fn split_pair(&self, state: usize) -> Option<(usize, usize)> {
        let s = self.base.n_states();
        (state >= s).then(|| {
            (
                (state - s) / self.base.n_actions(),
                (state - s) % self.base.n_actions(),
            )
        })
    }

    /// Restricts an extended measure to pair components, relabelled as base pair symbols.
    pub fn project(&self, nu: &NeighborhoodMeanField) -> Result<NeighborhoodMeanField> {
        let s = self.base.n_states();
        let pairs = s * self.base.n_actions();
        let mut layers = Vec::with_capacity(nu.layers().len());
        for ext in nu.layers() {
            let arity = ext.arity();
            let mut base = LayerMeasure::zeros(arity, pairs);
            let mut tuple = vec![0usize; arity];
            for (off, v) in base.values_mut().iter_mut().enumerate() {
                let mut rest = off;
                for slot in tuple.iter_mut().rev() {
                    *slot = s + rest % pairs;
                    rest /= pairs;
                }
                *v = ext.get(&tuple);
            }
            layers.push(base);
        }
        Ok(NeighborhoodMeanField::new(layers))
    }
}

impl<P: ActionCoupledProblem> MfgProblem for ExtendedProblem<P> {
    fn n_states(&self) -> usize {
        self.base.n_states() * (1 + self.base.n_actions())
    }

    fn n_actions(&self) -> usize {
        self.base.n_actions()
    }

    fn horizon(&self) -> usize {
        2 * self.base.horizon()
    }

    fn gamma(&self) -> f64 {
        self.sqrt_gamma
    }

    fn layer_cards(&self) -> &[usize] {
        self.base.layer_cards()
    }

    fn initial(&self, alpha: f64) -> Vec<f64> {
        let mut mu = self.base.initial(alpha);
        mu.resize(self.n_states(), 0.0);
        mu
    }

    fn transition(
        &self,
        t: usize,
        x: usize,
        u: usize,
        nu: &NeighborhoodMeanField,
        out: &mut [f64],
    ) {
        out.fill(0.0);
        match self.split_pair(x) {
            None => out[self.pair_state(x, u)] = 1.0,
            Some((bx, bu)) => {
                let base_nu = self
                    .project(nu)
                    .expect("layer shapes come from the same problem");
                self.base
                    .transition(t / 2, bx, bu, &base_nu, &mut out[..self.base.n_states()]);
            }
        }
    }

    fn reward(&self, t: usize, x: usize, _u: usize, nu: &NeighborhoodMeanField) -> f64 {
        match self.split_pair(x) {
            None => 0.0,
            Some((bx, bu)) => {
                let base_nu = self
                    .project(nu)
                    .expect("layer shapes come from the same problem");
                self.base.reward(t / 2, bx, bu, &base_nu) / self.sqrt_gamma
            }
        }
    }
}
