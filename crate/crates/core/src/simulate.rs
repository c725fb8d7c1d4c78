//! Finite N-agent games on sampled hypergraphs.
//!
//! Agents are indexed `0..N` here; agent `i` corresponds to the interval
//! `(i / N, (i + 1) / N]` of the unit interval.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{LayerMeasure, MfgProblem, NeighborhoodMeanField};
use crate::hypergraphs::{AlphaMode, MultiLayerHypergraph};
use crate::kernels::{for_each_permutation, grid_point, MultiLayerHypergraphon};
use crate::meanfield::{MeanFieldEnsemble, PolicyEnsemble};
use crate::seeding::mix;

/// The policy followed by one agent: the table of a single grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentPolicy {
    grid_index: usize,
    alpha: f64,
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    table: Arc<[f64]>,
}

impl AgentPolicy {
    /// The policy of grid point `i`; the agent's initial distribution is taken at that point.
    pub fn from_ensemble(policy: &PolicyEnsemble, i: usize) -> Self {
        AgentPolicy {
            grid_index: i,
            alpha: grid_point(i, policy.resolution()),
            horizon: policy.horizon(),
            n_states: policy.n_states(),
            n_actions: policy.n_actions(),
            table: policy.table(i).into(),
        }
    }

    pub fn grid_index(&self) -> usize {
        self.grid_index
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn probs(&self, t: usize, x: usize) -> &[f64] {
        let off = (t * self.n_states + x) * self.n_actions;
        &self.table[off..off + self.n_actions]
    }

    fn check_shape<P: MfgProblem + ?Sized>(&self, problem: &P) -> Result<()> {
        let expected = (problem.horizon(), problem.n_states(), problem.n_actions());
        let got = (self.horizon, self.n_states, self.n_actions);
        if got != expected {
            return Err(Error::ShapeMismatch(format!(
                "agent policy with (T, S, U) = {got:?}, problem has {expected:?}"
            )));
        }
        Ok(())
    }
}

/// Grid point whose interval contains `(agent + 1) / n`, i.e. `ceil((agent + 1) M / n) - 1`.
pub fn shared_grid_index(agent: usize, n: usize, m: usize) -> usize {
    ((agent + 1) * m).div_ceil(n) - 1
}

/// Gives every agent the policy of the grid point enclosing its interval's right endpoint.
pub fn share_policy(policy: &PolicyEnsemble, n: usize) -> Vec<AgentPolicy> {
    let m = policy.resolution();
    let tables: Vec<AgentPolicy> = (0..m)
        .map(|i| AgentPolicy::from_ensemble(policy, i))
        .collect();
    (0..n)
        .map(|a| tables[shared_grid_index(a, n, m)].clone())
        .collect()
}

/// Realised trajectories of one finite game.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    hypergraph: Arc<MultiLayerHypergraph>,
    /// `states[t][i]` for `t` in `0..=T`.
    states: Vec<Vec<usize>>,
    /// `actions[t][i]` for `t` in `0..T`.
    actions: Vec<Vec<usize>>,
    n_states: usize,
    seed: u64,
}

impl SimulationRun {
    pub fn hypergraph(&self) -> &MultiLayerHypergraph {
        &self.hypergraph
    }

    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn n_agents(&self) -> usize {
        self.hypergraph.n()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn states(&self, t: usize) -> &[usize] {
        &self.states[t]
    }

    pub fn actions(&self, t: usize) -> &[usize] {
        &self.actions[t]
    }

    /// Fraction of agents in each state at time `t`.
    pub fn empirical_distribution(&self, t: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_states];
        for &x in &self.states[t] {
            out[x] += 1.0;
        }
        let n = self.n_agents() as f64;
        out.iter_mut().for_each(|v| *v /= n);
        out
    }
}

fn layer_scale(n: usize, k: usize) -> f64 {
    (n as f64).powi(k as i32 - 1).recip()
}

/// `nu^{N,i}_{t,d} = N^{-(k_d - 1)} sum` over ordered incident tuples of the
/// point mass at the neighbours' states.
pub fn empirical_neighborhood_mf(
    run: &SimulationRun,
    agent: usize,
    t: usize,
) -> Result<NeighborhoodMeanField> {
    let h = &run.hypergraph;
    if agent >= h.n() || t > run.horizon() {
        return Err(Error::ShapeMismatch(format!(
            "agent {agent} / time {t} outside (N={}, T={})",
            h.n(),
            run.horizon()
        )));
    }
    let states = &run.states[t];
    let s = run.n_states;
    let mut layers = Vec::with_capacity(h.layers().len());
    for d in 0..h.layers().len() {
        let k = h.layers()[d].k();
        let mut counts = LayerMeasure::zeros(k - 1, s);
        for tuple in h.incident_tuples(agent, d)? {
            let symbols: Vec<usize> = tuple.iter().map(|&v| states[v]).collect();
            let off = counts.offset(&symbols);
            counts.values_mut()[off] += 1.0;
        }
        let scale = layer_scale(h.n(), k);
        counts.values_mut().iter_mut().for_each(|v| *v *= scale);
        layers.push(counts);
    }
    Ok(NeighborhoodMeanField::new(layers))
}

/// Empirical neighbourhood mean fields of all agents, accumulated edge by edge.
pub fn all_empirical_neighborhood_mfs(
    h: &MultiLayerHypergraph,
    states: &[usize],
    n_states: usize,
) -> Vec<NeighborhoodMeanField> {
    let n = h.n();
    let per_layer: Vec<Vec<LayerMeasure>> = h
        .layers()
        .iter()
        .map(|layer| {
            let k = layer.k();
            let mut counts = vec![LayerMeasure::zeros(k - 1, n_states); n];
            let mut others = Vec::with_capacity(k - 1);
            let mut symbols = vec![0; k - 1];
            for edge in layer.edges() {
                for &v in edge {
                    others.clear();
                    others.extend(edge.iter().copied().filter(|&w| w != v));
                    let target = &mut counts[v];
                    for_each_permutation(&others, |p| {
                        for (sym, &w) in symbols.iter_mut().zip(p) {
                            *sym = states[w];
                        }
                        let off = target.offset(&symbols);
                        target.values_mut()[off] += 1.0;
                    });
                }
            }
            let scale = layer_scale(n, k);
            for c in &mut counts {
                c.values_mut().iter_mut().for_each(|v| *v *= scale);
            }
            counts
        })
        .collect();
    (0..n)
        .map(|i| NeighborhoodMeanField::new(per_layer.iter().map(|l| l[i].clone()).collect()))
        .collect()
}

fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding left u above the total: take the last state with mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Simulates the finite game on `h` with one policy per agent.
///
/// Initial states are drawn from `mu0` at each agent's policy grid point.
/// At every epoch all actions are drawn first (in agent order), then all
/// neighbourhood mean fields are formed from the current states, then all
/// next states are drawn. The optional deviator replaces one agent's policy
/// but keeps its initial distribution.
pub fn simulate_game<P: MfgProblem + ?Sized>(
    problem: &P,
    h: Arc<MultiLayerHypergraph>,
    policies: &[AgentPolicy],
    deviator: Option<(usize, &AgentPolicy)>,
    seed: u64,
) -> Result<SimulationRun> {
    let n = h.n();
    if policies.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} policies for {n} agents",
            policies.len()
        )));
    }
    let cards: Vec<usize> = h.layers().iter().map(|l| l.k()).collect();
    if cards != problem.layer_cards() {
        return Err(Error::ShapeMismatch(format!(
            "hypergraph layers {cards:?}, problem expects {:?}",
            problem.layer_cards()
        )));
    }
    for p in policies {
        p.check_shape(problem)?;
    }
    if let Some((agent, p)) = deviator {
        if agent >= n {
            return Err(Error::ShapeMismatch(format!(
                "deviating agent {agent} of {n}"
            )));
        }
        p.check_shape(problem)?;
    }
    let acting = |i: usize| match deviator {
        Some((a, p)) if a == i => p,
        _ => &policies[i],
    };

    let (s, horizon) = (problem.n_states(), problem.horizon());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: Vec<usize> = policies
        .iter()
        .map(|p| sample_categorical(&mut rng, &problem.initial(p.alpha())))
        .collect();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    states.push(initial);
    let mut next_dist = vec![0.0; s];
    for t in 0..horizon {
        let current = &states[t];
        let u: Vec<usize> = (0..n)
            .map(|i| sample_categorical(&mut rng, acting(i).probs(t, current[i])))
            .collect();
        let nus = all_empirical_neighborhood_mfs(&h, current, s);
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            problem.transition(t, current[i], u[i], &nus[i], &mut next_dist);
            next.push(sample_categorical(&mut rng, &next_dist));
        }
        actions.push(u);
        states.push(next);
    }
    Ok(SimulationRun {
        hypergraph: h,
        states,
        actions,
        n_states: s,
        seed,
    })
}

/// Discounted realised return of every agent.
pub fn realized_returns<P: MfgProblem + ?Sized>(problem: &P, run: &SimulationRun) -> Vec<f64> {
    let mut out = vec![0.0; run.n_agents()];
    let mut discount = 1.0;
    for t in 0..run.horizon() {
        let nus = all_empirical_neighborhood_mfs(&run.hypergraph, &run.states[t], run.n_states);
        for (i, total) in out.iter_mut().enumerate() {
            *total += discount * problem.reward(t, run.states[t][i], run.actions[t][i], &nus[i]);
        }
        discount *= problem.gamma();
    }
    out
}

/// `sum_t sum_x | empirical[t][x] - M^{-1} sum_i mu^{alpha_i}_t(x) |`.
pub fn delta_mu_between(empirical: &[Vec<f64>], mf: &MeanFieldEnsemble) -> Result<f64> {
    if empirical.len() != mf.horizon() + 1 || empirical.iter().any(|e| e.len() != mf.n_states()) {
        return Err(Error::ShapeMismatch(format!(
            "{} empirical distributions against a mean field with T={}, S={}",
            empirical.len(),
            mf.horizon(),
            mf.n_states()
        )));
    }
    let mut total = 0.0;
    for (t, e) in empirical.iter().enumerate() {
        total += e
            .iter()
            .zip(mf.aggregate(t))
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    }
    Ok(total)
}

/// Aggregate distance between a run's empirical state distributions and the mean field.
pub fn delta_mu(run: &SimulationRun, mf: &MeanFieldEnsemble) -> Result<f64> {
    let empirical: Vec<Vec<f64>> = (0..=run.horizon())
        .map(|t| run.empirical_distribution(t))
        .collect();
    delta_mu_between(&empirical, mf)
}

/// Per-`N` outcome of [`delta_mu_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaMuRow {
    pub n: usize,
    /// One value per realisation, in realisation order.
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(realizations)`.
    pub stderr: f64,
}

impl DeltaMuRow {
    fn from_values(n: usize, values: Vec<f64>) -> Self {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
        DeltaMuRow {
            n,
            values,
            mean,
            stderr: (var / r).sqrt(),
        }
    }
}

/// Seeds used for realisation `r` at size `n`: (hypergraph, trajectory).
pub fn realization_seeds(seed: u64, n: usize, r: usize) -> (u64, u64) {
    let base = mix(mix(seed, n as u64), r as u64);
    (mix(base, 0), mix(base, 1))
}

/// For each `N`, samples `realizations` hypergraphs from `w`, simulates
/// the shared policy on each and records Δμ against `mf`. Realisations run
/// in parallel; results do not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn delta_mu_experiment<P: MfgProblem + ?Sized>(
    problem: &P,
    w: &MultiLayerHypergraphon,
    policy: &PolicyEnsemble,
    mf: &MeanFieldEnsemble,
    n_list: &[usize],
    realizations: usize,
    seed: u64,
    alpha_mode: AlphaMode,
) -> Result<Vec<DeltaMuRow>> {
    if realizations < 2 {
        return Err(Error::ParameterOutOfRange {
            name: "realizations".into(),
            value: realizations as f64,
            expected: ">= 2",
        });
    }
    n_list
        .iter()
        .map(|&n| {
            let policies = share_policy(policy, n);
            let values = (0..realizations)
                .into_par_iter()
                .map(|r| {
                    let (graph_seed, run_seed) = realization_seeds(seed, n, r);
                    let h = MultiLayerHypergraph::sample(w, n, graph_seed, alpha_mode)?;
                    let run = simulate_game(problem, Arc::new(h), &policies, None, run_seed)?;
                    delta_mu(&run, mf)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(DeltaMuRow::from_values(n, values))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::FnProblem;

    #[test]
    fn sharing_map() {
        let m2: Vec<usize> = (0..4).map(|a| shared_grid_index(a, 4, 2)).collect();
        assert_eq!(m2, [0, 0, 1, 1]);
        let same: Vec<usize> = (0..7).map(|a| shared_grid_index(a, 7, 7)).collect();
        assert_eq!(same, (0..7).collect::<Vec<_>>());
        assert_eq!(shared_grid_index(0, 3, 10), 3);
        assert_eq!(shared_grid_index(2, 3, 10), 9);
    }

    #[test]
    fn categorical_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_categorical(&mut rng, &[0.0, 1.0, 0.0]), 1);
        }
    }

    #[test]
    fn stderr_of_constant_values_is_zero() {
        let row = DeltaMuRow::from_values(4, vec![0.5; 5]);
        assert_eq!((row.mean, row.stderr), (0.5, 0.0));
    }

    #[test]
    fn mean_field_against_itself_is_zero() {
        let mf = MeanFieldEnsemble::from_fn(3, 2, 2, |i, t| {
            let p = 0.1 * (i + t) as f64;
            vec![1.0 - p, p]
        })
        .unwrap();
        let fake: Vec<Vec<f64>> = (0..=2).map(|t| mf.aggregate(t)).collect();
        assert_eq!(delta_mu_between(&fake, &mf).unwrap(), 0.0);
    }

    #[test]
    fn shape_errors() {
        let problem = FnProblem::new(
            2,
            1,
            1,
            1.0,
            vec![2],
            |_| vec![1.0, 0.0],
            |_, x, _, _, out: &mut [f64]| {
                out.fill(0.0);
                out[x] = 1.0;
            },
            |_, _, _, _| 0.0,
        )
        .unwrap();
        let h = Arc::new(
            MultiLayerHypergraph::new(2, vec![0.25, 0.75], vec![(2, vec![vec![0, 1]])]).unwrap(),
        );
        let policy = PolicyEnsemble::uniform(2, 1, 2, 1);
        assert!(simulate_game(&problem, h.clone(), &share_policy(&policy, 3), None, 0).is_err());
        let wrong = PolicyEnsemble::uniform(2, 2, 2, 1);
        assert!(simulate_game(&problem, h.clone(), &share_policy(&wrong, 2), None, 0).is_err());
        let run = simulate_game(&problem, h, &share_policy(&policy, 2), None, 0).unwrap();
        assert_eq!(run.states(1), &[0, 0]);
        assert!(empirical_neighborhood_mf(&run, 2, 0).is_err());
    }
}
