//! Forward propagation (policy to mean field), backwards induction (mean
//! field to best response), policy evaluation and exploitability.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::MfgProblem;
use crate::kernels::{grid_point, VertexKernelGrid};
use crate::meanfield::neighborhood::{all_points, check_resolution, NeighborhoodCache};
use crate::meanfield::{MeanFieldEnsemble, PolicyEnsemble, ValueTable};

fn check_problem_grids<P: MfgProblem + ?Sized>(
    problem: &P,
    grids: &[VertexKernelGrid],
    m: usize,
) -> Result<()> {
    check_resolution(grids, m)?;
    let ks: Vec<usize> = grids.iter().map(VertexKernelGrid::k).collect();
    if ks != problem.layer_cards() {
        return Err(Error::ShapeMismatch(format!(
            "kernel grids have cardinalities {ks:?}, problem expects {:?}",
            problem.layer_cards()
        )));
    }
    Ok(())
}

fn check_policy<P: MfgProblem + ?Sized>(problem: &P, policy: &PolicyEnsemble) -> Result<()> {
    let expected = (problem.horizon(), problem.n_states(), problem.n_actions());
    let got = (policy.horizon(), policy.n_states(), policy.n_actions());
    if expected != got {
        return Err(Error::ShapeMismatch(format!(
            "policy with (T, S, U) = {got:?}, problem has {expected:?}"
        )));
    }
    Ok(())
}

/// Initial distributions at the grid points, validated.
pub(crate) fn initial_distributions<P: MfgProblem + ?Sized>(
    problem: &P,
    m: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..m)
        .map(|i| {
            let mu = problem.initial(grid_point(i, m));
            let sum: f64 = mu.iter().sum();
            if mu.len() != problem.n_states()
                || mu.iter().any(|&p| p < 0.0)
                || (sum - 1.0).abs() > 1e-12
            {
                return Err(Error::InvalidProblem(format!(
                    "initial distribution at grid point {i} is {mu:?}"
                )));
            }
            Ok(mu)
        })
        .collect()
}

/// Mean field induced by `policy`, together with the neighbourhood mean
/// fields of every epoch. The time loop is sequential; grid points are
/// processed in parallel with results independent of scheduling.
pub fn propagate<P: MfgProblem + ?Sized>(
    problem: &P,
    grids: &[VertexKernelGrid],
    policy: &PolicyEnsemble,
) -> Result<(MeanFieldEnsemble, NeighborhoodCache)> {
    let m = policy.resolution();
    check_problem_grids(problem, grids, m)?;
    check_policy(problem, policy)?;
    let (horizon, s) = (problem.horizon(), problem.n_states());

    let mut mf = MeanFieldEnsemble::zeros(m, horizon, s);
    for (i, mu0) in initial_distributions(problem, m)?.into_iter().enumerate() {
        mf.get_mut(i, 0).copy_from_slice(&mu0);
    }
    let mut cache = NeighborhoodCache::with_capacity(horizon);
    for t in 0..horizon {
        let slice = mf.slice_at(t);
        let nus = all_points(grids, &slice, m, s);
        let next: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut next = vec![0.0; s];
                let mut p = vec![0.0; s];
                let mu = &slice[i * s..(i + 1) * s];
                for (x, &w) in mu.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let pi = policy.probs(i, t, x);
                    for (u, &pu) in pi.iter().enumerate() {
                        if pu == 0.0 {
                            continue;
                        }
                        problem.transition(t, x, u, &nus[i], &mut p);
                        let wu = w * pu;
                        for (n, q) in next.iter_mut().zip(&p) {
                            *n += wu * q;
                        }
                    }
                }
                next
            })
            .collect();
        for (i, dist) in next.into_iter().enumerate() {
            mf.get_mut(i, t + 1).copy_from_slice(&dist);
        }
        cache.push(nus);
    }
    Ok((mf, cache))
}

/// The mean field induced by `policy` on the grid.
pub fn forward_propagate<P: MfgProblem + ?Sized>(
    problem: &P,
    grids: &[VertexKernelGrid],
    policy: &PolicyEnsemble,
) -> Result<MeanFieldEnsemble> {
    propagate(problem, grids, policy).map(|(mf, _)| mf)
}

/// Exact best response to a frozen mean field by backwards induction.
///
/// The returned policy is deterministic, breaking ties toward the lowest
/// action index.
pub fn best_response<P: MfgProblem + ?Sized>(
    problem: &P,
    grids: &[VertexKernelGrid],
    mf: &MeanFieldEnsemble,
) -> Result<(PolicyEnsemble, ValueTable)> {
    check_problem_grids(problem, grids, mf.resolution())?;
    if (mf.horizon(), mf.n_states()) != (problem.horizon(), problem.n_states()) {
        return Err(Error::ShapeMismatch(format!(
            "mean field with (T, S) = ({}, {}), problem has ({}, {})",
            mf.horizon(),
            mf.n_states(),
            problem.horizon(),
            problem.n_states()
        )));
    }
    let cache = NeighborhoodCache::from_mean_field(grids, mf)?;
    Ok(best_response_cached(problem, &cache, mf.resolution()))
}

/// [`best_response`] against precomputed neighbourhood mean fields.
pub fn best_response_cached<P: MfgProblem + ?Sized>(
    problem: &P,
    cache: &NeighborhoodCache,
    m: usize,
) -> (PolicyEnsemble, ValueTable) {
    backward(problem, cache, m, None)
}

/// Values `V^pi` and `Q^pi` of `policy` under fixed neighbourhood mean fields.
pub fn evaluate_policy<P: MfgProblem + ?Sized>(
    problem: &P,
    cache: &NeighborhoodCache,
    policy: &PolicyEnsemble,
) -> Result<ValueTable> {
    check_policy(problem, policy)?;
    Ok(backward(problem, cache, policy.resolution(), Some(policy)).1)
}

/// Shared backward pass: maximises over actions when `policy` is `None`,
/// averages under it otherwise.
fn backward<P: MfgProblem + ?Sized>(
    problem: &P,
    cache: &NeighborhoodCache,
    m: usize,
    policy: Option<&PolicyEnsemble>,
) -> (PolicyEnsemble, ValueTable) {
    let (horizon, s, n_actions, gamma) = (
        problem.horizon(),
        problem.n_states(),
        problem.n_actions(),
        problem.gamma(),
    );
    debug_assert_eq!(cache.horizon(), horizon);
    let per_point: Vec<(Vec<f64>, Vec<f64>, Vec<usize>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut v = vec![0.0; (horizon + 1) * s];
            let mut q = vec![0.0; horizon * s * n_actions];
            let mut greedy = vec![0usize; horizon * s];
            let mut p = vec![0.0; s];
            for t in (0..horizon).rev() {
                let nu = cache.get(i, t);
                let (now, later) = v.split_at_mut((t + 1) * s);
                let v_next = &later[..s];
                let v_now = &mut now[t * s..];
                for x in 0..s {
                    let row = &mut q[(t * s + x) * n_actions..(t * s + x + 1) * n_actions];
                    for (u, qu) in row.iter_mut().enumerate() {
                        problem.transition(t, x, u, nu, &mut p);
                        let cont: f64 = p.iter().zip(v_next).map(|(a, b)| a * b).sum();
                        *qu = problem.reward(t, x, u, nu) + gamma * cont;
                    }
                    v_now[x] = match policy {
                        None => {
                            let mut best = 0;
                            for u in 1..n_actions {
                                if row[u] > row[best] {
                                    best = u;
                                }
                            }
                            greedy[t * s + x] = best;
                            row[best]
                        }
                        Some(pi) => pi
                            .probs(i, t, x)
                            .iter()
                            .zip(row.iter())
                            .map(|(a, b)| a * b)
                            .sum(),
                    };
                }
            }
            (v, q, greedy)
        })
        .collect();

    let mut policy_out = PolicyEnsemble::deterministic(m, horizon, s, n_actions, |_, _, _| 0);
    let mut v_all = Vec::with_capacity(m * (horizon + 1) * s);
    let mut q_all = Vec::with_capacity(m * horizon * s * n_actions);
    for (i, (v, q, greedy)) in per_point.into_iter().enumerate() {
        if policy.is_none() {
            let table = policy_out.table_mut(i);
            table.fill(0.0);
            for (ts, &u) in greedy.iter().enumerate() {
                table[ts * n_actions + u] = 1.0;
            }
        }
        v_all.extend(v);
        q_all.extend(q);
    }
    (
        policy_out,
        ValueTable::from_parts(m, horizon, s, n_actions, v_all, q_all),
    )
}

/// Exploitability of `policy` against the mean field it induces:
/// `M^{-1} sum_i [ max_pi J_i(pi) - J_i(policy) ]`.
pub fn exploitability<P: MfgProblem + ?Sized>(
    problem: &P,
    grids: &[VertexKernelGrid],
    policy: &PolicyEnsemble,
) -> Result<f64> {
    let (_, cache) = propagate(problem, grids, policy)?;
    exploitability_cached(problem, &cache, policy)
}

pub(crate) fn exploitability_cached<P: MfgProblem + ?Sized>(
    problem: &P,
    cache: &NeighborhoodCache,
    policy: &PolicyEnsemble,
) -> Result<f64> {
    let m = policy.resolution();
    let (_, best) = best_response_cached(problem, cache, m);
    let current = evaluate_policy(problem, cache, policy)?;
    exploitability_from_values(problem, &best, &current, m)
}

pub(crate) fn exploitability_from_values<P: MfgProblem + ?Sized>(
    problem: &P,
    best: &ValueTable,
    current: &ValueTable,
    m: usize,
) -> Result<f64> {
    let mu0 = initial_distributions(problem, m)?;
    let gap: f64 = (0..m)
        .map(|i| best.initial_value(i, &mu0[i]) - current.initial_value(i, &mu0[i]))
        .sum();
    Ok(gap / m as f64)
}
