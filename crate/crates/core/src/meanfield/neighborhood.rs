use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{LayerMeasure, NeighborhoodMeanField};
use crate::kernels::VertexKernelGrid;
use crate::meanfield::MeanFieldEnsemble;

/// Limiting neighbourhood mean field of grid point `i` at time `t`:
///
/// `nu_d(x_1..x_r) = M^{-r} sum_{j_1..j_r} grid_d[i, j_1..j_r] prod_s mu^{alpha_{j_s}}_t(x_s)`
///
/// with `r = k_d - 1`.
pub fn neighborhood_mf(
    grids: &[VertexKernelGrid],
    mf: &MeanFieldEnsemble,
    i: usize,
    t: usize,
) -> Result<NeighborhoodMeanField> {
    check_resolution(grids, mf.resolution())?;
    if i >= mf.resolution() || t > mf.horizon() {
        return Err(Error::ShapeMismatch(format!(
            "grid point {i} / time {t} outside (M={}, T={})",
            mf.resolution(),
            mf.horizon()
        )));
    }
    let slice = mf.slice_at(t);
    let active = active_states(&slice, mf.resolution(), mf.n_states());
    Ok(at_point(
        grids,
        &slice,
        mf.resolution(),
        mf.n_states(),
        &active,
        i,
    ))
}

pub(crate) fn check_resolution(grids: &[VertexKernelGrid], m: usize) -> Result<()> {
    match grids.iter().find(|g| g.resolution() != m) {
        Some(g) => Err(Error::ShapeMismatch(format!(
            "kernel grid of resolution {} used with a mean field of resolution {m}",
            g.resolution()
        ))),
        None => Ok(()),
    }
}

/// States carrying positive mass at some grid point.
fn active_states(mu_t: &[f64], m: usize, s: usize) -> Vec<usize> {
    (0..s)
        .filter(|&x| (0..m).any(|j| mu_t[j * s + x] != 0.0))
        .collect()
}

fn at_point(
    grids: &[VertexKernelGrid],
    mu_t: &[f64],
    m: usize,
    s: usize,
    active: &[usize],
    i: usize,
) -> NeighborhoodMeanField {
    NeighborhoodMeanField::new(
        grids
            .iter()
            .map(|g| contract_row(g.row(i), g.k() - 1, m, s, mu_t, active))
            .collect(),
    )
}

/// Contracts the `r` grid indices of a kernel row against `mu_t`, last index first.
///
/// The working tensor has shape `[M^a][S^b]`; each step contracts the last
/// grid index and prepends the matching state index.
fn contract_row(
    row: &[f64],
    r: usize,
    m: usize,
    s: usize,
    mu_t: &[f64],
    active: &[usize],
) -> LayerMeasure {
    let mut cur = row.to_vec();
    let mut inner = 1usize;
    for a in (1..=r).rev() {
        let outer = m.pow(a as u32 - 1);
        let mut next = vec![0.0; outer * s * inner];
        for o in 0..outer {
            for j in 0..m {
                let src = &cur[(o * m + j) * inner..(o * m + j + 1) * inner];
                if src.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for &x in active {
                    let w = mu_t[j * s + x];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut next[(o * s + x) * inner..(o * s + x + 1) * inner];
                    for (d, v) in dst.iter_mut().zip(src) {
                        *d += v * w;
                    }
                }
            }
        }
        cur = next;
        inner *= s;
    }
    let scale = (m as f64).powi(r as i32).recip();
    cur.iter_mut().for_each(|v| *v *= scale);
    LayerMeasure::from_values(r, s, cur).expect("contraction yields S^r entries")
}

/// Neighbourhood mean fields of every grid point at decision epochs `0..T`.
#[derive(Debug, Clone)]
pub struct NeighborhoodCache {
    by_time: Vec<Vec<NeighborhoodMeanField>>,
}

impl NeighborhoodCache {
    /// Computes `nu^{alpha_i}_t` for all `i` and `t < T` from a frozen mean field.
    pub fn from_mean_field(grids: &[VertexKernelGrid], mf: &MeanFieldEnsemble) -> Result<Self> {
        check_resolution(grids, mf.resolution())?;
        let by_time = (0..mf.horizon())
            .map(|t| all_points(grids, &mf.slice_at(t), mf.resolution(), mf.n_states()))
            .collect();
        Ok(NeighborhoodCache { by_time })
    }

    pub(crate) fn with_capacity(horizon: usize) -> Self {
        NeighborhoodCache {
            by_time: Vec::with_capacity(horizon),
        }
    }

    pub(crate) fn push(&mut self, at_t: Vec<NeighborhoodMeanField>) {
        self.by_time.push(at_t);
    }

    pub fn get(&self, i: usize, t: usize) -> &NeighborhoodMeanField {
        &self.by_time[t][i]
    }

    pub fn horizon(&self) -> usize {
        self.by_time.len()
    }
}

/// Neighbourhood mean fields of all grid points at one time, in parallel over points.
pub(crate) fn all_points(
    grids: &[VertexKernelGrid],
    mu_t: &[f64],
    m: usize,
    s: usize,
) -> Vec<NeighborhoodMeanField> {
    let active = active_states(mu_t, m, s);
    (0..m)
        .into_par_iter()
        .map(|i| at_point(grids, mu_t, m, s, &active, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{discretize, HypergraphonLayer, KernelSpec};

    fn constant_mf(m: usize, dist: Vec<f64>) -> MeanFieldEnsemble {
        MeanFieldEnsemble::from_fn(m, 1, dist.len(), |_, _| dist.clone()).unwrap()
    }

    /// Literal Riemann sum over all index tuples.
    fn brute_force(
        grid: &VertexKernelGrid,
        mf: &MeanFieldEnsemble,
        i: usize,
        t: usize,
    ) -> Vec<f64> {
        let (m, s, r) = (grid.resolution(), mf.n_states(), grid.k() - 1);
        let mut out = vec![0.0; s.pow(r as u32)];
        for js in 0..m.pow(r as u32) {
            let mut jt = vec![0; r];
            let mut rest = js;
            for slot in jt.iter_mut().rev() {
                *slot = rest % m;
                rest /= m;
            }
            let mut index = vec![i];
            index.extend(&jt);
            let w = grid.get(&index);
            for (xs, o) in out.iter_mut().enumerate() {
                let mut xt = vec![0; r];
                let mut rest = xs;
                for slot in xt.iter_mut().rev() {
                    *slot = rest % s;
                    rest /= s;
                }
                let p: f64 = jt.iter().zip(&xt).map(|(&j, &x)| mf.get(j, t)[x]).product();
                *o += w * p / (m as f64).powi(r as i32);
            }
        }
        out
    }

    #[test]
    fn full_kernel_gives_product_measure() {
        let grids = vec![
            discretize(&HypergraphonLayer::constant(2, 1.0).unwrap(), 4),
            discretize(&HypergraphonLayer::constant(3, 1.0).unwrap(), 4),
        ];
        let mu0 = vec![0.2, 0.5, 0.3];
        let nu = neighborhood_mf(&grids, &constant_mf(4, mu0.clone()), 1, 0).unwrap();
        for (d, layer) in nu.layers().iter().enumerate() {
            let expected = LayerMeasure::product(&mu0, d + 1);
            for (a, b) in layer.values().iter().zip(expected.values()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_kernel_gives_zero_measure() {
        let grids = vec![discretize(&HypergraphonLayer::constant(3, 0.0).unwrap(), 3)];
        let nu = neighborhood_mf(&grids, &constant_mf(3, vec![0.5, 0.5]), 0, 0).unwrap();
        assert!(nu.layer(0).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unif2_mass_matches_integral() {
        // int (1 - max(a, b)) db = (1 - a^2) / 2
        let m = 200;
        let grids = vec![discretize(&KernelSpec::new("unif2").build().unwrap(), m)];
        let nu = neighborhood_mf(&grids, &constant_mf(m, vec![1.0, 0.0]), 0, 0).unwrap();
        let a = 0.5 / m as f64;
        assert!((nu.layer(0).mass() - (1.0 - a * a) / 2.0).abs() < 0.01);
        assert_eq!(nu.layer(0).values()[1], 0.0);
    }

    #[test]
    fn contraction_matches_brute_force() {
        let m = 5;
        let grids = vec![
            discretize(&KernelSpec::new("rank2").build().unwrap(), m),
            discretize(&KernelSpec::new("inv_unif3").build().unwrap(), m),
        ];
        let mf = MeanFieldEnsemble::from_fn(m, 2, 3, |i, t| {
            let a = (i as f64 + 1.0) / (m as f64 + 1.0);
            let b = 0.1 * t as f64;
            vec![a * (1.0 - b), (1.0 - a) * (1.0 - b), b]
        })
        .unwrap();
        for i in 0..m {
            for t in 0..=2 {
                let nu = neighborhood_mf(&grids, &mf, i, t).unwrap();
                for (d, g) in grids.iter().enumerate() {
                    let expected = brute_force(g, &mf, i, t);
                    for (a, b) in nu.layer(d).values().iter().zip(&expected) {
                        assert!((a - b).abs() < 1e-14, "layer {d} at ({i}, {t}): {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn resolution_mismatch_is_an_error() {
        let grids = vec![discretize(&HypergraphonLayer::constant(2, 1.0).unwrap(), 3)];
        assert!(matches!(
            neighborhood_mf(&grids, &constant_mf(4, vec![1.0]), 0, 0),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
