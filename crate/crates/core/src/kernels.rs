//! Hypergraphon layers and their grid discretisations.
//!
//! A `k`-uniform layer is a symmetric kernel whose coordinates are indexed by
//! the non-empty proper subsets of `{0, .., k-1}`. Coordinates are passed as a
//! flat slice of length `2^k - 2`, where the subset with bitmask `b` lives at
//! index `b - 1`. The vertex coordinate of vertex `i` is therefore at
//! `(1 << i) - 1`, and every other slot belongs to a subset of size at least
//! two.
//!
//! Every downstream computation couples the kernel to vertex-indexed state
//! distributions only, so the non-singleton coordinates are integrated out
//! up front by [`HypergraphonLayer::vertex_marginal`] and [`discretize`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraphs::MultiLayerHypergraph;

/// Monte Carlo sample count per grid cell for kernels without an analytic marginal.
pub const DEFAULT_MC_SAMPLES: usize = 4096;
pub const DEFAULT_MC_SEED: u64 = 0x6d61_7267;

pub type KernelFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Number of subset coordinates of a `k`-uniform kernel.
pub fn coordinate_count(k: usize) -> usize {
    (1usize << k) - 2
}

/// Slot of vertex `i` in the subset-coordinate layout.
pub fn vertex_slot(i: usize) -> usize {
    (1usize << i) - 1
}

fn is_vertex_mask(mask: usize) -> bool {
    mask.count_ones() == 1
}

/// How the non-singleton coordinates of a layer are integrated out.
#[derive(Clone)]
pub enum MarginalMode {
    /// Closed form taking the `k` vertex coordinates.
    Analytic(KernelFn),
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

impl fmt::Debug for MarginalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginalMode::Analytic(_) => f.write_str("Analytic"),
            MarginalMode::MonteCarlo { samples, seed } => f
                .debug_struct("MonteCarlo")
                .field("samples", samples)
                .field("seed", seed)
                .finish(),
        }
    }
}

/// Name and parameters of a built-in kernel, as found in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl KernelSpec {
    pub fn new(name: impl Into<String>) -> Self {
        KernelSpec {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn build(&self) -> Result<HypergraphonLayer> {
        HypergraphonLayer::builtin(&self.name, &self.params)
    }
}

/// One `k`-uniform hypergraphon layer.
#[derive(Clone)]
pub struct HypergraphonLayer {
    k: usize,
    kernel: KernelFn,
    marginal: MarginalMode,
    spec: Option<KernelSpec>,
}

impl fmt::Debug for HypergraphonLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HypergraphonLayer")
            .field("k", &self.k)
            .field("marginal", &self.marginal)
            .field("spec", &self.spec)
            .finish()
    }
}

impl HypergraphonLayer {
    /// Custom layer. The kernel receives `2^k - 2` subset coordinates and must
    /// be symmetric with values in `[0, 1]`.
    pub fn new<F>(k: usize, kernel: F, marginal: MarginalMode) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if k < 2 {
            return Err(Error::ParameterOutOfRange {
                name: "k".into(),
                value: k as f64,
                expected: ">= 2",
            });
        }
        if let MarginalMode::MonteCarlo { samples: 0, .. } = marginal {
            return Err(Error::ParameterOutOfRange {
                name: "samples".into(),
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(HypergraphonLayer {
            k,
            kernel: Arc::new(kernel),
            marginal,
            spec: None,
        })
    }

    /// Kernel identically equal to `p`.
    pub fn constant(k: usize, p: f64) -> Result<Self> {
        check_unit("p", p)?;
        HypergraphonLayer::new(
            k,
            move |_| p,
            MarginalMode::Analytic(Arc::new(move |_: &[f64]| p)),
        )
    }

    /// Built-in kernels.
    ///
    /// | name        | k | kernel                                              |
    /// |-------------|---|-----------------------------------------------------|
    /// | `unif2`     | 2 | `1 - max(a1, a2)`                                   |
    /// | `rank2`     | 2 | `1 - a1 a2`                                         |
    /// | `flat2`     | 2 | `p`                                                 |
    /// | `ind3`      | 3 | `1` iff all pair coordinates `<= p`                 |
    /// | `unif3`     | 3 | `1 - max(a1, a2, a3)`                               |
    /// | `inv_unif3` | 3 | `1 - max(1 - a1, 1 - a2, 1 - a3)`                   |
    /// | `block3`    | 3 | `ind3` restricted to `[0, .5]^3` or `(.5, 1]^3`     |
    /// | `rank3`     | 3 | `1 - a1 a2 a3`                                      |
    /// | `flat3`     | 3 | `p`                                                 |
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match name {
            "unif2" | "rank2" | "unif3" | "inv_unif3" | "rank3" => &[],
            "flat2" | "flat3" | "ind3" | "block3" => &["p"],
            _ => return Err(Error::UnknownKernel(name.to_string())),
        };
        if let Some(extra) = params.keys().find(|key| !allowed.contains(&key.as_str())) {
            return Err(Error::UnknownParameter {
                kernel: name.to_string(),
                name: extra.clone(),
            });
        }
        let p = match allowed.first() {
            Some(_) => {
                let p = *params
                    .get("p")
                    .ok_or_else(|| Error::MissingParameter("p".into()))?;
                check_unit("p", p)?;
                p
            }
            None => 0.0,
        };

        let (k, kernel, marginal): (usize, KernelFn, KernelFn) = match name {
            "unif2" => {
                let f = |a: &[f64]| 1.0 - a[0].max(a[1]);
                (2, Arc::new(f), Arc::new(f))
            }
            "rank2" => {
                let f = |a: &[f64]| 1.0 - a[0] * a[1];
                (2, Arc::new(f), Arc::new(f))
            }
            "flat2" | "flat3" => (
                if name == "flat2" { 2 } else { 3 },
                Arc::new(move |_: &[f64]| p),
                Arc::new(move |_: &[f64]| p),
            ),
            "ind3" => (
                3,
                Arc::new(move |c: &[f64]| indicator(pairs_below(c, p))),
                Arc::new(move |_: &[f64]| p * p * p),
            ),
            "unif3" => (
                3,
                Arc::new(|c: &[f64]| 1.0 - c[0].max(c[1]).max(c[3])),
                Arc::new(|v: &[f64]| 1.0 - v[0].max(v[1]).max(v[2])),
            ),
            "inv_unif3" => (
                3,
                Arc::new(|c: &[f64]| 1.0 - (1.0 - c[0]).max(1.0 - c[1]).max(1.0 - c[3])),
                Arc::new(|v: &[f64]| 1.0 - (1.0 - v[0]).max(1.0 - v[1]).max(1.0 - v[2])),
            ),
            "block3" => (
                3,
                Arc::new(move |c: &[f64]| {
                    indicator(same_block(&[c[0], c[1], c[3]]) && pairs_below(c, p))
                }),
                Arc::new(move |v: &[f64]| if same_block(v) { p * p * p } else { 0.0 }),
            ),
            "rank3" => (
                3,
                Arc::new(|c: &[f64]| 1.0 - c[0] * c[1] * c[3]),
                Arc::new(|v: &[f64]| 1.0 - v[0] * v[1] * v[2]),
            ),
            _ => unreachable!(),
        };
        Ok(HypergraphonLayer {
            k,
            kernel,
            marginal: MarginalMode::Analytic(marginal),
            spec: Some(KernelSpec {
                name: name.to_string(),
                params: params.clone(),
            }),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn spec(&self) -> Option<&KernelSpec> {
        self.spec.as_ref()
    }

    pub fn marginal_mode(&self) -> &MarginalMode {
        &self.marginal
    }

    /// Replaces the marginalisation mode, e.g. to force Monte Carlo on a built-in.
    pub fn with_marginal(mut self, marginal: MarginalMode) -> Self {
        self.marginal = marginal;
        self
    }

    /// Evaluates the kernel at `2^k - 2` subset coordinates.
    pub fn eval(&self, coords: &[f64]) -> f64 {
        debug_assert_eq!(coords.len(), coordinate_count(self.k));
        (self.kernel)(coords)
    }

    /// Kernel integrated over all non-singleton subset coordinates.
    pub fn vertex_marginal(&self, vertex_coords: &[f64]) -> f64 {
        assert_eq!(
            vertex_coords.len(),
            self.k,
            "expected {} vertex coordinates",
            self.k
        );
        match &self.marginal {
            MarginalMode::Analytic(f) => f(vertex_coords),
            MarginalMode::MonteCarlo { samples, seed } => {
                self.monte_carlo_marginal(vertex_coords, *samples, *seed).0
            }
        }
    }

    /// Monte Carlo estimate of the vertex marginal and its standard error.
    ///
    /// The stream is seeded from `seed` and the bit patterns of the vertex
    /// coordinates, so the estimate does not depend on evaluation order.
    pub fn monte_carlo_marginal(
        &self,
        vertex_coords: &[f64],
        samples: usize,
        seed: u64,
    ) -> (f64, f64) {
        let mut coords = vec![0.0; coordinate_count(self.k)];
        for (i, &a) in vertex_coords.iter().enumerate() {
            coords[vertex_slot(i)] = a;
        }
        if self.k == 2 {
            return (self.eval(&coords), 0.0);
        }
        let cell_seed = vertex_coords
            .iter()
            .fold(seed, |acc, a| crate::seeding::mix(acc, a.to_bits()));
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..samples {
            for mask in 1..=coordinate_count(self.k) {
                if !is_vertex_mask(mask) {
                    coords[mask - 1] = rng.random::<f64>();
                }
            }
            let w = self.eval(&coords);
            sum += w;
            sum_sq += w * w;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = if samples > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    }
}

fn check_unit(name: &str, value: f64) -> Result<()> {
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

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

// Pair slots of a 3-uniform layer: masks 0b011, 0b101, 0b110.
fn pairs_below(c: &[f64], p: f64) -> bool {
    c[2] <= p && c[4] <= p && c[5] <= p
}

fn same_block(v: &[f64]) -> bool {
    v.iter().all(|&a| a <= 0.5) || v.iter().all(|&a| a > 0.5)
}

/// An ordered list of hypergraphon layers sharing the vertex coordinate.
#[derive(Debug, Clone)]
pub struct MultiLayerHypergraphon {
    layers: Vec<HypergraphonLayer>,
}

impl MultiLayerHypergraphon {
    pub fn new(layers: Vec<HypergraphonLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidProblem(
                "at least one layer is required".into(),
            ));
        }
        Ok(MultiLayerHypergraphon { layers })
    }

    pub fn from_specs(specs: &[KernelSpec]) -> Result<Self> {
        MultiLayerHypergraphon::new(specs.iter().map(KernelSpec::build).collect::<Result<_>>()?)
    }

    pub fn layers(&self) -> &[HypergraphonLayer] {
        &self.layers
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.k).collect()
    }

    pub fn discretize(&self, m: usize) -> Vec<VertexKernelGrid> {
        self.layers.iter().map(|l| discretize(l, m)).collect()
    }
}

/// Symmetric `M^k` tensor of subset-marginalised kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexKernelGrid {
    k: usize,
    m: usize,
    values: Vec<f64>,
}

impl VertexKernelGrid {
    pub fn from_values(k: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        let expected = m.checked_pow(k as u32).unwrap_or(usize::MAX);
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of shape {}^{}",
                values.len(),
                m,
                k
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ParameterOutOfRange {
                name: "grid entry".into(),
                value: *v,
                expected: "[0, 1]",
            });
        }
        Ok(VertexKernelGrid { k, m, values })
    }

    pub(crate) fn zeros(k: usize, m: usize) -> Self {
        VertexKernelGrid {
            k,
            m,
            values: vec![0.0; m.pow(k as u32)],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Grid resolution.
    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.k);
        index.iter().fold(0, |acc, &i| acc * self.m + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.offset(index)]
    }

    /// Multi-index of a flat offset.
    pub fn unravel(&self, mut offset: usize) -> Vec<usize> {
        let mut index = vec![0; self.k];
        for slot in index.iter_mut().rev() {
            *slot = offset % self.m;
            offset /= self.m;
        }
        index
    }

    /// Row of the tensor with the first index fixed, flattened over the remaining `k - 1`.
    pub fn row(&self, first: usize) -> &[f64] {
        let len = self.m.pow(self.k as u32 - 1);
        &self.values[first * len..(first + 1) * len]
    }

    /// Bitwise permutation symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.values.len()).all(|off| {
            let index = self.unravel(off);
            let v = self.values[off].to_bits();
            let mut ok = true;
            for_each_permutation(&index, |perm| ok &= self.get(perm).to_bits() == v);
            ok
        })
    }

    /// Mean over entries with pairwise-distinct indices.
    pub fn layer_density(&self) -> f64 {
        let mut index = vec![0; self.k];
        let (mut sum, mut count) = (0.0, 0usize);
        for (off, v) in self.values.iter().enumerate() {
            let mut rest = off;
            for slot in index.iter_mut().rev() {
                *slot = rest % self.m;
                rest /= self.m;
            }
            if all_distinct(&index) {
                sum += v;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    pub(crate) fn set_symmetric(&mut self, index: &[usize], value: f64) {
        let mut offsets = Vec::new();
        for_each_permutation(index, |perm| offsets.push(self.offset(perm)));
        for off in offsets {
            self.values[off] = value;
        }
    }
}

pub(crate) fn all_distinct(index: &[usize]) -> bool {
    index
        .iter()
        .enumerate()
        .all(|(a, x)| index[a + 1..].iter().all(|y| y != x))
}

/// Calls `f` on every permutation of `items` (duplicates included).
pub(crate) fn for_each_permutation(items: &[usize], mut f: impl FnMut(&[usize])) {
    match *items {
        [] | [_] => return f(items),
        [a, b] => {
            f(&[a, b]);
            return f(&[b, a]);
        }
        _ => {}
    }
    let mut work = items.to_vec();
    let n = work.len();
    let mut c = vec![0usize; n];
    f(&work);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                work.swap(0, i);
            } else {
                work.swap(c[i], i);
            }
            f(&work);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Interval midpoint `(i + 1/2) / m` of the 0-based subinterval `i`.
pub fn grid_point(i: usize, m: usize) -> f64 {
    (i as f64 + 0.5) / m as f64
}

/// Non-decreasing `k`-tuples over `0..m`, in lexicographic order.
fn sorted_tuples(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    loop {
        out.push(cur.clone());
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if cur[pos] + 1 < m {
                let v = cur[pos] + 1;
                for slot in &mut cur[pos..] {
                    *slot = v;
                }
                break;
            }
        }
    }
}

/// Evaluates the vertex marginal at interval midpoints.
///
/// Only non-decreasing index tuples are evaluated; the result is copied to
/// every permutation, so the tensor is exactly symmetric.
///
/// # Panics
///
/// If `m == 0`.
pub fn discretize(layer: &HypergraphonLayer, m: usize) -> VertexKernelGrid {
    assert!(m >= 1, "grid resolution must be positive");
    let k = layer.k();
    let tuples = sorted_tuples(k, m);
    let values: Vec<f64> = tuples
        .par_iter()
        .map(|t| {
            let coords: Vec<f64> = t.iter().map(|&i| grid_point(i, m)).collect();
            layer.vertex_marginal(&coords)
        })
        .collect();
    let mut grid = VertexKernelGrid::zeros(k, m);
    for (t, v) in tuples.iter().zip(values) {
        grid.set_symmetric(t, v);
    }
    grid
}

/// Step-hypergraphon of layer `layer_index` (0-based) of a finite hypergraph.
pub fn step_hypergraphon(h: &MultiLayerHypergraph, layer_index: usize) -> Result<VertexKernelGrid> {
    let layer = h.layer(layer_index)?;
    let mut grid = VertexKernelGrid::zeros(layer.k(), h.n());
    for edge in layer.edges() {
        grid.set_symmetric(edge, 1.0);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_params() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn with_p(p: f64) -> BTreeMap<String, f64> {
        BTreeMap::from([("p".to_string(), p)])
    }

    #[test]
    fn builtin_point_values() {
        let unif = HypergraphonLayer::builtin("unif2", &no_params()).unwrap();
        assert!((unif.eval(&[0.2, 0.7]) - 0.3).abs() < 1e-15);
        let flat = HypergraphonLayer::builtin("flat2", &with_p(0.5)).unwrap();
        assert_eq!(flat.eval(&[0.9, 0.1]), 0.5);
        let inv = HypergraphonLayer::builtin("inv_unif3", &no_params()).unwrap();
        assert_eq!(inv.eval(&[1.0, 1.0, 0.3, 1.0, 0.8, 0.1]), 1.0);
        let rank = HypergraphonLayer::builtin("rank2", &no_params()).unwrap();
        assert!((rank.eval(&[0.5, 0.4]) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn ind3_and_block3_read_pair_coordinates() {
        let ind = HypergraphonLayer::builtin("ind3", &with_p(0.5)).unwrap();
        assert_eq!(ind.eval(&[0.9, 0.9, 0.4, 0.9, 0.5, 0.1]), 1.0);
        assert_eq!(ind.eval(&[0.1, 0.1, 0.6, 0.1, 0.2, 0.2]), 0.0);
        let block = HypergraphonLayer::builtin("block3", &with_p(0.5)).unwrap();
        // vertex coords at slots 0, 1, 3
        assert_eq!(block.eval(&[0.5, 0.2, 0.1, 0.0, 0.1, 0.1]), 1.0);
        assert_eq!(block.eval(&[0.51, 0.7, 0.1, 1.0, 0.1, 0.1]), 1.0);
        assert_eq!(block.eval(&[0.5, 0.7, 0.1, 1.0, 0.1, 0.1]), 0.0);
        assert_eq!(block.eval(&[0.6, 0.7, 0.6, 1.0, 0.1, 0.1]), 0.0);
    }

    #[test]
    fn builtin_errors() {
        assert_eq!(
            HypergraphonLayer::builtin("nope", &no_params()).unwrap_err(),
            Error::UnknownKernel("nope".into())
        );
        assert!(matches!(
            HypergraphonLayer::builtin("flat2", &with_p(1.5)),
            Err(Error::ParameterOutOfRange { .. })
        ));
        assert!(matches!(
            HypergraphonLayer::builtin("ind3", &with_p(-0.1)),
            Err(Error::ParameterOutOfRange { .. })
        ));
        assert!(matches!(
            HypergraphonLayer::builtin("block3", &no_params()),
            Err(Error::MissingParameter(_))
        ));
        assert!(matches!(
            HypergraphonLayer::builtin("unif2", &with_p(0.5)),
            Err(Error::UnknownParameter { .. })
        ));
    }

    #[test]
    fn vertex_marginal_examples() {
        let ind = HypergraphonLayer::builtin("ind3", &with_p(0.5)).unwrap();
        assert_eq!(ind.vertex_marginal(&[0.3, 0.8, 0.1]), 0.125);
        let unif = HypergraphonLayer::builtin("unif3", &no_params()).unwrap();
        assert!((unif.vertex_marginal(&[0.1, 0.2, 0.3]) - 0.7).abs() < 1e-15);
        let zero = HypergraphonLayer::new(
            3,
            |_| 0.0,
            MarginalMode::MonteCarlo {
                samples: 64,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(zero.vertex_marginal(&[0.2, 0.4, 0.6]), 0.0);
    }

    #[test]
    fn monte_carlo_marginal_is_order_independent() {
        let ind = HypergraphonLayer::builtin("ind3", &with_p(0.7))
            .unwrap()
            .with_marginal(MarginalMode::MonteCarlo {
                samples: 512,
                seed: 9,
            });
        let a = ind.vertex_marginal(&[0.1, 0.2, 0.3]);
        let _ = ind.vertex_marginal(&[0.4, 0.5, 0.6]);
        assert_eq!(a.to_bits(), ind.vertex_marginal(&[0.1, 0.2, 0.3]).to_bits());
    }

    #[test]
    fn discretize_unif2_at_two_points() {
        let unif = HypergraphonLayer::builtin("unif2", &no_params()).unwrap();
        let grid = discretize(&unif, 2);
        assert_eq!(grid.values(), &[0.75, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn discretize_constants() {
        let flat = HypergraphonLayer::builtin("flat2", &with_p(0.5)).unwrap();
        assert!(discretize(&flat, 7).values().iter().all(|&v| v == 0.5));
        let one = HypergraphonLayer::constant(3, 1.0).unwrap();
        assert!(discretize(&one, 5).values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn discretized_unif3_density() {
        // E[1 - max of three uniforms] = 1/4
        let unif = HypergraphonLayer::builtin("unif3", &no_params()).unwrap();
        let d = discretize(&unif, 200).layer_density();
        assert!((d - 0.25).abs() < 0.01, "density {d}");
    }

    #[test]
    fn density_of_constant_grids() {
        assert_eq!(
            VertexKernelGrid::from_values(2, 3, vec![1.0; 9])
                .unwrap()
                .layer_density(),
            1.0
        );
        assert_eq!(VertexKernelGrid::zeros(3, 4).layer_density(), 0.0);
    }

    #[test]
    fn discretized_grids_are_bitwise_symmetric() {
        for name in ["unif3", "inv_unif3", "rank3"] {
            let layer = HypergraphonLayer::builtin(name, &no_params()).unwrap();
            assert!(discretize(&layer, 9).is_symmetric(), "{name}");
        }
        let custom = HypergraphonLayer::new(
            3,
            |c| (c[0] * c[1] * c[3] + c[2] * c[4] * c[5]).min(1.0),
            MarginalMode::MonteCarlo {
                samples: 32,
                seed: 3,
            },
        )
        .unwrap();
        assert!(discretize(&custom, 6).is_symmetric());
    }

    #[test]
    fn grid_shape_is_checked() {
        assert!(matches!(
            VertexKernelGrid::from_values(2, 3, vec![0.0; 8]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn permutations_cover_all_orders() {
        let mut seen = Vec::new();
        for_each_permutation(&[0, 1, 2], |p| seen.push(p.to_vec()));
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn sorted_tuple_count() {
        // multiset coefficient C(m + k - 1, k)
        assert_eq!(sorted_tuples(3, 5).len(), 35);
        assert_eq!(sorted_tuples(2, 1).len(), 1);
    }
}
