//! Finite multi-layer uniform hypergraphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{coordinate_count, vertex_slot, MultiLayerHypergraphon};
use crate::seeding::mix;

/// How vertex coordinates are chosen when sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// i.i.d. uniform, assigned to vertices in increasing order.
    #[default]
    Uniform,
    /// Interval midpoints `(i + 1/2) / N`.
    Grid,
}

/// The edges of one `k`-uniform layer. Each edge is a sorted list of `k`
/// distinct vertices; edges are kept in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperedgeLayer {
    k: usize,
    edges: Vec<Vec<usize>>,
}

impl HyperedgeLayer {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Fraction of all `k`-subsets of `n` vertices that are edges.
    pub fn density(&self, n: usize) -> f64 {
        let total = binomial(n, self.k);
        if total == 0.0 {
            0.0
        } else {
            self.edges.len() as f64 / total
        }
    }
}

#[derive(Deserialize)]
struct RawHypergraph {
    #[serde(rename = "N")]
    n: usize,
    alphas: Vec<f64>,
    layers: Vec<HyperedgeLayer>,
}

impl TryFrom<RawHypergraph> for MultiLayerHypergraph {
    type Error = Error;

    fn try_from(raw: RawHypergraph) -> Result<Self> {
        let layers = raw.layers.into_iter().map(|l| (l.k, l.edges)).collect();
        MultiLayerHypergraph::new(raw.n, raw.alphas, layers)
    }
}

/// A vertex set `0..N` with `D` edge sets of fixed cardinality, plus the
/// vertex coordinates it was sampled with.
///
/// Serialises as `{"N": .., "alphas": [..], "layers": [{"k": .., "edges": [[..], ..]}, ..]}`
/// with 0-based vertex indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHypergraph")]
pub struct MultiLayerHypergraph {
    #[serde(rename = "N")]
    n: usize,
    alphas: Vec<f64>,
    layers: Vec<HyperedgeLayer>,
}

impl MultiLayerHypergraph {
    /// Validates and canonicalises the edge sets.
    pub fn new(n: usize, alphas: Vec<f64>, layers: Vec<(usize, Vec<Vec<usize>>)>) -> Result<Self> {
        if alphas.len() != n {
            return Err(Error::InvalidHypergraph(format!(
                "{} vertex coordinates for {} vertices",
                alphas.len(),
                n
            )));
        }
        if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidHypergraph(
                "vertex coordinates must lie in [0, 1]".into(),
            ));
        }
        let mut out = Vec::with_capacity(layers.len());
        for (d, (k, mut edges)) in layers.into_iter().enumerate() {
            if k < 2 {
                return Err(Error::InvalidHypergraph(format!(
                    "layer {d} has cardinality {k} < 2"
                )));
            }
            for e in &mut edges {
                e.sort_unstable();
                if e.len() != k {
                    return Err(Error::InvalidHypergraph(format!(
                        "layer {d}: edge {e:?} does not have {k} vertices"
                    )));
                }
                if e.windows(2).any(|w| w[0] == w[1]) || e.last().is_some_and(|&v| v >= n) {
                    return Err(Error::InvalidHypergraph(format!(
                        "layer {d}: edge {e:?} needs {k} distinct vertices below {n}"
                    )));
                }
            }
            edges.sort_unstable();
            if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidHypergraph(format!(
                    "layer {d}: duplicate edge {:?}",
                    w[0]
                )));
            }
            out.push(HyperedgeLayer { k, edges });
        }
        Ok(MultiLayerHypergraph {
            n,
            alphas,
            layers: out,
        })
    }

    /// Samples a hypergraph from `w`.
    ///
    /// Vertex coordinates are shared by all layers. On layer `d` every
    /// candidate `k_d`-subset, enumerated in lexicographic order, draws one
    /// fresh uniform per non-singleton subset coordinate and is kept with
    /// probability equal to the kernel at those coordinates. Each layer has
    /// its own stream derived from `seed`.
    pub fn sample(
        w: &MultiLayerHypergraphon,
        n: usize,
        seed: u64,
        alpha_mode: AlphaMode,
    ) -> Result<Self> {
        let required = w.cardinalities().into_iter().max().unwrap_or(0);
        if n < required {
            return Err(Error::TooFewVertices { n, required });
        }
        let alphas: Vec<f64> = match alpha_mode {
            AlphaMode::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0));
                let mut a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                a.sort_by(f64::total_cmp);
                a
            }
            AlphaMode::Grid => (0..n).map(|i| crate::kernels::grid_point(i, n)).collect(),
        };

        let mut layers = Vec::with_capacity(w.layers().len());
        for (d, layer) in w.layers().iter().enumerate() {
            let k = layer.k();
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, d as u64 + 1));
            let mut coords = vec![0.0; coordinate_count(k)];
            let mut edges = Vec::new();
            for_each_combination(n, k, |b| {
                for mask in 1..=coordinate_count(k) {
                    coords[mask - 1] = if mask.count_ones() == 1 {
                        alphas[b[mask.trailing_zeros() as usize]]
                    } else {
                        rng.random::<f64>()
                    };
                }
                debug_assert!(b
                    .iter()
                    .enumerate()
                    .all(|(i, &v)| coords[vertex_slot(i)] == alphas[v]));
                if rng.random::<f64>() < layer.eval(&coords) {
                    edges.push(b.to_vec());
                }
            });
            layers.push(HyperedgeLayer { k, edges });
        }
        Ok(MultiLayerHypergraph { n, alphas, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn layers(&self) -> &[HyperedgeLayer] {
        &self.layers
    }

    pub fn layer(&self, d: usize) -> Result<&HyperedgeLayer> {
        self.layers.get(d).ok_or(Error::LayerOutOfRange {
            index: d,
            layers: self.layers.len(),
        })
    }

    /// For every vertex, the indices of its edges on layer `d`.
    pub fn incidence(&self, d: usize) -> Result<Vec<Vec<usize>>> {
        let layer = self.layer(d)?;
        let mut inc = vec![Vec::new(); self.n];
        for (e, edge) in layer.edges.iter().enumerate() {
            for &v in edge {
                inc[v].push(e);
            }
        }
        Ok(inc)
    }

    /// All ordered `(k_d - 1)`-tuples `m` of distinct vertices other than
    /// `vertex` such that `m ∪ {vertex}` is an edge of layer `d`. Each edge
    /// contributes `(k_d - 1)!` tuples.
    pub fn incident_tuples(&self, vertex: usize, d: usize) -> Result<Vec<Vec<usize>>> {
        let layer = self.layer(d)?;
        if vertex >= self.n {
            return Err(Error::InvalidHypergraph(format!(
                "vertex {vertex} out of range"
            )));
        }
        let mut out = Vec::new();
        for edge in layer.edges.iter().filter(|e| e.contains(&vertex)) {
            let others: Vec<usize> = edge.iter().copied().filter(|&v| v != vertex).collect();
            crate::kernels::for_each_permutation(&others, |p| out.push(p.to_vec()));
        }
        Ok(out)
    }
}

/// Visits all `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        f(&c);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{HypergraphonLayer, KernelSpec};

    /// The five-vertex example: edges {1,4},{1,5} and {1,3,4},{1,2,5}, 0-based here.
    fn figure_one() -> MultiLayerHypergraph {
        MultiLayerHypergraph::new(
            5,
            vec![0.1, 0.3, 0.5, 0.7, 0.9],
            vec![
                (2, vec![vec![0, 3], vec![0, 4]]),
                (3, vec![vec![0, 2, 3], vec![0, 1, 4]]),
            ],
        )
        .unwrap()
    }

    fn constant_pair(p: f64) -> MultiLayerHypergraphon {
        MultiLayerHypergraphon::new(vec![
            HypergraphonLayer::constant(2, p).unwrap(),
            HypergraphonLayer::constant(3, p).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn complete_and_empty_samples() {
        let h =
            MultiLayerHypergraph::sample(&constant_pair(1.0), 5, 3, AlphaMode::Uniform).unwrap();
        assert_eq!(h.layers()[0].len(), 10);
        assert_eq!(h.layers()[1].len(), 10);
        let h =
            MultiLayerHypergraph::sample(&constant_pair(0.0), 5, 3, AlphaMode::Uniform).unwrap();
        assert!(h.layers().iter().all(HyperedgeLayer::is_empty));
    }

    #[test]
    fn too_few_vertices() {
        assert_eq!(
            MultiLayerHypergraph::sample(&constant_pair(1.0), 2, 0, AlphaMode::Grid).unwrap_err(),
            Error::TooFewVertices { n: 2, required: 3 }
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let w = MultiLayerHypergraphon::from_specs(&[
            KernelSpec::new("unif2"),
            KernelSpec::new("ind3").with_param("p", 0.6),
        ])
        .unwrap();
        let a = MultiLayerHypergraph::sample(&w, 25, 11, AlphaMode::Uniform).unwrap();
        let b = MultiLayerHypergraph::sample(&w, 25, 11, AlphaMode::Uniform).unwrap();
        assert_eq!(a, b);
        let c = MultiLayerHypergraph::sample(&w, 25, 12, AlphaMode::Uniform).unwrap();
        assert_ne!(a, c);
        assert!(a.alphas().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn incident_tuples_of_figure_one() {
        let h = figure_one();
        let mut t = h.incident_tuples(0, 1).unwrap();
        t.sort();
        assert_eq!(t, vec![vec![1, 4], vec![2, 3], vec![3, 2], vec![4, 1]]);
        assert_eq!(h.incident_tuples(0, 0).unwrap().len(), 2);
    }

    #[test]
    fn incident_tuples_edge_cases() {
        let h = MultiLayerHypergraph::new(4, vec![0.5; 4], vec![(2, vec![vec![0, 1]])]).unwrap();
        assert!(h.incident_tuples(3, 0).unwrap().is_empty());
        let k3 = MultiLayerHypergraph::new(
            3,
            vec![0.5; 3],
            vec![(2, vec![vec![0, 1], vec![0, 2], vec![1, 2]])],
        )
        .unwrap();
        let mut t = k3.incident_tuples(0, 0).unwrap();
        t.sort();
        assert_eq!(t, vec![vec![1], vec![2]]);
        assert!(matches!(
            k3.incident_tuples(0, 1),
            Err(Error::LayerOutOfRange { .. })
        ));
    }

    #[test]
    fn validation_rejects_bad_edges() {
        let bad = |layers| MultiLayerHypergraph::new(3, vec![0.5; 3], layers);
        assert!(bad(vec![(2, vec![vec![0, 0]])]).is_err());
        assert!(bad(vec![(2, vec![vec![0, 3]])]).is_err());
        assert!(bad(vec![(2, vec![vec![0, 1, 2]])]).is_err());
        assert!(bad(vec![(2, vec![vec![0, 1], vec![1, 0]])]).is_err());
        assert!(MultiLayerHypergraph::new(2, vec![0.5], vec![]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let h = figure_one();
        let text = serde_json::to_string(&h).unwrap();
        assert!(text.starts_with("{\"N\":5,"));
        let back: MultiLayerHypergraph = serde_json::from_str(&text).unwrap();
        assert_eq!(back, h);
        let broken = r#"{"N":2,"alphas":[0.1,0.2],"layers":[{"k":2,"edges":[[0,5]]}]}"#;
        assert!(serde_json::from_str::<MultiLayerHypergraph>(broken).is_err());
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut all = Vec::new();
        for_each_combination(5, 3, |c| all.push(c.to_vec()));
        assert_eq!(all.len(), 10);
        assert_eq!(all.first().unwrap(), &vec![0, 1, 2]);
        assert_eq!(all.last().unwrap(), &vec![2, 3, 4]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }
}
