use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::Rng;

use super::jacobi::jacobi_eigendecomposition;
use crate::error::{Error, Result};
use crate::monitor::nearest_rank;
use crate::rng::{stream_rng, streams};

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    /// Stored as `(min, max)`.
    edges: BTreeSet<(usize, usize)>,
}

impl SimpleGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) references a vertex >= {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop on vertex {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(SimpleGraph { n, edges: set })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SimpleGraph> {
        if perm.len() != self.n {
            return Err(Error::InvalidArgument("permutation length mismatch".into()));
        }
        SimpleGraph::new(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }
}

/// Erdős–Rényi graphs whose size parameters are resampled from empirical
/// vertex/edge counts: `n ~ vertex_counts`, `m ~ edge_counts`, edge
/// probability `min(1, m / n^2)`.
pub fn fake_graphs(
    vertex_counts: &[usize],
    edge_counts: &[usize],
    count: usize,
    seed: u64,
) -> Result<Vec<SimpleGraph>> {
    if vertex_counts.is_empty() {
        return Err(Error::Empty("vertex count samples"));
    }
    if edge_counts.is_empty() {
        return Err(Error::Empty("edge count samples"));
    }
    let mut rng = stream_rng(seed, streams::FAKE_GRAPHS);
    (0..count)
        .map(|_| {
            let n = *vertex_counts.choose(&mut rng).expect("nonempty");
            let m = *edge_counts.choose(&mut rng).expect("nonempty");
            let p = if n == 0 {
                0.0
            } else {
                (m as f64 / (n * n) as f64).min(1.0)
            };
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            SimpleGraph::new(n, edges)
        })
        .collect()
}

/// `I - D^{-1/2} A D^{-1/2}`, with all-zero rows and columns for isolated vertices.
pub fn normalized_laplacian(g: &SimpleGraph) -> Array2<f64> {
    let deg = g.degrees();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();
    let mut l = Array2::zeros((g.n, g.n));
    for v in 0..g.n {
        if deg[v] > 0 {
            l[[v, v]] = 1.0;
        }
    }
    for (u, v) in g.edges() {
        let w = -inv_sqrt[u] * inv_sqrt[v];
        l[[u, v]] = w;
        l[[v, u]] = w;
    }
    l
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    pub eig_count: usize,
    pub hks_time: f64,
    pub hks_quantiles: usize,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            eig_count: 30,
            hks_time: 10.0,
            hks_quantiles: 10,
        }
    }
}

/// Ascending normalized-Laplacian eigenvalues (zero-padded or truncated to
/// `eig_count`) followed by nearest-rank quantiles of the heat kernel
/// signature at the midpoints `(2i + 1) / (2 hks_quantiles)`.
pub fn graph_spectral_features(g: &SimpleGraph, params: &SpectralParams) -> Result<Vec<f64>> {
    if g.n == 0 {
        return Err(Error::Empty("graph"));
    }
    let eig = jacobi_eigendecomposition(&normalized_laplacian(g))?;
    let mut features: Vec<f64> = eig.values.iter().copied().take(params.eig_count).collect();
    features.resize(params.eig_count, 0.0);

    let heat: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| (-params.hks_time * l).exp())
        .collect();
    let hks: Vec<f64> = (0..g.n)
        .map(|v| {
            heat.iter()
                .enumerate()
                .map(|(i, h)| h * eig.vectors[[v, i]].powi(2))
                .sum()
        })
        .collect();
    for i in 0..params.hks_quantiles {
        let q = (2 * i + 1) as f64 / (2 * params.hks_quantiles) as f64;
        features.push(nearest_rank(&hks, q)?);
    }
    Ok(features)
}

/// First line `n`, then one `u v` line per edge.
pub fn render_graph(g: &SimpleGraph) -> String {
    let mut out = format!("{}\n", g.n);
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

pub fn parse_graph(text: &str) -> Result<SimpleGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, first) = lines
        .next()
        .ok_or_else(|| Error::Truncated("graph file is empty".into()))?;
    let n: usize = first
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid vertex count '{first}'")))?;
    let mut edges = Vec::new();
    for (line, l) in lines {
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::parse(line, "expected 'u v'"));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(line, format!("invalid vertex '{s}'")))
        };
        edges.push((parse(parts[0])?, parse(parts[1])?));
    }
    SimpleGraph::new(n, edges)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<SimpleGraph> {
    let path = path.as_ref();
    parse_graph(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn save_graph(g: &SimpleGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_graph(g)).map_err(|e| Error::io(path, e))
}
