//! Activation graphs and their persistence diagrams.
//!
//! For layer `l` and input `x`, the activation graph is the complete bipartite
//! graph between the `d_l` input units and the `d_{l+1}` output units with edge
//! weight `|W_l(i,j) * x_l(i)|`. Its 0-dimensional superlevel persistence
//! diagram is the multiset of weights of a maximum spanning tree, which we
//! compute with Kruskal's algorithm.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActivationTrace, NetworkModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationGraph {
    /// 1-based layer index.
    pub layer_index: usize,
    pub weights: Array2<f64>,
}

impl ActivationGraph {
    pub fn in_size(&self) -> usize {
        self.weights.nrows()
    }

    pub fn out_size(&self) -> usize {
        self.weights.ncols()
    }
}

/// Non-increasing weights of a maximum spanning tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PersistenceDiagram {
    weights: Vec<f64>,
}

impl PersistenceDiagram {
    /// Sorts `weights` into non-increasing order.
    pub fn new(mut weights: Vec<f64>) -> Self {
        sort_descending(&mut weights);
        PersistenceDiagram { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> PersistenceDiagram {
        PersistenceDiagram::new(self.weights.iter().map(|w| w * factor).collect())
    }
}

pub(crate) fn sort_descending(values: &mut [f64]) {
    values.sort_by(|a, b| b.total_cmp(a));
}

/// Which weight matrices contribute activation graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSelection {
    layers: Vec<usize>,
}

impl LayerSelection {
    /// Every hidden map `1..L-1`, plus the softmax layer `L` when
    /// `include_output` is set.
    pub fn all(net: &NetworkModel, include_output: bool) -> Result<Self> {
        let max = selectable_max(net, include_output);
        if max == 0 {
            return Err(Error::EmptyLayers);
        }
        Ok(LayerSelection {
            layers: (1..=max).collect(),
        })
    }

    /// Explicit 1-based layer indices, deduplicated and sorted.
    pub fn explicit(net: &NetworkModel, layers: &[usize], include_output: bool) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::EmptyLayers);
        }
        let max = selectable_max(net, include_output);
        let mut sorted = layers.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&bad) = sorted.iter().find(|&&l| l == 0 || l > max) {
            return Err(Error::LayerOutOfRange { layer: bad, max });
        }
        Ok(LayerSelection { layers: sorted })
    }

    pub fn indices(&self) -> &[usize] {
        &self.layers
    }
}

fn selectable_max(net: &NetworkModel, include_output: bool) -> usize {
    if include_output {
        net.num_layers()
    } else {
        net.num_layers() - 1
    }
}

thread_local! {
    static GRAPH_BUILDS: RefCell<BTreeMap<usize, u64>> = const { RefCell::new(BTreeMap::new()) };
}

/// Number of activation graphs built on the current thread, per layer.
pub fn graph_build_counts() -> BTreeMap<usize, u64> {
    GRAPH_BUILDS.with(|c| c.borrow().clone())
}

pub fn reset_graph_build_counts() {
    GRAPH_BUILDS.with(|c| c.borrow_mut().clear());
}

/// Activation graph of the 1-based `layer`. Any layer of the network may be
/// requested here; the default exclusion of the softmax layer lives in
/// [`LayerSelection`].
pub fn activation_graph(
    trace: &ActivationTrace,
    net: &NetworkModel,
    layer: usize,
) -> Result<ActivationGraph> {
    let dense = net.layer(layer)?;
    let input = trace.layer_input(layer).ok_or(Error::LayerOutOfRange {
        layer,
        max: trace.activations.len(),
    })?;
    if input.len() != dense.in_size() {
        return Err(Error::DimensionMismatch {
            layer,
            message: format!(
                "trace input has {} units, layer expects {}",
                input.len(),
                dense.in_size()
            ),
        });
    }
    let mut weights = dense.weights.clone();
    for (mut row, x) in weights.rows_mut().into_iter().zip(input.iter()) {
        row.mapv_inplace(|w| (w * x).abs());
    }
    GRAPH_BUILDS.with(|c| *c.borrow_mut().entry(layer).or_default() += 1);
    Ok(ActivationGraph {
        layer_index: layer,
        weights,
    })
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Weight multiset of a maximum spanning tree of a dense bipartite graph given
/// by its `in × out` weight matrix.
///
/// Edges are scanned by decreasing weight, ties by input then output index.
pub fn bipartite_mst_weights(weights: &Array2<f64>) -> Result<Vec<f64>> {
    let (rows, cols) = weights.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyGraph {
            in_size: rows,
            out_size: cols,
        });
    }
    let mut edges: Vec<(f64, u32, u32)> = Vec::with_capacity(rows * cols);
    for ((i, j), &w) in weights.indexed_iter() {
        edges.push((w, i as u32, j as u32));
    }
    edges.sort_unstable_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let target = rows + cols - 1;
    let mut sets = DisjointSet::new(rows + cols);
    let mut tree = Vec::with_capacity(target);
    for (w, i, j) in edges {
        if sets.union(i as usize, rows + j as usize) {
            tree.push(w);
            if tree.len() == target {
                break;
            }
        }
    }
    debug_assert_eq!(tree.len(), target, "complete bipartite graph is connected");
    Ok(tree)
}

pub fn persistence_diagram(graph: &ActivationGraph) -> Result<PersistenceDiagram> {
    // Kruskal emits weights already in non-increasing order.
    Ok(PersistenceDiagram {
        weights: bipartite_mst_weights(&graph.weights)?,
    })
}

/// Diagrams of the selected layers for one already-computed trace.
pub fn diagrams_for_trace(
    net: &NetworkModel,
    trace: &ActivationTrace,
    layers: &LayerSelection,
) -> Result<Vec<PersistenceDiagram>> {
    layers
        .indices()
        .iter()
        .map(|&l| persistence_diagram(&activation_graph(trace, net, l)?))
        .collect()
}

/// Forward pass followed by one diagram per selected layer, in layer order.
pub fn diagrams_for(
    net: &NetworkModel,
    x: &[f64],
    layers: &LayerSelection,
) -> Result<Vec<PersistenceDiagram>> {
    let trace = net.forward(x)?;
    diagrams_for_trace(net, &trace, layers)
}
