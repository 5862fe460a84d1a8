//! Two-layer graph convolution: `Z = softmax(Â·ReLU(Â·X·W0)·W1)` with
//! `Â = D^{-1/2}(A + I)D^{-1/2}`.

use ndarray::{Array2, ArrayView2};

use super::dense::{cross_entropy, softmax_rows};
use super::layout::{ParamLayout, TensorSpec};
use super::Objective;

/// Symmetric sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    /// Builds `Â` from undirected edges; self-loops are added here, so every
    /// degree is at least one.
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> NormalizedAdjacency {
        let mut neighbours: Vec<Vec<usize>> = (0..n_nodes).map(|i| vec![i]).collect();
        for &(u, v) in edges {
            if u != v {
                neighbours[u].push(v);
                neighbours[v].push(u);
            }
        }
        for n in &mut neighbours {
            n.sort_unstable();
            n.dedup();
        }
        let degree: Vec<f64> = neighbours.iter().map(|n| n.len() as f64).collect();
        let mut row_ptr = Vec::with_capacity(n_nodes + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, n) in neighbours.iter().enumerate() {
            for &j in n {
                cols.push(j);
                vals.push(1.0 / (degree[i] * degree[j]).sqrt());
            }
            row_ptr.push(cols.len());
        }
        NormalizedAdjacency { row_ptr, cols, vals }
    }

    pub fn n_nodes(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[row.clone()].binary_search(&j).map(|k| self.vals[row.start + k]).unwrap_or(0.0)
    }

    /// Non-zero entries of row `i` as `(column, value)`.
    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.n_nodes();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[[i, self.cols[k]]] = self.vals[k];
            }
        }
        out
    }

    /// `Â · m`.
    pub fn matmul(&self, m: &Array2<f64>) -> Array2<f64> {
        let m = m.as_standard_layout();
        let w = m.ncols();
        let src = m.as_slice().expect("standard layout");
        let mut out = vec![0.0; self.n_nodes() * w];
        for (i, dst) in out.chunks_exact_mut(w.max(1)).enumerate().take(self.n_nodes()) {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.vals[k];
                let j = self.cols[k];
                for (d, s) in dst.iter_mut().zip(&src[j * w..(j + 1) * w]) {
                    *d += a * s;
                }
            }
        }
        Array2::from_shape_vec((self.n_nodes(), w), out).expect("shape")
    }
}

/// The fixed inputs of a transductive GCN: the graph and node features.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphContext {
    pub edges: Vec<(usize, usize)>,
    pub adjacency: NormalizedAdjacency,
    pub features: Array2<f64>,
    /// `Â·X`, fixed for the graph's lifetime.
    propagated: Array2<f64>,
}

impl GraphContext {
    pub fn new(edges: Vec<(usize, usize)>, features: Array2<f64>) -> GraphContext {
        let adjacency = NormalizedAdjacency::new(features.nrows(), &edges);
        let propagated = adjacency.matmul(&features);
        GraphContext { edges, adjacency, features, propagated }
    }

    pub fn n_nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }
}

pub(crate) fn gcn_layout(n_features: usize, hidden: usize, n_classes: usize) -> ParamLayout {
    ParamLayout::new(vec![TensorSpec::new("w0", &[n_features, hidden]), TensorSpec::new("w1", &[hidden, n_classes])])
}

fn weights<'a>(layout: &ParamLayout, params: &'a [f64]) -> (ArrayView2<'a, f64>, ArrayView2<'a, f64>) {
    let s0 = &layout.tensors()[0].shape;
    let s1 = &layout.tensors()[1].shape;
    (
        ArrayView2::from_shape((s0[0], s0[1]), &params[layout.range(0)]).expect("layout shape"),
        ArrayView2::from_shape((s1[0], s1[1]), &params[layout.range(1)]).expect("layout shape"),
    )
}

fn hidden_layer(ctx: &GraphContext, w0: &ArrayView2<f64>) -> Array2<f64> {
    let mut h1 = ctx.propagated.dot(w0);
    h1.mapv_inplace(|v| v.max(0.0));
    h1
}

/// Posterior for every node.
pub(crate) fn forward(ctx: &GraphContext, layout: &ParamLayout, params: &[f64]) -> Array2<f64> {
    let (w0, w1) = weights(layout, params);
    let h1 = hidden_layer(ctx, &w0);
    let mut probs = ctx.adjacency.matmul(&h1.dot(&w1));
    softmax_rows(&mut probs);
    probs
}

/// Cross-entropy over the supervised nodes plus `weight_decay / 2 · ‖θ‖²`.
pub struct GcnObjective<'a> {
    layout: ParamLayout,
    ctx: &'a GraphContext,
    labels: &'a [usize],
    mask: &'a [usize],
    weight_decay: f64,
}

impl<'a> GcnObjective<'a> {
    /// `labels` covers every node; only `mask` nodes contribute to the loss.
    pub fn new(ctx: &'a GraphContext, labels: &'a [usize], mask: &'a [usize], hidden: usize, n_classes: usize, weight_decay: f64) -> Self {
        GcnObjective { layout: gcn_layout(ctx.n_features(), hidden, n_classes), ctx, labels, mask, weight_decay }
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }
}

impl Objective for GcnObjective<'_> {
    fn n_params(&self) -> usize {
        self.layout.total()
    }

    fn n_samples(&self) -> usize {
        self.mask.len()
    }

    /// `batch` indexes into the mask.
    fn loss_grad(&self, params: &[f64], batch: &[usize], grad: &mut [f64]) -> f64 {
        let (w0, w1) = weights(&self.layout, params);
        let h1 = hidden_layer(self.ctx, &w0);
        let hw = h1.dot(&w1);
        let l = hw.ncols();
        let nodes: Vec<usize> = batch.iter().map(|&b| self.mask[b]).collect();
        let ys: Vec<usize> = nodes.iter().map(|&i| self.labels[i]).collect();
        // Output rows are only needed for the supervised nodes.
        let mut probs = Array2::zeros((nodes.len(), l));
        for (r, &i) in nodes.iter().enumerate() {
            let mut row = probs.row_mut(r);
            for (k, a) in self.ctx.adjacency.row(i) {
                row.scaled_add(a, &hw.row(k));
            }
        }
        softmax_rows(&mut probs);
        let loss = cross_entropy(&probs, &ys);

        // Â is symmetric, so Âᵀ·dZ scatters each supervised row to its neighbours.
        let scale = 1.0 / nodes.len() as f64;
        let mut dp = Array2::zeros(hw.raw_dim());
        for (r, (&i, &y)) in nodes.iter().zip(&ys).enumerate() {
            let mut dz = probs.row(r).to_owned();
            dz[y] -= 1.0;
            dz *= scale;
            for (k, a) in self.ctx.adjacency.row(i) {
                dp.row_mut(k).scaled_add(a, &dz);
            }
        }
        let gw1 = h1.t().dot(&dp);
        let mut dh = dp.dot(&w1.t());
        ndarray::Zip::from(&mut dh).and(&h1).for_each(|d, &h| {
            if h <= 0.0 {
                *d = 0.0;
            }
        });
        let gw0 = self.ctx.propagated.t().dot(&dh);
        grad[self.layout.range(0)].copy_from_slice(gw0.as_standard_layout().as_slice().expect("contiguous"));
        grad[self.layout.range(1)].copy_from_slice(gw1.as_standard_layout().as_slice().expect("contiguous"));

        let mut penalty = 0.0;
        if self.weight_decay > 0.0 {
            for (g, &p) in grad.iter_mut().zip(params) {
                *g += self.weight_decay * p;
                penalty += p * p;
            }
        }
        loss + 0.5 * self.weight_decay * penalty
    }
}
