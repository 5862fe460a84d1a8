//! Fully connected softmax networks: zero hidden layers is multinomial
//! logistic regression.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::layout::{ParamLayout, TensorSpec};
use super::Objective;

/// Layer widths from input to output, e.g. `[w, 12, 4]`.
pub(crate) fn dense_layout(widths: &[usize]) -> ParamLayout {
    let mut tensors = Vec::new();
    let n_layers = widths.len() - 1;
    for k in 0..n_layers {
        let (inp, out) = (widths[k], widths[k + 1]);
        let (w, b) = if n_layers == 1 { ("weight".to_string(), "bias".to_string()) } else { (format!("w{k}"), format!("b{k}")) };
        tensors.push(TensorSpec::new(w, &[out, inp]));
        tensors.push(TensorSpec::new(b, &[out]));
    }
    ParamLayout::new(tensors)
}

fn weight<'a>(layout: &ParamLayout, params: &'a [f64], k: usize) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
    let wr = layout.range(2 * k);
    let shape = &layout.tensors()[2 * k].shape;
    let w = ArrayView2::from_shape((shape[0], shape[1]), &params[wr]).expect("layout shape");
    let b = ArrayView1::from(&params[layout.range(2 * k + 1)]);
    (w, b)
}

pub(crate) fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
}

/// Forward pass returning every layer's post-activation, the last being
/// the softmax posterior.
pub(crate) fn forward(layout: &ParamLayout, params: &[f64], x: &Array2<f64>) -> Vec<Array2<f64>> {
    let n_layers = layout.tensors().len() / 2;
    let mut acts = Vec::with_capacity(n_layers + 1);
    acts.push(x.clone());
    for k in 0..n_layers {
        let (w, b) = weight(layout, params, k);
        let mut z = acts[k].dot(&w.t());
        z += &b;
        if k + 1 < n_layers {
            z.mapv_inplace(|v| v.max(0.0));
        } else {
            softmax_rows(&mut z);
        }
        acts.push(z);
    }
    acts
}

/// Mean cross-entropy of a posterior matrix.
pub(crate) fn cross_entropy(probs: &Array2<f64>, y: &[usize]) -> f64 {
    -y.iter().enumerate().map(|(i, &c)| probs[[i, c]].max(1e-300).ln()).sum::<f64>() / y.len() as f64
}

/// Cross-entropy plus `weight_decay / 2 · ‖θ‖²` over a dense network.
pub struct DenseObjective<'a> {
    layout: ParamLayout,
    x: &'a Array2<f64>,
    y: &'a [usize],
    weight_decay: f64,
}

impl<'a> DenseObjective<'a> {
    pub fn new(widths: &[usize], x: &'a Array2<f64>, y: &'a [usize], weight_decay: f64) -> DenseObjective<'a> {
        DenseObjective { layout: dense_layout(widths), x, y, weight_decay }
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }
}

impl Objective for DenseObjective<'_> {
    fn n_params(&self) -> usize {
        self.layout.total()
    }

    fn n_samples(&self) -> usize {
        self.y.len()
    }

    fn loss_grad(&self, params: &[f64], batch: &[usize], grad: &mut [f64]) -> f64 {
        let xb = self.x.select(Axis(0), batch);
        let yb: Vec<usize> = batch.iter().map(|&i| self.y[i]).collect();
        let acts = forward(&self.layout, params, &xb);
        let n_layers = acts.len() - 1;
        let probs = &acts[n_layers];
        let loss = cross_entropy(probs, &yb);

        let mut delta = probs.clone();
        for (i, &c) in yb.iter().enumerate() {
            delta[[i, c]] -= 1.0;
        }
        delta /= batch.len() as f64;
        for k in (0..n_layers).rev() {
            let gw: Array2<f64> = delta.t().dot(&acts[k]);
            let gb: Array1<f64> = delta.sum_axis(Axis(0));
            grad[self.layout.range(2 * k)].copy_from_slice(gw.as_slice().expect("standard layout"));
            grad[self.layout.range(2 * k + 1)].copy_from_slice(gb.as_slice().expect("standard layout"));
            if k > 0 {
                let (w, _) = weight(&self.layout, params, k);
                let mut back = delta.dot(&w);
                ndarray::Zip::from(&mut back).and(&acts[k]).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
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
