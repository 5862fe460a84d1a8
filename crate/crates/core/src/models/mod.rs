//! Target models trained from scratch: multinomial logistic regression, MLPs
//! and a two-layer GCN, all optimised by Adam with an L2 penalty in the loss.

mod adam;
mod dense;
mod gcn;
mod layout;
mod serialize;

pub use adam::Adam;
pub use dense::DenseObjective;
pub use gcn::{GcnObjective, GraphContext, NormalizedAdjacency};
pub use layout::{ParamLayout, TensorSpec};
pub use serialize::{read_model, write_model};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::rng::rng_from_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("training diverged (non-finite loss at epoch {epoch})")]
    Diverged { epoch: usize },
    #[error("invalid hyperparameters: {0}")]
    Hyperparameters(String),
    #[error("node id {0} is out of range")]
    NodeOutOfRange(usize),
    #[error("model file: {0}")]
    Format(String),
}

/// Differentiable training loss over a fixed sample set.
pub trait Objective {
    fn n_params(&self) -> usize;
    fn n_samples(&self) -> usize;
    /// Loss on `batch` (sample indices); writes the gradient into `grad`.
    fn loss_grad(&self, params: &[f64], batch: &[usize], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Architecture {
    LogisticRegression,
    /// ReLU hidden layers, in order.
    Mlp { hidden: Vec<usize> },
    Gcn { hidden: usize },
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::LogisticRegression => write!(f, "lr"),
            Architecture::Mlp { hidden } => {
                let h: Vec<String> = hidden.iter().map(usize::to_string).collect();
                write!(f, "mlp({})", h.join(","))
            }
            Architecture::Gcn { hidden } => write!(f, "gcn({hidden})"),
        }
    }
}

impl FromStr for Architecture {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ModelError::Format(format!("unknown architecture `{s}`"));
        if s == "lr" {
            return Ok(Architecture::LogisticRegression);
        }
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let inner = rest.strip_suffix(')').ok_or_else(bad)?;
        let sizes = inner
            .split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        match (name, sizes.as_slice()) {
            ("mlp", hidden) if !hidden.is_empty() && hidden.iter().all(|&h| h > 0) => Ok(Architecture::Mlp { hidden: hidden.to_vec() }),
            ("gcn", [h]) if *h > 0 => Ok(Architecture::Gcn { hidden: *h }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Minibatch size; 0 means full batch. Ignored by the GCN.
    pub batch_size: usize,
    pub seed: u64,
}

impl Hyperparameters {
    /// Tabular defaults: lr 0.01, weight decay 1e-4, 200 epochs, batch 64.
    pub fn tabular() -> Hyperparameters {
        Hyperparameters { learning_rate: 0.01, weight_decay: 1e-4, epochs: 200, batch_size: 64, seed: 0 }
    }

    /// GCN defaults: lr 0.01, weight decay 5e-4, 200 full-batch epochs.
    pub fn gcn() -> Hyperparameters {
        Hyperparameters { learning_rate: 0.01, weight_decay: 5e-4, epochs: 200, batch_size: 0, seed: 0 }
    }

    pub fn with_seed(self, seed: u64) -> Hyperparameters {
        Hyperparameters { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::Hyperparameters(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(ModelError::Hyperparameters(format!("weight decay {} must be non-negative", self.weight_decay)));
        }
        Ok(())
    }
}

/// Inputs for a posterior query.
#[derive(Debug, Clone, PartialEq)]
pub enum Queries {
    Features(Array2<f64>),
    Nodes(Vec<usize>),
}

impl Queries {
    pub fn len(&self) -> usize {
        match self {
            Queries::Features(x) => x.nrows(),
            Queries::Nodes(ids) => ids.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The first `k` queries.
    pub fn prefix(&self, k: usize) -> Queries {
        match self {
            Queries::Features(x) => Queries::Features(x.slice(ndarray::s![..k.min(x.nrows()), ..]).to_owned()),
            Queries::Nodes(ids) => Queries::Nodes(ids[..k.min(ids.len())].to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    arch: Architecture,
    layout: ParamLayout,
    params: Vec<f64>,
    n_classes: usize,
    input_width: usize,
    hp: Hyperparameters,
    graph: Option<Arc<GraphContext>>,
    losses: Vec<f64>,
}

fn glorot_init(layout: &ParamLayout, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut params = vec![0.0; layout.total()];
    for (i, t) in layout.tensors().iter().enumerate() {
        if t.shape.len() == 2 {
            let bound = (6.0 / (t.shape[0] + t.shape[1]) as f64).sqrt();
            for p in &mut params[layout.range(i)] {
                *p = rng.random_range(-bound..bound);
            }
        }
    }
    params
}

/// Runs Adam over `objective` and returns the parameters and per-epoch mean loss.
fn optimise(objective: &dyn Objective, mut params: Vec<f64>, hp: &Hyperparameters) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let n = objective.n_samples();
    let batch = if hp.batch_size == 0 { n } else { hp.batch_size.min(n) };
    let mut adam = Adam::new(params.len(), hp.learning_rate);
    let mut rng = rng_from_seed(hp.seed ^ 0x5DEE_CE66_D1A4_F87B);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; params.len()];
    let mut losses = Vec::with_capacity(hp.epochs);
    for epoch in 0..hp.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(batch) {
            let loss = objective.loss_grad(&params, chunk, &mut grad);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(ModelError::Diverged { epoch });
            }
            adam.step(&mut params, &grad);
            total += loss;
            batches += 1;
        }
        losses.push(total / batches as f64);
    }
    Ok((params, losses))
}

fn check_labels(y: &[usize], n_classes: usize) -> Result<(), ModelError> {
    if n_classes < 2 {
        return Err(ModelError::Dimension("need at least two classes".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(ModelError::Dimension(format!("label {bad} outside {n_classes} classes")));
    }
    Ok(())
}

/// Trains a dense softmax network with the given hidden widths.
pub fn train_dense(x: &Array2<f64>, y: &[usize], n_classes: usize, hidden: &[usize], hp: &Hyperparameters) -> Result<TrainedModel, ModelError> {
    hp.validate()?;
    if x.nrows() != y.len() {
        return Err(ModelError::Dimension(format!("{} rows but {} labels", x.nrows(), y.len())));
    }
    if y.is_empty() {
        return Err(ModelError::Dimension("no training samples".into()));
    }
    check_labels(y, n_classes)?;
    let mut widths = vec![x.ncols()];
    widths.extend_from_slice(hidden);
    widths.push(n_classes);
    let x = x.as_standard_layout().into_owned();
    let objective = DenseObjective::new(&widths, &x, y, hp.weight_decay);
    let layout = objective.layout().clone();
    // Logistic regression is convex, so it starts from zero. Directions the
    // data never moves (softmax shifts, one-hot columns collinear with the
    // bias) then stay at zero instead of keeping random initial values.
    let init = if hidden.is_empty() { vec![0.0; layout.total()] } else { glorot_init(&layout, hp.seed) };
    let (params, losses) = optimise(&objective, init, hp)?;
    let arch = if hidden.is_empty() { Architecture::LogisticRegression } else { Architecture::Mlp { hidden: hidden.to_vec() } };
    Ok(TrainedModel { arch, layout, params, n_classes, input_width: widths[0], hp: *hp, graph: None, losses })
}

/// Multinomial logistic regression.
pub fn train_logreg(x: &Array2<f64>, y: &[usize], n_classes: usize, hp: &Hyperparameters) -> Result<TrainedModel, ModelError> {
    train_dense(x, y, n_classes, &[], hp)
}

/// One-hidden-layer ReLU network.
pub fn train_mlp(x: &Array2<f64>, y: &[usize], n_classes: usize, hidden: usize, hp: &Hyperparameters) -> Result<TrainedModel, ModelError> {
    train_dense(x, y, n_classes, &[hidden], hp)
}

/// Transductive two-layer GCN. `labels` covers every node; the loss uses
/// only `train_mask` nodes. Always full batch.
pub fn train_gcn(
    ctx: Arc<GraphContext>,
    labels: &[usize],
    n_classes: usize,
    hidden: usize,
    hp: &Hyperparameters,
    train_mask: &[usize],
) -> Result<TrainedModel, ModelError> {
    hp.validate()?;
    if train_mask.is_empty() {
        return Err(ModelError::Dimension("empty training mask".into()));
    }
    if labels.len() != ctx.n_nodes() {
        return Err(ModelError::Dimension(format!("{} labels for {} nodes", labels.len(), ctx.n_nodes())));
    }
    if let Some(&bad) = train_mask.iter().find(|&&i| i >= ctx.n_nodes()) {
        return Err(ModelError::NodeOutOfRange(bad));
    }
    check_labels(labels, n_classes)?;
    let objective = GcnObjective::new(&ctx, labels, train_mask, hidden, n_classes, hp.weight_decay);
    let layout = objective.layout().clone();
    let init = glorot_init(&layout, hp.seed);
    let full_batch = Hyperparameters { batch_size: 0, ..*hp };
    let (params, losses) = optimise(&objective, init, &full_batch)?;
    let input_width = ctx.n_features();
    Ok(TrainedModel { arch: Architecture::Gcn { hidden }, layout, params, n_classes, input_width, hp: full_batch, graph: Some(ctx), losses })
}

impl TrainedModel {
    /// A model with explicit parameters and no training history.
    pub fn from_parts(
        arch: Architecture,
        n_classes: usize,
        input_width: usize,
        params: Vec<f64>,
        hp: Hyperparameters,
        graph: Option<Arc<GraphContext>>,
    ) -> Result<TrainedModel, ModelError> {
        let layout = match &arch {
            Architecture::LogisticRegression => dense::dense_layout(&[input_width, n_classes]),
            Architecture::Mlp { hidden } => {
                let mut w = vec![input_width];
                w.extend_from_slice(hidden);
                w.push(n_classes);
                dense::dense_layout(&w)
            }
            Architecture::Gcn { hidden } => {
                let ctx = graph.as_ref().ok_or_else(|| ModelError::Format("a GCN needs its graph".into()))?;
                if ctx.n_features() != input_width {
                    return Err(ModelError::Dimension("graph feature width does not match the model".into()));
                }
                gcn::gcn_layout(input_width, *hidden, n_classes)
            }
        };
        if params.len() != layout.total() {
            return Err(ModelError::Dimension(format!("{} parameters given, layout needs {}", params.len(), layout.total())));
        }
        Ok(TrainedModel { arch, layout, params, n_classes, input_width, hp, graph, losses: Vec::new() })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hp
    }

    pub fn graph(&self) -> Option<&Arc<GraphContext>> {
        self.graph.as_ref()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mean training loss per epoch.
    pub fn training_losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn n_params(&self) -> usize {
        self.layout.total()
    }

    /// Parameters in layer order, row-major within each tensor.
    pub fn flatten_params(&self) -> Vec<f64> {
        self.params.clone()
    }

    /// Same model with `flat` as its parameters.
    pub fn unflatten(&self, flat: &[f64]) -> Result<TrainedModel, ModelError> {
        if flat.len() != self.layout.total() {
            return Err(ModelError::Dimension(format!("{} values for {} parameters", flat.len(), self.layout.total())));
        }
        Ok(TrainedModel { params: flat.to_vec(), losses: Vec::new(), ..self.clone() })
    }

    /// View of one named tensor.
    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout.find(name).map(|r| &self.params[r])
    }

    pub fn predict_features(&self, x: &Array2<f64>) -> Result<Array2<f64>, ModelError> {
        if matches!(self.arch, Architecture::Gcn { .. }) {
            return Err(ModelError::Dimension("a GCN answers node-id queries".into()));
        }
        if x.ncols() != self.input_width {
            return Err(ModelError::Dimension(format!("width mismatch: expected {}, got {}", self.input_width, x.ncols())));
        }
        Ok(dense::forward(&self.layout, &self.params, x).pop().expect("output layer"))
    }

    pub fn predict_nodes(&self, nodes: &[usize]) -> Result<Array2<f64>, ModelError> {
        let ctx = match (&self.arch, &self.graph) {
            (Architecture::Gcn { .. }, Some(ctx)) => ctx,
            _ => return Err(ModelError::Dimension("only a GCN answers node-id queries".into())),
        };
        if let Some(&bad) = nodes.iter().find(|&&i| i >= ctx.n_nodes()) {
            return Err(ModelError::NodeOutOfRange(bad));
        }
        let all = gcn::forward(ctx, &self.layout, &self.params);
        Ok(all.select(ndarray::Axis(0), nodes))
    }

    /// Posterior matrix, one row per query.
    pub fn predict_proba(&self, queries: &Queries) -> Result<Array2<f64>, ModelError> {
        match queries {
            Queries::Features(x) => self.predict_features(x),
            Queries::Nodes(ids) => self.predict_nodes(ids),
        }
    }

    /// Fraction of rows whose argmax posterior equals the label.
    pub fn accuracy(&self, queries: &Queries, y: &[usize]) -> Result<f64, ModelError> {
        let probs = self.predict_proba(queries)?;
        let correct = probs
            .rows()
            .into_iter()
            .zip(y)
            .filter(|(row, &c)| argmax(row.as_slice().unwrap_or(&row.to_vec())) == c)
            .count();
        Ok(correct as f64 / y.len().max(1) as f64)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}
