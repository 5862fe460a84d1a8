use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use super::vector::AttackVector;
use super::AttackError;
use crate::models::{argmax, train_dense, Architecture, Hyperparameters, TrainedModel};

/// Meta-classifier architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetaKind {
    /// Logistic regression over two labels (LR and GCN targets).
    BinaryLr,
    /// Hidden layers of 20 and 8 units, learning rate 0.01 (MLP targets).
    TwoLayer20x8,
    /// Hidden layers of 200 and 50 units, learning rate 0.001 (white box).
    TwoLayer200x50,
    /// Logistic regression over the five ratio classes.
    FineGrainedLr,
}

impl MetaKind {
    pub fn hidden(self) -> &'static [usize] {
        match self {
            MetaKind::BinaryLr | MetaKind::FineGrainedLr => &[],
            MetaKind::TwoLayer20x8 => &[20, 8],
            MetaKind::TwoLayer200x50 => &[200, 50],
        }
    }

    pub fn hyperparameters(self) -> Hyperparameters {
        let hp = Hyperparameters::tabular();
        match self {
            MetaKind::TwoLayer200x50 => Hyperparameters { learning_rate: 0.001, ..hp },
            MetaKind::TwoLayer20x8 => hp,
            // Full batch until converged: minibatch steps over thousands of
            // near-collinear posterior features leave the fit short.
            MetaKind::BinaryLr | MetaKind::FineGrainedLr => Hyperparameters { batch_size: 0, epochs: 1000, ..hp },
        }
    }

    /// Whether inputs are standardised before training. Hidden-layer metas
    /// need it: raw posteriors barely vary between shadow models.
    pub fn standardizes(self) -> bool {
        !self.hidden().is_empty()
    }

    /// The label count the kind is built for, if fixed.
    pub fn n_labels(self) -> Option<usize> {
        match self {
            MetaKind::BinaryLr => Some(2),
            MetaKind::FineGrainedLr => Some(5),
            _ => None,
        }
    }
}

impl fmt::Display for MetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetaKind::BinaryLr => "binary-lr",
            MetaKind::TwoLayer20x8 => "two-layer-20-8",
            MetaKind::TwoLayer200x50 => "two-layer-200-50",
            MetaKind::FineGrainedLr => "fine-grained-lr",
        })
    }
}

impl FromStr for MetaKind {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "binary-lr" => Ok(MetaKind::BinaryLr),
            "two-layer-20-8" => Ok(MetaKind::TwoLayer20x8),
            "two-layer-200-50" => Ok(MetaKind::TwoLayer200x50),
            "fine-grained-lr" => Ok(MetaKind::FineGrainedLr),
            other => Err(AttackError::Config(format!("unknown meta-classifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaClassifier {
    kind: MetaKind,
    model: TrainedModel,
    input_len: usize,
    scaler: Scaler,
}

/// Per-feature standardisation fitted on the shadow vectors. Features that
/// do not vary keep unit scale.
#[derive(Debug, Clone, PartialEq)]
struct Scaler {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Scaler {
    fn identity(n: usize) -> Scaler {
        Scaler { mean: vec![0.0; n], scale: vec![1.0; n] }
    }

    fn fit(x: &Array2<f64>) -> Scaler {
        let n = x.nrows() as f64;
        let mean: Vec<f64> = x.columns().into_iter().map(|c| c.sum() / n).collect();
        let scale = x
            .columns()
            .into_iter()
            .zip(&mean)
            .map(|(c, m)| {
                let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
                if sd > 1e-12 { sd } else { 1.0 }
            })
            .collect();
        Scaler { mean, scale }
    }

    fn apply(&self, x: &mut Array2<f64>) {
        for mut row in x.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    /// Largest meta posterior entry.
    pub confidence: f64,
    pub posterior: Vec<f64>,
}

fn canonical_order(a: &(AttackVector, usize), b: &(AttackVector, usize)) -> Ordering {
    a.1.cmp(&b.1).then_with(|| {
        a.0.values()
            .iter()
            .zip(b.0.values())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Trains a meta-classifier on `(vector, label)` pairs with the models-module
/// optimiser. Pairs are put in a canonical order first, so the result does
/// not depend on how the caller ordered them.
pub fn train_meta(pairs: &[(AttackVector, usize)], kind: MetaKind, seed: u64) -> Result<MetaClassifier, AttackError> {
    let first = pairs.first().ok_or(AttackError::SingleClass)?;
    let input_len = first.0.len();
    if let Some((v, _)) = pairs.iter().find(|(v, _)| v.len() != input_len) {
        return Err(AttackError::LengthMismatch { expected: input_len, got: v.len() });
    }
    let max_label = pairs.iter().map(|p| p.1).max().unwrap_or(0);
    if pairs.iter().all(|p| p.1 == first.1) {
        return Err(AttackError::SingleClass);
    }
    let n_labels = match kind.n_labels() {
        Some(n) if max_label >= n => return Err(AttackError::Config(format!("label {max_label} does not fit {kind}"))),
        Some(n) => n,
        None => max_label + 1,
    };
    let mut sorted: Vec<&(AttackVector, usize)> = pairs.iter().collect();
    sorted.sort_by(|a, b| canonical_order(a, b));
    let mut x = Array2::from_shape_fn((sorted.len(), input_len), |(i, j)| sorted[i].0.values()[j]);
    let y: Vec<usize> = sorted.iter().map(|p| p.1).collect();
    let scaler = if kind.standardizes() { Scaler::fit(&x) } else { Scaler::identity(input_len) };
    scaler.apply(&mut x);
    let model = train_dense(&x, &y, n_labels, kind.hidden(), &kind.hyperparameters().with_seed(seed))?;
    Ok(MetaClassifier { kind, model, input_len, scaler })
}

impl MetaClassifier {
    /// A meta-classifier with explicit parameters, e.g. all zeros.
    pub fn from_parameters(kind: MetaKind, input_len: usize, n_labels: usize, params: Vec<f64>) -> Result<MetaClassifier, AttackError> {
        let hidden = kind.hidden();
        let arch = if hidden.is_empty() { Architecture::LogisticRegression } else { Architecture::Mlp { hidden: hidden.to_vec() } };
        let model = TrainedModel::from_parts(arch, n_labels, input_len, params, kind.hyperparameters(), None)?;
        Ok(MetaClassifier { kind, model, input_len, scaler: Scaler::identity(input_len) })
    }

    pub fn kind(&self) -> MetaKind {
        self.kind
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn n_labels(&self) -> usize {
        self.model.n_classes()
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    /// Meta posterior for each row of vectors.
    pub fn predict_many(&self, vectors: &[&AttackVector]) -> Result<Vec<Prediction>, AttackError> {
        if let Some(v) = vectors.iter().find(|v| v.len() != self.input_len) {
            return Err(AttackError::LengthMismatch { expected: self.input_len, got: v.len() });
        }
        let mut x = Array2::from_shape_fn((vectors.len(), self.input_len), |(i, j)| vectors[i].values()[j]);
        self.scaler.apply(&mut x);
        let probs = self.model.predict_features(&x)?;
        Ok(probs
            .rows()
            .into_iter()
            .map(|row| {
                let posterior = row.to_vec();
                let label = argmax(&posterior);
                Prediction { label, confidence: posterior[label], posterior }
            })
            .collect())
    }
}

/// Applies the meta-classifier to one attack vector.
pub fn run_attack(meta: &MetaClassifier, f: &AttackVector) -> Result<Prediction, AttackError> {
    Ok(meta.predict_many(&[f])?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vec<(AttackVector, usize)> {
        (0..100).map(|i| (AttackVector::white_box(if i % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }), i % 2)).collect()
    }

    #[test]
    fn separable_pairs() {
        let meta = train_meta(&toy(), MetaKind::BinaryLr, 3).unwrap();
        for (v, label) in toy() {
            assert_eq!(run_attack(&meta, &v).unwrap().label, label);
        }
    }

    #[test]
    fn order_does_not_matter() {
        let mut rev = toy();
        rev.reverse();
        let a = train_meta(&toy(), MetaKind::TwoLayer20x8, 9).unwrap();
        let b = train_meta(&rev, MetaKind::TwoLayer20x8, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.model().layout().tensors()[0].shape, vec![20, 2]);
        assert_eq!(b.model().layout().tensors()[2].shape, vec![8, 20]);
    }

    #[test]
    fn uniform_meta_confidence() {
        let meta = MetaClassifier::from_parameters(MetaKind::FineGrainedLr, 3, 5, vec![0.0; 20]).unwrap();
        let p = run_attack(&meta, &AttackVector::white_box(vec![0.3, 0.2, 0.5])).unwrap();
        assert!((p.confidence - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let one: Vec<_> = toy().into_iter().filter(|p| p.1 == 0).collect();
        assert!(matches!(train_meta(&one, MetaKind::BinaryLr, 0), Err(AttackError::SingleClass)));
        let mut mixed = toy();
        mixed.push((AttackVector::white_box(vec![1.0]), 0));
        assert!(matches!(train_meta(&mixed, MetaKind::BinaryLr, 0), Err(AttackError::LengthMismatch { .. })));
        let meta = train_meta(&toy(), MetaKind::BinaryLr, 0).unwrap();
        assert!(run_attack(&meta, &AttackVector::white_box(vec![1.0; 3])).is_err());
    }
}
