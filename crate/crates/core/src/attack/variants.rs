use std::fmt;

use super::meta::{run_attack, train_meta, MetaClassifier, MetaKind, Prediction};
use super::vector::AttackVector;
use super::AttackError;
use crate::models::TrainedModel;

/// Ratio classes of the fine-grained attack, in label order.
pub const FINE_GRAINED_RATIOS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct FineGrainedPrediction {
    pub label: usize,
    pub ratio: f64,
    pub confidence: f64,
}

pub fn fine_grained_attack(meta: &MetaClassifier, f: &AttackVector) -> Result<FineGrainedPrediction, AttackError> {
    if meta.n_labels() != FINE_GRAINED_RATIOS.len() {
        return Err(AttackError::Config(format!("fine-grained attack needs a {}-class meta-classifier", FINE_GRAINED_RATIOS.len())));
    }
    let p = run_attack(meta, f)?;
    Ok(FineGrainedPrediction { label: p.label, ratio: FINE_GRAINED_RATIOS[p.label], confidence: p.confidence })
}

/// Which side of the property value dominates a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dominance {
    /// The value is a minority (ratio below one half).
    Other,
    Balanced,
    /// The value is the majority.
    Value,
}

pub fn dominance(ratio: f64) -> Dominance {
    if ratio < 0.5 {
        Dominance::Other
    } else if ratio > 0.5 {
        Dominance::Value
    } else {
        Dominance::Balanced
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateVerdict {
    /// The joining party has the same dominant value as the first honest party.
    Same,
    Flipped,
}

impl fmt::Display for UpdateVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateVerdict::Same => "same",
            UpdateVerdict::Flipped => "flipped",
        })
    }
}

/// Runs the fine-grained attack before and after the update. If the dominant
/// side of the predicted ratio is unchanged, the newcomer's data must lean the
/// same way as the original honest party's.
pub fn model_update_attack(meta: &MetaClassifier, f_original: &AttackVector, f_updated: &AttackVector) -> Result<UpdateVerdict, AttackError> {
    let before = fine_grained_attack(meta, f_original)?;
    let after = fine_grained_attack(meta, f_updated)?;
    Ok(if dominance(before.ratio) == dominance(after.ratio) { UpdateVerdict::Same } else { UpdateVerdict::Flipped })
}

/// A model's flattened parameters as an attack vector.
pub fn white_box_vector(model: &TrainedModel) -> AttackVector {
    AttackVector::white_box(model.flatten_params())
}

/// Flattened parameters as attack vectors.
pub fn white_box_pairs(models: &[(TrainedModel, usize)]) -> Result<Vec<(AttackVector, usize)>, AttackError> {
    let Some((first, _)) = models.first() else {
        return Err(AttackError::SingleClass);
    };
    models
        .iter()
        .map(|(m, label)| {
            if m.arch() != first.arch() || m.layout() != first.layout() {
                return Err(AttackError::Config(format!("model architecture {} does not match {}", m.arch(), first.arch())));
            }
            Ok((white_box_vector(m), *label))
        })
        .collect()
}

/// Trains a meta-classifier on shadow parameters and applies it to `target`.
pub fn white_box_attack(models: &[(TrainedModel, usize)], target: &TrainedModel, kind: MetaKind, seed: u64) -> Result<Prediction, AttackError> {
    let pairs = white_box_pairs(models)?;
    let meta = train_meta(&pairs, kind, seed)?;
    if target.layout() != models[0].0.layout() {
        return Err(AttackError::LengthMismatch { expected: meta.input_len(), got: target.n_params() });
    }
    run_attack(&meta, &AttackVector::white_box(target.flatten_params()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_sides() {
        assert_eq!(dominance(0.3), Dominance::Other);
        assert_eq!(dominance(0.5), Dominance::Balanced);
        assert_eq!(dominance(0.7), Dominance::Value);
    }

    #[test]
    fn identical_vectors_mean_same() {
        let meta = MetaClassifier::from_parameters(MetaKind::FineGrainedLr, 2, 5, (0..15).map(|i| i as f64 * 0.1).collect()).unwrap();
        let f = AttackVector::white_box(vec![0.4, 0.6]);
        assert_eq!(model_update_attack(&meta, &f, &f).unwrap(), UpdateVerdict::Same);
    }
}
