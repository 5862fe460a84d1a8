use rayon::prelude::*;

use super::task::Task;
use super::vector::{build_attack_vector, AttackVector};
use super::AttackError;
use crate::data::PropertySpec;
use crate::models::{ModelError, TrainedModel};
use crate::rng::{derive_seed, stream};

/// Shadow training plan. `properties[j]` is the property carried by label `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowConfig {
    pub n_shadow: usize,
    pub shadow_size: usize,
    pub properties: Vec<PropertySpec>,
    /// Multi-party (shadow ∪ D_adv) versus single-party (shadow alone).
    pub include_adv_data: bool,
}

impl ShadowConfig {
    /// Two labels: `p` (label 0) and the same property at `bar_ratio` (label 1).
    pub fn binary(p: PropertySpec, bar_ratio: f64, n_shadow: usize, shadow_size: usize) -> Result<ShadowConfig, AttackError> {
        let bar = p.with_ratio(bar_ratio)?;
        let cfg = ShadowConfig { n_shadow, shadow_size, properties: vec![p, bar], include_adv_data: true };
        cfg.validate()?;
        Ok(cfg)
    }

    /// One label per ratio, in the given order.
    pub fn fine_grained(base: &PropertySpec, ratios: &[f64], n_shadow: usize, shadow_size: usize) -> Result<ShadowConfig, AttackError> {
        let properties = ratios.iter().map(|&r| base.with_ratio(r)).collect::<Result<Vec<_>, _>>()?;
        let cfg = ShadowConfig { n_shadow, shadow_size, properties, include_adv_data: true };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_labels(&self) -> usize {
        self.properties.len()
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        let m = self.properties.len();
        if m < 2 {
            return Err(AttackError::Config("need at least two properties".into()));
        }
        for (i, p) in self.properties.iter().enumerate() {
            if self.properties[..i].iter().any(|q| q.ratio == p.ratio) {
                return Err(AttackError::Config(format!("ratio {} appears twice", p.ratio)));
            }
            if p.attribute != self.properties[0].attribute || p.value != self.properties[0].value {
                return Err(AttackError::Config("all properties must concern the same attribute value".into()));
            }
        }
        if self.n_shadow == 0 || self.n_shadow % m != 0 {
            return Err(AttackError::Config(format!("n_shadow {} is not a positive multiple of {m} labels", self.n_shadow)));
        }
        if self.shadow_size == 0 {
            return Err(AttackError::Config("shadow_size must be positive".into()));
        }
        Ok(())
    }
}

/// Resamples `n_shadow` datasets from the auxiliary pool. Shadow `i` has
/// label `i mod |properties|`, so labels are exactly balanced.
pub fn generate_shadow_datasets<T: Task>(task: &T, cfg: &ShadowConfig, seed: u64) -> Result<Vec<(T::Data, usize)>, AttackError> {
    cfg.validate()?;
    (0..cfg.n_shadow)
        .map(|i| {
            let label = i % cfg.n_labels();
            let s = derive_seed(seed, stream::SHADOW_DATA, i as u64);
            Ok((task.resample(task.aux(), &cfg.properties[label], cfg.shadow_size, s)?, label))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ShadowMember {
    pub index: usize,
    pub label: usize,
    pub model: TrainedModel,
}

#[derive(Debug, Clone)]
pub struct ShadowEnsemble {
    pub members: Vec<ShadowMember>,
    /// Indices whose training failed, with the reason.
    pub failed: Vec<(usize, ModelError)>,
}

impl ShadowEnsemble {
    pub fn total(&self) -> usize {
        self.members.len() + self.failed.len()
    }
}

/// Trains one shadow model per set (on set ∪ D_adv when `d_adv` is given).
/// Failed trainings are logged and dropped; more than 5% failures aborts.
pub fn train_shadow_models<T: Task>(task: &T, sets: &[(T::Data, usize)], d_adv: Option<&T::Data>, seed: u64) -> Result<ShadowEnsemble, AttackError> {
    let results: Vec<(usize, usize, Result<TrainedModel, ModelError>)> = sets
        .par_iter()
        .enumerate()
        .map(|(i, (data, label))| {
            let mut parts = vec![data];
            parts.extend(d_adv);
            (i, *label, task.train(&parts, derive_seed(seed, stream::SHADOW_MODEL, i as u64)))
        })
        .collect();
    let mut ensemble = ShadowEnsemble { members: Vec::with_capacity(sets.len()), failed: Vec::new() };
    for (index, label, r) in results {
        match r {
            Ok(model) => ensemble.members.push(ShadowMember { index, label, model }),
            Err(e) => {
                log::warn!("shadow model {index} failed: {e}");
                ensemble.failed.push((index, e));
            }
        }
    }
    if ensemble.failed.len() * 20 > sets.len() {
        return Err(AttackError::TooManyFailures { failed: ensemble.failed.len(), total: sets.len() });
    }
    Ok(ensemble)
}

/// Shadow models queried on the probe set: the meta-classifier's training pairs.
pub fn train_shadow_ensemble<T: Task>(
    task: &T,
    sets: &[(T::Data, usize)],
    d_adv: Option<&T::Data>,
    seed: u64,
) -> Result<(Vec<(AttackVector, usize)>, ShadowEnsemble), AttackError> {
    let ensemble = train_shadow_models(task, sets, d_adv, seed)?;
    let pairs = ensemble
        .members
        .iter()
        .map(|m| Ok((build_attack_vector(&m.model, task.probes())?, m.label)))
        .collect::<Result<Vec<_>, AttackError>>()?;
    Ok((pairs, ensemble))
}
