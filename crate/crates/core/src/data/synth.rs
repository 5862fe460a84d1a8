//! Synthetic tabular data with a controlled sensitive attribute.
//!
//! The population has `n_numeric` Gaussian features `x*`, `n_categorical`
//! three-level features `c*` (tertiles of a Gaussian latent), a numeric
//! sensitive attribute `A` with two strata (uniform on `[0, 5)` and `(5, 10]`)
//! and a categorical target `y`.
//!
//! The target is drawn from a softmax teacher fixed by `task_seed`: linear in
//! every feature latent outside X′ and quadratic in the X′ latents. When
//! `X~A`, each X′ latent is shifted by `±strength` according to A's stratum;
//! the shift is symmetric, so the quadratic teacher keeps `y` independent of
//! `A` unless the scenario also has `Y~A`, which adds `strength·1[A>5]` to the
//! logit of class 0.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::TabularDataset;
use super::resample::stratified_count;
use super::schema::{AttributeSchema, Column};
use super::DataError;
use crate::rng::{derive_seed, rng_from_seed, stream};

pub const SENSITIVE_COLUMN: &str = "A";
pub const TARGET_COLUMN: &str = "y";
const CATEGORICAL_CUTS: [f64; 2] = [-0.430_727_299_295_457_5, 0.430_727_299_295_457_5];
const REDUCED_WIDTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// X~A, Y~A
    CorrelatedBoth,
    /// X⊥A, Y~A
    LabelOnly,
    /// X~A, Y⊥A
    FeaturesOnly,
    /// X⊥A, Y⊥A
    Independent,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::CorrelatedBoth, Scenario::LabelOnly, Scenario::FeaturesOnly, Scenario::Independent];

    pub fn from_flags(x_correlated: bool, y_correlated: bool) -> Scenario {
        match (x_correlated, y_correlated) {
            (true, true) => Scenario::CorrelatedBoth,
            (false, true) => Scenario::LabelOnly,
            (true, false) => Scenario::FeaturesOnly,
            (false, false) => Scenario::Independent,
        }
    }

    pub fn x_correlated(self) -> bool {
        matches!(self, Scenario::CorrelatedBoth | Scenario::FeaturesOnly)
    }

    pub fn y_correlated(self) -> bool {
        matches!(self, Scenario::CorrelatedBoth | Scenario::LabelOnly)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = if self.x_correlated() { "X~A" } else { "X!A" };
        let y = if self.y_correlated() { "Y~A" } else { "Y!A" };
        write!(f, "{x},{y}")
    }
}

impl FromStr for Scenario {
    type Err = DataError;

    /// Accepts `X~A,Y!A` style (`!`, `_|_` or `⊥` for independence).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_uppercase();
        let norm = norm.replace("_|_", "!").replace('⊥', "!").replace('∧', ",").replace('&', ",");
        let parts: Vec<&str> = norm.split(',').collect();
        let flag = |p: &str, var: &str| -> Option<bool> {
            match p.strip_prefix(var)? {
                "~A" => Some(true),
                "!A" => Some(false),
                _ => None,
            }
        };
        match parts.as_slice() {
            [x, y] => match (flag(x, "X"), flag(y, "Y")) {
                (Some(xc), Some(yc)) => Ok(Scenario::from_flags(xc, yc)),
                _ => Err(DataError::Config(format!("unknown scenario `{s}`"))),
            },
            _ => Err(DataError::Config(format!("unknown scenario `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub scenario: Scenario,
    /// X′: feature columns whose latent is shifted by A's stratum.
    pub correlated_columns: Vec<String>,
    pub correlation_strength: f64,
    /// Fraction of records in the `<5` stratum of A.
    pub a_split: f64,
    pub n_records: usize,
    /// Keep only three feature columns (X′ first) in the output.
    pub reduced_mode: bool,
    pub n_numeric: usize,
    pub n_categorical: usize,
    pub n_classes: usize,
    /// Fixes the teacher weights, i.e. the population distribution.
    pub task_seed: u64,
}

impl SyntheticConfig {
    pub fn new(scenario: Scenario) -> SyntheticConfig {
        SyntheticConfig {
            scenario,
            correlated_columns: if scenario.x_correlated() { vec!["x0".into()] } else { Vec::new() },
            correlation_strength: 1.0,
            a_split: 0.5,
            n_records: 2000,
            reduced_mode: false,
            n_numeric: 8,
            n_categorical: 2,
            n_classes: 4,
            task_seed: 7,
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        (0..self.n_numeric).map(|j| format!("x{j}")).chain((0..self.n_categorical).map(|j| format!("c{j}"))).collect()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::Config(m));
        if self.scenario.x_correlated() == self.correlated_columns.is_empty() {
            return bad(format!("scenario {} requires X' to be {}", self.scenario, if self.scenario.x_correlated() { "non-empty" } else { "empty" }));
        }
        let names = self.feature_names();
        if let Some(c) = self.correlated_columns.iter().find(|c| !names.contains(c)) {
            return bad(format!("X' column `{c}` is not a feature column"));
        }
        if !(self.correlation_strength > 0.0 && self.correlation_strength <= 1.0) {
            return bad(format!("correlation strength {} outside (0, 1]", self.correlation_strength));
        }
        if !(0.0..=1.0).contains(&self.a_split) {
            return bad(format!("a_split {} outside [0, 1]", self.a_split));
        }
        if self.n_records == 0 || self.n_classes < 2 || self.n_numeric + self.n_categorical == 0 {
            return bad("need at least one record, one feature and two classes".into());
        }
        if self.reduced_mode && self.n_numeric + self.n_categorical < REDUCED_WIDTH {
            return bad("reduced mode needs at least three features".into());
        }
        Ok(())
    }

    /// Feature columns kept in the output.
    pub fn kept_features(&self) -> Vec<String> {
        let names = self.feature_names();
        if !self.reduced_mode {
            return names;
        }
        let mut kept: Vec<String> = self.correlated_columns.iter().take(REDUCED_WIDTH).cloned().collect();
        for n in names {
            if kept.len() == REDUCED_WIDTH {
                break;
            }
            if !kept.contains(&n) {
                kept.push(n);
            }
        }
        kept
    }

    pub fn schema(&self) -> AttributeSchema {
        let mut cols: Vec<Column> = Vec::new();
        for name in self.kept_features() {
            if name.starts_with('c') {
                cols.push(Column::categorical(name, ["l0", "l1", "l2"]));
            } else {
                cols.push(Column::numeric(name));
            }
        }
        cols.push(Column::numeric(SENSITIVE_COLUMN));
        cols.push(Column::categorical(TARGET_COLUMN, (0..self.n_classes).map(|c| c.to_string())));
        AttributeSchema::new(cols, Some(SENSITIVE_COLUMN.into()), TARGET_COLUMN).expect("generated schema is valid")
    }
}

struct Teacher {
    /// `n_classes × n_features`; linear weight on the latent, or the quadratic
    /// weight for X′ columns.
    weights: Vec<Vec<f64>>,
    quadratic: Vec<bool>,
}

impl Teacher {
    fn new(cfg: &SyntheticConfig) -> Teacher {
        let names = cfg.feature_names();
        let mut rng = rng_from_seed(derive_seed(cfg.task_seed, stream::TASK, 0));
        let scale = 1.0 / (names.len() as f64).sqrt();
        let weights = (0..cfg.n_classes)
            .map(|_| names.iter().map(|_| { let w: f64 = StandardNormal.sample(&mut rng); scale * w }).collect())
            .collect();
        let quadratic = names.iter().map(|n| cfg.correlated_columns.contains(n)).collect();
        Teacher { weights, quadratic }
    }

    fn logits(&self, latent: &[f64], out: &mut [f64]) {
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o = latent
                .iter()
                .zip(w)
                .zip(&self.quadratic)
                .map(|((&z, &wj), &q)| if q { wj * z * z } else { wj * z })
                .sum();
        }
    }
}

/// Draws `cfg.n_records` records from the configured population.
pub fn synth_generate(cfg: &SyntheticConfig, seed: u64) -> Result<TabularDataset, DataError> {
    cfg.validate()?;
    let names = cfg.feature_names();
    let teacher = Teacher::new(cfg);
    let shifted: Vec<bool> = names.iter().map(|n| cfg.scenario.x_correlated() && cfg.correlated_columns.contains(n)).collect();
    let kept: Vec<usize> = cfg.kept_features().iter().map(|k| names.iter().position(|n| n == k).unwrap()).collect();
    let schema = Arc::new(cfg.schema());
    let width = schema.n_columns();

    let mut rng = rng_from_seed(seed);
    let n_low = stratified_count(cfg.a_split, cfg.n_records);
    let mut high: Vec<bool> = (0..cfg.n_records).map(|i| i >= n_low).collect();
    high.shuffle(&mut rng);

    let mut values = Vec::with_capacity(cfg.n_records * width);
    let mut latent = vec![0.0; names.len()];
    let mut logits = vec![0.0; cfg.n_classes];
    for &is_high in &high {
        let u: f64 = rng.random();
        let a = if is_high { 10.0 - 5.0 * u } else { 5.0 * u };
        let sign = if is_high { 1.0 } else { -1.0 };
        for (j, z) in latent.iter_mut().enumerate() {
            let noise: f64 = StandardNormal.sample(&mut rng);
            *z = noise + if shifted[j] { sign * cfg.correlation_strength } else { 0.0 };
        }
        teacher.logits(&latent, &mut logits);
        if cfg.scenario.y_correlated() && is_high {
            logits[0] += cfg.correlation_strength;
        }
        let y = sample_softmax(&logits, rng.random());

        for &j in &kept {
            if j < cfg.n_numeric {
                values.push(latent[j]);
            } else {
                let z = latent[j];
                values.push(CATEGORICAL_CUTS.iter().filter(|&&c| z > c).count() as f64);
            }
        }
        values.push(a);
        values.push(y as f64);
    }
    Ok(TabularDataset::new_unchecked(schema, values))
}

fn sample_softmax(logits: &[f64], u: f64) -> usize {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    let mut acc = 0.0;
    for (c, l) in logits.iter().enumerate() {
        acc += (l - max).exp() / total;
        if u < acc {
            return c;
        }
    }
    logits.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_parsing() {
        assert_eq!("X~A,Y~A".parse::<Scenario>().unwrap(), Scenario::CorrelatedBoth);
        assert_eq!("x⊥A ∧ y~A".parse::<Scenario>().unwrap(), Scenario::LabelOnly);
        assert_eq!("X~A, Y_|_A".parse::<Scenario>().unwrap(), Scenario::FeaturesOnly);
        assert_eq!("X!A,Y!A".parse::<Scenario>().unwrap(), Scenario::Independent);
        for s in Scenario::ALL {
            assert_eq!(s.to_string().parse::<Scenario>().unwrap(), s);
        }
        assert!("X~B,Y~A".parse::<Scenario>().is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = SyntheticConfig::new(Scenario::Independent);
        assert!(cfg.validate().is_ok());
        cfg.correlated_columns = vec!["x0".into()];
        assert!(cfg.validate().is_err());
        let mut cfg = SyntheticConfig::new(Scenario::FeaturesOnly);
        cfg.correlated_columns = vec!["A".into()];
        assert!(cfg.validate().is_err());
        cfg.correlated_columns = vec!["x1".into()];
        cfg.correlation_strength = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn exact_stratum_count_and_encoding() {
        let mut cfg = SyntheticConfig::new(Scenario::LabelOnly);
        cfg.a_split = 0.33;
        cfg.n_records = 2000;
        let ds = synth_generate(&cfg, 1).unwrap();
        let a = ds.column_values(SENSITIVE_COLUMN).unwrap();
        assert_eq!(a.iter().filter(|&&v| v < 5.0).count(), 660);
        assert!(a.iter().all(|&v| (0.0..=10.0).contains(&v) && v != 5.0));
    }

    #[test]
    fn reduced_mode_keeps_three_features() {
        let mut cfg = SyntheticConfig::new(Scenario::FeaturesOnly);
        cfg.correlated_columns = vec!["x3".into()];
        cfg.reduced_mode = true;
        assert_eq!(cfg.kept_features(), vec!["x3", "x0", "x1"]);
        let ds = synth_generate(&cfg, 2).unwrap();
        assert_eq!(ds.n_columns(), 5);
        assert_eq!(ds.schema().feature_names(), vec!["x3", "x0", "x1"]);
    }

    #[test]
    fn deterministic() {
        let cfg = SyntheticConfig::new(Scenario::CorrelatedBoth);
        assert_eq!(synth_generate(&cfg, 5).unwrap(), synth_generate(&cfg, 5).unwrap());
        assert_ne!(synth_generate(&cfg, 5).unwrap(), synth_generate(&cfg, 6).unwrap());
    }
}
