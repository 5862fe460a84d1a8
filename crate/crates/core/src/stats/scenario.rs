use std::fmt::Write as _;

use super::{anova, cramers_v, group_by, pearson, StatsError};
use crate::data::{ColumnKind, TabularDataset};
use crate::data::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// A feature is in X′ when |r|, V or η against A exceeds this.
    pub feature: f64,
    /// Y~A when V (or |r|) between A and Y exceeds this.
    pub label: f64,
    /// Y~A when the ANOVA p-value between A and Y is below this.
    pub alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { feature: 0.15, label: 0.10, alpha: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatKind {
    Pearson,
    CramersV,
    /// One-way ANOVA: the score is η, the p-value is reported alongside.
    Anova,
}

impl StatKind {
    fn name(self) -> &'static str {
        match self {
            StatKind::Pearson => "pearson",
            StatKind::CramersV => "cramers_v",
            StatKind::Anova => "anova",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub left: String,
    pub right: String,
    pub kind: StatKind,
    /// `None` when the statistic is undefined (e.g. a constant column).
    pub value: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scores: Vec<PairScore>,
    pub scenario: Scenario,
    /// X′: features whose association with A exceeds the feature threshold.
    pub correlated: Vec<String>,
    /// Columns whose statistic against A was undefined.
    pub undefined: Vec<String>,
    pub thresholds: Thresholds,
}

impl ScenarioReport {
    /// Flat `key = value` rendering.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario = {}", self.scenario);
        let _ = writeln!(out, "x_prime = {}", self.correlated.join(","));
        let _ = writeln!(out, "undefined = {}", self.undefined.join(","));
        let _ = writeln!(out, "threshold.feature = {}", self.thresholds.feature);
        let _ = writeln!(out, "threshold.label = {}", self.thresholds.label);
        let _ = writeln!(out, "threshold.alpha = {}", self.thresholds.alpha);
        for s in &self.scores {
            let key = format!("score.{}.{}.{}", s.left, s.right, s.kind.name());
            match s.value {
                Some(v) => {
                    let _ = writeln!(out, "{key} = {v}");
                }
                None => {
                    let _ = writeln!(out, "{key} = undefined");
                }
            }
            if let Some(p) = s.p_value {
                let _ = writeln!(out, "{key}.p = {p}");
            }
        }
        out
    }
}

fn score(ds: &TabularDataset, left: usize, right: usize) -> Result<PairScore, StatsError> {
    let cols = ds.schema().columns();
    let (l, r) = (&cols[left], &cols[right]);
    let lv: Vec<f64> = ds.rows().map(|row| row[left]).collect();
    let rv: Vec<f64> = ds.rows().map(|row| row[right]).collect();
    let idx = |v: &[f64]| v.iter().map(|&x| x as usize).collect::<Vec<_>>();
    let mut p_value = None;
    let (kind, value) = match (&l.kind, &r.kind) {
        (ColumnKind::Numeric, ColumnKind::Numeric) => (StatKind::Pearson, pearson(&lv, &rv).ok().map(f64::abs)),
        (ColumnKind::Categorical { .. }, ColumnKind::Categorical { .. }) => {
            (StatKind::CramersV, cramers_v(&idx(&lv), &idx(&rv)).ok())
        }
        (ColumnKind::Categorical { .. }, ColumnKind::Numeric) | (ColumnKind::Numeric, ColumnKind::Categorical { .. }) => {
            let (keys, values) = if l.kind.is_categorical() { (idx(&lv), rv) } else { (idx(&rv), lv) };
            let groups = group_by(&keys, &values)?;
            match anova(&groups) {
                Ok(a) => {
                    p_value = Some(a.p_value);
                    (StatKind::Anova, Some(a.eta()))
                }
                Err(_) => (StatKind::Anova, None),
            }
        }
    };
    Ok(PairScore { left: l.name.clone(), right: r.name.clone(), kind, value, p_value })
}

/// Places a dataset in one of the four correlation scenarios by scoring A
/// against every feature and against the target.
pub fn classify_scenario(ds: &TabularDataset, thresholds: Thresholds) -> Result<ScenarioReport, StatsError> {
    let schema = ds.schema();
    let a = schema.sensitive_index().ok_or(StatsError::MissingRole("a sensitive attribute"))?;
    let y = schema.target_index();
    let mut scores = Vec::new();
    let mut correlated = Vec::new();
    let mut undefined = Vec::new();
    for name in schema.feature_names() {
        let j = schema.index_of(name).expect("feature of this schema");
        let s = score(ds, a, j)?;
        match s.value {
            Some(v) if v > thresholds.feature => correlated.push(name.to_string()),
            Some(_) => {}
            None => undefined.push(name.to_string()),
        }
        scores.push(s);
    }
    let label = score(ds, a, y)?;
    let y_correlated = match (label.kind, label.value, label.p_value) {
        (StatKind::Anova, _, Some(p)) => p < thresholds.alpha,
        (_, Some(v), _) => v > thresholds.label,
        _ => {
            undefined.push(schema.target().to_string());
            false
        }
    };
    scores.push(label);
    Ok(ScenarioReport {
        scenario: Scenario::from_flags(!correlated.is_empty(), y_correlated),
        scores,
        correlated,
        undefined,
        thresholds,
    })
}
