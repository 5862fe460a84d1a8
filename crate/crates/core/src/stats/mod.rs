//! Correlation diagnostics: Pearson r, Cramér's V and one-way ANOVA.

mod scenario;
pub mod special;

pub use scenario::{classify_scenario, PairScore, ScenarioReport, StatKind, Thresholds};

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("statistic undefined: {0}")]
    Undefined(&'static str),
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("not enough data: {0}")]
    TooFew(&'static str),
    #[error("dataset schema lacks {0}")]
    MissingRole(&'static str),
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Product-moment correlation. Constant input has no defined r.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew("pearson needs at least two points"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Undefined("constant input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Contingency table of two categorical vectors, rows/columns in sorted
/// category order.
pub fn contingency<A: Ord + Clone, B: Ord + Clone>(a: &[A], b: &[B]) -> Result<Vec<Vec<f64>>, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let rows: BTreeMap<A, usize> = a.iter().cloned().map(|v| (v, 0)).collect();
    let cols: BTreeMap<B, usize> = b.iter().cloned().map(|v| (v, 0)).collect();
    let rows: BTreeMap<A, usize> = rows.into_keys().enumerate().map(|(i, k)| (k, i)).collect();
    let cols: BTreeMap<B, usize> = cols.into_keys().enumerate().map(|(i, k)| (k, i)).collect();
    let mut table = vec![vec![0.0; cols.len()]; rows.len()];
    for (x, y) in a.iter().zip(b) {
        table[rows[x]][cols[y]] += 1.0;
    }
    Ok(table)
}

/// Cramér's V of a contingency table, without continuity correction.
pub fn cramers_v_table(table: &[Vec<f64>]) -> Result<f64, StatsError> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 {
        return Err(StatsError::Undefined("degenerate table (a variable is constant)"));
    }
    let row_sums: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    let n: f64 = row_sums.iter().sum();
    if row_sums.iter().chain(&col_sums).any(|&s| s == 0.0) {
        return Err(StatsError::Undefined("empty row or column in table"));
    }
    let mut chi2 = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / n;
            chi2 += (obs - expected).powi(2) / expected;
        }
    }
    let k = (r.min(c) - 1) as f64;
    Ok((chi2 / (n * k)).sqrt().clamp(0.0, 1.0))
}

/// Cramér's V between two categorical vectors.
pub fn cramers_v<A: Ord + Clone, B: Ord + Clone>(a: &[A], b: &[B]) -> Result<f64, StatsError> {
    cramers_v_table(&contingency(a, b)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anova {
    pub f: f64,
    pub p_value: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub ss_between: f64,
    pub ss_within: f64,
}

impl Anova {
    /// Correlation ratio η = sqrt(SSB / SST); 0 when there is no variance.
    pub fn eta(&self) -> f64 {
        let total = self.ss_between + self.ss_within;
        if total > 0.0 {
            (self.ss_between / total).sqrt()
        } else {
            0.0
        }
    }
}

/// One-way ANOVA over `groups`.
pub fn anova(groups: &[Vec<f64>]) -> Result<Anova, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFew("anova needs at least two groups"));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(StatsError::TooFew("every anova group needs at least two observations"));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let df_between = (groups.len() - 1) as f64;
    let df_within = (n - groups.len()) as f64;
    // Rounding noise in SSB for identical group means is treated as zero.
    let scale = groups.iter().flatten().map(|x| (x - grand).powi(2)).sum::<f64>();
    if ss_between <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        ss_between = 0.0;
    }
    let (f, p_value) = match (ss_between > 0.0, ss_within > 0.0) {
        (false, _) => (0.0, 1.0),
        (true, false) => (f64::INFINITY, 0.0),
        (true, true) => {
            let f = (ss_between / df_between) / (ss_within / df_within);
            (f, special::f_upper_tail(f, df_between, df_within))
        }
    };
    Ok(Anova { f, p_value, df_between, df_within, ss_between, ss_within })
}

/// Upper-tail p-value of the one-way ANOVA F statistic.
pub fn anova_pvalue(groups: &[Vec<f64>]) -> Result<f64, StatsError> {
    anova(groups).map(|a| a.p_value)
}

/// Groups `values` by the category in `keys` (sorted key order).
pub fn group_by<K: Ord + Clone>(keys: &[K], values: &[f64]) -> Result<Vec<Vec<f64>>, StatsError> {
    if keys.len() != values.len() {
        return Err(StatsError::LengthMismatch(keys.len(), values.len()));
    }
    let mut groups: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for (k, &v) in keys.iter().zip(values) {
        groups.entry(k.clone()).or_default().push(v);
    }
    Ok(groups.into_values().collect())
}
