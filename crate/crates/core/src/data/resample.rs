use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::dataset::TabularDataset;
use super::schema::{AttributeSchema, ColumnKind};
use super::DataError;
use crate::rng::rng_from_seed;

/// "`ratio` of the records carry `value` in column `attribute`".
///
/// For categorical columns `value` names a level. For numeric columns it is a
/// threshold predicate such as `<5` or `>=2.5`, or a bare number for equality.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertySpec {
    pub attribute: String,
    pub value: String,
    pub ratio: f64,
}

impl PropertySpec {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>, ratio: f64) -> Result<Self, DataError> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(DataError::Property(format!("ratio {ratio} outside [0, 1]")));
        }
        Ok(PropertySpec { attribute: attribute.into(), value: value.into(), ratio })
    }

    pub fn with_ratio(&self, ratio: f64) -> Result<Self, DataError> {
        PropertySpec::new(self.attribute.clone(), self.value.clone(), ratio)
    }

    /// Resolves the value against a schema.
    pub fn predicate(&self, schema: &AttributeSchema) -> Result<(usize, ValuePredicate), DataError> {
        let j = schema.index_of(&self.attribute).ok_or_else(|| DataError::UnknownColumn(self.attribute.clone()))?;
        let pred = ValuePredicate::parse(&self.value, &schema.columns()[j].kind)?;
        Ok((j, pred))
    }

    /// Fraction of records in `ds` satisfying the property value.
    pub fn measure(&self, ds: &TabularDataset) -> Result<f64, DataError> {
        let (j, pred) = self.predicate(ds.schema())?;
        let hits = ds.rows().filter(|r| pred.matches(r[j])).count();
        Ok(hits as f64 / ds.n_records() as f64)
    }
}

impl fmt::Display for PropertySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]={:.2}", self.attribute, self.value, self.ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValuePredicate {
    Level(usize),
    Less(f64),
    LessEq(f64),
    Greater(f64),
    GreaterEq(f64),
    Equal(f64),
}

impl ValuePredicate {
    pub fn parse(value: &str, kind: &ColumnKind) -> Result<Self, DataError> {
        let bad = || DataError::Property(format!("cannot interpret `{value}` for this column"));
        match kind {
            ColumnKind::Categorical { levels } => {
                levels.iter().position(|l| l == value).map(ValuePredicate::Level).ok_or_else(bad)
            }
            ColumnKind::Numeric => {
                let v = value.trim();
                let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
                if let Some(rest) = v.strip_prefix("<=") {
                    Ok(ValuePredicate::LessEq(num(rest)?))
                } else if let Some(rest) = v.strip_prefix(">=") {
                    Ok(ValuePredicate::GreaterEq(num(rest)?))
                } else if let Some(rest) = v.strip_prefix('<') {
                    Ok(ValuePredicate::Less(num(rest)?))
                } else if let Some(rest) = v.strip_prefix('>') {
                    Ok(ValuePredicate::Greater(num(rest)?))
                } else {
                    Ok(ValuePredicate::Equal(num(v.trim_start_matches('='))?))
                }
            }
        }
    }

    pub fn matches(&self, x: f64) -> bool {
        match *self {
            ValuePredicate::Level(l) => x as usize == l,
            ValuePredicate::Less(t) => x < t,
            ValuePredicate::LessEq(t) => x <= t,
            ValuePredicate::Greater(t) => x > t,
            ValuePredicate::GreaterEq(t) => x >= t,
            ValuePredicate::Equal(t) => x == t,
        }
    }
}

/// Number of records carrying the value: `ratio * size`, rounded half up.
pub fn stratified_count(ratio: f64, size: usize) -> usize {
    ((ratio * size as f64) + 0.5).floor().min(size as f64) as usize
}

/// Draws `size` records from `pool` so that exactly
/// `stratified_count(spec.ratio, size)` of them carry the property value.
///
/// Draws are without replacement; a stratum that is too small is sampled
/// with replacement instead and a warning is logged.
pub fn resample_with_ratio(
    pool: &TabularDataset,
    spec: &PropertySpec,
    size: usize,
    seed: u64,
) -> Result<TabularDataset, DataError> {
    if size == 0 {
        return Err(DataError::Empty);
    }
    let (j, pred) = spec.predicate(pool.schema())?;
    let (with, without): (Vec<usize>, Vec<usize>) = (0..pool.n_records()).partition(|&i| pred.matches(pool.row(i)[j]));
    let n_with = stratified_count(spec.ratio, size);
    let n_without = size - n_with;

    let mut rng = rng_from_seed(seed);
    let mut draw = |stratum: &[usize], n: usize, name: &str| -> Result<Vec<usize>, DataError> {
        if n == 0 {
            return Ok(Vec::new());
        }
        if stratum.is_empty() {
            return Err(DataError::EmptyStratum(name.to_string()));
        }
        if stratum.len() >= n {
            Ok(index::sample(&mut rng, stratum.len(), n).into_iter().map(|k| stratum[k]).collect())
        } else {
            log::warn!(
                "stratum `{}` has {} records, {} requested; sampling with replacement",
                name,
                stratum.len(),
                n
            );
            Ok((0..n).map(|_| stratum[rng.random_range(0..stratum.len())]).collect())
        }
    };
    let label_with = format!("{}={}", spec.attribute, spec.value);
    let label_without = format!("{}!={}", spec.attribute, spec.value);
    let mut picked = draw(&with, n_with, &label_with)?;
    picked.extend(draw(&without, n_without, &label_without)?);
    picked.shuffle(&mut rng);
    pool.select(&picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::Column;
    use std::sync::Arc;

    fn pool(n: usize) -> TabularDataset {
        let schema = AttributeSchema::new(
            vec![
                Column::numeric("id"),
                Column::numeric("a"),
                Column::categorical("g", ["f", "m"]),
                Column::categorical("y", ["0", "1"]),
            ],
            Some("a".into()),
            "y",
        )
        .unwrap();
        let values = (0..n).flat_map(|i| [i as f64, (i % 10) as f64 + 0.5, (i % 3 == 0) as u8 as f64, (i % 2) as f64]).collect();
        TabularDataset::new(Arc::new(schema), values).unwrap()
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(stratified_count(0.33, 2000), 660);
        assert_eq!(stratified_count(0.0, 100), 0);
        assert_eq!(stratified_count(0.5, 5), 3);
        assert_eq!(stratified_count(1.0, 7), 7);
    }

    #[test]
    fn exact_strata() {
        let p = pool(5000);
        let spec = PropertySpec::new("a", "<5", 0.33).unwrap();
        let ds = resample_with_ratio(&p, &spec, 2000, 9).unwrap();
        assert_eq!(ds.n_records(), 2000);
        let hits = ds.column_values("a").unwrap().iter().filter(|&&v| v < 5.0).count();
        assert_eq!(hits, 660);

        let none = resample_with_ratio(&p, &spec.with_ratio(0.0).unwrap(), 100, 9).unwrap();
        assert!(none.column_values("a").unwrap().iter().all(|&v| v > 5.0));
    }

    #[test]
    fn categorical_value_and_determinism() {
        let p = pool(300);
        let spec = PropertySpec::new("g", "m", 0.25).unwrap();
        let a = resample_with_ratio(&p, &spec, 40, 3).unwrap();
        let b = resample_with_ratio(&p, &spec, 40, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(spec.measure(&a).unwrap(), 0.25);
        assert_ne!(a, resample_with_ratio(&p, &spec, 40, 4).unwrap());
    }

    #[test]
    fn small_stratum_falls_back_to_replacement() {
        let p = pool(30); // 10 records with g = m
        let spec = PropertySpec::new("g", "m", 0.9).unwrap();
        let ds = resample_with_ratio(&p, &spec, 100, 1).unwrap();
        assert_eq!((spec.measure(&ds).unwrap() * 100.0).round(), 90.0);
    }

    #[test]
    fn empty_stratum_is_an_error() {
        let p = pool(30);
        let spec = PropertySpec::new("a", ">100", 0.5).unwrap();
        assert!(matches!(resample_with_ratio(&p, &spec, 10, 1), Err(DataError::EmptyStratum(_))));
        assert!(PropertySpec::new("a", "<5", 1.5).is_err());
        assert!(resample_with_ratio(&p, &PropertySpec::new("g", "x", 0.5).unwrap(), 10, 1).is_err());
    }
}
