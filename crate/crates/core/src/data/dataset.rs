use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::SliceRandom;

use super::schema::{AttributeSchema, ColumnKind};
use super::DataError;
use crate::rng::rng_from_seed;

/// Row-major table of records. Categorical cells hold the level index.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    schema: Arc<AttributeSchema>,
    values: Vec<f64>,
    n_records: usize,
}

impl TabularDataset {
    /// Builds a dataset from row-major values, checking every cell against the schema.
    pub fn new(schema: Arc<AttributeSchema>, values: Vec<f64>) -> Result<Self, DataError> {
        let width = schema.n_columns();
        if width == 0 || values.len() % width != 0 {
            return Err(DataError::Schema(format!("{} values do not fill rows of width {}", values.len(), width)));
        }
        let n_records = values.len() / width;
        if n_records == 0 {
            return Err(DataError::Empty);
        }
        for (i, row) in values.chunks(width).enumerate() {
            for (col, &v) in schema.columns().iter().zip(row) {
                let ok = match &col.kind {
                    ColumnKind::Numeric => v.is_finite(),
                    ColumnKind::Categorical { levels } => v >= 0.0 && v.fract() == 0.0 && (v as usize) < levels.len(),
                };
                if !ok {
                    return Err(DataError::MalformedRow { line: i + 1, msg: format!("invalid value {} for column `{}`", v, col.name) });
                }
            }
        }
        Ok(TabularDataset { schema, values, n_records })
    }

    pub(crate) fn new_unchecked(schema: Arc<AttributeSchema>, values: Vec<f64>) -> Self {
        let n_records = values.len() / schema.n_columns();
        TabularDataset { schema, values, n_records }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn shared_schema(&self) -> Arc<AttributeSchema> {
        Arc::clone(&self.schema)
    }

    pub fn n_records(&self) -> usize {
        self.n_records
    }

    pub fn n_columns(&self) -> usize {
        self.schema.n_columns()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_columns();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_columns())
    }

    pub fn column_values(&self, name: &str) -> Result<Vec<f64>, DataError> {
        let j = self.schema.index_of(name).ok_or_else(|| DataError::UnknownColumn(name.to_string()))?;
        Ok(self.rows().map(|r| r[j]).collect())
    }

    /// Target class ids.
    pub fn labels(&self) -> Vec<usize> {
        let j = self.schema.target_index();
        self.rows().map(|r| r[j] as usize).collect()
    }

    /// Records at `indices`, in that order. Indices may repeat.
    pub fn select(&self, indices: &[usize]) -> Result<TabularDataset, DataError> {
        if indices.is_empty() {
            return Err(DataError::Empty);
        }
        let mut values = Vec::with_capacity(indices.len() * self.n_columns());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Ok(TabularDataset::new_unchecked(Arc::clone(&self.schema), values))
    }

    /// Concatenates datasets sharing one schema.
    pub fn concat(parts: &[&TabularDataset]) -> Result<TabularDataset, DataError> {
        let first = parts.first().ok_or(DataError::Empty)?;
        let mut values = Vec::with_capacity(parts.iter().map(|p| p.values.len()).sum());
        for p in parts {
            if p.schema != first.schema {
                return Err(DataError::Schema("cannot concatenate datasets with different schemas".into()));
            }
            values.extend_from_slice(&p.values);
        }
        Ok(TabularDataset::new_unchecked(Arc::clone(&first.schema), values))
    }
}

/// Removes a column. Clears the sensitive marker when the column was A.
pub fn drop_attribute(ds: &TabularDataset, attr: &str) -> Result<TabularDataset, DataError> {
    let j = ds.schema.index_of(attr).ok_or_else(|| DataError::UnknownColumn(attr.to_string()))?;
    let schema = Arc::new(ds.schema.without(attr)?);
    let values = ds
        .rows()
        .flat_map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v))
        .collect();
    Ok(TabularDataset::new_unchecked(schema, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub adv: usize,
    pub honest: usize,
    pub aux: usize,
    pub attack: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.adv + self.honest + self.aux + self.attack
    }
}

/// Four pairwise-disjoint parts of a pool.
#[derive(Debug, Clone)]
pub struct PartySplits {
    pub adv: TabularDataset,
    pub honest: TabularDataset,
    pub aux: TabularDataset,
    pub attack: TabularDataset,
    /// Pool indices of each part, in the order (adv, honest, aux, attack).
    pub indices: [Vec<usize>; 4],
}

/// Shuffles the pool once and carves the attack probe set out first, then the
/// auxiliary pool, the adversary's data and the honest party's data.
pub fn make_splits(pool: &TabularDataset, sizes: SplitSizes, seed: u64) -> Result<PartySplits, DataError> {
    if sizes.total() > pool.n_records() {
        return Err(DataError::InsufficientPool { available: pool.n_records(), required: sizes.total() });
    }
    let mut order: Vec<usize> = (0..pool.n_records()).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut cursor = 0;
    let mut take = |n: usize| {
        let part = order[cursor..cursor + n].to_vec();
        cursor += n;
        part
    };
    let attack = take(sizes.attack);
    let aux = take(sizes.aux);
    let adv = take(sizes.adv);
    let honest = take(sizes.honest);
    debug_assert!({
        let mut seen = HashSet::new();
        [&attack, &aux, &adv, &honest].iter().all(|p| p.iter().all(|i| seen.insert(*i)))
    });
    Ok(PartySplits {
        adv: pool.select(&adv)?,
        honest: pool.select(&honest)?,
        aux: pool.select(&aux)?,
        attack: pool.select(&attack)?,
        indices: [adv, honest, aux, attack],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::Column;

    fn pool(n: usize) -> TabularDataset {
        let schema = AttributeSchema::new(
            vec![Column::numeric("id"), Column::numeric("a"), Column::categorical("y", ["0", "1"])],
            Some("a".into()),
            "y",
        )
        .unwrap();
        let values = (0..n).flat_map(|i| [i as f64, (i % 10) as f64, (i % 2) as f64]).collect();
        TabularDataset::new(Arc::new(schema), values).unwrap()
    }

    #[test]
    fn rejects_out_of_domain_categories() {
        let schema = Arc::new(AttributeSchema::new(vec![Column::categorical("y", ["0", "1"])], None, "y").unwrap());
        assert!(TabularDataset::new(schema.clone(), vec![0.0, 2.0]).is_err());
        assert!(TabularDataset::new(schema, vec![]).is_err());
    }

    #[test]
    fn drop_sensitive_clears_marker() {
        let ds = pool(10);
        let dropped = drop_attribute(&ds, "a").unwrap();
        assert_eq!(dropped.n_columns(), 2);
        assert_eq!(dropped.schema().sensitive(), None);
        let dropped = drop_attribute(&ds, "id").unwrap();
        assert_eq!(dropped.schema().sensitive(), Some("a"));
        assert_eq!(dropped.row(3), &[3.0, 1.0]);
        assert!(matches!(drop_attribute(&ds, "zzz"), Err(DataError::UnknownColumn(_))));
    }

    fn ids(ds: &TabularDataset) -> HashSet<u64> {
        ds.column_values("id").unwrap().into_iter().map(|v| v as u64).collect()
    }

    #[test]
    fn adult_and_crime_split_sizes() {
        let big = pool(15_000);
        let s = make_splits(&big, SplitSizes { adv: 2000, honest: 2000, aux: 10_000, attack: 1000 }, 1).unwrap();
        assert_eq!(
            (s.adv.n_records(), s.honest.n_records(), s.aux.n_records(), s.attack.n_records()),
            (2000, 2000, 10_000, 1000)
        );
        let crime = pool(1994);
        let s = make_splits(&crime, SplitSizes { adv: 200, honest: 200, aux: 1500, attack: 94 }, 1).unwrap();
        assert_eq!(s.attack.n_records(), 94);
        let parts = [ids(&s.adv), ids(&s.honest), ids(&s.aux), ids(&s.attack)];
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(parts[i].is_disjoint(&parts[j]));
            }
        }
        assert!(make_splits(&crime, SplitSizes { adv: 200, honest: 200, aux: 1500, attack: 95 }, 1).is_err());
    }
}
