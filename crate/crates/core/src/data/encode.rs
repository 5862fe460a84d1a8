use ndarray::Array2;

use super::dataset::TabularDataset;
use super::schema::ColumnKind;
use super::DataError;

#[derive(Debug, Clone, PartialEq)]
pub enum EncodedColumn {
    /// Min-max scaled with statistics from the fitting dataset.
    Numeric { name: String, min: f64, max: f64 },
    /// One indicator per level.
    Categorical { name: String, levels: Vec<String> },
}

impl EncodedColumn {
    pub fn name(&self) -> &str {
        match self {
            EncodedColumn::Numeric { name, .. } | EncodedColumn::Categorical { name, .. } => name,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            EncodedColumn::Numeric { .. } => 1,
            EncodedColumn::Categorical { levels, .. } => levels.len(),
        }
    }
}

/// Layout of an encoded feature vector: which source column occupies which
/// slice of the output.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    columns: Vec<(EncodedColumn, usize)>,
    width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodedValue {
    Numeric(f64),
    Level(String),
}

impl ColumnMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn columns(&self) -> impl Iterator<Item = (&EncodedColumn, std::ops::Range<usize>)> {
        self.columns.iter().map(|(c, start)| (c, *start..*start + c.width()))
    }

    /// Offset range of a source column, if it is encoded.
    pub fn range_of(&self, name: &str) -> Option<std::ops::Range<usize>> {
        self.columns().find(|(c, _)| c.name() == name).map(|(_, r)| r)
    }

    /// Inverse of the encoding for one row: numeric values are unscaled and
    /// each indicator block is mapped back to its level (argmax).
    pub fn decode(&self, encoded: &[f64]) -> Vec<(String, DecodedValue)> {
        self.columns()
            .map(|(c, range)| {
                let slice = &encoded[range];
                let v = match c {
                    EncodedColumn::Numeric { min, max, .. } => DecodedValue::Numeric(min + slice[0] * (max - min)),
                    EncodedColumn::Categorical { levels, .. } => {
                        let best = slice
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1.total_cmp(b.1))
                            .map(|(i, _)| i)
                            .unwrap_or(0);
                        DecodedValue::Level(levels[best].clone())
                    }
                };
                (c.name().to_string(), v)
            })
            .collect()
    }
}

/// Fitted feature encoder. Excludes the target column, and the sensitive
/// column unless asked to keep it. Columns are looked up by name, so the
/// encoder applies to any dataset that contains the fitted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    map: ColumnMap,
}

impl Encoder {
    pub fn fit(ds: &TabularDataset, include_sensitive: bool) -> Encoder {
        let schema = ds.schema();
        let mut columns = Vec::new();
        let mut offset = 0;
        for (j, col) in schema.columns().iter().enumerate() {
            if col.name == schema.target() || (!include_sensitive && Some(col.name.as_str()) == schema.sensitive()) {
                continue;
            }
            let enc = match &col.kind {
                ColumnKind::Numeric => {
                    let (min, max) = ds
                        .rows()
                        .map(|r| r[j])
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    EncodedColumn::Numeric { name: col.name.clone(), min, max }
                }
                ColumnKind::Categorical { levels } => EncodedColumn::Categorical { name: col.name.clone(), levels: levels.clone() },
            };
            let w = enc.width();
            columns.push((enc, offset));
            offset += w;
        }
        Encoder { map: ColumnMap { columns, width: offset } }
    }

    pub fn width(&self) -> usize {
        self.map.width
    }

    pub fn column_map(&self) -> &ColumnMap {
        &self.map
    }

    pub fn transform(&self, ds: &TabularDataset) -> Result<Array2<f64>, DataError> {
        let sources = self
            .map
            .columns
            .iter()
            .map(|(c, _)| ds.schema().index_of(c.name()).ok_or_else(|| DataError::UnknownColumn(c.name().to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = Array2::zeros((ds.n_records(), self.map.width));
        for (i, row) in ds.rows().enumerate() {
            for ((c, start), &j) in self.map.columns.iter().zip(&sources) {
                match c {
                    EncodedColumn::Numeric { min, max, .. } => {
                        let span = max - min;
                        out[[i, *start]] = if span > 0.0 { (row[j] - min) / span } else { 0.0 };
                    }
                    EncodedColumn::Categorical { .. } => out[[i, start + row[j] as usize]] = 1.0,
                }
            }
        }
        Ok(out)
    }
}

/// Encodes every non-target column of `ds` (including A when present) with
/// statistics fitted on `ds` itself.
pub fn one_hot_encode(ds: &TabularDataset) -> (Array2<f64>, ColumnMap) {
    let enc = Encoder::fit(ds, true);
    let x = enc.transform(ds).expect("encoder fitted on the same dataset");
    (x, enc.map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::drop_attribute;
    use crate::data::schema::{AttributeSchema, Column};
    use std::sync::Arc;

    fn ds() -> TabularDataset {
        let schema = AttributeSchema::new(
            vec![
                Column::categorical("c2", ["p", "q"]),
                Column::categorical("c3", ["a", "b", "c"]),
                Column::numeric("n"),
                Column::categorical("y", ["0", "1"]),
            ],
            Some("c2".into()),
            "y",
        )
        .unwrap();
        TabularDataset::new(Arc::new(schema), vec![0., 1., 0., 0., 1., 2., 10., 1., 0., 0., 5., 0.]).unwrap()
    }

    #[test]
    fn widths_and_indicators() {
        let (x, map) = one_hot_encode(&ds());
        assert_eq!(map.width(), 6);
        assert_eq!(x.row(0).to_vec(), vec![1., 0., 0., 1., 0., 0.]);
        assert_eq!(x[[2, 5]], 0.5);
        assert_eq!(x[[1, 5]], 1.0);
    }

    #[test]
    fn dropping_sensitive_reduces_width() {
        let dropped = drop_attribute(&ds(), "c2").unwrap();
        let (_, map) = one_hot_encode(&dropped);
        assert_eq!(map.width(), 4);
        assert_eq!(Encoder::fit(&ds(), false).width(), 4);
    }

    #[test]
    fn decode_inverts() {
        let data = ds();
        let (x, map) = one_hot_encode(&data);
        let row = map.decode(x.row(1).as_slice().unwrap());
        assert_eq!(row[1], ("c3".to_string(), DecodedValue::Level("c".into())));
        assert_eq!(row[2], ("n".to_string(), DecodedValue::Numeric(10.0)));
    }

    #[test]
    fn transform_looks_columns_up_by_name() {
        let data = ds();
        let enc = Encoder::fit(&drop_attribute(&data, "c2").unwrap(), true);
        let x = enc.transform(&data).unwrap();
        assert_eq!(x.ncols(), 4);
        assert_eq!(x.row(0).to_vec(), vec![0., 1., 0., 0.]);
    }
}
