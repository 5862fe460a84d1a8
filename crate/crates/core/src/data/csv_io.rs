use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use super::dataset::TabularDataset;
use super::schema::{AttributeSchema, ColumnKind};
use super::DataError;

/// Maps raw target values onto the target column's declared levels.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelGrouping {
    /// Raw category → level name, e.g. the sixteen education values onto four bins.
    Levels(HashMap<String, String>),
    /// Numeric raw value → level by ascending upper bound (inclusive). The last
    /// entry's bound may be `f64::INFINITY`.
    Ranges(Vec<(f64, String)>),
}

impl LabelGrouping {
    fn apply(&self, raw: &str) -> Option<String> {
        match self {
            LabelGrouping::Levels(map) => map.get(raw).cloned(),
            LabelGrouping::Ranges(bounds) => {
                let x: f64 = raw.parse().ok()?;
                bounds.iter().find(|(ub, _)| x <= *ub).map(|(_, l)| l.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: TabularDataset,
    /// Rows dropped because a field was empty.
    pub dropped: usize,
}

/// Reads a headed CSV file into a dataset. The header must name exactly the
/// schema's columns (any order). Rows with an empty field are dropped.
pub fn load_csv(path: impl AsRef<Path>, schema: &AttributeSchema, grouping: Option<&LabelGrouping>) -> Result<CsvLoad, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path.as_ref())?;
    let header = reader.headers()?.clone();
    let mut positions = Vec::with_capacity(schema.n_columns());
    for col in schema.columns() {
        let p = header
            .iter()
            .position(|h| h.trim() == col.name)
            .ok_or_else(|| DataError::Schema(format!("header has no column `{}`", col.name)))?;
        positions.push(p);
    }
    if header.len() != schema.n_columns() {
        return Err(DataError::Schema(format!("header has {} columns, schema has {}", header.len(), schema.n_columns())));
    }
    let target = schema.target_index();

    let mut values = Vec::new();
    let mut dropped = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != header.len() {
            return Err(DataError::MalformedRow { line, msg: format!("expected {} fields, found {}", header.len(), record.len()) });
        }
        if record.iter().any(|f| f.trim().is_empty()) {
            dropped += 1;
            continue;
        }
        for (j, (col, &p)) in schema.columns().iter().zip(&positions).enumerate() {
            let mut raw = record[p].trim().to_string();
            if j == target {
                if let Some(g) = grouping {
                    raw = g.apply(&raw).ok_or_else(|| DataError::UnknownCategory {
                        line,
                        column: col.name.clone(),
                        value: raw.clone(),
                    })?;
                }
            }
            let v = match &col.kind {
                ColumnKind::Numeric => raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    DataError::MalformedRow { line, msg: format!("`{}` is not a number (column `{}`)", raw, col.name) }
                })?,
                ColumnKind::Categorical { levels } => levels.iter().position(|l| *l == raw).ok_or_else(|| {
                    DataError::UnknownCategory { line, column: col.name.clone(), value: raw.clone() }
                })? as f64,
            };
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(DataError::Empty);
    }
    if dropped > 0 {
        log::info!("dropped {} rows with missing values from {}", dropped, path.as_ref().display());
    }
    Ok(CsvLoad { dataset: TabularDataset::new(Arc::new(schema.clone()), values)?, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::Column;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn adult_schema() -> AttributeSchema {
        AttributeSchema::new(
            vec![
                Column::numeric("age"),
                Column::categorical("sex", ["Female", "Male"]),
                Column::categorical("education", ["Low", "Medium-Low", "Medium-High", "High"]),
            ],
            Some("sex".into()),
            "education",
        )
        .unwrap()
    }

    fn education_grouping() -> LabelGrouping {
        let bins = [
            ("Preschool", "Low"),
            ("1st-4th", "Low"),
            ("HS-grad", "Medium-Low"),
            ("Some-college", "Medium-Low"),
            ("Bachelors", "Medium-High"),
            ("Masters", "High"),
            ("Doctorate", "High"),
        ];
        LabelGrouping::Levels(bins.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect())
    }

    #[test]
    fn groups_education_into_four_classes() {
        let f = write("age,sex,education\n39,Male,Bachelors\n50,Female,HS-grad\n23,\"Female\",Preschool\n61,Male,Doctorate\n");
        let load = load_csv(f.path(), &adult_schema(), Some(&education_grouping())).unwrap();
        assert_eq!(load.dataset.n_records(), 4);
        assert_eq!(load.dataset.schema().n_classes(), Some(4));
        assert_eq!(load.dataset.labels(), vec![2, 1, 0, 3]);
    }

    #[test]
    fn identity_grouping_and_missing_values() {
        let schema = AttributeSchema::new(
            vec![Column::numeric("x"), Column::categorical("y", ["a", "b"])],
            None,
            "y",
        )
        .unwrap();
        let f = write("x,y\n1,a\n2,b\n3,a\n");
        assert_eq!(load_csv(f.path(), &schema, None).unwrap().dataset.n_records(), 3);

        let f = write("x,y\n1,a\n2,b\n,a\n4,b\n5,a\n");
        let load = load_csv(f.path(), &schema, None).unwrap();
        assert_eq!((load.dataset.n_records(), load.dropped), (4, 1));
    }

    #[test]
    fn reports_line_numbers() {
        let schema = AttributeSchema::new(vec![Column::numeric("x"), Column::categorical("y", ["a", "b"])], None, "y").unwrap();
        let f = write("x,y\n1,a\noops,b\n");
        match load_csv(f.path(), &schema, None) {
            Err(DataError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let f = write("x,y\n1,a\n2,c\n");
        assert!(matches!(load_csv(f.path(), &schema, None), Err(DataError::UnknownCategory { line: 3, .. })));
        let f = write("x,y\n1,a,extra\n");
        assert!(matches!(load_csv(f.path(), &schema, None), Err(DataError::MalformedRow { line: 2, .. })));
        let f = write("x,y\n,a\n");
        assert!(matches!(load_csv(f.path(), &schema, None), Err(DataError::Empty)));
    }

    #[test]
    fn numeric_ranges() {
        let schema = AttributeSchema::new(
            vec![Column::numeric("x"), Column::categorical("crime", ["low", "mid", "high"])],
            None,
            "crime",
        )
        .unwrap();
        let g = LabelGrouping::Ranges(vec![(0.15, "low".into()), (0.5, "mid".into()), (f64::INFINITY, "high".into())]);
        let f = write("x,crime\n1,0.1\n2,0.15\n3,0.3\n4,0.9\n");
        assert_eq!(load_csv(f.path(), &schema, Some(&g)).unwrap().dataset.labels(), vec![0, 0, 1, 2]);
    }
}
