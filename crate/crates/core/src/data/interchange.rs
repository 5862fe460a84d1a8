//! Plain-text dataset interchange: a `key: value` header describing the
//! schema, a `---` separator, then a CSV body with categorical cells written
//! as level names.
//!
//! ```text
//! propinfer-dataset: 1
//! column: x0 numeric
//! column: c0 categorical l0|l1|l2
//! sensitive: A
//! target: y
//! records: 2
//! ---
//! x0,c0,A,y
//! 0.25,l1,3.5,2
//! ...
//! ```

use std::io::{BufRead, Write};
use std::sync::Arc;

use super::dataset::TabularDataset;
use super::schema::{AttributeSchema, Column, ColumnKind};
use super::DataError;

const MAGIC: &str = "propinfer-dataset";

pub fn write_dataset<W: Write>(ds: &TabularDataset, mut out: W) -> Result<(), DataError> {
    let schema = ds.schema();
    writeln!(out, "{MAGIC}: 1")?;
    for c in schema.columns() {
        match &c.kind {
            ColumnKind::Numeric => writeln!(out, "column: {} numeric", c.name)?,
            ColumnKind::Categorical { levels } => writeln!(out, "column: {} categorical {}", c.name, levels.join("|"))?,
        }
    }
    if let Some(a) = schema.sensitive() {
        writeln!(out, "sensitive: {a}")?;
    }
    writeln!(out, "target: {}", schema.target())?;
    writeln!(out, "records: {}", ds.n_records())?;
    writeln!(out, "---")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(schema.columns().iter().map(|c| c.name.as_str()))?;
    for row in ds.rows() {
        let cells: Vec<String> = schema
            .columns()
            .iter()
            .zip(row)
            .map(|(c, &v)| match &c.kind {
                ColumnKind::Numeric => format!("{v:?}"),
                ColumnKind::Categorical { levels } => levels[v as usize].clone(),
            })
            .collect();
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(mut input: R) -> Result<TabularDataset, DataError> {
    let mut columns = Vec::new();
    let mut sensitive = None;
    let mut target = None;
    let mut records = None;
    let mut line_no = 0;
    let mut line = String::new();
    loop {
        line.clear();
        line_no += 1;
        if input.read_line(&mut line)? == 0 {
            return Err(DataError::MalformedRow { line: line_no, msg: "missing `---` separator".into() });
        }
        let l = line.trim_end();
        if l == "---" {
            break;
        }
        let (key, value) = l
            .split_once(':')
            .ok_or_else(|| DataError::MalformedRow { line: line_no, msg: format!("expected `key: value`, got `{l}`") })?;
        let value = value.trim();
        match key.trim() {
            MAGIC => {}
            "column" => {
                let mut parts = value.splitn(3, ' ');
                let name = parts.next().unwrap_or_default().to_string();
                let col = match (parts.next(), parts.next()) {
                    (Some("numeric"), None) => Column::numeric(name),
                    (Some("categorical"), Some(levels)) => Column::categorical(name, levels.split('|')),
                    _ => return Err(DataError::MalformedRow { line: line_no, msg: format!("bad column spec `{value}`") }),
                };
                columns.push(col);
            }
            "sensitive" => sensitive = Some(value.to_string()),
            "target" => target = Some(value.to_string()),
            "records" => {
                records = Some(value.parse::<usize>().map_err(|_| DataError::MalformedRow { line: line_no, msg: "bad record count".into() })?)
            }
            other => return Err(DataError::MalformedRow { line: line_no, msg: format!("unknown key `{other}`") }),
        }
    }
    let target = target.ok_or_else(|| DataError::Schema("missing target".into()))?;
    let schema = Arc::new(AttributeSchema::new(columns, sensitive, target)?);

    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = line_no + 2 + i;
        if rec.len() != schema.n_columns() {
            return Err(DataError::MalformedRow { line, msg: "wrong field count".into() });
        }
        for (c, cell) in schema.columns().iter().zip(rec.iter()) {
            values.push(match &c.kind {
                ColumnKind::Numeric => cell.parse::<f64>().map_err(|_| DataError::MalformedRow { line, msg: format!("bad number `{cell}`") })?,
                ColumnKind::Categorical { levels } => levels
                    .iter()
                    .position(|l| l == cell)
                    .ok_or_else(|| DataError::UnknownCategory { line, column: c.name.clone(), value: cell.to_string() })?
                    as f64,
            });
        }
    }
    let ds = TabularDataset::new(schema, values)?;
    if let Some(n) = records {
        if n != ds.n_records() {
            return Err(DataError::Schema(format!("header declares {n} records, body has {}", ds.n_records())));
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{synth_generate, Scenario, SyntheticConfig};

    #[test]
    fn round_trips_exactly() {
        let mut cfg = SyntheticConfig::new(Scenario::CorrelatedBoth);
        cfg.n_records = 50;
        let ds = synth_generate(&cfg, 3).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("propinfer-dataset: 1\ncolumn: x0 numeric\n"));
        assert!(text.contains("column: c0 categorical l0|l1|l2\n"));
        assert_eq!(read_dataset(&buf[..]).unwrap(), ds);
    }

    #[test]
    fn rejects_count_mismatch() {
        let text = "propinfer-dataset: 1\ncolumn: x numeric\ncolumn: y categorical a|b\ntarget: y\nrecords: 3\n---\nx,y\n1.0,a\n";
        assert!(read_dataset(text.as_bytes()).is_err());
    }
}
