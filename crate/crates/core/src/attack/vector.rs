use std::io::{BufRead, Write};

use ndarray::Array2;

use super::AttackError;
use crate::models::{ModelError, Queries, TrainedModel};

/// Anything that answers posterior queries: a local model or a remote one.
pub trait QueryInterface {
    fn n_classes(&self) -> usize;
    fn query(&self, queries: &Queries) -> Result<Array2<f64>, QueryError>;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("query {index}: {msg}")]
    AtIndex { index: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("connection: {0}")]
    Connection(String),
    #[error("timed out after {0} ms")]
    Timeout(u64),
    #[error("response id {got} does not match request id {expected}")]
    IdMismatch { expected: u64, got: String },
}

impl QueryInterface for TrainedModel {
    fn n_classes(&self) -> usize {
        TrainedModel::n_classes(self)
    }

    fn query(&self, queries: &Queries) -> Result<Array2<f64>, QueryError> {
        if let (Queries::Nodes(ids), Some(g)) = (queries, self.graph()) {
            if let Some(index) = ids.iter().position(|&i| i >= g.n_nodes()) {
                return Err(QueryError::AtIndex { index, msg: format!("node id {} is out of range", ids[index]) });
            }
        }
        Ok(self.predict_proba(queries)?)
    }
}

/// Concatenated posteriors over the probe set (black box) or a flattened
/// parameter vector (white box).
#[derive(Debug, Clone, PartialEq)]
pub struct AttackVector {
    values: Vec<f64>,
    k: usize,
    l: usize,
    white_box: bool,
}

const SIMPLEX_TOL: f64 = 1e-6;

impl AttackVector {
    /// Flattens a `k × l` posterior matrix row by row.
    pub fn from_posteriors(posteriors: &Array2<f64>) -> Result<AttackVector, AttackError> {
        let (k, l) = posteriors.dim();
        for (i, row) in posteriors.rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(AttackError::Query(QueryError::AtIndex { index: i, msg: format!("posterior is not a probability vector (sum {sum})") }));
            }
        }
        Ok(AttackVector { values: posteriors.iter().copied().collect(), k, l, white_box: false })
    }

    pub fn white_box(values: Vec<f64>) -> AttackVector {
        let k = values.len();
        AttackVector { values, k, l: 1, white_box: true }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Query count; for white-box vectors, the parameter count.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn is_white_box(&self) -> bool {
        self.white_box
    }

    /// The vector restricted to the first `k` queries.
    pub fn prefix(&self, k: usize) -> AttackVector {
        if self.white_box {
            return self.clone();
        }
        let k = k.min(self.k);
        AttackVector { values: self.values[..k * self.l].to_vec(), k, l: self.l, white_box: false }
    }
}

/// Queries `model` on the probe set and concatenates the posteriors in order.
pub fn build_attack_vector(model: &dyn QueryInterface, d_attack: &Queries) -> Result<AttackVector, AttackError> {
    if d_attack.is_empty() {
        return Err(AttackError::Config("the probe set is empty".into()));
    }
    let post = model.query(d_attack)?;
    if post.nrows() != d_attack.len() || post.ncols() != model.n_classes() {
        return Err(AttackError::Query(QueryError::Connection(format!(
            "expected a {}x{} posterior matrix, got {}x{}",
            d_attack.len(),
            model.n_classes(),
            post.nrows(),
            post.ncols()
        ))));
    }
    AttackVector::from_posteriors(&post)
}

/// Writes `label,v1,v2,...` lines with round-trip float formatting.
pub fn write_vectors<W: Write>(pairs: &[(AttackVector, usize)], mut out: W) -> std::io::Result<()> {
    for (v, label) in pairs {
        write!(out, "{label}")?;
        for x in v.values() {
            write!(out, ",{x:?}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Reads a vector dump; `l` is the posterior width (1 for white-box dumps).
pub fn read_vectors<R: BufRead>(input: R, l: usize) -> Result<Vec<(AttackVector, usize)>, AttackError> {
    let mut pairs = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| AttackError::Config(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| AttackError::Config(format!("vector dump line {}: {m}", n + 1));
        let mut fields = line.split(',');
        let label: usize = fields.next().unwrap_or("").trim().parse().map_err(|_| bad("bad label"))?;
        let values = fields.map(|f| f.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad("bad value"))?;
        if l == 0 || values.len() % l != 0 {
            return Err(bad("length is not a multiple of the class count"));
        }
        let v = if l == 1 { AttackVector::white_box(values) } else { AttackVector { k: values.len() / l, l, values, white_box: false } };
        pairs.push((v, label));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn concatenates_rows() {
        let v = AttackVector::from_posteriors(&array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(v.values(), &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!((v.k(), v.l()), (2, 3));
        assert_eq!(v.prefix(1).values(), &[1.0, 0.0, 0.0]);
        assert!(AttackVector::from_posteriors(&array![[0.5, 0.6]]).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let pairs = vec![
            (AttackVector::from_posteriors(&array![[0.1, 0.9], [1.0 / 3.0, 2.0 / 3.0]]).unwrap(), 0),
            (AttackVector::from_posteriors(&array![[0.7, 0.3], [0.25, 0.75]]).unwrap(), 1),
        ];
        let mut buf = Vec::new();
        write_vectors(&pairs, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("0,0.1,0.9,"));
        assert_eq!(read_vectors(buf.as_slice(), 2).unwrap(), pairs);
    }
}
