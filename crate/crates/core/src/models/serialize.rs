//! Plain-text model files. Parameters are written with 17 significant digits
//! so a round trip is bit-exact.

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use ndarray::Array2;

use super::{Architecture, GraphContext, Hyperparameters, ModelError, TrainedModel};

const MAGIC: &str = "propinfer-model: 1";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_model<W: Write>(model: &TrainedModel, mut out: W) -> std::io::Result<()> {
    let hp = model.hyperparameters();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "arch: {}", model.arch())?;
    writeln!(out, "classes: {}", model.n_classes())?;
    writeln!(out, "input_width: {}", model.input_width())?;
    writeln!(
        out,
        "hyper: {} {} {} {} {}",
        fmt_f64(hp.learning_rate),
        fmt_f64(hp.weight_decay),
        hp.epochs,
        hp.batch_size,
        hp.seed
    )?;
    writeln!(out, "params: {}", model.n_params())?;
    for p in model.params() {
        writeln!(out, "{}", fmt_f64(*p))?;
    }
    if let Some(g) = model.graph() {
        writeln!(out, "graph: {} {} {}", g.n_nodes(), g.edges.len(), g.n_features())?;
        for (a, b) in &g.edges {
            writeln!(out, "{a} {b}")?;
        }
        for row in g.features.rows() {
            let vals: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(out, "{}", vals.join(" "))?;
        }
    }
    out.flush()
}

struct Lines<R: BufRead> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, ModelError> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(ModelError::Format(e.to_string())),
            None => Err(ModelError::Format(format!("unexpected end of file at line {}", self.line))),
        }
    }

    fn field(&mut self, key: &str) -> Result<String, ModelError> {
        let l = self.next()?;
        l.strip_prefix(key)
            .and_then(|r| r.strip_prefix(": "))
            .map(str::to_string)
            .ok_or_else(|| self.err(&format!("expected `{key}:`")))
    }

    fn err(&self, msg: &str) -> ModelError {
        ModelError::Format(format!("line {}: {msg}", self.line))
    }
}

fn parse<T: std::str::FromStr, R: BufRead>(lines: &Lines<R>, s: &str) -> Result<T, ModelError> {
    s.trim().parse().map_err(|_| lines.err(&format!("cannot parse `{s}`")))
}

pub fn read_model<R: Read>(input: R) -> Result<TrainedModel, ModelError> {
    let mut lines = Lines { inner: BufReader::new(input).lines(), line: 0 };
    if lines.next()?.trim() != MAGIC {
        return Err(lines.err("not a model file"));
    }
    let arch: Architecture = lines.field("arch")?.parse()?;
    let s = lines.field("classes")?;
    let n_classes: usize = parse(&lines, &s)?;
    let s = lines.field("input_width")?;
    let input_width: usize = parse(&lines, &s)?;
    let hyper = lines.field("hyper")?;
    let h: Vec<&str> = hyper.split_whitespace().collect();
    if h.len() != 5 {
        return Err(lines.err("hyper needs five values"));
    }
    let hp = Hyperparameters {
        learning_rate: parse(&lines, h[0])?,
        weight_decay: parse(&lines, h[1])?,
        epochs: parse(&lines, h[2])?,
        batch_size: parse(&lines, h[3])?,
        seed: parse(&lines, h[4])?,
    };
    let s = lines.field("params")?;
    let n_params: usize = parse(&lines, &s)?;
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        let l = lines.next()?;
        params.push(parse(&lines, &l)?);
    }
    let graph = if matches!(arch, Architecture::Gcn { .. }) {
        let header = lines.field("graph")?;
        let g: Vec<usize> = header.split_whitespace().map(|v| parse(&lines, v)).collect::<Result<_, _>>()?;
        if g.len() != 3 {
            return Err(lines.err("graph needs node, edge and feature counts"));
        }
        let (n_nodes, n_edges, n_feat) = (g[0], g[1], g[2]);
        let mut edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let l = lines.next()?;
            let e: Vec<usize> = l.split_whitespace().map(|v| parse(&lines, v)).collect::<Result<_, _>>()?;
            match e.as_slice() {
                [a, b] if *a < n_nodes && *b < n_nodes => edges.push((*a, *b)),
                _ => return Err(lines.err("bad edge")),
            }
        }
        let mut feats = Vec::with_capacity(n_nodes * n_feat);
        for _ in 0..n_nodes {
            let l = lines.next()?;
            let row: Vec<f64> = l.split_whitespace().map(|v| parse(&lines, v)).collect::<Result<_, _>>()?;
            if row.len() != n_feat {
                return Err(lines.err("feature row has the wrong width"));
            }
            feats.extend(row);
        }
        let features = Array2::from_shape_vec((n_nodes, n_feat), feats).map_err(|e| ModelError::Format(e.to_string()))?;
        Some(Arc::new(GraphContext::new(edges, features)))
    } else {
        None
    };
    TrainedModel::from_parts(arch, n_classes, input_width, params, hp, graph)
}
