//! Graph data: a stochastic-block co-purchase stand-in where node type plays
//! the sensitive attribute and node labels are review-score classes.

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::SplitSizes;
use super::resample::{stratified_count, PropertySpec};
use super::DataError;
use crate::rng::rng_from_seed;

/// Name of the node-type attribute used in property specs.
pub const TYPE_ATTRIBUTE: &str = "type";
const INTRA_BOOST: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    n_nodes: usize,
    /// Undirected edges as `(u, v)` with `u < v`; no self-loops.
    edges: Vec<(usize, usize)>,
    node_types: Vec<usize>,
    n_types: usize,
    node_labels: Vec<usize>,
    n_classes: usize,
    party_masks: Vec<Vec<usize>>,
}

impl GraphDataset {
    pub fn new(
        n_nodes: usize,
        edges: Vec<(usize, usize)>,
        node_types: Vec<usize>,
        n_types: usize,
        node_labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self, DataError> {
        let bad = |m: String| Err(DataError::Schema(m));
        if node_types.len() != n_nodes || node_labels.len() != n_nodes {
            return bad("types and labels must cover every node".into());
        }
        if node_types.iter().any(|&t| t >= n_types) || node_labels.iter().any(|&l| l >= n_classes) {
            return bad("type or label out of range".into());
        }
        let mut seen = HashSet::new();
        let mut canon = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u == v {
                return bad(format!("self-loop on node {u}"));
            }
            if u >= n_nodes || v >= n_nodes {
                return bad(format!("edge ({u}, {v}) out of range"));
            }
            let e = (u.min(v), u.max(v));
            if seen.insert(e) {
                canon.push(e);
            }
        }
        Ok(GraphDataset { n_nodes, edges: canon, node_types, n_types, node_labels, n_classes, party_masks: Vec::new() })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_types(&self) -> &[usize] {
        &self.node_types
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn node_labels(&self) -> &[usize] {
        &self.node_labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn type_name(t: usize) -> String {
        format!("t{t}")
    }

    /// One-hot node-type matrix (`n_nodes × n_types`).
    pub fn node_features(&self) -> Array2<f64> {
        let mut x = Array2::zeros((self.n_nodes, self.n_types));
        for (i, &t) in self.node_types.iter().enumerate() {
            x[[i, t]] = 1.0;
        }
        x
    }

    /// Constant single-column features, used when the type is withheld.
    pub fn blind_features(&self) -> Array2<f64> {
        Array2::ones((self.n_nodes, 1))
    }

    pub fn party_masks(&self) -> &[Vec<usize>] {
        &self.party_masks
    }

    /// Attaches per-party node masks; masks must be pairwise disjoint.
    pub fn with_party_masks(mut self, masks: Vec<Vec<usize>>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for m in &masks {
            for &i in m {
                if i >= self.n_nodes || !seen.insert(i) {
                    return Err(DataError::Schema(format!("node {i} is out of range or in two party masks")));
                }
            }
        }
        self.party_masks = masks;
        Ok(self)
    }

    /// Fraction of `nodes` whose type matches the property value.
    pub fn measure(&self, nodes: &[usize], spec: &PropertySpec) -> Result<f64, DataError> {
        let t = self.type_of(spec)?;
        Ok(nodes.iter().filter(|&&i| self.node_types[i] == t).count() as f64 / nodes.len().max(1) as f64)
    }

    fn type_of(&self, spec: &PropertySpec) -> Result<usize, DataError> {
        if spec.attribute != TYPE_ATTRIBUTE {
            return Err(DataError::UnknownColumn(spec.attribute.clone()));
        }
        (0..self.n_types)
            .find(|&t| Self::type_name(t) == spec.value)
            .ok_or_else(|| DataError::Property(format!("unknown node type `{}`", spec.value)))
    }

    /// Graph analogue of tabular resampling: picks `size` nodes from `pool`
    /// with exactly the rounded share of the property type.
    pub fn resample_nodes(&self, pool: &[usize], spec: &PropertySpec, size: usize, seed: u64) -> Result<Vec<usize>, DataError> {
        let t = self.type_of(spec)?;
        let (with, without): (Vec<usize>, Vec<usize>) = pool.iter().partition(|&&i| self.node_types[i] == t);
        let n_with = stratified_count(spec.ratio, size);
        let mut rng = rng_from_seed(seed);
        let mut draw = |stratum: &[usize], n: usize| -> Result<Vec<usize>, DataError> {
            if n == 0 {
                return Ok(Vec::new());
            }
            if stratum.is_empty() {
                return Err(DataError::EmptyStratum(spec.to_string()));
            }
            if stratum.len() >= n {
                Ok(index::sample(&mut rng, stratum.len(), n).into_iter().map(|k| stratum[k]).collect())
            } else {
                // Transductive training supervises each node once; duplicates add nothing.
                log::warn!("node stratum has {} nodes, {} requested; using all of them", stratum.len(), n);
                Ok(stratum.to_vec())
            }
        };
        let mut picked = draw(&with, n_with)?;
        picked.extend(draw(&without, size - n_with)?);
        picked.shuffle(&mut rng);
        Ok(picked)
    }
}

/// Disjoint node sets for the parties and the attacker.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPartition {
    pub adv: Vec<usize>,
    /// Pool from which honest node sets are drawn.
    pub honest: Vec<usize>,
    pub aux: Vec<usize>,
    pub attack: Vec<usize>,
}

impl GraphPartition {
    pub fn new(n_nodes: usize, sizes: SplitSizes, seed: u64) -> Result<Self, DataError> {
        if sizes.total() > n_nodes {
            return Err(DataError::InsufficientPool { available: n_nodes, required: sizes.total() });
        }
        let mut order: Vec<usize> = (0..n_nodes).collect();
        order.shuffle(&mut rng_from_seed(seed));
        let attack = order[..sizes.attack].to_vec();
        let mut rest = order[sizes.attack..].iter().copied();
        let aux = rest.by_ref().take(sizes.aux).collect();
        let adv = rest.by_ref().take(sizes.adv).collect();
        let honest = rest.take(sizes.honest).collect();
        Ok(GraphPartition { adv, honest, aux, attack })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub n_nodes: usize,
    pub n_types: usize,
    /// Share of nodes of one type (`type = t0` by default).
    pub type_split: PropertySpec,
    pub n_classes: usize,
    /// 0 gives equal intra/inter-type edge rates; 1 makes intra-type edges
    /// `1 + INTRA_BOOST` times likelier.
    pub homophily: f64,
    /// Scale of the type effect on the latent review score.
    pub label_signal: f64,
    pub avg_degree: f64,
}

impl GraphConfig {
    pub fn new(n_nodes: usize, n_classes: usize) -> GraphConfig {
        GraphConfig {
            n_nodes,
            n_types: 4,
            type_split: PropertySpec { attribute: TYPE_ATTRIBUTE.into(), value: "t0".into(), ratio: 0.5 },
            n_classes,
            homophily: 0.5,
            label_signal: 1.0,
            avg_degree: 8.0,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::Config(m.to_string()));
        if self.n_types < 2 {
            return bad("need at least two node types");
        }
        if !(0.0..=1.0).contains(&self.homophily) {
            return bad("homophily outside [0, 1]");
        }
        if !matches!(self.n_classes, 2 | 6 | 11) {
            return bad("graph class count must be 2, 6 or 11");
        }
        if self.n_nodes < 2 || self.avg_degree < 0.0 {
            return bad("need at least two nodes and a non-negative degree");
        }
        if self.type_split.attribute != TYPE_ATTRIBUTE {
            return bad("type split must refer to the `type` attribute");
        }
        Ok(())
    }

    /// Intra- and inter-type edge probabilities.
    pub fn edge_probabilities(&self) -> (f64, f64) {
        let base = self.avg_degree / (self.n_nodes - 1) as f64;
        ((base * (1.0 + INTRA_BOOST * self.homophily)).min(1.0), base.min(1.0))
    }
}

/// Stochastic-block graph with typed nodes and type-dependent labels.
///
/// Each node gets a latent score `label_signal·μ(type) + N(0, 1)` with type
/// means spread evenly on `[-2, 2]`; classes are equal-frequency bins of the
/// latent over the whole graph.
pub fn synth_graph_generate(cfg: &GraphConfig, seed: u64) -> Result<GraphDataset, DataError> {
    cfg.validate()?;
    let value_type = (0..cfg.n_types)
        .find(|&t| GraphDataset::type_name(t) == cfg.type_split.value)
        .ok_or_else(|| DataError::Property(format!("unknown node type `{}`", cfg.type_split.value)))?;
    let mut rng = rng_from_seed(seed);

    let n_value = stratified_count(cfg.type_split.ratio, cfg.n_nodes);
    let others: Vec<usize> = (0..cfg.n_types).filter(|&t| t != value_type).collect();
    let mut types: Vec<usize> = (0..cfg.n_nodes)
        .map(|i| if i < n_value { value_type } else { others[(i - n_value) % others.len()] })
        .collect();
    types.shuffle(&mut rng);

    let (p_in, p_out) = cfg.edge_probabilities();
    let mut edges = Vec::new();
    for u in 0..cfg.n_nodes {
        for v in u + 1..cfg.n_nodes {
            let p = if types[u] == types[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }

    let mean = |t: usize| 2.0 * (2.0 * t as f64 / (cfg.n_types - 1) as f64 - 1.0);
    let latent: Vec<f64> = types
        .iter()
        .map(|&t| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            cfg.label_signal * mean(t) + noise
        })
        .collect();
    let mut sorted = latent.clone();
    sorted.sort_by(f64::total_cmp);
    let cuts: Vec<f64> = (1..cfg.n_classes).map(|c| sorted[c * cfg.n_nodes / cfg.n_classes]).collect();
    let labels = latent.iter().map(|&s| cuts.iter().filter(|&&c| s >= c).count()).collect();

    GraphDataset::new(cfg.n_nodes, edges, types, cfg.n_types, labels, cfg.n_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_and_overlapping_masks() {
        assert!(GraphDataset::new(2, vec![(1, 1)], vec![0, 1], 2, vec![0, 0], 2).is_err());
        let g = GraphDataset::new(3, vec![(1, 0), (0, 1)], vec![0, 1, 1], 2, vec![0, 1, 0], 2).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert!(g.clone().with_party_masks(vec![vec![0, 1], vec![1]]).is_err());
        assert!(g.with_party_masks(vec![vec![0], vec![1, 2]]).is_ok());
    }

    #[test]
    fn all_one_type_and_class_domain() {
        let mut cfg = GraphConfig::new(200, 11);
        cfg.n_types = 2;
        cfg.type_split.ratio = 0.0;
        let g = synth_graph_generate(&cfg, 1).unwrap();
        assert!(g.node_types().iter().all(|&t| t == 1));
        let labels: HashSet<usize> = g.node_labels().iter().copied().collect();
        assert_eq!(labels.len(), 11);
        assert!(g.node_labels().iter().all(|&l| l < 11));
    }

    #[test]
    fn partition_and_node_resampling() {
        let cfg = GraphConfig::new(400, 2);
        let g = synth_graph_generate(&cfg, 3).unwrap();
        let p = GraphPartition::new(400, SplitSizes { adv: 50, honest: 150, aux: 100, attack: 80 }, 4).unwrap();
        let all: HashSet<usize> = p.adv.iter().chain(&p.honest).chain(&p.aux).chain(&p.attack).copied().collect();
        assert_eq!(all.len(), 380);
        let spec = cfg.type_split.with_ratio(0.3).unwrap();
        let nodes = g.resample_nodes(&p.honest, &spec, 40, 5).unwrap();
        assert_eq!(nodes.len(), 40);
        assert_eq!(g.measure(&nodes, &spec).unwrap(), 0.3);
        assert_eq!(nodes, g.resample_nodes(&p.honest, &spec, 40, 5).unwrap());
    }

    #[test]
    fn deterministic() {
        let cfg = GraphConfig::new(300, 6);
        assert_eq!(synth_graph_generate(&cfg, 9).unwrap(), synth_graph_generate(&cfg, 9).unwrap());
    }
}
