use std::sync::Arc;

use super::AttackError;
use crate::data::{resample_with_ratio, Encoder, GraphDataset, PropertySpec, TabularDataset};
use crate::models::{train_dense, train_gcn, Architecture, GraphContext, Hyperparameters, ModelError, Queries, TrainedModel};

/// How the target (and therefore every shadow) model is trained.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecipe {
    pub arch: Architecture,
    pub hp: Hyperparameters,
}

/// A learning task as seen by the attacker: how to resample data with a
/// property, how models are trained on pooled party data, and the probes.
pub trait Task: Sync {
    type Data: Clone + Send + Sync;

    fn n_classes(&self) -> usize;
    /// The attacker's auxiliary pool.
    fn aux(&self) -> &Self::Data;
    /// The probe set D_attack in query form.
    fn probes(&self) -> &Queries;
    fn resample(&self, pool: &Self::Data, spec: &PropertySpec, size: usize, seed: u64) -> Result<Self::Data, AttackError>;
    /// Fraction of `data` carrying the property value.
    fn measure(&self, data: &Self::Data, spec: &PropertySpec) -> Result<f64, AttackError>;
    /// Splits a pool into two disjoint halves.
    fn halves(&self, pool: &Self::Data) -> Result<(Self::Data, Self::Data), AttackError>;
    /// Trains on the union of `parts`.
    fn train(&self, parts: &[&Self::Data], seed: u64) -> Result<TrainedModel, ModelError>;
}

/// Tabular task. Features are encoded with min-max statistics from D_aux;
/// with `with_sensitive` false the sensitive column is left out entirely.
pub struct TabularTask {
    recipe: TrainRecipe,
    encoder: Encoder,
    aux: TabularDataset,
    probes: Queries,
    n_classes: usize,
}

impl TabularTask {
    pub fn new(aux: TabularDataset, attack: &TabularDataset, recipe: TrainRecipe, with_sensitive: bool) -> Result<TabularTask, AttackError> {
        if matches!(recipe.arch, Architecture::Gcn { .. }) {
            return Err(AttackError::Config("a tabular task cannot train a GCN".into()));
        }
        let encoder = Encoder::fit(&aux, with_sensitive);
        let probes = Queries::Features(encoder.transform(attack)?);
        let n_classes = aux.schema().n_classes().ok_or_else(|| AttackError::Config("the target column must be categorical".into()))?;
        Ok(TabularTask { recipe, encoder, aux, probes, n_classes })
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn recipe(&self) -> &TrainRecipe {
        &self.recipe
    }
}

impl Task for TabularTask {
    type Data = TabularDataset;

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn aux(&self) -> &TabularDataset {
        &self.aux
    }

    fn probes(&self) -> &Queries {
        &self.probes
    }

    fn resample(&self, pool: &TabularDataset, spec: &PropertySpec, size: usize, seed: u64) -> Result<TabularDataset, AttackError> {
        Ok(resample_with_ratio(pool, spec, size, seed)?)
    }

    fn measure(&self, data: &TabularDataset, spec: &PropertySpec) -> Result<f64, AttackError> {
        Ok(spec.measure(data)?)
    }

    fn halves(&self, pool: &TabularDataset) -> Result<(TabularDataset, TabularDataset), AttackError> {
        let mid = pool.n_records() / 2;
        let first: Vec<usize> = (0..mid).collect();
        let second: Vec<usize> = (mid..pool.n_records()).collect();
        Ok((pool.select(&first)?, pool.select(&second)?))
    }

    fn train(&self, parts: &[&TabularDataset], seed: u64) -> Result<TrainedModel, ModelError> {
        let data = TabularDataset::concat(parts).map_err(|e| ModelError::Dimension(e.to_string()))?;
        let x = self.encoder.transform(&data).map_err(|e| ModelError::Dimension(e.to_string()))?;
        let hidden: &[usize] = match &self.recipe.arch {
            Architecture::Mlp { hidden } => hidden,
            _ => &[],
        };
        train_dense(&x, &data.labels(), self.n_classes, hidden, &self.recipe.hp.with_seed(seed))
    }
}

/// Transductive graph task: data are node sets whose labels supervise a GCN
/// on the full graph. Without the sensitive attribute every node gets the
/// same constant feature.
pub struct GraphTask {
    recipe: TrainRecipe,
    graph: Arc<GraphDataset>,
    context: Arc<GraphContext>,
    aux: Vec<usize>,
    probes: Queries,
    hidden: usize,
}

impl GraphTask {
    pub fn new(graph: Arc<GraphDataset>, aux: Vec<usize>, attack: Vec<usize>, recipe: TrainRecipe, with_sensitive: bool) -> Result<GraphTask, AttackError> {
        let hidden = match recipe.arch {
            Architecture::Gcn { hidden } => hidden,
            _ => return Err(AttackError::Config("a graph task trains a GCN".into())),
        };
        let features = if with_sensitive { graph.node_features() } else { graph.blind_features() };
        let context = Arc::new(GraphContext::new(graph.edges().to_vec(), features));
        Ok(GraphTask { recipe, graph, context, aux, probes: Queries::Nodes(attack), hidden })
    }

    pub fn graph(&self) -> &GraphDataset {
        &self.graph
    }

    pub fn context(&self) -> &Arc<GraphContext> {
        &self.context
    }
}

impl Task for GraphTask {
    type Data = Vec<usize>;

    fn n_classes(&self) -> usize {
        self.graph.n_classes()
    }

    fn aux(&self) -> &Vec<usize> {
        &self.aux
    }

    fn probes(&self) -> &Queries {
        &self.probes
    }

    fn resample(&self, pool: &Vec<usize>, spec: &PropertySpec, size: usize, seed: u64) -> Result<Vec<usize>, AttackError> {
        Ok(self.graph.resample_nodes(pool, spec, size, seed)?)
    }

    fn measure(&self, data: &Vec<usize>, spec: &PropertySpec) -> Result<f64, AttackError> {
        Ok(self.graph.measure(data, spec)?)
    }

    fn halves(&self, pool: &Vec<usize>) -> Result<(Vec<usize>, Vec<usize>), AttackError> {
        let (a, b) = pool.split_at(pool.len() / 2);
        Ok((a.to_vec(), b.to_vec()))
    }

    fn train(&self, parts: &[&Vec<usize>], seed: u64) -> Result<TrainedModel, ModelError> {
        let mask: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
        let hp = self.recipe.hp.with_seed(seed);
        train_gcn(Arc::clone(&self.context), self.graph.node_labels(), self.graph.n_classes(), self.hidden, &hp, &mask)
    }
}
