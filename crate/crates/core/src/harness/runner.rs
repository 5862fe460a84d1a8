use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{format_split, DataSource, ExperimentConfig, Family};
use super::report::{ExperimentResult, Outcome};
use super::{axis_key, HarnessError};
use crate::attack::{
    build_attack_vector, dominance, generate_shadow_datasets, model_update_attack, run_attack, train_meta, train_shadow_ensemble,
    train_shadow_models, white_box_pairs, white_box_vector, AttackError, AttackVector, GraphTask, Prediction, QueryInterface, ShadowConfig, TabularTask, Task,
    UpdateVerdict,
    FINE_GRAINED_RATIOS,
};
use crate::data::{
    load_csv, make_splits, synth_generate, synth_graph_generate, GraphPartition, PropertySpec, SplitSizes, SyntheticConfig, TabularDataset, SENSITIVE_COLUMN,
};
use crate::models::TrainedModel;
use crate::rng::{derive_seed, stream};

/// Honest1/honest2 ratio pairs evaluated by the model-update family.
const UPDATE_COMBOS: [(f64, f64); 4] = [(0.3, 0.3), (0.3, 0.7), (0.7, 0.3), (0.7, 0.7)];

struct RepVectors {
    group: usize,
    truth: usize,
    /// One vector, or original and updated for the model-update family.
    vectors: Result<Vec<AttackVector>, String>,
}

/// Everything that does not depend on the probe count: shadow vectors and
/// per-repetition target vectors over the whole of D_attack.
pub struct PreparedExperiment {
    cfg: ExperimentConfig,
    train: Vec<(AttackVector, usize)>,
    reps: Vec<RepVectors>,
    group_names: Vec<String>,
    shadow_failures: usize,
    elapsed: Duration,
}

fn properties(cfg: &ExperimentConfig) -> Result<Vec<PropertySpec>, AttackError> {
    if matches!(cfg.family, Family::FineGrained | Family::ModelUpdate) {
        Ok(FINE_GRAINED_RATIOS.iter().map(|&r| cfg.property.with_ratio(r)).collect::<Result<_, _>>()?)
    } else {
        Ok(vec![cfg.property.clone(), cfg.property.with_ratio(cfg.bar_ratio)?])
    }
}

fn target_vector<T: Task>(task: &T, parts: &[&T::Data], seed: u64, white_box: bool) -> Result<AttackVector, String> {
    let model = task.train(parts, seed).map_err(|e| e.to_string())?;
    if white_box {
        Ok(white_box_vector(&model))
    } else {
        build_attack_vector(&model, task.probes()).map_err(|e| e.to_string())
    }
}

type Draw<'a, D> = Box<dyn Fn(&PropertySpec, usize, u64) -> Result<D, String> + Sync + 'a>;

/// Where fresh honest datasets come from.
enum HonestSource<'a, T: Task> {
    /// Resampled from held-out records; the model-update family draws its two
    /// honest parties from disjoint halves.
    Pool(T::Data),
    /// Drawn from the population itself.
    Population(Draw<'a, T::Data>),
}

impl<T: Task> HonestSource<'_, T> {
    fn draw(&self, task: &T, pools: &Option<(T::Data, T::Data)>, second: bool, spec: &PropertySpec, n: usize, seed: u64) -> Result<T::Data, String> {
        match (self, pools) {
            (HonestSource::Population(f), _) => f(spec, n, seed),
            (HonestSource::Pool(_), Some((a, b))) => task.resample(if second { b } else { a }, spec, n, seed).map_err(|e| e.to_string()),
            (HonestSource::Pool(p), None) => task.resample(p, spec, n, seed).map_err(|e| e.to_string()),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn evaluate_rep<T: Task>(
    cfg: &ExperimentConfig,
    task: &T,
    props: &[PropertySpec],
    adv: &T::Data,
    source: &HonestSource<'_, T>,
    pools: &Option<(T::Data, T::Data)>,
    r: usize,
) -> RepVectors {
    let seed = cfg.seed;
    let rep = r as u64;
    let honest_seed = derive_seed(seed, stream::HONEST_DATA, rep);
    let model_seed = derive_seed(seed, stream::TARGET_MODEL, rep);
    let white_box = cfg.family == Family::WhiteBox;
    let with_adv = cfg.family.includes_adversary();
    let n = cfg.splits.honest;
    if cfg.family == Family::ModelUpdate {
        let group = r % UPDATE_COMBOS.len();
        let (h1, h2) = UPDATE_COMBOS[group];
        let truth = if dominance(h1) == dominance(h2) { 0 } else { 1 };
        let vectors = (|| {
            let spec1 = cfg.property.with_ratio(h1).map_err(|e| e.to_string())?;
            let spec2 = cfg.property.with_ratio(h2).map_err(|e| e.to_string())?;
            let honest1 = source.draw(task, pools, false, &spec1, n, honest_seed)?;
            let honest2 = source.draw(task, pools, true, &spec2, n, derive_seed(seed, stream::UPDATE_DATA, rep))?;
            let original = target_vector(task, &[adv, &honest1], model_seed, false)?;
            let updated = target_vector(task, &[adv, &honest1, &honest2], derive_seed(seed, stream::UPDATE_MODEL, rep), false)?;
            Ok(vec![original, updated])
        })();
        return RepVectors { group, truth, vectors };
    }
    let truth = r % props.len();
    let vectors = source
        .draw(task, pools, false, &props[truth], n, honest_seed)
        .and_then(|honest| {
            let parts: Vec<&T::Data> = if with_adv { vec![&honest, adv] } else { vec![&honest] };
            target_vector(task, &parts, model_seed, white_box)
        })
        .map(|v| vec![v]);
    RepVectors { group: truth, truth, vectors }
}

fn shadow_pairs<T: Task>(cfg: &ExperimentConfig, task: &T, adv: &T::Data, props: &[PropertySpec]) -> Result<(Vec<(AttackVector, usize)>, usize), HarnessError> {
    let shadow_cfg = ShadowConfig {
        n_shadow: cfg.n_shadow,
        shadow_size: cfg.shadow_size,
        properties: props.to_vec(),
        include_adv_data: cfg.family.includes_adversary(),
    };
    let sets = generate_shadow_datasets(task, &shadow_cfg, cfg.seed)?;
    let d_adv = shadow_cfg.include_adv_data.then_some(adv);
    let out = if cfg.family == Family::WhiteBox {
        let ensemble = train_shadow_models(task, &sets, d_adv, cfg.seed)?;
        let models: Vec<_> = ensemble.members.iter().map(|m| (m.model.clone(), m.label)).collect();
        (white_box_pairs(&models)?, ensemble.failed.len())
    } else {
        let (pairs, ensemble) = train_shadow_ensemble(task, &sets, d_adv, cfg.seed)?;
        (pairs, ensemble.failed.len())
    };
    log::info!("{}: trained {} shadow models", cfg.name, out.0.len());
    Ok(out)
}

fn prepare_task<T: Task>(cfg: &ExperimentConfig, task: &T, adv: &T::Data, source: HonestSource<'_, T>) -> Result<PreparedExperiment, HarnessError> {
    let start = Instant::now();
    let props = properties(cfg)?;
    let (train, shadow_failures) = shadow_pairs(cfg, task, adv, &props)?;

    let pools = match &source {
        HonestSource::Pool(p) if cfg.family == Family::ModelUpdate => Some(task.halves(p)?),
        _ => None,
    };
    let reps: Vec<RepVectors> = (0..cfg.repetitions).into_par_iter().map(|r| evaluate_rep(cfg, task, &props, adv, &source, &pools, r)).collect();
    let failed = reps.iter().filter(|r| r.vectors.is_err()).count();
    for (i, r) in reps.iter().enumerate() {
        if let Err(e) = &r.vectors {
            log::warn!("repetition {i} failed: {e}");
        }
    }
    if failed * 20 > cfg.repetitions {
        return Err(HarnessError::RuntimeFailures { failed, total: cfg.repetitions });
    }
    let group_names = if cfg.family == Family::ModelUpdate {
        UPDATE_COMBOS.iter().map(|(a, b)| format!("{}/{}", format_split(*a), format_split(*b))).collect()
    } else {
        props.iter().map(|p| format_split(p.ratio)).collect()
    };
    Ok(PreparedExperiment { cfg: cfg.clone(), train, reps, group_names, shadow_failures, elapsed: start.elapsed() })
}

/// With a generator at hand, honest datasets for a property of A's `<5`
/// stratum are drawn straight from the population.
fn population_draw<'a>(cfg: &ExperimentConfig, synth: &'a SyntheticConfig) -> Option<Draw<'a, TabularDataset>> {
    if cfg.property.attribute != SENSITIVE_COLUMN || cfg.property.value != "<5" {
        return None;
    }
    Some(Box::new(move |spec: &PropertySpec, n: usize, seed: u64| {
        let s = SyntheticConfig { a_split: spec.ratio, n_records: n, ..synth.clone() };
        synth_generate(&s, seed).map_err(|e| e.to_string())
    }))
}

/// Receives the task, adversary data and honest source a config describes.
trait TaskVisitor {
    type Out;
    fn visit<T: Task>(self, cfg: &ExperimentConfig, task: &T, adv: &T::Data, source: HonestSource<'_, T>) -> Result<Self::Out, HarnessError>;
}

fn tabular<V: TaskVisitor>(cfg: &ExperimentConfig, population: &TabularDataset, draw: Option<Draw<'_, TabularDataset>>, v: V) -> Result<V::Out, HarnessError> {
    let sizes = SplitSizes { honest: cfg.honest_pool, ..cfg.splits };
    let parts = make_splits(population, sizes, derive_seed(cfg.seed, stream::SPLIT, 0))?;
    let task = TabularTask::new(parts.aux, &parts.attack, cfg.recipe.clone(), cfg.with_a)?;
    let source = match draw {
        Some(f) => HonestSource::Population(f),
        None => HonestSource::Pool(parts.honest),
    };
    v.visit(cfg, &task, &parts.adv, source)
}

fn with_task<V: TaskVisitor>(cfg: &ExperimentConfig, v: V) -> Result<V::Out, HarnessError> {
    let pop_seed = derive_seed(cfg.seed, stream::POPULATION, 0);
    let total = cfg.splits.adv + cfg.honest_pool + cfg.splits.aux + cfg.splits.attack;
    match &cfg.source {
        DataSource::Synthetic(s) => {
            let draw = population_draw(cfg, s);
            let population = synth_generate(&SyntheticConfig { n_records: total, ..s.clone() }, pop_seed)?;
            tabular(cfg, &population, draw, v)
        }
        DataSource::Csv(c) => {
            let schema = c.schema().map_err(|e| HarnessError::Config(vec![e]))?;
            let grouping = c.grouping().map_err(|e| HarnessError::Config(vec![e]))?;
            let load = load_csv(&c.path, &schema, grouping.as_ref())?;
            if load.dropped > 0 {
                log::info!("{}: dropped {} incomplete rows", cfg.name, load.dropped);
            }
            tabular(cfg, &load.dataset, None, v)
        }
        DataSource::Graph(g) => {
            let graph = synth_graph_generate(g, pop_seed)?;
            let sizes = SplitSizes { honest: cfg.honest_pool, ..cfg.splits };
            let part = GraphPartition::new(graph.n_nodes(), sizes, derive_seed(cfg.seed, stream::SPLIT, 0))?;
            let task = GraphTask::new(Arc::new(graph), part.aux, part.attack, cfg.recipe.clone(), cfg.with_a)?;
            v.visit(cfg, &task, &part.adv, HonestSource::Pool(part.honest))
        }
    }
}

struct Prepare;

impl TaskVisitor for Prepare {
    type Out = PreparedExperiment;
    fn visit<T: Task>(self, cfg: &ExperimentConfig, task: &T, adv: &T::Data, source: HonestSource<'_, T>) -> Result<PreparedExperiment, HarnessError> {
        prepare_task(cfg, task, adv, source)
    }
}

/// Builds the data, trains shadows and per-repetition targets.
pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedExperiment, HarnessError> {
    with_task(cfg, Prepare)
}

struct TrainTarget {
    ratio: f64,
    rep: u64,
}

impl TaskVisitor for TrainTarget {
    type Out = TrainedModel;
    fn visit<T: Task>(self, cfg: &ExperimentConfig, task: &T, adv: &T::Data, source: HonestSource<'_, T>) -> Result<TrainedModel, HarnessError> {
        let spec = cfg.property.with_ratio(self.ratio).map_err(AttackError::from)?;
        let honest = source
            .draw(task, &None, false, &spec, cfg.splits.honest, derive_seed(cfg.seed, stream::HONEST_DATA, self.rep))
            .map_err(|e| HarnessError::Attack(AttackError::Config(e)))?;
        let parts: Vec<&T::Data> = if cfg.family.includes_adversary() { vec![&honest, adv] } else { vec![&honest] };
        Ok(task.train(&parts, derive_seed(cfg.seed, stream::TARGET_MODEL, self.rep)).map_err(AttackError::from)?)
    }
}

/// Trains one target model the way repetition `rep` of `cfg` would, with the
/// honest party's property at `ratio`.
pub fn train_target(cfg: &ExperimentConfig, ratio: f64, rep: u64) -> Result<TrainedModel, HarnessError> {
    with_task(cfg, TrainTarget { ratio, rep })
}

/// Outcome of attacking a model that is only reachable through queries.
#[derive(Debug, Clone, PartialEq)]
pub struct RemoteVerdict {
    /// Name of the predicted property, e.g. `33:67`.
    pub property: String,
    pub prediction: Prediction,
}

struct RemoteAttack<'a> {
    target: &'a dyn QueryInterface,
}

impl TaskVisitor for RemoteAttack<'_> {
    type Out = RemoteVerdict;
    fn visit<T: Task>(self, cfg: &ExperimentConfig, task: &T, adv: &T::Data, _source: HonestSource<'_, T>) -> Result<RemoteVerdict, HarnessError> {
        if matches!(cfg.family, Family::WhiteBox | Family::ModelUpdate) {
            return Err(HarnessError::Config(vec![format!("family `{}` cannot attack a remote model", cfg.family)]));
        }
        let props = properties(cfg)?;
        let (train, _) = shadow_pairs(cfg, task, adv, &props)?;
        let k = cfg.queries;
        let pairs: Vec<(AttackVector, usize)> = train.iter().map(|(v, l)| (v.prefix(k), *l)).collect();
        let meta = train_meta(&pairs, cfg.meta, derive_seed(cfg.seed, stream::META, 0))?;
        let f = build_attack_vector(self.target, &task.probes().prefix(k)).map_err(AttackError::from)?;
        let prediction = run_attack(&meta, &f)?;
        Ok(RemoteVerdict { property: format_split(props[prediction.label].ratio), prediction })
    }
}

/// Trains the attack `cfg` describes and applies it to `target`, which is
/// queried with the first `k` probes.
pub fn attack_model(cfg: &ExperimentConfig, target: &dyn QueryInterface) -> Result<RemoteVerdict, HarnessError> {
    with_task(cfg, RemoteAttack { target })
}

impl PreparedExperiment {
    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// Trains the meta-classifier on the first `k` probes and scores every
    /// repetition. `cfg` supplies the reported settings.
    pub fn score(&self, cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
        let start = Instant::now();
        let k = cfg.queries;
        let pairs: Vec<(AttackVector, usize)> = self.train.iter().map(|(v, l)| (v.prefix(k), *l)).collect();
        let meta = train_meta(&pairs, cfg.meta, derive_seed(cfg.seed, stream::META, 0))?;
        let mut outcomes = Vec::with_capacity(self.reps.len());
        for (i, rep) in self.reps.iter().enumerate() {
            let (predicted, confidence) = match &rep.vectors {
                Err(_) => (None, None),
                Ok(v) if cfg.family == Family::ModelUpdate => {
                    let verdict = model_update_attack(&meta, &v[0].prefix(k), &v[1].prefix(k))?;
                    (Some(if verdict == UpdateVerdict::Same { 0 } else { 1 }), None)
                }
                Ok(v) => {
                    let p = run_attack(&meta, &v[0].prefix(k))?;
                    (Some(p.label), Some(p.confidence))
                }
            };
            outcomes.push(Outcome { rep: i, group: rep.group, truth: rep.truth, predicted, confidence });
        }
        let result = ExperimentResult {
            name: cfg.name.clone(),
            family: cfg.family.to_string(),
            setting: cfg.setting(),
            arch: cfg.recipe.arch.to_string(),
            with_a: cfg.with_a,
            queries: if cfg.family == Family::WhiteBox { 0 } else { k },
            digest: cfg.digest(),
            group_names: self.group_names.clone(),
            outcomes,
            correct: 0,
            incorrect: 0,
            failed: 0,
            accuracy: 0.0,
            ci_half_width: 0.0,
            shadow_failures: self.shadow_failures,
            wall_time: self.elapsed + start.elapsed(),
        };
        Ok(result.summarize())
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    prepare(cfg)?.score(cfg)
}

/// One result per axis value. All points share the master seed, so they are
/// paired; a probe-count sweep reuses one set of trained models.
pub fn run_sweep(base: &ExperimentConfig, axis: &str, values: &[String]) -> Result<Vec<ExperimentResult>, HarnessError> {
    let key = axis_key(base, axis)?;
    let configs = values.iter().map(|v| base.with_override(&key, v)).collect::<Result<Vec<_>, _>>()?;
    if key == "attack.queries" {
        let largest = configs.iter().max_by_key(|c| c.queries).expect("at least one value");
        let prepared = prepare(largest)?;
        return configs.iter().map(|c| prepared.score(c)).collect();
    }
    configs.iter().map(run_experiment).collect()
}
