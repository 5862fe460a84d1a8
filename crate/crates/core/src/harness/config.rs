//! Flat `dotted.key = value` experiment files, one experiment per file.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::attack::{MetaKind, TrainRecipe};
use crate::data::{
    AttributeSchema, Column, ColumnKind, GraphConfig, LabelGrouping, PropertySpec, Scenario, SplitSizes, SyntheticConfig, SENSITIVE_COLUMN,
    TYPE_ATTRIBUTE,
};
use crate::models::{Architecture, Hyperparameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    MultiParty,
    SingleParty,
    FineGrained,
    ModelUpdate,
    WhiteBox,
    AblationQueries,
    AblationSplit,
    AblationClasses,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::MultiParty,
        Family::SingleParty,
        Family::FineGrained,
        Family::ModelUpdate,
        Family::WhiteBox,
        Family::AblationQueries,
        Family::AblationSplit,
        Family::AblationClasses,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::MultiParty => "multi-party",
            Family::SingleParty => "single-party",
            Family::FineGrained => "fine-grained",
            Family::ModelUpdate => "model-update",
            Family::WhiteBox => "white-box",
            Family::AblationQueries => "ablation-queries",
            Family::AblationSplit => "ablation-split",
            Family::AblationClasses => "ablation-classes",
        }
    }

    fn is_ablation(self) -> bool {
        matches!(self, Family::AblationQueries | Family::AblationSplit | Family::AblationClasses)
    }

    /// Whether shadow and target models include the attacker's own data.
    pub fn includes_adversary(self) -> bool {
        self != Family::SingleParty
    }

    fn uses_fine_grained_meta(self) -> bool {
        matches!(self, Family::FineGrained | Family::ModelUpdate)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| format!("unknown family `{s}`"))
    }
}

/// Tabular data from a CSV file. Fields hold the config text verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSource {
    pub path: String,
    /// `name:numeric; name:categorical(a|b|c); ...`
    pub columns: String,
    pub target: String,
    pub sensitive: String,
    /// Target level → raw values mapped onto it.
    pub groups: BTreeMap<String, String>,
    /// `bound:level; ...` for a numeric raw target.
    pub ranges: Option<String>,
}

impl CsvSource {
    pub fn schema(&self) -> Result<AttributeSchema, String> {
        let mut cols = Vec::new();
        for spec in self.columns.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, kind) = spec.split_once(':').ok_or_else(|| format!("column spec `{spec}` lacks `:kind`"))?;
            let kind = kind.trim();
            let col = if kind == "numeric" {
                Column::numeric(name.trim())
            } else if let Some(levels) = kind.strip_prefix("categorical(").and_then(|r| r.strip_suffix(')')) {
                Column::categorical(name.trim(), levels.split('|').map(str::trim))
            } else {
                return Err(format!("unknown column kind `{kind}`"));
            };
            cols.push(col);
        }
        AttributeSchema::new(cols, Some(self.sensitive.clone()), self.target.clone()).map_err(|e| e.to_string())
    }

    pub fn grouping(&self) -> Result<Option<LabelGrouping>, String> {
        if let Some(r) = &self.ranges {
            let mut bounds = Vec::new();
            for part in r.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let (b, level) = part.split_once(':').ok_or_else(|| format!("range `{part}` lacks `:level`"))?;
                let b = if b.trim() == "inf" { f64::INFINITY } else { b.trim().parse().map_err(|_| format!("bad bound `{b}`"))? };
                bounds.push((b, level.trim().to_string()));
            }
            return Ok(Some(LabelGrouping::Ranges(bounds)));
        }
        if self.groups.is_empty() {
            return Ok(None);
        }
        let mut map = HashMap::new();
        for (level, raws) in &self.groups {
            for raw in raws.split('|').map(str::trim) {
                map.insert(raw.to_string(), level.clone());
            }
        }
        Ok(Some(LabelGrouping::Levels(map)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticConfig),
    Csv(CsvSource),
    Graph(GraphConfig),
}

impl DataSource {
    pub fn kind(&self) -> &'static str {
        match self {
            DataSource::Synthetic(_) => "synthetic",
            DataSource::Csv(_) => "csv",
            DataSource::Graph(_) => "graph",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub family: Family,
    pub seed: u64,
    pub repetitions: usize,
    pub with_a: bool,
    pub source: DataSource,
    /// `honest` here is the honest party's dataset size.
    pub splits: SplitSizes,
    /// Records reserved for drawing fresh honest datasets.
    pub honest_pool: usize,
    /// Property carried by label 0; its ratio is the first half of the split.
    pub property: PropertySpec,
    /// Ratio carried by label 1.
    pub bar_ratio: f64,
    pub recipe: TrainRecipe,
    pub n_shadow: usize,
    pub shadow_size: usize,
    pub meta: MetaKind,
    /// Probe count k (a prefix of D_attack).
    pub queries: usize,
    raw: BTreeMap<String, String>,
}

/// Parses `key = value` lines. `#` starts a comment; values may be quoted.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut map = BTreeMap::new();
    let mut errors = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(format!("line {}: expected `key = value`", n + 1));
            continue;
        };
        let key = k.trim().to_string();
        let mut value = v.trim();
        if let Some(i) = value.find(" #") {
            value = value[..i].trim_end();
        }
        let value = value.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(value);
        if key.is_empty() {
            errors.push(format!("line {}: empty key", n + 1));
        } else if map.insert(key.clone(), value.to_string()).is_some() {
            errors.push(format!("line {}: duplicate key `{key}`", n + 1));
        }
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(HarnessError::Config(errors))
    }
}

/// Parses `a:b` into the first share as a fraction, e.g. `33:67` → 0.33.
pub fn parse_split(s: &str) -> Result<f64, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("split `{s}` must look like 33:67"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad split `{s}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad split `{s}`"))?;
    if a < 0.0 || b < 0.0 || a + b <= 0.0 {
        return Err(format!("bad split `{s}`"));
    }
    Ok(a / (a + b))
}

/// `0.33` → `33:67`.
pub fn format_split(ratio: f64) -> String {
    let a = (ratio * 100.0).round() as i64;
    format!("{}:{}", a, 100 - a)
}

struct Reader<'a> {
    raw: &'a BTreeMap<String, String>,
    used: Vec<&'a str>,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn get<T: FromStr>(&mut self, key: &str, default: T) -> T {
        match self.raw.get_key_value(key) {
            None => default,
            Some((k, v)) => {
                self.used.push(k);
                match v.parse() {
                    Ok(x) => x,
                    Err(_) => {
                        self.errors.push(format!("`{key}`: cannot parse `{v}`"));
                        default
                    }
                }
            }
        }
    }

    fn text(&mut self, key: &str) -> Option<String> {
        self.raw.get_key_value(key).map(|(k, v)| {
            self.used.push(k);
            v.clone()
        })
    }

    fn with<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> T {
        match self.text(key) {
            None => default,
            Some(v) => parse(&v).unwrap_or_else(|e| {
                self.errors.push(format!("`{key}`: {e}"));
                default
            }),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<ExperimentConfig, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(vec![format!("{}: {e}", path.display())]))?;
        let mut raw = parse_kv(&text)?;
        if !raw.contains_key("name") {
            if let Some(stem) = path.file_stem() {
                raw.insert("name".into(), stem.to_string_lossy().into_owned());
            }
        }
        ExperimentConfig::from_map(raw)
    }

    pub fn parse(text: &str) -> Result<ExperimentConfig, HarnessError> {
        ExperimentConfig::from_map(parse_kv(text)?)
    }

    /// Resolves defaults and validates everything, reporting every problem at once.
    pub fn from_map(raw: BTreeMap<String, String>) -> Result<ExperimentConfig, HarnessError> {
        let mut r = Reader { raw: &raw, used: Vec::new(), errors: Vec::new() };
        let name = r.text("name").unwrap_or_else(|| "experiment".into());
        let family = match r.text("family") {
            None => {
                r.errors.push("`family` is required".into());
                Family::MultiParty
            }
            Some(f) => f.parse().unwrap_or_else(|e| {
                r.errors.push(e);
                Family::MultiParty
            }),
        };
        let seed: u64 = r.get("seed", 1);
        let with_a: bool = r.get("with_a", true);
        let default_source = if family.is_ablation() { "graph" } else { "synthetic" };
        let source_kind = r.text("data.source").unwrap_or_else(|| default_source.into());
        let source = match source_kind.as_str() {
            "synthetic" => {
                let scenario: Scenario = r.with("synth.scenario", Scenario::CorrelatedBoth, |s| s.parse().map_err(|e: crate::data::DataError| e.to_string()));
                let mut s = SyntheticConfig::new(scenario);
                if let Some(c) = r.text("synth.correlated") {
                    s.correlated_columns = c.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
                }
                s.correlation_strength = r.get("synth.strength", s.correlation_strength);
                s.reduced_mode = r.get("synth.reduced", s.reduced_mode);
                s.n_numeric = r.get("synth.numeric", s.n_numeric);
                s.n_categorical = r.get("synth.categorical", s.n_categorical);
                s.n_classes = r.get("synth.classes", s.n_classes);
                s.task_seed = r.get("synth.task_seed", s.task_seed);
                s.a_split = r.get("synth.a_split", s.a_split);
                DataSource::Synthetic(s)
            }
            "csv" => {
                let mut groups = BTreeMap::new();
                for (k, v) in raw.range("csv.group.".to_string()..) {
                    let Some(level) = k.strip_prefix("csv.group.") else { break };
                    r.used.push(k);
                    groups.insert(level.to_string(), v.clone());
                }
                let need = |key: &str, r: &mut Reader| {
                    r.text(key).unwrap_or_else(|| {
                        r.errors.push(format!("`{key}` is required for csv data"));
                        String::new()
                    })
                };
                let path = need("csv.path", &mut r);
                let columns = need("csv.columns", &mut r);
                let target = need("csv.target", &mut r);
                let sensitive = need("csv.sensitive", &mut r);
                let ranges = r.text("csv.ranges");
                DataSource::Csv(CsvSource { path, columns, target, sensitive, groups, ranges })
            }
            "graph" => {
                let mut g = GraphConfig::new(2500, 11);
                g.n_nodes = r.get("graph.nodes", g.n_nodes);
                g.n_classes = r.get("graph.classes", g.n_classes);
                g.n_types = r.get("graph.types", g.n_types);
                g.homophily = r.get("graph.homophily", g.homophily);
                g.label_signal = r.get("graph.label_signal", g.label_signal);
                g.avg_degree = r.get("graph.avg_degree", g.avg_degree);
                let ts = r.get("graph.type_split", g.type_split.ratio);
                g.type_split.ratio = ts;
                DataSource::Graph(g)
            }
            other => {
                r.errors.push(format!("unknown data.source `{other}`"));
                DataSource::Synthetic(SyntheticConfig::new(Scenario::CorrelatedBoth))
            }
        };
        let graph = matches!(source, DataSource::Graph(_));
        let (d_adv, d_honest, d_aux) = if graph { (200, 200, 800) } else { (2000, 2000, 10000) };
        let adv = r.get("split.adv", d_adv);
        let honest = r.get("split.honest", d_honest);
        let aux = r.get("split.aux", d_aux);
        let attack = r.get("split.attack", if graph { 800 } else { 1000 });
        let honest_pool = r.get("split.honest_pool", if family == Family::ModelUpdate { 4 * honest } else { 3 * honest });
        let splits = SplitSizes { adv, honest, aux, attack };

        let (d_attr, d_value, d_split) = match &source {
            DataSource::Graph(_) => (TYPE_ATTRIBUTE.to_string(), "t0".to_string(), "0:100"),
            DataSource::Csv(c) => (c.sensitive.clone(), String::new(), "33:67"),
            DataSource::Synthetic(_) => (SENSITIVE_COLUMN.to_string(), "<5".to_string(), "33:67"),
        };
        let attribute = r.text("property.attribute").unwrap_or(d_attr);
        let value = r.text("property.value").unwrap_or(d_value);
        let ratio = r.with("property.split", parse_split(d_split).unwrap(), parse_split);
        let bar_ratio = 1.0 - ratio;
        let property = PropertySpec::new(attribute.clone(), value.clone(), ratio).unwrap_or_else(|e| {
            r.errors.push(e.to_string());
            PropertySpec { attribute, value, ratio: 0.5 }
        });
        if (ratio - bar_ratio).abs() < 1e-12 && !family.uses_fine_grained_meta() {
            r.errors.push("property.split must not be 50:50".into());
        }

        let d_arch = if graph { Architecture::Gcn { hidden: 16 } } else { Architecture::LogisticRegression };
        let arch = r.with("target.arch", d_arch, |s| s.parse::<Architecture>().map_err(|e| e.to_string()));
        let base_hp = if graph { Hyperparameters::gcn() } else { Hyperparameters::tabular() };
        let hp = Hyperparameters {
            learning_rate: r.get("target.lr", base_hp.learning_rate),
            weight_decay: r.get("target.weight_decay", base_hp.weight_decay),
            epochs: r.get("target.epochs", base_hp.epochs),
            batch_size: r.get("target.batch_size", base_hp.batch_size),
            seed: 0,
        };
        if let Err(e) = hp.validate() {
            r.errors.push(e.to_string());
        }
        let recipe = TrainRecipe { arch: arch.clone(), hp };

        let fine = family.uses_fine_grained_meta();
        let d_reps = match family {
            Family::FineGrained => 500,
            Family::ModelUpdate => 400,
            _ => 100,
        };
        let repetitions = r.get("repetitions", d_reps);
        let n_shadow = r.get("attack.n_shadow", if fine { 500 } else { 100 });
        let shadow_size = r.get("attack.shadow_size", honest);
        let d_meta = match (family, &arch) {
            (Family::FineGrained | Family::ModelUpdate, _) => MetaKind::FineGrainedLr,
            (Family::WhiteBox, _) => MetaKind::TwoLayer200x50,
            (_, Architecture::Mlp { .. }) => MetaKind::TwoLayer20x8,
            _ => MetaKind::BinaryLr,
        };
        let meta = r.with("attack.meta", d_meta, |s| s.parse::<MetaKind>().map_err(|e| e.to_string()));
        let queries = r.get("attack.queries", attack);

        let unknown: Vec<String> = raw.keys().filter(|k| !r.used.contains(&k.as_str())).map(|k| format!("unknown key `{k}`")).collect();
        let mut errors = r.errors;
        errors.extend(unknown);

        let cfg = ExperimentConfig {
            name,
            family,
            seed,
            repetitions,
            with_a,
            source,
            splits,
            honest_pool,
            property,
            bar_ratio,
            recipe,
            n_shadow,
            shadow_size,
            meta,
            queries,
            raw: BTreeMap::new(),
        };
        errors.extend(cfg.semantic_errors());
        if !errors.is_empty() {
            return Err(HarnessError::Config(errors));
        }
        Ok(ExperimentConfig { raw, ..cfg })
    }

    fn semantic_errors(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.repetitions == 0 {
            e.push("repetitions must be at least 1".into());
        }
        let graph = matches!(self.source, DataSource::Graph(_));
        match (&self.source, &self.recipe.arch) {
            (DataSource::Graph(_), Architecture::Gcn { .. }) => {}
            (DataSource::Graph(_), _) => e.push("graph data needs a gcn target".into()),
            (_, Architecture::Gcn { .. }) => e.push("a gcn target needs graph data".into()),
            _ => {}
        }
        if self.family.is_ablation() && !graph {
            e.push(format!("family {} runs on graph data", self.family));
        }
        if self.family == Family::WhiteBox && graph {
            e.push("white-box attacks run on tabular data".into());
        }
        match &self.source {
            DataSource::Synthetic(s) => {
                if let Err(err) = s.validate() {
                    e.push(err.to_string());
                }
            }
            DataSource::Graph(g) => {
                if let Err(err) = g.validate() {
                    e.push(err.to_string());
                }
            }
            DataSource::Csv(c) => match c.schema() {
                Err(err) => e.push(err),
                Ok(schema) => {
                    if let Err(err) = c.grouping() {
                        e.push(err);
                    }
                    match schema.column(&self.property.attribute) {
                        None => e.push(format!("property attribute `{}` is not a column", self.property.attribute)),
                        Some(col) => {
                            if let Err(err) = crate::data::ValuePredicate::parse(&self.property.value, &col.kind) {
                                e.push(err.to_string());
                            }
                            if matches!(col.kind, ColumnKind::Numeric) && self.property.value.is_empty() {
                                e.push("property.value is required".into());
                            }
                        }
                    }
                }
            },
        }
        if self.splits.honest == 0 || self.splits.attack == 0 || self.splits.aux == 0 {
            e.push("split.honest, split.aux and split.attack must be positive".into());
        }
        if self.family.includes_adversary() && self.splits.adv == 0 {
            e.push("split.adv must be positive for multi-party families".into());
        }
        if self.honest_pool < self.splits.honest {
            e.push("split.honest_pool must be at least split.honest".into());
        }
        if self.family == Family::ModelUpdate && self.honest_pool < 2 * self.splits.honest {
            e.push("model-update needs split.honest_pool >= 2 * split.honest".into());
        }
        if self.queries == 0 || self.queries > self.splits.attack {
            e.push(format!("attack.queries {} must be in 1..={}", self.queries, self.splits.attack));
        }
        let labels = if self.family.uses_fine_grained_meta() { 5 } else { 2 };
        if self.n_shadow == 0 || self.n_shadow % labels != 0 {
            e.push(format!("attack.n_shadow {} must be a positive multiple of {labels}", self.n_shadow));
        }
        if self.shadow_size == 0 {
            e.push("attack.shadow_size must be positive".into());
        }
        match (self.family.uses_fine_grained_meta(), self.meta) {
            (true, MetaKind::FineGrainedLr) => {}
            (true, _) => e.push(format!("family {} needs the fine-grained-lr meta-classifier", self.family)),
            (false, MetaKind::FineGrainedLr) => e.push("fine-grained-lr needs family fine-grained or model-update".into()),
            _ => {}
        }
        e
    }

    /// The user-supplied keys, before defaults.
    pub fn raw(&self) -> &BTreeMap<String, String> {
        &self.raw
    }

    /// A copy with `key` overridden (re-validated).
    pub fn with_override(&self, key: &str, value: &str) -> Result<ExperimentConfig, HarnessError> {
        let mut raw = self.raw.clone();
        raw.insert(key.to_string(), value.to_string());
        ExperimentConfig::from_map(raw)
    }

    /// Every resolved setting, defaults included, as sorted key/value pairs.
    pub fn to_kv(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("name", self.name.clone());
        put("family", self.family.to_string());
        put("seed", self.seed.to_string());
        put("repetitions", self.repetitions.to_string());
        put("with_a", self.with_a.to_string());
        put("data.source", self.source.kind().into());
        match &self.source {
            DataSource::Synthetic(s) => {
                put("synth.scenario", s.scenario.to_string());
                put("synth.correlated", s.correlated_columns.join(","));
                put("synth.strength", format!("{:?}", s.correlation_strength));
                put("synth.reduced", s.reduced_mode.to_string());
                put("synth.numeric", s.n_numeric.to_string());
                put("synth.categorical", s.n_categorical.to_string());
                put("synth.classes", s.n_classes.to_string());
                put("synth.task_seed", s.task_seed.to_string());
                put("synth.a_split", format!("{:?}", s.a_split));
            }
            DataSource::Csv(c) => {
                put("csv.path", c.path.clone());
                put("csv.columns", c.columns.clone());
                put("csv.target", c.target.clone());
                put("csv.sensitive", c.sensitive.clone());
                for (level, raws) in &c.groups {
                    put(&format!("csv.group.{level}"), raws.clone());
                }
                if let Some(r) = &c.ranges {
                    put("csv.ranges", r.clone());
                }
            }
            DataSource::Graph(g) => {
                put("graph.nodes", g.n_nodes.to_string());
                put("graph.classes", g.n_classes.to_string());
                put("graph.types", g.n_types.to_string());
                put("graph.homophily", format!("{:?}", g.homophily));
                put("graph.label_signal", format!("{:?}", g.label_signal));
                put("graph.avg_degree", format!("{:?}", g.avg_degree));
                put("graph.type_split", format!("{:?}", g.type_split.ratio));
            }
        }
        put("split.adv", self.splits.adv.to_string());
        put("split.honest", self.splits.honest.to_string());
        put("split.aux", self.splits.aux.to_string());
        put("split.attack", self.splits.attack.to_string());
        put("split.honest_pool", self.honest_pool.to_string());
        put("property.attribute", self.property.attribute.clone());
        put("property.value", self.property.value.clone());
        put("property.split", format_split(self.property.ratio));
        put("target.arch", self.recipe.arch.to_string());
        put("target.lr", format!("{:?}", self.recipe.hp.learning_rate));
        put("target.weight_decay", format!("{:?}", self.recipe.hp.weight_decay));
        put("target.epochs", self.recipe.hp.epochs.to_string());
        put("target.batch_size", self.recipe.hp.batch_size.to_string());
        put("attack.n_shadow", self.n_shadow.to_string());
        put("attack.shadow_size", self.shadow_size.to_string());
        put("attack.meta", self.meta.to_string());
        put("attack.queries", self.queries.to_string());
        m
    }

    /// Canonical text form; parsing it yields an equal configuration.
    pub fn to_text(&self) -> String {
        self.to_kv().iter().map(|(k, v)| format!("{k} = \"{v}\"\n")).collect()
    }

    /// Short SHA-256 digest of the canonical resolved settings.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.to_kv() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(&h.finalize()[..8])
    }

    /// Short label for the data setting, e.g. the scenario.
    pub fn setting(&self) -> String {
        match &self.source {
            DataSource::Synthetic(s) => format!("{}{}", s.scenario, if s.reduced_mode { " (R)" } else { "" }),
            DataSource::Csv(c) => format!("csv {}", c.path),
            DataSource::Graph(g) => format!("graph l={}", g.n_classes),
        }
    }
}

/// Maps sweep axis shorthands to config keys.
pub fn axis_key(cfg: &ExperimentConfig, axis: &str) -> Result<String, HarnessError> {
    let key = match axis {
        "k" | "queries" => "attack.queries".to_string(),
        "split" => "property.split".to_string(),
        "classes" => match cfg.source {
            DataSource::Graph(_) => "graph.classes".to_string(),
            DataSource::Synthetic(_) => "synth.classes".to_string(),
            DataSource::Csv(_) => return Err(HarnessError::UnknownAxis(axis.into())),
        },
        "with_a" => "with_a".to_string(),
        other => other.to_string(),
    };
    if !cfg.to_kv().contains_key(&key) || key == "name" || key == "family" || key == "data.source" {
        return Err(HarnessError::UnknownAxis(axis.into()));
    }
    Ok(key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = ExperimentConfig::parse("family = multi-party\nsynth.scenario = \"X!A,Y~A\"  # label only\n").unwrap();
        assert_eq!(cfg.n_shadow, 100);
        assert_eq!(cfg.queries, 1000);
        assert_eq!(cfg.shadow_size, 2000);
        assert_eq!(cfg.meta, MetaKind::BinaryLr);
        assert_eq!(cfg.property.ratio, 0.33);
        assert!((cfg.bar_ratio - 0.67).abs() < 1e-12);
        let fine = ExperimentConfig::parse("family = fine-grained").unwrap();
        assert_eq!((fine.n_shadow, fine.repetitions, fine.meta), (500, 500, MetaKind::FineGrainedLr));
        let graph = ExperimentConfig::parse("family = ablation-queries").unwrap();
        assert_eq!(graph.recipe.arch, Architecture::Gcn { hidden: 16 });
        assert_eq!(graph.property.ratio, 0.0);
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = ExperimentConfig::parse("family = white-box\ntarget.arch = mlp(12)\nseed = 9\n").unwrap();
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again.to_kv(), cfg.to_kv());
        assert_eq!(again.digest(), cfg.digest());
        let other = cfg.with_override("seed", "10").unwrap();
        assert_ne!(other.digest(), cfg.digest());
    }

    #[test]
    fn all_errors_reported() {
        let err = ExperimentConfig::parse("family = nope\nattack.n_shadow = 7\nbogus = 1\nrepetitions = x\n").unwrap_err();
        let HarnessError::Config(list) = err else { panic!() };
        assert!(list.len() >= 4, "{list:?}");
        assert!(ExperimentConfig::parse("family = ablation-split\ntarget.arch = lr").is_err());
        assert!(ExperimentConfig::parse("family = multi-party\nattack.queries = 2000").is_err());
        assert!(parse_kv("just words").is_err());
        assert!(parse_kv("a = 1\na = 2").is_err());
    }

    #[test]
    fn splits() {
        assert_eq!(parse_split("33:67").unwrap(), 0.33);
        assert_eq!(parse_split("0:100").unwrap(), 0.0);
        assert_eq!(format_split(0.3), "30:70");
        assert!(parse_split("abc").is_err());
    }

    #[test]
    fn axes() {
        let cfg = ExperimentConfig::parse("family = ablation-classes").unwrap();
        assert_eq!(axis_key(&cfg, "k").unwrap(), "attack.queries");
        assert_eq!(axis_key(&cfg, "classes").unwrap(), "graph.classes");
        assert!(axis_key(&cfg, "colour").is_err());
    }
}
