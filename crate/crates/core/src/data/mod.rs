//! Datasets, resampling and synthetic generators.

mod csv_io;
mod dataset;
mod encode;
mod graph;
mod interchange;
mod resample;
mod schema;
mod synth;

pub use csv_io::{load_csv, CsvLoad, LabelGrouping};
pub use dataset::{drop_attribute, make_splits, PartySplits, SplitSizes, TabularDataset};
pub use encode::{one_hot_encode, ColumnMap, DecodedValue, EncodedColumn, Encoder};
pub use graph::{synth_graph_generate, GraphConfig, GraphDataset, GraphPartition, TYPE_ATTRIBUTE};
pub use interchange::{read_dataset, write_dataset};
pub use resample::{resample_with_ratio, stratified_count, PropertySpec, ValuePredicate};
pub use schema::{AttributeSchema, Column, ColumnKind};
pub use synth::{synth_generate, Scenario, SyntheticConfig, SENSITIVE_COLUMN, TARGET_COLUMN};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("line {line}: {msg}")]
    MalformedRow { line: usize, msg: String },
    #[error("line {line}: value `{value}` is not in the domain of column `{column}`")]
    UnknownCategory { line: usize, column: String, value: String },
    #[error("no records left after ingestion")]
    Empty,
    #[error("stratum `{0}` is empty in the pool")]
    EmptyStratum(String),
    #[error("pool has {available} records but {required} were requested")]
    InsufficientPool { available: usize, required: usize },
    #[error("invalid property: {0}")]
    Property(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
