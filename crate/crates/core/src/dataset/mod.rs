//! Media records, KPI bucketing, train/test splits and instruction corpora.

mod bucket;
mod corpus;
mod noise;
mod record;
mod split;
mod templates;

pub use bucket::{bucket, bucket_mean, two_way_cuts, BucketAssignment, BucketScheme, KpiBucketLabel};
pub use corpus::{
    build_corpus, build_instruction, estimate_tokens, CorpusConfig, CorpusOutcome, Exclusion,
    InstructionOptions, InstructionPair, PatternMix, DEFAULT_TOKEN_BUDGET,
};
pub use noise::{inject_noise, NoiseInjector, NoiseModel, DEFAULT_NOISE_FRACTION};
pub use record::{
    read_records_csv, read_records_jsonl, write_records_jsonl, ColumnMapping, Kpis, MediaRecord,
};
pub use split::{split, Split};
pub use templates::{render_input, render_listing, render_output, Pattern, PromptFields, Schema};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("no records")]
    Empty,
    #[error("record `{id}` has no `{kpi}` count")]
    MissingKpi { id: String, kpi: String },
    #[error("invalid bucket scheme: {0}")]
    InvalidScheme(String),
    #[error("{label} bucket holds {size} records, {needed} needed for the test split")]
    BucketTooSmall {
        label: KpiBucketLabel,
        size: usize,
        needed: usize,
    },
    #[error("noise fraction {0} outside [0, 1)")]
    InvalidNoise(f64),
    #[error("pattern mix {0:?} must be non-negative and sum to 1")]
    InvalidMix([f64; 4]),
    #[error("record `{id}`: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("record `{0}` has no verbalization")]
    MissingVerbalization(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
