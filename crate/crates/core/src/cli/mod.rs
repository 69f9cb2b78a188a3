//! Command-line entry point.
//!
//! Every command reads its inputs, computes its outputs in memory and only
//! then writes them, atomically, into `--out-dir` together with a
//! `manifest.json`. A failing command therefore leaves no partial outputs.
//!
//! Exit codes: 0 success, 1 validation or domain failure, 2 usage error,
//! 3 backend or I/O failure.

mod output;
mod plot;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ffi::OsString;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;
use serde_json::value::RawValue;

pub use output::{sha256_hex, OutDir, RunManifest, MANIFEST_FILE};
pub use plot::reward_curve_svg;

use crate::dataset::{
    bucket, build_corpus, read_records_csv, read_records_jsonl, split, BucketScheme,
    ColumnMapping, CorpusConfig, DatasetError, InstructionOptions, Kpis, KpiBucketLabel,
    MediaRecord, NoiseModel, Pattern, PatternMix, PromptFields, Schema, DEFAULT_NOISE_FRACTION,
    DEFAULT_TOKEN_BUDGET,
};
use crate::ddpo::{self, write_curve_csv, DdpoError, RunConfig};
use crate::metrics::{evaluate_corpus, EvalPair, MetricsError, RgbTable, WordVectors};
use crate::reward::{
    reward_batch, top_k, HttpBackend, LogitBackend, MockBackend, RetryPolicy, RewardError,
    RewardOptions, RewardRequest, Scope, ScoreTransform, BACKEND_URL_ENV,
};
use crate::verbalization::{
    parse_verbalization, read_corpus, ColorName, ValidationMode, VerbalizationError,
    VerbalizationRecord,
};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(_) | DatasetError::Csv(_) => Failure::Io(e.to_string()),
            other => Failure::Domain(other.to_string()),
        }
    }
}

impl From<RewardError> for Failure {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::Backend { .. } => Failure::Io(e.to_string()),
            other => Failure::Domain(other.to_string()),
        }
    }
}

impl From<DdpoError> for Failure {
    fn from(e: DdpoError) -> Self {
        match e {
            DdpoError::Reward(r) => r.into(),
            other => Failure::Domain(other.to_string()),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Io(_) => Failure::Io(e.to_string()),
            other => Failure::Domain(other.to_string()),
        }
    }
}

impl From<VerbalizationError> for Failure {
    fn from(e: VerbalizationError) -> Self {
        Failure::Domain(e.to_string())
    }
}

fn csv_failure(e: csv::Error) -> Failure {
    Failure::Io(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "verbalign", version, about = "Image verbalizations, KPI datasets, LLM rewards and toy policy alignment")]
pub struct Cli {
    /// Seed for every random draw the command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving all outputs and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a verbalization corpus and report errors and repairs per line.
    Validate(ValidateArgs),
    /// Compare predicted verbalizations with ground truth, matched by id.
    Score(ScoreArgs),
    /// Assign KPI buckets to media records.
    Bucket(BucketArgs),
    /// Sample a per-bucket test split.
    Split(SplitArgs),
    /// Render behavior-finetuning instruction pairs.
    BuildInstructions(BuildArgs),
    /// Score candidate verbalizations with a language-model backend.
    Reward(RewardArgs),
    /// Train the toy denoising policy.
    DdpoTrain(TrainArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Newline-delimited verbalization records.
    pub corpus: PathBuf,
    #[arg(long, default_value = "strict")]
    pub mode: ValidationMode,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub ground_truth: PathBuf,
    pub predicted: PathBuf,
    #[arg(long, default_value = "strict")]
    pub mode: ValidationMode,
    /// Word vectors, one `word v1 .. vd` per line. Without them the
    /// similarity-based metrics are undefined.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// `Color r g b` lines overriding the default color table.
    #[arg(long)]
    pub rgb: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    /// Media records: JSON lines, or a delimited table with `--columns`.
    pub records: PathBuf,
    /// TOML column mapping for a delimited table.
    #[arg(long)]
    pub columns: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SchemeKind {
    /// Top/bottom percentiles within each account.
    Twitter,
    /// Global tertiles.
    Stock,
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    #[arg(long, value_enum, default_value = "twitter")]
    pub scheme: SchemeKind,
    #[arg(long, default_value_t = 90.0)]
    pub high_percentile: f64,
    #[arg(long, default_value_t = 60.0)]
    pub low_percentile: f64,
}

impl SchemeArgs {
    fn scheme(&self) -> BucketScheme {
        match self.scheme {
            SchemeKind::Twitter => BucketScheme::TwitterTwoWay {
                high_percentile: self.high_percentile,
                low_percentile: self.low_percentile,
            },
            SchemeKind::Stock => BucketScheme::StockThreeWay,
        }
    }
}

#[derive(Debug, Args)]
pub struct BucketArgs {
    #[command(flatten)]
    pub input: RecordArgs,
    /// KPI to bucket on.
    #[arg(long)]
    pub kpi: String,
    #[command(flatten)]
    pub scheme: SchemeArgs,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub bucketing: BucketArgs,
    #[arg(long)]
    pub test_per_bucket: usize,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub input: RecordArgs,
    #[arg(long, default_value = "stock")]
    pub schema: Schema,
    /// Only this pattern (P1..P4).
    #[arg(long, conflicts_with = "mix")]
    pub pattern: Option<Pattern>,
    /// Pattern weights `w1,w2,w3,w4`, summing to 1.
    #[arg(long)]
    pub mix: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOKEN_BUDGET)]
    pub token_budget: usize,
    #[arg(long, default_value_t = DEFAULT_NOISE_FRACTION)]
    pub noise_fraction: f64,
    /// Attach the bucket of this KPI to every pair.
    #[arg(long)]
    pub kpi: Option<String>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MockKind {
    Fixed(f64),
    LengthKeyed,
}

impl std::str::FromStr for MockKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "length" {
            return Ok(MockKind::LengthKeyed);
        }
        match s.parse::<f64>() {
            Ok(p) if p > 0.0 && p <= 1.0 => Ok(MockKind::Fixed(p)),
            _ => Err(format!("expected `length` or a probability in (0, 1], got `{s}`")),
        }
    }
}

#[derive(Debug, Args)]
pub struct RewardArgs {
    /// JSON lines `{"id", "prompt", "target_kpis", "verbalization"[, "schema"]}`.
    pub candidates: PathBuf,
    #[arg(long, env = BACKEND_URL_ENV, conflicts_with = "mock")]
    pub backend_url: Option<String>,
    /// In-process backend: a fixed token probability, or `length`.
    #[arg(long)]
    pub mock: Option<MockKind>,
    #[arg(long, default_value = "sum_prob")]
    pub transform: ScoreTransform,
    #[arg(long, default_value = "completion_only")]
    pub scope: Scope,
    /// Keep the k best candidates of every prompt.
    #[arg(long)]
    pub best_of: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub in_flight: usize,
    #[arg(long, default_value_t = 3)]
    pub attempts: u32,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    #[arg(long, default_value = "strict")]
    pub mode: ValidationMode,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML run configuration. Defaults to the quadratic toy task.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use the color task rewarding this color instead of a config file.
    #[arg(long, conflicts_with = "config")]
    pub verbal: Option<ColorName>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub updates: Option<usize>,
    /// Also render the reward curve to `reward_curve.svg`.
    #[arg(long)]
    pub plot: bool,
    /// Live backend for the color task; the bundled mock otherwise.
    #[arg(long)]
    pub backend_url: Option<String>,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Ctx {
    out: OutDir,
    config: serde_json::Value,
    seed: u64,
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let mut ctx = Ctx {
        out: OutDir::new(&cli.out_dir),
        config: json!({}),
        seed: cli.seed.unwrap_or(0),
    };
    let (name, result) = match &cli.command {
        Command::Validate(a) => ("validate", cmd_validate(a, &mut ctx)),
        Command::Score(a) => ("score", cmd_score(a, &mut ctx)),
        Command::Bucket(a) => ("bucket", cmd_bucket(a, &mut ctx)),
        Command::Split(a) => ("split", cmd_split(a, &mut ctx)),
        Command::BuildInstructions(a) => ("build-instructions", cmd_build(a, &mut ctx)),
        Command::Reward(a) => ("reward", cmd_reward(a, &mut ctx)),
        Command::DdpoTrain(a) => ("ddpo-train", cmd_train(a, cli.seed, &mut ctx)),
    };
    let Ctx { out, config, seed } = ctx;
    let manifest = out.finish(name, config, seed, &result);
    result.and(manifest)
}

fn cmd_validate(args: &ValidateArgs, ctx: &mut Ctx) -> Result<(), Failure> {
    ctx.config = json!({ "corpus": args.corpus, "mode": args.mode });
    let text = ctx.out.read_input_text(&args.corpus)?;
    let lines = read_corpus(&text, args.mode);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["line", "id", "status", "detail"]).map_err(csv_failure)?;
    let (mut errors, mut repaired) = (0, 0);
    for line in &lines {
        let (status, detail) = match &line.result {
            Ok((_, repairs)) if repairs.is_empty() => ("ok", String::new()),
            Ok((_, repairs)) => {
                repaired += 1;
                let d: Vec<String> = repairs.iter().map(ToString::to_string).collect();
                ("repaired", d.join("; "))
            }
            Err(e) => {
                errors += 1;
                ("error", e.to_string())
            }
        };
        w.write_record([line.line.to_string(), line.id(), status.into(), detail])
            .map_err(csv_failure)?;
    }
    let report = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    ctx.out.write("validation.csv", &report)?;
    println!("{} records, {errors} with errors, {repaired} repaired", lines.len());
    if errors > 0 {
        return Err(Failure::Domain(format!("{errors} records failed validation")));
    }
    Ok(())
}

fn load_verbalizations(
    ctx: &mut Ctx,
    path: &Path,
    mode: ValidationMode,
) -> Result<Vec<(String, VerbalizationRecord)>, Failure> {
    let text = ctx.out.read_input_text(path)?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for line in read_corpus(&text, mode) {
        let id = line.id();
        let rec = line
            .result
            .map_err(|e| Failure::Domain(format!("{}:{}: {e}", path.display(), line.line)))?
            .0;
        if !seen.insert(id.clone()) {
            return Err(Failure::Domain(format!("{}: duplicate id `{id}`", path.display())));
        }
        out.push((id, rec));
    }
    Ok(out)
}

fn cmd_score(args: &ScoreArgs, ctx: &mut Ctx) -> Result<(), Failure> {
    ctx.config = json!({
        "ground_truth": args.ground_truth,
        "predicted": args.predicted,
        "mode": args.mode,
        "vectors": args.vectors,
        "rgb": args.rgb,
    });
    let gt = load_verbalizations(ctx, &args.ground_truth, args.mode)?;
    let pred = load_verbalizations(ctx, &args.predicted, args.mode)?;
    let provider = match &args.vectors {
        Some(p) => WordVectors::from_reader(BufReader::new(&ctx.out.read_input(p)?[..]))?,
        None => WordVectors::default(),
    };
    let table = match &args.rgb {
        Some(p) => RgbTable::default().with_overrides(BufReader::new(&ctx.out.read_input(p)?[..]))?,
        None => RgbTable::default(),
    };

    let gt_ids: BTreeSet<&String> = gt.iter().map(|(id, _)| id).collect();
    let mut pred_by_id: HashMap<&String, &VerbalizationRecord> =
        pred.iter().map(|(id, r)| (id, r)).collect();
    let pred_only: Vec<&String> = pred.iter().map(|(id, _)| id).filter(|id| !gt_ids.contains(id)).collect();
    let gt_only: Vec<&String> = gt.iter().map(|(id, _)| id).filter(|id| !pred_by_id.contains_key(id)).collect();
    if !gt_only.is_empty() || !pred_only.is_empty() {
        return Err(Failure::Domain(format!(
            "unmatched ids: ground truth only {gt_only:?}, predicted only {pred_only:?}"
        )));
    }

    let mut pairs = Vec::with_capacity(gt.len());
    for (id, g) in &gt {
        let p = pred_by_id.remove(id).expect("ids matched");
        let missing = |side: &str| Failure::Domain(format!("`{id}`: {side} record has no verbalization"));
        pairs.push(EvalPair {
            id: id.clone(),
            gt: g.verbalization.clone().ok_or_else(|| missing("ground-truth"))?,
            pred: p.verbalization.clone().ok_or_else(|| missing("predicted"))?,
            resolution: g
                .resolution
                .or(p.resolution)
                .ok_or_else(|| Failure::Domain(format!("`{id}`: no resolution on either side")))?,
        });
    }
    let report = evaluate_corpus(&pairs, &provider, &table)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(csv_failure)?;
    ctx.out.write("metrics.csv", &buf)?;
    println!("scored {} pairs", pairs.len());
    Ok(())
}

fn load_records(ctx: &mut Ctx, args: &RecordArgs) -> Result<Vec<MediaRecord>, Failure> {
    let bytes = ctx.out.read_input(&args.records)?;
    match &args.columns {
        Some(p) => {
            let mapping = ColumnMapping::from_toml(&ctx.out.read_input_text(p)?)?;
            Ok(read_records_csv(&bytes[..], &mapping)?)
        }
        None => Ok(read_records_jsonl(&bytes[..])?),
    }
}

fn bucket_config(args: &BucketArgs) -> serde_json::Value {
    json!({
        "records": args.input.records,
        "columns": args.input.columns,
        "kpi": args.kpi,
        "scheme": args.scheme.scheme(),
    })
}

fn cmd_bucket(args: &BucketArgs, ctx: &mut Ctx) -> Result<(), Failure> {
    ctx.config = bucket_config(args);
    let records = load_records(ctx, &args.input)?;
    let assignment = bucket(&records, args.scheme.scheme(), &args.kpi)?;
    let mut buf = Vec::new();
    assignment.write_csv(&records, &args.kpi, &mut buf).map_err(csv_failure)?;
    ctx.out.write("buckets.csv", &buf)?;
    println!(
        "high {}, medium {}, low {}, unlabeled {}",
        assignment.count(KpiBucketLabel::High),
        assignment.count(KpiBucketLabel::Medium),
        assignment.count(KpiBucketLabel::Low),
        assignment.unlabeled.len()
    );
    if !assignment.small_accounts.is_empty() {
        log::warn!("accounts too small to bucket: {:?}", assignment.small_accounts);
    }
    Ok(())
}

fn cmd_split(args: &SplitArgs, ctx: &mut Ctx) -> Result<(), Failure> {
    let mut config = bucket_config(&args.bucketing);
    config["test_per_bucket"] = json!(args.test_per_bucket);
    ctx.config = config;
    let records = load_records(ctx, &args.bucketing.input)?;
    let assignment = bucket(&records, args.bucketing.scheme.scheme(), &args.bucketing.kpi)?;
    let s = split(&assignment, args.test_per_bucket, ctx.seed)?;
    let text = serde_json::to_string_pretty(&json!({ "train": s.train, "test": s.test }))
        .expect("split serializes");
    ctx.out.write("split.json", text.as_bytes())?;
    println!("train {}, test {}", s.train.len(), s.test.len());
    Ok(())
}

fn parse_mix(text: &str) -> Result<PatternMix, Failure> {
    let weights: Vec<f64> = text
        .split(',')
        .map(|w| w.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("--mix: {e}")))?;
    let weights: [f64; 4] = weights
        .try_into()
        .map_err(|_| Failure::Usage("--mix needs four weights".into()))?;
    let mix = PatternMix(weights);
    mix.validate()?;
    Ok(mix)
}

fn cmd_build(args: &BuildArgs, ctx: &mut Ctx) -> Result<(), Failure> {
    let mix = match (&args.pattern, &args.mix) {
        (Some(p), _) => PatternMix::only(*p),
        (None, Some(m)) => parse_mix(m)?,
        (None, None) => PatternMix::uniform(),
    };
    let config = CorpusConfig {
        mix,
        seed: ctx.seed,
        token_budget: args.token_budget,
        options: InstructionOptions {
            schema: args.schema,
            noise_model: NoiseModel::Multiplicative,
            noise_fraction: args.noise_fraction,
        },
    };
    ctx.config = json!({
        "records": args.input.records,
        "columns": args.input.columns,
        "mix": mix.0,
        "token_budget": args.token_budget,
        "options": config.options,
        "bucket_kpi": args.kpi,
        "scheme": args.kpi.as_ref().map(|_| args.scheme.scheme()),
    });
    let records = load_records(ctx, &args.input)?;
    let assignment = match &args.kpi {
        Some(kpi) => Some(bucket(&records, args.scheme.scheme(), kpi)?),
        None => None,
    };
    let outcome = build_corpus(&records, &config, |id| assignment.as_ref().and_then(|a| a.label(id)))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["source_id", "pattern", "reason"]).map_err(csv_failure)?;
    for e in &outcome.excluded {
        w.write_record([e.source_id.clone(), e.pattern.to_string(), e.reason.clone()])
            .map_err(csv_failure)?;
    }
    let excluded = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    ctx.out.write("instructions.jsonl", outcome.to_jsonl().as_bytes())?;
    ctx.out.write("excluded.csv", &excluded)?;
    println!(
        "{} pairs (P1 {}, P2 {}, P3 {}, P4 {}), {} excluded",
        outcome.pairs.len(),
        outcome.count(Pattern::P1),
        outcome.count(Pattern::P2),
        outcome.count(Pattern::P3),
        outcome.count(Pattern::P4),
        outcome.excluded.len()
    );
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Candidate {
    id: String,
    prompt: PromptFields,
    target_kpis: Kpis,
    #[serde(default)]
    schema: Schema,
    /// A verbalization object in the record format.
    verbalization: Box<RawValue>,
}

fn cmd_reward(args: &RewardArgs, ctx: &mut Ctx) -> Result<(), Failure> {
    let transform = args.transform;
    transform.validate()?;
    if args.in_flight == 0 || args.attempts == 0 {
        return Err(Failure::Usage("--in-flight and --attempts must be positive".into()));
    }
    ctx.config = json!({
        "candidates": args.candidates,
        "backend_url": args.backend_url,
        "mock": args.mock.map(|m| match m {
            MockKind::Fixed(p) => p.to_string(),
            MockKind::LengthKeyed => "length".into(),
        }),
        "transform": transform.to_string(),
        "scope": args.scope,
        "best_of": args.best_of,
        "in_flight": args.in_flight,
        "attempts": args.attempts,
        "mode": args.mode,
    });

    let text = ctx.out.read_input_text(&args.candidates)?;
    let mut ids = Vec::new();
    let mut reqs = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let at = |m: String| Failure::Domain(format!("{}:{}: {m}", args.candidates.display(), i + 1));
        let c: Candidate = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let parsed = parse_verbalization(c.verbalization.get(), args.mode).map_err(|e| at(e.to_string()))?;
        ids.push(c.id);
        reqs.push(RewardRequest {
            prompt: c.prompt,
            target_kpis: c.target_kpis,
            verbalization: parsed.verbalization,
            schema: c.schema,
        });
    }
    if reqs.is_empty() {
        return Err(Failure::Domain("no candidates".into()));
    }

    let mock;
    let http;
    let backend: &dyn LogitBackend = match (&args.backend_url, args.mock) {
        (_, Some(MockKind::Fixed(p))) => {
            mock = MockBackend::fixed(p);
            &mock
        }
        (_, Some(MockKind::LengthKeyed)) => {
            mock = MockBackend::length_keyed();
            &mock
        }
        (Some(url), None) => {
            http = HttpBackend::new(url.clone(), Duration::from_secs(args.timeout_secs));
            &http
        }
        (None, None) => {
            return Err(Failure::Usage(format!(
                "no backend: pass --backend-url, set {BACKEND_URL_ENV}, or use --mock"
            )))
        }
    };
    let options = RewardOptions {
        transform,
        scope: args.scope,
        retry: RetryPolicy {
            attempts: args.attempts,
            ..RetryPolicy::default()
        },
        in_flight: args.in_flight,
    };
    let rewards = reward_batch(&reqs, backend, &options)?;

    // groups keyed by prompt, in order of first appearance
    let mut group_of: HashMap<&PromptFields, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, r) in reqs.iter().enumerate() {
        let g = *group_of.entry(&r.prompt).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    let group_index: BTreeMap<usize, usize> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, members)| members.iter().map(move |&i| (i, g)))
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "group", "reward"]).map_err(csv_failure)?;
    for (i, r) in rewards.iter().enumerate() {
        w.write_record([ids[i].clone(), group_index[&i].to_string(), format!("{r:?}")])
            .map_err(csv_failure)?;
    }
    let all = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;

    let best = match args.best_of {
        Some(k) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["group", "rank", "id", "reward"]).map_err(csv_failure)?;
            for (g, members) in groups.iter().enumerate() {
                let group_rewards: Vec<f64> = members.iter().map(|&i| rewards[i]).collect();
                for (rank, picked) in top_k(&group_rewards, k)?.iter().enumerate() {
                    let i = members[picked.index];
                    w.write_record([
                        g.to_string(),
                        (rank + 1).to_string(),
                        ids[i].clone(),
                        format!("{:?}", picked.reward),
                    ])
                    .map_err(csv_failure)?;
                }
            }
            Some(w.into_inner().map_err(|e| Failure::Io(e.to_string()))?)
        }
        None => None,
    };
    ctx.out.write("rewards.csv", &all)?;
    if let Some(best) = best {
        ctx.out.write("best_of.csv", &best)?;
    }
    println!("scored {} candidates in {} groups", rewards.len(), groups.len());
    Ok(())
}

fn cmd_train(args: &TrainArgs, seed: Option<u64>, ctx: &mut Ctx) -> Result<(), Failure> {
    let mut cfg = match (&args.config, args.verbal) {
        (Some(path), _) => RunConfig::from_toml(&ctx.out.read_input_text(path)?)?,
        (None, Some(color)) => RunConfig::verbal(color),
        (None, None) => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.trainer.seed = s;
    }
    if let Some(lr) = args.lr {
        cfg.trainer.learning_rate = lr;
    }
    if let Some(n) = args.updates {
        cfg.trainer.max_updates = n;
    }
    ctx.seed = cfg.trainer.seed;
    ctx.config = serde_json::to_value(&cfg).expect("config serializes");
    ctx.config["backend_url"] = json!(args.backend_url);
    cfg.validate()?;

    let http = args
        .backend_url
        .as_ref()
        .map(|url| HttpBackend::new(url.clone(), Duration::from_secs(args.timeout_secs)));
    let outcome = ddpo::run(&cfg, http.as_ref().map(|b| b as &dyn LogitBackend))?;

    let mut curve = Vec::new();
    write_curve_csv(&outcome.curve, &mut curve).map_err(csv_failure)?;
    let svg = if args.plot {
        Some(reward_curve_svg(&outcome.curve).map_err(Failure::Io)?)
    } else {
        None
    };
    ctx.out.write("curve.csv", &curve)?;
    ctx.out.write("policy.ckpt", outcome.policy.to_checkpoint().as_bytes())?;
    ctx.out.write("config.toml", cfg.to_toml().as_bytes())?;
    if let Some(svg) = svg {
        ctx.out.write("reward_curve.svg", svg.as_bytes())?;
    }
    let rewards = outcome.mean_rewards();
    println!(
        "{} updates, mean reward {:.4} -> {:.4}, {} equal-reward batches",
        rewards.len(),
        rewards.first().copied().unwrap_or(f64::NAN),
        rewards.last().copied().unwrap_or(f64::NAN),
        outcome.zero_variance_updates
    );
    Ok(())
}
