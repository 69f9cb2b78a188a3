use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::templates::{render_input, render_output, Pattern, PromptFields, Schema};
use super::{DatasetError, KpiBucketLabel, MediaRecord, NoiseInjector, NoiseModel, DEFAULT_NOISE_FRACTION};

/// Default rendered-input budget, in estimated tokens.
pub const DEFAULT_TOKEN_BUDGET: usize = 2048;

/// One behavior-finetuning example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionPair {
    pub pattern: Pattern,
    pub input: String,
    pub output: String,
    pub source_id: String,
    /// Seed of the KPI noise shown in the input.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket: Option<KpiBucketLabel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstructionOptions {
    pub schema: Schema,
    pub noise_model: NoiseModel,
    pub noise_fraction: f64,
}

impl Default for InstructionOptions {
    fn default() -> Self {
        Self {
            schema: Schema::Stock,
            noise_model: NoiseModel::Multiplicative,
            noise_fraction: DEFAULT_NOISE_FRACTION,
        }
    }
}

/// Renders `record` as an instruction pair of `pattern`. The KPIs shown in
/// P2/P3 inputs are drawn from a noise stream seeded with `seed`.
pub fn build_instruction(
    record: &MediaRecord,
    pattern: Pattern,
    bucket: Option<KpiBucketLabel>,
    seed: u64,
    options: &InstructionOptions,
) -> Result<InstructionPair, DatasetError> {
    if pattern.needs_verbalization() && record.verbalization.is_none() {
        return Err(DatasetError::MissingVerbalization(record.id.clone()));
    }
    let shown = if pattern.shows_noisy_kpis() {
        NoiseInjector::new(options.noise_model, options.noise_fraction, seed)?.apply(&record.kpis)
    } else {
        record.kpis.clone()
    };
    let with_id = |e: DatasetError| match e {
        DatasetError::MissingKpi { kpi, .. } => DatasetError::MissingKpi {
            id: record.id.clone(),
            kpi,
        },
        other => other,
    };
    let fields = PromptFields::of(record);
    let input = render_input(options.schema, pattern, &fields, &shown).map_err(with_id)?;
    let output = render_output(
        options.schema,
        pattern,
        record.verbalization.as_ref(),
        &record.kpis,
    )
    .map_err(with_id)?;
    Ok(InstructionPair {
        pattern,
        input,
        output,
        source_id: record.id.clone(),
        seed,
        bucket,
    })
}

/// Estimated token count: whitespace tokens times 1.3, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    (text.split_whitespace().count() as f64 * 1.3).ceil() as usize
}

/// Share of the corpus given to each pattern, in P1..P4 order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternMix(pub [f64; 4]);

impl PatternMix {
    pub fn only(pattern: Pattern) -> Self {
        let mut w = [0.0; 4];
        w[pattern as usize] = 1.0;
        Self(w)
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let sum: f64 = self.0.iter().sum();
        if self.0.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidMix(self.0));
        }
        Ok(())
    }

    /// Per-pattern counts for `n` items by largest remainder.
    pub fn quotas(&self, n: usize) -> [usize; 4] {
        let exact: Vec<f64> = self.0.iter().map(|w| w * n as f64).collect();
        let mut counts = [0usize; 4];
        for (c, e) in counts.iter_mut().zip(&exact) {
            *c = e.floor() as usize;
        }
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let mut left = n - counts.iter().sum::<usize>();
        for i in order {
            if left == 0 {
                break;
            }
            if self.0[i] > 0.0 {
                counts[i] += 1;
                left -= 1;
            }
        }
        counts
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Exclusion {
    pub source_id: String,
    pub pattern: Pattern,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct CorpusOutcome {
    /// Sorted by (source id, pattern).
    pub pairs: Vec<InstructionPair>,
    pub excluded: Vec<Exclusion>,
}

impl CorpusOutcome {
    pub fn count(&self, pattern: Pattern) -> usize {
        self.pairs.iter().filter(|p| p.pattern == pattern).count()
    }

    /// Newline-delimited JSON, one pair per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&serde_json::to_string(p).expect("pairs serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CorpusConfig {
    pub mix: PatternMix,
    pub seed: u64,
    pub token_budget: usize,
    pub options: InstructionOptions,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            mix: PatternMix::uniform(),
            seed: 0,
            token_budget: DEFAULT_TOKEN_BUDGET,
            options: InstructionOptions::default(),
        }
    }
}

/// Builds one instruction pair per record.
///
/// Patterns are allotted by exact quota (largest remainder) over a seeded
/// shuffle of the id-sorted records, so counts follow the mix exactly.
/// Records whose pair cannot be rendered, or whose input exceeds the token
/// budget, are excluded and reported.
pub fn build_corpus(
    records: &[MediaRecord],
    config: &CorpusConfig,
    bucket_of: impl Fn(&str) -> Option<KpiBucketLabel> + Sync,
) -> Result<CorpusOutcome, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    config.mix.validate()?;

    let mut sorted: Vec<&MediaRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..sorted.len()).collect();
    order.shuffle(&mut rng);
    let mut patterns = vec![Pattern::P1; sorted.len()];
    let quotas = config.mix.quotas(sorted.len());
    let mut next = order.into_iter();
    for (pattern, quota) in Pattern::ALL.into_iter().zip(quotas) {
        for idx in next.by_ref().take(quota) {
            patterns[idx] = pattern;
        }
    }
    let noise_seeds: Vec<u64> = (0..sorted.len()).map(|_| rng.random()).collect();

    let results: Vec<Result<InstructionPair, Exclusion>> = sorted
        .par_iter()
        .zip(patterns.par_iter())
        .zip(noise_seeds.par_iter())
        .map(|((record, &pattern), &seed)| {
            let exclude = |reason: String| Exclusion {
                source_id: record.id.clone(),
                pattern,
                reason,
            };
            let pair = build_instruction(record, pattern, bucket_of(&record.id), seed, &config.options)
                .map_err(|e| exclude(e.to_string()))?;
            let tokens = estimate_tokens(&pair.input);
            if tokens > config.token_budget {
                return Err(exclude(format!(
                    "input of ~{tokens} tokens exceeds budget {}",
                    config.token_budget
                )));
            }
            Ok(pair)
        })
        .collect();

    let mut out = CorpusOutcome::default();
    for r in results {
        match r {
            Ok(p) => out.pairs.push(p),
            Err(e) => out.excluded.push(e),
        }
    }
    out.pairs
        .sort_by(|a, b| a.source_id.cmp(&b.source_id).then(a.pattern.cmp(&b.pattern)));
    Ok(out)
}
