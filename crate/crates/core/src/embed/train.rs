use std::collections::{BTreeMap, HashMap};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::EmbeddingMatrix;
use super::sgns::{sgns_update, Context};
use super::EmbeddingConfig;
use crate::bucket::TimeBucket;
use crate::error::{Error, Result};
use crate::hash::Fnv64;

/// Per-bucket seed derived from the run seed and the bucket label.
pub fn bucket_seed(seed: u64, bucket: TimeBucket) -> u64 {
    Fnv64::default()
        .field(&seed.to_le_bytes())
        .field(bucket.to_string().as_bytes())
        .finish()
}

/// Months in the aggregated prior period; its quota is this multiple of the
/// monthly quota.
pub const PRIOR_QUOTA_MONTHS: usize = 24;

/// Undersample buckets to at most `quota` items per month (`24 × quota` for
/// the prior bucket). Returns the selected indices in input order.
pub fn balance_sample<T>(
    items: &[T],
    bucket_of: impl Fn(&T) -> TimeBucket,
    quota: usize,
    seed: u64,
) -> Vec<usize> {
    let mut by_bucket: BTreeMap<TimeBucket, Vec<usize>> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        by_bucket.entry(bucket_of(item)).or_default().push(i);
    }
    let mut selected = Vec::with_capacity(items.len());
    for (bucket, members) in by_bucket {
        let cap = if bucket.is_prior() {
            quota.saturating_mul(PRIOR_QUOTA_MONTHS)
        } else {
            quota
        };
        if members.len() <= cap {
            selected.extend(members);
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(bucket_seed(seed, bucket));
            selected.extend(index::sample(&mut rng, members.len(), cap).into_iter().map(|k| members[k]));
        }
    }
    selected.sort_unstable();
    selected
}

/// Compass embeddings: target and context matrices over a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct CompassModel {
    pub target: EmbeddingMatrix,
    pub context: EmbeddingMatrix,
    pub counts: Vec<u64>,
}

/// Per-bucket target vectors trained against the frozen compass context.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceEmbeddings {
    pub bucket: TimeBucket,
    pub target: EmbeddingMatrix,
}

/// Unigram^0.75 noise distribution over context rows.
struct NoiseTable {
    cumulative: Vec<f64>,
    rows: Vec<usize>,
}

impl NoiseTable {
    fn new(counts: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut cumulative = Vec::new();
        let mut rows = Vec::new();
        let mut acc = 0.0;
        for (row, c) in counts {
            if c == 0 {
                continue;
            }
            acc += (c as f64).powf(0.75);
            cumulative.push(acc);
            rows.push(row);
        }
        NoiseTable { cumulative, rows }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty noise table");
        let r = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= r).min(self.rows.len() - 1);
        self.rows[k]
    }
}

struct Trainer<'a> {
    cfg: &'a EmbeddingConfig,
    noise: NoiseTable,
    rng: ChaCha8Rng,
}

impl Trainer<'_> {
    /// `sentences` hold context-row indices; `target_of[ctx]` maps a context
    /// row to its target row, `None` when the word is not trained.
    fn run(
        &mut self,
        sentences: &[Vec<usize>],
        target: &mut EmbeddingMatrix,
        target_of: &[Option<usize>],
        context: &mut Context<'_, f32>,
        epochs: usize,
    ) {
        let cfg = self.cfg;
        let words: usize = sentences.iter().map(Vec::len).sum();
        let total = (words * epochs).max(1) as f64;
        let mut processed = 0usize;
        let mut samples = Vec::with_capacity(cfg.negative + 1);
        let mut scratch = vec![0.0f32; target.dim];
        for _ in 0..epochs {
            for sentence in sentences {
                for (i, &center) in sentence.iter().enumerate() {
                    let progress = processed as f64 / total;
                    processed += 1;
                    let Some(row) = target_of[center] else { continue };
                    let lr = (cfg.lr_start - (cfg.lr_start - cfg.lr_end) * progress) as f32;
                    let reach = cfg.window - self.rng.random_range(0..cfg.window);
                    let lo = i.saturating_sub(reach);
                    let hi = (i + reach).min(sentence.len() - 1);
                    for (j, &ctx) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                        if j == i {
                            continue;
                        }
                        samples.clear();
                        samples.push((ctx, true));
                        for _ in 0..cfg.negative {
                            let neg = self.noise.draw(&mut self.rng);
                            if neg != ctx {
                                samples.push((neg, false));
                            }
                        }
                        sgns_update(target.row_mut(row), context, &samples, lr, &mut scratch);
                    }
                }
            }
        }
    }
}

fn count_words<S: AsRef<str>>(sentences: &[Vec<S>]) -> HashMap<&str, u64> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in sentences {
        for w in s {
            *counts.entry(w.as_ref()).or_default() += 1;
        }
    }
    counts
}

pub fn train_compass<S: AsRef<str>>(sentences: &[Vec<S>], cfg: &EmbeddingConfig) -> Result<CompassModel> {
    cfg.validate()?;
    let counts = count_words(sentences);
    let mut vocab: Vec<(&str, u64)> = counts.into_iter().filter(|(_, c)| *c >= cfg.min_count).collect();
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary(cfg.min_count));
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let words: Vec<String> = vocab.iter().map(|(w, _)| w.to_string()).collect();
    let word_counts: Vec<u64> = vocab.iter().map(|(_, c)| *c).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut target = EmbeddingMatrix::zeros(words.clone(), cfg.dimension);
    let scale = 1.0 / cfg.dimension as f32;
    for x in target.data.iter_mut() {
        *x = (rng.random::<f32>() - 0.5) * scale;
    }
    let mut context = EmbeddingMatrix::zeros(words, cfg.dimension);

    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|w| target.index.get(w.as_ref()).copied()).collect())
        .collect();
    let target_of: Vec<Option<usize>> = (0..target.len()).map(Some).collect();
    let mut trainer = Trainer {
        cfg,
        noise: NoiseTable::new(word_counts.iter().copied().enumerate()),
        rng,
    };
    trainer.run(
        &encoded,
        &mut target,
        &target_of,
        &mut Context::Trainable(&mut context.data),
        cfg.compass_epochs,
    );
    Ok(CompassModel {
        target,
        context,
        counts: word_counts,
    })
}

/// Tune compass target vectors on one bucket with the context matrix frozen.
/// Only words in the compass vocabulary with at least `slice_min_count`
/// occurrences in the bucket get a vector.
pub fn train_slice<S: AsRef<str>>(
    bucket: TimeBucket,
    sentences: &[Vec<S>],
    compass: &CompassModel,
    cfg: &EmbeddingConfig,
) -> Result<SliceEmbeddings> {
    cfg.validate()?;
    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|w| compass.context.index.get(w.as_ref()).copied()).collect())
        .collect();
    let mut slice_counts = vec![0u64; compass.context.len()];
    for s in &encoded {
        for &w in s {
            slice_counts[w] += 1;
        }
    }
    let members: Vec<usize> = (0..slice_counts.len())
        .filter(|&w| slice_counts[w] >= cfg.slice_min_count)
        .collect();
    let mut target = EmbeddingMatrix::zeros(
        members.iter().map(|&w| compass.target.words[w].clone()).collect(),
        compass.target.dim,
    );
    let mut target_of = vec![None; compass.context.len()];
    for (row, &w) in members.iter().enumerate() {
        target.row_mut(row).copy_from_slice(compass.target.row(w));
        target_of[w] = Some(row);
    }
    if members.is_empty() {
        return Ok(SliceEmbeddings { bucket, target });
    }
    let mut trainer = Trainer {
        cfg,
        noise: NoiseTable::new(slice_counts.iter().copied().enumerate()),
        rng: ChaCha8Rng::seed_from_u64(bucket_seed(cfg.seed, bucket)),
    };
    trainer.run(
        &encoded,
        &mut target,
        &target_of,
        &mut Context::Frozen(&compass.context.data),
        cfg.slice_epochs,
    );
    Ok(SliceEmbeddings { bucket, target })
}
