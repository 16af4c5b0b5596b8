//! Synthetic corpora with injected events and a ground-truth ledger.
//!
//! Background documents mix Zipf-distributed filler words with words from
//! themed clusters. Each tracked word (event targets and stationary
//! controls) gets `target_docs` documents per bucket built from the word,
//! context words from its cluster, and filler. Events then change the rate
//! (SPIKE), the context cluster (SHIFT), attached sentiment words
//! (SENTIMENT) or attached topic keywords (TOPIC) during
//! `[onset, onset + duration)`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::Duration;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bucket::{TimeBucket, YearMonth};
use crate::error::{Error, Result};
use crate::ingest::RawDocument;
use crate::scores::StubLexicon;

/// Words used to guarantee stopword presence. All are phrase connectors, so
/// they never form n-grams of their own.
const FUNCTION_WORDS: [&str; 7] = ["the", "a", "and", "to", "of", "in", "on"];
const SYLLABLES: [&str; 20] = [
    "ba", "ko", "ri", "mu", "te", "sa", "lo", "ni", "de", "pu", "ga", "fe", "zi", "vo", "ha", "ju", "ne", "ti", "ro", "my",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventKind {
    Spike,
    Shift,
    Sentiment,
    Topic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub target: String,
    pub kind: EventKind,
    /// Index into the generated bucket list.
    pub onset: usize,
    pub duration: usize,
    /// SPIKE: rate multiplier. SHIFT: probability of drawing from cluster B.
    /// SENTIMENT: lexicon words per document, positive polarity when > 0.
    /// TOPIC: cluster B keywords added per document.
    pub magnitude: f64,
    pub cluster_a: Vec<String>,
    #[serde(default)]
    pub cluster_b: Vec<String>,
}

/// A stationary word with a fixed context cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub word: String,
    pub cluster: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub start: YearMonth,
    pub buckets: usize,
    /// Documents dated in the year before `start` (one PRIOR-style batch).
    pub prior_docs: usize,
    pub background_docs: usize,
    pub target_docs: usize,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub doc_len: usize,
    pub context_words: usize,
    /// Share of background documents drawn around one cluster.
    pub themed_share: f64,
    pub authors: usize,
    pub events: Vec<EventSpec>,
    pub controls: Vec<ControlSpec>,
    /// Fixed multiword expressions planted in background documents.
    pub phrases: Vec<String>,
    /// Per background document and phrase, the chance it is planted.
    pub phrase_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            start: YearMonth::new(2020, 1).expect("valid month"),
            buckets: 12,
            prior_docs: 0,
            background_docs: 200,
            target_docs: 50,
            vocab_size: 2000,
            zipf_exponent: 1.0,
            doc_len: 12,
            context_words: 4,
            themed_share: 0.5,
            authors: 5000,
            events: Vec::new(),
            controls: Vec::new(),
            phrases: ["new york", "new york city", "joe biden", "game of thrones"].map(String::from).to_vec(),
            phrase_rate: 0.01,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.buckets == 0 || self.doc_len < self.context_words + 2 || self.vocab_size == 0 || self.authors == 0 {
            return err("synth needs buckets, vocab and authors > 0 and doc_len >= context_words + 2".into());
        }
        for e in &self.events {
            if e.onset >= self.buckets {
                return err(format!("event for {:?} starts after the last bucket", e.target));
            }
            if e.cluster_a.is_empty() {
                return err(format!("event for {:?} needs a non-empty cluster A", e.target));
            }
            let a: BTreeSet<&String> = e.cluster_a.iter().collect();
            if e.cluster_b.iter().any(|w| a.contains(w)) {
                return err(format!("clusters of {:?} overlap", e.target));
            }
            if matches!(e.kind, EventKind::Shift | EventKind::Topic) && e.cluster_b.is_empty() {
                return err(format!("{:?} event for {:?} needs cluster B", e.kind, e.target));
            }
            if e.magnitude < 0.0 && e.kind != EventKind::Sentiment {
                return err(format!("negative magnitude for {:?}", e.target));
            }
        }
        if !(0.0..=1.0).contains(&self.phrase_rate) {
            return err("phrase_rate must be in [0, 1]".into());
        }
        if self.phrases.iter().any(|p| p.split_whitespace().count() < 2) {
            return err("synth phrases need at least two words".into());
        }
        if self.controls.iter().any(|c| c.cluster.is_empty()) {
            return err("control words need a cluster".into());
        }
        Ok(())
    }

    pub fn bucket_list(&self) -> Vec<YearMonth> {
        std::iter::successors(Some(self.start), |m| Some(m.succ())).take(self.buckets).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectedCounts {
    pub target_docs: u64,
    pub target_occurrences: u64,
    pub cluster_a_draws: u64,
    pub cluster_b_draws: u64,
    pub lexicon_draws: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub target: String,
    pub kind: Option<EventKind>,
    pub onset: Option<TimeBucket>,
    pub end: Option<TimeBucket>,
    pub magnitude: f64,
    pub per_bucket: BTreeMap<TimeBucket, InjectedCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub seed: u64,
    pub buckets: Vec<TimeBucket>,
    pub documents: BTreeMap<TimeBucket, u64>,
    /// Events first, then controls (with `kind = null`).
    pub words: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn entry(&self, word: &str) -> Option<&LedgerEntry> {
        self.words.iter().find(|e| e.target == word)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(|e| Error::parse(path.display().to_string(), e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(path.display().to_string(), e))
    }
}

pub struct SynthOutput {
    pub documents: Vec<RawDocument>,
    pub ledger: Ledger,
}

/// Deterministic pseudo-word for background rank `i`.
pub fn filler_word(i: usize) -> String {
    let mut n = i;
    let mut w = String::new();
    loop {
        w.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
        if n == 0 {
            break;
        }
    }
    // Two-syllable minimum keeps fillers clear of real short words.
    if i < SYLLABLES.len() {
        w.push_str("ka");
    }
    w
}

struct Zipf {
    cumulative: Vec<f64>,
}

impl Zipf {
    fn new(n: usize, s: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = (1..=n)
            .map(|k| {
                acc += 1.0 / (k as f64).powf(s);
                acc
            })
            .collect();
        Zipf { cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let r = rng.random::<f64>() * self.cumulative.last().expect("non-empty");
        self.cumulative.partition_point(|&c| c <= r).min(self.cumulative.len() - 1)
    }
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
    zipf: Zipf,
    fillers: Vec<String>,
    docs: Vec<RawDocument>,
}

impl Generator<'_> {
    fn filler(&mut self) -> String {
        let i = self.zipf.draw(&mut self.rng);
        self.fillers[i].clone()
    }

    fn pick(&mut self, words: &[String]) -> String {
        words.choose(&mut self.rng).expect("non-empty word list").clone()
    }

    /// Shuffle content words in among fillers and function words.
    fn emit(&mut self, bucket: YearMonth, serial: &mut usize, mut content: Vec<String>) {
        while content.len() < self.cfg.doc_len {
            let f = self.filler();
            content.push(f);
        }
        for i in (1..content.len()).rev() {
            let j = self.rng.random_range(0..=i);
            content.swap(i, j);
        }
        let mut words = Vec::with_capacity(content.len() + content.len() / 3 + 1);
        for (i, w) in content.into_iter().enumerate() {
            if i % 3 == 0 {
                words.push(FUNCTION_WORDS.choose(&mut self.rng).expect("non-empty").to_string());
            }
            words.push(w);
        }
        let seconds = self.rng.random_range(0..i64::from(bucket.days_in_month()) * 86_400);
        let author = self.rng.random_range(0..self.cfg.authors);
        self.docs.push(RawDocument {
            id: format!("s{}-{:06}", bucket, *serial),
            author: format!("u{author}"),
            timestamp: bucket.start() + Duration::seconds(seconds),
            text: words.join(" "),
            is_retweet: false,
            has_media: false,
            sentiment: None,
            topics: None,
        });
        *serial += 1;
    }

    fn background(&mut self, bucket: YearMonth, serial: &mut usize, n: usize, clusters: &[Vec<String>]) {
        for _ in 0..n {
            let mut content = Vec::new();
            if !clusters.is_empty() && self.rng.random::<f64>() < self.cfg.themed_share {
                let c = self.rng.random_range(0..clusters.len());
                for _ in 0..self.cfg.context_words {
                    content.push(self.pick(&clusters[c]));
                }
            }
            // a phrase is one slot, so shuffling keeps it contiguous
            for p in &self.cfg.phrases {
                if self.rng.random::<f64>() < self.cfg.phrase_rate {
                    content.push(p.clone());
                }
            }
            self.emit(bucket, serial, content);
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let months = cfg.bucket_list();
    let lexicon = StubLexicon::default();
    let positive: Vec<String> = lexicon.positive.iter().cloned().collect();
    let negative: Vec<String> = lexicon.negative.iter().cloned().collect();

    let mut clusters: Vec<Vec<String>> = Vec::new();
    for e in &cfg.events {
        clusters.push(e.cluster_a.clone());
        if !e.cluster_b.is_empty() && e.kind == EventKind::Shift {
            clusters.push(e.cluster_b.clone());
        }
    }
    clusters.extend(cfg.controls.iter().map(|c| c.cluster.clone()));

    let mut g = Generator {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        zipf: Zipf::new(cfg.vocab_size, cfg.zipf_exponent),
        fillers: (0..cfg.vocab_size).map(filler_word).collect(),
        docs: Vec::new(),
    };

    let mut entries: Vec<LedgerEntry> = cfg
        .events
        .iter()
        .map(|e| LedgerEntry {
            target: e.target.clone(),
            kind: Some(e.kind),
            onset: Some(TimeBucket::Month(months[e.onset])),
            end: months.get(e.onset + e.duration).copied().map(TimeBucket::Month),
            magnitude: e.magnitude,
            per_bucket: BTreeMap::new(),
        })
        .chain(cfg.controls.iter().map(|c| LedgerEntry {
            target: c.word.clone(),
            kind: None,
            onset: None,
            end: None,
            magnitude: 0.0,
            per_bucket: BTreeMap::new(),
        }))
        .collect();
    let mut documents = BTreeMap::new();

    if cfg.prior_docs > 0 {
        let mut serial = 0;
        let prior_month = YearMonth::new(cfg.start.year - 1, 6)?;
        g.background(prior_month, &mut serial, cfg.prior_docs, &clusters);
        documents.insert(TimeBucket::Prior, serial as u64);
    }

    for (bi, &month) in months.iter().enumerate() {
        let mut serial = 0usize;
        let bucket = TimeBucket::Month(month);
        g.background(month, &mut serial, cfg.background_docs, &clusters);

        for (ei, e) in cfg.events.iter().enumerate() {
            let active = bi >= e.onset && bi < e.onset + e.duration;
            let n_docs = if active && e.kind == EventKind::Spike {
                (cfg.target_docs as f64 * e.magnitude).round() as usize
            } else {
                cfg.target_docs
            };
            let mut counts = InjectedCounts::default();
            for _ in 0..n_docs {
                let mut content = vec![e.target.clone()];
                for _ in 0..cfg.context_words {
                    let use_b = active && e.kind == EventKind::Shift && g.rng.random::<f64>() < e.magnitude;
                    if use_b {
                        content.push(g.pick(&e.cluster_b));
                        counts.cluster_b_draws += 1;
                    } else {
                        content.push(g.pick(&e.cluster_a));
                        counts.cluster_a_draws += 1;
                    }
                }
                if active && e.kind == EventKind::Sentiment {
                    let list = if e.magnitude > 0.0 { &positive } else { &negative };
                    for _ in 0..e.magnitude.abs().round() as usize {
                        content.push(g.pick(list));
                        counts.lexicon_draws += 1;
                    }
                }
                if active && e.kind == EventKind::Topic {
                    for _ in 0..e.magnitude.round() as usize {
                        content.push(g.pick(&e.cluster_b));
                        counts.cluster_b_draws += 1;
                    }
                }
                counts.target_docs += 1;
                counts.target_occurrences += 1;
                g.emit(month, &mut serial, content);
            }
            entries[ei].per_bucket.insert(bucket, counts);
        }

        for (ci, c) in cfg.controls.iter().enumerate() {
            let mut counts = InjectedCounts::default();
            for _ in 0..cfg.target_docs {
                let mut content = vec![c.word.clone()];
                for _ in 0..cfg.context_words {
                    content.push(g.pick(&c.cluster));
                    counts.cluster_a_draws += 1;
                }
                counts.target_docs += 1;
                counts.target_occurrences += 1;
                g.emit(month, &mut serial, content);
            }
            entries[cfg.events.len() + ci].per_bucket.insert(bucket, counts);
        }
        documents.insert(bucket, serial as u64);
    }

    let mut buckets: Vec<TimeBucket> = months.into_iter().map(TimeBucket::Month).collect();
    if cfg.prior_docs > 0 {
        buckets.insert(0, TimeBucket::Prior);
    }
    Ok(SynthOutput {
        documents: g.docs,
        ledger: Ledger {
            seed: cfg.seed,
            buckets,
            documents,
            words: entries,
        },
    })
}

/// The shift scenario used by the acceptance suite: one word whose contexts
/// move from cluster A to cluster B at `onset`, plus a stationary control.
pub fn shift_scenario(buckets: usize, onset: usize, target_docs: usize, seed: u64) -> SynthConfig {
    let cluster = |p: &str| (0..8).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    SynthConfig {
        buckets,
        target_docs,
        events: vec![EventSpec {
            target: "parasite".into(),
            kind: EventKind::Shift,
            onset,
            duration: buckets - onset,
            magnitude: 1.0,
            cluster_a: cluster("biology"),
            cluster_b: cluster("cinema"),
        }],
        controls: vec![ControlSpec {
            word: "macron".into(),
            cluster: cluster("politics"),
        }],
        phrases: Vec::new(),
        seed,
        ..SynthConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_phrases_are_detected() {
        use crate::phrases::{detect_phrases, PhraseConfig};
        use crate::tokenize::tokenize;
        let out = generate(&SynthConfig::default()).unwrap();
        let tokens: Vec<_> = out.documents.iter().map(|d| tokenize(&d.text)).collect();
        let vocab = detect_phrases(&tokens, &PhraseConfig::default()).unwrap().vocabulary;
        for p in ["new york", "joe biden", "game of thrones", "new york city"] {
            assert!(vocab.contains(p), "{p} not detected");
        }
        assert_eq!(vocab.get("new york city").unwrap().arity(), 3);
    }

    #[test]
    fn deterministic_and_ledger_consistent() {
        let cfg = shift_scenario(6, 3, 20, 9);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.documents, b.documents);
        assert_eq!(a.ledger, b.ledger);
        let entry = a.ledger.entry("parasite").unwrap();
        for (i, (bucket, c)) in entry.per_bucket.iter().enumerate() {
            let with_target = a
                .documents
                .iter()
                .filter(|d| TimeBucket::Month(YearMonth::of(&d.timestamp)) == *bucket)
                .filter(|d| d.text.split(' ').any(|w| w == "parasite"))
                .count() as u64;
            assert_eq!(with_target, c.target_docs);
            if i < 3 {
                assert_eq!(c.cluster_b_draws, 0);
            } else {
                assert_eq!(c.cluster_a_draws, 0);
            }
        }
        let total: u64 = a.ledger.documents.values().sum();
        assert_eq!(total, a.documents.len() as u64);
    }

    #[test]
    fn spike_multiplies_target_docs() {
        let mut cfg = shift_scenario(4, 2, 10, 3);
        cfg.events[0].kind = EventKind::Spike;
        cfg.events[0].magnitude = 10.0;
        cfg.events[0].duration = 1;
        let out = generate(&cfg).unwrap();
        let e = out.ledger.entry("parasite").unwrap();
        let docs: Vec<u64> = e.per_bucket.values().map(|c| c.target_docs).collect();
        assert_eq!(docs, vec![10, 10, 100, 10]);
    }

    #[test]
    fn fillers_are_distinct() {
        let words: BTreeSet<String> = (0..5000).map(filler_word).collect();
        assert_eq!(words.len(), 5000);
    }

    #[test]
    fn overlapping_clusters_rejected() {
        let mut cfg = shift_scenario(4, 2, 10, 3);
        cfg.events[0].cluster_b[0] = cfg.events[0].cluster_a[0].clone();
        assert!(generate(&cfg).is_err());
        cfg = shift_scenario(4, 2, 10, 3);
        cfg.events[0].onset = 4;
        assert!(generate(&cfg).is_err());
    }
}
