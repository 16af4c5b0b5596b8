//! Per-n-gram monthly mean sentiment and topic scores.
//!
//! A bucket point exists only when at least `floor` documents containing the
//! key fall in the bucket; means are taken over at most `cap` of them, chosen
//! by sorting on a seeded FNV-1a hash of (key, doc id).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bucket::TimeBucket;
use crate::error::{Error, Result};
use crate::hash::Fnv64;
use crate::ingest::Document;
use crate::phrases::{Unit, Vocabulary};
use crate::tokenize::{Token, TokenKind};

pub const TOPIC_LABELS: [&str; 19] = [
    "arts & culture",
    "business & entrepreneurs",
    "celebrity & pop culture",
    "diaries & daily life",
    "family",
    "fashion & style",
    "film tv & video",
    "fitness & health",
    "food & dining",
    "gaming",
    "learning & educational",
    "music",
    "news & social concern",
    "other hobbies",
    "relationships",
    "science & technology",
    "sports",
    "travel & adventure",
    "youth & student life",
];
pub const TOPIC_COUNT: usize = TOPIC_LABELS.len();
pub const SENTIMENT_LABELS: [&str; 3] = ["negative", "neutral", "positive"];

pub const DEFAULT_FLOOR: usize = 10;
pub const DEFAULT_CAP: usize = 1024;

/// Classifier output for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocScores {
    pub id: String,
    /// (negative, neutral, positive).
    pub sentiment: [f64; 3],
    /// One independent score per entry of [`TOPIC_LABELS`].
    pub topics: Vec<f64>,
}

impl DocScores {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !self.sentiment.iter().all(|&x| unit(x)) {
            return Err(Error::Domain(format!("{}: sentiment component outside [0, 1]", self.id)));
        }
        let sum: f64 = self.sentiment.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!("{}: sentiment sums to {sum}", self.id)));
        }
        if self.topics.len() != TOPIC_COUNT {
            return Err(Error::Domain(format!(
                "{}: expected {TOPIC_COUNT} topic scores, got {}",
                self.id,
                self.topics.len()
            )));
        }
        if !self.topics.iter().all(|&x| unit(x)) {
            return Err(Error::Domain(format!("{}: topic score outside [0, 1]", self.id)));
        }
        Ok(())
    }

    /// Index of the largest sentiment component; ties go to the lower index.
    pub fn sentiment_argmax(&self) -> usize {
        (1..3).fold(0, |best, i| if self.sentiment[i] > self.sentiment[best] { i } else { best })
    }
}

/// Word lists driving [`stub_score`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StubLexicon {
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
    /// Topic label to keywords.
    pub topics: BTreeMap<String, BTreeSet<String>>,
}

fn set(words: &[&str]) -> BTreeSet<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl Default for StubLexicon {
    fn default() -> Self {
        let topics = [
            ("arts & culture", &["art", "museum", "poetry", "painting", "theatre"][..]),
            ("business & entrepreneurs", &["business", "startup", "market", "stocks", "ceo"]),
            ("celebrity & pop culture", &["celebrity", "kardashian", "gossip", "famous"]),
            ("diaries & daily life", &["today", "morning", "tired", "weekend"]),
            ("family", &["mom", "dad", "kids", "family", "baby"]),
            ("fashion & style", &["fashion", "outfit", "dress", "style"]),
            ("film tv & video", &["movie", "film", "netflix", "episode", "oscars"]),
            ("fitness & health", &["gym", "workout", "vaccine", "covid", "health"]),
            ("food & dining", &["food", "pizza", "dinner", "restaurant", "coffee"]),
            ("gaming", &["game", "gaming", "xbox", "playstation", "nintendo"]),
            ("learning & educational", &["learn", "course", "study", "lecture"]),
            ("music", &["music", "song", "album", "concert", "spotify"]),
            ("news & social concern", &["election", "president", "government", "protest", "war"]),
            ("other hobbies", &["hobby", "garden", "fishing", "knitting"]),
            ("relationships", &["love", "boyfriend", "girlfriend", "dating"]),
            ("science & technology", &["science", "tech", "ai", "crypto", "bitcoin"]),
            ("sports", &["football", "soccer", "nba", "goal", "match"]),
            ("travel & adventure", &["travel", "flight", "beach", "trip", "vacation"]),
            ("youth & student life", &["school", "exam", "homework", "college", "teacher"]),
        ];
        StubLexicon {
            positive: set(&["good", "great", "love", "happy", "excellent", "amazing", "best", "win", "beautiful", "thanks"]),
            negative: set(&["bad", "terrible", "hate", "sad", "awful", "worst", "angry", "lose", "ugly", "sick"]),
            topics: topics.iter().map(|(l, ws)| (l.to_string(), set(ws))).collect(),
        }
    }
}

impl StubLexicon {
    pub fn validate(&self) -> Result<()> {
        for label in self.topics.keys() {
            if !TOPIC_LABELS.contains(&label.as_str()) {
                return Err(Error::Config(format!("unknown topic label {label:?} in stub lexicon")));
            }
        }
        Ok(())
    }
}

/// Deterministic lexicon scorer standing in for trained classifiers.
///
/// Sentiment is a softmax over logits `(negative hits, ln 2, positive hits)`,
/// so a text without hits scores (0.25, 0.5, 0.25). Each topic scores
/// `1 - 0.95 * exp(-hits)`.
pub fn stub_score(id: &str, tokens: &[Token], lexicon: &StubLexicon) -> DocScores {
    let words: Vec<&str> = tokens
        .iter()
        .filter(|t| t.is_countable())
        .map(|t| match t.kind {
            TokenKind::Hashtag => t.lowercased.trim_start_matches('#'),
            _ => t.lowercased.as_str(),
        })
        .collect();
    let hits = |list: &BTreeSet<String>| words.iter().filter(|w| list.contains(**w)).count() as f64;
    let logits = [hits(&lexicon.negative), std::f64::consts::LN_2, hits(&lexicon.positive)];
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|l| (l - max).exp());
    let z: f64 = exps.iter().sum();
    let topics = TOPIC_LABELS
        .iter()
        .map(|label| {
            let n = lexicon.topics.get(*label).map_or(0.0, hits);
            1.0 - 0.95 * (-n).exp()
        })
        .collect();
    DocScores {
        id: id.to_string(),
        sentiment: exps.map(|e| e / z),
        topics,
    }
}

/// Score lookup for a document: sidecar first, then inline fields, then the
/// stub scorer.
pub fn resolve_scores(
    doc: &Document,
    tokens: &[Token],
    sidecar: &HashMap<String, DocScores>,
    lexicon: &StubLexicon,
) -> Result<DocScores> {
    if let Some(s) = sidecar.get(&doc.id) {
        return Ok(s.clone());
    }
    let scores = match (&doc.sentiment, &doc.topics) {
        (Some(s), Some(t)) => DocScores {
            id: doc.id.clone(),
            sentiment: *s,
            topics: t.clone(),
        },
        (s, t) => {
            let stub = stub_score(&doc.id, tokens, lexicon);
            DocScores {
                id: doc.id.clone(),
                sentiment: s.unwrap_or(stub.sentiment),
                topics: t.clone().unwrap_or(stub.topics),
            }
        }
    };
    scores.validate()?;
    Ok(scores)
}

pub fn read_sidecar(path: &Path) -> Result<HashMap<String, DocScores>> {
    let rows: Vec<DocScores> = crate::ingest::read_ndjson(path)?;
    let mut out = HashMap::with_capacity(rows.len());
    for row in rows {
        row.validate()?;
        let id = row.id.clone();
        if out.insert(id.clone(), row).is_some() {
            return Err(Error::parse(path.display().to_string(), format!("duplicate score id {id}")));
        }
    }
    Ok(out)
}

pub fn sample_hash(seed: u64, key: &str, doc_id: &str) -> u64 {
    Fnv64::default()
        .field(&seed.to_le_bytes())
        .field(key.as_bytes())
        .field(doc_id.as_bytes())
        .finish()
}

/// Apply the floor and cap rules to the documents containing `key` in one
/// bucket. Returns indices into `doc_ids` in sample order.
pub fn sample_docs(key: &str, doc_ids: &[&str], floor: usize, cap: usize, seed: u64) -> Vec<usize> {
    if doc_ids.len() < floor {
        return Vec::new();
    }
    let mut order: Vec<(u64, &str, usize)> = doc_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (sample_hash(seed, key, id), *id, i))
        .collect();
    order.sort_unstable();
    order.truncate(cap);
    order.into_iter().map(|(_, _, i)| i).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanScores {
    pub sentiment: [f64; 3],
    pub topics: Vec<f64>,
    /// Share of documents whose sentiment argmax is positive.
    pub positive_fraction: f64,
}

pub fn mean_scores(sample: &[&DocScores]) -> Result<MeanScores> {
    if sample.is_empty() {
        return Err(Error::Domain("mean of an empty sample".into()));
    }
    let n = sample.len() as f64;
    let mut sentiment = [0.0; 3];
    let mut topics = vec![0.0; TOPIC_COUNT];
    let mut positive = 0usize;
    for s in sample {
        for (a, x) in sentiment.iter_mut().zip(s.sentiment) {
            *a += x;
        }
        for (a, x) in topics.iter_mut().zip(&s.topics) {
            *a += x;
        }
        positive += usize::from(s.sentiment_argmax() == 2);
    }
    Ok(MeanScores {
        sentiment: sentiment.map(|x| x / n),
        topics: topics.into_iter().map(|x| x / n).collect(),
        positive_fraction: positive as f64 / n,
    })
}

/// The four topics with the largest sums; ties go to the smaller label.
pub fn top4_topics(sums: &[f64]) -> [usize; 4] {
    let mut idx: Vec<usize> = (0..sums.len().min(TOPIC_COUNT)).collect();
    idx.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(TOPIC_LABELS[a].cmp(TOPIC_LABELS[b])));
    [idx[0], idx[1], idx[2], idx[3]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentPoint {
    pub negative: f64,
    pub neutral: f64,
    pub positive: f64,
    pub positive_fraction: f64,
    pub n_sampled: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentSeries {
    pub key: String,
    pub points: BTreeMap<TimeBucket, SentimentPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPoint {
    pub means: Vec<f64>,
    pub n_sampled: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSeries {
    pub key: String,
    pub points: BTreeMap<TimeBucket, TopicPoint>,
}

impl TopicSeries {
    pub fn sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; TOPIC_COUNT];
        for p in self.points.values() {
            for (s, m) in sums.iter_mut().zip(&p.means) {
                *s += m;
            }
        }
        sums
    }

    pub fn top4(&self) -> [usize; 4] {
        top4_topics(&self.sums())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub floor: usize,
    pub cap: usize,
    /// Set from the pipeline-level seed.
    #[serde(skip)]
    pub seed: u64,
    pub lexicon: StubLexicon,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            floor: DEFAULT_FLOOR,
            cap: DEFAULT_CAP,
            seed: 42,
            lexicon: StubLexicon::default(),
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.floor == 0 || self.cap < self.floor {
            return Err(Error::Config("score sampling needs 1 <= floor <= cap".into()));
        }
        self.lexicon.validate()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTables {
    pub sentiment: BTreeMap<String, SentimentSeries>,
    pub topics: BTreeMap<String, TopicSeries>,
}

/// Vocabulary keys a segmented document contains (units and their
/// components), each listed once.
pub fn doc_keys<'a>(units: &'a [Unit], vocab: &Vocabulary) -> BTreeSet<&'a str> {
    units
        .iter()
        .flat_map(|u| std::iter::once(u.surface.as_str()).chain(u.components.iter().map(String::as_str)))
        .filter(|k| vocab.contains(k))
        .collect()
}

/// Aggregate document scores into per-key series.
pub fn aggregate_scores<'a>(
    docs: impl IntoIterator<Item = (TimeBucket, &'a [Unit], &'a DocScores)>,
    vocab: &Vocabulary,
    cfg: &ScoreConfig,
) -> ScoreTables {
    let docs: Vec<(TimeBucket, &[Unit], &DocScores)> = docs.into_iter().collect();
    let mut groups: BTreeMap<(&str, TimeBucket), Vec<usize>> = BTreeMap::new();
    for (i, (bucket, units, _)) in docs.iter().enumerate() {
        for key in doc_keys(units, vocab) {
            groups.entry((key, *bucket)).or_default().push(i);
        }
    }
    let mut tables = ScoreTables::default();
    for ((key, bucket), members) in groups {
        let ids: Vec<&str> = members.iter().map(|&i| docs[i].2.id.as_str()).collect();
        let mut picked = sample_docs(key, &ids, cfg.floor, cfg.cap, cfg.seed);
        // Sum in input order so keys sharing a sample share identical means.
        picked.sort_unstable();
        if picked.is_empty() {
            continue;
        }
        let sample: Vec<&DocScores> = picked.iter().map(|&k| docs[members[k]].2).collect();
        let m = mean_scores(&sample).expect("non-empty sample");
        let n_sampled = sample.len() as u32;
        tables
            .sentiment
            .entry(key.to_string())
            .or_insert_with(|| SentimentSeries {
                key: key.to_string(),
                points: BTreeMap::new(),
            })
            .points
            .insert(
                bucket,
                SentimentPoint {
                    negative: m.sentiment[0],
                    neutral: m.sentiment[1],
                    positive: m.sentiment[2],
                    positive_fraction: m.positive_fraction,
                    n_sampled,
                },
            );
        tables
            .topics
            .entry(key.to_string())
            .or_insert_with(|| TopicSeries {
                key: key.to_string(),
                points: BTreeMap::new(),
            })
            .points
            .insert(
                bucket,
                TopicPoint {
                    means: m.topics,
                    n_sampled,
                },
            );
    }
    tables
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::parse(path.display().to_string(), e)
}

impl ScoreTables {
    /// Writes `sentiment.csv` and `topics.csv`; the topic header lists the
    /// labels in index order.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let path = dir.join("sentiment.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(["key", "bucket", "negative", "neutral", "positive", "positive_fraction", "n_sampled"])
            .map_err(|e| csv_err(&path, e))?;
        for s in self.sentiment.values() {
            for (b, p) in &s.points {
                w.write_record([
                    s.key.clone(),
                    b.to_string(),
                    p.negative.to_string(),
                    p.neutral.to_string(),
                    p.positive.to_string(),
                    p.positive_fraction.to_string(),
                    p.n_sampled.to_string(),
                ])
                .map_err(|e| csv_err(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("topics.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        let header: Vec<&str> = ["key", "bucket", "n_sampled"].into_iter().chain(TOPIC_LABELS).collect();
        w.write_record(&header).map_err(|e| csv_err(&path, e))?;
        for s in self.topics.values() {
            for (b, p) in &s.points {
                let mut row = vec![s.key.clone(), b.to_string(), p.n_sampled.to_string()];
                row.extend(p.means.iter().map(f64::to_string));
                w.write_record(&row).map_err(|e| csv_err(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }

    pub fn read_csv(dir: &Path) -> Result<Self> {
        let mut tables = ScoreTables::default();
        let num = |path: &Path, s: &str| s.parse::<f64>().map_err(|e| csv_err(path, e));

        let path = dir.join("sentiment.csv");
        let mut r = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_err(&path, e))?;
            if rec.len() != 7 {
                return Err(csv_err(&path, "expected 7 columns"));
            }
            let bucket: TimeBucket = rec[1].parse()?;
            let point = SentimentPoint {
                negative: num(&path, &rec[2])?,
                neutral: num(&path, &rec[3])?,
                positive: num(&path, &rec[4])?,
                positive_fraction: num(&path, &rec[5])?,
                n_sampled: rec[6].parse().map_err(|e| csv_err(&path, e))?,
            };
            tables
                .sentiment
                .entry(rec[0].to_string())
                .or_insert_with(|| SentimentSeries {
                    key: rec[0].to_string(),
                    points: BTreeMap::new(),
                })
                .points
                .insert(bucket, point);
        }

        let path = dir.join("topics.csv");
        let mut r = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
        let header = r.headers().map_err(|e| csv_err(&path, e))?;
        if header.iter().skip(3).ne(TOPIC_LABELS) {
            return Err(csv_err(&path, "topic columns do not match the label list"));
        }
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_err(&path, e))?;
            if rec.len() != 3 + TOPIC_COUNT {
                return Err(csv_err(&path, format!("expected {} columns", 3 + TOPIC_COUNT)));
            }
            let bucket: TimeBucket = rec[1].parse()?;
            let means = rec.iter().skip(3).map(|s| num(&path, s)).collect::<Result<Vec<_>>>()?;
            let point = TopicPoint {
                means,
                n_sampled: rec[2].parse().map_err(|e| csv_err(&path, e))?,
            };
            tables
                .topics
                .entry(rec[0].to_string())
                .or_insert_with(|| TopicSeries {
                    key: rec[0].to_string(),
                    points: BTreeMap::new(),
                })
                .points
                .insert(bucket, point);
        }
        Ok(tables)
    }
}
