//! Corpus ingestion: cleaning, admission filters, bucketing and the
//! deduplicated embedding view.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::bucket::{TimeBucket, YearMonth};
use crate::error::{Error, Result};
use crate::tokenize::{simple_lowercase, tokenize};

pub const PLACEHOLDER_HANDLE: &str = "@user";

/// Shipped stopword inventory used by the admission filter (a compact
/// English function-word list).
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub author: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_retweet: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub has_media: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topics: Option<Vec<f64>>,
}

/// A cleaned, admitted, bucketed document. Serialized in the same NDJSON
/// schema as [`RawDocument`] plus the `bucket` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub author: String,
    pub timestamp: DateTime<Utc>,
    pub bucket: TimeBucket,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topics: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DedupMode {
    /// Exact match on lowercased, whitespace-collapsed text.
    Exact,
    /// Character 5-gram Jaccard similarity at or above `threshold`.
    Jaccard { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub stopwords: BTreeSet<String>,
    pub verified_handles: BTreeSet<String>,
    pub prior_cutoff: YearMonth,
    /// First month of the corpus range.
    pub range_start: YearMonth,
    /// First month after the corpus range.
    pub range_end: YearMonth,
    pub dedup: DedupMode,
    pub top_author_fraction: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            verified_handles: BTreeSet::new(),
            prior_cutoff: YearMonth { year: 2020, month: 1 },
            range_start: YearMonth { year: 2018, month: 1 },
            range_end: YearMonth { year: 2023, month: 1 },
            dedup: DedupMode::Exact,
            top_author_fraction: 0.01,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stopwords.is_empty() {
            return Err(Error::Config("stopword list is empty".into()));
        }
        if !(0.0..=0.5).contains(&self.top_author_fraction) {
            return Err(Error::Config(format!(
                "top_author_fraction {} not in [0, 0.5]",
                self.top_author_fraction
            )));
        }
        if self.range_start >= self.range_end {
            return Err(Error::Config("corpus range is empty".into()));
        }
        if let DedupMode::Jaccard { threshold } = self.dedup {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Error::Config(format!("jaccard threshold {threshold} not in [0, 1]")));
            }
        }
        Ok(())
    }

    fn verified_lowercase(&self) -> HashSet<String> {
        self.verified_handles
            .iter()
            .map(|h| simple_lowercase(h.trim_start_matches('@')))
            .collect()
    }
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)https?://\S+|\bt\.co/\S*").expect("url regex"))
}

fn mention_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").expect("mention regex"))
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Remove URLs, anonymize non-verified mentions and collapse whitespace.
///
/// `verified` holds lowercased handles without the leading `@`.
pub fn clean_text(raw: &str, verified: &HashSet<String>) -> String {
    let no_urls = url_regex().replace_all(raw, " ");
    let mut out = String::with_capacity(no_urls.len());
    let mut last = 0;
    for m in mention_regex().find_iter(&no_urls) {
        let glued = no_urls[..m.start()].chars().last().is_some_and(is_word_char);
        if glued {
            continue;
        }
        out.push_str(&no_urls[last..m.start()]);
        let handle = simple_lowercase(&m.as_str()[1..]);
        if verified.contains(&handle) {
            out.push_str(m.as_str());
        } else {
            out.push_str(PLACEHOLDER_HANDLE);
        }
        last = m.end();
    }
    out.push_str(&no_urls[last..]);
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Admission filter applied to an already cleaned text.
pub fn admit(doc: &RawDocument, cleaned: &str, cfg: &IngestConfig) -> bool {
    if doc.is_retweet || doc.has_media || cleaned.is_empty() {
        return false;
    }
    tokenize(cleaned)
        .iter()
        .any(|t| cfg.stopwords.contains(&t.lowercased))
}

pub fn assign_bucket(ts: &DateTime<Utc>, cfg: &IngestConfig) -> Result<TimeBucket> {
    if *ts < cfg.range_start.start() || *ts >= cfg.range_end.start() {
        return Err(Error::OutOfRange(*ts));
    }
    if *ts < cfg.prior_cutoff.start() {
        Ok(TimeBucket::Prior)
    } else {
        Ok(TimeBucket::Month(YearMonth::of(ts)))
    }
}

pub fn normalized_for_dedup(text: &str) -> String {
    simple_lowercase(text)
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn shingles(text: &str) -> HashSet<&str> {
    let idx: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    if idx.len() <= 5 {
        return [text].into_iter().collect();
    }
    (0..idx.len() - 5).map(|i| &text[idx[i]..idx[i + 5]]).collect()
}

fn jaccard(a: &HashSet<&str>, b: &HashSet<&str>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Authors whose documents are excluded: the `floor(fraction × #authors)`
/// most prolific, ties broken by author id.
pub fn top_authors(docs: &[Document], fraction: f64) -> HashSet<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for d in docs {
        *counts.entry(d.author.as_str()).or_default() += 1;
    }
    let n_excluded = (fraction * counts.len() as f64).floor() as usize;
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(n_excluded)
        .map(|(a, _)| a.to_string())
        .collect()
}

/// Embedding-view filter: drops documents of the most prolific authors,
/// then near-duplicates (keeping the first occurrence). Order is preserved.
pub fn dedup_filter(docs: &[Document], cfg: &IngestConfig) -> Vec<Document> {
    let excluded = top_authors(docs, cfg.top_author_fraction);
    let candidates = docs.iter().filter(|d| !excluded.contains(&d.author));
    match cfg.dedup {
        DedupMode::Exact => {
            let mut seen = HashSet::new();
            candidates
                .filter(|d| seen.insert(normalized_for_dedup(&d.text)))
                .cloned()
                .collect()
        }
        DedupMode::Jaccard { threshold } => {
            let normalized: Vec<(&Document, String)> = candidates
                .map(|d| (d, normalized_for_dedup(&d.text)))
                .collect();
            let sets: Vec<HashSet<&str>> = normalized.iter().map(|(_, t)| shingles(t)).collect();
            let mut kept: Vec<usize> = Vec::new();
            for i in 0..normalized.len() {
                let dup = kept.iter().any(|&j| {
                    let (a, b) = (sets[i].len() as f64, sets[j].len() as f64);
                    // |A ∩ B| / |A ∪ B| <= min/max, so skip pairs that cannot reach the threshold.
                    a.min(b) / a.max(b) >= threshold && jaccard(&sets[i], &sets[j]) >= threshold
                });
                if !dup {
                    kept.push(i);
                }
            }
            kept.into_iter().map(|i| normalized[i].0.clone()).collect()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub documents: u64,
    pub tokens: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestManifest {
    pub buckets: BTreeMap<TimeBucket, BucketStats>,
    pub embedding_view: BTreeMap<TimeBucket, BucketStats>,
    pub read: u64,
    pub rejected_filtered: u64,
    pub rejected_out_of_range: u64,
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    /// Frequency/score view, sorted by (bucket, id).
    pub documents: Vec<Document>,
    /// Deduplicated view used for embedding training.
    pub embedding_view: Vec<Document>,
    pub manifest: IngestManifest,
}

fn stats_of(docs: &[Document]) -> BTreeMap<TimeBucket, BucketStats> {
    let mut out: BTreeMap<TimeBucket, BucketStats> = BTreeMap::new();
    for d in docs {
        let s = out.entry(d.bucket).or_default();
        s.documents += 1;
        s.tokens += tokenize(&d.text).iter().filter(|t| t.is_countable()).count() as u64;
    }
    out
}

/// Clean, filter and bucket a corpus. Fails on empty or duplicate ids;
/// out-of-range and filtered records are counted and skipped.
pub fn ingest(records: Vec<RawDocument>, cfg: &IngestConfig) -> Result<IngestOutput> {
    cfg.validate()?;
    let verified = cfg.verified_lowercase();
    let mut manifest = IngestManifest::default();
    let mut ids = HashSet::new();
    let mut documents = Vec::new();
    for raw in records {
        manifest.read += 1;
        if raw.id.is_empty() {
            return Err(Error::parse(format!("record {}", manifest.read), "empty id"));
        }
        if !ids.insert(raw.id.clone()) {
            return Err(Error::parse(format!("record {}", manifest.read), format!("duplicate id {}", raw.id)));
        }
        let bucket = match assign_bucket(&raw.timestamp, cfg) {
            Ok(b) => b,
            Err(_) => {
                manifest.rejected_out_of_range += 1;
                continue;
            }
        };
        let text = clean_text(&raw.text, &verified);
        if !admit(&raw, &text, cfg) {
            manifest.rejected_filtered += 1;
            continue;
        }
        documents.push(Document {
            id: raw.id,
            author: raw.author,
            timestamp: raw.timestamp,
            bucket,
            text,
            sentiment: raw.sentiment,
            topics: raw.topics,
        });
    }
    documents.sort_by(|a, b| (a.bucket, &a.id).cmp(&(b.bucket, &b.id)));
    let embedding_view = dedup_filter(&documents, cfg);
    manifest.buckets = stats_of(&documents);
    manifest.embedding_view = stats_of(&embedding_view);
    Ok(IngestOutput {
        documents,
        embedding_view,
        manifest,
    })
}

pub fn read_ndjson<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::parse(format!("{}:{}", path.display(), i + 1), e))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_ndjson<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::parse(path.display().to_string(), e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
