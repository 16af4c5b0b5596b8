//! Bigram and trigram recognition with the count-based collocation score
//! `(count_ab - min_count) * vocab_size / (count_a * count_b)`.
//!
//! Detection runs two passes. Pass 1 scores adjacent unit pairs of the
//! tokenized corpus; pass 2 scores pairs over the pass-1 output so that an
//! accepted bigram next to a unigram can form a trigram. A single connector
//! word between two units is absorbed into the joined surface but is never
//! scored; two or more connectors in a row block the join. Punctuation is a
//! barrier. Joining is greedy left to right.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::{is_connector, Token};

/// Connector words ignored during scoring.
pub const DEFAULT_CONNECTORS: &[&str] = &[
    "a", "an", "the", "for", "of", "with", "without", "at", "from", "to", "in", "on", "by", "and",
    "or",
];

pub const MAX_ARITY: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhraseConfig {
    pub min_count: u64,
    pub threshold: f64,
    pub max_vocab: usize,
    pub connectors: BTreeSet<String>,
}

impl Default for PhraseConfig {
    fn default() -> Self {
        PhraseConfig {
            min_count: 10,
            threshold: 10.0,
            max_vocab: 100_000_000,
            connectors: DEFAULT_CONNECTORS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl PhraseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_count < 1 {
            return Err(Error::Config("phrase min_count must be >= 1".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Config("phrase threshold must be > 0".into()));
        }
        Ok(())
    }

    pub fn connector_set(&self) -> HashSet<String> {
        self.connectors.iter().cloned().collect()
    }
}

pub fn phrase_score(
    count_ab: u64,
    count_a: u64,
    count_b: u64,
    vocab_size: u64,
    min_count: u64,
) -> Result<f64> {
    if count_a == 0 || count_b == 0 {
        return Err(Error::Domain("phrase score needs non-zero component counts".into()));
    }
    Ok((count_ab as f64 - min_count as f64) * vocab_size as f64
        / (count_a as f64 * count_b as f64))
}

/// A vocabulary unit: a single token or a joined phrase.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Unit {
    /// Space-joined surface, connectors included.
    pub surface: String,
    /// Non-connector components.
    pub components: Vec<String>,
}

impl Unit {
    fn single(s: &str) -> Self {
        Unit {
            surface: s.to_string(),
            components: vec![s.to_string()],
        }
    }

    pub fn arity(&self) -> usize {
        self.components.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    Unit(Unit),
    Connector(String),
    Barrier,
}

/// Map a token sequence onto units, connectors and punctuation barriers.
pub fn pieces(tokens: &[Token], connectors: &HashSet<String>) -> Vec<Piece> {
    tokens
        .iter()
        .map(|t| {
            if !t.is_countable() {
                Piece::Barrier
            } else if is_connector(t, connectors) {
                Piece::Connector(t.lowercased.clone())
            } else {
                Piece::Unit(Unit::single(&t.lowercased))
            }
        })
        .collect()
}

/// The candidate pair starting at unit `i`: `(right index, connector)`.
fn candidate_at(pieces: &[Piece], i: usize) -> Option<(usize, Option<&str>)> {
    match pieces.get(i + 1)? {
        Piece::Unit(_) => Some((i + 1, None)),
        Piece::Connector(c) => match pieces.get(i + 2)? {
            Piece::Unit(_) => Some((i + 2, Some(c.as_str()))),
            _ => None,
        },
        Piece::Barrier => None,
    }
}

fn joined_surface(a: &Unit, connector: Option<&str>, b: &Unit) -> String {
    match connector {
        Some(c) => format!("{} {} {}", a.surface, c, b.surface),
        None => format!("{} {}", a.surface, b.surface),
    }
}

fn join(a: &Unit, connector: Option<&str>, b: &Unit) -> Unit {
    Unit {
        surface: joined_surface(a, connector, b),
        components: a.components.iter().chain(&b.components).cloned().collect(),
    }
}

/// Counts and score recorded for an accepted phrase in the pass that accepted it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseStat {
    pub pass: u8,
    pub phrase: String,
    pub left: String,
    pub connector: Option<String>,
    pub right: String,
    pub components: Vec<String>,
    pub count_ab: u64,
    pub count_a: u64,
    pub count_b: u64,
    pub vocab_size: u64,
    pub score: f64,
}

/// `(left surface, connector, right surface)` of a candidate pair.
pub type PairKey = (String, Option<String>, String);

fn pair_key(a: &Unit, connector: Option<&str>, b: &Unit) -> PairKey {
    (a.surface.clone(), connector.map(str::to_string), b.surface.clone())
}

#[derive(Debug, Default)]
struct PassCounts {
    units: HashMap<String, u64>,
    pairs: HashMap<PairKey, (Vec<String>, u64)>,
}

fn count_pass(stream: &[Vec<Piece>]) -> PassCounts {
    let mut counts = PassCounts::default();
    for doc in stream {
        for (i, piece) in doc.iter().enumerate() {
            let Piece::Unit(a) = piece else { continue };
            *counts.units.entry(a.surface.clone()).or_default() += 1;
            let Some((j, connector)) = candidate_at(doc, i) else { continue };
            let Piece::Unit(b) = &doc[j] else { unreachable!() };
            if a.arity() + b.arity() > MAX_ARITY {
                continue;
            }
            let entry = counts
                .pairs
                .entry(pair_key(a, connector, b))
                .or_insert_with(|| (a.components.iter().chain(&b.components).cloned().collect(), 0));
            entry.1 += 1;
        }
    }
    counts
}

fn score_pass(counts: &PassCounts, pass: u8, cfg: &PhraseConfig) -> HashMap<PairKey, PhraseStat> {
    let vocab_size = counts.units.len() as u64;
    let mut accepted = HashMap::new();
    for (key, (components, count_ab)) in &counts.pairs {
        let (left, connector, right) = key;
        let count_a = counts.units[left];
        let count_b = counts.units[right];
        let score = phrase_score(*count_ab, count_a, count_b, vocab_size, cfg.min_count)
            .expect("pair components are counted units");
        if score >= cfg.threshold {
            let phrase = match connector {
                Some(c) => format!("{left} {c} {right}"),
                None => format!("{left} {right}"),
            };
            accepted.insert(
                key.clone(),
                PhraseStat {
                    pass,
                    phrase,
                    left: left.clone(),
                    connector: connector.clone(),
                    right: right.clone(),
                    components: components.clone(),
                    count_ab: *count_ab,
                    count_a,
                    count_b,
                    vocab_size,
                    score,
                },
            );
        }
    }
    accepted
}

fn apply_pass(doc: &[Piece], accepted: &HashMap<PairKey, PhraseStat>) -> Vec<Piece> {
    let mut out = Vec::with_capacity(doc.len());
    let mut i = 0;
    while i < doc.len() {
        if let Piece::Unit(a) = &doc[i] {
            if let Some((j, connector)) = candidate_at(doc, i) {
                let Piece::Unit(b) = &doc[j] else { unreachable!() };
                if a.arity() + b.arity() <= MAX_ARITY
                    && accepted.contains_key(&pair_key(a, connector, b))
                {
                    out.push(Piece::Unit(join(a, connector, b)));
                    i = j + 1;
                    continue;
                }
            }
        }
        out.push(doc[i].clone());
        i += 1;
    }
    out
}

/// The two accepted-phrase tables, used to segment any document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseModel {
    pub passes: [HashMap<PairKey, PhraseStat>; 2],
    pub connectors: HashSet<String>,
}

impl PhraseModel {
    pub fn segment_pieces(&self, tokens: &[Token]) -> Vec<Piece> {
        let first = apply_pass(&pieces(tokens, &self.connectors), &self.passes[0]);
        apply_pass(&first, &self.passes[1])
    }

    /// Units of a segmented document, connectors and barriers dropped.
    pub fn segment(&self, tokens: &[Token]) -> Vec<Unit> {
        self.segment_pieces(tokens)
            .into_iter()
            .filter_map(|p| match p {
                Piece::Unit(u) => Some(u),
                _ => None,
            })
            .collect()
    }

    pub fn accepted(&self) -> impl Iterator<Item = &PhraseStat> {
        self.passes.iter().flat_map(|p| p.values())
    }

    /// Accepted phrase with the given joined surface, if any.
    pub fn find(&self, phrase: &str) -> Option<&PhraseStat> {
        self.accepted().find(|s| s.phrase == phrase)
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut rows: Vec<&PhraseStat> = self.accepted().collect();
        rows.sort_by(|a, b| (a.pass, &a.phrase).cmp(&(b.pass, &b.phrase)));
        let io = |e| Error::io(path, e);
        writeln!(w, "pass\tphrase\tleft\tconnector\tright\tcomponents\tcount_ab\tcount_a\tcount_b\tvocab_size\tscore").map_err(io)?;
        for r in rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.pass,
                r.phrase,
                r.left,
                r.connector.as_deref().unwrap_or(""),
                r.right,
                r.components.join(" "),
                r.count_ab,
                r.count_a,
                r.count_b,
                r.vocab_size,
                r.score
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_tsv(path: &Path, connectors: HashSet<String>) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut model = PhraseModel {
            connectors,
            ..Default::default()
        };
        for (n, line) in BufReader::new(file).lines().enumerate().skip(1) {
            let line = line.map_err(|e| Error::io(path, e))?;
            let loc = || format!("{}:{}", path.display(), n + 1);
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 11 {
                return Err(Error::parse(loc(), "expected 11 columns"));
            }
            let num = |s: &str| s.parse::<u64>().map_err(|e| Error::parse(loc(), e));
            let pass: u8 = f[0].parse().map_err(|e| Error::parse(loc(), e))?;
            if !(1..=2).contains(&pass) {
                return Err(Error::parse(loc(), "pass must be 1 or 2"));
            }
            let stat = PhraseStat {
                pass,
                phrase: f[1].to_string(),
                left: f[2].to_string(),
                connector: (!f[3].is_empty()).then(|| f[3].to_string()),
                right: f[4].to_string(),
                components: f[5].split(' ').map(str::to_string).collect(),
                count_ab: num(f[6])?,
                count_a: num(f[7])?,
                count_b: num(f[8])?,
                vocab_size: num(f[9])?,
                score: f[10].parse().map_err(|e| Error::parse(loc(), e))?,
            };
            let key = (stat.left.clone(), stat.connector.clone(), stat.right.clone());
            model.passes[pass as usize - 1].insert(key, stat);
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub components: Vec<String>,
    pub count: u64,
}

impl VocabEntry {
    pub fn arity(&self) -> usize {
        self.components.len()
    }
}

/// Corpus vocabulary: n-gram key (space-joined surface) to corpus-wide count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    pub entries: BTreeMap<String, VocabEntry>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&VocabEntry> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Number of entries per arity, index 0 = unigrams.
    pub fn arity_counts(&self) -> [usize; MAX_ARITY] {
        let mut out = [0; MAX_ARITY];
        for e in self.entries.values() {
            out[e.arity() - 1] += 1;
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "key\tarity\tcount\tcomponents").map_err(io)?;
        for (k, e) in &self.entries {
            writeln!(w, "{}\t{}\t{}\t{}", k, e.arity(), e.count, e.components.join(" ")).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut vocab = Vocabulary::default();
        for (n, line) in BufReader::new(file).lines().enumerate().skip(1) {
            let line = line.map_err(|e| Error::io(path, e))?;
            let loc = || format!("{}:{}", path.display(), n + 1);
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::parse(loc(), "expected 4 columns"));
            }
            let arity: usize = f[1].parse().map_err(|e| Error::parse(loc(), e))?;
            let components: Vec<String> = f[3].split(' ').map(str::to_string).collect();
            if components.len() != arity {
                return Err(Error::parse(loc(), "arity does not match components"));
            }
            let count = f[2].parse().map_err(|e| Error::parse(loc(), e))?;
            vocab.entries.insert(f[0].to_string(), VocabEntry { components, count });
        }
        Ok(vocab)
    }
}

/// Count a segmented document: each unit increments its own key and, for
/// phrases, each of its components.
pub fn count_units<'a>(units: impl IntoIterator<Item = &'a Unit>, counts: &mut HashMap<String, u64>) {
    for u in units {
        *counts.entry(u.surface.clone()).or_default() += 1;
        if u.arity() > 1 {
            for c in &u.components {
                *counts.entry(c.clone()).or_default() += 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub vocabulary: Vocabulary,
    pub model: PhraseModel,
}

pub fn detect_phrases(corpus: &[Vec<Token>], cfg: &PhraseConfig) -> Result<Detection> {
    cfg.validate()?;
    let connectors = cfg.connector_set();
    let stream0: Vec<Vec<Piece>> = corpus.iter().map(|t| pieces(t, &connectors)).collect();

    let pass1 = score_pass(&count_pass(&stream0), 1, cfg);
    let stream1: Vec<Vec<Piece>> = stream0.iter().map(|d| apply_pass(d, &pass1)).collect();
    let pass2 = score_pass(&count_pass(&stream1), 2, cfg);
    let stream2 = stream1.iter().map(|d| apply_pass(d, &pass2));

    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut components: HashMap<String, Vec<String>> = HashMap::new();
    for doc in stream2 {
        let units: Vec<&Unit> = doc
            .iter()
            .filter_map(|p| match p {
                Piece::Unit(u) => Some(u),
                _ => None,
            })
            .collect();
        for u in &units {
            if !components.contains_key(&u.surface) {
                components.insert(u.surface.clone(), u.components.clone());
            }
            for c in &u.components {
                if !components.contains_key(c) {
                    components.insert(c.clone(), vec![c.clone()]);
                }
            }
        }
        count_units(units, &mut counts);
    }

    let mut kept: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= cfg.min_count)
        .collect();
    if kept.len() > cfg.max_vocab {
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(cfg.max_vocab);
    }
    let entries = kept
        .into_iter()
        .map(|(k, count)| {
            let comps = components.remove(&k).expect("counted key has components");
            (k, VocabEntry { components: comps, count })
        })
        .collect();
    Ok(Detection {
        vocabulary: Vocabulary { entries },
        model: PhraseModel {
            passes: [pass1, pass2],
            connectors,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::tokenize;

    /// Repeated lines plus one document of distinct filler words, so the
    /// unigram vocabulary is large enough for repeated pairs to clear the
    /// default threshold.
    fn corpus(lines: &[&str], times: usize) -> Vec<Vec<Token>> {
        let filler: Vec<String> = (0..3000).map(|i| format!("filler{i}")).collect();
        (0..times)
            .flat_map(|_| lines.iter().map(|l| tokenize(l)))
            .chain(std::iter::once(tokenize(&filler.join(" "))))
            .collect()
    }

    #[test]
    fn score_examples() {
        assert_eq!(phrase_score(25, 20, 30, 1000, 10).unwrap(), 25.0);
        assert_eq!(phrase_score(10, 20, 30, 1000, 10).unwrap(), 0.0);
        assert_eq!(phrase_score(5, 1, 1, 100, 10).unwrap(), -500.0);
        assert!(phrase_score(5, 0, 1, 100, 10).is_err());
    }

    #[test]
    fn new_york_is_a_bigram() {
        let c = corpus(&["new york is big"], 200);
        let d = detect_phrases(&c, &PhraseConfig::default()).unwrap();
        let e = d.vocabulary.get("new york").expect("bigram accepted");
        assert_eq!(e.arity(), 2);
        assert_eq!(e.count, 200);
        assert_eq!(d.vocabulary.get("new").unwrap().count, 200);

        let strict = PhraseConfig {
            threshold: 1e9,
            ..Default::default()
        };
        let d = detect_phrases(&c, &strict).unwrap();
        assert_eq!(d.vocabulary.arity_counts()[1], 0);
    }

    #[test]
    fn connector_absorbed_into_phrase() {
        let c = corpus(&["game of thrones"], 50);
        let d = detect_phrases(&c, &PhraseConfig::default()).unwrap();
        let e = d.vocabulary.get("game of thrones").expect("phrase recorded");
        assert_eq!(e.components, ["game", "thrones"]);
        assert!(!d.vocabulary.contains("of"));
        let stat = d.model.find("game of thrones").unwrap();
        assert_eq!(stat.pass, 1);
        assert_eq!((stat.count_ab, stat.count_a, stat.count_b), (50, 50, 50));
    }

    #[test]
    fn two_connectors_block_join() {
        let c = corpus(&["game of the thrones"], 50);
        let d = detect_phrases(&c, &PhraseConfig::default()).unwrap();
        assert_eq!(d.vocabulary.arity_counts()[1], 0);
    }

    #[test]
    fn trigram_from_second_pass() {
        let c = corpus(&["new york city", "big apple pie rocks hard"], 100);
        let d = detect_phrases(&c, &PhraseConfig::default()).unwrap();
        let tri = d.vocabulary.get("new york city").expect("trigram");
        assert_eq!(tri.components, ["new", "york", "city"]);
        assert_eq!(d.model.find("new york city").unwrap().left, "new york");
        // "big apple" and "pie rocks" join in pass 1; a 4-gram is never formed.
        assert!(d.vocabulary.contains("big apple"));
        assert!(d.vocabulary.entries.values().all(|e| e.arity() <= 3));
    }

    #[test]
    fn empty_corpus() {
        let d = detect_phrases(&[], &PhraseConfig::default()).unwrap();
        assert!(d.vocabulary.is_empty());
    }

    #[test]
    fn tsv_round_trip() {
        let c = corpus(&["game of thrones", "new york city"], 60);
        let d = detect_phrases(&c, &PhraseConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        d.vocabulary.write_tsv(&dir.path().join("v.tsv")).unwrap();
        d.model.write_tsv(&dir.path().join("p.tsv")).unwrap();
        assert_eq!(Vocabulary::read_tsv(&dir.path().join("v.tsv")).unwrap(), d.vocabulary);
        let model = PhraseModel::read_tsv(&dir.path().join("p.tsv"), d.model.connectors.clone()).unwrap();
        assert_eq!(model, d.model);
    }
}
