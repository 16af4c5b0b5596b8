//! Exhaustive phrase scorer used as an oracle for `detect_phrases`.
//!
//! Works on plain strings. Every pair of positions `(i, j)` in a document is
//! examined; it is a candidate when both are units and everything strictly
//! between them is exactly zero or one connector.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lexitrend_core::tokenize::{tokenize, Token, TokenKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub enum Item {
    Unit(String, Vec<String>),
    Conn(String),
    Bar,
}

/// `(left, connector, right)` to `(count_ab, count_a, count_b, vocab_size, score)`.
pub type Accepted = BTreeMap<(String, Option<String>, String), (u64, u64, u64, u64, f64)>;

pub struct OracleResult {
    pub passes: [Accepted; 2],
    pub vocab: BTreeMap<String, (Vec<String>, u64)>,
    /// Each document after both joins.
    pub docs: Vec<Vec<Item>>,
    /// Unigram units per document before joining.
    pub unigrams: Vec<u64>,
}

pub fn items(tokens: &[Token], connectors: &BTreeSet<String>) -> Vec<Item> {
    tokens
        .iter()
        .map(|t| match t.kind {
            TokenKind::Punct => Item::Bar,
            TokenKind::Hashtag | TokenKind::Mention => Item::Unit(t.lowercased.clone(), vec![t.lowercased.clone()]),
            _ if connectors.contains(&t.lowercased) => Item::Conn(t.lowercased.clone()),
            _ => Item::Unit(t.lowercased.clone(), vec![t.lowercased.clone()]),
        })
        .collect()
}

fn pair(doc: &[Item], i: usize, j: usize) -> Option<(&str, &[String], Option<&str>, &str, &[String])> {
    let (Item::Unit(a, ca), Item::Unit(b, cb)) = (&doc[i], &doc[j]) else { return None };
    if ca.len() + cb.len() > 3 {
        return None;
    }
    let between = &doc[i + 1..j];
    match between {
        [] => Some((a, ca, None, b, cb)),
        [Item::Conn(c)] => Some((a, ca, Some(c.as_str()), b, cb)),
        _ => None,
    }
}

fn score_pass(docs: &[Vec<Item>], threshold: f64, min_count: u64) -> Accepted {
    let mut unit_counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut pair_counts: BTreeMap<(String, Option<String>, String), u64> = BTreeMap::new();
    for doc in docs {
        for it in doc {
            if let Item::Unit(s, _) = it {
                *unit_counts.entry(s).or_insert(0) += 1;
            }
        }
        for i in 0..doc.len() {
            for j in i + 1..doc.len() {
                if let Some((a, _, c, b, _)) = pair(doc, i, j) {
                    *pair_counts.entry((a.to_string(), c.map(str::to_string), b.to_string())).or_insert(0) += 1;
                }
            }
        }
    }
    let v = unit_counts.len() as u64;
    let mut out = Accepted::new();
    for (key, ab) in pair_counts {
        let a = unit_counts[key.0.as_str()];
        let b = unit_counts[key.2.as_str()];
        let score = (ab as f64 - min_count as f64) * v as f64 / (a as f64 * b as f64);
        if score >= threshold {
            out.insert(key, (ab, a, b, v, score));
        }
    }
    out
}

fn join_pass(doc: &[Item], accepted: &Accepted) -> Vec<Item> {
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < doc.len() {
        for j in (i + 1)..doc.len().min(i + 3) {
            if let Some((a, ca, c, b, cb)) = pair(doc, i, j) {
                if accepted.contains_key(&(a.to_string(), c.map(str::to_string), b.to_string())) {
                    let surface = match c {
                        Some(c) => format!("{a} {c} {b}"),
                        None => format!("{a} {b}"),
                    };
                    out.push(Item::Unit(surface, ca.iter().chain(cb).cloned().collect()));
                    i = j + 1;
                    continue 'outer;
                }
            }
        }
        out.push(doc[i].clone());
        i += 1;
    }
    out
}

pub fn detect(corpus: &[Vec<Token>], connectors: &BTreeSet<String>, threshold: f64, min_count: u64) -> OracleResult {
    let docs0: Vec<Vec<Item>> = corpus.iter().map(|t| items(t, connectors)).collect();
    let p1 = score_pass(&docs0, threshold, min_count);
    let docs1: Vec<Vec<Item>> = docs0.iter().map(|d| join_pass(d, &p1)).collect();
    let p2 = score_pass(&docs1, threshold, min_count);
    let docs2: Vec<Vec<Item>> = docs1.iter().map(|d| join_pass(d, &p2)).collect();

    let mut counts: BTreeMap<String, (Vec<String>, u64)> = BTreeMap::new();
    for doc in &docs2 {
        for it in doc {
            let Item::Unit(s, comps) = it else { continue };
            counts.entry(s.clone()).or_insert_with(|| (comps.clone(), 0)).1 += 1;
            if comps.len() > 1 {
                for c in comps {
                    counts.entry(c.clone()).or_insert_with(|| (vec![c.clone()], 0)).1 += 1;
                }
            }
        }
    }
    counts.retain(|_, (_, n)| *n >= min_count);
    let unigrams = docs0
        .iter()
        .map(|d| d.iter().filter(|it| matches!(it, Item::Unit(..))).count() as u64)
        .collect();
    OracleResult {
        passes: [p1, p2],
        vocab: counts,
        docs: docs2,
        unigrams,
    }
}

const WORDS: &[&str] = &["new", "york", "city", "game", "thrones", "joe", "biden", "big", "#covid", "@user", ":)", "2020"];
const NOISE: &[&str] = &[
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo", "lima",
    "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
    "xray", "yankee", "zulu", "red", "blue", "green", "cyan", "pink", "gray", "black", "white", "amber", "olive",
];
const PATTERNS: &[&str] = &["new york", "new york city", "game of thrones", "joe biden", "the game", "new york city of joe"];

/// Random tweet-like corpus mixing fixed collocations with noise.
pub fn random_corpus(seed: u64) -> Vec<Vec<Token>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = rng.random_range(20..120);
    (0..docs)
        .map(|_| {
            let len = rng.random_range(1..14);
            let mut parts: Vec<&str> = Vec::new();
            while parts.len() < len {
                let r: f64 = rng.random();
                if r < 0.25 {
                    parts.push(PATTERNS[rng.random_range(0..PATTERNS.len())]);
                } else if r < 0.40 {
                    parts.push(["of", "the", "and"][rng.random_range(0..3)]);
                } else if r < 0.47 {
                    parts.push([",", "!", "."][rng.random_range(0..3)]);
                } else if r < 0.75 {
                    parts.push(WORDS[rng.random_range(0..WORDS.len())]);
                } else {
                    parts.push(NOISE[rng.random_range(0..NOISE.len())]);
                }
            }
            tokenize(&parts.join(" "))
        })
        .collect()
}
