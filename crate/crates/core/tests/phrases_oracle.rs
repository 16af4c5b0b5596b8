mod support {
    pub mod phrase_oracle;
}

use std::collections::{BTreeMap, BTreeSet};

use lexitrend_core::phrases::{detect_phrases, Detection, PhraseConfig};
use lexitrend_core::tokenize::{tokenize, Token};
use support::phrase_oracle::{self, random_corpus, Accepted, OracleResult};

fn config(threshold: f64, min_count: u64) -> PhraseConfig {
    PhraseConfig {
        min_count,
        threshold,
        connectors: ["of", "the", "and"].iter().map(|s| s.to_string()).collect(),
        ..PhraseConfig::default()
    }
}

fn accepted_of(d: &Detection, pass: usize) -> Accepted {
    d.model.passes[pass]
        .iter()
        .map(|(k, s)| (k.clone(), (s.count_ab, s.count_a, s.count_b, s.vocab_size, s.score)))
        .collect()
}

fn vocab_of(d: &Detection) -> BTreeMap<String, (Vec<String>, u64)> {
    d.vocabulary.entries.iter().map(|(k, e)| (k.clone(), (e.components.clone(), e.count))).collect()
}

fn assert_equivalent(corpus: &[Vec<Token>], cfg: &PhraseConfig, label: &str) {
    let got = detect_phrases(corpus, cfg).unwrap();
    let want: OracleResult = phrase_oracle::detect(corpus, &cfg.connectors, cfg.threshold, cfg.min_count);
    for pass in 0..2 {
        assert_eq!(accepted_of(&got, pass), want.passes[pass], "{label}: pass {}", pass + 1);
    }
    assert_eq!(vocab_of(&got), want.vocab, "{label}: vocabulary");
}

#[test]
fn matches_exhaustive_scorer_on_random_corpora() {
    let mut with_trigrams = 0;
    for seed in 0..50 {
        let corpus = random_corpus(seed);
        let tokens: usize = corpus.iter().map(Vec::len).sum();
        assert!(tokens <= 10_000);
        for (threshold, min_count) in [(0.5, 1), (2.0, 2), (10.0, 3)] {
            let cfg = config(threshold, min_count);
            assert_equivalent(&corpus, &cfg, &format!("seed {seed} threshold {threshold}"));
            let d = detect_phrases(&corpus, &cfg).unwrap();
            with_trigrams += d.vocabulary.arity_counts()[2].min(1);
        }
    }
    // the generator must actually exercise pass 2
    assert!(with_trigrams > 20, "only {with_trigrams} runs produced trigrams");
}

#[test]
fn connector_absorption_example() {
    let mut corpus: Vec<Vec<Token>> = (0..50).map(|_| tokenize("game of thrones")).collect();
    corpus.push(tokenize(&(0..1000).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")));
    let cfg = PhraseConfig {
        min_count: 10,
        threshold: 10.0,
        ..PhraseConfig::default()
    };
    assert_equivalent(&corpus, &cfg, "game of thrones");
    let d = detect_phrases(&corpus, &cfg).unwrap();
    let e = d.vocabulary.get("game of thrones").expect("phrase kept");
    assert_eq!(e.arity(), 2);
    assert_eq!(e.components, vec!["game", "thrones"]);
    assert_eq!(e.count, 50);
    assert_eq!(d.vocabulary.get("game").unwrap().count, 50);
    assert!(!d.vocabulary.contains("of"));
}

#[test]
fn new_york_example() {
    let corpus: Vec<Vec<Token>> = (0..200).map(|_| tokenize("new york is big")).collect();
    let cfg = config(10.0, 10);
    // (200 - 10) * 4 / (200 * 200) is below 10, so a wider vocabulary is needed
    // for the bigram to clear the threshold
    assert!(!detect_phrases(&corpus, &cfg).unwrap().vocabulary.contains("new york"));
    let mut wide = corpus.clone();
    wide.push(tokenize(&(0..20_000).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")));
    assert_equivalent(&wide[..200], &cfg, "new york small");
    let d = detect_phrases(&wide, &cfg).unwrap();
    assert!(d.vocabulary.contains("new york"));
    assert!(detect_phrases(&wide, &config(1e9, 10)).unwrap().vocabulary.arity_counts()[1..] == [0, 0]);
}

/// Phrase keys accepted by pass 1 and by either pass.
fn accepted_sets(corpus: &[Vec<Token>], threshold: f64) -> (BTreeSet<String>, BTreeSet<String>) {
    let d = detect_phrases(corpus, &config(threshold, 2)).unwrap();
    let p1 = d.model.passes[0].values().map(|s| s.phrase.clone()).collect();
    let all = d.model.accepted().map(|s| s.phrase.clone()).collect();
    (p1, all)
}

#[test]
fn raising_threshold_never_adds_phrases() {
    let thresholds = [0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0];
    for seed in 100..150 {
        let corpus = random_corpus(seed);
        let sets: Vec<_> = thresholds.iter().map(|&t| accepted_sets(&corpus, t)).collect();
        for w in sets.windows(2) {
            assert!(w[1].0.is_subset(&w[0].0), "seed {seed}: pass 1 grew");
            assert!(w[1].1.is_subset(&w[0].1), "seed {seed}: accepted set grew");
        }
    }
}

#[test]
fn stored_scores_recompute_from_pass_counts() {
    for seed in 200..210 {
        let corpus = random_corpus(seed);
        let cfg = config(1.0, 2);
        let d = detect_phrases(&corpus, &cfg).unwrap();
        for s in d.model.accepted() {
            let recomputed = (s.count_ab as f64 - 2.0) * s.vocab_size as f64 / (s.count_a as f64 * s.count_b as f64);
            assert_eq!(recomputed, s.score);
            assert!(s.score >= cfg.threshold);
        }
    }
}
