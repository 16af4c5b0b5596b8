//! The pipeline configuration document and its fingerprint.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embed::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::ingest::IngestConfig;
use crate::phrases::PhraseConfig;
use crate::scores::ScoreConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_id: String,
    pub seed: u64,
    /// Corpus NDJSON, relative to the work directory.
    pub input: PathBuf,
    /// Optional score sidecar NDJSON, relative to the work directory.
    pub scores_sidecar: Option<PathBuf>,
    /// Store build timestamp (RFC 3339). When unset, `SOURCE_DATE_EPOCH` is
    /// used, then the latest document timestamp.
    pub built_at: Option<String>,
    pub ingest: IngestConfig,
    pub phrases: PhraseConfig,
    pub embedding: EmbeddingConfig,
    pub scores: ScoreConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_id: "corpus".into(),
            seed: 42,
            input: PathBuf::from("corpus.ndjson"),
            scores_sidecar: None,
            built_at: None,
            ingest: IngestConfig::default(),
            phrases: PhraseConfig::default(),
            embedding: EmbeddingConfig::default(),
            scores: ScoreConfig::default(),
        }
        .with_seed(42)
    }
}

impl PipelineConfig {
    /// Set the run seed and propagate it to the seeded stages.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.embedding.seed = seed;
        self.scores.seed = seed;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let seed = cfg.seed;
        let cfg = cfg.with_seed(seed);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus_id.is_empty() {
            return Err(Error::Config("corpus_id must not be empty".into()));
        }
        if let Some(ts) = &self.built_at {
            chrono::DateTime::parse_from_rfc3339(ts).map_err(|e| Error::Config(format!("built_at: {e}")))?;
        }
        self.ingest.validate()?;
        self.phrases.validate()?;
        self.embedding.validate()?;
        self.scores.validate()
    }

    /// SHA-256 over the canonical JSON form of the whole configuration.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// SHA-256 over the named top-level fields only, in the order given.
    pub fn section_fingerprint(&self, fields: &[&str]) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let picked: Vec<(&str, &serde_json::Value)> = fields
            .iter()
            .map(|f| (*f, value.get(f).unwrap_or_else(|| panic!("no config field {f}"))))
            .collect();
        let json = serde_json::to_vec(&picked).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section_fingerprints_track_only_their_fields() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.phrases.threshold = 25.0;
        assert_eq!(a.section_fingerprint(&["input", "ingest"]), b.section_fingerprint(&["input", "ingest"]));
        assert_ne!(a.section_fingerprint(&["ingest", "phrases"]), b.section_fingerprint(&["ingest", "phrases"]));
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn toml_round_trip_and_fingerprint() {
        let cfg = PipelineConfig::default().with_seed(7);
        let back = PipelineConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.fingerprint(), cfg.fingerprint());
        assert_eq!(back.embedding.seed, 7);
    }

    #[test]
    fn fingerprint_tracks_every_stage() {
        let base = PipelineConfig::default();
        let mut a = base.clone();
        a.phrases.threshold = 12.0;
        let mut b = base.clone();
        b.scores.floor = 11;
        let c = base.clone().with_seed(1);
        let mut d = base.clone();
        d.ingest.top_author_fraction = 0.0;
        for other in [a, b, c, d] {
            assert_ne!(other.fingerprint(), base.fingerprint());
        }
        assert_eq!(PipelineConfig::default().fingerprint(), base.fingerprint());
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = PipelineConfig::from_toml("seed = 3\n[phrases]\nthreshold = 5.0\n").unwrap();
        assert_eq!(cfg.phrases.threshold, 5.0);
        assert_eq!(cfg.phrases.min_count, 10);
        assert_eq!(cfg.scores.seed, 3);
        assert!(PipelineConfig::from_toml("bogus = 1\n").is_err());
        assert!(PipelineConfig::from_toml("[embedding]\nseed = 1\n").is_err());
    }
}
