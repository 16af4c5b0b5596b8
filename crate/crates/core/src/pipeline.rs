//! Pipeline stages over a work directory.
//!
//! ```text
//! ingest -> vocab -> freq ---------------------\
//!                 -> embed compass -> slices -> distances -> store -> export
//!                 -> scores -------------------/
//! ```
//!
//! Each stage writes a stamp holding the fingerprint of the config fields it
//! depends on, upstream fields included; a stage refuses to run when an
//! upstream stamp is missing or was written under different values. The
//! store carries the fingerprint of the whole config.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::bucket::TimeBucket;
use crate::config::PipelineConfig;
use crate::embed::{
    balance_sample, build_distance_series, train_compass, train_slice, CompassModel, DistanceSeries,
    EmbeddingConfig, EmbeddingMatrix, SliceEmbeddings,
};
use crate::error::{Error, Result};
use crate::freq::FrequencyTable;
use crate::ingest::{ingest, read_ndjson, write_ndjson, Document, IngestManifest, RawDocument};
use crate::phrases::{detect_phrases, PhraseModel, Unit, Vocabulary};
use crate::report::corpus_report;
use crate::scores::{aggregate_scores, read_sidecar, resolve_scores, DocScores, ScoreTables};
use crate::store::interchange::export_csv;
use crate::store::{ManifestMeta, Store, StoreBuilder, StoreManifest};
use crate::tokenize::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Vocab,
    Freq,
    EmbedCompass,
    EmbedSlices,
    EmbedDistances,
    Scores,
    Store,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Vocab => "vocab",
            Stage::Freq => "freq",
            Stage::EmbedCompass => "embed compass",
            Stage::EmbedSlices => "embed slices",
            Stage::EmbedDistances => "embed distances",
            Stage::Scores => "scores",
            Stage::Store => "store",
        }
    }

    /// Top-level config fields this stage's output depends on.
    pub fn config_fields(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["input", "ingest"],
            Stage::Vocab | Stage::Freq => &["input", "ingest", "phrases"],
            Stage::EmbedCompass | Stage::EmbedSlices | Stage::EmbedDistances => {
                &["input", "ingest", "phrases", "seed", "embedding"]
            }
            Stage::Scores => &["input", "ingest", "phrases", "seed", "scores_sidecar", "scores"],
            Stage::Store => &[
                "corpus_id",
                "seed",
                "input",
                "scores_sidecar",
                "built_at",
                "ingest",
                "phrases",
                "embedding",
                "scores",
            ],
        }
    }

    fn stamp(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest/stamp.json",
            Stage::Vocab => "vocab/stamp.json",
            Stage::Freq => "freq/stamp.json",
            Stage::EmbedCompass => "embed/compass/stamp.json",
            Stage::EmbedSlices => "embed/slices/stamp.json",
            Stage::EmbedDistances => "embed/stamp.json",
            Stage::Scores => "scores/stamp.json",
            Stage::Store => "store/stamp.json",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Stamp {
    stage: String,
    fingerprint: String,
}

/// Segment one document's text into vocabulary units.
pub fn segment_text(model: &PhraseModel, text: &str) -> Vec<Unit> {
    model.segment(&tokenize(text))
}

/// Unit surfaces per document, the token streams used for embeddings.
pub fn embedding_sentences(docs: &[Document], model: &PhraseModel) -> Vec<(TimeBucket, Vec<String>)> {
    docs.iter()
        .map(|d| (d.bucket, segment_text(model, &d.text).into_iter().map(|u| u.surface).collect()))
        .collect()
}

/// Balanced sampling, compass training and one slice per bucket.
pub fn train_embeddings(
    sentences: &[(TimeBucket, Vec<String>)],
    cfg: &EmbeddingConfig,
) -> Result<(CompassModel, Vec<SliceEmbeddings>)> {
    let picked = balance_sample(sentences, |s| s.0, cfg.monthly_quota, cfg.seed);
    let sample: Vec<&(TimeBucket, Vec<String>)> = picked.iter().map(|&i| &sentences[i]).collect();
    let all: Vec<Vec<&str>> = sample.iter().map(|s| s.1.iter().map(String::as_str).collect()).collect();
    let compass = train_compass(&all, cfg)?;
    let mut by_bucket: BTreeMap<TimeBucket, Vec<Vec<&str>>> = BTreeMap::new();
    for (s, words) in sample.iter().zip(all) {
        by_bucket.entry(s.0).or_default().push(words);
    }
    let slices = by_bucket
        .into_iter()
        .map(|(b, docs)| train_slice(b, &docs, &compass, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok((compass, slices))
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::parse(path.display().to_string(), e)
}

pub fn write_distances(path: &Path, series: &BTreeMap<String, DistanceSeries>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["key", "anchor", "bucket", "distance"]).map_err(|e| csv_err(path, e))?;
    for s in series.values() {
        let anchor = s.anchor.map_or_else(String::new, |a| a.to_string());
        for (b, d) in &s.points {
            w.write_record([s.key.clone(), anchor.clone(), b.to_string(), d.to_string()])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_distances(path: &Path) -> Result<BTreeMap<String, DistanceSeries>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out: BTreeMap<String, DistanceSeries> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != 4 {
            return Err(csv_err(path, "expected 4 columns"));
        }
        let anchor = if rec[1].is_empty() { None } else { Some(rec[1].parse()?) };
        let bucket: TimeBucket = rec[2].parse()?;
        let d: f64 = rec[3].parse().map_err(|e| csv_err(path, e))?;
        out.entry(rec[0].to_string())
            .or_insert_with(|| DistanceSeries {
                key: rec[0].to_string(),
                anchor,
                points: BTreeMap::new(),
            })
            .points
            .insert(bucket, d);
    }
    Ok(out)
}

fn bucket_file(b: TimeBucket) -> String {
    format!("{b}.emb")
}

/// Build timestamp: explicit config, else `SOURCE_DATE_EPOCH`, else the
/// latest document timestamp (epoch for an empty corpus).
pub fn build_timestamp(cfg: &PipelineConfig, docs: &[Document]) -> Result<String> {
    if let Some(ts) = &cfg.built_at {
        return Ok(ts.clone());
    }
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        let secs: i64 = epoch
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("SOURCE_DATE_EPOCH is not an integer: {epoch:?}")))?;
        let ts = DateTime::<Utc>::from_timestamp(secs, 0)
            .ok_or_else(|| Error::Config("SOURCE_DATE_EPOCH out of range".into()))?;
        return Ok(ts.to_rfc3339_opts(SecondsFormat::Secs, true));
    }
    let latest = docs.iter().map(|d| d.timestamp).max().unwrap_or(DateTime::<Utc>::UNIX_EPOCH);
    Ok(latest.to_rfc3339_opts(SecondsFormat::Secs, true))
}

pub struct Workdir {
    pub root: PathBuf,
    pub cfg: PipelineConfig,
    pub fingerprint: String,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>, cfg: PipelineConfig) -> Self {
        let fingerprint = cfg.fingerprint();
        Workdir {
            root: root.into(),
            cfg,
            fingerprint,
        }
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    fn dir(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    pub fn stage_fingerprint(&self, stage: Stage) -> String {
        self.cfg.section_fingerprint(stage.config_fields())
    }

    fn stamp(&self, stage: Stage) -> Result<()> {
        let path = self.path(stage.stamp());
        let stamp = Stamp {
            stage: stage.name().to_string(),
            fingerprint: self.stage_fingerprint(stage),
        };
        let json = serde_json::to_vec_pretty(&stamp).map_err(|e| csv_err(&path, e))?;
        fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    /// Fails unless `stage` completed under the current configuration.
    pub fn require(&self, stage: Stage) -> Result<()> {
        let path = self.path(stage.stamp());
        if !path.exists() {
            return Err(Error::MissingStage {
                stage: stage.name(),
                path,
            });
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let stamp: Stamp = serde_json::from_slice(&bytes).map_err(|e| csv_err(&path, e))?;
        let expected = self.stage_fingerprint(stage);
        if stamp.fingerprint != expected {
            return Err(Error::FingerprintMismatch {
                stage: stage.name(),
                expected,
                found: stamp.fingerprint,
            });
        }
        Ok(())
    }

    fn documents(&self) -> Result<Vec<Document>> {
        read_ndjson(&self.path("ingest/documents.ndjson"))
    }

    fn phrase_model(&self) -> Result<PhraseModel> {
        PhraseModel::read_tsv(&self.path("vocab/phrases.tsv"), self.cfg.phrases.connector_set())
    }

    fn vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::read_tsv(&self.path("vocab/vocabulary.tsv"))
    }

    pub fn ingest(&self) -> Result<IngestManifest> {
        let input = self.path(&self.cfg.input);
        let records: Vec<RawDocument> = read_ndjson(&input)?;
        let out = ingest(records, &self.cfg.ingest)?;
        let dir = self.dir("ingest")?;
        write_ndjson(&dir.join("documents.ndjson"), &out.documents)?;
        write_ndjson(&dir.join("embedding_view.ndjson"), &out.embedding_view)?;
        let path = dir.join("manifest.json");
        let json = serde_json::to_vec_pretty(&out.manifest).map_err(|e| csv_err(&path, e))?;
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        self.stamp(Stage::Ingest)?;
        Ok(out.manifest)
    }

    pub fn vocab(&self) -> Result<Vocabulary> {
        self.require(Stage::Ingest)?;
        let docs = self.documents()?;
        let tokens: Vec<_> = docs.iter().map(|d| tokenize(&d.text)).collect();
        let detection = detect_phrases(&tokens, &self.cfg.phrases)?;
        let dir = self.dir("vocab")?;
        detection.model.write_tsv(&dir.join("phrases.tsv"))?;
        detection.vocabulary.write_tsv(&dir.join("vocabulary.tsv"))?;
        self.stamp(Stage::Vocab)?;
        Ok(detection.vocabulary)
    }

    pub fn freq(&self) -> Result<FrequencyTable> {
        self.require(Stage::Vocab)?;
        let docs = self.documents()?;
        let model = self.phrase_model()?;
        let vocab = self.vocabulary()?;
        let units: Vec<(TimeBucket, Vec<Unit>)> =
            docs.iter().map(|d| (d.bucket, segment_text(&model, &d.text))).collect();
        let table = FrequencyTable::aggregate(units.iter().map(|(b, u)| (*b, u.as_slice())), &vocab);
        let dir = self.dir("freq")?;
        table.write_csv(&dir)?;
        self.stamp(Stage::Freq)?;
        Ok(table)
    }

    fn view_sentences(&self) -> Result<Vec<(TimeBucket, Vec<String>)>> {
        let view: Vec<Document> = read_ndjson(&self.path("ingest/embedding_view.ndjson"))?;
        Ok(embedding_sentences(&view, &self.phrase_model()?))
    }

    fn balanced(&self, sentences: &[(TimeBucket, Vec<String>)]) -> Vec<usize> {
        let e = &self.cfg.embedding;
        balance_sample(sentences, |s| s.0, e.monthly_quota, e.seed)
    }

    pub fn embed_compass(&self) -> Result<CompassModel> {
        self.require(Stage::Vocab)?;
        let sentences = self.view_sentences()?;
        let picked = self.balanced(&sentences);
        let sample: Vec<&Vec<String>> = picked.iter().map(|&i| &sentences[i].1).collect();
        let compass = train_compass(&sample.into_iter().cloned().collect::<Vec<_>>(), &self.cfg.embedding)?;
        let dir = self.dir("embed/compass")?;
        compass.target.write(&dir.join("target.emb"))?;
        compass.context.write(&dir.join("context.emb"))?;
        self.stamp(Stage::EmbedCompass)?;
        Ok(compass)
    }

    fn load_compass(&self) -> Result<CompassModel> {
        let target = EmbeddingMatrix::read(&self.path("embed/compass/target.emb"))?;
        let context = EmbeddingMatrix::read(&self.path("embed/compass/context.emb"))?;
        Ok(CompassModel {
            target,
            context,
            counts: Vec::new(),
        })
    }

    pub fn embed_slices(&self) -> Result<Vec<TimeBucket>> {
        self.require(Stage::EmbedCompass)?;
        let compass = self.load_compass()?;
        let sentences = self.view_sentences()?;
        let mut by_bucket: BTreeMap<TimeBucket, Vec<&Vec<String>>> = BTreeMap::new();
        for i in self.balanced(&sentences) {
            by_bucket.entry(sentences[i].0).or_default().push(&sentences[i].1);
        }
        let dir = self.path("embed/slices");
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let dir = self.dir("embed/slices")?;
        for (bucket, docs) in &by_bucket {
            let docs: Vec<Vec<String>> = docs.iter().map(|d| (*d).clone()).collect();
            let slice = train_slice(*bucket, &docs, &compass, &self.cfg.embedding)?;
            slice.target.write(&dir.join(bucket_file(*bucket)))?;
        }
        self.stamp(Stage::EmbedSlices)?;
        Ok(by_bucket.into_keys().collect())
    }

    fn load_slices(&self) -> Result<Vec<SliceEmbeddings>> {
        let dir = self.path("embed/slices");
        let mut out = Vec::new();
        let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
            let Some(label) = name.strip_suffix(".emb") else { continue };
            out.push(SliceEmbeddings {
                bucket: label.parse()?,
                target: EmbeddingMatrix::read(&path)?,
            });
        }
        out.sort_by_key(|s| s.bucket);
        Ok(out)
    }

    pub fn embed_distances(&self) -> Result<BTreeMap<String, DistanceSeries>> {
        self.require(Stage::EmbedSlices)?;
        let vocab = self.vocabulary()?;
        let slices = self.load_slices()?;
        let series = build_distance_series(&slices, vocab.entries.keys().map(String::as_str));
        let series: BTreeMap<String, DistanceSeries> = series.into_iter().filter(|(_, s)| !s.points.is_empty()).collect();
        write_distances(&self.path("embed/distances.csv"), &series)?;
        self.stamp(Stage::EmbedDistances)?;
        Ok(series)
    }

    pub fn embed(&self) -> Result<BTreeMap<String, DistanceSeries>> {
        self.embed_compass()?;
        self.embed_slices()?;
        self.embed_distances()
    }

    pub fn scores(&self) -> Result<ScoreTables> {
        self.require(Stage::Vocab)?;
        let docs = self.documents()?;
        let model = self.phrase_model()?;
        let vocab = self.vocabulary()?;
        let sidecar = match &self.cfg.scores_sidecar {
            Some(p) => read_sidecar(&self.path(p))?,
            None => Default::default(),
        };
        let mut units = Vec::with_capacity(docs.len());
        let mut scores = Vec::with_capacity(docs.len());
        for d in &docs {
            let tokens = tokenize(&d.text);
            scores.push(resolve_scores(d, &tokens, &sidecar, &self.cfg.scores.lexicon)?);
            units.push(model.segment(&tokens));
        }
        let tables = aggregate_scores(
            docs.iter()
                .zip(&units)
                .zip(&scores)
                .map(|((d, u), s): ((&Document, &Vec<Unit>), &DocScores)| (d.bucket, u.as_slice(), s)),
            &vocab,
            &self.cfg.scores,
        );
        let dir = self.dir("scores")?;
        tables.write_csv(&dir)?;
        self.stamp(Stage::Scores)?;
        Ok(tables)
    }

    pub fn store(&self) -> Result<StoreManifest> {
        for s in [Stage::Freq, Stage::EmbedDistances, Stage::Scores] {
            self.require(s)?;
        }
        let freq = FrequencyTable::read_csv(&self.path("freq"))?;
        let dist = read_distances(&self.path("embed/distances.csv"))?;
        let scores = ScoreTables::read_csv(&self.path("scores"))?;
        let builder = StoreBuilder::from_series(&freq, &dist, &scores)?;
        let meta = ManifestMeta {
            corpus_id: self.cfg.corpus_id.clone(),
            config_fingerprint: self.fingerprint.clone(),
            built_at: build_timestamp(&self.cfg, &self.documents()?)?,
        };
        let manifest = builder.write(&self.path("store"), &meta)?;
        self.stamp(Stage::Store)?;
        Ok(manifest)
    }

    pub fn open_store(&self) -> Result<Store> {
        self.require(Stage::Store)?;
        Store::open(&self.path("store"))
    }

    pub fn export(&self, out: Option<&Path>) -> Result<PathBuf> {
        let store = self.open_store()?;
        let dir = out.map_or_else(|| self.path("export"), Path::to_path_buf);
        export_csv(&store, &dir)?;
        Ok(dir)
    }

    pub fn report(&self, out: Option<&Path>) -> Result<PathBuf> {
        self.require(Stage::Ingest)?;
        let docs = self.documents()?;
        let dir = out.map_or_else(|| self.path("report"), Path::to_path_buf);
        corpus_report(&docs).write_csv(&dir)?;
        Ok(dir)
    }

    /// Every stage from ingest through store.
    pub fn run_all(&self) -> Result<StoreManifest> {
        self.ingest()?;
        self.vocab()?;
        self.freq()?;
        self.embed()?;
        self.scores()?;
        self.store()
    }
}
