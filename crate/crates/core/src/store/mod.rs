//! Immutable on-disk series store. One segment file per family plus a key
//! index; `manifest.json` is written last and marks a complete build.

pub mod codec;
pub mod interchange;
pub mod reader;
pub mod writer;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bucket::TimeBucket;
use crate::error::Error;
use crate::scores::TOPIC_COUNT;

pub use reader::Store;
pub use writer::{ManifestMeta, StoreBuilder};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const KEYS_FILE: &str = "keys.seg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Freq,
    Dist,
    Sent,
    Topic,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Freq, Family::Dist, Family::Sent, Family::Topic];

    pub fn name(self) -> &'static str {
        match self {
            Family::Freq => "freq",
            Family::Dist => "dist",
            Family::Sent => "sent",
            Family::Topic => "topic",
        }
    }

    pub fn file(self) -> String {
        format!("{}.seg", self.name())
    }

    /// Segment kind byte; 0 is the key index.
    pub fn kind(self) -> u8 {
        self as u8 + 1
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Domain(format!("unknown series family {s:?}")))
    }
}

/// Dense absolute counts, one per manifest bucket; zero means absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreqRecord {
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistPoint {
    pub bucket: u32,
    pub distance: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistRecord {
    pub anchor: Option<u32>,
    pub points: Vec<DistPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentPoint {
    pub bucket: u32,
    pub negative: f32,
    pub neutral: f32,
    pub positive: f32,
    pub positive_fraction: f32,
    pub n_sampled: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentRecord {
    pub points: Vec<SentPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicPoint {
    pub bucket: u32,
    pub n_sampled: u32,
    pub means: [f32; TOPIC_COUNT],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicRecord {
    pub top4: [u8; 4],
    pub points: Vec<TopicPoint>,
}

/// Bucket indices in sparse records refer to positions in the manifest's
/// bucket list.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesRecord {
    Freq(FreqRecord),
    Dist(DistRecord),
    Sent(SentRecord),
    Topic(TopicRecord),
}

impl SeriesRecord {
    pub fn family(&self) -> Family {
        match self {
            SeriesRecord::Freq(_) => Family::Freq,
            SeriesRecord::Dist(_) => Family::Dist,
            SeriesRecord::Sent(_) => Family::Sent,
            SeriesRecord::Topic(_) => Family::Topic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub file: String,
    pub bytes: u64,
    pub crc32: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub format_version: u8,
    pub corpus_id: String,
    pub buckets: Vec<TimeBucket>,
    pub families: Vec<Family>,
    pub vocabulary_size: u64,
    /// RFC 3339; supplied by the caller so identical inputs give identical
    /// stores.
    pub built_at: String,
    pub config_fingerprint: String,
    pub segments: BTreeMap<String, SegmentInfo>,
}
