use std::fs;
use std::path::{Path, PathBuf};

use memmap2::Mmap;

use super::codec::{bucket_code, read_u32_at, read_u64_at, Cursor, HEADER_LEN, MAGIC, TRAILER_LEN, VERSION};
use super::{
    DistPoint, DistRecord, Family, FreqRecord, SentPoint, SentRecord, SeriesRecord, StoreManifest, TopicPoint,
    TopicRecord, KEYS_FILE, MANIFEST_FILE,
};
use crate::bucket::TimeBucket;
use crate::error::{Error, Result};
use crate::scores::TOPIC_COUNT;

/// Prefix ranges larger than this are answered by walking the frequency
/// rank list instead of sorting the range.
const RANK_WALK_THRESHOLD: usize = 4096;

struct Segment {
    name: String,
    map: Mmap,
    /// Start of the record offset table.
    offsets: usize,
    /// Start of the record area.
    records: usize,
}

impl Segment {
    fn open(dir: &Path, file: &str, kind: u8, manifest: &StoreManifest) -> Result<(Segment, Vec<u8>)> {
        let path = dir.join(file);
        let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        // SAFETY: committed store files are never modified in place; a rebuild
        // rewrites them before the manifest is restored.
        let map = unsafe { Mmap::map(&f) }.map_err(|e| Error::io(&path, e))?;
        let name = file.trim_end_matches(".seg").to_string();
        let corrupt = |m: &str| Error::Corrupt {
            segment: name.clone(),
            message: m.to_string(),
        };
        if map.len() < HEADER_LEN + TRAILER_LEN {
            return Err(corrupt("shorter than header"));
        }
        let (body, tail) = map.split_at(map.len() - TRAILER_LEN);
        let crc = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != crc {
            return Err(Error::Checksum { segment: name });
        }
        if manifest.segments.get(&name).is_none_or(|s| s.crc32 != crc) {
            return Err(corrupt("checksum differs from the manifest"));
        }
        if &body[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        if body[4] != VERSION {
            return Err(corrupt("unsupported version"));
        }
        if body[5] != kind {
            return Err(corrupt("unexpected segment kind"));
        }
        let buckets = read_u32_at(body, 8) as usize;
        let keys = read_u32_at(body, 12) as u64;
        if buckets != manifest.buckets.len() || keys != manifest.vocabulary_size {
            return Err(corrupt("header counts differ from the manifest"));
        }
        let header = body[..HEADER_LEN].to_vec();
        Ok((
            Segment {
                name,
                map,
                offsets: 0,
                records: 0,
            },
            header,
        ))
    }

    fn body(&self) -> &[u8] {
        &self.map[..self.map.len() - TRAILER_LEN]
    }

    fn corrupt(&self, m: impl Into<String>) -> Error {
        Error::Corrupt {
            segment: self.name.clone(),
            message: m.into(),
        }
    }
}

/// Read-only view of a committed store. Segments are memory-mapped and
/// checksummed at open.
pub struct Store {
    dir: PathBuf,
    manifest: StoreManifest,
    keys: Segment,
    key_offsets: usize,
    totals: usize,
    rank: usize,
    blob: usize,
    families: Vec<Segment>,
    bucket_totals: Vec<u64>,
}

impl Store {
    pub fn open(dir: &Path) -> Result<Store> {
        let manifest_path = dir.join(MANIFEST_FILE);
        if !manifest_path.exists() {
            return Err(Error::MissingStage {
                stage: "store",
                path: manifest_path,
            });
        }
        let text = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: StoreManifest =
            serde_json::from_slice(&text).map_err(|e| Error::parse(manifest_path.display().to_string(), e))?;
        if manifest.families != Family::ALL {
            return Err(Error::Corrupt {
                segment: "manifest".into(),
                message: "unexpected family list".into(),
            });
        }
        let nb = manifest.buckets.len();
        let n = manifest.vocabulary_size as usize;

        let (keys, _) = Segment::open(dir, KEYS_FILE, 0, &manifest)?;
        let body = keys.body();
        let codes = HEADER_LEN;
        let key_offsets = codes + 4 * nb;
        let totals = key_offsets + 4 * (n + 1);
        let rank = totals + 8 * n;
        let blob = rank + 4 * n;
        if blob > body.len() {
            return Err(keys.corrupt("tables exceed segment"));
        }
        for (i, b) in manifest.buckets.iter().enumerate() {
            if read_u32_at(body, codes + 4 * i) != bucket_code(*b) {
                return Err(keys.corrupt("bucket list differs from the manifest"));
            }
        }
        let mut prev_end = 0usize;
        let mut prev_key: Option<&[u8]> = None;
        for i in 0..n {
            let (s, e) = (read_u32_at(body, key_offsets + 4 * i) as usize, read_u32_at(body, key_offsets + 4 * i + 4) as usize);
            if s != prev_end || e < s || blob + e > body.len() {
                return Err(keys.corrupt("key offsets out of order"));
            }
            let k = &body[blob + s..blob + e];
            if std::str::from_utf8(k).is_err() || prev_key.is_some_and(|p| p >= k) {
                return Err(keys.corrupt("keys not sorted utf-8"));
            }
            prev_key = Some(k);
            prev_end = e;
        }
        if blob + prev_end != body.len() {
            return Err(keys.corrupt("trailing bytes after keys"));
        }
        if (0..n).any(|i| read_u32_at(body, rank + 4 * i) as usize >= n) {
            return Err(keys.corrupt("rank entry out of range"));
        }

        let mut families = Vec::with_capacity(4);
        let mut bucket_totals = Vec::new();
        for f in Family::ALL {
            let (mut seg, _) = Segment::open(dir, &f.file(), f.kind(), &manifest)?;
            let mut pos = HEADER_LEN;
            if f == Family::Freq {
                let body = seg.body();
                if pos + 8 * nb > body.len() {
                    return Err(seg.corrupt("tables exceed segment"));
                }
                bucket_totals = (0..nb).map(|i| read_u64_at(body, pos + 8 * i)).collect();
                pos += 8 * nb;
            }
            seg.offsets = pos;
            seg.records = pos + 8 * (n + 1);
            let body = seg.body();
            if seg.records > body.len() {
                return Err(seg.corrupt("tables exceed segment"));
            }
            let area = body.len() - seg.records;
            let mut prev = 0u64;
            for i in 0..=n {
                let o = read_u64_at(body, seg.offsets + 8 * i);
                if (i == 0 && o != 0) || o < prev || o as usize > area {
                    return Err(seg.corrupt("record offsets out of order"));
                }
                prev = o;
            }
            if prev as usize != area {
                return Err(seg.corrupt("trailing bytes after records"));
            }
            families.push(seg);
        }
        Ok(Store {
            dir: dir.to_path_buf(),
            manifest,
            keys,
            key_offsets,
            totals,
            rank,
            blob,
            families,
            bucket_totals,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &StoreManifest {
        &self.manifest
    }

    pub fn buckets(&self) -> &[TimeBucket] {
        &self.manifest.buckets
    }

    pub fn bucket_totals(&self) -> &[u64] {
        &self.bucket_totals
    }

    pub fn len(&self) -> usize {
        self.manifest.vocabulary_size as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn key(&self, i: usize) -> &str {
        let body = self.keys.body();
        let s = read_u32_at(body, self.key_offsets + 4 * i) as usize;
        let e = read_u32_at(body, self.key_offsets + 4 * i + 4) as usize;
        std::str::from_utf8(&body[self.blob + s..self.blob + e]).expect("validated at open")
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.len()).map(|i| self.key(i))
    }

    /// Total count of a key over all buckets.
    pub fn total(&self, i: usize) -> u64 {
        read_u64_at(self.keys.body(), self.totals + 8 * i)
    }

    fn rank(&self, r: usize) -> usize {
        read_u32_at(self.keys.body(), self.rank + 4 * r) as usize
    }

    pub fn find(&self, key: &str) -> Option<usize> {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.key(mid).cmp(key) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    fn lower_bound(&self, q: &str) -> usize {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.key(mid) < q {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Up to `limit` keys starting with `q`, by total frequency descending,
    /// then key ascending.
    pub fn prefix_search(&self, q: &str, limit: usize) -> Vec<String> {
        if limit == 0 {
            return Vec::new();
        }
        let start = self.lower_bound(q);
        // Keys sharing the prefix are contiguous from `start`.
        let (mut lo, mut hi) = (start, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.key(mid).starts_with(q) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let end = lo;
        if end - start > RANK_WALK_THRESHOLD {
            return (0..self.len())
                .map(|r| self.rank(r))
                .filter(|&i| i >= start && i < end)
                .take(limit)
                .map(|i| self.key(i).to_string())
                .collect();
        }
        let mut hits: Vec<usize> = (start..end).collect();
        hits.sort_by(|&a, &b| self.total(b).cmp(&self.total(a)).then(a.cmp(&b)));
        hits.into_iter().take(limit).map(|i| self.key(i).to_string()).collect()
    }

    pub fn get(&self, key: &str, family: Family) -> Result<Option<SeriesRecord>> {
        match self.find(key) {
            Some(i) => self.get_at(i, family),
            None => Ok(None),
        }
    }

    pub fn get_at(&self, i: usize, family: Family) -> Result<Option<SeriesRecord>> {
        let seg = &self.families[family as usize];
        let body = seg.body();
        let s = read_u64_at(body, seg.offsets + 8 * i) as usize;
        let e = read_u64_at(body, seg.offsets + 8 * i + 8) as usize;
        if s == e {
            return Ok(None);
        }
        let mut c = Cursor::new(&body[seg.records + s..seg.records + e], &seg.name);
        let nb = self.buckets().len();
        let bucket = |c: &mut Cursor| -> Result<u32> {
            let b = c.varint()?;
            if b as usize >= nb {
                return Err(c.corrupt("bucket index out of range"));
            }
            Ok(b as u32)
        };
        let small = |c: &mut Cursor| -> Result<u32> {
            u32::try_from(c.varint()?).map_err(|_| c.corrupt("value exceeds u32"))
        };
        let record = match family {
            Family::Freq => SeriesRecord::Freq(FreqRecord {
                counts: (0..nb).map(|_| c.varint()).collect::<Result<_>>()?,
            }),
            Family::Dist => {
                let anchor = match c.varint()? {
                    0 => None,
                    a if (a - 1) < nb as u64 => Some((a - 1) as u32),
                    _ => return Err(c.corrupt("anchor out of range")),
                };
                let n = c.varint()?;
                let mut points = Vec::new();
                for _ in 0..n {
                    points.push(DistPoint {
                        bucket: bucket(&mut c)?,
                        distance: c.f32()?,
                    });
                }
                SeriesRecord::Dist(DistRecord { anchor, points })
            }
            Family::Sent => {
                let n = c.varint()?;
                let mut points = Vec::new();
                for _ in 0..n {
                    points.push(SentPoint {
                        bucket: bucket(&mut c)?,
                        negative: c.f32()?,
                        neutral: c.f32()?,
                        positive: c.f32()?,
                        positive_fraction: c.f32()?,
                        n_sampled: small(&mut c)?,
                    });
                }
                SeriesRecord::Sent(SentRecord { points })
            }
            Family::Topic => {
                let top4: [u8; 4] = c.take(4)?.try_into().expect("4 bytes");
                let n = c.varint()?;
                let mut points = Vec::new();
                for _ in 0..n {
                    let bucket = bucket(&mut c)?;
                    let n_sampled = small(&mut c)?;
                    let mut means = [0.0f32; TOPIC_COUNT];
                    for m in means.iter_mut() {
                        *m = c.f32()?;
                    }
                    points.push(TopicPoint {
                        bucket,
                        n_sampled,
                        means,
                    });
                }
                SeriesRecord::Topic(TopicRecord { top4, points })
            }
        };
        if !c.is_empty() {
            return Err(c.corrupt("trailing bytes in record"));
        }
        Ok(Some(record))
    }
}
