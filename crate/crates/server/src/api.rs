//! Request parsing and response payloads for the `/api` endpoints.

use std::collections::BTreeSet;
use std::str::FromStr;

use axum::http::StatusCode;
use serde::Serialize;

use lexitrend_core::scores::TOPIC_LABELS;
use lexitrend_core::store::{Family, SeriesRecord, Store};
use lexitrend_core::tokenize::simple_lowercase;
use lexitrend_core::TimeBucket;

pub const MAX_WORDS: usize = 8;
pub const DEFAULT_SUGGEST_LIMIT: usize = 10;
pub const MAX_SUGGEST_LIMIT: usize = 1000;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub words: Vec<WordStatus>,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
            words: Vec::new(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: message.into(),
            words: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody<'a> {
    pub error: &'a str,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    pub words: &'a [WordStatus],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The key exists but has no series in the requested family.
    NoData,
    NotFound,
}

#[derive(Debug, Clone, Serialize)]
pub struct WordStatus {
    pub word: String,
    pub status: Status,
}

fn parse_bool(name: &str, v: &str) -> Result<bool, ApiError> {
    match v {
        "true" | "1" => Ok(true),
        "false" | "0" | "" => Ok(false),
        _ => Err(ApiError::bad_request(format!("`{name}` must be true or false, got {v:?}"))),
    }
}

/// Reject repeated and unknown parameters, return values by name.
fn collect_params<'a, const N: usize>(
    pairs: &'a [(String, String)],
    names: [&str; N],
) -> Result<[Option<&'a str>; N], ApiError> {
    let mut out = [None; N];
    for (k, v) in pairs {
        let Some(pos) = names.iter().position(|n| n == k) else {
            return Err(ApiError::bad_request(format!("unknown parameter `{k}`")));
        };
        if out[pos].replace(v.as_str()).is_some() {
            return Err(ApiError::bad_request(format!("parameter `{k}` given more than once")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesQuery {
    pub words: Vec<String>,
    pub family: Family,
    pub from: usize,
    pub to: usize,
    pub zero_fill: bool,
    pub full: bool,
}

impl SeriesQuery {
    /// `from`/`to` are resolved to inclusive indices into the store buckets.
    pub fn parse(pairs: &[(String, String)], buckets: &[TimeBucket]) -> Result<Self, ApiError> {
        let [words, family, from, to, zero_fill, full] =
            collect_params(pairs, ["words", "family", "from", "to", "zero_fill", "full"])?;
        let words = words.ok_or_else(|| ApiError::bad_request("missing `words`"))?;
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for w in words.split(',') {
            let w = simple_lowercase(w.trim());
            if w.is_empty() {
                return Err(ApiError::bad_request("empty word in `words`"));
            }
            if seen.insert(w.clone()) {
                list.push(w);
            }
        }
        if list.len() > MAX_WORDS {
            return Err(ApiError::bad_request(format!(
                "at most {MAX_WORDS} words per request, got {}",
                list.len()
            )));
        }
        let family = match family {
            Some(f) => Family::from_str(f).map_err(|e| ApiError::bad_request(e.to_string()))?,
            None => Family::Freq,
        };
        let index_of = |name: &str, v: &str| -> Result<usize, ApiError> {
            let b: TimeBucket = v
                .parse()
                .map_err(|_| ApiError::bad_request(format!("`{name}` is not a bucket label: {v:?}")))?;
            buckets
                .iter()
                .position(|x| *x == b)
                .ok_or_else(|| ApiError::bad_request(format!("`{name}` bucket {b} is not in the store")))
        };
        if buckets.is_empty() {
            return Err(ApiError::internal("store has no buckets"));
        }
        let from = from.map(|v| index_of("from", v)).transpose()?.unwrap_or(0);
        let to = to.map(|v| index_of("to", v)).transpose()?.unwrap_or(buckets.len() - 1);
        if from > to {
            return Err(ApiError::bad_request("`from` is after `to`"));
        }
        Ok(SeriesQuery {
            words: list,
            family,
            from,
            to,
            zero_fill: zero_fill.map(|v| parse_bool("zero_fill", v)).transpose()?.unwrap_or(false),
            full: full.map(|v| parse_bool("full", v)).transpose()?.unwrap_or(false),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuggestQuery {
    pub q: String,
    pub limit: usize,
}

impl SuggestQuery {
    pub fn parse(pairs: &[(String, String)]) -> Result<Self, ApiError> {
        let [q, limit] = collect_params(pairs, ["q", "limit"])?;
        let q = q.ok_or_else(|| ApiError::bad_request("missing `q`"))?;
        let limit = match limit {
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| ApiError::bad_request(format!("`limit` must be a non-negative integer, got {v:?}")))?
                .min(MAX_SUGGEST_LIMIT),
            None => DEFAULT_SUGGEST_LIMIT,
        };
        Ok(SuggestQuery {
            q: simple_lowercase(q.trim()),
            limit,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct SuggestResponse {
    pub query: String,
    pub suggestions: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct TopicLine {
    pub index: usize,
    pub label: &'static str,
    pub mean: Vec<Option<f32>>,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Freq {
        absolute: Vec<Option<u64>>,
        per_million: Vec<Option<f64>>,
    },
    Dist {
        anchor: Option<TimeBucket>,
        distance: Vec<Option<f32>>,
    },
    Sent {
        negative: Vec<Option<f32>>,
        neutral: Vec<Option<f32>>,
        positive: Vec<Option<f32>>,
        positive_fraction: Vec<Option<f32>>,
        n_sampled: Vec<Option<u32>>,
    },
    Topic {
        top4: Option<[usize; 4]>,
        topics: Vec<TopicLine>,
        n_sampled: Vec<Option<u32>>,
    },
}

#[derive(Debug, Serialize)]
pub struct WordSeries {
    pub word: String,
    pub status: Status,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
}

#[derive(Debug, Serialize)]
pub struct Units {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absolute: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_million: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<&'static str>,
}

impl Units {
    fn of(family: Family) -> Self {
        let mut u = Units {
            absolute: None,
            per_million: None,
            distance: None,
            scores: None,
        };
        match family {
            Family::Freq => {
                u.absolute = Some("occurrences");
                u.per_million = Some("occurrences per million unigram tokens");
            }
            Family::Dist => u.distance = Some("cosine distance to the anchor bucket, 0..2"),
            Family::Sent | Family::Topic => u.scores = Some("mean classifier probability, 0..1"),
        }
        u
    }
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub units: Units,
    pub from: TimeBucket,
    pub to: TimeBucket,
    pub zero_fill: bool,
    pub full: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topic_labels: Option<&'static [&'static str]>,
    pub words: Vec<WordStatus>,
}

#[derive(Debug, Serialize)]
pub struct SeriesResponse {
    pub family: Family,
    pub buckets: Vec<TimeBucket>,
    pub series: Vec<WordSeries>,
    pub meta: Meta,
}

/// Dense per-bucket axis filled from sparse `(bucket index, value)` points.
fn axis<T: Copy>(q: &SeriesQuery, points: impl IntoIterator<Item = (u32, T)>, zero: T) -> Vec<Option<T>> {
    let mut out = vec![q.zero_fill.then_some(zero); q.to - q.from + 1];
    for (b, v) in points {
        let b = b as usize;
        if (q.from..=q.to).contains(&b) {
            out[b - q.from] = Some(v);
        }
    }
    out
}

fn payload(q: &SeriesQuery, record: Option<&SeriesRecord>, store: &Store) -> Payload {
    let totals = store.bucket_totals();
    match q.family {
        Family::Freq => {
            let counts: &[u64] = match record {
                Some(SeriesRecord::Freq(r)) => &r.counts,
                _ => &[],
            };
            let present = counts.iter().enumerate().filter(|(_, &c)| c > 0);
            let absolute = axis(q, present.clone().map(|(b, &c)| (b as u32, c)), 0);
            let per_million = axis(
                q,
                present.map(|(b, &c)| (b as u32, c as f64 * 1e6 / totals[b] as f64)),
                0.0,
            );
            Payload::Freq { absolute, per_million }
        }
        Family::Dist => {
            let (anchor, points): (Option<u32>, &[_]) = match record {
                Some(SeriesRecord::Dist(r)) => (r.anchor, &r.points),
                _ => (None, &[]),
            };
            Payload::Dist {
                anchor: anchor.map(|a| store.buckets()[a as usize]),
                distance: axis(q, points.iter().map(|p| (p.bucket, p.distance)), 0.0),
            }
        }
        Family::Sent => {
            let points: &[_] = match record {
                Some(SeriesRecord::Sent(r)) => &r.points,
                _ => &[],
            };
            let col = |f: fn(&lexitrend_core::store::SentPoint) -> f32| axis(q, points.iter().map(|p| (p.bucket, f(p))), 0.0);
            Payload::Sent {
                negative: col(|p| p.negative),
                neutral: col(|p| p.neutral),
                positive: col(|p| p.positive),
                positive_fraction: col(|p| p.positive_fraction),
                n_sampled: axis(q, points.iter().map(|p| (p.bucket, p.n_sampled)), 0),
            }
        }
        Family::Topic => {
            let (top4, points): (Option<[u8; 4]>, &[_]) = match record {
                Some(SeriesRecord::Topic(r)) => (Some(r.top4), &r.points),
                _ => (None, &[]),
            };
            let top4 = top4.map(|t| t.map(usize::from));
            let indices: Vec<usize> = match (q.full, top4) {
                (false, Some(t)) => t.to_vec(),
                (false, None) => Vec::new(),
                (true, _) => (0..TOPIC_LABELS.len()).collect(),
            };
            let topics = indices
                .into_iter()
                .map(|k| TopicLine {
                    index: k,
                    label: TOPIC_LABELS[k],
                    mean: axis(q, points.iter().map(|p| (p.bucket, p.means[k])), 0.0),
                })
                .collect();
            Payload::Topic {
                top4,
                topics,
                n_sampled: axis(q, points.iter().map(|p| (p.bucket, p.n_sampled)), 0),
            }
        }
    }
}

pub fn series(store: &Store, q: &SeriesQuery) -> Result<SeriesResponse, ApiError> {
    let buckets = store.buckets();
    let mut series = Vec::with_capacity(q.words.len());
    for w in &q.words {
        let Some(i) = store.find(w) else {
            series.push(WordSeries {
                word: w.clone(),
                status: Status::NotFound,
                payload: None,
            });
            continue;
        };
        let record = store.get_at(i, q.family).map_err(|e| ApiError::internal(e.to_string()))?;
        series.push(WordSeries {
            word: w.clone(),
            status: if record.is_some() { Status::Ok } else { Status::NoData },
            payload: Some(payload(q, record.as_ref(), store)),
        });
    }
    let words: Vec<WordStatus> = series
        .iter()
        .map(|s| WordStatus {
            word: s.word.clone(),
            status: s.status,
        })
        .collect();
    if words.iter().all(|w| w.status == Status::NotFound) {
        return Err(ApiError {
            status: StatusCode::NOT_FOUND,
            message: "none of the requested words is in the store".into(),
            words,
        });
    }
    Ok(SeriesResponse {
        family: q.family,
        buckets: buckets[q.from..=q.to].to_vec(),
        series,
        meta: Meta {
            units: Units::of(q.family),
            from: buckets[q.from],
            to: buckets[q.to],
            zero_fill: q.zero_fill,
            full: q.full,
            topic_labels: (q.family == Family::Topic).then_some(&TOPIC_LABELS[..]),
            words,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(s: &[(&str, &str)]) -> Vec<(String, String)> {
        s.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn buckets() -> Vec<TimeBucket> {
        vec![TimeBucket::Prior, TimeBucket::month(2020, 1), TimeBucket::month(2020, 2)]
    }

    #[test]
    fn series_query_defaults_and_normalization() {
        let q = SeriesQuery::parse(&pairs(&[("words", " Parasite ,joe biden,parasite")]), &buckets()).unwrap();
        assert_eq!(q.words, vec!["parasite", "joe biden"]);
        assert_eq!((q.family, q.from, q.to, q.zero_fill, q.full), (Family::Freq, 0, 2, false, false));
        let q = SeriesQuery::parse(
            &pairs(&[("words", "a"), ("family", "TOPIC"), ("from", "2020-01"), ("to", "2020-01"), ("full", "1")]),
            &buckets(),
        )
        .unwrap();
        assert_eq!((q.family, q.from, q.to, q.full), (Family::Topic, 1, 1, true));
    }

    #[test]
    fn series_query_rejections() {
        let b = buckets();
        for bad in [
            vec![],
            vec![("words", "")],
            vec![("words", "a,,b")],
            vec![("words", "1,2,3,4,5,6,7,8,9")],
            vec![("words", "a"), ("family", "nope")],
            vec![("words", "a"), ("from", "2019-01")],
            vec![("words", "a"), ("from", "2020-02"), ("to", "2020-01")],
            vec![("words", "a"), ("zero_fill", "maybe")],
            vec![("words", "a"), ("words", "b")],
            vec![("words", "a"), ("colour", "red")],
        ] {
            let err = SeriesQuery::parse(&pairs(&bad), &b).unwrap_err();
            assert_eq!(err.status, StatusCode::BAD_REQUEST, "{bad:?}");
        }
        assert!(SeriesQuery::parse(&pairs(&[("words", "1,2,3,4,5,6,7,8")]), &b).is_ok());
    }

    #[test]
    fn suggest_query() {
        assert_eq!(
            SuggestQuery::parse(&pairs(&[("q", "PaR")])).unwrap(),
            SuggestQuery {
                q: "par".into(),
                limit: DEFAULT_SUGGEST_LIMIT
            }
        );
        assert_eq!(SuggestQuery::parse(&pairs(&[("q", ""), ("limit", "0")])).unwrap().limit, 0);
        assert!(SuggestQuery::parse(&pairs(&[])).is_err());
        assert!(SuggestQuery::parse(&pairs(&[("q", "a"), ("limit", "-1")])).is_err());
    }
}
