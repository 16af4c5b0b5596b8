//! Structural checks for the JSON API responses.
//!
//! Each check returns the list of violations so callers can report them.

#![allow(dead_code)]

use serde_json::{Map, Value};

pub const FAMILIES: [&str; 4] = ["freq", "dist", "sent", "topic"];
const TOPIC_COUNT: usize = 19;

struct Check {
    errors: Vec<String>,
}

impl Check {
    fn fail(&mut self, path: &str, msg: &str) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str, required: &[&str], optional: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(o) = v.as_object() else {
            self.fail(path, "expected object");
            return None;
        };
        for k in required {
            if !o.contains_key(*k) {
                self.fail(path, &format!("missing field `{k}`"));
            }
        }
        for k in o.keys() {
            if !required.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
                self.fail(path, &format!("unexpected field `{k}`"));
            }
        }
        Some(o)
    }

    fn string(&mut self, v: Option<&Value>, path: &str) -> Option<String> {
        match v.and_then(Value::as_str) {
            Some(s) => Some(s.to_string()),
            None => {
                self.fail(path, "expected string");
                None
            }
        }
    }

    fn bucket_label(&mut self, v: Option<&Value>, path: &str) {
        if let Some(s) = self.string(v, path) {
            let ok = s == "prior"
                || (s.len() == 7 && s.as_bytes()[4] == b'-' && s[..4].parse::<u32>().is_ok() && matches!(s[5..].parse::<u32>(), Ok(1..=12)));
            if !ok {
                self.fail(path, &format!("bad bucket label {s:?}"));
            }
        }
    }

    /// Array of `n` entries, each null or a number within `range`.
    fn axis(&mut self, v: Option<&Value>, path: &str, n: usize, range: (f64, f64), integer: bool, zero_fill: bool) {
        let Some(a) = v.and_then(Value::as_array) else {
            self.fail(path, "expected array");
            return;
        };
        if a.len() != n {
            self.fail(path, &format!("expected {n} entries, got {}", a.len()));
        }
        for (i, x) in a.iter().enumerate() {
            let p = format!("{path}[{i}]");
            match x {
                Value::Null if zero_fill => self.fail(&p, "null with zero_fill"),
                Value::Null => {}
                Value::Number(num) => {
                    if integer && !(num.is_u64()) {
                        self.fail(&p, "expected non-negative integer");
                    }
                    let f = num.as_f64().unwrap();
                    if !(range.0..=range.1).contains(&f) {
                        self.fail(&p, &format!("{f} outside {range:?}"));
                    }
                }
                _ => self.fail(&p, "expected number or null"),
            }
        }
    }
}

fn finish(c: Check) -> Result<(), Vec<String>> {
    if c.errors.is_empty() {
        Ok(())
    } else {
        Err(c.errors)
    }
}

pub fn check_manifest(v: &Value) -> Result<(), Vec<String>> {
    let mut c = Check { errors: Vec::new() };
    let req = ["format_version", "corpus_id", "buckets", "families", "vocabulary_size", "built_at", "config_fingerprint", "segments"];
    if let Some(o) = c.object(v, "$", &req, &[]) {
        let buckets = o.get("buckets").and_then(Value::as_array).cloned().unwrap_or_default();
        for (i, b) in buckets.iter().enumerate() {
            c.bucket_label(Some(b), &format!("$.buckets[{i}]"));
        }
        let labels: Vec<&str> = buckets.iter().filter_map(Value::as_str).collect();
        // prior sorts first; YYYY-MM labels sort lexically
        let strictly_increasing = labels.windows(2).all(|w| w[0] == "prior" && w[1] != "prior" || (w[0] != "prior" && w[0] < w[1]));
        if !strictly_increasing {
            c.fail("$.buckets", "not strictly increasing");
        }
        let fams: Vec<&str> = o.get("families").and_then(Value::as_array).map(|a| a.iter().filter_map(Value::as_str).collect()).unwrap_or_default();
        if fams != FAMILIES {
            c.fail("$.families", &format!("expected {FAMILIES:?}, got {fams:?}"));
        }
        if o.get("vocabulary_size").and_then(Value::as_u64).is_none() {
            c.fail("$.vocabulary_size", "expected integer");
        }
        let fp = c.string(o.get("config_fingerprint"), "$.config_fingerprint").unwrap_or_default();
        if fp.len() != 64 || !fp.bytes().all(|b| b.is_ascii_hexdigit()) {
            c.fail("$.config_fingerprint", "expected 64 hex chars");
        }
        c.string(o.get("built_at"), "$.built_at");
        c.string(o.get("corpus_id"), "$.corpus_id");
        if let Some(segs) = o.get("segments").and_then(Value::as_object) {
            for (name, s) in segs {
                let p = format!("$.segments.{name}");
                if let Some(so) = c.object(s, &p, &["file", "bytes", "crc32"], &[]) {
                    if so.get("bytes").and_then(Value::as_u64).is_none() || so.get("crc32").and_then(Value::as_u64).is_none() {
                        c.fail(&p, "bytes and crc32 must be integers");
                    }
                }
            }
        } else {
            c.fail("$.segments", "expected object");
        }
    }
    finish(c)
}

pub fn check_suggest(v: &Value) -> Result<(), Vec<String>> {
    let mut c = Check { errors: Vec::new() };
    if let Some(o) = c.object(v, "$", &["query", "suggestions"], &[]) {
        c.string(o.get("query"), "$.query");
        match o.get("suggestions").and_then(Value::as_array) {
            Some(a) => {
                for (i, s) in a.iter().enumerate() {
                    c.string(Some(s), &format!("$.suggestions[{i}]"));
                }
            }
            None => c.fail("$.suggestions", "expected array"),
        }
    }
    finish(c)
}

pub fn check_error(v: &Value) -> Result<(), Vec<String>> {
    let mut c = Check { errors: Vec::new() };
    if let Some(o) = c.object(v, "$", &["error"], &["words"]) {
        c.string(o.get("error"), "$.error");
        if let Some(ws) = o.get("words") {
            for (i, w) in ws.as_array().cloned().unwrap_or_default().iter().enumerate() {
                word_status(&mut c, w, &format!("$.words[{i}]"));
            }
        }
    }
    finish(c)
}

fn word_status(c: &mut Check, w: &Value, path: &str) {
    if let Some(o) = c.object(w, path, &["word", "status"], &[]) {
        c.string(o.get("word"), &format!("{path}.word"));
        let s = c.string(o.get("status"), &format!("{path}.status")).unwrap_or_default();
        if !["ok", "no_data", "not_found"].contains(&s.as_str()) {
            c.fail(path, &format!("bad status {s:?}"));
        }
    }
}

/// Validate a `/api/series` response for `family`.
pub fn check_series(v: &Value, family: &str) -> Result<(), Vec<String>> {
    let mut c = Check { errors: Vec::new() };
    let Some(o) = c.object(v, "$", &["family", "buckets", "series", "meta"], &[]) else { return finish(c) };
    if o.get("family").and_then(Value::as_str) != Some(family) {
        c.fail("$.family", &format!("expected {family:?}"));
    }
    let buckets = o.get("buckets").and_then(Value::as_array).cloned().unwrap_or_default();
    if buckets.is_empty() {
        c.fail("$.buckets", "expected non-empty array");
    }
    for (i, b) in buckets.iter().enumerate() {
        c.bucket_label(Some(b), &format!("$.buckets[{i}]"));
    }
    let n = buckets.len();

    let meta_opt = if family == "topic" { &[][..] } else { &["topic_labels"][..] };
    let meta_req: &[&str] = if family == "topic" {
        &["units", "from", "to", "zero_fill", "full", "words", "topic_labels"]
    } else {
        &["units", "from", "to", "zero_fill", "full", "words"]
    };
    let mut zero_fill = false;
    let mut full = false;
    if let Some(m) = o.get("meta") {
        if let Some(mo) = c.object(m, "$.meta", meta_req, meta_opt) {
            zero_fill = mo.get("zero_fill").and_then(Value::as_bool).unwrap_or(false);
            full = mo.get("full").and_then(Value::as_bool).unwrap_or(false);
            c.bucket_label(mo.get("from"), "$.meta.from");
            c.bucket_label(mo.get("to"), "$.meta.to");
            if mo.get("from") != buckets.first() || mo.get("to") != buckets.last() {
                c.fail("$.meta", "from/to do not match the bucket axis");
            }
            if family == "topic" {
                let n_labels = mo.get("topic_labels").and_then(Value::as_array).map_or(0, Vec::len);
                if n_labels != TOPIC_COUNT {
                    c.fail("$.meta.topic_labels", &format!("expected {TOPIC_COUNT} labels"));
                }
            }
            if mo.get("units").and_then(Value::as_object).is_none_or(Map::is_empty) {
                c.fail("$.meta.units", "expected non-empty object");
            }
            for (i, w) in mo.get("words").and_then(Value::as_array).cloned().unwrap_or_default().iter().enumerate() {
                word_status(&mut c, w, &format!("$.meta.words[{i}]"));
            }
        }
    }

    let series = o.get("series").and_then(Value::as_array).cloned().unwrap_or_default();
    if series.is_empty() {
        c.fail("$.series", "expected non-empty array");
    }
    for (i, s) in series.iter().enumerate() {
        let p = format!("$.series[{i}]");
        let status = s.get("status").and_then(Value::as_str).unwrap_or("");
        let fields: &[&str] = match (status, family) {
            ("not_found", _) => &[],
            (_, "freq") => &["absolute", "per_million"],
            (_, "dist") => &["anchor", "distance"],
            (_, "sent") => &["negative", "neutral", "positive", "positive_fraction", "n_sampled"],
            (_, "topic") => &["top4", "topics", "n_sampled"],
            _ => &[],
        };
        let mut req = vec!["word", "status"];
        req.extend_from_slice(fields);
        let Some(so) = c.object(s, &p, &req, &[]) else { continue };
        word_status(&mut c, &serde_json::json!({"word": so.get("word"), "status": so.get("status")}), &p);
        if status == "not_found" {
            continue;
        }
        let unit = (0.0, 1.0);
        match family {
            "freq" => {
                c.axis(so.get("absolute"), &format!("{p}.absolute"), n, (if zero_fill { 0.0 } else { 1.0 }, f64::MAX), true, false);
                c.axis(so.get("per_million"), &format!("{p}.per_million"), n, (0.0, 1e6), false, false);
                if !zero_fill {
                    let nulls = |k: &str| so[k].as_array().unwrap().iter().map(Value::is_null).collect::<Vec<_>>();
                    if nulls("absolute") != nulls("per_million") {
                        c.fail(&p, "absolute and per_million gaps differ");
                    }
                }
            }
            "dist" => {
                match so.get("anchor") {
                    Some(Value::Null) => {}
                    a => c.bucket_label(a, &format!("{p}.anchor")),
                }
                c.axis(so.get("distance"), &format!("{p}.distance"), n, (0.0, 2.0), false, zero_fill);
            }
            "sent" => {
                for k in ["negative", "neutral", "positive", "positive_fraction"] {
                    c.axis(so.get(k), &format!("{p}.{k}"), n, unit, false, zero_fill);
                }
                c.axis(so.get("n_sampled"), &format!("{p}.n_sampled"), n, (0.0, 1024.0), true, zero_fill);
                for b in 0..n {
                    let vals: Vec<Option<f64>> = ["negative", "neutral", "positive"].iter().map(|k| so[*k][b].as_f64()).collect();
                    if let [Some(a), Some(bb), Some(cc)] = vals[..] {
                        if so["n_sampled"][b].as_u64() != Some(0) && ((a + bb + cc) - 1.0).abs() > 1e-4 {
                            c.fail(&format!("{p}[{b}]"), "sentiment means do not sum to 1");
                        }
                    }
                }
            }
            "topic" => {
                c.axis(so.get("n_sampled"), &format!("{p}.n_sampled"), n, (0.0, 1024.0), true, zero_fill);
                let top4 = so.get("top4").cloned().unwrap_or(Value::Null);
                let top: Vec<u64> = match &top4 {
                    Value::Null => Vec::new(),
                    Value::Array(a) => a.iter().filter_map(Value::as_u64).collect(),
                    _ => {
                        c.fail(&format!("{p}.top4"), "expected array or null");
                        Vec::new()
                    }
                };
                if !top4.is_null() && (top.len() != 4 || top.iter().any(|&t| t as usize >= TOPIC_COUNT)) {
                    c.fail(&format!("{p}.top4"), "expected 4 topic indices");
                }
                let topics = so.get("topics").and_then(Value::as_array).cloned().unwrap_or_default();
                let expected = if full { TOPIC_COUNT } else { top.len() };
                if topics.len() != expected {
                    c.fail(&format!("{p}.topics"), &format!("expected {expected} lines, got {}", topics.len()));
                }
                for (j, t) in topics.iter().enumerate() {
                    let tp = format!("{p}.topics[{j}]");
                    if let Some(to) = c.object(t, &tp, &["index", "label", "mean"], &[]) {
                        let idx = to.get("index").and_then(Value::as_u64);
                        if idx.is_none_or(|i| i as usize >= TOPIC_COUNT) {
                            c.fail(&tp, "bad topic index");
                        }
                        if !full && idx.is_some_and(|i| top.get(j) != Some(&i)) {
                            c.fail(&tp, "topic lines must follow top4 order");
                        }
                        c.string(to.get("label"), &format!("{tp}.label"));
                        c.axis(to.get("mean"), &format!("{tp}.mean"), n, unit, false, zero_fill);
                    }
                }
            }
            _ => c.fail("$.family", "unknown family"),
        }
    }
    finish(c)
}
