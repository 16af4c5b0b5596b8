mod support {
    pub mod schema;
}

use std::net::SocketAddr;
use std::path::Path;

use lexitrend_core::store::{
    DistPoint, DistRecord, FreqRecord, ManifestMeta, SentPoint, SentRecord, SeriesRecord, StoreBuilder, TopicPoint,
    TopicRecord,
};
use lexitrend_core::TimeBucket;
use lexitrend_server::{start, RunningServer, ServeOptions};
use serde_json::Value;
use support::schema::{check_error, check_manifest, check_series, check_suggest, FAMILIES};

fn buckets() -> Vec<TimeBucket> {
    vec![TimeBucket::Prior, TimeBucket::month(2020, 1), TimeBucket::month(2020, 2), TimeBucket::month(2020, 3)]
}

/// Four buckets; "parasite" has every family, "paris" only frequency.
fn fixture_store(dir: &Path) {
    let mut b = StoreBuilder::new(buckets()).unwrap();
    b.set_bucket_totals(vec![1000, 2000, 4000, 500]).unwrap();
    b.put("parasite", SeriesRecord::Freq(FreqRecord { counts: vec![0, 4, 8, 0] })).unwrap();
    b.put("paris", SeriesRecord::Freq(FreqRecord { counts: vec![5, 0, 0, 1] })).unwrap();
    b.put("parasite", SeriesRecord::Dist(DistRecord {
        anchor: Some(1),
        points: vec![DistPoint { bucket: 1, distance: 0.0 }, DistPoint { bucket: 2, distance: 0.25 }, DistPoint { bucket: 3, distance: 0.5 }],
    }))
    .unwrap();
    b.put("parasite", SeriesRecord::Sent(SentRecord {
        points: vec![SentPoint { bucket: 2, negative: 0.125, neutral: 0.25, positive: 0.625, positive_fraction: 0.5, n_sampled: 12 }],
    }))
    .unwrap();
    let mut means = [0.0f32; 19];
    means[3] = 0.75;
    means[0] = 0.5;
    means[7] = 0.25;
    means[18] = 0.125;
    b.put("parasite", SeriesRecord::Topic(TopicRecord {
        top4: [3, 0, 7, 18],
        points: vec![TopicPoint { bucket: 2, n_sampled: 12, means }],
    }))
    .unwrap();
    b.write(dir, &ManifestMeta {
        corpus_id: "contract".into(),
        config_fingerprint: "ab".repeat(32),
        built_at: "2020-04-01T00:00:00Z".into(),
    })
    .unwrap();
}

struct Fixture {
    _dir: tempfile::TempDir,
    server: RunningServer,
    agent: ureq::Agent,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fixture_store(dir.path());
        let server = start(ServeOptions {
            store: dir.path().to_path_buf(),
            bind: SocketAddr::from(([127, 0, 0, 1], 0)),
            cors_origin: Some("http://localhost:5173".into()),
            static_dir: None,
        })
        .unwrap();
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Fixture { _dir: dir, server, agent }
    }

    fn raw(&self, path: &str) -> (u16, String) {
        let mut resp = self.agent.get(&self.server.url(path)).call().unwrap();
        let status = resp.status().as_u16();
        (status, resp.body_mut().read_to_string().unwrap())
    }

    fn get(&self, path: &str) -> (u16, Value) {
        let (status, body) = self.raw(path);
        (status, serde_json::from_str(&body).unwrap_or_else(|e| panic!("{path}: {e}: {body}")))
    }
}

fn assert_schema(r: Result<(), Vec<String>>, what: &str) {
    if let Err(errors) = r {
        panic!("{what} violates schema:\n{}", errors.join("\n"));
    }
}

#[test]
fn manifest_endpoint() {
    let f = Fixture::new();
    let (status, v) = f.get("/api/manifest");
    assert_eq!(status, 200);
    assert_schema(check_manifest(&v), "manifest");
    assert_eq!(v["buckets"], serde_json::json!(["prior", "2020-01", "2020-02", "2020-03"]));
    assert_eq!(v["vocabulary_size"], 2);
    assert_eq!(v["config_fingerprint"], "ab".repeat(32));
}

#[test]
fn series_schema_for_every_family_and_flag() {
    let f = Fixture::new();
    for family in FAMILIES {
        for flags in ["", "&zero_fill=true", "&full=true", "&from=2020-01&to=2020-02"] {
            let path = format!("/api/series?words=parasite,paris,unknownzz&family={family}{flags}");
            let (status, v) = f.get(&path);
            assert_eq!(status, 200, "{path}");
            assert_schema(check_series(&v, family), &path);
        }
    }
}

#[test]
fn freq_values_and_null_gaps() {
    let f = Fixture::new();
    let (_, v) = f.get("/api/series?words=parasite&family=freq");
    let s = &v["series"][0];
    assert_eq!(s["status"], "ok");
    assert_eq!(s["absolute"], serde_json::json!([null, 4, 8, null]));
    assert_eq!(s["per_million"], serde_json::json!([null, 2000.0, 2000.0, null]));
    let (_, v) = f.get("/api/series?words=parasite&family=freq&zero_fill=1");
    assert_eq!(v["series"][0]["absolute"], serde_json::json!([0, 4, 8, 0]));
}

#[test]
fn words_share_one_axis() {
    let f = Fixture::new();
    let (status, v) = f.get("/api/series?words=Parasite,paris&family=sent&from=2020-01");
    assert_eq!(status, 200);
    assert_eq!(v["buckets"], serde_json::json!(["2020-01", "2020-02", "2020-03"]));
    assert_eq!(v["series"][0]["word"], "parasite");
    assert_eq!(v["series"][0]["positive"], serde_json::json!([null, 0.625, null]));
    assert_eq!(v["series"][0]["n_sampled"], serde_json::json!([null, 12, null]));
    assert_eq!(v["series"][1]["status"], "no_data");
    assert_eq!(v["series"][1]["positive"], serde_json::json!([null, null, null]));
}

#[test]
fn dist_payload() {
    let f = Fixture::new();
    let (_, v) = f.get("/api/series?words=parasite&family=dist");
    assert_eq!(v["series"][0]["anchor"], "2020-01");
    assert_eq!(v["series"][0]["distance"], serde_json::json!([null, 0.0, 0.25, 0.5]));
}

#[test]
fn topic_defaults_to_top4() {
    let f = Fixture::new();
    let (_, v) = f.get("/api/series?words=parasite&family=topic");
    let s = &v["series"][0];
    assert_eq!(s["top4"], serde_json::json!([3, 0, 7, 18]));
    let idx: Vec<u64> = s["topics"].as_array().unwrap().iter().map(|t| t["index"].as_u64().unwrap()).collect();
    assert_eq!(idx, vec![3, 0, 7, 18]);
    assert_eq!(s["topics"][0]["mean"], serde_json::json!([null, null, 0.75, null]));
    assert_eq!(v["meta"]["topic_labels"].as_array().unwrap().len(), 19);
    let (_, v) = f.get("/api/series?words=parasite&family=topic&full=true");
    assert_eq!(v["series"][0]["topics"].as_array().unwrap().len(), 19);
}

#[test]
fn unknown_words() {
    let f = Fixture::new();
    let (status, v) = f.get("/api/series?words=unknownzz");
    assert_eq!(status, 404);
    assert_schema(check_error(&v), "404 body");
    assert_eq!(v["words"], serde_json::json!([{"word": "unknownzz", "status": "not_found"}]));
    let (status, v) = f.get("/api/series?words=unknownzz,paris");
    assert_eq!(status, 200);
    assert_eq!(v["meta"]["words"][0], serde_json::json!({"word": "unknownzz", "status": "not_found"}));
    assert_eq!(v["series"][0], serde_json::json!({"word": "unknownzz", "status": "not_found"}));
}

#[test]
fn malformed_requests_are_400() {
    let f = Fixture::new();
    for path in [
        "/api/series",
        "/api/series?words=",
        "/api/series?words=a,b,c,d,e,f,g,h,i",
        "/api/series?words=paris&family=x",
        "/api/series?words=paris&from=2019-05",
        "/api/series?words=paris&from=2020-03&to=2020-01",
        "/api/series?words=paris&zero_fill=yes",
        "/api/series?words=paris&bogus=1",
        "/api/suggest",
        "/api/suggest?q=p&limit=many",
    ] {
        let (status, v) = f.get(path);
        assert_eq!(status, 400, "{path}");
        assert_schema(check_error(&v), path);
    }
    let (status, _) = f.get("/api/nothing");
    assert_eq!(status, 404);
}

#[test]
fn suggest_endpoint() {
    let f = Fixture::new();
    let (status, v) = f.get("/api/suggest?q=PAR");
    assert_eq!(status, 200);
    assert_schema(check_suggest(&v), "suggest");
    assert_eq!(v["query"], "par");
    // parasite total 12, paris total 6
    assert_eq!(v["suggestions"], serde_json::json!(["parasite", "paris"]));
    let (_, v) = f.get("/api/suggest?q=par&limit=0");
    assert_eq!(v["suggestions"], serde_json::json!([]));
    let (_, v) = f.get("/api/suggest?q=zz");
    assert_eq!(v["suggestions"], serde_json::json!([]));
    let (_, v) = f.get("/api/suggest?q=&limit=1");
    assert_eq!(v["suggestions"], serde_json::json!(["parasite"]));
}

#[test]
fn responses_are_byte_identical_across_repeats() {
    let f = Fixture::new();
    for path in ["/api/manifest", "/api/suggest?q=p", "/api/series?words=parasite,paris&family=topic&full=1"] {
        assert_eq!(f.raw(path), f.raw(path), "{path}");
    }
}

#[test]
fn cors_header_for_configured_origin() {
    let f = Fixture::new();
    let resp = f.agent.get(&f.server.url("/api/manifest")).header("Origin", "http://localhost:5173").call().unwrap();
    assert_eq!(resp.headers().get("access-control-allow-origin").unwrap(), "http://localhost:5173");
}

#[test]
fn missing_store_fails_to_start() {
    let dir = tempfile::tempdir().unwrap();
    let err = start(ServeOptions {
        store: dir.path().to_path_buf(),
        bind: SocketAddr::from(([127, 0, 0, 1], 0)),
        cors_origin: None,
        static_dir: None,
    })
    .err()
    .expect("no store");
    assert!(err.to_string().contains("store"), "{err}");
}
