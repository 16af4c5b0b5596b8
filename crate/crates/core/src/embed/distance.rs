use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::train::SliceEmbeddings;
use crate::bucket::TimeBucket;
use crate::error::{Error, Result};

/// `1 - cos(u, v)` computed in f64 and clamped to `[0, 2]`.
pub fn cosine_distance(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Domain(format!("dimension mismatch: {} vs {}", u.len(), v.len())));
    }
    let (mut uv, mut uu, mut vv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::Domain("cosine distance of a zero vector".into()));
    }
    Ok((1.0 - uv / (uu.sqrt() * vv.sqrt())).clamp(0.0, 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSeries {
    pub key: String,
    /// Earliest bucket in which the key has a vector.
    pub anchor: Option<TimeBucket>,
    pub points: BTreeMap<TimeBucket, f64>,
}

/// Distance of each bucket's vector from the key's vector in its earliest
/// bucket. The anchor bucket itself has no point; a key seen in fewer than
/// two buckets yields an empty series. Zero vectors are treated as absent.
pub fn build_distance_series<'a>(
    slices: &[SliceEmbeddings],
    keys: impl IntoIterator<Item = &'a str>,
) -> BTreeMap<String, DistanceSeries> {
    let mut ordered: Vec<&SliceEmbeddings> = slices.iter().collect();
    ordered.sort_by_key(|s| s.bucket);
    let mut out = BTreeMap::new();
    for key in keys {
        let mut series = DistanceSeries {
            key: key.to_string(),
            anchor: None,
            points: BTreeMap::new(),
        };
        let mut anchor_vec: Option<&[f32]> = None;
        for slice in &ordered {
            let Some(v) = slice.target.vector(key) else { continue };
            if v.iter().all(|&x| x == 0.0) {
                continue;
            }
            match anchor_vec {
                None => {
                    anchor_vec = Some(v);
                    series.anchor = Some(slice.bucket);
                }
                Some(a) => {
                    let d = cosine_distance(a, v).expect("non-zero vectors of equal dimension");
                    series.points.insert(slice.bucket, d);
                }
            }
        }
        out.insert(series.key.clone(), series);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::matrix::EmbeddingMatrix;

    fn slice(bucket: TimeBucket, rows: &[(&str, [f32; 2])]) -> SliceEmbeddings {
        let mut m = EmbeddingMatrix::zeros(rows.iter().map(|(w, _)| w.to_string()).collect(), 2);
        for (i, (_, v)) in rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(v);
        }
        SliceEmbeddings { bucket, target: m }
    }

    #[test]
    fn distance_values() {
        assert!(cosine_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap().abs() < 1e-12);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_distance(&[1.0, 0.0], &[-2.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_distance(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn anchored_at_earliest_bucket() {
        let slices = vec![
            slice(TimeBucket::month(2020, 3), &[("w", [0.0, 1.0])]),
            slice(TimeBucket::Prior, &[("x", [1.0, 1.0])]),
            slice(TimeBucket::month(2020, 1), &[("w", [1.0, 0.0]), ("x", [1.0, 1.0])]),
            slice(TimeBucket::month(2020, 2), &[("w", [1.0, 0.0]), ("x", [0.0, 0.0])]),
        ];
        let s = build_distance_series(&slices, ["w", "x", "missing"]);
        assert_eq!(s["w"].anchor, Some(TimeBucket::month(2020, 1)));
        assert_eq!(s["w"].points.len(), 2);
        assert!(s["w"].points[&TimeBucket::month(2020, 2)].abs() < 1e-12);
        assert!((s["w"].points[&TimeBucket::month(2020, 3)] - 1.0).abs() < 1e-12);
        assert_eq!(s["x"].anchor, Some(TimeBucket::Prior));
        assert_eq!(s["x"].points.keys().copied().collect::<Vec<_>>(), vec![TimeBucket::month(2020, 1)]);
        assert!(s["missing"].points.is_empty());
        assert_eq!(s["missing"].anchor, None);
    }
}
