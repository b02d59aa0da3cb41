//! Comparing identified sets against a reference set list.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::orientation::circular_diff;
use crate::planes::SetStatistics;

pub const DEFAULT_MATCH_THRESHOLD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub identified: usize,
    pub reference: usize,
    /// Angle between the mean poles, degrees.
    pub angle: f64,
    pub d_dip: f64,
    pub d_dipdir: f64,
    pub d_sd_dip: f64,
    pub d_sd_dipdir: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    /// Sorted by reference id.
    pub pairs: Vec<MatchedPair>,
    /// `None` when nothing matched.
    pub mae_dip: Option<f64>,
    pub mae_dipdir: Option<f64>,
    pub disp_dip: Option<f64>,
    pub disp_dipdir: Option<f64>,
    pub unmatched_reference: Vec<usize>,
    pub unmatched_identified: Vec<usize>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Greedy matching by ascending angle between mean poles; pairs further
/// apart than `threshold` degrees stay unmatched. Set ids in the output are
/// the `set_id` fields of the inputs.
pub fn evaluate_against_reference(
    identified: &[SetStatistics],
    reference: &[SetStatistics],
    threshold: f64,
) -> Result<EvaluationResult> {
    if reference.is_empty() {
        return Err(Error::InvalidParameter("reference set list is empty".into()));
    }
    let mut candidates = Vec::new();
    for (i, a) in identified.iter().enumerate() {
        for (r, b) in reference.iter().enumerate() {
            let angle = a.mean_orientation().angle_to(&b.mean_orientation());
            if angle <= threshold {
                candidates.push((angle, r, i));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_i = vec![false; identified.len()];
    let mut used_r = vec![false; reference.len()];
    let mut pairs = Vec::new();
    for (angle, r, i) in candidates {
        if used_i[i] || used_r[r] {
            continue;
        }
        used_i[i] = true;
        used_r[r] = true;
        let (a, b) = (&identified[i], &reference[r]);
        pairs.push(MatchedPair {
            identified: a.set_id,
            reference: b.set_id,
            angle,
            d_dip: (a.mean_dip - b.mean_dip).abs(),
            d_dipdir: circular_diff(a.mean_dipdir, b.mean_dipdir),
            d_sd_dip: (a.sd_dip - b.sd_dip).abs(),
            d_sd_dipdir: (a.sd_dipdir - b.sd_dipdir).abs(),
        });
    }
    pairs.sort_by_key(|p| (p.reference, p.identified));
    Ok(EvaluationResult {
        mae_dip: mean(pairs.iter().map(|p| p.d_dip)),
        mae_dipdir: mean(pairs.iter().map(|p| p.d_dipdir)),
        disp_dip: mean(pairs.iter().map(|p| p.d_sd_dip)),
        disp_dipdir: mean(pairs.iter().map(|p| p.d_sd_dipdir)),
        pairs,
        unmatched_reference: (0..reference.len()).filter(|&r| !used_r[r]).map(|r| reference[r].set_id).collect(),
        unmatched_identified: (0..identified.len()).filter(|&i| !used_i[i]).map(|i| identified[i].set_id).collect(),
    })
}

/// One row of a set list file. Only the orientation fields are required.
#[derive(Debug, Clone, Deserialize)]
struct SetRow {
    #[serde(alias = "set_id")]
    id: Option<usize>,
    mean_dip: f64,
    #[serde(default)]
    sd_dip: f64,
    mean_dipdir: f64,
    #[serde(default)]
    sd_dipdir: f64,
    #[serde(default)]
    plane_count: usize,
    #[serde(default)]
    point_count: usize,
}

/// Read a set list: either a JSON array of sets or a run report with a
/// `sets` array. Missing ids default to the row position.
pub fn read_set_list(path: &Path) -> Result<Vec<SetStatistics>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_set_list(&text)
}

pub fn parse_set_list(text: &str) -> Result<Vec<SetStatistics>> {
    let value: Value = serde_json::from_str(text)?;
    let rows = match value {
        Value::Array(_) => value,
        Value::Object(mut m) => m
            .remove("sets")
            .ok_or_else(|| Error::parse("top level", "expected an array or an object with `sets`"))?,
        _ => return Err(Error::parse("top level", "expected an array or an object with `sets`")),
    };
    let rows: Vec<SetRow> = serde_json::from_value(rows)?;
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(k, r)| SetStatistics {
            set_id: r.id.unwrap_or(k),
            plane_count: r.plane_count,
            point_count: r.point_count,
            mean_dip: r.mean_dip,
            sd_dip: r.sd_dip,
            mean_dipdir: r.mean_dipdir,
            sd_dipdir: r.sd_dipdir,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(id: usize, dip: f64, sd_dip: f64, dd: f64, sd_dd: f64) -> SetStatistics {
        SetStatistics {
            set_id: id,
            plane_count: 1,
            point_count: 1,
            mean_dip: dip,
            sd_dip,
            mean_dipdir: dd,
            sd_dipdir: sd_dd,
        }
    }

    #[test]
    fn identical_lists_have_zero_error() {
        let a = vec![set(0, 30.0, 2.0, 10.0, 3.0), set(1, 70.0, 4.0, 200.0, 5.0)];
        let r = evaluate_against_reference(&a, &a, 20.0).unwrap();
        assert_eq!(r.pairs.len(), 2);
        assert_eq!(r.mae_dip, Some(0.0));
        assert_eq!(r.disp_dipdir, Some(0.0));
        assert!(r.unmatched_reference.is_empty());
    }

    #[test]
    fn dip_direction_error_wraps() {
        let a = [set(0, 60.0, 0.0, 1.0, 0.0)];
        let b = [set(0, 60.0, 0.0, 359.0, 0.0)];
        let r = evaluate_against_reference(&a, &b, 20.0).unwrap();
        assert!((r.mae_dipdir.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn far_sets_stay_unmatched() {
        let a = [set(0, 10.0, 0.0, 0.0, 0.0)];
        let b = [set(0, 80.0, 0.0, 180.0, 0.0), set(1, 12.0, 0.0, 5.0, 0.0)];
        let r = evaluate_against_reference(&a, &b, 20.0).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert_eq!(r.pairs[0].reference, 1);
        assert_eq!(r.unmatched_reference, vec![0]);
        let none = evaluate_against_reference(&[], &b, 20.0).unwrap();
        assert_eq!(none.mae_dip, None);
        assert!(evaluate_against_reference(&a, &[], 20.0).is_err());
    }

    #[test]
    fn parses_arrays_and_reports() {
        let arr = r#"[{"mean_dip": 10, "mean_dipdir": 20}, {"id": 7, "mean_dip": 1, "sd_dip": 2, "mean_dipdir": 3, "sd_dipdir": 4}]"#;
        let sets = parse_set_list(arr).unwrap();
        assert_eq!(sets[0].set_id, 0);
        assert_eq!(sets[1].set_id, 7);
        assert_eq!(sets[1].sd_dipdir, 4.0);
        let report = r#"{"sets": [{"id": 0, "point_count": 5, "plane_count": 1, "mean_dip": 1, "sd_dip": 0, "mean_dipdir": 2, "sd_dipdir": 0}]}"#;
        assert_eq!(parse_set_list(report).unwrap().len(), 1);
        assert!(parse_set_list("3").is_err());
    }
}
