//! Splitting orientation sets into individual planes, plane fitting, and
//! per-set statistics.

use std::collections::VecDeque;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud, SpatialIndex};
use crate::error::{Error, Result};
use crate::hdbscan::{ClusterLabels, NOISE};
use crate::orientation::{circular_diff, normal_to_orientation, pca, wrap360, Orientation, UnitNormal};

/// Which orientations feed the set statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatsSource {
    /// Orientations of every member point of the set's retained planes.
    #[default]
    Points,
    /// One fitted pole per retained plane.
    Poles,
}

impl std::str::FromStr for StatsSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "points" => Ok(StatsSource::Points),
            "poles" => Ok(StatsSource::Poles),
            _ => Err(Error::InvalidParameter(format!(
                "unknown statistics source `{s}` (expected points or poles)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaneParams {
    /// DBSCAN radius as a multiple of the point spacing.
    pub eps_factor: f64,
    pub min_pts: usize,
    pub min_plane_points: usize,
    pub stats: StatsSource,
}

impl Default for PlaneParams {
    fn default() -> Self {
        PlaneParams {
            eps_factor: 2.0,
            min_pts: 20,
            min_plane_points: 100,
            stats: StatsSource::Points,
        }
    }
}

impl PlaneParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_factor.is_finite() && self.eps_factor > 0.0) {
            return Err(Error::InvalidParameter("eps_factor must be positive".into()));
        }
        if self.min_pts < 1 {
            return Err(Error::InvalidParameter("min_pts must be at least 1".into()));
        }
        if self.min_plane_points < 3 {
            return Err(Error::InvalidParameter("min_plane_points must be at least 3".into()));
        }
        Ok(())
    }
}

const UNVISITED: i32 = -2;

/// DBSCAN over 3D points. A point is core when at least `min_pts` points
/// (itself included) lie within `eps`. Clusters grow breadth-first from the
/// lowest unvisited index; a border point joins the first cluster that
/// reaches it.
pub fn dbscan(points: &[Point], eps: f64, min_pts: usize) -> ClusterLabels {
    if points.is_empty() {
        return ClusterLabels::default();
    }
    let index = SpatialIndex::from_points(points.to_vec());
    let n = points.len();
    let mut labels = vec![UNVISITED; n];
    let mut cluster = 0i32;
    let mut nb = Vec::new();
    let mut queue = VecDeque::new();
    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        index.radius_query_into(&points[i], eps, &mut nb);
        if nb.len() < min_pts {
            labels[i] = NOISE;
            continue;
        }
        labels[i] = cluster;
        queue.clear();
        queue.extend(nb.iter().copied());
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = cluster;
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = cluster;
            index.radius_query_into(&points[j], eps, &mut nb);
            if nb.len() >= min_pts {
                queue.extend(nb.iter().copied().filter(|&k| labels[k] == UNVISITED || labels[k] == NOISE));
            }
        }
        cluster += 1;
    }
    ClusterLabels::new(labels)
}

/// Member points of one candidate plane before fitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneSegment {
    pub set_id: usize,
    /// Indices into the cloud, ascending.
    pub members: Vec<usize>,
}

/// Run DBSCAN inside each set. `set_labels` holds one entry per cloud
/// point (`NOISE` for points outside every set). Segments come out ordered
/// by set, then by DBSCAN label; DBSCAN noise is dropped.
pub fn segment_planes(cloud: &PointCloud, set_labels: &[i32], eps: f64, min_pts: usize) -> Vec<PlaneSegment> {
    let n_sets = set_labels.iter().map(|&l| l + 1).max().unwrap_or(0).max(0) as usize;
    let mut by_set = vec![Vec::new(); n_sets];
    for (i, &l) in set_labels.iter().enumerate() {
        if l >= 0 {
            by_set[l as usize].push(i);
        }
    }
    let per_set: Vec<Vec<PlaneSegment>> = by_set
        .par_iter()
        .enumerate()
        .map(|(set_id, idx)| {
            let pts: Vec<Point> = idx.iter().map(|&i| cloud.point(i)).collect();
            dbscan(&pts, eps, min_pts)
                .members()
                .into_iter()
                .map(|m| PlaneSegment {
                    set_id,
                    members: m.into_iter().map(|k| idx[k]).collect(),
                })
                .collect()
        })
        .collect();
    per_set.into_iter().flatten().collect()
}

/// Keep segments with at least `min_points` members, preserving order.
pub fn filter_small_planes(segments: Vec<PlaneSegment>, min_points: usize) -> Vec<PlaneSegment> {
    segments
        .into_iter()
        .filter(|s| s.members.len() >= min_points)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneFit {
    pub normal: UnitNormal,
    pub centroid: Point,
    /// Root-mean-square point-to-plane distance.
    pub rms: f64,
}

/// Orthogonal least-squares plane: the normal is the smallest-eigenvalue
/// eigenvector of the centred covariance.
pub fn fit_plane(points: &[Point]) -> Result<PlaneFit> {
    let (normal, _, centroid) =
        pca(points.iter().copied()).ok_or(Error::Degenerate("plane fit needs three non-collinear points"))?;
    let n = normal.to_vector();
    let ms = points
        .iter()
        .map(|p| (Vector3::from(*p) - centroid).dot(&n).powi(2))
        .sum::<f64>()
        / points.len() as f64;
    Ok(PlaneFit {
        normal,
        centroid: [centroid.x, centroid.y, centroid.z],
        rms: ms.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneCluster {
    pub set_id: usize,
    pub plane_id: usize,
    pub members: Vec<usize>,
    pub normal: UnitNormal,
    pub centroid: Point,
    pub rms: f64,
    pub pole: Orientation,
}

pub fn plane_pole(plane: &PlaneCluster) -> Orientation {
    normal_to_orientation(plane.normal.to_vector()).expect("fitted normals are unit length")
}

/// Fit every segment; plane ids follow segment order.
pub fn fit_segments(cloud: &PointCloud, segments: &[PlaneSegment]) -> Result<Vec<PlaneCluster>> {
    segments
        .par_iter()
        .enumerate()
        .map(|(plane_id, s)| {
            let pts: Vec<Point> = s.members.iter().map(|&i| cloud.point(i)).collect();
            let fit = fit_plane(&pts)?;
            Ok(PlaneCluster {
                set_id: s.set_id,
                plane_id,
                members: s.members.clone(),
                normal: fit.normal,
                centroid: fit.centroid,
                rms: fit.rms,
                pole: fit.normal.orientation(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetStatistics {
    pub set_id: usize,
    pub plane_count: usize,
    pub point_count: usize,
    pub mean_dip: f64,
    pub sd_dip: f64,
    pub mean_dipdir: f64,
    pub sd_dipdir: f64,
}

impl SetStatistics {
    pub fn mean_orientation(&self) -> Orientation {
        Orientation {
            dip: self.mean_dip,
            dip_direction: self.mean_dipdir,
        }
    }
}

/// Arithmetic mean and population standard deviation.
pub fn linear_stats(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Circular mean in `[0, 360)` and circular standard deviation
/// `√(−2 ln R̄)`, both in degrees.
pub fn circular_stats(degrees: &[f64]) -> Option<(f64, f64)> {
    if degrees.is_empty() {
        return None;
    }
    let (mut s, mut c) = (0.0, 0.0);
    for d in degrees {
        let (sd, cd) = d.to_radians().sin_cos();
        s += sd;
        c += cd;
    }
    let n = degrees.len() as f64;
    let mean = if s == 0.0 && c == 0.0 { 0.0 } else { wrap360(s.atan2(c).to_degrees()) };
    // 1 − R̄ from deviations about the mean keeps identical angles at exactly 0.
    let one_minus_r = degrees
        .iter()
        .map(|d| 2.0 * ((d - mean).to_radians() / 2.0).sin().powi(2))
        .sum::<f64>()
        / n;
    let ln_r = (-one_minus_r.clamp(0.0, 1.0 - f64::EPSILON)).ln_1p();
    Some((mean, (-2.0 * ln_r).sqrt().to_degrees()))
}

/// Statistics of one set from a list of orientations.
pub fn orientation_stats(set_id: usize, plane_count: usize, point_count: usize, o: &[Orientation]) -> Result<SetStatistics> {
    let dips: Vec<f64> = o.iter().map(|o| o.dip).collect();
    let dds: Vec<f64> = o.iter().map(|o| o.dip_direction).collect();
    let (mean_dip, sd_dip) = linear_stats(&dips).ok_or(Error::Degenerate("empty set"))?;
    let (mean_dipdir, sd_dipdir) = circular_stats(&dds).ok_or(Error::Degenerate("empty set"))?;
    Ok(SetStatistics {
        set_id,
        plane_count,
        point_count,
        mean_dip,
        sd_dip,
        mean_dipdir,
        sd_dipdir,
    })
}

/// Per-set statistics for the sets `0..n_sets`. `point_orientation` gives
/// the orientation of a cloud point. Every set must own at least one plane.
pub fn set_statistics(
    planes: &[PlaneCluster],
    n_sets: usize,
    point_orientation: impl Fn(usize) -> Orientation,
    source: StatsSource,
) -> Result<Vec<SetStatistics>> {
    let mut grouped: Vec<Vec<&PlaneCluster>> = vec![Vec::new(); n_sets];
    for p in planes {
        grouped[p.set_id].push(p);
    }
    grouped
        .iter()
        .enumerate()
        .map(|(set_id, ps)| {
            if ps.is_empty() {
                return Err(Error::Degenerate("set without planes"));
            }
            let point_count = ps.iter().map(|p| p.members.len()).sum();
            let o: Vec<Orientation> = match source {
                StatsSource::Points => ps
                    .iter()
                    .flat_map(|p| p.members.iter().map(|&i| point_orientation(i)))
                    .collect(),
                StatsSource::Poles => ps.iter().map(|p| p.pole).collect(),
            };
            orientation_stats(set_id, ps.len(), point_count, &o)
        })
        .collect()
}

/// Output of [`extract_planes`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlaneExtraction {
    pub planes: Vec<PlaneCluster>,
    pub sets: Vec<SetStatistics>,
    /// Final set id per cloud point, `-1` when the point is in no plane.
    pub point_set: Vec<i32>,
    /// Plane id per cloud point, `-1` when none.
    pub point_plane: Vec<i32>,
    /// Points that had a set label but ended in no retained plane.
    pub dropped: usize,
}

/// Segment, filter and fit planes per set, then compute set statistics.
/// Sets left without planes are removed and the rest renumbered in order.
pub fn extract_planes(
    cloud: &PointCloud,
    set_labels: &[i32],
    eps: f64,
    params: &PlaneParams,
    point_orientation: impl Fn(usize) -> Orientation,
) -> Result<PlaneExtraction> {
    params.validate()?;
    let segments = segment_planes(cloud, set_labels, eps, params.min_pts);
    let mut segments = filter_small_planes(segments, params.min_plane_points);
    let mut remap: Vec<Option<usize>> = vec![None; segments.iter().map(|s| s.set_id + 1).max().unwrap_or(0)];
    let mut next = 0;
    for s in &mut segments {
        let id = *remap[s.set_id].get_or_insert_with(|| {
            next += 1;
            next - 1
        });
        s.set_id = id;
    }
    let planes = fit_segments(cloud, &segments)?;
    let sets = set_statistics(&planes, next, point_orientation, params.stats)?;
    let mut point_set = vec![NOISE; cloud.len()];
    let mut point_plane = vec![NOISE; cloud.len()];
    for p in &planes {
        for &i in &p.members {
            point_set[i] = p.set_id as i32;
            point_plane[i] = p.plane_id as i32;
        }
    }
    let labelled = set_labels.iter().filter(|&&l| l >= 0).count();
    let kept: usize = planes.iter().map(|p| p.members.len()).sum();
    Ok(PlaneExtraction {
        planes,
        sets,
        point_set,
        point_plane,
        dropped: labelled - kept,
    })
}

/// Angle in degrees between a plane's pole and its set's mean pole.
pub fn pole_to_set_angle(plane: &PlaneCluster, set: &SetStatistics) -> f64 {
    plane.pole.angle_to(&set.mean_orientation())
}

/// Absolute dip direction difference on the circle.
pub fn dipdir_error(a: f64, b: f64) -> f64 {
    circular_diff(a, b)
}
