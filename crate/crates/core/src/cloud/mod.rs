//! Point clouds, point spacing, the adaptive support radius, and radius
//! queries.

mod io;

use std::collections::BTreeMap;

use log::warn;

use crate::error::{Error, Result};
use crate::spatial::KdTree;

pub use io::{load_cloud, read_ply, read_xyz, write_ply, CloudFormat, PlyColumn, PlyEncoding};

pub type Point = [f64; 3];

/// Point spacings at or above this are outside the range the support radius
/// formula was tuned for.
pub const STRUCTURE_MAPPING_MAX_SPACING: f64 = 0.15;

/// Upper bound on the spacing for which `5·ps − 16·ps²` stays positive.
pub const RADIUS_FORMULA_MAX_SPACING: f64 = 5.0 / 16.0;

/// An immutable set of 3D points (metres) with optional per-point columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    attributes: BTreeMap<String, Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if let Some(index) = points
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite { index });
        }
        Ok(PointCloud {
            points,
            attributes: BTreeMap::new(),
        })
    }

    pub fn empty() -> Self {
        PointCloud {
            points: Vec::new(),
            attributes: BTreeMap::new(),
        }
    }

    /// Attach a per-point column. The column length must equal the point count.
    pub fn with_attribute(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() != self.points.len() {
            return Err(Error::InvalidParameter(format!(
                "attribute `{name}` has {} values for {} points",
                values.len(),
                self.points.len()
            )));
        }
        self.attributes.insert(name, values);
        Ok(self)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Point {
        self.points[index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn attribute(&self, name: &str) -> Option<&[f64]> {
        self.attributes.get(name).map(Vec::as_slice)
    }

    pub fn attributes(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.attributes
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// A new cloud holding the points at `indices` (attributes dropped).
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            attributes: BTreeMap::new(),
        }
    }
}

/// Average distance between neighbouring points, in metres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PointSpacing(f64);

impl PointSpacing {
    pub fn new(ps: f64) -> Result<Self> {
        if !(ps.is_finite() && ps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "point spacing must be positive, got {ps}"
            )));
        }
        if ps >= STRUCTURE_MAPPING_MAX_SPACING {
            warn!("point spacing {ps} m is coarser than structure-mapping grade (< 0.15 m)");
        }
        Ok(PointSpacing(ps))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Mean distance from each point to its nearest neighbour.
///
/// This stands in for a Delaunay-based spacing and is what drives the
/// support radius unless an explicit spacing is supplied.
pub fn estimate_point_spacing(cloud: &PointCloud) -> Result<PointSpacing> {
    let index = SpatialIndex::build(cloud)?;
    estimate_point_spacing_with(cloud, &index)
}

pub fn estimate_point_spacing_with(cloud: &PointCloud, index: &SpatialIndex) -> Result<PointSpacing> {
    if cloud.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            actual: cloud.len(),
        });
    }
    let total: f64 = cloud
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| index.tree.nearest(p, 1, Some(i))[0].0)
        .sum();
    let ps = total / cloud.len() as f64;
    if ps <= 0.0 {
        return Err(Error::Degenerate("all points coincide"));
    }
    PointSpacing::new(ps)
}

/// Adaptive support radius `5·ps − 16·ps²`, evaluated with a single rounding.
pub fn radius_of_influence(ps: PointSpacing) -> Result<f64> {
    let ps = ps.get();
    if !(ps > 0.0 && ps < RADIUS_FORMULA_MAX_SPACING) {
        return Err(Error::RadiusOutOfRange { ps });
    }
    Ok((-16.0 * ps).mul_add(ps, 5.0 * ps))
}

/// Radius-query acceleration structure over a [`PointCloud`].
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    tree: KdTree<3>,
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        Ok(Self::from_points(cloud.points().to_vec()))
    }

    pub(crate) fn from_points(points: Vec<Point>) -> Self {
        SpatialIndex {
            tree: KdTree::new(points),
        }
    }

    /// All indices `i` with `|p_i − q| ≤ r`, in ascending order.
    pub fn radius_query(&self, q: &Point, r: f64) -> Vec<usize> {
        self.tree.within(q, r)
    }

    pub fn radius_query_into(&self, q: &Point, r: f64, out: &mut Vec<usize>) {
        self.tree.within_into(q, r, out)
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }
}

/// Free-function form of [`SpatialIndex::build`].
pub fn build_spatial_index(cloud: &PointCloud) -> Result<SpatialIndex> {
    SpatialIndex::build(cloud)
}
