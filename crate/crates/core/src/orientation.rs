//! Point normals, dip angle / dip direction, and the cyclic pole transform.
//!
//! Orientations are mapped into the unit disk with radius `tan(DA/2)` and
//! polar angle DD measured clockwise from north (`+y`). Dip direction then
//! wraps continuously around the origin, so 359° and 1° land next to each
//! other instead of at opposite ends of an axis.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{radius_of_influence, Point, PointCloud, PointSpacing, SpatialIndex};
use crate::error::{Error, Result};

/// `|nz|` at or below this counts as a horizontal normal.
const HORIZONTAL_EPS: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-9;
/// Accepted deviation from unit length for raw normals.
const RAW_UNIT_TOL: f64 = 1e-6;

/// Unit normal on the upper hemisphere (`nz ≥ 0`). Horizontal normals take
/// the sign that makes the first non-zero of `(nx, ny)` positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitNormal {
    nx: f64,
    ny: f64,
    nz: f64,
}

impl UnitNormal {
    /// Canonicalise a unit vector; errors if it is not unit length.
    pub fn new(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let norm = (nx * nx + ny * ny + nz * nz).sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self::canonical(nx, ny, nz))
    }

    /// Normalise then canonicalise. `None` for a zero or non-finite vector.
    pub fn from_vector(v: Vector3<f64>) -> Option<Self> {
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return None;
        }
        let u = v / norm;
        Some(Self::canonical(u.x, u.y, u.z))
    }

    fn canonical(nx: f64, ny: f64, nz: f64) -> Self {
        let flip = if nz.abs() <= HORIZONTAL_EPS {
            nx < 0.0 || (nx == 0.0 && ny < 0.0)
        } else {
            nz < 0.0
        };
        let s = if flip { -1.0 } else { 1.0 };
        let nz = if nz.abs() <= HORIZONTAL_EPS { 0.0 } else { s * nz };
        UnitNormal {
            nx: s * nx + 0.0,
            ny: s * ny + 0.0,
            nz,
        }
    }

    pub fn x(&self) -> f64 {
        self.nx
    }

    pub fn y(&self) -> f64 {
        self.ny
    }

    pub fn z(&self) -> f64 {
        self.nz
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.nx, self.ny, self.nz)
    }

    pub fn orientation(&self) -> Orientation {
        normal_to_orientation(self.to_vector()).expect("canonical normals are unit length")
    }

    /// Angle in degrees between the planes with these normals (`0..=90`).
    pub fn angle_to(&self, other: &UnitNormal) -> f64 {
        let (a, b) = (self.to_vector(), other.to_vector());
        a.cross(&b).norm().atan2(a.dot(&b).abs()).to_degrees()
    }
}

/// Dip angle and dip direction in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub dip: f64,
    pub dip_direction: f64,
}

impl Orientation {
    /// Validates ranges; dip direction is wrapped into `[0, 360)` and zeroed
    /// for horizontal planes.
    pub fn new(dip: f64, dip_direction: f64) -> Result<Self> {
        if !(0.0..=90.0).contains(&dip) || !dip_direction.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "orientation out of range: dip {dip}, dip direction {dip_direction}"
            )));
        }
        let dip_direction = if dip == 0.0 { 0.0 } else { wrap360(dip_direction) };
        Ok(Orientation { dip, dip_direction })
    }

    /// Unit normal of the plane (upper hemisphere).
    pub fn normal(&self) -> UnitNormal {
        let (sd, cd) = self.dip.to_radians().sin_cos();
        let (sa, ca) = self.dip_direction.to_radians().sin_cos();
        UnitNormal::canonical(sd * sa, sd * ca, cd)
    }

    pub fn pole(&self) -> TransformedPole {
        orientation_to_pole2d(self)
    }

    /// Angle in degrees between the planes.
    pub fn angle_to(&self, other: &Orientation) -> f64 {
        self.normal().angle_to(&other.normal())
    }
}

/// Wrap into `[0, 360)`.
pub fn wrap360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w + 0.0
    }
}

/// Absolute angular difference on the circle, in `[0, 180]`.
pub fn circular_diff(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let d = (hi - lo).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Transformed pole inside the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedPole {
    pub dx: f64,
    pub dy: f64,
}

impl TransformedPole {
    pub fn radius(&self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.dx, self.dy]
    }
}

/// Dip angle (angle of the normal from vertical) and dip direction `atan2(nx, ny)` of a unit normal.
///
/// Downward normals are folded onto the upper hemisphere (`DA → 180° − DA`,
/// `DD → DD + 180°`). For horizontal normals the dip direction is reduced to
/// `[0, 180)` so a normal and its negation describe the same plane.
pub fn normal_to_orientation(n: Vector3<f64>) -> Result<Orientation> {
    let norm = n.norm();
    if !((norm - 1.0).abs() <= RAW_UNIT_TOL) {
        return Err(Error::NotUnit { norm });
    }
    let nz = (n.z / norm).clamp(-1.0, 1.0);
    // atan2 keeps full precision near vertical normals, where acos does not.
    let mut dip = n.x.hypot(n.y).atan2(n.z).to_degrees();
    let mut dd = if n.x == 0.0 && n.y == 0.0 {
        0.0
    } else {
        n.x.atan2(n.y).to_degrees()
    };
    if dip > 90.0 {
        dip = 180.0 - dip;
        dd += 180.0;
    }
    if nz.abs() <= HORIZONTAL_EPS {
        dd = dd.rem_euclid(180.0);
    }
    let dd = if dip == 0.0 { 0.0 } else { wrap360(dd) };
    Ok(Orientation {
        dip,
        dip_direction: dd,
    })
}

pub fn orientation_to_pole2d(o: &Orientation) -> TransformedPole {
    let (sd, cd) = o.dip.to_radians().sin_cos();
    let r = sd / (1.0 + cd);
    let (sa, ca) = o.dip_direction.to_radians().sin_cos();
    TransformedPole {
        dx: r * sa,
        dy: r * ca,
    }
}

pub fn pole2d_to_orientation(p: &TransformedPole) -> Result<Orientation> {
    let r = p.radius();
    if r > 1.0 + UNIT_TOL {
        return Err(Error::PoleOutsideDisk { radius: r });
    }
    let dip = (2.0 * r.min(1.0).atan()).to_degrees().min(90.0);
    let dd = if r == 0.0 {
        0.0
    } else {
        wrap360(p.dx.atan2(p.dy).to_degrees())
    };
    Ok(Orientation {
        dip,
        dip_direction: if dip == 0.0 { 0.0 } else { dd },
    })
}

/// PCA normals over a fixed-radius neighbourhood.
pub struct NormalEstimator {
    radius: f64,
}

impl NormalEstimator {
    pub fn new(radius: f64) -> Self {
        NormalEstimator { radius }
    }

    pub fn from_spacing(ps: PointSpacing) -> Result<Self> {
        Ok(Self::new(radius_of_influence(ps)?))
    }

    /// Smallest-eigenvalue eigenvector of the neighbourhood covariance
    /// (query point included); `None` when no unique normal exists.
    pub fn estimate(&self, cloud: &PointCloud, index: &SpatialIndex, q_index: usize) -> Option<UnitNormal> {
        let mut buf = Vec::new();
        self.estimate_with(cloud, index, q_index, &mut buf)
    }

    fn estimate_with(
        &self,
        cloud: &PointCloud,
        index: &SpatialIndex,
        q_index: usize,
        buf: &mut Vec<usize>,
    ) -> Option<UnitNormal> {
        index.radius_query_into(&cloud.point(q_index), self.radius, buf);
        pca_normal(buf.iter().map(|&i| cloud.point(i)))
    }
}

/// Normal of the best-fit plane through `points` by covariance PCA, with
/// the eigenvalues `(λ0 ≤ λ1 ≤ λ2)` and centroid. `None` if fewer than three
/// points or the two smallest eigenvalues coincide.
pub(crate) fn pca(points: impl Iterator<Item = Point> + Clone) -> Option<(UnitNormal, [f64; 3], Vector3<f64>)> {
    let mut n = 0usize;
    let mut sum = Vector3::zeros();
    for p in points.clone() {
        sum += Vector3::from(p);
        n += 1;
    }
    if n < 3 {
        return None;
    }
    let centroid = sum / n as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::from(p) - centroid;
        cov += d * d.transpose();
    }
    cov /= n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda = order.map(|k| eig.eigenvalues[k].max(0.0));
    if !(lambda[2] > 0.0) || lambda[1] - lambda[0] <= 1e-12 * lambda[2] {
        return None;
    }
    let v = eig.eigenvectors.column(order[0]).into_owned();
    Some((UnitNormal::from_vector(v)?, lambda, centroid))
}

fn pca_normal(points: impl Iterator<Item = Point> + Clone) -> Option<UnitNormal> {
    pca(points).map(|(n, _, _)| n)
}

pub fn estimate_normal(
    q_index: usize,
    cloud: &PointCloud,
    index: &SpatialIndex,
    ps: PointSpacing,
) -> Result<Option<UnitNormal>> {
    Ok(NormalEstimator::from_spacing(ps)?.estimate(cloud, index, q_index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrientationRow {
    /// Index of the point in the source cloud.
    pub index: usize,
    pub normal: UnitNormal,
    pub orientation: Orientation,
    pub pole: TransformedPole,
}

/// Per-point orientations for retained, non-degenerate points in ascending
/// point order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OrientationTable {
    pub rows: Vec<OrientationRow>,
    /// Retained points whose normal was degenerate.
    pub degenerate: usize,
}

impl OrientationTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn poles(&self) -> Vec<[f64; 2]> {
        self.rows.iter().map(|r| r.pole.as_array()).collect()
    }
}

pub fn compute_orientations(
    cloud: &PointCloud,
    mask: &[bool],
    index: &SpatialIndex,
    radius: f64,
) -> OrientationTable {
    let estimator = NormalEstimator::new(radius);
    let retained: Vec<usize> = (0..cloud.len()).filter(|&i| mask[i]).collect();
    let normals: Vec<Option<UnitNormal>> = retained
        .par_iter()
        .map_init(Vec::new, |buf, &i| estimator.estimate_with(cloud, index, i, buf))
        .collect();
    let mut table = OrientationTable::default();
    for (&i, n) in retained.iter().zip(normals) {
        match n {
            Some(normal) => {
                let orientation = normal.orientation();
                table.rows.push(OrientationRow {
                    index: i,
                    normal,
                    orientation,
                    pole: orientation_to_pole2d(&orientation),
                });
            }
            None => table.degenerate += 1,
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(dip: f64, dd: f64) -> Orientation {
        Orientation::new(dip, dd).unwrap()
    }

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    #[test]
    fn orientation_of_reference_normals() {
        assert_eq!(normal_to_orientation(v(0.0, 0.0, 1.0)).unwrap(), o(0.0, 0.0));
        let east = normal_to_orientation(v(1.0, 0.0, 0.0)).unwrap();
        assert!((east.dip - 90.0).abs() < 1e-12);
        assert!((east.dip_direction - 90.0).abs() < 1e-12);
        // Downward normal folds through the DA > 90 branch onto the same plane.
        assert_eq!(normal_to_orientation(v(0.0, 0.0, -1.0)).unwrap(), o(0.0, 0.0));
        let down = normal_to_orientation(v(0.0, -0.6, -0.8)).unwrap();
        let up = normal_to_orientation(v(0.0, 0.6, 0.8)).unwrap();
        assert!((down.dip - up.dip).abs() < 1e-12);
        assert!(circular_diff(down.dip_direction, up.dip_direction) < 1e-12);
    }

    #[test]
    fn non_unit_normal_rejected() {
        assert!(matches!(
            normal_to_orientation(v(0.0, 0.0, 2.0)),
            Err(Error::NotUnit { .. })
        ));
        assert!(UnitNormal::new(0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn canonical_form() {
        let n = UnitNormal::new(-1.0, 0.0, 0.0).unwrap();
        assert_eq!((n.x(), n.y(), n.z()), (1.0, 0.0, 0.0));
        let n = UnitNormal::new(0.0, -1.0, 0.0).unwrap();
        assert_eq!((n.x(), n.y(), n.z()), (0.0, 1.0, 0.0));
        let n = UnitNormal::from_vector(v(0.6, 0.0, -0.8)).unwrap();
        assert!((n.x() + 0.6).abs() < 1e-15 && (n.z() - 0.8).abs() < 1e-15);
        // A rounding-level negative z still counts as horizontal.
        let n = UnitNormal::from_vector(v(-0.6, 0.8, -1e-17)).unwrap();
        assert_eq!(n.z(), 0.0);
        assert!(n.x() > 0.0);
    }

    #[test]
    fn pole_examples() {
        assert_eq!(orientation_to_pole2d(&o(0.0, 123.0)), TransformedPole { dx: 0.0, dy: 0.0 });
        let p = orientation_to_pole2d(&o(90.0, 0.0));
        assert!(p.dx.abs() < 1e-15 && (p.dy - 1.0).abs() < 1e-15);
        let p = orientation_to_pole2d(&o(45.0, 90.0));
        assert!((p.dx - 0.414214).abs() < 1e-6 && p.dy.abs() < 1e-15);
        assert!((p.dx - (22.5f64).to_radians().tan()).abs() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            pole2d_to_orientation(&TransformedPole { dx: 0.0, dy: 0.0 }).unwrap(),
            o(0.0, 0.0)
        );
        let back = pole2d_to_orientation(&TransformedPole {
            dx: (22.5f64).to_radians().tan(),
            dy: 0.0,
        })
        .unwrap();
        assert!((back.dip - 45.0).abs() < 1e-12);
        assert!((back.dip_direction - 90.0).abs() < 1e-12);
        assert!(matches!(
            pole2d_to_orientation(&TransformedPole { dx: 0.8, dy: 0.8 }),
            Err(Error::PoleOutsideDisk { .. })
        ));
    }

    #[test]
    fn seam_is_continuous() {
        for dip in [5.0, 30.0, 60.0, 89.0] {
            let a = orientation_to_pole2d(&o(dip, 360.0 - 1e-7));
            let b = orientation_to_pole2d(&o(dip, 1e-7));
            assert!((a.dx - b.dx).hypot(a.dy - b.dy) < 1e-8);
        }
    }

    #[test]
    fn radius_increases_with_dip() {
        let mut last = -1.0;
        for k in 0..=900 {
            let r = orientation_to_pole2d(&o(k as f64 * 0.1, 17.0)).radius();
            assert!(r > last);
            last = r;
        }
        assert!((last - 1.0).abs() < 1e-15);
    }

    #[test]
    fn antipodal_normals_share_a_pole() {
        for n in [v(0.3, -0.4, 0.866), v(-0.6, 0.8, 0.0), v(0.0, 0.0, 1.0), v(0.2, 0.9, -0.3)] {
            let n = n.normalize();
            let a = orientation_to_pole2d(&normal_to_orientation(n).unwrap());
            let b = orientation_to_pole2d(&normal_to_orientation(-n).unwrap());
            assert!((a.dx - b.dx).abs() < 1e-12 && (a.dy - b.dy).abs() < 1e-12, "{n:?}");
        }
    }

    fn plane_cloud(f: impl Fn(f64, f64) -> Point) -> PointCloud {
        let mut pts = Vec::new();
        for i in -6..=6 {
            for j in -6..=6 {
                pts.push(f(i as f64 * 0.02, j as f64 * 0.02));
            }
        }
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn normals_of_axis_planes() {
        let est = NormalEstimator::new(0.1);
        let cloud = plane_cloud(|a, b| [a, b, 0.0]);
        let index = SpatialIndex::build(&cloud).unwrap();
        let n = est.estimate(&cloud, &index, 84).unwrap();
        assert!((n.z() - 1.0).abs() < 1e-12);

        let cloud = plane_cloud(|a, b| [5.0, a, b]);
        let index = SpatialIndex::build(&cloud).unwrap();
        let n = est.estimate(&cloud, &index, 84).unwrap();
        assert!((n.x() - 1.0).abs() < 1e-12 && n.z() == 0.0);
    }

    #[test]
    fn collinear_neighbourhood_is_degenerate() {
        let cloud = PointCloud::new((0..10).map(|i| [i as f64 * 0.01, 0.0, 0.0]).collect()).unwrap();
        let index = SpatialIndex::build(&cloud).unwrap();
        assert_eq!(NormalEstimator::new(0.05).estimate(&cloud, &index, 5), None);
        let two = PointCloud::new(vec![[0.0; 3], [0.01, 0.0, 0.0]]).unwrap();
        let index = SpatialIndex::build(&two).unwrap();
        assert_eq!(NormalEstimator::new(0.05).estimate(&two, &index, 0), None);
    }

    #[test]
    fn empty_mask_gives_empty_table() {
        let cloud = plane_cloud(|a, b| [a, b, 0.0]);
        let index = SpatialIndex::build(&cloud).unwrap();
        let table = compute_orientations(&cloud, &vec![false; cloud.len()], &index, 0.1);
        assert!(table.is_empty());
    }
}
