//! Seeded fixture generators with ground truth.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; the same
//! seed and parameters reproduce the same cloud bit for bit.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::{Point, PointCloud};
use crate::error::{Error, Result};
use crate::orientation::{normal_to_orientation, Orientation};
use crate::planes::SetStatistics;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One generating face or plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceTruth {
    pub id: usize,
    /// Set the face belongs to (antipodal pair for the icosphere).
    pub pair_id: usize,
    pub dip: f64,
    pub dipdir: f64,
    /// Outward mesh normal (not folded to the upper hemisphere).
    #[serde(skip)]
    pub normal: [f64; 3],
    #[serde(skip)]
    pub members: Vec<usize>,
}

impl FaceTruth {
    pub fn orientation(&self) -> Orientation {
        Orientation {
            dip: self.dip,
            dip_direction: self.dipdir,
        }
    }
}

/// Ground truth for a generated cloud. `point_face[i]` is the face of point
/// `i`, or `-1` for noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub faces: Vec<FaceTruth>,
    pub point_face: Vec<i32>,
}

impl GroundTruth {
    fn new(faces: Vec<FaceTruth>, point_face: Vec<i32>) -> Self {
        let mut gt = GroundTruth { faces, point_face };
        gt.fill_members();
        gt
    }

    fn fill_members(&mut self) {
        for f in &mut self.faces {
            f.members.clear();
        }
        for (i, &f) in self.point_face.iter().enumerate() {
            if f >= 0 {
                self.faces[f as usize].members.push(i);
            }
        }
    }

    pub fn n_sets(&self) -> usize {
        self.faces.iter().map(|f| f.pair_id + 1).max().unwrap_or(0)
    }

    /// One orientation per set, taken from its lowest-id face.
    pub fn set_orientations(&self) -> Vec<Orientation> {
        let mut out: Vec<Option<Orientation>> = vec![None; self.n_sets()];
        for f in &self.faces {
            out[f.pair_id].get_or_insert(f.orientation());
        }
        out.into_iter().map(|o| o.expect("every set has a face")).collect()
    }

    /// Set list usable as an evaluation reference (spreads are zero).
    pub fn reference_sets(&self) -> Vec<SetStatistics> {
        self.set_orientations()
            .iter()
            .enumerate()
            .map(|(set_id, o)| {
                let faces: Vec<&FaceTruth> = self.faces.iter().filter(|f| f.pair_id == set_id).collect();
                SetStatistics {
                    set_id,
                    plane_count: faces.len(),
                    point_count: faces.iter().map(|f| f.members.len()).sum(),
                    mean_dip: o.dip,
                    sd_dip: 0.0,
                    mean_dipdir: o.dip_direction,
                    sd_dipdir: 0.0,
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Read a sidecar written by [`GroundTruth::write_json`].
    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut gt: GroundTruth = serde_json::from_str(&text)?;
        for f in &mut gt.faces {
            f.normal = Orientation {
                dip: f.dip,
                dip_direction: f.dipdir,
            }
            .normal()
            .to_vector()
            .into();
        }
        gt.fill_members();
        Ok(gt)
    }
}

/// Triangle mesh on a sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Counter-clockwise seen from outside.
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn face_normal(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i]);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn face_centroid(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i]);
        (a + b + c) / 3.0
    }
}

/// Regular icosahedron on a sphere of `radius`, each face split into four
/// `subdivisions` times with new vertices pushed out to the sphere.
pub fn icosphere_mesh(radius: f64, subdivisions: u32) -> Mesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut vertices: Vec<Vector3<f64>> = raw
        .iter()
        .map(|v| Vector3::from(*v).normalize() * radius)
        .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vector3<f64>>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = ((vertices[a] + vertices[b]) / 2.0).normalize() * radius;
                vertices.push(m);
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    Mesh { vertices, faces }
}

/// Split `total` into integer shares proportional to `weights` (largest
/// remainder, ties to the lower index).
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in &order {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

fn sample_triangle(rng: &mut ChaCha8Rng, a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>) -> Point {
    let s = rng.gen::<f64>().sqrt();
    let t = rng.gen::<f64>();
    let p = a * (1.0 - s) + b * (s * (1.0 - t)) + c * (s * t);
    [p.x, p.y, p.z]
}

/// Points on the flat faces of an icosphere, allocated by face area.
///
/// Faces in an antipodal pair share a `pair_id`; pair ids follow the lower
/// face id of each pair.
pub fn generate_icosphere(radius: f64, subdivisions: u32, total_points: usize, seed: u64) -> (PointCloud, GroundTruth) {
    let mesh = icosphere_mesh(radius, subdivisions);
    let nf = mesh.faces.len();
    let centroids: Vec<Vector3<f64>> = (0..nf).map(|f| mesh.face_centroid(f)).collect();
    let mut pair = vec![usize::MAX; nf];
    let mut next_pair = 0;
    for f in 0..nf {
        if pair[f] != usize::MAX {
            continue;
        }
        let opposite = (0..nf)
            .filter(|&g| g != f)
            .min_by(|&g, &h| {
                (centroids[g] + centroids[f])
                    .norm()
                    .total_cmp(&(centroids[h] + centroids[f]).norm())
            })
            .expect("mesh has more than one face");
        pair[f] = next_pair;
        pair[opposite] = next_pair;
        next_pair += 1;
    }
    let faces: Vec<FaceTruth> = (0..nf)
        .map(|f| {
            let n = mesh.face_normal(f);
            let o = normal_to_orientation(n).expect("unit normal");
            FaceTruth {
                id: f,
                pair_id: pair[f],
                dip: o.dip,
                dipdir: o.dip_direction,
                normal: [n.x, n.y, n.z],
                members: Vec::new(),
            }
        })
        .collect();
    let areas: Vec<f64> = (0..nf).map(|f| mesh.face_area(f)).collect();
    let counts = apportion(total_points, &areas);
    let mut rng = rng(seed);
    let mut points = Vec::with_capacity(total_points);
    let mut point_face = Vec::with_capacity(total_points);
    for (f, &count) in counts.iter().enumerate() {
        let [a, b, c] = mesh.faces[f].map(|i| mesh.vertices[i]);
        for _ in 0..count {
            points.push(sample_triangle(&mut rng, a, b, c));
            point_face.push(f as i32);
        }
    }
    (
        PointCloud::new(points).expect("finite points"),
        GroundTruth::new(faces, point_face),
    )
}

/// The two plane-fan test cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FanCase {
    /// Twelve planes dipping 45°, dip directions 0° to 330° in 30° steps.
    FixedDip45,
    /// Seven planes dipping towards 90°, dips 0° to 90° in 15° steps.
    FixedDd90,
}

impl std::str::FromStr for FanCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_dip_45" | "1" => Ok(FanCase::FixedDip45),
            "fixed_dd_90" | "2" => Ok(FanCase::FixedDd90),
            _ => Err(Error::InvalidParameter(format!(
                "unknown plane fan case `{s}` (expected fixed_dip_45 or fixed_dd_90)"
            ))),
        }
    }
}

impl FanCase {
    pub fn orientations(self) -> Vec<Orientation> {
        match self {
            FanCase::FixedDip45 => (0..12)
                .map(|k| Orientation {
                    dip: 45.0,
                    dip_direction: 30.0 * k as f64,
                })
                .collect(),
            FanCase::FixedDd90 => (0..7)
                .map(|k| {
                    let dip = 15.0 * k as f64;
                    Orientation {
                        dip,
                        dip_direction: if dip == 0.0 { 0.0 } else { 90.0 },
                    }
                })
                .collect(),
        }
    }
}

/// In-plane unit axes `(strike, dip line)` for an orientation.
pub fn plane_axes(o: &Orientation) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let n = o.normal().to_vector();
    let (sa, ca) = o.dip_direction.to_radians().sin_cos();
    let strike = Vector3::new(ca, -sa, 0.0);
    let down = n.cross(&strike).normalize();
    (strike, down, n)
}

fn square_on_plane(
    rng: &mut ChaCha8Rng,
    o: &Orientation,
    centre: Vector3<f64>,
    extent: f64,
    count: usize,
    out: &mut Vec<Point>,
) {
    let (u, v, _) = plane_axes(o);
    for _ in 0..count {
        let a = (rng.gen::<f64>() - 0.5) * extent;
        let b = (rng.gen::<f64>() - 0.5) * extent;
        let p = centre + u * a + v * b;
        out.push([p.x, p.y, p.z]);
    }
}

/// Square planes of side `extent`, one per orientation of `case`, with
/// centres `2·extent` apart along x so no two planes meet.
pub fn generate_plane_fan(case: FanCase, points_per_plane: usize, extent: f64, seed: u64) -> (PointCloud, GroundTruth) {
    let mut rng = rng(seed);
    let mut points = Vec::new();
    let mut point_face = Vec::new();
    let mut faces = Vec::new();
    for (k, o) in case.orientations().iter().enumerate() {
        let centre = Vector3::new(2.0 * extent * k as f64, 0.0, 0.0);
        square_on_plane(&mut rng, o, centre, extent, points_per_plane, &mut points);
        point_face.extend(std::iter::repeat(k as i32).take(points_per_plane));
        faces.push(FaceTruth {
            id: k,
            pair_id: k,
            dip: o.dip,
            dipdir: o.dip_direction,
            normal: o.normal().to_vector().into(),
            members: Vec::new(),
        });
    }
    (
        PointCloud::new(points).expect("finite points"),
        GroundTruth::new(faces, point_face),
    )
}

/// Square plane of side `extent` through the origin: one point per grid
/// cell (cell size `1/√density`) placed uniformly inside the cell, then
/// displaced along the normal by `N(0, sigma²)`.
pub fn generate_noisy_plane(
    orientation: Orientation,
    extent: f64,
    density: f64,
    sigma: f64,
    seed: u64,
) -> Result<(PointCloud, GroundTruth)> {
    if !(sigma >= 0.0 && extent > 0.0 && density > 0.0) {
        return Err(Error::InvalidParameter(
            "noisy plane needs sigma ≥ 0, extent > 0 and density > 0".into(),
        ));
    }
    let m = ((extent * density.sqrt()).round() as usize).max(1);
    let step = extent / m as f64;
    let (u, v, n) = plane_axes(&orientation);
    let mut rng = rng(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut points = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let a = -extent / 2.0 + (i as f64 + rng.gen::<f64>()) * step;
            let b = -extent / 2.0 + (j as f64 + rng.gen::<f64>()) * step;
            let h = if sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            let p = u * a + v * b + n * h;
            points.push([p.x, p.y, p.z]);
        }
    }
    let count = points.len();
    let face = FaceTruth {
        id: 0,
        pair_id: 0,
        dip: orientation.dip,
        dipdir: orientation.dip_direction,
        normal: n.into(),
        members: Vec::new(),
    };
    Ok((
        PointCloud::new(points).expect("finite points"),
        GroundTruth::new(vec![face], vec![0; count]),
    ))
}

/// `count` points uniformly distributed inside a ball. All are noise.
pub fn generate_noise_ball(centre: Point, radius: f64, count: usize, seed: u64) -> (PointCloud, GroundTruth) {
    let mut rng = rng(seed);
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let p: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        if p.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            points.push([
                centre[0] + radius * p[0],
                centre[1] + radius * p[1],
                centre[2] + radius * p[2],
            ]);
        }
    }
    (
        PointCloud::new(points).expect("finite points"),
        GroundTruth::new(Vec::new(), vec![-1; count]),
    )
}

/// Two half-planes meeting along the x axis at `angle` degrees, each
/// `extent` wide along the ridge and `extent` deep. Sampling is a jittered
/// grid of spacing `1/√density`. Returns each point's distance to the ridge.
pub fn generate_ridge(angle: f64, extent: f64, density: f64, seed: u64) -> (PointCloud, GroundTruth, Vec<f64>) {
    let step = 1.0 / density.sqrt();
    let m_along = (extent / step).round() as usize;
    let m_across = (extent / step).round() as usize;
    let half = (90.0 - angle / 2.0).to_radians();
    let (sh, ch) = half.sin_cos();
    let mut rng = rng(seed);
    let mut points = Vec::new();
    let mut point_face = Vec::new();
    let mut dist = Vec::new();
    for (face, side) in [(0usize, 1.0), (1usize, -1.0)] {
        for i in 0..m_along {
            for j in 0..m_across {
                let x = -extent / 2.0 + (i as f64 + 0.5 + rng.gen_range(-0.2..0.2)) * step;
                let u = (j as f64 + 0.5 + rng.gen_range(-0.2..0.2)) * step;
                points.push([x, side * u * ch, -u * sh]);
                point_face.push(face as i32);
                dist.push(u);
            }
        }
    }
    let faces = [1.0, -1.0]
        .iter()
        .enumerate()
        .map(|(id, side)| {
            let n = Vector3::new(0.0, side * sh, ch);
            let o = normal_to_orientation(n).expect("unit normal");
            FaceTruth {
                id,
                pair_id: id,
                dip: o.dip,
                dipdir: o.dip_direction,
                normal: n.into(),
                members: Vec::new(),
            }
        })
        .collect();
    (
        PointCloud::new(points).expect("finite points"),
        GroundTruth::new(faces, point_face),
        dist,
    )
}
