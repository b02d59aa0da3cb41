//! Single-pass planarity filter.
//!
//! For every point, the neighbours inside the support sphere are turned into
//! an elevation-versus-azimuth signal. On a plane that signal is one smooth
//! azimuthal cycle; anything else (edges, rubble, scatter) puts energy into the
//! higher harmonics. The spread of the harmonic amplitudes above the
//! fundamental decides the verdict.
//!
//! The global vertical is a poor viewing axis for steep planes: the elevation
//! of a plane dipping at `δ` is `atan(tan δ · cos(A − A₀))`, whose harmonics
//! grow with `tan(δ/2)` until a vertical plane no longer yields a function of
//! azimuth at all. [`FrameSet::Multi`] therefore evaluates the signal about
//! thirteen fixed viewing axes (the vertical first) and keeps the smallest
//! secondary spread; [`FrameSet::Vertical`] uses the vertical only.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::cloud::{radius_of_influence, Point, PointCloud, PointSpacing, SpatialIndex};
use crate::error::{Error, Result};

/// Fewest neighbours that can carry a signal.
pub const MIN_SIGNAL_PAIRS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair {
    /// Degrees in `[0, 360)`.
    pub azimuth: f64,
    /// Degrees in `[-90, 90]`.
    pub elevation: f64,
}

/// Neighbour directions seen from a query point, sorted by azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborAngles {
    pairs: Vec<AnglePair>,
}

impl NeighborAngles {
    pub fn pairs(&self) -> &[AnglePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Elevation samples on a uniform azimuth grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanaritySignal {
    samples: Vec<f64>,
}

impl PlanaritySignal {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumVerdict {
    /// `None` when the neighbourhood was too sparse to form a signal.
    pub secondary_std: Option<f64>,
    pub is_planar: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FrameSet {
    /// Global vertical only.
    Vertical,
    /// Vertical, the two horizontal axes, four body diagonals and six face
    /// diagonals.
    #[default]
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterParams {
    pub threshold_deg: f64,
    pub grid_n: usize,
    pub min_neighbors: usize,
    pub frames: FrameSet,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            threshold_deg: 1.0,
            grid_n: 64,
            min_neighbors: MIN_SIGNAL_PAIRS,
            frames: FrameSet::Multi,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_deg > 0.0 && self.threshold_deg.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "filter.threshold_deg must be positive, got {}",
                self.threshold_deg
            )));
        }
        if !self.grid_n.is_power_of_two() || self.grid_n < 4 {
            return Err(Error::InvalidParameter(format!(
                "filter.grid_n must be a power of two >= 4, got {}",
                self.grid_n
            )));
        }
        if self.min_neighbors < MIN_SIGNAL_PAIRS {
            return Err(Error::InvalidParameter(format!(
                "filter.min_neighbors must be >= {MIN_SIGNAL_PAIRS}, got {}",
                self.min_neighbors
            )));
        }
        Ok(())
    }
}

fn azimuth_deg(x: f64, y: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        return 0.0;
    }
    let a = y.atan2(x).to_degrees().rem_euclid(360.0);
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

fn angle_pair(v: &[f64; 3]) -> AnglePair {
    AnglePair {
        azimuth: azimuth_deg(v[0], v[1]),
        elevation: v[2].atan2(v[0].hypot(v[1])).to_degrees(),
    }
}

/// Azimuth/elevation of every neighbour relative to `q`. Neighbours should be
/// given in ascending point-index order; equal azimuths keep that order.
pub fn neighbor_angles(q: &Point, neighbours: &[Point]) -> Result<NeighborAngles> {
    let mut pairs = Vec::with_capacity(neighbours.len());
    for (i, p) in neighbours.iter().enumerate() {
        let v = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
        if v == [0.0; 3] {
            return Err(Error::CoincidentNeighbour { index: i });
        }
        pairs.push(angle_pair(&v));
    }
    sort_pairs(&mut pairs);
    Ok(NeighborAngles { pairs })
}

fn sort_pairs(pairs: &mut [AnglePair]) {
    // Stable, so ties keep input (point index) order.
    pairs.sort_by(|a, b| a.azimuth.total_cmp(&b.azimuth));
}

/// Linear interpolation of elevation over azimuth, wrapping at 360°, onto
/// `n` samples at azimuths `360·k/n`.
pub fn resample_signal(angles: &NeighborAngles, n: usize) -> Result<PlanaritySignal> {
    let mut samples = vec![0.0; n];
    resample_into(&angles.pairs, &mut samples)?;
    Ok(PlanaritySignal { samples })
}

fn resample_into(pairs: &[AnglePair], out: &mut [f64]) -> Result<()> {
    if pairs.len() < MIN_SIGNAL_PAIRS {
        return Err(Error::SparseSignal {
            required: MIN_SIGNAL_PAIRS,
            actual: pairs.len(),
        });
    }
    let n = out.len();
    let m = pairs.len();
    // `j` = first pair with azimuth strictly greater than the grid azimuth.
    let mut j = 0;
    for (k, slot) in out.iter_mut().enumerate() {
        let g = 360.0 * k as f64 / n as f64;
        while j < m && pairs[j].azimuth <= g {
            j += 1;
        }
        let (a0, e0) = if j == 0 {
            (pairs[m - 1].azimuth - 360.0, pairs[m - 1].elevation)
        } else {
            (pairs[j - 1].azimuth, pairs[j - 1].elevation)
        };
        let (a1, e1) = if j == m {
            (pairs[0].azimuth + 360.0, pairs[0].elevation)
        } else {
            (pairs[j].azimuth, pairs[j].elevation)
        };
        *slot = if a0 == g || a1 <= a0 {
            e0
        } else {
            e0 + (e1 - e0) * (g - a0) / (a1 - a0)
        };
    }
    Ok(())
}

/// Reusable FFT plan and buffers for one signal length.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl SpectrumAnalyzer {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        SpectrumAnalyzer {
            fft,
            buffer: vec![Complex::default(); n],
            scratch,
        }
    }

    /// One-sided amplitudes: `|X₀|/N` then `2|X_k|/N` for `k = 1..=N/2`.
    pub fn amplitudes(&mut self, samples: &[f64], out: &mut Vec<f64>) {
        let n = samples.len();
        debug_assert_eq!(n, self.buffer.len());
        for (b, &s) in self.buffer.iter_mut().zip(samples) {
            *b = Complex::new(s, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        out.clear();
        let scale = 1.0 / n as f64;
        out.push(self.buffer[0].norm() * scale);
        out.extend(self.buffer[1..=n / 2].iter().map(|c| 2.0 * c.norm() * scale));
    }
}

/// One-sided amplitude spectrum of `signal`, in the signal's units.
pub fn amplitude_spectrum(signal: &PlanaritySignal) -> Vec<f64> {
    let mut out = Vec::new();
    SpectrumAnalyzer::new(signal.samples.len()).amplitudes(&signal.samples, &mut out);
    out
}

/// Population standard deviation of the amplitudes above the fundamental.
pub fn secondary_std(spectrum: &[f64]) -> f64 {
    let secondary = &spectrum[2.min(spectrum.len())..];
    if secondary.is_empty() {
        return 0.0;
    }
    let n = secondary.len() as f64;
    let mean = secondary.iter().sum::<f64>() / n;
    let var = secondary.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    var.sqrt()
}

fn frame_axes(frames: FrameSet) -> Vec<Matrix3<f64>> {
    const AXES: [[f64; 3]; 13] = [
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, 1.0],
        [-1.0, 1.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, -1.0, 0.0],
        [1.0, 0.0, 1.0],
        [1.0, 0.0, -1.0],
        [0.0, 1.0, 1.0],
        [0.0, 1.0, -1.0],
    ];
    let count = match frames {
        FrameSet::Vertical => 1,
        FrameSet::Multi => AXES.len(),
    };
    AXES[..count]
        .iter()
        .map(|a| {
            let w = Vector3::from(*a).normalize();
            if w.z == 1.0 {
                return Matrix3::identity();
            }
            let helper = if w.z.abs() < 0.9 {
                Vector3::z()
            } else {
                Vector3::x()
            };
            let u = helper.cross(&w).normalize();
            let v = w.cross(&u);
            Matrix3::from_rows(&[u.transpose(), v.transpose(), w.transpose()])
        })
        .collect()
}

/// Per-point planarity classifier with a fixed support radius.
pub struct PlanarityFilter {
    params: FilterParams,
    radius: f64,
    frames: Vec<Matrix3<f64>>,
}

struct Workspace {
    analyzer: SpectrumAnalyzer,
    neighbours: Vec<usize>,
    offsets: Vec<Vector3<f64>>,
    pairs: Vec<AnglePair>,
    samples: Vec<f64>,
    spectrum: Vec<f64>,
}

impl PlanarityFilter {
    pub fn new(params: FilterParams, radius: f64) -> Result<Self> {
        params.validate()?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "support radius must be positive, got {radius}"
            )));
        }
        Ok(PlanarityFilter {
            params,
            radius,
            frames: frame_axes(params.frames),
        })
    }

    /// Filter whose radius follows from the point spacing.
    pub fn from_spacing(params: FilterParams, ps: PointSpacing) -> Result<Self> {
        Self::new(params, radius_of_influence(ps)?)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn workspace(&self) -> Workspace {
        Workspace {
            analyzer: SpectrumAnalyzer::new(self.params.grid_n),
            neighbours: Vec::new(),
            offsets: Vec::new(),
            pairs: Vec::new(),
            samples: vec![0.0; self.params.grid_n],
            spectrum: Vec::new(),
        }
    }

    pub fn classify(&self, cloud: &PointCloud, index: &SpatialIndex, q_index: usize) -> SpectrumVerdict {
        self.classify_with(cloud, index, q_index, &mut self.workspace())
    }

    fn classify_with(
        &self,
        cloud: &PointCloud,
        index: &SpatialIndex,
        q_index: usize,
        ws: &mut Workspace,
    ) -> SpectrumVerdict {
        let q = cloud.point(q_index);
        index.radius_query_into(&q, self.radius, &mut ws.neighbours);
        ws.offsets.clear();
        for &i in &ws.neighbours {
            if i == q_index {
                continue;
            }
            let p = cloud.point(i);
            let v = Vector3::new(p[0] - q[0], p[1] - q[1], p[2] - q[2]);
            // Duplicates of the query point carry no direction.
            if v != Vector3::zeros() {
                ws.offsets.push(v);
            }
        }
        let sparse = SpectrumVerdict {
            secondary_std: None,
            is_planar: false,
        };
        if ws.offsets.len() < self.params.min_neighbors {
            return sparse;
        }
        let mut best = f64::INFINITY;
        for frame in &self.frames {
            ws.pairs.clear();
            ws.pairs.extend(ws.offsets.iter().map(|v| {
                let r = frame * v;
                angle_pair(&[r.x, r.y, r.z])
            }));
            sort_pairs(&mut ws.pairs);
            if resample_into(&ws.pairs, &mut ws.samples).is_err() {
                return sparse;
            }
            ws.analyzer.amplitudes(&ws.samples, &mut ws.spectrum);
            let s = secondary_std(&ws.spectrum);
            best = best.min(s);
            if best <= self.params.threshold_deg {
                break;
            }
        }
        SpectrumVerdict {
            secondary_std: Some(best),
            is_planar: best <= self.params.threshold_deg,
        }
    }

    /// Verdict for every point, in point order.
    pub fn verdicts(&self, cloud: &PointCloud, index: &SpatialIndex) -> Vec<SpectrumVerdict> {
        (0..cloud.len())
            .into_par_iter()
            .map_init(|| self.workspace(), |ws, i| self.classify_with(cloud, index, i, ws))
            .collect()
    }

    /// `true` for points retained as planar.
    pub fn mask(&self, cloud: &PointCloud, index: &SpatialIndex) -> Vec<bool> {
        self.verdicts(cloud, index)
            .into_iter()
            .map(|v| v.is_planar)
            .collect()
    }
}

pub fn classify_point(
    q_index: usize,
    cloud: &PointCloud,
    index: &SpatialIndex,
    ps: PointSpacing,
    params: &FilterParams,
) -> Result<SpectrumVerdict> {
    Ok(PlanarityFilter::from_spacing(*params, ps)?.classify(cloud, index, q_index))
}

pub fn filter_cloud(
    cloud: &PointCloud,
    index: &SpatialIndex,
    ps: PointSpacing,
    params: &FilterParams,
) -> Result<Vec<bool>> {
    if cloud.is_empty() {
        return Ok(Vec::new());
    }
    Ok(PlanarityFilter::from_spacing(*params, ps)?.mask(cloud, index))
}
