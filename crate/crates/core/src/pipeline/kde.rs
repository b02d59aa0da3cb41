//! Gaussian kernel density over transformed poles and iso-density contours.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernels are cut off beyond this many bandwidths.
const TRUNCATE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KdeParams {
    pub grid_n: usize,
    /// Number of contour levels, evenly spaced below the peak density.
    pub levels: usize,
    /// Fixed bandwidth for both axes; Scott's rule when absent.
    pub bandwidth: Option<f64>,
}

impl Default for KdeParams {
    fn default() -> Self {
        KdeParams {
            grid_n: 128,
            levels: 6,
            bandwidth: None,
        }
    }
}

impl KdeParams {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 {
            return Err(Error::InvalidParameter("kde.grid_n must be at least 2".into()));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter("kde.bandwidth must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Density sampled at cell centres of a `n × n` grid over `[−1, 1]²`.
/// `values[iy * n + ix]`, with `iy` growing northwards.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub n: usize,
    pub values: Vec<f64>,
    pub bandwidth: [f64; 2],
}

impl DensityGrid {
    pub fn cell(&self) -> f64 {
        2.0 / self.n as f64
    }

    pub fn centre(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.cell()
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.n + ix]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Riemann sum of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell() * self.cell()
    }

    /// Grid cells that are strictly greater than all eight neighbours.
    pub fn local_maxima(&self) -> Vec<(usize, usize)> {
        let n = self.n as isize;
        let mut out = Vec::new();
        for iy in 0..n {
            for ix in 0..n {
                let v = self.at(ix as usize, iy as usize);
                if v <= 0.0 {
                    continue;
                }
                let mut peak = true;
                'nb: for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (x, y) = (ix + dx, iy + dy);
                        if (dx, dy) == (0, 0) || x < 0 || y < 0 || x >= n || y >= n {
                            continue;
                        }
                        if self.at(x as usize, y as usize) >= v {
                            peak = false;
                            break 'nb;
                        }
                    }
                }
                if peak {
                    out.push((ix as usize, iy as usize));
                }
            }
        }
        out
    }
}

/// Scott's rule per axis: `σ · n^(−1/6)`, never below one grid cell.
pub fn scott_bandwidth(poles: &[[f64; 2]], grid_n: usize) -> [f64; 2] {
    let n = poles.len() as f64;
    let floor = 2.0 / grid_n as f64;
    let mut h = [floor; 2];
    for (k, hk) in h.iter_mut().enumerate() {
        let mean = poles.iter().map(|p| p[k]).sum::<f64>() / n;
        let var = poles.iter().map(|p| (p[k] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        *hk = (var.sqrt() * n.powf(-1.0 / 6.0)).max(floor);
    }
    h
}

/// Product-Gaussian kernel density of `poles` on a `grid_n × grid_n` grid.
pub fn kde_density(poles: &[[f64; 2]], bandwidth: [f64; 2], grid_n: usize) -> Result<DensityGrid> {
    if poles.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            actual: poles.len(),
        });
    }
    if !bandwidth.iter().all(|h| *h > 0.0 && h.is_finite()) || grid_n < 2 {
        return Err(Error::InvalidParameter(
            "kde needs a positive bandwidth and grid_n ≥ 2".into(),
        ));
    }
    let cell = 2.0 / grid_n as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * bandwidth[0] * bandwidth[1] * poles.len() as f64);
    let mut values = vec![0.0; grid_n * grid_n];
    let index_range = |c: f64, h: f64| {
        let lo = ((c - TRUNCATE * h + 1.0) / cell - 0.5).ceil().max(0.0) as usize;
        let hi = ((c + TRUNCATE * h + 1.0) / cell - 0.5).floor().min(grid_n as f64 - 1.0);
        (lo, hi)
    };
    let mut wx = Vec::new();
    for p in poles {
        let (x0, x1) = index_range(p[0], bandwidth[0]);
        let (y0, y1) = index_range(p[1], bandwidth[1]);
        if x1 < x0 as f64 || y1 < y0 as f64 {
            continue;
        }
        let (x1, y1) = (x1 as usize, y1 as usize);
        wx.clear();
        wx.extend((x0..=x1).map(|ix| {
            let u = (-1.0 + (ix as f64 + 0.5) * cell - p[0]) / bandwidth[0];
            (-0.5 * u * u).exp()
        }));
        for iy in y0..=y1 {
            let v = (-1.0 + (iy as f64 + 0.5) * cell - p[1]) / bandwidth[1];
            let wy = (-0.5 * v * v).exp() * norm;
            let row = &mut values[iy * grid_n + x0..=iy * grid_n + x1];
            for (cell, w) in row.iter_mut().zip(&wx) {
                *cell += w * wy;
            }
        }
    }
    Ok(DensityGrid {
        n: grid_n,
        values,
        bandwidth,
    })
}

/// Line segments of one iso-density level, in pole coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    pub level: f64,
    pub segments: Vec<[[f64; 2]; 2]>,
}

/// `count` levels at `k / (count + 1)` of the peak density.
pub fn contour_levels(grid: &DensityGrid, count: usize) -> Vec<f64> {
    let max = grid.max();
    (1..=count)
        .map(|k| max * k as f64 / (count + 1) as f64)
        .collect()
}

/// Marching squares over cell centres. Saddles are split according to the
/// mean of the four corners.
pub fn contours(grid: &DensityGrid, levels: &[f64]) -> Vec<Contour> {
    levels.iter().map(|&l| contour_at(grid, l)).collect()
}

fn contour_at(grid: &DensityGrid, level: f64) -> Contour {
    let n = grid.n;
    let mut segments = Vec::new();
    for iy in 0..n.saturating_sub(1) {
        for ix in 0..n - 1 {
            // Corners counter-clockwise from bottom-left.
            let c = [
                (ix, iy),
                (ix + 1, iy),
                (ix + 1, iy + 1),
                (ix, iy + 1),
            ];
            let v = c.map(|(x, y)| grid.at(x, y));
            let pos = c.map(|(x, y)| [grid.centre(x), grid.centre(y)]);
            let inside = v.map(|x| x >= level);
            let edge_point = |e: usize| {
                let (a, b) = (e, (e + 1) % 4);
                let t = (level - v[a]) / (v[b] - v[a]);
                [
                    pos[a][0] + t * (pos[b][0] - pos[a][0]),
                    pos[a][1] + t * (pos[b][1] - pos[a][1]),
                ]
            };
            let crossing: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push([edge_point(crossing[0]), edge_point(crossing[1])]),
                4 => {
                    let centre_in = v.iter().sum::<f64>() / 4.0 >= level;
                    if centre_in == inside[0] {
                        segments.push([edge_point(0), edge_point(1)]);
                        segments.push([edge_point(2), edge_point(3)]);
                    } else {
                        segments.push([edge_point(3), edge_point(0)]);
                        segments.push([edge_point(1), edge_point(2)]);
                    }
                }
                _ => {}
            }
        }
    }
    Contour { level, segments }
}
