//! End-to-end run: load, filter, orient, cluster, extract planes, report.

pub mod eval;
pub mod kde;
pub mod stereonet;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::cloud::{
    estimate_point_spacing_with, load_cloud, radius_of_influence, write_ply, CloudFormat, PlyColumn,
    PlyEncoding, PointCloud, PointSpacing, SpatialIndex,
};
use crate::error::{Error, Result};
use crate::filter::{FilterParams, PlanarityFilter};
use crate::hdbscan::{hdbscan_full, ClusterLabels, CondensedTree, HdbscanParams, NOISE};
use crate::orientation::{compute_orientations, Orientation, OrientationTable};
use crate::planes::{extract_planes, PlaneExtraction, PlaneParams, SetStatistics};

pub use eval::{evaluate_against_reference, read_set_list, EvaluationResult, MatchedPair};
pub use kde::{contour_levels, contours, kde_density, scott_bandwidth, Contour, DensityGrid, KdeParams};
pub use stereonet::{render_stereonet_svg, stereonet_svg, Stereonet};

/// JSON schema of `report.json`.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// Which files a run writes besides `report.json`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    pub labeled_ply: bool,
    pub stereonet: bool,
    /// `poles.csv` and `planes.csv`.
    pub csv: bool,
    pub condensed_tree: bool,
    /// Upper limit on pole markers in the stereonet (evenly strided).
    pub max_markers: usize,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions {
            labeled_ply: true,
            stereonet: true,
            csv: false,
            condensed_tree: false,
            max_markers: 20_000,
        }
    }
}

/// Everything a run needs. Loadable from TOML; unknown keys are rejected.
///
/// ```toml
/// input = "stope.ply"
/// out = "results"
/// ps = 0.025
///
/// [cluster]
/// min_cluster_size = 500
/// min_samples = 15
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    /// Guessed from the input extension when absent.
    #[serde(default)]
    pub format: Option<CloudFormat>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Point spacing override in metres; estimated when absent.
    #[serde(default)]
    pub ps: Option<f64>,
    /// Seeds the choice of stereonet markers when they are thinned.
    #[serde(default)]
    pub seed: u64,
    /// Leave `timings_ms` empty so reports compare byte for byte.
    #[serde(default)]
    pub no_timing: bool,
    #[serde(default)]
    pub filter: FilterParams,
    #[serde(default)]
    pub cluster: HdbscanParams,
    #[serde(default)]
    pub planes: PlaneParams,
    #[serde(default)]
    pub kde: KdeParams,
    #[serde(default)]
    pub output: OutputOptions,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input: input.into(),
            format: None,
            out: out.into(),
            ps: None,
            seed: 0,
            no_timing: false,
            filter: FilterParams::default(),
            cluster: HdbscanParams::default(),
            planes: PlaneParams::default(),
            kde: KdeParams::default(),
            output: OutputOptions::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.filter.validate().map_err(wrap)?;
        self.cluster.validate().map_err(wrap)?;
        self.planes.validate().map_err(wrap)?;
        self.kde.validate().map_err(wrap)?;
        if let Some(ps) = self.ps {
            PointSpacing::new(ps).map_err(wrap)?;
        }
        self.input_format()?;
        Ok(())
    }

    pub fn input_format(&self) -> Result<CloudFormat> {
        self.format
            .or_else(|| CloudFormat::from_path(&self.input))
            .ok_or_else(|| {
                Error::Config(format!(
                    "cannot tell the format of {}; pass --format",
                    self.input.display()
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub count: usize,
    pub ps: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub retained: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub id: usize,
    pub point_count: usize,
    pub plane_count: usize,
    pub mean_dip: f64,
    pub sd_dip: f64,
    pub mean_dipdir: f64,
    pub sd_dipdir: f64,
}

impl From<&SetStatistics> for SetSummary {
    fn from(s: &SetStatistics) -> Self {
        SetSummary {
            id: s.set_id,
            point_count: s.point_count,
            plane_count: s.plane_count,
            mean_dip: s.mean_dip,
            sd_dip: s.sd_dip,
            mean_dipdir: s.mean_dipdir,
            sd_dipdir: s.sd_dipdir,
        }
    }
}

impl From<&SetSummary> for SetStatistics {
    fn from(s: &SetSummary) -> Self {
        SetStatistics {
            set_id: s.id,
            plane_count: s.plane_count,
            point_count: s.point_count,
            mean_dip: s.mean_dip,
            sd_dip: s.sd_dip,
            mean_dipdir: s.mean_dipdir,
            sd_dipdir: s.sd_dipdir,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSummary {
    pub id: usize,
    pub set_id: usize,
    pub point_count: usize,
    pub dip: f64,
    pub dipdir: f64,
    pub centroid: [f64; 3],
    pub rms: f64,
}

/// Where every input point ended up. The five counts add up to the input
/// count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accounting {
    pub filtered_out: usize,
    pub degenerate: usize,
    pub cluster_noise: usize,
    /// In a set, but in no plane that survived segmentation and the size
    /// filter.
    pub plane_noise: usize,
    pub plane_member: usize,
}

impl Accounting {
    pub fn total(&self) -> usize {
        self.filtered_out + self.degenerate + self.cluster_noise + self.plane_noise + self.plane_member
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub input: InputSummary,
    pub filter: FilterSummary,
    pub sets: Vec<SetSummary>,
    pub planes: Vec<PlaneSummary>,
    pub accounting: Accounting,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn set_statistics(&self) -> Vec<SetStatistics> {
        self.sets.iter().map(SetStatistics::from).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// In-memory result of a run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: RunReport,
    pub cloud: PointCloud,
    pub mask: Vec<bool>,
    pub orientations: OrientationTable,
    /// Set label per orientation row before plane extraction.
    pub pole_labels: ClusterLabels,
    pub planes: PlaneExtraction,
    pub condensed: Option<CondensedTree>,
    pub density: Option<DensityGrid>,
    pub contours: Vec<Contour>,
}

impl PipelineOutput {
    /// Final set id per orientation row.
    pub fn row_sets(&self) -> Vec<i32> {
        self.orientations
            .rows
            .iter()
            .map(|r| self.planes.point_set[r.index])
            .collect()
    }
}

struct Timer {
    enabled: bool,
    last: Instant,
    out: BTreeMap<String, f64>,
}

impl Timer {
    fn new(enabled: bool) -> Self {
        Timer {
            enabled,
            last: Instant::now(),
            out: BTreeMap::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        if self.enabled {
            let ms = (now - self.last).as_secs_f64() * 1e3;
            self.out.insert(stage.to_string(), (ms * 1e3).round() / 1e3);
        }
        self.last = now;
    }
}

/// Run every stage on an in-memory cloud. No files are touched.
pub fn analyse(cloud: PointCloud, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let mut timer = Timer::new(!cfg.no_timing);
    if cloud.len() < 2 {
        return Err(Error::in_stage("input")(Error::TooFewPoints {
            required: 2,
            actual: cloud.len(),
        }));
    }
    let index = SpatialIndex::build(&cloud).map_err(Error::in_stage("spacing"))?;
    let ps = match cfg.ps {
        Some(ps) => PointSpacing::new(ps),
        None => estimate_point_spacing_with(&cloud, &index),
    }
    .map_err(Error::in_stage("spacing"))?;
    let radius = radius_of_influence(ps).map_err(Error::in_stage("spacing"))?;
    info!("{} points, spacing {:.5} m, support radius {:.5} m", cloud.len(), ps.get(), radius);
    timer.lap("spacing");

    let filter = PlanarityFilter::new(cfg.filter, radius).map_err(Error::in_stage("filter"))?;
    let mask = filter.mask(&cloud, &index);
    let retained = mask.iter().filter(|&&m| m).count();
    info!("filter kept {retained} of {} points", cloud.len());
    timer.lap("filter");

    let orientations = compute_orientations(&cloud, &mask, &index, radius);
    timer.lap("orientation");

    let poles = orientations.poles();
    let (pole_labels, condensed) = if poles.len() > cfg.cluster.min_samples {
        let r = hdbscan_full(&poles, &cfg.cluster).map_err(Error::in_stage("cluster"))?;
        (r.labels, Some(r.tree))
    } else {
        warn!(
            "{} poles is not more than min_samples = {}; no sets",
            poles.len(),
            cfg.cluster.min_samples
        );
        (ClusterLabels::all_noise(poles.len()), None)
    };
    info!("{} orientation sets before plane extraction", pole_labels.n_clusters());
    if pole_labels.n_clusters() == 0 && condensed.as_ref().is_some_and(|t| t.clusters.len() == 1) {
        warn!("pole density never splits into two clusters of min_cluster_size; a single-set cloud yields no sets");
    }
    timer.lap("cluster");

    let mut point_label = vec![NOISE; cloud.len()];
    let mut point_orientation: Vec<Option<Orientation>> = vec![None; cloud.len()];
    for (row, &l) in orientations.rows.iter().zip(pole_labels.labels()) {
        point_label[row.index] = l;
        point_orientation[row.index] = Some(row.orientation);
    }
    let eps = cfg.planes.eps_factor * ps.get();
    let planes = extract_planes(&cloud, &point_label, eps, &cfg.planes, |i| {
        point_orientation[i].expect("plane members carry orientations")
    })
    .map_err(Error::in_stage("planes"))?;
    timer.lap("planes");

    let (density, contours) = if poles.len() >= 2 {
        let h = cfg
            .kde
            .bandwidth
            .map_or_else(|| scott_bandwidth(&poles, cfg.kde.grid_n), |h| [h, h]);
        let grid = kde_density(&poles, h, cfg.kde.grid_n).map_err(Error::in_stage("kde"))?;
        let c = contours(&grid, &contour_levels(&grid, cfg.kde.levels));
        (Some(grid), c)
    } else {
        (None, Vec::new())
    };
    timer.lap("kde");

    let cluster_noise = pole_labels.noise_count();
    let accounting = Accounting {
        filtered_out: cloud.len() - retained,
        degenerate: orientations.degenerate,
        cluster_noise,
        plane_noise: planes.dropped,
        plane_member: planes.planes.iter().map(|p| p.members.len()).sum(),
    };
    debug_assert_eq!(accounting.total(), cloud.len());
    let report = RunReport {
        input: InputSummary {
            count: cloud.len(),
            ps: ps.get(),
            radius,
        },
        filter: FilterSummary {
            retained,
            removed: cloud.len() - retained,
        },
        sets: planes.sets.iter().map(SetSummary::from).collect(),
        planes: planes
            .planes
            .iter()
            .map(|p| PlaneSummary {
                id: p.plane_id,
                set_id: p.set_id,
                point_count: p.members.len(),
                dip: p.pole.dip,
                dipdir: p.pole.dip_direction,
                centroid: p.centroid,
                rms: p.rms,
            })
            .collect(),
        accounting,
        timings_ms: timer.out,
    };
    Ok(PipelineOutput {
        report,
        cloud,
        mask,
        orientations,
        pole_labels,
        planes,
        condensed,
        density,
        contours,
    })
}

/// Load the configured input, run [`analyse`] and write the outputs into
/// `cfg.out`. On failure any files this run created are removed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let format = cfg.input_format()?;
    let cloud = load_cloud(&cfg.input, format).map_err(Error::in_stage("input"))?;
    let out = analyse(cloud, cfg)?;
    write_outputs(&out, cfg).map_err(Error::in_stage("output"))?;
    Ok(out.report)
}

/// Write `report.json` and the enabled extras.
pub fn write_outputs(out: &PipelineOutput, cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let dir = &cfg.out;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let result = (|| -> Result<()> {
        let path = dir.join("report.json");
        write_report_json(&out.report, &path)?;
        written.push(path);
        if cfg.output.labeled_ply {
            let path = dir.join("labeled.ply");
            write_labeled_ply(&out.cloud, &out.planes.point_set, &out.planes.point_plane, &path)?;
            written.push(path);
        }
        if cfg.output.stereonet {
            let path = dir.join("stereonet.svg");
            let poles = out.orientations.poles();
            let labels = out.row_sets();
            let keep = marker_subset(poles.len(), cfg.output.max_markers, cfg.seed);
            let poles: Vec<[f64; 2]> = keep.iter().map(|&i| poles[i]).collect();
            let labels: Vec<i32> = keep.iter().map(|&i| labels[i]).collect();
            render_stereonet_svg(
                &Stereonet {
                    poles: &poles,
                    labels: &labels,
                    sets: &out.planes.sets,
                    contours: Some(&out.contours),
                    title: cfg.input.file_name().and_then(|s| s.to_str()),
                },
                &path,
            )?;
            written.push(path);
        }
        if cfg.output.csv {
            let path = dir.join("poles.csv");
            std::fs::write(&path, poles_csv(out)).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            let path = dir.join("planes.csv");
            std::fs::write(&path, planes_csv(&out.report)).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        if cfg.output.condensed_tree {
            if let Some(tree) = &out.condensed {
                let path = dir.join("condensed_tree.json");
                let text = serde_json::to_string(tree)?;
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            Err(e)
        }
    }
}

/// Indices of at most `max` markers. All indices when under the limit,
/// otherwise a seeded random subset in ascending order.
fn marker_subset(n: usize, max: usize, seed: u64) -> Vec<usize> {
    use rand::seq::index::sample;
    use rand::SeedableRng;
    if n <= max {
        return (0..n).collect();
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut keep = sample(&mut rng, n, max).into_vec();
    keep.sort_unstable();
    keep
}

fn poles_csv(out: &PipelineOutput) -> String {
    let mut s = String::from("index,nx,ny,nz,dip,dipdir,pole_x,pole_y,set_id,plane_id\n");
    for r in &out.orientations.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.normal.x(),
            r.normal.y(),
            r.normal.z(),
            r.orientation.dip,
            r.orientation.dip_direction,
            r.pole.dx,
            r.pole.dy,
            out.planes.point_set[r.index],
            out.planes.point_plane[r.index]
        );
    }
    s
}

fn planes_csv(report: &RunReport) -> String {
    let mut s = String::from("id,set_id,point_count,dip,dipdir,cx,cy,cz,rms\n");
    for p in &report.planes {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            p.id, p.set_id, p.point_count, p.dip, p.dipdir, p.centroid[0], p.centroid[1], p.centroid[2], p.rms
        );
    }
    s
}

pub fn write_report_json(report: &RunReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json()?).map_err(|e| Error::io(path, e))
}

/// Binary little-endian PLY with `set_id` and `plane_id` columns (`-1` for
/// none).
pub fn write_labeled_ply(cloud: &PointCloud, set_id: &[i32], plane_id: &[i32], path: &Path) -> Result<()> {
    write_ply(
        path,
        cloud.points(),
        &[PlyColumn::Int("set_id", set_id), PlyColumn::Int("plane_id", plane_id)],
        PlyEncoding::BinaryLittleEndian,
    )
}
