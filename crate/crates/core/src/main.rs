use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use discset::cloud::{write_ply, CloudFormat, PlyColumn, PlyEncoding, PointCloud};
use discset::error::{Error, Result};
use discset::filter::FrameSet;
use discset::hdbscan::Selection;
use discset::orientation::{orientation_to_pole2d, Orientation};
use discset::pipeline::{
    contour_levels, contours, evaluate_against_reference, kde_density, read_set_list, render_stereonet_svg,
    run_pipeline, scott_bandwidth, PipelineConfig, RunReport, Stereonet,
};
use discset::planes::StatsSource;
use discset::synthetic::{generate_icosphere, generate_noisy_plane, generate_plane_fan, FanCase, GroundTruth};

#[derive(Parser)]
#[command(name = "discset", version, about = "Discontinuity sets from rock-face point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a point cloud.
    Run(RunArgs),
    /// Write an icosphere fixture (PLY plus ground-truth JSON).
    Icosphere(IcosphereArgs),
    /// Write one of the plane-fan fixtures.
    Planes(PlanesArgs),
    /// Write a single noisy plane.
    NoisyPlane(NoisyPlaneArgs),
    /// Compare identified sets with reference sets.
    Eval(EvalArgs),
    /// Draw a stereonet from a run report.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<CloudFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    ps: Option<f64>,
    #[arg(long)]
    filter_threshold: Option<f64>,
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    min_cluster_size: Option<usize>,
    #[arg(long)]
    min_samples: Option<usize>,
    #[arg(long)]
    selection: Option<String>,
    #[arg(long)]
    eps_factor: Option<f64>,
    #[arg(long)]
    min_pts: Option<usize>,
    #[arg(long)]
    min_plane_points: Option<usize>,
    #[arg(long)]
    stats: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_timing: bool,
    /// Also write poles.csv and planes.csv.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct IcosphereArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    #[arg(long, default_value_t = 1)]
    subdivisions: u32,
    #[arg(long, default_value_t = 2000)]
    points_per_face: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PlanesArgs {
    #[arg(long)]
    out: PathBuf,
    /// fixed_dip_45 or fixed_dd_90.
    #[arg(long, default_value = "fixed_dip_45")]
    case: FanCase,
    #[arg(long, default_value_t = 4000)]
    points_per_plane: usize,
    #[arg(long, default_value_t = 2.0)]
    extent: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct NoisyPlaneArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 45.0)]
    dip: f64,
    #[arg(long, default_value_t = 90.0)]
    dipdir: f64,
    #[arg(long, default_value_t = 2.0)]
    extent: f64,
    /// Points per square metre.
    #[arg(long, default_value_t = 1600.0)]
    density: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    /// Report or set list of the identified sets.
    #[arg(long)]
    identified: PathBuf,
    /// Set list, report, or ground-truth sidecar.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    threshold: f64,
    /// Write the evaluation JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    report: PathBuf,
    /// poles.csv from `run --csv`; plane poles are drawn when absent.
    #[arg(long)]
    poles: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 128)]
    grid_n: usize,
    #[arg(long, default_value_t = 6)]
    levels: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Icosphere(a) => icosphere(a),
        Command::Planes(a) => planes(a),
        Command::NoisyPlane(a) => noisy_plane(a),
        Command::Eval(a) => eval(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn parse_flag<T: std::str::FromStr<Err = Error>>(v: &str) -> Result<T> {
    v.parse().map_err(|e: Error| Error::Config(e.to_string()))
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = match (&a.config, &a.input) {
        (Some(path), _) => PipelineConfig::load(path)?,
        (None, Some(input)) => PipelineConfig::new(input, "out"),
        (None, None) => return Err(Error::Config("pass --input or --config".into())),
    };
    if let Some(v) = a.input {
        cfg.input = v;
    }
    if let Some(v) = a.format {
        cfg.format = Some(v);
    }
    if let Some(v) = a.out {
        cfg.out = v;
    }
    if let Some(v) = a.ps {
        cfg.ps = Some(v);
    }
    if let Some(v) = a.filter_threshold {
        cfg.filter.threshold_deg = v;
    }
    if let Some(v) = a.frames {
        cfg.filter.frames = match v.as_str() {
            "vertical" => FrameSet::Vertical,
            "multi" => FrameSet::Multi,
            _ => return Err(Error::Config(format!("unknown frame set `{v}`"))),
        };
    }
    if let Some(v) = a.min_cluster_size {
        cfg.cluster.min_cluster_size = v;
    }
    if let Some(v) = a.min_samples {
        cfg.cluster.min_samples = v;
    }
    if let Some(v) = a.selection {
        cfg.cluster.selection = parse_flag::<Selection>(&v)?;
    }
    if let Some(v) = a.eps_factor {
        cfg.planes.eps_factor = v;
    }
    if let Some(v) = a.min_pts {
        cfg.planes.min_pts = v;
    }
    if let Some(v) = a.min_plane_points {
        cfg.planes.min_plane_points = v;
    }
    if let Some(v) = a.stats {
        cfg.planes.stats = parse_flag::<StatsSource>(&v)?;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.no_timing |= a.no_timing;
    cfg.output.csv |= a.csv;
    let report = run_pipeline(&cfg)?;
    println!(
        "{} sets, {} planes -> {}",
        report.sets.len(),
        report.planes.len(),
        cfg.out.display()
    );
    Ok(())
}

fn sidecar_path(ply: &Path) -> PathBuf {
    ply.with_extension("truth.json")
}

fn write_fixture(out: &Path, cloud: &PointCloud, truth: &GroundTruth) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_ply(
        out,
        cloud.points(),
        &[PlyColumn::Int("face_id", &truth.point_face)],
        PlyEncoding::BinaryLittleEndian,
    )?;
    let side = sidecar_path(out);
    truth.write_json(&side)?;
    println!("{} points -> {} (+ {})", cloud.len(), out.display(), side.display());
    Ok(())
}

fn icosphere(a: IcosphereArgs) -> Result<()> {
    let faces = 20 * 4usize.pow(a.subdivisions);
    let (cloud, truth) = generate_icosphere(a.radius, a.subdivisions, a.points_per_face * faces, a.seed);
    write_fixture(&a.out, &cloud, &truth)
}

fn planes(a: PlanesArgs) -> Result<()> {
    let (cloud, truth) = generate_plane_fan(a.case, a.points_per_plane, a.extent, a.seed);
    write_fixture(&a.out, &cloud, &truth)
}

fn noisy_plane(a: NoisyPlaneArgs) -> Result<()> {
    let o = Orientation::new(a.dip, a.dipdir)?;
    let (cloud, truth) = generate_noisy_plane(o, a.extent, a.density, a.sigma, a.seed)?;
    write_fixture(&a.out, &cloud, &truth)
}

fn read_sets(path: &Path) -> Result<Vec<discset::planes::SetStatistics>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if let Ok(truth) = serde_json::from_str::<GroundTruth>(&text) {
        return Ok(truth.reference_sets());
    }
    read_set_list(path)
}

fn eval(a: EvalArgs) -> Result<()> {
    let identified = read_sets(&a.identified)?;
    let reference = read_sets(&a.reference)?;
    let result = evaluate_against_reference(&identified, &reference, a.threshold)?;
    let text = serde_json::to_string_pretty(&result)? + "\n";
    match a.out {
        Some(path) => std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_poles_csv(path: &Path) -> Result<(Vec<[f64; 2]>, Vec<i32>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = lines.next().map(|(_, h)| h.split(',').collect()).unwrap_or_default();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::parse("line 1", format!("missing column `{name}`")))
    };
    let (px, py, ps) = (col("pole_x")?, col("pole_y")?, col("set_id")?);
    let mut poles = Vec::new();
    let mut labels = Vec::new();
    for (k, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        let get = |i: usize| f.get(i).copied().unwrap_or("");
        let bad = || Error::parse(format!("line {}", k + 1), "bad number");
        poles.push([
            get(px).parse::<f64>().map_err(|_| bad())?,
            get(py).parse::<f64>().map_err(|_| bad())?,
        ]);
        labels.push(get(ps).parse::<i32>().map_err(|_| bad())?);
    }
    Ok((poles, labels))
}

fn plot(a: PlotArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.report).map_err(|e| Error::io(&a.report, e))?;
    let report = RunReport::from_json(&text)?;
    let sets = report.set_statistics();
    let (poles, labels) = match &a.poles {
        Some(p) => read_poles_csv(p)?,
        None => report
            .planes
            .iter()
            .map(|p| {
                let o = Orientation {
                    dip: p.dip,
                    dip_direction: p.dipdir,
                };
                (orientation_to_pole2d(&o).as_array(), p.set_id as i32)
            })
            .unzip(),
    };
    let lines = if poles.len() >= 2 {
        let grid = kde_density(&poles, scott_bandwidth(&poles, a.grid_n), a.grid_n)?;
        contours(&grid, &contour_levels(&grid, a.levels))
    } else {
        Vec::new()
    };
    render_stereonet_svg(
        &Stereonet {
            poles: &poles,
            labels: &labels,
            sets: &sets,
            contours: Some(&lines),
            title: a.report.to_str(),
        },
        &a.out,
    )?;
    println!("{} poles, {} sets -> {}", poles.len(), sets.len(), a.out.display());
    Ok(())
}
