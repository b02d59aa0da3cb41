//! Full in-memory pipeline on the icosphere fixture, checked against its truth.

use discset::orientation::Orientation;
use discset::pipeline::{analyse, PipelineConfig};
use discset::synthetic::generate_icosphere;

fn main() -> discset::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (cloud, truth) = generate_icosphere(10.0, 1, 80 * 2000, 0);

    let mut cfg = PipelineConfig::new("<memory>", "out");
    cfg.cluster.min_cluster_size = 390;
    cfg.cluster.min_samples = 15;
    cfg.planes.eps_factor = 4.0;
    cfg.planes.min_pts = 8;
    let out = analyse(cloud, &cfg)?;

    let reference = truth.set_orientations();
    let mut worst = 0.0f64;
    for s in &out.report.sets {
        let o = Orientation {
            dip: s.mean_dip,
            dip_direction: s.mean_dipdir,
        };
        let best = reference.iter().map(|r| r.angle_to(&o)).fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    println!(
        "{} sets (truth {}), {} planes, worst set error {:.3} deg",
        out.report.sets.len(),
        reference.len(),
        out.report.planes.len(),
        worst
    );
    println!("{:?}", out.report.accounting);
    for (stage, ms) in &out.report.timings_ms {
        println!("  {stage:<12} {ms:>9.1} ms");
    }
    Ok(())
}
