//! Planar vs non-planar classification on a flat patch, a noise ball and a ridge.

use discset::cloud::{estimate_point_spacing, radius_of_influence, PointCloud, SpatialIndex};
use discset::filter::{FilterParams, PlanarityFilter};
use discset::orientation::Orientation;
use discset::synthetic::{generate_noise_ball, generate_noisy_plane, generate_ridge};

fn planar_fraction(name: &str, cloud: &PointCloud) -> discset::Result<()> {
    let index = SpatialIndex::build(cloud)?;
    let radius = radius_of_influence(estimate_point_spacing(cloud)?)?;
    let mask = PlanarityFilter::new(FilterParams::default(), radius)?.mask(cloud, &index);
    let kept = mask.iter().filter(|&&m| m).count();
    println!(
        "{name:<10} {kept:>6} / {:<6} planar ({:.1}%), radius {radius:.3} m",
        cloud.len(),
        100.0 * kept as f64 / cloud.len() as f64
    );
    Ok(())
}

fn main() -> discset::Result<()> {
    let (plane, _) = generate_noisy_plane(Orientation::new(40.0, 200.0)?, 2.0, 1600.0, 0.0, 1)?;
    planar_fraction("plane", &plane)?;

    let (ball, _) = generate_noise_ball([0.0; 3], 0.5, 6000, 2);
    planar_fraction("noise ball", &ball)?;

    let (ridge, _, _) = generate_ridge(90.0, 2.0, 1600.0, 3);
    planar_fraction("ridge", &ridge)?;
    Ok(())
}
