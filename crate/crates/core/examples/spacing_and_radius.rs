//! Point spacing and the adaptive neighbourhood radius.

use discset::cloud::{estimate_point_spacing, radius_of_influence, PointSpacing};
use discset::orientation::Orientation;
use discset::synthetic::generate_noisy_plane;

fn main() -> discset::Result<()> {
    for ps in [0.01, 0.025, 0.05, 0.1, 0.15] {
        let r = radius_of_influence(PointSpacing::new(ps)?)?;
        println!("ps {ps:>5} m -> radius {r:.4} m");
    }

    let o = Orientation::new(30.0, 120.0)?;
    let (cloud, _) = generate_noisy_plane(o, 2.0, 1600.0, 0.0, 7)?;
    let ps = estimate_point_spacing(&cloud)?;
    println!(
        "{} points, estimated spacing {:.4} m, radius {:.4} m",
        cloud.len(),
        ps.get(),
        radius_of_influence(ps)?
    );
    Ok(())
}
