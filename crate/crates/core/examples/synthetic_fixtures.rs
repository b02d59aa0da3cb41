//! Writes the synthetic fixtures (PLY plus ground-truth JSON) to a directory.
//!
//! `cargo run --example synthetic_fixtures -- [DIR]`

use std::path::PathBuf;

use discset::cloud::{write_ply, PlyColumn, PlyEncoding, PointCloud};
use discset::orientation::Orientation;
use discset::synthetic::{generate_icosphere, generate_noisy_plane, generate_plane_fan, FanCase, GroundTruth};

fn save(dir: &PathBuf, name: &str, cloud: &PointCloud, truth: &GroundTruth) -> discset::Result<()> {
    let ply = dir.join(format!("{name}.ply"));
    write_ply(&ply, cloud.points(), &[PlyColumn::Int("face_id", &truth.point_face)], PlyEncoding::BinaryLittleEndian)?;
    truth.write_json(&dir.join(format!("{name}.truth.json")))?;
    println!("{:<14} {:>7} points, {:>2} faces, {} sets", name, cloud.len(), truth.faces.len(), truth.n_sets());
    Ok(())
}

fn main() -> discset::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir).map_err(|e| discset::Error::io(&dir, e))?;

    let (c, t) = generate_icosphere(10.0, 1, 80 * 2000, 0);
    save(&dir, "icosphere", &c, &t)?;
    let (c, t) = generate_plane_fan(FanCase::FixedDip45, 4000, 2.0, 0);
    save(&dir, "fan_dip45", &c, &t)?;
    let (c, t) = generate_plane_fan(FanCase::FixedDd90, 4000, 2.0, 0);
    save(&dir, "fan_dd90", &c, &t)?;
    let (c, t) = generate_noisy_plane(Orientation::new(60.0, 135.0)?, 2.0, 1600.0, 0.005, 0)?;
    save(&dir, "noisy_plane", &c, &t)?;
    println!("written to {}", dir.display());
    Ok(())
}
