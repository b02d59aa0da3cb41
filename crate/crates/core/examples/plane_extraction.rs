//! Splitting one orientation set into individual planes and fitting them.

use discset::orientation::Orientation;
use discset::planes::{extract_planes, PlaneParams};
use discset::synthetic::generate_plane_fan;
use discset::synthetic::FanCase;

fn main() -> discset::Result<()> {
    // Twelve separate square planes; pretend planes 0-5 and 6-11 are two sets.
    let (cloud, truth) = generate_plane_fan(FanCase::FixedDip45, 1500, 1.0, 5);
    let labels: Vec<i32> = truth.point_face.iter().map(|&f| if f < 6 { 0 } else { 1 }).collect();
    let orientation: Vec<Orientation> = truth.point_face.iter().map(|&f| truth.faces[f as usize].orientation()).collect();

    let params = PlaneParams {
        min_pts: 8,
        ..PlaneParams::default()
    };
    let eps = 0.08;
    let out = extract_planes(&cloud, &labels, eps, &params, |i| orientation[i])?;
    for p in &out.planes {
        println!(
            "set {} plane {:>2}: {:>5} pts  {:>5.2}/{:>6.2}  rms {:.1e}",
            p.set_id,
            p.plane_id,
            p.members.len(),
            p.pole.dip,
            p.pole.dip_direction,
            p.rms
        );
    }
    for s in &out.sets {
        println!(
            "set {}: {} planes, dip {:.2} +- {:.2}, dip dir {:.2} +- {:.2}",
            s.set_id, s.plane_count, s.mean_dip, s.sd_dip, s.mean_dipdir, s.sd_dipdir
        );
    }
    Ok(())
}
