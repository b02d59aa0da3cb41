//! Dip / dip direction and the seam-free 2D pole transform.

use discset::orientation::{normal_to_orientation, orientation_to_pole2d, pole2d_to_orientation};
use discset::synthetic::FanCase;
use nalgebra::Vector3;

fn main() -> discset::Result<()> {
    println!("fixed dip 45, dip direction every 30 degrees");
    for o in FanCase::FixedDip45.orientations() {
        let p = orientation_to_pole2d(&o);
        println!(
            "  {:>5.1}/{:>5.1}  ->  ({:+.4}, {:+.4})  r = {:.6}",
            o.dip,
            o.dip_direction,
            p.dx,
            p.dy,
            p.radius()
        );
    }

    println!("fixed dip direction 90, dip 0..90");
    for o in FanCase::FixedDd90.orientations() {
        let p = orientation_to_pole2d(&o);
        let back = pole2d_to_orientation(&p)?;
        println!("  dip {:>4.1} -> r = {:.6} -> dip {:.6}", o.dip, p.radius(), back.dip);
    }

    // Opposite normals describe the same plane.
    let n = Vector3::new(0.3, -0.5, 0.8).normalize();
    let a = normal_to_orientation(n)?;
    let b = normal_to_orientation(-n)?;
    println!("n and -n: {:.3}/{:.3} and {:.3}/{:.3}", a.dip, a.dip_direction, b.dip, b.dip_direction);
    Ok(())
}
