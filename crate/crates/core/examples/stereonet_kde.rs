//! Pole density contours and an SVG stereonet.
//!
//! `cargo run --example stereonet_kde -- [OUT.svg]`

use discset::orientation::{orientation_to_pole2d, Orientation};
use discset::pipeline::{contour_levels, contours, kde_density, render_stereonet_svg, scott_bandwidth, Stereonet};
use discset::planes::orientation_stats;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> discset::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "stereonet.svg".into());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut poles = Vec::new();
    let mut labels = Vec::new();
    let mut sets = Vec::new();
    for (k, (dip, dd)) in [(80.0, 68.0), (60.0, 95.0), (80.0, 245.0), (30.0, 340.0)].into_iter().enumerate() {
        let g = Normal::new(0.0, 4.0).unwrap();
        let members: Vec<Orientation> = (0..500)
            .map(|_| Orientation {
                dip: f64::clamp(dip + g.sample(&mut rng), 0.0, 90.0),
                dip_direction: (dd + g.sample(&mut rng)).rem_euclid(360.0),
            })
            .collect();
        poles.extend(members.iter().map(|o| orientation_to_pole2d(o).as_array()));
        labels.extend(std::iter::repeat(k as i32).take(members.len()));
        sets.push(orientation_stats(k, 1, members.len(), &members)?);
    }

    let h = scott_bandwidth(&poles, 128);
    let grid = kde_density(&poles, h, 128)?;
    let lines = contours(&grid, &contour_levels(&grid, 6));
    println!(
        "bandwidth ({:.4}, {:.4}), {} local maxima, {} contour segments",
        h[0],
        h[1],
        grid.local_maxima().len(),
        lines.iter().map(|c| c.segments.len()).sum::<usize>()
    );
    render_stereonet_svg(
        &Stereonet {
            poles: &poles,
            labels: &labels,
            sets: &sets,
            contours: Some(&lines),
            title: Some("synthetic sets"),
        },
        out.as_ref(),
    )?;
    println!("wrote {out}");
    Ok(())
}
