//! Mean absolute error and dispersion error against a reference set list.

use discset::pipeline::evaluate_against_reference;
use discset::planes::SetStatistics;

fn set(id: usize, dip: f64, sd_dip: f64, dd: f64, sd_dd: f64) -> SetStatistics {
    SetStatistics {
        set_id: id,
        plane_count: 0,
        point_count: 0,
        mean_dip: dip,
        sd_dip,
        mean_dipdir: dd,
        sd_dipdir: sd_dd,
    }
}

fn main() -> discset::Result<()> {
    // Compass measurements and automated results for six sets in one stope.
    let compass = [
        set(0, 82.73, 4.20, 68.56, 8.53),
        set(1, 60.95, 3.39, 95.42, 3.97),
        set(2, 79.89, 5.35, 245.74, 8.74),
        set(3, 72.47, 10.91, 157.18, 10.30),
        set(4, 79.63, 3.51, 200.66, 4.71),
        set(5, 80.25, 5.93, 345.24, 7.93),
    ];
    let automated = [
        set(0, 84.73, 10.10, 71.58, 12.63),
        set(1, 59.95, 3.66, 93.11, 4.51),
        set(2, 82.89, 8.43, 246.70, 14.64),
        set(3, 71.80, 11.78, 155.17, 14.52),
        set(4, 80.96, 3.93, 202.93, 5.21),
        set(5, 83.92, 9.43, 347.89, 10.08),
    ];
    let r = evaluate_against_reference(&automated, &compass, 20.0)?;
    for p in &r.pairs {
        println!(
            "D{} <-> D{}  {:>5.2} deg apart, |d dip| {:.2}, |d dd| {:.2}",
            p.identified + 1,
            p.reference + 1,
            p.angle,
            p.d_dip,
            p.d_dipdir
        );
    }
    println!(
        "MAE dip {:.2} +- {:.2}, MAE dip dir {:.2} +- {:.2}",
        r.mae_dip.unwrap_or(f64::NAN),
        r.disp_dip.unwrap_or(f64::NAN),
        r.mae_dipdir.unwrap_or(f64::NAN),
        r.disp_dipdir.unwrap_or(f64::NAN)
    );
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}
