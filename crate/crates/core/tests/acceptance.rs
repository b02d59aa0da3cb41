//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use discset::cloud::{
    estimate_point_spacing_with, radius_of_influence, write_ply, PlyColumn, PlyEncoding, PointCloud, PointSpacing,
    SpatialIndex,
};
use discset::filter::{FilterParams, PlanarityFilter};
use discset::hdbscan::{build_mst, core_distances, NOISE};
use discset::orientation::{
    circular_diff, compute_orientations, normal_to_orientation, orientation_to_pole2d, pole2d_to_orientation,
    Orientation,
};
use discset::pipeline::{analyse, evaluate_against_reference, run_pipeline, PipelineConfig};
use discset::planes::{dbscan, fit_plane, SetStatistics};
use discset::synthetic::{
    generate_icosphere, generate_noise_ball, generate_noisy_plane, generate_plane_fan, generate_ridge, FanCase,
    GroundTruth,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ICO_RADIUS: f64 = 10.0;
const ICO_POINTS_PER_FACE: usize = 2000;
const ICO_SEED: u64 = 0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn icosphere_fixture() -> (PointCloud, GroundTruth) {
    generate_icosphere(ICO_RADIUS, 1, 80 * ICO_POINTS_PER_FACE, ICO_SEED)
}

/// Scaled clustering for desk-size clouds: min_cluster_size is 0.25% of the
/// pole count, min_samples 15.
fn icosphere_config(cloud: &PointCloud, out: &std::path::Path, input: &std::path::Path) -> PipelineConfig {
    let index = SpatialIndex::build(cloud).unwrap();
    let ps = estimate_point_spacing_with(cloud, &index).unwrap();
    let radius = radius_of_influence(ps).unwrap();
    let mask = PlanarityFilter::new(FilterParams::default(), radius).unwrap().mask(cloud, &index);
    let poles = compute_orientations(cloud, &mask, &index, radius).len();

    let mut cfg = PipelineConfig::new(input, out);
    cfg.cluster.min_cluster_size = (0.0025 * poles as f64).round() as usize;
    cfg.cluster.min_samples = 15;
    // min_pts 20 inside 2·ps is denser than a 2D point pattern can be; the
    // plane split uses a wider radius with a smaller count.
    cfg.planes.eps_factor = 4.0;
    cfg.planes.min_pts = 8;
    cfg.no_timing = true;
    cfg
}

fn set_orientation(mean_dip: f64, mean_dipdir: f64) -> Orientation {
    Orientation {
        dip: mean_dip,
        dip_direction: mean_dipdir,
    }
}

fn criterion_1() -> Outcome {
    let (cloud, truth) = icosphere_fixture();
    let cfg = icosphere_config(&cloud, std::path::Path::new("unused"), std::path::Path::new("<memory>"));
    let start = Instant::now();
    let out = analyse(cloud, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let sets: Vec<Orientation> = out
        .report
        .sets
        .iter()
        .map(|s| set_orientation(s.mean_dip, s.mean_dipdir))
        .collect();
    let reference = truth.set_orientations();

    // Nearest truth orientation for every set, and one set per truth pair.
    let mut worst = 0.0f64;
    let mut hit = vec![0usize; reference.len()];
    for s in &sets {
        let (k, a) = reference
            .iter()
            .enumerate()
            .map(|(k, r)| (k, r.angle_to(s)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        hit[k] += 1;
        worst = worst.max(a);
    }
    let one_to_one = hit.iter().all(|&h| h == 1);
    let mut closest_pair = f64::INFINITY;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            closest_pair = closest_pair.min(sets[i].angle_to(&sets[j]));
        }
    }
    let pass = sets.len() == 40 && one_to_one && worst <= 1.0 && closest_pair >= 5.0 && secs < 60.0;
    outcome(
        pass,
        format!(
            "{} sets (need 40), one per truth pair: {one_to_one}, worst mean-pole error {worst:.3} deg (<= 1.0), \
             closest set pair {closest_pair:.2} deg (>= 5.0), min_cluster_size {}, {secs:.1} s (< 60)",
            sets.len(),
            cfg.cluster.min_cluster_size
        ),
    )
}

fn azimuth(p: [f64; 2]) -> f64 {
    p[0].atan2(p[1]).to_degrees().rem_euclid(360.0)
}

fn fitted_poles(case: FanCase) -> Vec<[f64; 2]> {
    let (cloud, truth) = generate_plane_fan(case, 500, 2.0, 1);
    (0..truth.faces.len())
        .map(|f| {
            let pts: Vec<[f64; 3]> = (0..cloud.len())
                .filter(|&i| truth.point_face[i] == f as i32)
                .map(|i| cloud.point(i))
                .collect();
            let n = fit_plane(&pts).unwrap().normal;
            orientation_to_pole2d(&n.orientation()).as_array()
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let tol = 1e-6;
    let target = 22.5f64.to_radians().tan();

    // Case 1: from the defined orientations and from planes fitted to the fixture.
    let defined: Vec<[f64; 2]> = FanCase::FixedDip45
        .orientations()
        .iter()
        .map(|o| orientation_to_pole2d(o).as_array())
        .collect();
    let mut radius_err = 0.0f64;
    let mut spacing_err = 0.0f64;
    let mut first_last = 0.0;
    for poles in [defined, fitted_poles(FanCase::FixedDip45)] {
        for p in &poles {
            radius_err = radius_err.max((p[0].hypot(p[1]) - target).abs());
        }
        for w in poles.windows(2) {
            let step = (azimuth(w[1]) - azimuth(w[0])).rem_euclid(360.0);
            spacing_err = spacing_err.max((step - 30.0).abs());
        }
        first_last = circular_diff(azimuth(poles[0]), azimuth(poles[11]));
        spacing_err = spacing_err.max((first_last - 30.0).abs());
    }
    let case1 = radius_err <= tol && spacing_err <= tol && (first_last - 30.0).abs() <= tol;

    // Case 2: poles on the +x axis at tan(DA/2).
    let dips: Vec<f64> = FanCase::FixedDd90.orientations().iter().map(|o| o.dip).collect();
    let mut axis_err = 0.0f64;
    let mut r_err = 0.0f64;
    for poles in [
        FanCase::FixedDd90
            .orientations()
            .iter()
            .map(|o| orientation_to_pole2d(o).as_array())
            .collect::<Vec<_>>(),
        fitted_poles(FanCase::FixedDd90),
    ] {
        for (p, dip) in poles.iter().zip(&dips) {
            axis_err = axis_err.max(p[1].abs()).max((-p[0]).max(0.0));
            r_err = r_err.max((p[0] - (dip / 2.0).to_radians().tan()).abs());
        }
    }
    let case2 = poles_ok(dips.len(), 7) && axis_err <= tol && r_err <= tol;
    outcome(
        case1 && case2,
        format!(
            "case 1: radius err {radius_err:.1e}, spacing err {spacing_err:.1e}, planes 1/12 {first_last:.6} deg apart; \
             case 2: off-axis {axis_err:.1e}, radius err {r_err:.1e} (tol {tol:.0e})"
        ),
    )
}

fn poles_ok(n: usize, expected: usize) -> bool {
    n == expected
}

fn criterion_3() -> Outcome {
    let r = radius_of_influence(PointSpacing::new(0.025).unwrap()).unwrap();
    outcome(r == 0.115, format!("radius(0.025) = {r:?} (need exactly 0.115)"))
}

fn table_row(id: usize, dip: f64, sd_dip: f64, dd: f64, sd_dd: f64) -> SetStatistics {
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

fn criterion_4() -> Outcome {
    let compass = [
        table_row(0, 82.73, 4.20, 68.56, 8.53),
        table_row(1, 60.95, 3.39, 95.42, 3.97),
        table_row(2, 79.89, 5.35, 245.74, 8.74),
        table_row(3, 72.47, 10.91, 157.18, 10.30),
        table_row(4, 79.63, 3.51, 200.66, 4.71),
        table_row(5, 80.25, 5.93, 345.24, 7.93),
    ];
    let proposed = [
        table_row(0, 84.73, 10.10, 71.58, 12.63),
        table_row(1, 59.95, 3.66, 93.11, 4.51),
        table_row(2, 82.89, 8.43, 246.70, 14.64),
        table_row(3, 71.80, 11.78, 155.17, 14.52),
        table_row(4, 80.96, 3.93, 202.93, 5.21),
        table_row(5, 83.92, 9.43, 347.89, 10.08),
    ];
    let r = evaluate_against_reference(&proposed, &compass, 20.0).unwrap();

    // Row-by-row arithmetic, independent of the matcher.
    let mean = |f: &dyn Fn(&SetStatistics, &SetStatistics) -> f64| {
        proposed.iter().zip(&compass).map(|(a, b)| f(a, b)).sum::<f64>() / 6.0
    };
    let oracle = [
        mean(&|a, b| (a.mean_dip - b.mean_dip).abs()),
        mean(&|a, b| circular_diff(a.mean_dipdir, b.mean_dipdir)),
        mean(&|a, b| (a.sd_dip - b.sd_dip).abs()),
        mean(&|a, b| (a.sd_dipdir - b.sd_dipdir).abs()),
    ];
    let got = [r.mae_dip, r.mae_dipdir, r.disp_dip, r.disp_dipdir].map(|v| v.unwrap_or(f64::NAN));
    let published = [1.95, 2.20, 2.34, 2.90];
    let matches_oracle = got.iter().zip(&oracle).all(|(g, o)| (g - o).abs() < 1e-12);
    let matches_table = got.iter().zip(&published).all(|(g, p)| (g - p).abs() <= 0.01);
    let identity = r.pairs.len() == 6 && r.pairs.iter().all(|p| p.identified == p.reference);
    outcome(
        matches_oracle && matches_table && identity,
        format!(
            "MAE dip {:.4}, MAE dipdir {:.4}, dispersion {:.4} / {:.4} (published 1.95 / 2.20 / 2.34 / 2.90 +- 0.01), \
             oracle agreement {matches_oracle}, D1..D6 matched in order {identity}",
            got[0], got[1], got[2], got[3]
        ),
    )
}

fn planar_mask(cloud: &PointCloud) -> (Vec<bool>, f64) {
    let index = SpatialIndex::build(cloud).unwrap();
    let radius = radius_of_influence(estimate_point_spacing_with(cloud, &index).unwrap()).unwrap();
    let mask = PlanarityFilter::new(FilterParams::default(), radius).unwrap().mask(cloud, &index);
    (mask, radius)
}

fn criterion_5() -> Outcome {
    let extent = 2.0;
    let mut plane_worst = 1.0f64;
    for (dip, dd) in [(0.0, 0.0), (45.0, 90.0), (80.0, 230.0)] {
        let o = Orientation::new(dip, dd).unwrap();
        let (cloud, _) = generate_noisy_plane(o, extent, 1600.0, 0.0, 3).unwrap();
        let (mask, radius) = planar_mask(&cloud);
        // In-plane coordinates relative to the square's centre.
        let (u, v, _) = discset::synthetic::plane_axes(&o);
        let interior: Vec<usize> = (0..cloud.len())
            .filter(|&i| {
                let p = nalgebra::Vector3::from(cloud.point(i));
                let half = extent / 2.0 - radius;
                p.dot(&u).abs() < half && p.dot(&v).abs() < half
            })
            .collect();
        let planar = interior.iter().filter(|&&i| mask[i]).count() as f64 / interior.len() as f64;
        plane_worst = plane_worst.min(planar);
    }

    let (ball, _) = generate_noise_ball([0.0; 3], 0.5, 6000, 4);
    let (mask, _) = planar_mask(&ball);
    let ball_nonplanar = mask.iter().filter(|&&m| !m).count() as f64 / mask.len() as f64;

    let (ridge, _, dist) = generate_ridge(90.0, extent, 1600.0, 5);
    let (mask, radius) = planar_mask(&ridge);
    let band = |limit: f64| {
        let idx: Vec<usize> = (0..ridge.len()).filter(|&i| dist[i] <= limit).collect();
        let planar = idx.iter().filter(|&&i| mask[i]).count();
        (planar, idx.len())
    };
    let (ridge_planar, ridge_total) = band(radius);
    let (inner_planar, inner_total) = band(radius / 2.0);

    let pass = plane_worst >= 0.95 && ball_nonplanar >= 0.95 && ridge_planar == 0;
    outcome(
        pass,
        format!(
            "plane interiors >= {:.1}% planar (>= 95), noise ball {:.1}% non-planar (>= 95), \
             ridge: {ridge_planar} of {ridge_total} points within r of the ridge classified planar (need 0); \
             within r/2: {inner_planar} of {inner_total}",
            100.0 * plane_worst,
            100.0 * ball_nonplanar
        ),
    )
}

fn brute_core(points: &[[f64; 2]], k: usize) -> Vec<f64> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                .collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .collect()
}

/// Dense Prim over the full mutual-reachability matrix; sorted edge weights.
fn brute_mst_weights(points: &[[f64; 2]], core: &[f64]) -> Vec<f64> {
    let n = points.len();
    let w = |a: usize, b: usize| {
        let d = ((points[a][0] - points[b][0]).powi(2) + (points[a][1] - points[b][1]).powi(2)).sqrt();
        d.max(core[a]).max(core[b])
    };
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut weights = Vec::with_capacity(n - 1);
    for step in 0..n {
        let u = (0..n)
            .filter(|&i| !in_tree[i])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[u] = true;
        if step > 0 {
            weights.push(best[u]);
        }
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].min(w(u, v));
            }
        }
    }
    weights.sort_by(f64::total_cmp);
    weights
}

/// Union-find over core points; clusters numbered by lowest core index;
/// borders join the lowest-numbered adjacent cluster.
fn brute_dbscan(points: &[[f64; 3]], eps: f64, min_pts: usize) -> Vec<i32> {
    let n = points.len();
    let near = |i: usize, j: usize| {
        (0..3).map(|k| (points[i][k] - points[j][k]).powi(2)).sum::<f64>().sqrt() <= eps
    };
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(r: &mut [usize], mut x: usize) -> usize {
        while r[x] != x {
            r[x] = r[r[x]];
            x = r[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (find(&mut root, i), find(&mut root, j));
                root[a.max(b)] = a.min(b);
            }
        }
    }
    let mut ids = BTreeMap::new();
    let mut labels = vec![NOISE; n];
    for i in (0..n).filter(|&i| core[i]) {
        let r = find(&mut root, i);
        let next = ids.len() as i32;
        labels[i] = *ids.entry(r).or_insert(next);
    }
    for i in (0..n).filter(|&i| !core[i]) {
        labels[i] = (0..n)
            .filter(|&j| core[j] && near(i, j))
            .map(|j| labels[j])
            .min()
            .unwrap_or(NOISE);
    }
    labels
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut mst_ok, mut core_ok, mut dbscan_ok) = (0, 0, 0);
    let instances = 50;
    for _ in 0..instances {
        let n = rng.gen_range(20..=300);
        let k = rng.gen_range(1..=10);
        // Mix of clumps and scatter.
        let centres: Vec<[f64; 2]> = (0..3).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let points: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                if i % 4 == 0 {
                    [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)]
                } else {
                    let c = centres[i % 3];
                    [c[0] + rng.gen_range(-0.1..0.1), c[1] + rng.gen_range(-0.1..0.1)]
                }
            })
            .collect();
        let cores = core_distances(&points, k).unwrap();
        let brute = brute_core(&points, k);
        core_ok += (cores.as_slice() == &brute[..]) as usize;

        let mut fast: Vec<f64> = build_mst(&points, cores.as_slice()).iter().map(|e| e.weight).collect();
        fast.sort_by(f64::total_cmp);
        let reference = brute_mst_weights(&points, &brute);
        let total = |w: &[f64]| w.iter().sum::<f64>();
        mst_ok += (fast == reference && total(&fast) == total(&reference)) as usize;

        // Integer lattice with eps between lattice distances: no point sits
        // on an eps boundary.
        let m = rng.gen_range(20..=300);
        let lattice: Vec<[f64; 3]> = (0..m)
            .map(|_| [rng.gen_range(0..15) as f64, rng.gen_range(0..15) as f64, rng.gen_range(0..2) as f64])
            .collect();
        let min_pts = rng.gen_range(2..=6);
        dbscan_ok += (dbscan(&lattice, 1.5, min_pts).into_vec() == brute_dbscan(&lattice, 1.5, min_pts)) as usize;
    }
    outcome(
        mst_ok == instances && core_ok == instances && dbscan_ok == instances,
        format!(
            "{instances} instances: MST weight exact {mst_ok}/{instances}, core distances exact {core_ok}/{instances}, \
             DBSCAN partition exact {dbscan_ok}/{instances}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pole_err = 0.0f64;
    let mut normal_err = 0.0f64;
    for _ in 0..10_000 {
        let o = Orientation {
            dip: rng.gen_range(0.0..90.0),
            dip_direction: rng.gen_range(0.0..360.0),
        };
        let back = pole2d_to_orientation(&orientation_to_pole2d(&o)).unwrap();
        pole_err = pole_err
            .max((back.dip - o.dip).abs())
            .max(circular_diff(back.dip_direction, o.dip_direction));
        if o.dip > 0.0 {
            let n = normal_to_orientation(o.normal().to_vector()).unwrap();
            normal_err = normal_err
                .max((n.dip - o.dip).abs())
                .max(circular_diff(n.dip_direction, o.dip_direction));
        }
    }
    // "Exact" in double precision: within a few ulps of 360.
    let ulps = 8.0 * (360.0 - f64::from_bits(360f64.to_bits() - 1));
    outcome(
        pole_err < 1e-9 && normal_err <= ulps,
        format!(
            "10^4 orientations: pole round trip max err {pole_err:.1e} deg (< 1e-9), \
             normal round trip max err {normal_err:.1e} deg (<= {ulps:.1e})"
        ),
    )
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, truth) = icosphere_fixture();
    let input = dir.path().join("icosphere.ply");
    write_ply(
        &input,
        cloud.points(),
        &[PlyColumn::Int("face_id", &truth.point_face)],
        PlyEncoding::BinaryLittleEndian,
    )
    .unwrap();
    let runs: Vec<(Vec<u8>, Vec<u8>)> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let cfg = icosphere_config(&cloud, &out, &input);
            run_pipeline(&cfg).unwrap();
            (
                std::fs::read(out.join("report.json")).unwrap(),
                std::fs::read(out.join("labeled.ply")).unwrap(),
            )
        })
        .collect();
    let same_report = runs[0].0 == runs[1].0;
    let same_ply = runs[0].1 == runs[1].1;
    outcome(
        same_report && same_ply,
        format!(
            "report.json identical: {same_report} ({} bytes), labeled.ply identical: {same_ply} ({} bytes)",
            runs[0].0.len(),
            runs[0].1.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("icosphere reproduction", criterion_1),
        ("pole transform checks", criterion_2),
        ("radius anchor", criterion_3),
        ("set comparison metrics", criterion_4),
        ("filter discrimination", criterion_5),
        ("clustering oracle suite", criterion_6),
        ("numerical inverses", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} [{}] {name}: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "criterion 9 [N/A] not reproducible at desk scale: real-stope results, absolute runtimes and baseline \
         comparisons need the mine data; covered by criteria 1-8"
    );
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
