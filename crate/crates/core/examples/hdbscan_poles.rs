//! Density-based clustering of 2D poles with HDBSCAN.

use discset::hdbscan::{build_mst, core_distances, hdbscan_full, total_weight, HdbscanParams, Selection};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

fn main() -> discset::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut poles = Vec::new();
    for (c, sd, n) in [([-0.4, 0.3], 0.03, 800), ([0.35, 0.1], 0.02, 600), ([0.0, -0.5], 0.04, 500)] {
        let g = Normal::new(0.0, sd).unwrap();
        poles.extend((0..n).map(|_| [c[0] + g.sample(&mut rng), c[1] + g.sample(&mut rng)]));
    }
    let u = Uniform::new(-0.7, 0.7);
    poles.extend((0..300).map(|_| [u.sample(&mut rng), u.sample(&mut rng)]));

    let cores = core_distances(&poles, 15)?;
    let mst = build_mst(&poles, cores.as_slice());
    println!("{} poles, MST weight {:.4}", poles.len(), total_weight(&mst));

    for selection in [Selection::Eom, Selection::Leaf] {
        let params = HdbscanParams {
            min_cluster_size: 100,
            min_samples: 15,
            selection,
        };
        let r = hdbscan_full(&poles, &params)?;
        let sizes: Vec<usize> = r.labels.members().iter().map(Vec::len).collect();
        println!(
            "{selection:?}: {} clusters {:?}, {} noise, {} condensed nodes",
            r.labels.n_clusters(),
            sizes,
            r.labels.noise_count(),
            r.tree.clusters.len()
        );
    }
    Ok(())
}
