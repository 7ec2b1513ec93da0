//! k-means against exhaustive partition enumeration on small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topocast_core::cluster::kmeans_best;
use topocast_core::math::Matrix;
use topocast_core::testkit::best_inertia_by_enumeration;

#[test]
fn twenty_restarts_reach_the_enumerated_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..15 {
        let n = 6;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let fit = kmeans_best(&data, 2, case, 20, 200, 1e-12).unwrap();
        let best = best_inertia_by_enumeration(&data, 2);
        assert!(
            (fit.inertia - best).abs() <= 1e-9 * best.max(1.0),
            "case {case}: kmeans {} vs enumerated {best}",
            fit.inertia
        );
    }
}
