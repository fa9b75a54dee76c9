//! Deterministic cloud generators shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symmpoint_core::{Point3, PointCloud, SymmetryPlane};

pub fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::new(
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                )
            })
            .collect(),
    )
    .expect("generated cloud is valid")
}

/// Mirror-symmetric cloud of 2 * n_half points with its true plane.
pub fn symmetric_cloud(n_half: usize, seed: u64) -> (PointCloud, SymmetryPlane) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half: Vec<Point3> = (0..n_half)
        .map(|_| {
            Point3::new(
                rng.random::<f64>(),
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 0.6,
            )
        })
        .collect();
    let mut centroid = Point3::ORIGIN;
    for &p in &half {
        centroid = centroid + p;
    }
    centroid = centroid * (1.0 / n_half as f64);
    let plane =
        SymmetryPlane::through_point(Point3::new(1.0, 0.3, -0.2), centroid).expect("valid plane");
    let mut points = half.clone();
    points.extend(
        half.iter()
            .map(|&p| plane.reflect_point(p).expect("finite")),
    );
    (PointCloud::new(points).expect("valid cloud"), plane)
}
