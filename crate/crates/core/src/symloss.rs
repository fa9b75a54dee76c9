//! Symmetry-aware training objective over point clouds.
//!
//! The loss sums a reconstruction term (prediction vs ground truth) and a
//! symmetry term (the prediction's mirror image vs the same ground truth).
//! Both terms use the Chamfer formulation from [`crate::metrics`].

use crate::geometry::{PointCloud, SymmetryPlane};
use crate::metrics::{chamfer_accel, DistanceMode};

/// The two loss terms and their sum. `total == recon + sym` holds exactly
/// (by construction, not by tolerance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualLossBreakdown {
    pub recon: f64,
    pub sym: f64,
    pub total: f64,
}

/// Unweighted dual loss: `chamfer(P, gt) + chamfer(reflect(P), gt)`.
pub fn dual_loss(
    pred: &PointCloud,
    plane: &SymmetryPlane,
    gt: &PointCloud,
    mode: DistanceMode,
) -> DualLossBreakdown {
    dual_loss_weighted(pred, plane, gt, mode, 1.0)
}

/// Dual loss with a weight on the symmetry term, for ablations. The stored
/// `sym` field is the weighted term so the `total = recon + sym` identity
/// still holds.
pub fn dual_loss_weighted(
    pred: &PointCloud,
    plane: &SymmetryPlane,
    gt: &PointCloud,
    mode: DistanceMode,
    sym_weight: f64,
) -> DualLossBreakdown {
    let mirrored = plane.reflect_cloud(pred);
    let recon = chamfer_accel(pred, gt, mode);
    let sym = sym_weight * chamfer_accel(&mirrored, gt, mode);
    DualLossBreakdown {
        recon,
        sym,
        total: recon + sym,
    }
}

/// Self-symmetry score: Chamfer distance between a cloud and its own mirror
/// image. Zero iff the cloud is mirror-symmetric about the plane as a
/// multiset. This is the objective minimized by plane fitting, where no
/// ground truth is available.
pub fn symmetry_residual(cloud: &PointCloud, plane: &SymmetryPlane, mode: DistanceMode) -> f64 {
    chamfer_accel(cloud, &plane.reflect_cloud(cloud), mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::metrics::chamfer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_corners() -> PointCloud {
        PointCloud::new(
            (0..8)
                .map(|i| {
                    Point3::new(
                        if i & 1 == 0 { -0.5 } else { 0.5 },
                        if i & 2 == 0 { -0.5 } else { 0.5 },
                        if i & 4 == 0 { -0.5 } else { 0.5 },
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    fn plane(n: Point3, d: f64) -> SymmetryPlane {
        SymmetryPlane::new(n, d).unwrap()
    }

    #[test]
    fn symmetric_fixed_point_has_zero_loss() {
        let cube = cube_corners();
        let p = plane(Point3::new(1.0, 0.0, 0.0), 0.0);
        let loss = dual_loss(&cube, &p, &cube, DistanceMode::Squared);
        assert_eq!(loss.recon, 0.0);
        assert_eq!(loss.sym, 0.0);
        assert_eq!(loss.total, 0.0);
    }

    #[test]
    fn misaligned_plane_activates_only_symmetry_term() {
        let cube = cube_corners();
        let bad = plane(Point3::new(1.0, 0.0, 0.0), -0.7);
        let loss = dual_loss(&cube, &bad, &cube, DistanceMode::Squared);
        assert_eq!(loss.recon, 0.0);
        assert!(loss.sym > 0.0);
        assert_eq!(loss.total, loss.sym);
    }

    #[test]
    fn total_matches_independently_composed_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rand_cloud = |rng: &mut ChaCha8Rng| {
            PointCloud::new(
                (0..32)
                    .map(|_| {
                        Point3::new(
                            rng.random::<f64>(),
                            rng.random::<f64>(),
                            rng.random::<f64>(),
                        )
                    })
                    .collect(),
            )
            .unwrap()
        };
        let pred = rand_cloud(&mut rng);
        let gt = rand_cloud(&mut rng);
        let pl = plane(Point3::new(1.0, 0.0, 0.0), 0.0);
        for mode in [DistanceMode::Squared, DistanceMode::Euclidean] {
            let loss = dual_loss(&pred, &pl, &gt, mode);
            let expect = chamfer(&pred, &gt, mode) + chamfer(&pl.reflect_cloud(&pred), &gt, mode);
            assert!((loss.total - expect).abs() < 1e-12);
            assert_eq!(loss.total, loss.recon + loss.sym);
        }
    }

    #[test]
    fn weighted_total_keeps_identity() {
        let cube = cube_corners();
        let bad = plane(Point3::new(1.0, 1.0, 0.0), -0.3);
        let loss = dual_loss_weighted(&cube, &bad, &cube, DistanceMode::Squared, 0.5);
        assert_eq!(loss.total, loss.recon + loss.sym);
        let unweighted = dual_loss(&cube, &bad, &cube, DistanceMode::Squared);
        assert!((loss.sym - 0.5 * unweighted.sym).abs() < 1e-15);
    }

    #[test]
    fn residual_zero_for_symmetric_clouds() {
        let cube = cube_corners();
        assert_eq!(
            symmetry_residual(
                &cube,
                &plane(Point3::new(1.0, 0.0, 0.0), 0.0),
                DistanceMode::Squared
            ),
            0.0
        );
        let two = PointCloud::new(vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(
            symmetry_residual(
                &two,
                &plane(Point3::new(1.0, 0.0, 0.0), 0.0),
                DistanceMode::Squared
            ),
            0.0
        );
    }

    #[test]
    fn residual_positive_when_plane_misses_center() {
        let cube = cube_corners();
        let off = plane(Point3::new(1.0, 0.0, 0.0), -0.4);
        assert!(symmetry_residual(&cube, &off, DistanceMode::Squared) > 0.0);
    }

    #[test]
    fn residual_invariant_under_reflecting_the_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let cloud = PointCloud::new(
            (0..48)
                .map(|_| {
                    Point3::new(
                        rng.random::<f64>() * 2.0 - 1.0,
                        rng.random::<f64>() * 2.0 - 1.0,
                        rng.random::<f64>() * 2.0 - 1.0,
                    )
                })
                .collect(),
        )
        .unwrap();
        let pl = plane(Point3::new(0.3, -1.2, 0.4), 0.1);
        let direct = symmetry_residual(&cloud, &pl, DistanceMode::Squared);
        let mirrored = symmetry_residual(&pl.reflect_cloud(&cloud), &pl, DistanceMode::Squared);
        assert!((direct - mirrored).abs() < 1e-9);
    }
}
