//! Symmetry-plane estimation by direct numerical minimization of the
//! self-symmetry residual.
//!
//! The plane normal is optimized over the unit sphere with spherical angles
//! expressed in a per-restart orthonormal frame whose equator contains the
//! seed direction, which keeps the parameterization well-conditioned around
//! the region being searched. Seeds come from the principal axes of the
//! cloud (a mirror plane's normal is always a covariance eigenvector), with
//! extra random restarts beyond the three PCA seeds.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Point3, PointCloud, SymmetryPlane};
use crate::metrics::{DistanceMode, KdTree3};
use crate::symloss::symmetry_residual;

/// Fixed seed for the random restart directions, so fits are reproducible
/// run to run.
const RESTART_SEED: u64 = 0x53594d4d;

/// Central finite-difference step, below the nearest-neighbor switching
/// scale of unit-normalized clouds at the sizes this fitter targets.
const FD_STEP: f64 = 1e-5;

/// Variance below which a cloud counts as a single point (rank 0).
const COINCIDENT_VARIANCE: f64 = 1e-20;
/// Relative second-eigenvalue floor below which a cloud counts as collinear.
const COLLINEAR_RATIO: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FitError {
    #[error("degenerate point cloud (too few, coincident, or collinear points)")]
    DegenerateCloud,
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    /// Number of descent restarts; the first three use PCA seed planes.
    pub restarts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    /// Stop a restart once an accepted step improves the residual by less
    /// than this.
    pub tol: f64,
    /// Optimize the offset too; otherwise the plane passes through the
    /// centroid (d = -n·centroid).
    pub fit_offset: bool,
    pub mode: DistanceMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 300,
            step_init: 0.1,
            tol: 1e-8,
            fit_offset: false,
            mode: DistanceMode::Squared,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<(), FitError> {
        if self.restarts < 1 {
            return Err(FitError::InvalidConfig("restarts must be at least 1"));
        }
        if self.max_iters < 1 {
            return Err(FitError::InvalidConfig("max_iters must be at least 1"));
        }
        if !self.step_init.is_finite() || self.step_init <= 0.0 {
            return Err(FitError::InvalidConfig("step_init must be positive"));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(FitError::InvalidConfig("tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub plane: SymmetryPlane,
    /// Residual of `plane`, recomputed through [`symmetry_residual`].
    pub residual: f64,
    /// Outer iterations performed by the winning restart.
    pub iterations: usize,
    /// `(iteration, residual)` after each accepted step; non-increasing.
    pub trace: Vec<(usize, f64)>,
    /// Index of the winning restart (0..2 are PCA seeds).
    pub seed_id: usize,
    /// False only when every restart exhausted `max_iters` without meeting
    /// `tol`; the best plane found is still returned.
    pub converged: bool,
}

/// Principal axes of the cloud: eigenvalues (descending) and matching unit
/// eigenvectors of the 3x3 covariance matrix.
#[allow(clippy::needless_range_loop)] // triangular index math reads better indexed
fn principal_axes(cloud: &PointCloud) -> ([f64; 3], [Point3; 3]) {
    let c = cloud.centroid();
    let inv_n = 1.0 / cloud.len() as f64;
    let mut cov = [[0.0f64; 3]; 3];
    for &p in cloud.iter() {
        let d = p - c;
        let v = [d.x, d.y, d.z];
        for i in 0..3 {
            for j in i..3 {
                cov[i][j] += v[i] * v[j];
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            cov[i][j] *= inv_n;
            cov[j][i] = cov[i][j];
        }
    }
    jacobi_eigen_sym3(cov)
}

/// Cyclic Jacobi eigendecomposition of a symmetric 3x3 matrix. Returns
/// eigenvalues in descending order with matching unit eigenvectors.
#[allow(clippy::needless_range_loop)] // paired symmetric writes need the index
fn jacobi_eigen_sym3(mut a: [[f64; 3]; 3]) -> ([f64; 3], [Point3; 3]) {
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let frob2: f64 = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|&x| x * x)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);

    for _sweep in 0..50 {
        let off2 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if off2 <= frob2 * 1e-32 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            let app = a[p][p];
            let aqq = a[q][q];
            a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
            a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            for r in 0..3 {
                if r != p && r != q {
                    let arp = a[r][p];
                    let arq = a[r][q];
                    a[r][p] = c * arp - s * arq;
                    a[p][r] = a[r][p];
                    a[r][q] = s * arp + c * arq;
                    a[q][r] = a[r][q];
                }
            }
            for row in &mut v {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let vals = [
        a[order[0]][order[0]],
        a[order[1]][order[1]],
        a[order[2]][order[2]],
    ];
    let vecs = [
        Point3::new(v[0][order[0]], v[1][order[0]], v[2][order[0]]),
        Point3::new(v[0][order[1]], v[1][order[1]], v[2][order[1]]),
        Point3::new(v[0][order[2]], v[1][order[2]], v[2][order[2]]),
    ];
    (vals, vecs)
}

/// Candidate symmetry planes through the centroid, normal to the covariance
/// eigenvectors, in eigenvalue-descending order.
pub fn pca_seed_planes(cloud: &PointCloud) -> Result<Vec<SymmetryPlane>, FitError> {
    if cloud.len() < 3 {
        return Err(FitError::DegenerateCloud);
    }
    let (vals, vecs) = principal_axes(cloud);
    if vals[0] <= COINCIDENT_VARIANCE {
        return Err(FitError::DegenerateCloud);
    }
    let centroid = cloud.centroid();
    Ok(vecs
        .iter()
        .map(|&n| {
            SymmetryPlane::through_point(n, centroid)
                .expect("eigenvectors of a finite covariance are unit vectors")
        })
        .collect())
}

/// Residual evaluator with a static kd-tree over the input cloud.
///
/// For a mirror image Q = R(P), both Chamfer directions reduce to the same
/// sum of nearest-neighbor terms of the reflected points against P, because
/// the reflection is an isometric involution. One tree build per fit, one
/// reflection pass plus N queries per evaluation.
struct ResidualEval<'a> {
    points: &'a [Point3],
    tree: KdTree3,
    mode: DistanceMode,
}

impl<'a> ResidualEval<'a> {
    fn new(cloud: &'a PointCloud, mode: DistanceMode) -> Self {
        Self {
            points: cloud.points(),
            tree: KdTree3::build(cloud.points()),
            mode,
        }
    }

    fn eval(&self, normal: Point3, offset: f64) -> f64 {
        let mut sum = 0.0;
        for &p in self.points {
            let reflected = p - normal * (2.0 * (normal.dot(p) + offset));
            let d2 = self.tree.nearest(reflected).1;
            sum += match self.mode {
                DistanceMode::Squared => d2,
                DistanceMode::Euclidean => d2.sqrt(),
            };
        }
        2.0 * sum / self.points.len() as f64
    }
}

/// Orthonormal frame (u, v, w) with u = dir.
fn tangent_frame(dir: Point3) -> (Point3, Point3, Point3) {
    let helper = if dir.x.abs() <= dir.y.abs() && dir.x.abs() <= dir.z.abs() {
        Point3::new(1.0, 0.0, 0.0)
    } else if dir.y.abs() <= dir.z.abs() {
        Point3::new(0.0, 1.0, 0.0)
    } else {
        Point3::new(0.0, 0.0, 1.0)
    };
    let v = dir
        .cross(helper)
        .normalized()
        .expect("helper axis is not parallel to dir");
    let w = dir.cross(v);
    (dir, v, w)
}

struct RestartOutcome {
    normal: Point3,
    offset: f64,
    iterations: usize,
    trace: Vec<(usize, f64)>,
    converged: bool,
}

fn descend(
    eval: &ResidualEval<'_>,
    seed_normal: Point3,
    centroid: Point3,
    config: &FitConfig,
) -> RestartOutcome {
    let (u, v, w) = tangent_frame(seed_normal);
    let n_params = if config.fit_offset { 3 } else { 2 };
    let normal_at =
        |theta: f64, phi: f64| (u * theta.cos() + v * theta.sin()) * phi.sin() + w * phi.cos();
    let objective = |x: &[f64; 3]| {
        let n = normal_at(x[0], x[1]);
        let d = if config.fit_offset {
            x[2]
        } else {
            -n.dot(centroid)
        };
        eval.eval(n, d)
    };

    // Seed sits on the equator of its own chart: theta = 0, phi = pi/2.
    let mut x = [0.0, FRAC_PI_2, -seed_normal.dot(centroid)];
    let mut current = objective(&x);
    let mut trace = vec![(0, current)];
    let mut step = config.step_init;
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=config.max_iters {
        iterations = iter;

        let mut grad = [0.0f64; 3];
        let mut grad_norm2 = 0.0;
        for k in 0..n_params {
            let mut hi = x;
            let mut lo = x;
            hi[k] += FD_STEP;
            lo[k] -= FD_STEP;
            grad[k] = (objective(&hi) - objective(&lo)) / (2.0 * FD_STEP);
            grad_norm2 += grad[k] * grad[k];
        }
        if grad_norm2.sqrt() < 1e-12 {
            converged = true;
            break;
        }

        // Backtracking halving; only improving steps are accepted, so the
        // trace is non-increasing by construction.
        let mut s = step;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = x;
            for k in 0..n_params {
                trial[k] -= s * grad[k];
            }
            let value = objective(&trial);
            if value < current {
                let improvement = current - value;
                x = trial;
                current = value;
                trace.push((iter, current));
                step = (s * 2.0).min(config.step_init * 16.0);
                accepted = true;
                if improvement < config.tol {
                    converged = true;
                }
                break;
            }
            s *= 0.5;
            if s < 1e-14 {
                break;
            }
        }
        if !accepted {
            // No improving step at line-search resolution: stationary.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    let normal = normal_at(x[0], x[1]);
    let offset = if config.fit_offset {
        x[2]
    } else {
        -normal.dot(centroid)
    };
    RestartOutcome {
        normal,
        offset,
        iterations,
        trace,
        converged,
    }
}

/// Estimate the symmetry plane of a cloud by multi-start descent on
/// [`symmetry_residual`].
///
/// Restarts run independently (in parallel) and the winner is the lowest
/// recomputed residual, ties broken by lowest seed id, so the result is
/// deterministic regardless of scheduling.
pub fn fit_plane(cloud: &PointCloud, config: &FitConfig) -> Result<FitResult, FitError> {
    config.validate()?;
    if cloud.len() < 4 {
        return Err(FitError::DegenerateCloud);
    }
    let (vals, vecs) = principal_axes(cloud);
    if vals[0] <= COINCIDENT_VARIANCE || vals[1] <= COLLINEAR_RATIO * vals[0] {
        return Err(FitError::DegenerateCloud);
    }

    let centroid = cloud.centroid();
    let mut seeds: Vec<Point3> = vecs.iter().copied().take(config.restarts).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    while seeds.len() < config.restarts {
        let candidate = Point3::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        if let Some(unit) = candidate.normalized() {
            if candidate.norm2() <= 1.0 {
                seeds.push(unit);
            }
        }
    }

    let eval = ResidualEval::new(cloud, config.mode);
    let outcomes: Vec<(RestartOutcome, SymmetryPlane, f64)> = seeds
        .par_iter()
        .map(|&seed| {
            let outcome = descend(&eval, seed, centroid, config);
            let plane = SymmetryPlane::new(outcome.normal, outcome.offset)
                .expect("descent output is a finite unit normal");
            let residual = symmetry_residual(cloud, &plane, config.mode);
            (outcome, plane, residual)
        })
        .collect();

    let converged = outcomes.iter().any(|(o, _, _)| o.converged);
    let (seed_id, (outcome, plane, residual)) = outcomes
        .into_iter()
        .enumerate()
        .min_by(|(ia, (_, _, ra)), (ib, (_, _, rb))| ra.total_cmp(rb).then(ia.cmp(ib)))
        .expect("at least one restart");

    Ok(FitResult {
        plane,
        residual,
        iterations: outcome.iterations,
        trace: outcome.trace,
        seed_id,
        converged,
    })
}

/// How [`symmetrize`] completes a cloud.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SymmetrizeStrategy {
    /// Keep every point and append its mirror image (length 2N).
    #[default]
    Union,
    /// Keep the side of the plane holding more points, mirror it over the
    /// other side, and keep on-plane points once (length between N and 2N).
    ReplaceWorseHalf,
}

pub fn symmetrize(
    cloud: &PointCloud,
    plane: &SymmetryPlane,
    strategy: SymmetrizeStrategy,
) -> PointCloud {
    match strategy {
        SymmetrizeStrategy::Union => {
            let mut points = cloud.points().to_vec();
            points.extend(plane.reflect_cloud(cloud).into_points());
            PointCloud::new(points).expect("union of a valid cloud is valid")
        }
        SymmetrizeStrategy::ReplaceWorseHalf => {
            let mut positive = Vec::new();
            let mut negative = Vec::new();
            let mut on_plane = Vec::new();
            for &p in cloud.iter() {
                let s = plane.signed_distance(p);
                if s > 0.0 {
                    positive.push(p);
                } else if s < 0.0 {
                    negative.push(p);
                } else {
                    on_plane.push(p);
                }
            }
            // Denser side wins; ties keep the positive side.
            let keep = if positive.len() >= negative.len() {
                positive
            } else {
                negative
            };
            let mut points = keep.clone();
            points.extend(on_plane);
            points.extend(keep.iter().map(|&p| plane.reflect_unchecked(p)));
            PointCloud::new(points).expect("symmetrized cloud is nonempty and finite")
        }
    }
}
