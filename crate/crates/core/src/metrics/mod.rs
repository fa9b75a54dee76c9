//! Reconstruction metrics: Chamfer Distance, Earth Mover's Distance, and
//! F-Score, plus the table-scaling conventions used when reporting them.
//!
//! Conventions (documented because the literature varies):
//! - Chamfer defaults to the bidirectional *mean of squared* Euclidean
//!   nearest-neighbor distances; `DistanceMode::Euclidean` switches both
//!   directions to plain Euclidean means for comparison with results that
//!   use that convention.
//! - EMD is the *mean* (not sum) matched-pair Euclidean distance, so values
//!   are comparable across cloud sizes.
//! - F-Score uses an absolute distance threshold (default 0.01), intended
//!   for clouds normalized to unit scale.
//! - Table output scales CD by 1e3 and EMD by 1e2; stored values stay raw.

mod emd;
mod kdtree;

pub use emd::{emd_approx, emd_exact, AssignmentPlan, EXACT_EMD_CAP};
pub use kdtree::KdTree3;

use thiserror::Error;

use crate::geometry::{Point3, PointCloud};

/// Default F-Score distance threshold in normalized model coordinates.
pub const DEFAULT_FSCORE_THRESHOLD: f64 = 0.01;
/// Default additive accuracy for approximate EMD.
pub const DEFAULT_EMD_EPSILON: f64 = 1e-3;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum MetricError {
    #[error("clouds must have equal size for EMD (got {n} and {m})")]
    SizeMismatch { n: usize, m: usize },
    #[error("cloud size {n} exceeds the exact-solver cap of {cap}; use emd_approx")]
    TooLarge { n: usize, cap: usize },
    #[error("assignment auction did not converge ({iterations} bids); epsilon too aggressive")]
    NonConvergence { iterations: u64 },
    #[error("threshold must be positive (got {0})")]
    NonPositiveThreshold(f64),
    #[error("epsilon must be positive (got {0})")]
    NonPositiveEpsilon(f64),
}

/// Distance term used inside Chamfer-style metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DistanceMode {
    /// Squared Euclidean nearest-neighbor distances (the default).
    #[default]
    Squared,
    /// Plain Euclidean nearest-neighbor distances.
    Euclidean,
}

impl DistanceMode {
    fn term(self, d2: f64) -> f64 {
        match self {
            DistanceMode::Squared => d2,
            DistanceMode::Euclidean => d2.sqrt(),
        }
    }
}

/// Squared nearest-neighbor distances from each point of `from` to `to`,
/// by exhaustive scan. Ties resolve to the lowest index (strict improvement
/// only), matching the kd-tree path.
fn nn2_brute(from: &[Point3], to: &[Point3]) -> Vec<f64> {
    from.iter()
        .map(|&p| {
            let mut best = f64::INFINITY;
            for &q in to {
                let d2 = p.dist2(q);
                if d2 < best {
                    best = d2;
                }
            }
            best
        })
        .collect()
}

fn nn2_indexed(from: &[Point3], tree: &KdTree3) -> Vec<f64> {
    from.iter().map(|&p| tree.nearest(p).1).collect()
}

/// Combine per-direction nearest-neighbor squared distances into the metric
/// value. Both the brute-force and accelerated paths reduce through this one
/// function, in index order, so they agree bitwise.
fn combine(nn2_pq: &[f64], nn2_qp: &[f64], mode: DistanceMode) -> f64 {
    let mean = |nn2: &[f64]| {
        let mut sum = 0.0;
        for &d2 in nn2 {
            sum += mode.term(d2);
        }
        sum / nn2.len() as f64
    };
    mean(nn2_pq) + mean(nn2_qp)
}

/// Chamfer Distance by exhaustive nearest-neighbor scan (O(N·M)).
///
/// This is the reference implementation; [`chamfer_accel`] must agree with
/// it and is the path to use for large clouds.
pub fn chamfer(p: &PointCloud, q: &PointCloud, mode: DistanceMode) -> f64 {
    combine(
        &nn2_brute(p.points(), q.points()),
        &nn2_brute(q.points(), p.points()),
        mode,
    )
}

/// Chamfer Distance through a kd-tree (O((N+M) log(N+M)) expected).
pub fn chamfer_accel(p: &PointCloud, q: &PointCloud, mode: DistanceMode) -> f64 {
    let tree_q = KdTree3::build(q.points());
    let tree_p = KdTree3::build(p.points());
    combine(
        &nn2_indexed(p.points(), &tree_q),
        &nn2_indexed(q.points(), &tree_p),
        mode,
    )
}

/// F-Score at an absolute Euclidean `threshold`: harmonic mean of precision
/// (fraction of `p` within `threshold` of `q`) and recall (the reverse);
/// zero when both are zero.
pub fn fscore(p: &PointCloud, q: &PointCloud, threshold: f64) -> Result<f64, MetricError> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(MetricError::NonPositiveThreshold(threshold));
    }
    let t2 = threshold * threshold;
    let tree_q = KdTree3::build(q.points());
    let tree_p = KdTree3::build(p.points());
    let within = |points: &[Point3], tree: &KdTree3| {
        points
            .iter()
            .filter(|&&pt| tree.nearest(pt).1 <= t2)
            .count()
    };
    let precision = within(p.points(), &tree_q) as f64 / p.len() as f64;
    let recall = within(q.points(), &tree_p) as f64 / q.len() as f64;
    if precision + recall == 0.0 {
        Ok(0.0)
    } else {
        Ok(2.0 * precision * recall / (precision + recall))
    }
}

/// How the EMD value in a report was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EmdMethod {
    Exact,
    /// Auction approximation; the value is within `epsilon` above optimal.
    Approx {
        epsilon: f64,
    },
}

/// EMD solver selection for [`report_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum EmdSelect {
    /// Exact up to [`EXACT_EMD_CAP`] points, auction beyond.
    #[default]
    Auto,
    Exact,
    Approx {
        epsilon: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportOptions {
    pub threshold: f64,
    pub cd_mode: DistanceMode,
    pub emd: EmdSelect,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_FSCORE_THRESHOLD,
            cd_mode: DistanceMode::default(),
            emd: EmdSelect::default(),
        }
    }
}

/// All three metrics for one cloud pair. Stored values are unscaled; the
/// `*_x1e*` accessors apply the table conventions (CD x 1e3, EMD x 1e2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub cd: f64,
    pub cd_mode: DistanceMode,
    pub emd: f64,
    pub emd_method: EmdMethod,
    pub fscore: f64,
    pub threshold: f64,
    pub n_pred: usize,
    pub n_gt: usize,
}

impl MetricReport {
    /// CD scaled for table display.
    pub fn cd_x1e3(&self) -> f64 {
        self.cd * 1e3
    }

    /// EMD scaled for table display.
    pub fn emd_x1e2(&self) -> f64 {
        self.emd * 1e2
    }
}

/// Compute CD, EMD, and F-Score with default options (squared CD, automatic
/// EMD solver selection).
pub fn report(p: &PointCloud, q: &PointCloud, threshold: f64) -> Result<MetricReport, MetricError> {
    report_with(
        p,
        q,
        &ReportOptions {
            threshold,
            ..ReportOptions::default()
        },
    )
}

pub fn report_with(
    p: &PointCloud,
    q: &PointCloud,
    options: &ReportOptions,
) -> Result<MetricReport, MetricError> {
    let cd = chamfer_accel(p, q, options.cd_mode);
    let f = fscore(p, q, options.threshold)?;
    let (emd, emd_method) = match options.emd {
        EmdSelect::Exact => (emd_exact(p, q)?.0, EmdMethod::Exact),
        EmdSelect::Approx { epsilon } => {
            (emd_approx(p, q, epsilon)?, EmdMethod::Approx { epsilon })
        }
        EmdSelect::Auto => {
            if p.len().max(q.len()) <= EXACT_EMD_CAP {
                (emd_exact(p, q)?.0, EmdMethod::Exact)
            } else {
                let epsilon = DEFAULT_EMD_EPSILON;
                (emd_approx(p, q, epsilon)?, EmdMethod::Approx { epsilon })
            }
        }
    };
    Ok(MetricReport {
        cd,
        cd_mode: options.cd_mode,
        emd,
        emd_method,
        fscore: f,
        threshold: options.threshold,
        n_pred: p.len(),
        n_gt: q.len(),
    })
}
