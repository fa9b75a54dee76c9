//! Point-cloud reflective-symmetry toolkit: exact plane-reflection algebra,
//! symmetry-plane estimation by residual minimization, a dual
//! reconstruction-plus-symmetry training objective, and a reference-grade
//! CD / EMD / F-Score evaluation stack with the table-scaling conventions
//! used for reporting.
//!
//! All types are immutable values and all operations are pure functions;
//! everything here is safe to call concurrently. Internal parallelism
//! (fit restarts) uses deterministic reductions so results do not depend on
//! scheduling.

pub mod align;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod symfit;
pub mod symloss;

pub use align::{
    channel_reduction, correspondence_map, cosine_similarity, load_feature_grid, save_feature_grid,
    AlignError, FeatureGrid, FeatureVector,
};
pub use geometry::{GeometryError, Mat3, Point3, PointCloud, ReflectionTransform, SymmetryPlane};
pub use io::{
    load_cloud, load_mesh_obj, normalize, sample_mesh, save_cloud, save_report, CloudFormat,
    IoError, NormalizationRecord, NormalizeConvention, ReportRow, TriangleMesh,
    DEFAULT_SAMPLE_COUNT, REPORT_CSV_HEADER,
};
pub use metrics::{
    chamfer, chamfer_accel, emd_approx, emd_exact, fscore, report, report_with, AssignmentPlan,
    DistanceMode, EmdMethod, EmdSelect, KdTree3, MetricError, MetricReport, ReportOptions,
    DEFAULT_EMD_EPSILON, DEFAULT_FSCORE_THRESHOLD, EXACT_EMD_CAP,
};
pub use symfit::{
    fit_plane, pca_seed_planes, symmetrize, FitConfig, FitError, FitResult, SymmetrizeStrategy,
};
pub use symloss::{dual_loss, dual_loss_weighted, symmetry_residual, DualLossBreakdown};
