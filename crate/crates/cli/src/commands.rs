//! The five subcommands. Every command is a thin shell over library calls:
//! numeric output comes straight from `symmpoint-core` values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use symmpoint_core::{
    fit_plane, load_cloud, load_mesh_obj, normalize, report_with, sample_mesh, save_cloud,
    symmetrize, symmetry_residual, CloudFormat, DistanceMode, EmdMethod, EmdSelect, FitConfig,
    FitResult, MetricReport, NormalizeConvention, Point3, PointCloud, ReportRow,
    SymmetrizeStrategy, SymmetryPlane,
};

use crate::args::{
    CdModeArg, EmdArg, FitPlaneArgs, MetricsArgs, NormalizeArg, OutputFormat, SampleArgs,
    StrategyArg, SymmetrizeArgs,
};
use crate::error::{CmdError, EXIT_UNCONVERGED};
use crate::manifest::RunManifest;

pub const REPORT_VERSION_HEADER: &str = "# symmpoint-report v1";

pub fn load_cloud_auto(path: &Path) -> Result<PointCloud, CmdError> {
    let format = CloudFormat::from_path(path).ok_or_else(|| {
        CmdError::usage(format!(
            "{}: cannot infer cloud format from extension (use .xyz, .ply, or .obj)",
            path.display()
        ))
    })?;
    Ok(load_cloud(path, format)?)
}

pub fn save_cloud_auto(cloud: &PointCloud, path: &Path) -> Result<(), CmdError> {
    let format = CloudFormat::from_path(path).ok_or_else(|| {
        CmdError::usage(format!(
            "{}: cannot infer cloud format from extension (use .xyz, .ply, or .obj)",
            path.display()
        ))
    })?;
    Ok(save_cloud(cloud, path, format)?)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CmdError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CmdError::io(&path.display().to_string(), &e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Normalize the pair for evaluation: the record computed from the ground
/// truth is applied to both clouds, preserving their relative geometry while
/// making absolute thresholds meaningful.
pub fn normalize_pair(
    pred: PointCloud,
    gt: PointCloud,
    mode: NormalizeArg,
) -> Result<(PointCloud, PointCloud), CmdError> {
    match mode {
        NormalizeArg::None => Ok((pred, gt)),
        NormalizeArg::UnitCube => {
            let (gt_normalized, record) = normalize(&gt, NormalizeConvention::UnitCube)?;
            Ok((record.apply(&pred), gt_normalized))
        }
    }
}

pub fn compute_report(
    pred: &PointCloud,
    gt: &PointCloud,
    args: &MetricsArgs,
) -> Result<MetricReport, CmdError> {
    let options = symmpoint_core::ReportOptions {
        threshold: args.threshold,
        cd_mode: args.cd_mode.into(),
        emd: match args.emd {
            EmdArg::Auto => EmdSelect::Auto,
            EmdArg::Exact => EmdSelect::Exact,
            EmdArg::Approx => EmdSelect::Approx {
                epsilon: args.epsilon,
            },
        },
    };
    Ok(report_with(pred, gt, &options)?)
}

fn mode_name(mode: DistanceMode) -> &'static str {
    match mode {
        DistanceMode::Squared => "squared",
        DistanceMode::Euclidean => "euclidean",
    }
}

fn emd_method_name(method: EmdMethod) -> String {
    match method {
        EmdMethod::Exact => "exact".to_string(),
        EmdMethod::Approx { epsilon } => format!("approx(epsilon={epsilon})"),
    }
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<i32, CmdError> {
    let pred_raw = load_cloud_auto(&args.pred)?;
    let gt_raw = load_cloud_auto(&args.gt)?;
    let (pred, gt) = normalize_pair(pred_raw, gt_raw, args.normalize)?;
    let report = compute_report(&pred, &gt, args)?;

    let text = match args.format() {
        OutputFormat::Text => render_metrics_text(args, &report),
        OutputFormat::Json => {
            let json = metrics_json(args, &report);
            serde_json::to_string_pretty(&json).expect("report serializes") + "\n"
        }
        OutputFormat::Csv => {
            let id = args
                .pred
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "pair".to_string());
            let row = ReportRow {
                id,
                category: "-".to_string(),
                report,
            };
            format!(
                "{}\n{}\n",
                symmpoint_core::REPORT_CSV_HEADER,
                symmpoint_core::io::format_report_row(&row)
            )
        }
    };
    emit(args.out.as_ref(), &text)?;

    if let Some(path) = &args.manifest_out {
        RunManifest::new("metrics")
            .input(&args.pred)
            .input(&args.gt)
            .config(&format!(
                "threshold={};cd_mode={};emd={:?};epsilon={};normalize={:?}",
                args.threshold,
                mode_name(args.cd_mode.into()),
                args.emd,
                args.epsilon,
                args.normalize
            ))
            .write(path)?;
    }
    Ok(0)
}

fn render_metrics_text(args: &MetricsArgs, report: &MetricReport) -> String {
    let mut out = String::new();
    writeln!(out, "{REPORT_VERSION_HEADER}").unwrap();
    writeln!(out, "pred: {} n={}", args.pred.display(), report.n_pred).unwrap();
    writeln!(out, "gt: {} n={}", args.gt.display(), report.n_gt).unwrap();
    writeln!(out, "normalize: {}", args.normalize.name()).unwrap();
    writeln!(out, "cd_mode: {}", mode_name(report.cd_mode)).unwrap();
    writeln!(out, "emd_method: {}", emd_method_name(report.emd_method)).unwrap();
    writeln!(out, "threshold: {}", report.threshold).unwrap();
    writeln!(out, "cd_raw: {}", report.cd).unwrap();
    writeln!(out, "emd_raw: {}", report.emd).unwrap();
    writeln!(out, "fscore_raw: {}", report.fscore).unwrap();
    writeln!(out, "cd_x1e3: {:.2}", report.cd_x1e3()).unwrap();
    writeln!(out, "emd_x1e2: {:.2}", report.emd_x1e2()).unwrap();
    writeln!(out, "fscore: {:.2}", report.fscore).unwrap();
    out
}

fn metrics_json(args: &MetricsArgs, report: &MetricReport) -> serde_json::Value {
    serde_json::json!({
        "report_version": 1,
        "pred": args.pred.display().to_string(),
        "gt": args.gt.display().to_string(),
        "n_pred": report.n_pred,
        "n_gt": report.n_gt,
        "normalize": args.normalize.name(),
        "cd_mode": mode_name(report.cd_mode),
        "emd_method": emd_method_name(report.emd_method),
        "threshold": report.threshold,
        "cd": report.cd,
        "cd_x1e3": report.cd_x1e3(),
        "emd": report.emd,
        "emd_x1e2": report.emd_x1e2(),
        "fscore": report.fscore,
    })
}

pub fn fit_config_from(args: &FitPlaneArgs) -> FitConfig {
    FitConfig {
        restarts: args.restarts,
        max_iters: args.max_iters,
        fit_offset: args.fit_offset,
        mode: args.mode.into(),
        ..FitConfig::default()
    }
}

pub fn cmd_fit_plane(args: &FitPlaneArgs) -> Result<i32, CmdError> {
    let cloud = load_cloud_auto(&args.cloud)?;
    let config = fit_config_from(args);
    let fit = fit_plane(&cloud, &config)?;

    let text = if args.json {
        serde_json::to_string_pretty(&fit_json(args, &cloud, &fit)).expect("fit serializes") + "\n"
    } else {
        render_fit_text(args, &cloud, &fit)
    };
    emit(args.out.as_ref(), &text)?;

    if let Some(path) = &args.trace_out {
        let mut csv = String::from("iteration,residual\n");
        for &(iteration, residual) in &fit.trace {
            writeln!(csv, "{iteration},{residual}").unwrap();
        }
        std::fs::write(path, csv).map_err(|e| CmdError::io(&path.display().to_string(), &e))?;
    }

    if let Some(path) = &args.manifest_out {
        RunManifest::new("fit-plane")
            .input(&args.cloud)
            .config(&format!(
                "restarts={};max_iters={};fit_offset={};mode={}",
                config.restarts,
                config.max_iters,
                config.fit_offset,
                mode_name(config.mode)
            ))
            .write(path)?;
    }

    Ok(if fit.converged { 0 } else { EXIT_UNCONVERGED })
}

fn render_fit_text(args: &FitPlaneArgs, cloud: &PointCloud, fit: &FitResult) -> String {
    let n = fit.plane.normal();
    let mut out = String::new();
    writeln!(out, "{REPORT_VERSION_HEADER}").unwrap();
    writeln!(out, "cloud: {} n={}", args.cloud.display(), cloud.len()).unwrap();
    writeln!(out, "normal: {} {} {}", n.x, n.y, n.z).unwrap();
    writeln!(out, "offset: {}", fit.plane.offset()).unwrap();
    writeln!(out, "residual: {}", fit.residual).unwrap();
    writeln!(out, "iterations: {}", fit.iterations).unwrap();
    writeln!(out, "seed_id: {}", fit.seed_id).unwrap();
    writeln!(out, "converged: {}", fit.converged).unwrap();
    out
}

fn fit_json(args: &FitPlaneArgs, cloud: &PointCloud, fit: &FitResult) -> serde_json::Value {
    let n = fit.plane.normal();
    serde_json::json!({
        "report_version": 1,
        "cloud": args.cloud.display().to_string(),
        "n_points": cloud.len(),
        "normal": [n.x, n.y, n.z],
        "offset": fit.plane.offset(),
        "residual": fit.residual,
        "iterations": fit.iterations,
        "seed_id": fit.seed_id,
        "converged": fit.converged,
    })
}

pub fn parse_plane_spec(spec: &str) -> Result<SymmetryPlane, CmdError> {
    let fields: Vec<&str> = spec.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(CmdError::usage(format!(
            "--plane expects \"nx ny nz d\", found {} fields",
            fields.len()
        )));
    }
    let mut values = [0.0f64; 4];
    for (v, field) in values.iter_mut().zip(&fields) {
        *v = field
            .parse()
            .map_err(|_| CmdError::usage(format!("--plane: invalid number {field:?}")))?;
    }
    Ok(SymmetryPlane::new(
        Point3::new(values[0], values[1], values[2]),
        values[3],
    )?)
}

pub fn cmd_symmetrize(args: &SymmetrizeArgs) -> Result<i32, CmdError> {
    let cloud = load_cloud_auto(&args.cloud)?;
    let mode = DistanceMode::Squared;

    let plane = match (&args.plane, args.auto) {
        (Some(spec), false) => parse_plane_spec(spec)?,
        (None, true) => {
            let config = FitConfig {
                restarts: args.restarts,
                ..FitConfig::default()
            };
            let fit = fit_plane(&cloud, &config)?;
            if !fit.converged {
                eprintln!("warning: plane fit did not converge; using best plane found");
            }
            fit.plane
        }
        _ => {
            return Err(CmdError::usage(
                "exactly one of --plane or --auto is required",
            ))
        }
    };

    let strategy = match args.strategy {
        StrategyArg::Union => SymmetrizeStrategy::Union,
        StrategyArg::ReplaceWorseHalf => SymmetrizeStrategy::ReplaceWorseHalf,
    };
    let residual_before = symmetry_residual(&cloud, &plane, mode);
    let completed = symmetrize(&cloud, &plane, strategy);
    let residual_after = symmetry_residual(&completed, &plane, mode);
    save_cloud_auto(&completed, &args.out_cloud)?;

    let n = plane.normal();
    let mut out = String::new();
    writeln!(out, "{REPORT_VERSION_HEADER}").unwrap();
    writeln!(out, "cloud: {} n={}", args.cloud.display(), cloud.len()).unwrap();
    writeln!(out, "plane: {} {} {} {}", n.x, n.y, n.z, plane.offset()).unwrap();
    writeln!(out, "strategy: {}", args.strategy.name()).unwrap();
    writeln!(out, "residual_before: {residual_before}").unwrap();
    writeln!(out, "residual_after: {residual_after}").unwrap();
    writeln!(out, "points_out: {}", completed.len()).unwrap();
    writeln!(out, "wrote: {}", args.out_cloud.display()).unwrap();
    print!("{out}");

    if let Some(path) = &args.manifest_out {
        RunManifest::new("symmetrize")
            .input(&args.cloud)
            .output(&args.out_cloud)
            .config(&format!(
                "plane={:?};auto={};strategy={};restarts={}",
                args.plane,
                args.auto,
                args.strategy.name(),
                args.restarts
            ))
            .write(path)?;
    }
    Ok(0)
}

pub fn cmd_sample(args: &SampleArgs) -> Result<i32, CmdError> {
    let mesh = load_mesh_obj(&args.mesh)?;
    let cloud = sample_mesh(&mesh, args.n, args.seed)?;
    save_cloud_auto(&cloud, &args.out_cloud)?;

    let mut out = String::new();
    writeln!(out, "{REPORT_VERSION_HEADER}").unwrap();
    writeln!(
        out,
        "mesh: {} vertices={} faces={}",
        args.mesh.display(),
        mesh.vertices().len(),
        mesh.faces().len()
    )
    .unwrap();
    writeln!(out, "sampled: {}", cloud.len()).unwrap();
    writeln!(out, "seed: {}", args.seed).unwrap();
    writeln!(out, "wrote: {}", args.out_cloud.display()).unwrap();
    print!("{out}");

    let manifest_path = args
        .manifest_out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.manifest.json", args.out_cloud.display())));
    RunManifest::new("sample")
        .input(&args.mesh)
        .output(&args.out_cloud)
        .config(&format!("n={};seed={}", args.n, args.seed))
        .seed(args.seed)
        .write(&manifest_path)?;
    Ok(0)
}

impl From<CdModeArg> for DistanceMode {
    fn from(arg: CdModeArg) -> Self {
        match arg {
            CdModeArg::Squared => DistanceMode::Squared,
            CdModeArg::Euclidean => DistanceMode::Euclidean,
        }
    }
}
