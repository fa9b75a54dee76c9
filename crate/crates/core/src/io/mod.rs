//! Point-cloud and mesh ingestion, normalization, and result persistence.
//!
//! Supported cloud formats: XYZ (whitespace triples, `#` comments), PLY
//! (ascii and binary little-endian; on save, `Ply` writes binary doubles so
//! coordinates round-trip bit-exactly, `PlyAscii` writes shortest
//! round-trip decimals), and OBJ vertex lines. Meshes load from OBJ.

mod mesh;
mod ply;

pub use mesh::{load_mesh_obj, sample_mesh, TriangleMesh};

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{GeometryError, Point3, PointCloud};
use crate::metrics::MetricReport;

/// Default sampled-cloud size.
pub const DEFAULT_SAMPLE_COUNT: usize = 2048;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}: parse error at byte {offset}: {msg}")]
    ParseBinary {
        path: String,
        offset: u64,
        msg: String,
    },
    #[error("{path}: unsupported format: {msg}")]
    UnsupportedFormat { path: String, msg: String },
    #[error("{path}: file contains no points")]
    EmptyCloud { path: String },
    #[error("mesh has no sampleable surface area")]
    NoSurface,
    #[error("cloud is degenerate for the requested normalization")]
    DegenerateCloud,
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn parse(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}

fn cloud_from_points(points: Vec<Point3>, path: &Path) -> Result<PointCloud, IoError> {
    match PointCloud::new(points) {
        Ok(cloud) => Ok(cloud),
        Err(GeometryError::EmptyCloud) => Err(IoError::EmptyCloud {
            path: path.display().to_string(),
        }),
        Err(_) => Err(IoError::parse(path, 0, "non-finite coordinate")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    /// Whitespace-separated `x y z` per line; `#` starts a comment.
    Xyz,
    /// PLY; loads ascii or binary little-endian, saves binary doubles.
    Ply,
    /// PLY saved as ascii (loading is identical to `Ply`).
    PlyAscii,
    /// OBJ `v` lines only.
    ObjVertices,
}

impl CloudFormat {
    /// Guess from the file extension.
    pub fn from_path(path: &Path) -> Option<CloudFormat> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("xyz") | Some("txt") => Some(CloudFormat::Xyz),
            Some("ply") => Some(CloudFormat::Ply),
            Some("obj") => Some(CloudFormat::ObjVertices),
            _ => None,
        }
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud, IoError> {
    let path = path.as_ref();
    match format {
        CloudFormat::Xyz => load_xyz(path),
        CloudFormat::Ply | CloudFormat::PlyAscii => ply::load(path),
        CloudFormat::ObjVertices => load_obj_vertices(path),
    }
}

pub fn save_cloud(
    cloud: &PointCloud,
    path: impl AsRef<Path>,
    format: CloudFormat,
) -> Result<(), IoError> {
    let path = path.as_ref();
    match format {
        CloudFormat::Xyz => {
            let mut text = String::new();
            for p in cloud.iter() {
                writeln!(text, "{} {} {}", p.x, p.y, p.z).expect("string write");
            }
            fs::write(path, text).map_err(|e| IoError::io(path, e))
        }
        CloudFormat::Ply => ply::save_binary(cloud, path),
        CloudFormat::PlyAscii => ply::save_ascii(cloud, path),
        CloudFormat::ObjVertices => {
            let mut text = String::new();
            for p in cloud.iter() {
                writeln!(text, "v {} {} {}", p.x, p.y, p.z).expect("string write");
            }
            fs::write(path, text).map_err(|e| IoError::io(path, e))
        }
    }
}

fn load_xyz(path: &Path) -> Result<PointCloud, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let mut points = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(IoError::parse(
                path,
                line_no,
                format!("expected 3 coordinates, found {}", fields.len()),
            ));
        }
        let mut coords = [0.0f64; 3];
        for (c, field) in coords.iter_mut().zip(&fields) {
            *c = field
                .parse()
                .map_err(|_| IoError::parse(path, line_no, format!("invalid number {field:?}")))?;
        }
        points.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    cloud_from_points(points, path)
}

fn load_obj_vertices(path: &Path) -> Result<PointCloud, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if !line.starts_with("v ") && line != "v" {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().skip(1).collect();
        // OBJ vertices may carry an optional w component.
        if fields.len() != 3 && fields.len() != 4 {
            return Err(IoError::parse(
                path,
                line_no,
                format!(
                    "vertex must have 3 or 4 coordinates, found {}",
                    fields.len()
                ),
            ));
        }
        let mut coords = [0.0f64; 3];
        for (c, field) in coords.iter_mut().zip(&fields) {
            *c = field
                .parse()
                .map_err(|_| IoError::parse(path, line_no, format!("invalid number {field:?}")))?;
        }
        points.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    cloud_from_points(points, path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalizeConvention {
    /// Bounding box centered at the origin with maximum extent 1.
    UnitCube,
    /// Centroid at the origin with maximum radius 1.
    UnitSphere,
}

/// The centering/scaling applied by [`normalize`]: `p -> (p - center) / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationRecord {
    pub center: Point3,
    pub scale: f64,
    pub convention: NormalizeConvention,
}

impl NormalizationRecord {
    pub fn apply_point(&self, p: Point3) -> Point3 {
        (p - self.center) * (1.0 / self.scale)
    }

    pub fn invert_point(&self, p: Point3) -> Point3 {
        p * self.scale + self.center
    }

    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud::new(cloud.iter().map(|&p| self.apply_point(p)).collect())
            .expect("normalization of a valid cloud is valid")
    }

    pub fn invert(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud::new(cloud.iter().map(|&p| self.invert_point(p)).collect())
            .expect("denormalization of a valid cloud is valid")
    }
}

/// Center and scale a cloud per the convention, returning the normalized
/// cloud and the record that reproduces (and inverts) the map.
///
/// A cloud with zero extent normalizes to the origin with scale 1 under
/// `UnitCube`; under `UnitSphere` it is an error.
pub fn normalize(
    cloud: &PointCloud,
    convention: NormalizeConvention,
) -> Result<(PointCloud, NormalizationRecord), IoError> {
    let record = match convention {
        NormalizeConvention::UnitCube => {
            let mut lo = *cloud.points().first().expect("nonempty");
            let mut hi = lo;
            for &p in cloud.iter() {
                lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
                hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
            }
            let extent = hi - lo;
            let scale = extent.x.max(extent.y).max(extent.z);
            NormalizationRecord {
                center: (lo + hi) * 0.5,
                scale: if scale > 0.0 { scale } else { 1.0 },
                convention,
            }
        }
        NormalizeConvention::UnitSphere => {
            let center = cloud.centroid();
            let mut radius2 = 0.0f64;
            for &p in cloud.iter() {
                radius2 = radius2.max(p.dist2(center));
            }
            if radius2 <= 0.0 {
                return Err(IoError::DegenerateCloud);
            }
            NormalizationRecord {
                center,
                scale: radius2.sqrt(),
                convention,
            }
        }
    };
    Ok((record.apply(cloud), record))
}

/// One row of a metrics CSV: a pair identifier, a category label, and the
/// computed report.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub id: String,
    pub category: String,
    pub report: MetricReport,
}

/// Header of the report CSV schema (scaled columns follow the table
/// conventions: CD x 1e3, EMD x 1e2).
pub const REPORT_CSV_HEADER: &str =
    "id,category,cd_raw,cd_x1e3,emd_raw,emd_x1e2,fscore,threshold,n_points";

/// Format one data row of the report CSV. Raw values use shortest
/// round-trip formatting; scaled values are fixed to two decimals.
pub fn format_report_row(row: &ReportRow) -> String {
    let r = &row.report;
    format!(
        "{},{},{},{:.2},{},{:.2},{},{},{}",
        row.id,
        row.category,
        r.cd,
        r.cd_x1e3(),
        r.emd,
        r.emd_x1e2(),
        r.fscore,
        r.threshold,
        r.n_pred
    )
}

/// Write a report CSV (header plus one row per report).
pub fn save_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{REPORT_CSV_HEADER}").map_err(|e| IoError::io(path, e))?;
    for row in rows {
        writeln!(out, "{}", format_report_row(row)).map_err(|e| IoError::io(path, e))?;
    }
    out.flush().map_err(|e| IoError::io(path, e))
}
