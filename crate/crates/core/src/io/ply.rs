//! PLY reader/writer for point clouds.
//!
//! Loading handles ascii and binary little-endian files, takes x/y/z from
//! the vertex element, and skips every other property and element (list
//! properties included). Saving emits double-precision coordinates so
//! binary round trips are bit-exact.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::geometry::{Point3, PointCloud};

use super::{cloud_from_points, IoError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, bytes: &[u8]) -> f64 {
        match self {
            Scalar::I8 => bytes[0] as i8 as f64,
            Scalar::U8 => bytes[0] as f64,
            Scalar::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes([
                bytes[0], bytes[1], bytes[2], bytes[3], bytes[4], bytes[5], bytes[6], bytes[7],
            ]),
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar {
        name: String,
        kind: Scalar,
    },
    List {
        name: String,
        count: Scalar,
        elem: Scalar,
    },
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    data_start: usize,
    header_lines: usize,
}

fn unsupported(path: &Path, msg: impl Into<String>) -> IoError {
    IoError::UnsupportedFormat {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header, IoError> {
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let next_line = |pos: &mut usize, line_no: &mut usize| -> Result<String, IoError> {
        if *pos >= bytes.len() {
            return Err(IoError::parse(path, *line_no, "unexpected end of header"));
        }
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos] != b'\n' {
            *pos += 1;
        }
        let mut end = *pos;
        if *pos < bytes.len() {
            *pos += 1; // consume '\n'
        }
        if end > start && bytes[end - 1] == b'\r' {
            end -= 1;
        }
        *line_no += 1;
        String::from_utf8(bytes[start..end].to_vec())
            .map_err(|_| IoError::parse(path, *line_no, "header is not valid utf-8"))
    };

    let magic = next_line(&mut pos, &mut line_no)?;
    if magic.trim() != "ply" {
        return Err(IoError::parse(path, 1, "missing 'ply' magic"));
    }

    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line(&mut pos, &mut line_no)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with("comment") || line.starts_with("obj_info") {
            continue;
        }
        if line == "end_header" {
            break;
        }
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("format") => {
                let kind = fields.next().unwrap_or("");
                encoding = Some(match kind {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    other => {
                        return Err(unsupported(path, format!("PLY format {other:?}")));
                    }
                });
            }
            Some("element") => {
                let name = fields
                    .next()
                    .ok_or_else(|| IoError::parse(path, line_no, "element without name"))?;
                let count: usize = fields
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| IoError::parse(path, line_no, "element without count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| IoError::parse(path, line_no, "property before any element"))?;
                let first = fields
                    .next()
                    .ok_or_else(|| IoError::parse(path, line_no, "property without type"))?;
                if first == "list" {
                    let count = fields
                        .next()
                        .and_then(Scalar::parse)
                        .ok_or_else(|| IoError::parse(path, line_no, "invalid list count type"))?;
                    let elem = fields.next().and_then(Scalar::parse).ok_or_else(|| {
                        IoError::parse(path, line_no, "invalid list element type")
                    })?;
                    let name = fields
                        .next()
                        .ok_or_else(|| IoError::parse(path, line_no, "list without name"))?;
                    element.properties.push(Property::List {
                        name: name.to_string(),
                        count,
                        elem,
                    });
                } else {
                    let kind = Scalar::parse(first).ok_or_else(|| {
                        IoError::parse(path, line_no, format!("unknown property type {first:?}"))
                    })?;
                    let name = fields
                        .next()
                        .ok_or_else(|| IoError::parse(path, line_no, "property without name"))?;
                    element.properties.push(Property::Scalar {
                        name: name.to_string(),
                        kind,
                    });
                }
            }
            Some(other) => {
                return Err(IoError::parse(
                    path,
                    line_no,
                    format!("unexpected header keyword {other:?}"),
                ));
            }
            None => {}
        }
    }

    let encoding =
        encoding.ok_or_else(|| IoError::parse(path, line_no, "missing 'format' line"))?;
    Ok(Header {
        encoding,
        elements,
        data_start: pos,
        header_lines: line_no,
    })
}

/// Positions of the x/y/z scalar properties within the vertex element.
fn vertex_layout(element: &Element, path: &Path) -> Result<[usize; 3], IoError> {
    let mut out = [usize::MAX; 3];
    for (idx, prop) in element.properties.iter().enumerate() {
        let (name, is_scalar) = match prop {
            Property::Scalar { name, .. } => (name.as_str(), true),
            Property::List { name, .. } => (name.as_str(), false),
        };
        let slot = match name {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            _ => continue,
        };
        if !is_scalar {
            return Err(unsupported(path, "vertex coordinate stored as a list"));
        }
        out[slot] = idx;
    }
    if out.contains(&usize::MAX) {
        return Err(unsupported(path, "vertex element lacks x/y/z properties"));
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<PointCloud, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    let header = parse_header(&bytes, path)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| unsupported(path, "no vertex element"))?;
    let layout = vertex_layout(&header.elements[vertex_pos], path)?;

    let points = match header.encoding {
        Encoding::Ascii => read_ascii(&bytes, &header, vertex_pos, layout, path)?,
        Encoding::BinaryLe => read_binary(&bytes, &header, vertex_pos, layout, path)?,
    };
    cloud_from_points(points, path)
}

fn read_ascii(
    bytes: &[u8],
    header: &Header,
    vertex_pos: usize,
    layout: [usize; 3],
    path: &Path,
) -> Result<Vec<Point3>, IoError> {
    let text = std::str::from_utf8(&bytes[header.data_start..])
        .map_err(|_| IoError::parse(path, header.header_lines, "ascii data is not utf-8"))?;
    let mut tokens = text
        .lines()
        .enumerate()
        .flat_map(|(i, line)| {
            let line_no = header.header_lines + i + 1;
            line.split_whitespace().map(move |t| (line_no, t))
        })
        .peekable();

    let mut next_value = |what: &str| -> Result<(usize, f64), IoError> {
        let (line_no, token) = tokens
            .next()
            .ok_or_else(|| IoError::parse(path, header.header_lines, "unexpected end of data"))?;
        let value: f64 = token
            .parse()
            .map_err(|_| IoError::parse(path, line_no, format!("invalid {what} {token:?}")))?;
        Ok((line_no, value))
    };

    let mut points = Vec::new();
    for (elem_idx, element) in header.elements.iter().enumerate() {
        if elem_idx > vertex_pos {
            break; // everything needed has been read
        }
        let is_vertex = elem_idx == vertex_pos;
        if is_vertex {
            points.reserve(element.count);
        }
        for _ in 0..element.count {
            let mut coords = [0.0f64; 3];
            for (prop_idx, prop) in element.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { .. } => {
                        let (line_no, value) = next_value("number")?;
                        if is_vertex {
                            if let Some(slot) = layout.iter().position(|&l| l == prop_idx) {
                                if !value.is_finite() {
                                    return Err(IoError::parse(
                                        path,
                                        line_no,
                                        "non-finite coordinate",
                                    ));
                                }
                                coords[slot] = value;
                            }
                        }
                    }
                    Property::List { .. } => {
                        let (line_no, count) = next_value("list count")?;
                        if count < 0.0 || count.fract() != 0.0 {
                            return Err(IoError::parse(path, line_no, "invalid list count"));
                        }
                        for _ in 0..count as usize {
                            next_value("list item")?;
                        }
                    }
                }
            }
            if is_vertex {
                points.push(Point3::new(coords[0], coords[1], coords[2]));
            }
        }
    }
    Ok(points)
}

fn read_binary(
    bytes: &[u8],
    header: &Header,
    vertex_pos: usize,
    layout: [usize; 3],
    path: &Path,
) -> Result<Vec<Point3>, IoError> {
    let mut offset = header.data_start;
    let take = |offset: &mut usize, n: usize| -> Result<&[u8], IoError> {
        if *offset + n > bytes.len() {
            return Err(IoError::ParseBinary {
                path: path.display().to_string(),
                offset: *offset as u64,
                msg: "unexpected end of data".into(),
            });
        }
        let slice = &bytes[*offset..*offset + n];
        *offset += n;
        Ok(slice)
    };

    let mut points = Vec::new();
    for (elem_idx, element) in header.elements.iter().enumerate() {
        if elem_idx > vertex_pos {
            break;
        }
        let is_vertex = elem_idx == vertex_pos;
        if is_vertex {
            points.reserve(element.count);
        }
        for _ in 0..element.count {
            let mut coords = [0.0f64; 3];
            for (prop_idx, prop) in element.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { kind, .. } => {
                        if is_vertex && layout.contains(&prop_idx) {
                            let at = offset;
                            let value = kind.read_le(take(&mut offset, kind.size())?);
                            if !value.is_finite() {
                                return Err(IoError::ParseBinary {
                                    path: path.display().to_string(),
                                    offset: at as u64,
                                    msg: "non-finite coordinate".into(),
                                });
                            }
                            let slot = layout.iter().position(|&l| l == prop_idx).unwrap();
                            coords[slot] = value;
                        } else {
                            take(&mut offset, kind.size())?;
                        }
                    }
                    Property::List { count, elem, .. } => {
                        let at = offset;
                        let n = count.read_le(take(&mut offset, count.size())?);
                        if n < 0.0 {
                            return Err(IoError::ParseBinary {
                                path: path.display().to_string(),
                                offset: at as u64,
                                msg: "negative list count".into(),
                            });
                        }
                        take(&mut offset, n as usize * elem.size())?;
                    }
                }
            }
            if is_vertex {
                points.push(Point3::new(coords[0], coords[1], coords[2]));
            }
        }
    }
    Ok(points)
}

fn header_text(count: usize, format_line: &str) -> String {
    format!(
        "ply\nformat {format_line} 1.0\nelement vertex {count}\n\
         property double x\nproperty double y\nproperty double z\nend_header\n"
    )
}

pub fn save_binary(cloud: &PointCloud, path: &Path) -> Result<(), IoError> {
    let mut out = Vec::with_capacity(128 + cloud.len() * 24);
    out.extend_from_slice(header_text(cloud.len(), "binary_little_endian").as_bytes());
    for p in cloud.iter() {
        out.extend_from_slice(&p.x.to_le_bytes());
        out.extend_from_slice(&p.y.to_le_bytes());
        out.extend_from_slice(&p.z.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| IoError::io(path, e))
}

pub fn save_ascii(cloud: &PointCloud, path: &Path) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    out.write_all(header_text(cloud.len(), "ascii").as_bytes())
        .map_err(|e| IoError::io(path, e))?;
    for p in cloud.iter() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z).map_err(|e| IoError::io(path, e))?;
    }
    out.flush().map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{load_cloud, save_cloud, CloudFormat};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random::<f64>() * 2.0 - 1.0,
                        rng.random::<f64>() * 2.0 - 1.0,
                        rng.random::<f64>() * 2.0 - 1.0,
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.ply");
        let cloud = random_cloud(100, 50);
        save_cloud(&cloud, &path, CloudFormat::Ply).unwrap();
        let back = load_cloud(&path, CloudFormat::Ply).unwrap();
        assert_eq!(cloud, back);
    }

    #[test]
    fn ascii_round_trip_is_bit_exact() {
        // Shortest round-trip decimal formatting restores every f64.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt_ascii.ply");
        let cloud = random_cloud(60, 51);
        save_cloud(&cloud, &path, CloudFormat::PlyAscii).unwrap();
        let back = load_cloud(&path, CloudFormat::Ply).unwrap();
        assert_eq!(cloud, back);
    }

    #[test]
    fn ascii_vertices_with_extra_properties() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("colors.ply");
        let text = "ply\nformat ascii 1.0\ncomment with colors\n\
                    element vertex 3\n\
                    property float x\nproperty float y\nproperty float z\n\
                    property uchar red\nproperty uchar green\nproperty uchar blue\n\
                    end_header\n\
                    0 0 0 255 0 0\n1 0 0 0 255 0\n0 1 0 0 0 255\n";
        fs::write(&path, text).unwrap();
        let cloud = load_cloud(&path, CloudFormat::Ply).unwrap();
        assert_eq!(cloud.len(), 3);
        assert_eq!(cloud[1], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn faces_after_vertices_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.ply");
        let text = "ply\nformat ascii 1.0\n\
                    element vertex 3\n\
                    property float x\nproperty float y\nproperty float z\n\
                    element face 1\n\
                    property list uchar int vertex_indices\n\
                    end_header\n\
                    0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        fs::write(&path, text).unwrap();
        let cloud = load_cloud(&path, CloudFormat::Ply).unwrap();
        assert_eq!(cloud.len(), 3);
    }

    #[test]
    fn binary_with_preceding_list_element() {
        // An "edges" element with a list property comes before vertices;
        // the loader must skip it using the per-instance counts.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tricky.ply");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(
            b"ply\nformat binary_little_endian 1.0\n\
              element edge 2\nproperty list uchar int verts\n\
              element vertex 2\n\
              property double x\nproperty double y\nproperty double z\n\
              end_header\n",
        );
        for edge in [[1i32, 2], [3, 4]] {
            bytes.push(2u8);
            for v in edge {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        for p in [[0.5f64, -0.25, 1.0], [2.0, 3.0, -4.0]] {
            for c in p {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
        }
        fs::write(&path, bytes).unwrap();
        let cloud = load_cloud(&path, CloudFormat::Ply).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud[0], Point3::new(0.5, -0.25, 1.0));
        assert_eq!(cloud[1], Point3::new(2.0, 3.0, -4.0));
    }

    #[test]
    fn big_endian_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("be.ply");
        fs::write(
            &path,
            "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n",
        )
        .unwrap();
        assert!(matches!(
            load_cloud(&path, CloudFormat::Ply),
            Err(IoError::UnsupportedFormat { .. })
        ));
    }

    #[test]
    fn truncated_binary_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.ply");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(
            b"ply\nformat binary_little_endian 1.0\nelement vertex 2\n\
              property double x\nproperty double y\nproperty double z\nend_header\n",
        );
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_cloud(&path, CloudFormat::Ply),
            Err(IoError::ParseBinary { .. })
        ));
    }
}
