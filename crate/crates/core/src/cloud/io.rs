//! XYZ and PLY readers, and a PLY writer.
//!
//! PLY support covers `ascii 1.0` and `binary_little_endian 1.0`. Only the
//! `vertex` element is kept; scalar vertex properties other than `x y z` are
//! returned as attribute columns, every other element is skipped.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Point, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudFormat {
    Xyz,
    Ply,
}

impl CloudFormat {
    /// Guess from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path
            .extension()?
            .to_str()?
            .to_ascii_lowercase()
            .as_str()
        {
            "xyz" | "txt" => Some(CloudFormat::Xyz),
            "ply" => Some(CloudFormat::Ply),
            _ => None,
        }
    }
}

impl std::str::FromStr for CloudFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "xyz" => Ok(CloudFormat::Xyz),
            "ply" => Ok(CloudFormat::Ply),
            other => Err(format!("unknown cloud format `{other}` (expected xyz or ply)")),
        }
    }
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    match format {
        CloudFormat::Xyz => read_xyz(path),
        CloudFormat::Ply => read_ply(path),
    }
}

pub fn read_xyz(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_xyz(&text)
}

pub(crate) fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = || format!("line {}", lineno + 1);
        let mut fields = line.split_whitespace();
        let mut p = [0.0; 3];
        for (k, c) in p.iter_mut().enumerate() {
            let tok = fields
                .next()
                .ok_or_else(|| Error::parse(loc(), format!("expected 3 coordinates, found {k}")))?;
            *c = tok
                .parse::<f64>()
                .map_err(|_| Error::parse(loc(), format!("invalid number `{tok}`")))?;
            if !c.is_finite() {
                return Err(Error::parse(loc(), "non-finite coordinate"));
            }
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    PointCloud::new(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => b[0] as i8 as f64,
            ScalarType::U8 => b[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    /// Byte offset of the body.
    body: usize,
    /// Number of header lines, for ascii line numbering.
    lines: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut lineno = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse("header", "missing end_header"))?;
        let raw = &bytes[pos..pos + end];
        pos += end + 1;
        lineno += 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| Error::parse(format!("line {lineno}"), "header is not utf-8"))?
            .trim();
        let loc = format!("line {lineno}");
        let mut words = line.split_whitespace();
        let Some(key) = words.next() else { continue };
        if lineno == 1 {
            if key != "ply" {
                return Err(Error::parse(loc, "missing `ply` magic"));
            }
            continue;
        }
        match key {
            "format" => {
                encoding = Some(match words.next() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLittleEndian,
                    Some(other) => {
                        return Err(Error::parse(loc, format!("unsupported format `{other}`")))
                    }
                    None => return Err(Error::parse(loc, "missing format")),
                });
            }
            "comment" | "obj_info" => {}
            "element" => {
                let name = words
                    .next()
                    .ok_or_else(|| Error::parse(&loc, "element without name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::parse(&loc, "element without count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(&loc, "property before element"))?;
                let ty = words
                    .next()
                    .ok_or_else(|| Error::parse(&loc, "property without type"))?;
                let prop = if ty == "list" {
                    let count = words.next().and_then(ScalarType::parse);
                    let item = words.next().and_then(ScalarType::parse);
                    match (count, item) {
                        (Some(count), Some(item)) => Property::List { count, item },
                        _ => return Err(Error::parse(&loc, "bad list property")),
                    }
                } else {
                    let ty = ScalarType::parse(ty)
                        .ok_or_else(|| Error::parse(&loc, format!("unknown type `{ty}`")))?;
                    let name = words
                        .next()
                        .ok_or_else(|| Error::parse(&loc, "property without name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                element.properties.push(prop);
            }
            "end_header" => break,
            other => return Err(Error::parse(loc, format!("unexpected header keyword `{other}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::parse("header", "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        body: pos,
        lines: lineno,
    })
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes)
}

pub(crate) fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse("header", "no vertex element"))?;
    let vertex = &header.elements[vertex_pos];
    let scalar_names: Vec<Option<&str>> = vertex
        .properties
        .iter()
        .map(|p| match p {
            Property::Scalar { name, .. } => Some(name.as_str()),
            Property::List { .. } => None,
        })
        .collect();
    let column = |want: &str| scalar_names.iter().position(|n| *n == Some(want));
    let (Some(ix), Some(iy), Some(iz)) = (column("x"), column("y"), column("z")) else {
        return Err(Error::parse("header", "vertex element lacks x/y/z"));
    };
    if vertex.count == 0 {
        return Err(Error::EmptyCloud);
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(vertex.count);
    match header.encoding {
        PlyEncoding::Ascii => {
            let body = std::str::from_utf8(&bytes[header.body..])
                .map_err(|_| Error::parse("body", "ascii body is not utf-8"))?;
            let mut lines = body
                .lines()
                .enumerate()
                .map(|(i, l)| (i + header.lines + 1, l))
                .filter(|(_, l)| !l.trim().is_empty());
            for (ei, element) in header.elements.iter().enumerate() {
                for _ in 0..element.count {
                    let (lineno, line) = lines.next().ok_or_else(|| {
                        Error::parse("end of file", format!("truncated `{}` element", element.name))
                    })?;
                    if ei != vertex_pos {
                        continue;
                    }
                    rows.push(parse_ascii_vertex(line, element, lineno)?);
                }
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            let mut pos = header.body;
            for (ei, element) in header.elements.iter().enumerate() {
                for record in 0..element.count {
                    let loc = || format!("{} element {}", element.name, record + 1);
                    let mut row = Vec::new();
                    for prop in &element.properties {
                        match prop {
                            Property::Scalar { ty, .. } => {
                                let b = bytes
                                    .get(pos..pos + ty.size())
                                    .ok_or_else(|| Error::parse(loc(), "truncated record"))?;
                                row.push(ty.read_le(b));
                                pos += ty.size();
                            }
                            Property::List { count, item } => {
                                let b = bytes
                                    .get(pos..pos + count.size())
                                    .ok_or_else(|| Error::parse(loc(), "truncated list"))?;
                                let n = count.read_le(b);
                                if !(n >= 0.0) {
                                    return Err(Error::parse(loc(), "negative list length"));
                                }
                                pos += count.size() + n as usize * item.size();
                                row.push(f64::NAN);
                            }
                        }
                    }
                    if pos > bytes.len() {
                        return Err(Error::parse(loc(), "truncated record"));
                    }
                    if ei == vertex_pos {
                        rows.push(row);
                    }
                }
            }
        }
    }

    let mut points: Vec<Point> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let p = [row[ix], row[iy], row[iz]];
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::parse(
                format!("vertex element {}", i + 1),
                "non-finite coordinate",
            ));
        }
        points.push(p);
    }
    let mut cloud = PointCloud::new(points)?;
    for (k, name) in scalar_names.iter().enumerate() {
        match name {
            Some(n) if k != ix && k != iy && k != iz => {
                let values = rows.iter().map(|r| r[k]).collect();
                cloud = cloud.with_attribute(*n, values)?;
            }
            _ => {}
        }
    }
    Ok(cloud)
}

fn parse_ascii_vertex(line: &str, element: &Element, lineno: usize) -> Result<Vec<f64>> {
    let loc = || format!("line {lineno}");
    let mut toks = line.split_whitespace();
    let mut row = Vec::with_capacity(element.properties.len());
    for prop in &element.properties {
        let mut next = || -> Result<f64> {
            let t = toks
                .next()
                .ok_or_else(|| Error::parse(loc(), "too few values"))?;
            t.parse::<f64>()
                .map_err(|_| Error::parse(loc(), format!("invalid number `{t}`")))
        };
        match prop {
            Property::Scalar { .. } => row.push(next()?),
            Property::List { .. } => {
                let n = next()?;
                for _ in 0..n as usize {
                    next()?;
                }
                row.push(f64::NAN);
            }
        }
    }
    Ok(row)
}

/// An extra per-vertex column to write after `x y z`.
#[derive(Debug, Clone, Copy)]
pub enum PlyColumn<'a> {
    Int(&'a str, &'a [i32]),
    Double(&'a str, &'a [f64]),
}

impl PlyColumn<'_> {
    fn name(&self) -> &str {
        match self {
            PlyColumn::Int(n, _) | PlyColumn::Double(n, _) => n,
        }
    }

    fn len(&self) -> usize {
        match self {
            PlyColumn::Int(_, v) => v.len(),
            PlyColumn::Double(_, v) => v.len(),
        }
    }
}

/// Write points as double-precision `x y z` plus `columns`.
pub fn write_ply(
    path: impl AsRef<Path>,
    points: &[Point],
    columns: &[PlyColumn<'_>],
    encoding: PlyEncoding,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_ply(points, columns, encoding)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_ply(
    points: &[Point],
    columns: &[PlyColumn<'_>],
    encoding: PlyEncoding,
) -> Result<Vec<u8>> {
    for c in columns {
        if c.len() != points.len() {
            return Err(Error::InvalidParameter(format!(
                "column `{}` has {} values for {} points",
                c.name(),
                c.len(),
                points.len()
            )));
        }
    }
    let mut header = String::from("ply\n");
    header.push_str(match encoding {
        PlyEncoding::Ascii => "format ascii 1.0\n",
        PlyEncoding::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    let _ = writeln!(header, "element vertex {}", points.len());
    header.push_str("property double x\nproperty double y\nproperty double z\n");
    for c in columns {
        let ty = match c {
            PlyColumn::Int(..) => "int",
            PlyColumn::Double(..) => "double",
        };
        let _ = writeln!(header, "property {ty} {}", c.name());
    }
    header.push_str("end_header\n");

    let mut out = header.into_bytes();
    match encoding {
        PlyEncoding::Ascii => {
            let mut line = String::new();
            for (i, p) in points.iter().enumerate() {
                line.clear();
                let _ = write!(line, "{} {} {}", p[0], p[1], p[2]);
                for c in columns {
                    let _ = match c {
                        PlyColumn::Int(_, v) => write!(line, " {}", v[i]),
                        PlyColumn::Double(_, v) => write!(line, " {}", v[i]),
                    };
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for (i, p) in points.iter().enumerate() {
                for c in p {
                    out.extend_from_slice(&c.to_le_bytes());
                }
                for c in columns {
                    match c {
                        PlyColumn::Int(_, v) => out.extend_from_slice(&v[i].to_le_bytes()),
                        PlyColumn::Double(_, v) => out.extend_from_slice(&v[i].to_le_bytes()),
                    }
                }
            }
        }
    }
    Ok(out)
}
