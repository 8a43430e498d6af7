//! Point cloud files, JSON result documents and colored mesh export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use ply_rs::parser::Parser;
use ply_rs::ply::{DefaultElement, Property};
use serde::{Deserialize, Serialize};

use crate::boundary::{GeneralPositionReport, OffsetBoundary};
use crate::cloud::PointCloud;
use crate::distance::{CriticalFunctionSample, MuReachEstimate};
use crate::error::{CurvError, Result};
use crate::geometry::{Vec3, DEFAULT_TOLERANCE};
use crate::measures::{face_tessellation, CellId, CurvatureReport, LipschitzKernel, MeasureKind};
use crate::stability::StabilityRun;

pub const SCHEMA_VERSION: &str = "curvmeas/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudFormat {
    Xyz,
    Ply,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
            Some("xyz") | Some("txt") | Some("pts") => Ok(Self::Xyz),
            Some("ply") => Ok(Self::Ply),
            _ => Err(CurvError::InvalidParameter(format!("cannot infer the format of {}", path.display()))),
        }
    }
}

/// Parses whitespace-separated triples, one per line, with `#` comments.
/// Returns the points and the 1-based line each came from.
pub fn parse_xyz(text: &str) -> Result<(Vec<Vec3>, Vec<usize>)> {
    let mut pts = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| CurvError::Parse { location: format!("line {}", i + 1), message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 coordinates, found {}", fields.len())));
        }
        let mut p = [0.0; 3];
        for (k, f) in fields.iter().enumerate() {
            p[k] = f.parse::<f64>().map_err(|e| parse_err(format!("{f:?}: {e}")))?;
            if !p[k].is_finite() {
                return Err(parse_err(format!("non-finite coordinate {f:?}")));
            }
        }
        pts.push(Vec3::new(p[0], p[1], p[2]));
        lines.push(i + 1);
    }
    Ok((pts, lines))
}

fn coordinate(e: &DefaultElement, key: &str, index: usize) -> Result<f64> {
    let v = match e.get(key) {
        Some(Property::Float(v)) => *v as f64,
        Some(Property::Double(v)) => *v,
        Some(Property::Int(v)) => *v as f64,
        Some(Property::UInt(v)) => *v as f64,
        Some(Property::Short(v)) => *v as f64,
        Some(Property::UShort(v)) => *v as f64,
        Some(Property::Char(v)) => *v as f64,
        Some(Property::UChar(v)) => *v as f64,
        _ => {
            return Err(CurvError::Parse {
                location: format!("vertex {index}"),
                message: format!("missing scalar property {key}"),
            })
        }
    };
    if !v.is_finite() {
        return Err(CurvError::Parse { location: format!("vertex {index}"), message: format!("non-finite {key}") });
    }
    Ok(v)
}

/// Reads the `x`, `y`, `z` properties of the `vertex` element of an ascii or
/// binary PLY stream.
pub fn parse_ply<R: Read>(source: &mut R) -> Result<Vec<Vec3>> {
    let ply = Parser::<DefaultElement>::new()
        .read_ply(source)
        .map_err(|e| CurvError::Parse { location: "ply".into(), message: e.to_string() })?;
    let Some(vertices) = ply.payload.get("vertex") else {
        return Err(CurvError::Parse { location: "ply header".into(), message: "no vertex element".into() });
    };
    vertices
        .iter()
        .enumerate()
        .map(|(i, e)| Ok(Vec3::new(coordinate(e, "x", i)?, coordinate(e, "y", i)?, coordinate(e, "z", i)?)))
        .collect()
}

/// Reads a cloud, rejecting points that coincide within `tol`. The error for
/// a duplicate names the line (xyz) or vertex (ply) it was found at.
pub fn read_cloud_with_tolerance(path: &Path, format: Option<CloudFormat>, tol: f64) -> Result<PointCloud> {
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path)?,
    };
    let (pts, locate): (Vec<Vec3>, Box<dyn Fn(usize) -> String>) = match format {
        CloudFormat::Xyz => {
            let text = std::fs::read_to_string(path)?;
            let (pts, lines) = parse_xyz(&text)?;
            (pts, Box::new(move |i| format!("line {}", lines[i])))
        }
        CloudFormat::Ply => {
            let mut reader = BufReader::new(File::open(path)?);
            (parse_ply(&mut reader)?, Box::new(|i| format!("vertex {i}")))
        }
    };
    let n = pts.len();
    match PointCloud::new(pts, tol) {
        Err(CurvError::DuplicatePoint { location, first }) => {
            let index = location.trim_start_matches("point ").parse::<usize>().unwrap_or(n);
            Err(CurvError::DuplicatePoint {
                location: if index < n { locate(index) } else { location },
                first,
            })
        }
        other => other,
    }
}

pub fn read_cloud(path: &Path, format: Option<CloudFormat>) -> Result<PointCloud> {
    read_cloud_with_tolerance(path, format, DEFAULT_TOLERANCE)
}

/// Writes every coordinate with 17 significant digits.
pub fn format_xyz(points: &[Vec3]) -> String {
    let mut s = String::with_capacity(points.len() * 72);
    for p in points {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }
    s
}

pub fn write_cloud(cloud: &PointCloud, path: &Path, format: Option<CloudFormat>) -> Result<()> {
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path)?,
    };
    let mut f = File::create(path)?;
    match format {
        CloudFormat::Xyz => f.write_all(format_xyz(cloud.points()).as_bytes())?,
        CloudFormat::Ply => {
            let mut s = String::new();
            s.push_str("ply\nformat ascii 1.0\n");
            let _ = writeln!(s, "element vertex {}", cloud.len());
            s.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
            s.push_str(&format_xyz(cloud.points()));
            f.write_all(s.as_bytes())?;
        }
    }
    Ok(())
}

/// Hat kernel around a point, or the constant function 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Const1,
    Hat { center: [f64; 3], rho: f64 },
}

impl KernelSpec {
    pub fn kernel(&self) -> Result<LipschitzKernel> {
        match *self {
            Self::Const1 => Ok(LipschitzKernel::ConstantOne),
            Self::Hat { center, rho } => LipschitzKernel::hat(Vec3::from(center), rho),
        }
    }
}

impl std::str::FromStr for KernelSpec {
    type Err = CurvError;
    /// `const1` or `hat:cx,cy,cz,rho`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || CurvError::InvalidParameter(format!("kernel must be const1 or hat:cx,cy,cz,rho, got {s:?}"));
        if s == "const1" {
            return Ok(Self::Const1);
        }
        let rest = s.strip_prefix("hat:").ok_or_else(bad)?;
        let v: Vec<f64> = rest.split(',').map(|t| t.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        if v.len() != 4 || !v.iter().all(|x| x.is_finite()) || v[3] <= 0.0 {
            return Err(bad());
        }
        Ok(Self::Hat { center: [v[0], v[1], v[2]], rho: v[3] })
    }
}

/// Parameters of a run, echoed in the result document. The thread count is
/// not echoed so that documents do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub input_path: Option<PathBuf>,
    pub radius: f64,
    pub eta: f64,
    pub kernel: KernelSpec,
    pub measures: Vec<MeasureKind>,
    pub tolerance: f64,
    pub seed: u64,
    pub out_json: Option<PathBuf>,
    pub out_mesh: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CurvError::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("radius", self.radius)?;
        positive("eta", self.eta)?;
        positive("tolerance", self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub area: f64,
    pub enclosed_volume: f64,
    pub cavity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryStats {
    pub r: f64,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub total_area: f64,
    pub components: Vec<ComponentStats>,
}

impl BoundaryStats {
    pub fn of(b: &OffsetBoundary) -> Self {
        let (v, e, f) = b.cell_counts();
        Self {
            r: b.r,
            vertices: v,
            edges: e,
            faces: f,
            euler_characteristic: b.euler_characteristic(),
            total_area: b.total_area(),
            components: b
                .components
                .iter()
                .map(|c| ComponentStats {
                    vertices: c.vertices.len(),
                    edges: c.edges.len(),
                    faces: c.faces.len(),
                    euler_characteristic: c.euler_characteristic,
                    area: c.area,
                    enclosed_volume: c.enclosed_volume,
                    cavity: c.cavity,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPointRow {
    pub point: usize,
    pub mean: f64,
    pub gaussian: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general_position: Option<GeneralPositionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_function: Option<CriticalFunctionSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_reach: Option<MuReachEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measures: Vec<CurvatureReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<PerPointRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityRun>,
}

impl ResultDocument {
    pub fn new(config: RunConfig) -> Self {
        Self {
            schema: SCHEMA_VERSION.into(),
            config,
            general_position: None,
            critical_function: None,
            mu_reach: None,
            boundary: None,
            measures: Vec::new(),
            per_point: None,
            stability: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema != SCHEMA_VERSION {
            return Err(CurvError::Parse {
                location: "schema".into(),
                message: format!("expected {SCHEMA_VERSION}, found {}", doc.schema),
            });
        }
        Ok(doc)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Values used to color a mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValues {
    /// One value per cloud point; each face takes the value of its sphere.
    PerPoint(Vec<f64>),
    /// One value per face.
    PerFace(Vec<f64>),
}

impl CellValues {
    /// Face values of a report; faces the report did not visit get 0.
    pub fn from_report(b: &OffsetBoundary, report: &CurvatureReport, kind: MeasureKind) -> Self {
        let mut v = vec![0.0; b.faces.len()];
        for c in &report.per_cell {
            if let CellId::Face(i) = c.cell {
                v[i] = match kind {
                    MeasureKind::PhiH => c.contribution.phi_h,
                    MeasureKind::PhiG => c.contribution.phi_g,
                    MeasureKind::HBar => c.contribution.h_bar.trace(),
                    MeasureKind::HTilde => c.contribution.h_tilde.trace(),
                };
            }
        }
        Self::PerFace(v)
    }
}

/// Diverging map: blue at `-bound`, white at 0, red at `bound`.
pub fn diverging_color(v: f64, bound: f64) -> [u8; 3] {
    let t = if bound > 0.0 { (v / bound).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |x: f64| (255.0 * (1.0 - x.abs())).round() as u8;
    if t >= 0.0 {
        [255, fade(t), fade(t)]
    } else {
        [fade(t), fade(t), 255]
    }
}

/// Tessellates the faces into triangles of diameter `< eta` and writes an
/// ascii PLY with one color per triangle.
pub fn export_colored_mesh(b: &OffsetBoundary, values: &CellValues, eta: f64, path: &Path) -> Result<()> {
    std::fs::write(path, colored_mesh_ply(b, values, eta)?)?;
    Ok(())
}

pub fn colored_mesh_ply(b: &OffsetBoundary, values: &CellValues, eta: f64) -> Result<String> {
    if b.is_empty() {
        return Err(CurvError::EmptyBoundary);
    }
    let face_value = |i: usize| -> Result<f64> {
        let v = match values {
            CellValues::PerPoint(v) => v.get(b.faces[i].polygon.sphere_id),
            CellValues::PerFace(v) => v.get(i),
        };
        v.copied().ok_or_else(|| CurvError::InvalidParameter(format!("no value for face {i}")))
    };
    let face_values: Vec<f64> = (0..b.faces.len()).map(face_value).collect::<Result<_>>()?;
    let bound = face_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut faces: Vec<([usize; 3], [u8; 3])> = Vec::new();
    for (i, face) in b.faces.iter().enumerate() {
        let color = diverging_color(face_values[i], bound);
        for tri in face_tessellation(&face.polygon, eta)? {
            let ids = tri.map(|p| {
                *index.entry([p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]).or_insert_with(|| {
                    vertices.push(p);
                    vertices.len() - 1
                })
            });
            faces.push((ids, color));
        }
    }
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "comment colormap diverging blue-white-red min {:.17e} max {:.17e}", -bound, bound);
    let _ = writeln!(s, "element vertex {}", vertices.len());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    let _ = writeln!(s, "element face {}", faces.len());
    s.push_str("property list uchar int vertex_indices\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n");
    s.push_str("end_header\n");
    s.push_str(&format_xyz(&vertices));
    for (ids, c) in &faces {
        let _ = writeln!(s, "3 {} {} {} {} {} {}", ids[0], ids[1], ids[2], c[0], c[1], c[2]);
    }
    Ok(s)
}
