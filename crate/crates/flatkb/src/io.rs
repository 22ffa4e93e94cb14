//! File formats: text polygon meshes, the JSON mesh model, CSV tables, and
//! angle literals such as `3pi/2`.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cw_complex::{CWMesh, MeshError, Segment};
use crate::frames::Point3;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = format!("{x:.16e}");
    let (mant, exp) = e.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mant.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Five decimals, never `-0.00000`.
pub fn fmt5(x: f64) -> String {
    let s = format!("{x:.5}");
    if s == "-0.00000" {
        "0.00000".into()
    } else {
        s
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let err = |source| IoError::File { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(err)?;
    f.write_all(contents).map_err(err)?;
    f.sync_all().map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

pub fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

/// Text polygon mesh, 1-based face indices. Unused vertices are kept.
pub fn mesh_to_obj(mesh: &CWMesh, header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        out.push_str(&format!("# {h}\n"));
    }
    for p in mesh.vertices() {
        out.push_str(&format!("v {} {} {}\n", fmt_g17(p.x), fmt_g17(p.y), fmt_g17(p.z)));
    }
    for f in mesh.faces() {
        out.push('f');
        for v in f {
            out.push_str(&format!(" {}", v + 1));
        }
        out.push('\n');
    }
    out
}

/// Intersection segments as `v`/`l` records, two fresh vertices per segment.
pub fn segments_to_obj(segs: &[Segment], header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        out.push_str(&format!("# {h}\n"));
    }
    for s in segs {
        for p in [s.a, s.b] {
            out.push_str(&format!("v {} {} {}\n", fmt_g17(p.x), fmt_g17(p.y), fmt_g17(p.z)));
        }
    }
    for k in 0..segs.len() {
        out.push_str(&format!("l {} {}\n", 2 * k + 1, 2 * k + 2));
    }
    out
}

/// Reads `v` and `f` records; `vt`, `vn`, `l`, groups and comments are skipped.
/// Face entries may be `i`, `i/t`, `i//n` or `i/t/n`; negative indices are relative.
pub fn parse_obj(text: &str) -> Result<CWMesh, IoError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let content = line.split('#').next().unwrap_or("");
        let mut fields = Vec::new();
        let mut col = 0;
        for tok in content.split(|c: char| c.is_whitespace()) {
            if !tok.is_empty() {
                fields.push((col + 1, tok));
            }
            col += tok.chars().count() + 1;
        }
        let Some(&(_, kw)) = fields.first() else { continue };
        let perr = |column: usize, message: String| IoError::Parse { line: line_no, column, message };
        match kw {
            "v" => {
                if fields.len() < 4 {
                    return Err(perr(1, "vertex needs three coordinates".into()));
                }
                let mut c = [0.0f64; 3];
                for k in 0..3 {
                    let (column, tok) = fields[k + 1];
                    c[k] = tok.parse().map_err(|_| perr(column, format!("invalid number '{tok}'")))?;
                    if !c[k].is_finite() {
                        return Err(perr(column, format!("non-finite coordinate '{tok}'")));
                    }
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            "f" => {
                if fields.len() < 4 {
                    return Err(perr(1, "face needs at least three vertices".into()));
                }
                let mut face = Vec::with_capacity(fields.len() - 1);
                for &(column, tok) in &fields[1..] {
                    let idx = tok.split('/').next().unwrap_or("");
                    let i: i64 = idx.parse().map_err(|_| perr(column, format!("invalid index '{tok}'")))?;
                    let n = vertices.len() as i64;
                    let v = if i > 0 { i - 1 } else { n + i };
                    if i == 0 || v < 0 || v >= n {
                        return Err(perr(column, format!("index {i} out of range 1..={n}")));
                    }
                    face.push(v as usize);
                }
                faces.push(face);
            }
            "vt" | "vn" | "vp" | "l" | "g" | "o" | "s" | "usemtl" | "mtllib" => {}
            other => return Err(perr(fields[0].0, format!("unknown record '{other}'"))),
        }
    }
    Ok(CWMesh::new(vertices, faces)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub tolerances: serde_json::Value,
}

impl Provenance {
    pub fn new(command: &str, parameters: serde_json::Value, tolerances: serde_json::Value) -> Provenance {
        Provenance {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters,
            tolerances,
        }
    }
}

/// Canonical JSON dataset: coordinates, 1-based faces, optional labels and
/// intersection segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFileModel {
    pub provenance: Provenance,
    pub vertex_count: usize,
    pub face_count: usize,
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intersections: Option<Vec<[[f64; 3]; 2]>>,
}

impl MeshFileModel {
    pub fn from_mesh(mesh: &CWMesh, provenance: Provenance, segments: Option<&[Segment]>) -> MeshFileModel {
        MeshFileModel {
            provenance,
            vertex_count: mesh.num_vertices(),
            face_count: mesh.num_faces(),
            vertices: mesh.vertices().iter().map(|p| [p.x, p.y, p.z]).collect(),
            faces: mesh.faces().iter().map(|f| f.iter().map(|v| v + 1).collect()).collect(),
            labels: mesh.labels().to_vec(),
            intersections: segments.map(|s| s.iter().map(|s| [[s.a.x, s.a.y, s.a.z], [s.b.x, s.b.y, s.b.z]]).collect()),
        }
    }

    pub fn to_mesh(&self) -> Result<CWMesh, IoError> {
        if self.vertex_count != self.vertices.len() || self.face_count != self.faces.len() {
            return Err(MeshError::InvalidComplex("declared counts disagree with the lists".into()).into());
        }
        let n = self.vertices.len();
        let mut faces = Vec::with_capacity(self.faces.len());
        for (fi, f) in self.faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v == 0 || v > n) {
                return Err(MeshError::InvalidComplex(format!("face {fi} index {bad} out of range 1..={n}")).into());
            }
            faces.push(f.iter().map(|v| v - 1).collect());
        }
        let vertices = self.vertices.iter().map(|c| Point3::new(c[0], c[1], c[2])).collect();
        let mesh = if self.labels.is_empty() {
            CWMesh::new(vertices, faces)?
        } else {
            CWMesh::with_labels(vertices, self.labels.clone(), faces)?
        };
        Ok(mesh)
    }
}

/// JSON decode errors carry their own line and column.
pub fn parse_json_model(text: &str) -> Result<MeshFileModel, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse { line: e.line(), column: e.column(), message: e.to_string() })
}

/// Reads a mesh from `.json` (model) or any other extension (polygon text).
pub fn read_mesh(path: &Path) -> Result<CWMesh, IoError> {
    let text = read_file(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_json_model(&text)?.to_mesh()
    } else {
        parse_obj(&text)
    }
}

/// CSV text from a header and string rows.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, IoError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::File { path: PathBuf::from("<csv>"), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses a CSV table into its header and rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), IoError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot read angle '{0}'")]
pub struct AngleError(pub String);

/// Reads radians, accepting `pi` multiples such as `3pi/2`, `-pi/3`,
/// `2*pi/3`, `1.5pi` or `π/4` alongside plain numbers. A rational multiple
/// `p/q` of pi is evaluated as `(p * pi) / q`.
pub fn parse_angle(s: &str) -> Result<f64, AngleError> {
    let err = || AngleError(s.to_string());
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase().replace('π', "pi");
    let Some(at) = t.find("pi") else {
        let v: f64 = t.parse().map_err(|_| err())?;
        return if v.is_finite() { Ok(v) } else { Err(err()) };
    };
    let (coef, rest) = (&t[..at], &t[at + 2..]);
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| err())?,
    };
    let den = match rest {
        "" => 1.0,
        r => {
            let d = r.strip_prefix('/').ok_or_else(err)?;
            let d: f64 = d.parse().map_err(|_| err())?;
            if d == 0.0 {
                return Err(err());
            }
            d
        }
    };
    let v = c * PI / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err())
    }
}
