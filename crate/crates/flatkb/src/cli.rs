//! The `flatkb` command line: build, tables, verify, sweep.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::assembly::{
    build_flat_klein, build_flat_torus, sweep_parameters, Assembly, AssemblyError, AssemblyVerdict, KleinParams, SweepBase,
    TorusParams, MERGE_TOL, SEAM_TOL,
};
use crate::cw_complex::{
    certify_local_injectivity, corner_angle_sum, encloses_angle, merge_coplanar, self_intersections, CWMesh, Segment,
    VertexVerdict, ANGLE_CERT_WIDTH, MIN_SEGMENT,
};
use crate::frames::{complementary_angle, make_tube_frame, AxisLabel, FrameKind, SHADOW_REL};
use crate::interval::Interval;
use crate::io::{fmt5, mesh_to_obj, parse_angle, read_mesh, segments_to_obj, write_atomic, IoError, MeshFileModel, Provenance};
use crate::tables::{compute_tables, tables_csv, VeeParams};
use crate::tube_joint::{
    build_tube_joint, generate_certified, generate_parameters, straight_joint, verify_flat, FlatVerdict, JointError, TubeJoint,
};

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Parameter = 2,
    Construction = 3,
    Verification = 4,
    Indeterminate = 5,
}

impl Exit {
    pub fn category(self) -> &'static str {
        match self {
            Exit::Ok => "OK",
            Exit::Parameter => "PARAMETER_ERROR",
            Exit::Construction => "CONSTRUCTION_ERROR",
            Exit::Verification => "VERIFICATION_FAILURE",
            Exit::Indeterminate => "INDETERMINATE",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.exit.category(), self.message)
    }
}

fn param(msg: impl Into<String>) -> Failure {
    Failure { exit: Exit::Parameter, message: msg.into() }
}

fn construction(e: impl fmt::Display) -> Failure {
    Failure { exit: Exit::Construction, message: e.to_string() }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Failure {
        let exit = match e {
            IoError::Parse { .. } | IoError::Json(_) | IoError::Csv(_) => Exit::Parameter,
            IoError::Mesh(_) => Exit::Construction,
            IoError::File { .. } => Exit::Parameter,
        };
        let message = match &e {
            IoError::Parse { .. } => format!("PARSE_ERROR: {e}"),
            IoError::Mesh(_) => format!("INVALID_COMPLEX: {e}"),
            _ => e.to_string(),
        };
        Failure { exit, message }
    }
}

impl From<AssemblyError> for Failure {
    fn from(e: AssemblyError) -> Failure {
        match e {
            AssemblyError::Parameter(m) => param(m),
            other => construction(other),
        }
    }
}

impl From<JointError> for Failure {
    fn from(e: JointError) -> Failure {
        construction(e)
    }
}

fn angle(s: &str) -> Result<f64, String> {
    parse_angle(s).map_err(|e| e.to_string())
}

fn length(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not a positive length"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "flatkb", version, about = "Flat Klein bottle and flat tori from tube joints, with certified checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a Klein bottle, a torus or a single tube joint and verify it.
    Build(BuildArgs),
    /// Write the parameter and cofactor listings of a vee joint as CSV.
    Tables(TablesArgs),
    /// Check angle sums and local injectivity of a mesh file.
    Verify(VerifyArgs),
    /// Tabulate which certificate fails first over a grid of seeds.
    Sweep(SweepArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildKind {
    Klein,
    Torus,
    Joint,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Vee,
    Bend,
    Straight,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Standard,
    Inverted,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Geometry {
    #[arg(long)]
    pub n: Option<usize>,
    /// Straight-joint length (Klein), or the torus frame length.
    #[arg(long, value_parser = length)]
    pub l0: Option<f64>,
    /// Vee-joint length (Klein), or the single-joint frame length.
    #[arg(long, value_parser = length)]
    pub l1: Option<f64>,
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    pub psi: Option<f64>,
    #[arg(long, value_parser = length)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = length)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = length)]
    pub alpha0: Option<f64>,
    #[arg(long, value_parser = length)]
    pub gamma0: Option<f64>,
    /// Anchor index of the generation.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    pub kind: BuildKind,
    /// Frame type for `build joint`.
    #[arg(long = "kind", value_enum, default_value = "vee")]
    pub joint_kind: JointKind,
    /// Star labelling for vee and bend joints.
    #[arg(long, value_enum)]
    pub label: Option<Label>,
    #[command(flatten)]
    pub geometry: Geometry,
    /// Also enclose the generated parameters in intervals and record them.
    #[arg(long)]
    pub certified: bool,
    /// Write the mesh with coplanar faces merged to `--out`, and the unmerged one to `<stem>.glued.<ext>`.
    #[arg(long)]
    pub merge: bool,
    /// Mesh output; `.json` selects the JSON model, anything else polygon text.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Self-intersection segments as polygon-text line records.
    #[arg(long)]
    pub intersections: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TablesArgs {
    #[command(flatten)]
    pub geometry: Geometry,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Klein,
    Torus,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(value_enum, default_value = "klein")]
    pub kind: SweepKind,
    #[command(flatten)]
    pub geometry: Geometry,
    /// Comma-separated alpha seeds (the vee seed for the Klein bottle).
    #[arg(long, value_parser = length, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, value_parser = length, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn tolerances() -> serde_json::Value {
    json!({
        "seam": SEAM_TOL,
        "merge_radians": MERGE_TOL,
        "shadow_relative": SHADOW_REL,
        "angle_certificate_width": ANGLE_CERT_WIDTH,
        "min_segment": MIN_SEGMENT,
    })
}

fn reject(kind: &str, given: &[(&str, bool)]) -> Result<(), Failure> {
    match given.iter().find(|g| g.1) {
        Some((name, _)) => Err(param(format!("--{name} does not apply to {kind}"))),
        None => Ok(()),
    }
}

fn check_n(n: usize, min: usize) -> Result<(), Failure> {
    if n < min {
        Err(param(format!("--n must be at least {min}, got {n}")))
    } else {
        Ok(())
    }
}

fn check_star_angle(name: &str, n: usize, a: f64, lo: f64) -> Result<(), Failure> {
    let hi = complementary_angle(n, 0.0);
    if a > lo && a < hi {
        Ok(())
    } else {
        Err(param(format!("--{name} = {a} outside ({lo}, {hi}) for n = {n}")))
    }
}

pub fn klein_params(g: &Geometry) -> Result<KleinParams, Failure> {
    reject("klein", &[("theta", g.theta.is_some()), ("phi", g.phi.is_some()), ("k", g.k.is_some())])?;
    let d = KleinParams::default();
    let p = KleinParams {
        n: g.n.unwrap_or(d.n),
        l0: g.l0.unwrap_or(d.l0),
        l1: g.l1.unwrap_or(d.l1),
        psi: g.psi.unwrap_or(d.psi),
        alpha1: g.alpha.unwrap_or(d.alpha1),
        gamma1: g.gamma.unwrap_or(d.gamma1),
        alpha0: g.alpha0.unwrap_or(d.alpha0),
        gamma0: g.gamma0.unwrap_or(d.gamma0),
    };
    check_n(p.n, 4)?;
    if !p.n.is_multiple_of(2) {
        return Err(param(format!("--n must be even for klein, got {}", p.n)));
    }
    check_star_angle("psi", p.n, p.psi, PI)?;
    Ok(p)
}

pub fn torus_params(g: &Geometry) -> Result<TorusParams, Failure> {
    reject(
        "torus",
        &[
            ("theta", g.theta.is_some()),
            ("psi", g.psi.is_some()),
            ("l1", g.l1.is_some()),
            ("k", g.k.is_some()),
            ("alpha0", g.alpha0.is_some()),
            ("gamma0", g.gamma0.is_some()),
        ],
    )?;
    let d = TorusParams::default();
    let p = TorusParams {
        n: g.n.unwrap_or(d.n),
        l: g.l0.unwrap_or(d.l),
        phi: g.phi.unwrap_or(d.phi),
        alpha: g.alpha.unwrap_or(d.alpha),
        gamma: g.gamma.unwrap_or(d.gamma),
    };
    check_n(p.n, 3)?;
    check_star_angle("phi", p.n, p.phi, PI)?;
    Ok(p)
}

/// Resolved single-joint request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointRequest {
    pub kind: JointKind,
    pub label: Label,
    pub n: usize,
    pub l: f64,
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
}

pub fn joint_request(kind: JointKind, label: Option<Label>, g: &Geometry) -> Result<JointRequest, Failure> {
    reject("joint", &[("l0", g.l0.is_some()), ("alpha0", g.alpha0.is_some()), ("gamma0", g.gamma0.is_some())])?;
    let r = match kind {
        JointKind::Vee | JointKind::Bend => {
            let d = VeeParams::default();
            JointRequest {
                kind,
                label: label.unwrap_or(Label::Inverted),
                n: g.n.unwrap_or(d.n),
                l: g.l1.unwrap_or(d.l),
                theta: g.theta.unwrap_or(d.theta),
                phi: g.phi.unwrap_or(d.phi),
                psi: g.psi.unwrap_or(d.psi),
                k: g.k.unwrap_or(d.k),
                alpha: g.alpha.unwrap_or(d.alpha),
                gamma: g.gamma.unwrap_or(d.gamma),
            }
        }
        JointKind::Straight => {
            reject("straight joints", &[("theta", g.theta.is_some()), ("psi", g.psi.is_some()), ("k", g.k.is_some())])?;
            if label.is_some() {
                return Err(param("--label does not apply to straight joints"));
            }
            let d = TorusParams::default();
            JointRequest {
                kind,
                label: Label::Standard,
                n: g.n.unwrap_or(d.n),
                l: g.l1.unwrap_or(d.l),
                theta: 0.0,
                phi: g.phi.unwrap_or(d.phi),
                psi: PI,
                k: 0,
                alpha: g.alpha.unwrap_or(d.alpha),
                gamma: g.gamma.unwrap_or(d.gamma),
            }
        }
    };
    check_n(r.n, 2)?;
    if !(0.0..=PI).contains(&r.theta) {
        return Err(param(format!("--theta = {} outside [0, pi]", r.theta)));
    }
    if r.k >= 2 * r.n {
        return Err(param(format!("--k = {} must be below 2n = {}", r.k, 2 * r.n)));
    }
    let lo = if kind == JointKind::Straight { PI } else { 0.0 };
    check_star_angle("phi", r.n, r.phi, lo)?;
    if kind != JointKind::Straight {
        check_star_angle("psi", r.n, r.psi, 0.0)?;
    }
    Ok(r)
}

pub fn build_joint(r: &JointRequest) -> Result<TubeJoint, Failure> {
    let label = match r.label {
        Label::Standard => AxisLabel::Standard,
        Label::Inverted => AxisLabel::Inverted,
    };
    let fk = match r.kind {
        JointKind::Bend => FrameKind::Bend,
        _ => FrameKind::Vee,
    };
    let tf = make_tube_frame(fk, r.n, r.l, r.theta, r.phi, r.psi, label).map_err(construction)?;
    if r.kind == JointKind::Straight {
        return Ok(straight_joint(&tf, r.alpha, r.gamma)?);
    }
    let jp = generate_parameters(&tf, r.k, r.alpha, r.gamma)?;
    Ok(build_tube_joint(&tf, &jp)?)
}

fn exit_for_flat(v: FlatVerdict) -> Exit {
    match v {
        FlatVerdict::Flat => Exit::Ok,
        FlatVerdict::NotFlat => Exit::Verification,
        FlatVerdict::Indeterminate => Exit::Indeterminate,
    }
}

fn write_mesh(path: &Path, mesh: &CWMesh, prov: Provenance, segs: Option<&[Segment]>) -> Result<(), Failure> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let bytes = if is_json {
        let model = MeshFileModel::from_mesh(mesh, prov, segs);
        serde_json::to_string_pretty(&model).map_err(IoError::from)? + "\n"
    } else {
        let header = vec![
            format!("{} {} {}", prov.tool, prov.version, prov.command),
            format!("parameters {}", prov.parameters),
            format!("{} vertices, {} faces", mesh.num_vertices(), mesh.num_faces()),
        ];
        mesh_to_obj(mesh, &header)
    };
    Ok(write_atomic(path, bytes.as_bytes())?)
}

/// `a.obj` next to `path = a.obj` becomes `a.glued.obj`.
pub fn glued_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.glued.{}", ext.to_string_lossy()),
        None => format!("{stem}.glued"),
    };
    path.with_file_name(name)
}

// With --merge the merged mesh takes `path` and the unmerged one moves aside.
fn write_meshes(path: &Path, merge: bool, glued: &CWMesh, merged: &CWMesh, prov: &Provenance) -> Result<(), Failure> {
    if merge {
        write_mesh(path, merged, prov.clone(), None)?;
        write_mesh(&glued_path(path), glued, prov.clone(), None)
    } else {
        write_mesh(path, glued, prov.clone(), None)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(value).map_err(IoError::from)? + "\n";
    Ok(write_atomic(path, s.as_bytes())?)
}

/// Output of one command: text for standard output and the exit status.
pub struct Outcome {
    pub stdout: String,
    pub exit: Exit,
}

fn cmd_build(a: &BuildArgs) -> Result<Outcome, Failure> {
    match a.kind {
        BuildKind::Klein => {
            if a.label.is_some() {
                return Err(param("--label applies to joints only"));
            }
            let p = klein_params(&a.geometry)?;
            let asm = build_flat_klein(&p, None, true)?;
            finish_assembly(a, "build klein", serde_json::to_value(p).expect("plain data"), asm, false)
        }
        BuildKind::Torus => {
            if a.label.is_some() {
                return Err(param("--label applies to joints only"));
            }
            let p = torus_params(&a.geometry)?;
            let asm = build_flat_torus(&p, None, true)?;
            finish_assembly(a, "build torus", serde_json::to_value(p).expect("plain data"), asm, true)
        }
        BuildKind::Joint => cmd_build_joint(a),
    }
}

fn finish_assembly(
    a: &BuildArgs,
    command: &str,
    params: serde_json::Value,
    asm: Assembly,
    embedded: bool,
) -> Result<Outcome, Failure> {
    let r = &asm.report;
    let mut exit = match r.verdict {
        AssemblyVerdict::IsometricImmersion => Exit::Ok,
        AssemblyVerdict::NotImmersion => Exit::Verification,
        AssemblyVerdict::Indeterminate => Exit::Indeterminate,
    };
    if embedded && exit == Exit::Ok && r.embedded != Some(true) {
        exit = Exit::Verification;
    }
    let prov = Provenance::new(command, params, tolerances());
    let certified = if a.certified {
        let c: Result<Vec<_>, JointError> =
            asm.glued.joints.iter().map(|j| generate_certified(&j.frame, j.params.k, j.params.seed.0, j.params.seed.1)).collect();
        Some(c?)
    } else {
        None
    };
    if let Some(path) = &a.out {
        write_meshes(path, a.merge, &asm.glued.mesh, &asm.merged, &prov)?;
    }
    if let Some(path) = &a.intersections {
        write_atomic(path, segments_to_obj(&asm.segments, &[format!("{} segments", asm.segments.len())]).as_bytes())?;
    }
    let requested = if embedded { "EMBEDDED" } else { "ISOMETRIC_IMMERSION" };
    if let Some(path) = &a.report {
        let doc = json!({
            "provenance": prov,
            "requested": requested,
            "status": exit.category(),
            "certified_parameters": certified,
            "report": r,
        });
        write_json(path, &doc)?;
    }
    let seg = r.intersections.as_ref();
    let mut s = String::new();
    s.push_str(&format!("verdict: {}\n", serde_json::to_value(r.verdict).expect("enum")).replace('"', ""));
    s.push_str(&format!("flat: {}\n", format!("{:?}", r.flat).to_uppercase()));
    s.push_str(&format!("injectivity: {}\n", serde_json::to_value(r.injectivity_verdict).expect("enum")).replace('"', ""));
    s.push_str(&format!(
        "topology: {} (euler characteristic {}, {}, {} reversing seams)\n",
        serde_json::to_value(r.topology.classification).expect("enum").as_str().unwrap_or(""),
        r.topology.euler_characteristic,
        if r.topology.orientable { "orientable" } else { "non-orientable" },
        r.reversing_seams
    ));
    s.push_str(&format!("glued mesh: {} vertices, {} faces\n", r.glued.vertices, r.glued.faces));
    s.push_str(&format!("merged mesh: {} vertices, {} faces\n", r.merged.vertices, r.merged.faces));
    if let Some(i) = seg {
        s.push_str(&format!("self-intersection segments: {} (total length {})\n", i.segments, fmt5(i.total_length)));
        if let Some(d) = i.min_endpoint_vertex_distance {
            s.push_str(&format!("nearest segment endpoint to a vertex: {}\n", fmt5(d)));
        }
    }
    s.push_str(&format!("status: {} ({requested})\n", exit.category()));
    Ok(Outcome { stdout: s, exit })
}

fn cmd_build_joint(a: &BuildArgs) -> Result<Outcome, Failure> {
    let req = joint_request(a.joint_kind, a.label, &a.geometry)?;
    let tj = build_joint(&req)?;
    let flat = verify_flat(&tj);
    let exit = exit_for_flat(flat.verdict);
    let prov = Provenance::new("build joint", serde_json::to_value(req).expect("plain data"), tolerances());
    let merged = merge_coplanar(&tj.mesh, MERGE_TOL).mesh;
    let segs = a.intersections.as_ref().map(|_| self_intersections(&merged));
    let certified =
        if a.certified { Some(generate_certified(&tj.frame, tj.params.k, tj.params.seed.0, tj.params.seed.1)?) } else { None };
    if let Some(path) = &a.out {
        write_meshes(path, a.merge, &tj.mesh, &merged, &prov)?;
    }
    if let (Some(path), Some(segs)) = (&a.intersections, &segs) {
        write_atomic(path, segments_to_obj(segs, &[format!("{} segments", segs.len())]).as_bytes())?;
    }
    if let Some(path) = &a.report {
        let doc = json!({
            "provenance": prov,
            "requested": "FLAT",
            "status": exit.category(),
            "parameters": tj.params,
            "certified_parameters": certified,
            "report": flat,
            "self_intersection_segments": segs.as_ref().map(Vec::len),
        });
        write_json(path, &doc)?;
    }
    let mut s = format!("verdict: {}\n", serde_json::to_value(flat.verdict).expect("enum").as_str().unwrap_or(""));
    s.push_str(&format!("mesh: {} vertices, {} faces\n", tj.mesh.num_vertices(), tj.mesh.num_faces()));
    s.push_str(&format!("merged mesh: {} vertices, {} faces\n", merged.num_vertices(), merged.num_faces()));
    if let Some(segs) = &segs {
        s.push_str(&format!("self-intersection segments: {}\n", segs.len()));
    }
    s.push_str(&format!("status: {} (FLAT)\n", exit.category()));
    Ok(Outcome { stdout: s, exit })
}

fn vee_params(g: &Geometry) -> Result<VeeParams, Failure> {
    let r = joint_request(JointKind::Vee, None, g)?;
    Ok(VeeParams { n: r.n, l: r.l, theta: r.theta, phi: r.phi, psi: r.psi, k: r.k, alpha: r.alpha, gamma: r.gamma })
}

fn cmd_tables(a: &TablesArgs) -> Result<Outcome, Failure> {
    let p = vee_params(&a.geometry)?;
    let t = compute_tables(&p)?;
    let files = tables_csv(&t)?;
    for (name, text) in &files {
        write_atomic(&a.out_dir.join(name), text.as_bytes())?;
    }
    let sharp = t.table1a.iter().all(|r| r.alpha.radius() < 1e-6 && r.gamma.radius() < 1e-6)
        && t.table1b.iter().all(|r| r.delta.radius() < 1e-6);
    let positive = t.table1b.iter().all(|r| r.sign == crate::interval::SignVerdict::Positive);
    let rows = t.table2.iter().chain(&t.table3);
    let exit = if rows.clone().any(|r| r.verdict == crate::cw_complex::PairVerdict::Intersecting)
        || t.table1b.iter().any(|r| r.sign == crate::interval::SignVerdict::Negative)
    {
        Exit::Verification
    } else if !sharp
        || !positive
        || !t.all_rows_separated
        || rows.clone().any(|r| r.verdict != crate::cw_complex::PairVerdict::Separated)
    {
        Exit::Indeterminate
    } else {
        Exit::Ok
    };
    if let Some(path) = &a.report {
        let doc = json!({
            "provenance": Provenance::new("tables", serde_json::to_value(p).expect("plain data"), tolerances()),
            "status": exit.category(),
            "tables": t,
        });
        write_json(path, &doc)?;
    }
    let mut s = String::new();
    for (name, _) in &files {
        s.push_str(&format!("wrote {}\n", a.out_dir.join(name).display()));
    }
    s.push_str(&format!("parameter symmetry residual: {:e}\n", t.symmetry_residual));
    s.push_str(&format!("status: {}\n", exit.category()));
    Ok(Outcome { stdout: s, exit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexCheck {
    pub vertex: usize,
    pub label: String,
    pub boundary: bool,
    pub valence: usize,
    pub angle_sum: Interval,
    /// Interior vertices only.
    pub flat: Option<FlatVerdict>,
    /// `None` when the valence is below four.
    pub injective: Option<VertexVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshCheck {
    pub vertices: Vec<VertexCheck>,
    pub flat: FlatVerdict,
    pub injective: VertexVerdict,
}

/// Angle-sum and kitty-corner certificates at every used vertex of `mesh`.
pub fn check_mesh(mesh: &CWMesh) -> MeshCheck {
    let mut vertices = Vec::new();
    for v in mesh.used_vertices() {
        let boundary = mesh.is_boundary_vertex(v);
        let sum = corner_angle_sum(mesh, v, true);
        let flat = (!boundary).then(|| {
            if encloses_angle(sum, 2.0 * PI) {
                FlatVerdict::Flat
            } else if !sum.overlaps(Interval::from_value(2.0 * PI, 0.0)) {
                FlatVerdict::NotFlat
            } else {
                FlatVerdict::Indeterminate
            }
        });
        let valence = mesh.valence(v);
        let injective = certify_local_injectivity(mesh, v).ok().map(|r| r.verdict);
        vertices.push(VertexCheck {
            vertex: v,
            label: mesh.labels()[v].clone(),
            boundary,
            valence,
            angle_sum: sum,
            flat,
            injective,
        });
    }
    let flat = if vertices.iter().any(|c| c.flat == Some(FlatVerdict::NotFlat)) {
        FlatVerdict::NotFlat
    } else if vertices.iter().all(|c| c.flat.is_none_or(|f| f == FlatVerdict::Flat)) {
        FlatVerdict::Flat
    } else {
        FlatVerdict::Indeterminate
    };
    let injective = if vertices.iter().any(|c| c.injective == Some(VertexVerdict::NotInjective)) {
        VertexVerdict::NotInjective
    } else if vertices.iter().all(|c| c.injective == Some(VertexVerdict::Injective) || (c.boundary && c.injective.is_none())) {
        VertexVerdict::Injective
    } else {
        VertexVerdict::Indeterminate
    };
    MeshCheck { vertices, flat, injective }
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let mesh = read_mesh(&a.path)?;
    let c = check_mesh(&mesh);
    let exit = match (c.flat, c.injective) {
        (FlatVerdict::Flat, VertexVerdict::Injective) => Exit::Ok,
        (FlatVerdict::NotFlat, _) | (_, VertexVerdict::NotInjective) => Exit::Verification,
        _ => Exit::Indeterminate,
    };
    if let Some(path) = &a.report {
        let doc = json!({
            "provenance": Provenance::new("verify", json!({ "path": a.path.display().to_string() }), tolerances()),
            "status": exit.category(),
            "check": c,
        });
        write_json(path, &doc)?;
    }
    let count = |f: &dyn Fn(&VertexCheck) -> bool| c.vertices.iter().filter(|v| f(v)).count();
    let mut s = format!("vertices: {}\n", c.vertices.len());
    s.push_str(&format!("flat: {} of {} interior\n", count(&|v| v.flat == Some(FlatVerdict::Flat)), count(&|v| !v.boundary)));
    s.push_str(&format!("injective: {} of {}\n", count(&|v| v.injective == Some(VertexVerdict::Injective)), c.vertices.len()));
    for v in c.vertices.iter().filter(|v| v.flat.is_some_and(|f| f != FlatVerdict::Flat)) {
        s.push_str(&format!("  {} angle sum {} ({:?})\n", v.label, fmt5(v.angle_sum.mid()), v.flat.expect("checked")));
    }
    for v in c.vertices.iter().filter(|v| v.injective.is_some_and(|f| f != VertexVerdict::Injective)) {
        s.push_str(&format!("  {} {:?}\n", v.label, v.injective.expect("checked")));
    }
    s.push_str(&format!("status: {}\n", exit.category()));
    Ok(Outcome { stdout: s, exit })
}

fn cmd_sweep(a: &SweepArgs) -> Result<Outcome, Failure> {
    let (base, da, dg) = match a.kind {
        SweepKind::Klein => (SweepBase::Klein(klein_params(&a.geometry)?), vec![3.0, 3.1, 3.2], vec![2.4, 2.5, 2.6]),
        SweepKind::Torus => (SweepBase::Torus(torus_params(&a.geometry)?), vec![0.5, 1.0, 2.0], vec![0.5, 1.0, 2.0]),
    };
    let alphas = a.alphas.clone().unwrap_or(da);
    let gammas = a.gammas.clone().unwrap_or(dg);
    let rows = sweep_parameters(&base, &alphas, &gammas)?;
    let table: Vec<Vec<String>> =
        rows.iter().map(|r| vec![r.alpha.to_string(), r.gamma.to_string(), r.outcome.to_string()]).collect();
    let text = crate::io::csv_string(&["alpha", "gamma", "outcome"], &table)?;
    match &a.out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            Ok(Outcome { stdout: format!("wrote {} rows to {}\n", rows.len(), path.display()), exit: Exit::Ok })
        }
        None => Ok(Outcome { stdout: text, exit: Exit::Ok }),
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Tables(a) => cmd_tables(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Parses arguments, runs the command, prints, and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Parameter as i32 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            print!("{}", o.stdout);
            o.exit as i32
        }
        Err(f) => {
            eprintln!("{f}");
            f.exit as i32
        }
    }
}
