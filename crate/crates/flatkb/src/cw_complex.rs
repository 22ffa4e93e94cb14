//! Polygonal CW-surfaces with placed vertices, and the certificates run on them:
//! angle sums, kitty-corner cofactor tests, coplanar merging, self-intersections
//! and topology.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{shadow_vec, Point3, RigidMotion, Vec3};
use crate::interval::{cross, dot, vsub, Interval, Real, SignVerdict};

/// Width below which an angle-sum enclosure counts as sharp.
pub const ANGLE_CERT_WIDTH: f64 = 1e-6;
/// Segments shorter than this are dropped from intersection output.
pub const MIN_SEGMENT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum MeshError {
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("vertex {0} lies on the boundary")]
    BoundaryVertex(usize),
    #[error("vertex {vertex} has valence {valence} < 4")]
    LowValence { vertex: usize, valence: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CWMesh {
    vertices: Vec<Point3>,
    labels: Vec<String>,
    faces: Vec<Vec<usize>>,
}

fn sorted_edge(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn directed_edges(f: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..f.len()).map(move |k| (f[k], f[(k + 1) % f.len()]))
}

impl CWMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<Vec<usize>>) -> Result<CWMesh, MeshError> {
        let labels = (0..vertices.len()).map(|i| format!("v{i}")).collect();
        CWMesh::with_labels(vertices, labels, faces)
    }

    pub fn with_labels(vertices: Vec<Point3>, labels: Vec<String>, faces: Vec<Vec<usize>>) -> Result<CWMesh, MeshError> {
        if labels.len() != vertices.len() {
            return Err(MeshError::InvalidComplex("label count differs from vertex count".into()));
        }
        let m = CWMesh { vertices, labels, faces };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), MeshError> {
        for (fi, f) in self.faces.iter().enumerate() {
            if f.len() < 3 {
                return Err(MeshError::InvalidComplex(format!("face {fi} has {} vertices", f.len())));
            }
            if let Some(&v) = f.iter().find(|&&v| v >= self.vertices.len()) {
                return Err(MeshError::InvalidComplex(format!("face {fi} references vertex {v}")));
            }
            let distinct: BTreeSet<_> = f.iter().collect();
            if distinct.len() != f.len() {
                return Err(MeshError::InvalidComplex(format!("face {fi} is not a simple cycle")));
            }
        }
        for (e, fs) in self.edge_faces() {
            if fs.len() > 2 {
                return Err(MeshError::InvalidComplex(format!("edge {e:?} borders {} faces", fs.len())));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Undirected edges with the faces bordering them.
    pub fn edge_faces(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut m: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for (a, b) in directed_edges(f) {
                m.entry(sorted_edge(a, b)).or_default().push(fi);
            }
        }
        m
    }

    pub fn num_edges(&self) -> usize {
        self.edge_faces().len()
    }

    /// Vertices used by at least one face.
    pub fn used_vertices(&self) -> BTreeSet<usize> {
        self.faces.iter().flatten().copied().collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.used_vertices().len() as i64 - self.num_edges() as i64 + self.faces.len() as i64
    }

    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        self.edge_faces().into_iter().filter(|(_, fs)| fs.len() == 1).map(|(e, _)| e).collect()
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges().is_empty()
    }

    /// Boundary cycles as vertex sequences.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (a, b) in self.boundary_edges() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut seen = BTreeSet::new();
        let mut loops = Vec::new();
        for &start in adj.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut cycle = vec![start];
            seen.insert(start);
            let mut prev = start;
            let mut cur = adj[&start][0];
            while cur != start && seen.insert(cur) {
                cycle.push(cur);
                let next = adj[&cur].iter().copied().find(|&x| x != prev).unwrap_or(start);
                prev = cur;
                cur = next;
            }
            loops.push(cycle);
        }
        loops
    }

    pub fn vertex_faces(&self, v: usize) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.faces[f].contains(&v)).collect()
    }

    /// Previous and next vertex of `v` in face `f`.
    pub fn corner(&self, f: usize, v: usize) -> Option<(usize, usize)> {
        let face = &self.faces[f];
        let k = face.iter().position(|&x| x == v)?;
        let m = face.len();
        Some((face[(k + m - 1) % m], face[(k + 1) % m]))
    }

    pub fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for f in self.vertex_faces(v) {
            let (p, q) = self.corner(f, v).expect("vertex in face");
            s.insert(p);
            s.insert(q);
        }
        s
    }

    pub fn valence(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        let ef = self.edge_faces();
        self.neighbors(v).iter().any(|&u| ef.get(&sorted_edge(u, v)).is_none_or(|fs| fs.len() < 2))
    }

    /// Per-face flip flags giving a coherent orientation, or `None` when none exists.
    ///
    /// Each connected component keeps the stored orientation of its lowest face.
    pub fn orientation(&self) -> Option<Vec<bool>> {
        let ef = self.edge_faces();
        let mut flip: Vec<Option<bool>> = vec![None; self.faces.len()];
        for root in 0..self.faces.len() {
            if flip[root].is_some() {
                continue;
            }
            flip[root] = Some(false);
            let mut queue = VecDeque::from([root]);
            while let Some(f) = queue.pop_front() {
                let ff = flip[f].unwrap();
                for (a, b) in directed_edges(&self.faces[f]) {
                    let (a, b) = if ff { (b, a) } else { (a, b) };
                    for &g in &ef[&sorted_edge(a, b)] {
                        if g == f {
                            continue;
                        }
                        // g must traverse b -> a after its own flip
                        let same = directed_edges(&self.faces[g]).any(|e| e == (a, b));
                        let want = same;
                        match flip[g] {
                            None => {
                                flip[g] = Some(want);
                                queue.push_back(g);
                            }
                            Some(x) if x != want => return None,
                            _ => {}
                        }
                    }
                }
            }
        }
        Some(flip.into_iter().map(|x| x.unwrap_or(false)).collect())
    }

    pub fn is_orientable(&self) -> bool {
        self.orientation().is_some()
    }

    /// Copy with coherently oriented faces.
    pub fn oriented(&self) -> Option<CWMesh> {
        let flips = self.orientation()?;
        let faces =
            self.faces.iter().zip(flips).map(|(f, fl)| if fl { f.iter().rev().copied().collect() } else { f.clone() }).collect();
        Some(CWMesh { faces, ..self.clone() })
    }

    pub fn transformed(&self, m: &RigidMotion) -> CWMesh {
        CWMesh { vertices: self.vertices.iter().map(|p| m.apply_point(p)).collect(), ..self.clone() }
    }

    /// Unit normal by Newell's method.
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let face = &self.faces[f];
        let mut n = Vec3::zeros();
        for (a, b) in directed_edges(face) {
            let (p, q) = (self.vertices[a], self.vertices[b]);
            n += Vec3::new((p.y - q.y) * (p.z + q.z), (p.z - q.z) * (p.x + q.x), (p.x - q.x) * (p.y + q.y));
        }
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            n
        }
    }

    /// Largest distance of a face vertex from the face plane.
    pub fn face_planarity(&self, f: usize) -> f64 {
        let n = self.face_normal(f);
        let face = &self.faces[f];
        let o = self.vertices[face[0]];
        face.iter().map(|&v| (self.vertices[v] - o).dot(&n).abs()).fold(0.0, f64::max)
    }

    /// Whether every corner turns the same way with a turn of at least `tol` radians.
    pub fn face_strictly_convex(&self, f: usize, tol: f64) -> bool {
        polygon_convex(&self.faces[f].iter().map(|&v| self.vertices[v]).collect::<Vec<_>>(), tol)
    }

    /// Checks planarity and strict convexity of every face.
    pub fn check_faces(&self, planar_tol: f64) -> Result<(), MeshError> {
        for f in 0..self.faces.len() {
            if self.face_planarity(f) > planar_tol {
                return Err(MeshError::InvalidComplex(format!("face {f} is not planar")));
            }
            if !self.face_strictly_convex(f, 1e-12) {
                return Err(MeshError::InvalidComplex(format!("face {f} is not strictly convex")));
            }
        }
        Ok(())
    }

    /// Total area of all faces.
    pub fn area(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let face = &self.faces[f];
                let o = self.vertices[face[0]];
                let mut s = Vec3::zeros();
                for k in 1..face.len() - 1 {
                    s += (self.vertices[face[k]] - o).cross(&(self.vertices[face[k + 1]] - o));
                }
                s.norm() / 2.0
            })
            .sum()
    }

    /// Drops vertices not referenced by any face.
    pub fn compacted(&self) -> CWMesh {
        let used = self.used_vertices();
        let map: HashMap<usize, usize> = used.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        CWMesh {
            vertices: used.iter().map(|&v| self.vertices[v]).collect(),
            labels: used.iter().map(|&v| self.labels[v].clone()).collect(),
            faces: self.faces.iter().map(|f| f.iter().map(|v| map[v]).collect()).collect(),
        }
    }
}

fn polygon_convex(pts: &[Point3], tol: f64) -> bool {
    let m = pts.len();
    let mut n = Vec3::zeros();
    for k in 0..m {
        n += pts[k].cross(&pts[(k + 1) % m]);
    }
    if n.norm() == 0.0 {
        return false;
    }
    let n = n.normalize();
    (0..m).all(|k| {
        let e1 = pts[(k + 1) % m] - pts[k];
        let e2 = pts[(k + 2) % m] - pts[(k + 1) % m];
        let turn = e1.cross(&e2).dot(&n).atan2(e1.dot(&e2));
        turn > tol
    })
}

/// Sum of face angles at `v`, for any vertex.
pub fn corner_angle_sum(mesh: &CWMesh, v: usize, certified: bool) -> Interval {
    let mut total = Interval::ZERO;
    let mut float_total = 0.0;
    for f in mesh.vertex_faces(v) {
        let (p, q) = mesh.corner(f, v).expect("vertex in face");
        let (u, a, b) = (mesh.vertices[v], mesh.vertices[p], mesh.vertices[q]);
        if certified {
            let (ui, ai, bi) = (shadow_vec(&u), shadow_vec(&a), shadow_vec(&b));
            let e1 = vsub(&ai, &ui);
            let e2 = vsub(&bi, &ui);
            let c = cross(&e1, &e2);
            let s = (c.x.sqr() + c.y.sqr() + c.z.sqr()).sqrt().unwrap_or(Interval::ZERO);
            total = total + Interval::atan2_upper(s, dot(&e1, &e2));
        } else {
            let e1 = a - u;
            let e2 = b - u;
            float_total += e1.cross(&e2).norm().atan2(e1.dot(&e2));
        }
    }
    if certified {
        total
    } else {
        Interval::point(float_total)
    }
}

/// Angle sum at an interior vertex.
pub fn angle_sum(mesh: &CWMesh, v: usize, certified: bool) -> Result<Interval, MeshError> {
    if mesh.is_boundary_vertex(v) {
        return Err(MeshError::BoundaryVertex(v));
    }
    Ok(corner_angle_sum(mesh, v, certified))
}

/// Whether an angle-sum enclosure certifies the target value.
pub fn encloses_angle(sum: Interval, target: f64) -> bool {
    let t = Interval::from_value(target, 0.0);
    sum.overlaps(t) && sum.width() < ANGLE_CERT_WIDTH
}

/// Face pairs at `v` that share no edge incident to `v`.
pub fn kitty_corner_pairs(mesh: &CWMesh, v: usize) -> Result<Vec<(usize, usize)>, MeshError> {
    let valence = mesh.valence(v);
    if valence < 4 {
        return Err(MeshError::LowValence { vertex: v, valence });
    }
    let fs = mesh.vertex_faces(v);
    let mut out = Vec::new();
    for (i, &f) in fs.iter().enumerate() {
        let (p1, q1) = mesh.corner(f, v).unwrap();
        for &g in &fs[i + 1..] {
            let (p2, q2) = mesh.corner(g, v).unwrap();
            if p1 != p2 && p1 != q2 && q1 != p2 && q1 != q2 {
                out.push((f, g));
            }
        }
    }
    Ok(out)
}

fn det3<T: Real>(c0: [T; 3], c1: [T; 3], c2: [T; 3]) -> T {
    c0[0] * (c1[1] * c2[2] - c1[2] * c2[1]) - c1[0] * (c0[1] * c2[2] - c0[2] * c2[1]) + c2[0] * (c0[1] * c1[2] - c0[2] * c1[1])
}

/// Signed 3x3 minors `(-1)^(i+1) det(M without column i)`, with columns numbered from 1.
///
/// `m` is given by columns.
pub fn cofactors_3x4<T: Real>(m: &[[T; 3]; 4]) -> [T; 4] {
    let minor = |skip: usize| {
        let cols: Vec<[T; 3]> = (0..4).filter(|&c| c != skip).map(|c| m[c]).collect();
        det3(cols[0], cols[1], cols[2])
    };
    [minor(0), -minor(1), minor(2), -minor(3)]
}

/// `M c` for a column-major 3x4 matrix.
pub fn apply_3x4<T: Real>(m: &[[T; 3]; 4], c: &[T; 4]) -> [T; 3] {
    let mut out = [T::lift(0.0); 3];
    for (r, o) in out.iter_mut().enumerate() {
        *o = m[0][r] * c[0] + m[1][r] * c[1] + m[2][r] * c[2] + m[3][r] * c[3];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairVerdict {
    Separated,
    Intersecting,
    Indeterminate,
}

impl std::fmt::Display for PairVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PairVerdict::Separated => "SEPARATED",
            PairVerdict::Intersecting => "INTERSECTING",
            PairVerdict::Indeterminate => "INDETERMINATE",
        })
    }
}

/// Which test settled a face pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Certificate {
    Cofactor,
    /// Cofactor signs at one-ulp input radius.
    CofactorUlp,
    /// A plane through the vertex with the two faces strictly on opposite sides.
    SeparatingPlane,
    /// Coplanar faces overlapping by more than the tolerance.
    CoplanarOverlap,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityRow {
    pub vertex: usize,
    pub faces: (usize, usize),
    /// Columns `v1, w1, -v2, -w2`.
    pub matrix: [[f64; 3]; 4],
    pub cofactors: [f64; 4],
    pub enclosures: [Interval; 4],
    pub signs: [SignVerdict; 4],
    pub verdict: PairVerdict,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VertexVerdict {
    Injective,
    NotInjective,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexInjectivity {
    pub vertex: usize,
    pub label: String,
    pub rows: Vec<InjectivityRow>,
    pub verdict: VertexVerdict,
}

fn sign_verdict(signs: &[SignVerdict; 4]) -> PairVerdict {
    let pos = signs.iter().filter(|&&s| s == SignVerdict::Positive).count();
    let neg = signs.iter().filter(|&&s| s == SignVerdict::Negative).count();
    if pos > 0 && neg > 0 {
        PairVerdict::Separated
    } else if pos == 4 || neg == 4 {
        PairVerdict::Intersecting
    } else {
        PairVerdict::Indeterminate
    }
}

fn interval_columns(u: &Vector3<Interval>, f1: [&Vector3<Interval>; 2], f2: [&Vector3<Interval>; 2]) -> [[Interval; 3]; 4] {
    let col = |p: &Vector3<Interval>, neg: bool| {
        let d = vsub(p, u);
        if neg {
            [-d.x, -d.y, -d.z]
        } else {
            [d.x, d.y, d.z]
        }
    };
    [col(f1[0], false), col(f1[1], false), col(f2[0], true), col(f2[1], true)]
}

/// Cofactor row for the faces `(u, f1[0], f1[1])` and `(u, f2[0], f2[1])` meeting at `u`.
///
/// `radius` is the enclosure radius applied to each coordinate; `None` uses
/// the standard shadow radius.
/// Enclosures, float values, and the matrix columns of one cofactor row.
pub type CofactorRow = ([Interval; 4], [f64; 4], [[f64; 3]; 4]);

pub fn cofactor_row(u: &Point3, f1: [&Point3; 2], f2: [&Point3; 2], radius: Option<f64>) -> CofactorRow {
    let enc = |p: &Point3| match radius {
        None => shadow_vec(p),
        Some(r) => p.map(|c| Interval::from_value(c, r)),
    };
    let cols_i = interval_columns(&enc(u), [&enc(f1[0]), &enc(f1[1])], [&enc(f2[0]), &enc(f2[1])]);
    let d = |p: &Point3, s: f64| {
        let v = (p - u) * s;
        [v.x, v.y, v.z]
    };
    let cols_f = [d(f1[0], 1.0), d(f1[1], 1.0), d(f2[0], -1.0), d(f2[1], -1.0)];
    (cofactors_3x4(&cols_i), cofactors_3x4(&cols_f), cols_f)
}

// Tries planes through u containing the face-1 normal and a direction in a gap
// between the two angular sectors.
fn separating_plane(u: &Point3, f1: [&Point3; 2], f2: [&Point3; 2]) -> bool {
    let v1 = f1[0] - u;
    let w1 = f1[1] - u;
    let n = v1.cross(&w1);
    if n.norm() == 0.0 {
        return false;
    }
    let n = n.normalize();
    let e1 = v1.normalize();
    let e2 = n.cross(&e1);
    let ang = |p: &Vec3| p.dot(&e2).atan2(p.dot(&e1));
    let mut angles = [0.0, ang(&w1), ang(&(f2[0] - u)), ang(&(f2[1] - u))];
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut candidates = Vec::new();
    for k in 0..4 {
        let a = angles[k];
        let b = if k == 3 { angles[0] + 2.0 * PI } else { angles[k + 1] };
        let mid = 0.5 * (a + b);
        candidates.push(mid);
        candidates.push(mid + 0.5 * PI);
    }
    let ui = shadow_vec(u);
    let edges: Vec<Vector3<Interval>> = [f1[0], f1[1], f2[0], f2[1]].iter().map(|p| vsub(&shadow_vec(p), &ui)).collect();
    for phi in candidates {
        let d = phi.cos() * e1 + phi.sin() * e2;
        let m = n.cross(&d);
        let mi = m.map(Interval::point);
        let s: Vec<SignVerdict> = edges.iter().map(|e| dot(&mi, e).sign()).collect();
        if s.iter().any(|x| !x.is_certified()) {
            continue;
        }
        if s[0] == s[1] && s[2] == s[3] && s[0] != s[2] {
            return true;
        }
    }
    false
}

// Coplanar cones whose angular sectors overlap by more than `tol`.
fn coplanar_overlap(u: &Point3, f1: [&Point3; 2], f2: [&Point3; 2], tol: f64) -> bool {
    let v1 = f1[0] - u;
    let w1 = f1[1] - u;
    let n = v1.cross(&w1);
    if n.norm() == 0.0 {
        return false;
    }
    let n = n.normalize();
    let v2 = f2[0] - u;
    let w2 = f2[1] - u;
    if (v2.dot(&n) / v2.norm()).abs() > tol || (w2.dot(&n) / w2.norm()).abs() > tol {
        return false;
    }
    let e1 = v1.normalize();
    let e2 = n.cross(&e1);
    let ang = |p: &Vec3| p.dot(&e2).atan2(p.dot(&e1));
    // sector 1 is [0, a1] or [a1, 0]; sector 2 the short arc between its edges
    let a1 = ang(&w1);
    let (s1lo, s1hi) = if a1 >= 0.0 { (0.0, a1) } else { (a1, 0.0) };
    let (mut b0, mut b1) = (ang(&v2), ang(&w2));
    if b1 < b0 {
        std::mem::swap(&mut b0, &mut b1);
    }
    let arcs = if b1 - b0 <= PI { vec![(b0, b1)] } else { vec![(b1 - 2.0 * PI, b0), (b1, b0 + 2.0 * PI)] };
    arcs.iter().any(|&(lo, hi)| [-2.0 * PI, 0.0, 2.0 * PI].iter().any(|&sh| (s1hi.min(hi + sh) - s1lo.max(lo + sh)) > tol))
}

/// Verdict for the kitty-corner pair of faces `(u, f1[0], f1[1])`, `(u, f2[0], f2[1])`.
pub fn certify_pair(u: &Point3, f1: [&Point3; 2], f2: [&Point3; 2]) -> (CofactorRow, PairVerdict, Certificate) {
    let row = cofactor_row(u, f1, f2, None);
    let signs = row.0.map(|c| c.sign());
    let v = sign_verdict(&signs);
    if v != PairVerdict::Indeterminate {
        return (row, v, Certificate::Cofactor);
    }
    let retry = cofactor_row(u, f1, f2, Some(0.0));
    let v = sign_verdict(&retry.0.map(|c| c.sign()));
    if v != PairVerdict::Indeterminate {
        return (retry, v, Certificate::CofactorUlp);
    }
    if separating_plane(u, f1, f2) {
        return (row, PairVerdict::Separated, Certificate::SeparatingPlane);
    }
    if coplanar_overlap(u, f1, f2, 1e-9) {
        return (row, PairVerdict::Intersecting, Certificate::CoplanarOverlap);
    }
    (row, PairVerdict::Indeterminate, Certificate::None)
}

/// Runs the kitty-corner certificate on every pair at `v`.
pub fn certify_local_injectivity(mesh: &CWMesh, v: usize) -> Result<VertexInjectivity, MeshError> {
    let pairs = kitty_corner_pairs(mesh, v)?;
    let u = mesh.vertices[v];
    let mut rows = Vec::with_capacity(pairs.len());
    for (f, g) in pairs {
        let (p1, q1) = mesh.corner(f, v).unwrap();
        let (p2, q2) = mesh.corner(g, v).unwrap();
        let pts = |i: usize| &mesh.vertices[i];
        let ((enclosures, cofactors, matrix), verdict, certificate) = certify_pair(&u, [pts(q1), pts(p1)], [pts(q2), pts(p2)]);
        rows.push(InjectivityRow {
            vertex: v,
            faces: (f, g),
            matrix,
            cofactors,
            enclosures,
            signs: enclosures.map(|c| c.sign()),
            verdict,
            certificate,
        });
    }
    let verdict = if rows.iter().all(|r| r.verdict == PairVerdict::Separated) {
        VertexVerdict::Injective
    } else if rows.iter().any(|r| r.verdict == PairVerdict::Intersecting) {
        VertexVerdict::NotInjective
    } else {
        VertexVerdict::Indeterminate
    };
    Ok(VertexInjectivity { vertex: v, label: mesh.labels[v].clone(), rows, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub mesh: CWMesh,
    pub merged_pairs: usize,
    /// Coplanar pairs left unmerged because the union would not be convex.
    pub skipped_nonconvex: usize,
    pub removed_vertices: usize,
}

// Union of two faces by cancelling shared directed edges; None unless the
// result is a single simple cycle.
fn union_cycle(f1: &[usize], f2: &[usize]) -> Option<Vec<usize>> {
    let e1: BTreeSet<(usize, usize)> = directed_edges(f1).collect();
    let mut f2v: Vec<usize> = f2.to_vec();
    if directed_edges(&f2v).any(|e| e1.contains(&e)) {
        f2v.reverse();
    }
    let all: BTreeSet<(usize, usize)> = e1.iter().copied().chain(directed_edges(&f2v)).collect();
    let keep: Vec<(usize, usize)> = all.iter().copied().filter(|&(a, b)| !all.contains(&(b, a))).collect();
    if keep.is_empty() {
        return None;
    }
    let mut succ = BTreeMap::new();
    for &(a, b) in &keep {
        if succ.insert(a, b).is_some() {
            return None;
        }
    }
    // start from a vertex of f1 to keep its orientation
    let start = *f1.iter().find(|v| succ.contains_key(v))?;
    let mut cycle = vec![start];
    let mut cur = succ[&start];
    while cur != start {
        cycle.push(cur);
        cur = *succ.get(&cur)?;
        if cycle.len() > keep.len() {
            return None;
        }
    }
    (cycle.len() == keep.len()).then_some(cycle)
}

fn weakly_convex(pts: &[Point3], tol: f64) -> bool {
    let m = pts.len();
    let mut n = Vec3::zeros();
    for k in 0..m {
        n += pts[k].cross(&pts[(k + 1) % m]);
    }
    if n.norm() == 0.0 {
        return false;
    }
    let n = n.normalize();
    (0..m).all(|k| {
        let e1 = pts[(k + 1) % m] - pts[k];
        let e2 = pts[(k + 2) % m] - pts[(k + 1) % m];
        e1.cross(&e2).dot(&n) >= -tol * e1.norm() * e2.norm()
    })
}

/// Merges coplanar neighbours and drops straight valence-2 vertices.
///
/// `tol` bounds the angle between face normals, in radians.
pub fn merge_coplanar(mesh: &CWMesh, tol: f64) -> MergeOutcome {
    let pts = &mesh.vertices;
    let mut faces: Vec<Vec<usize>> = mesh.faces.clone();
    let mut merged_pairs = 0;
    let mut rejected: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
    let normal = |f: &[usize]| {
        let mut n = Vec3::zeros();
        for (a, b) in directed_edges(f) {
            n += pts[a].cross(&pts[b]);
        }
        n.normalize()
    };
    let scale = pts.iter().map(|p| p.amax()).fold(1.0, f64::max);
    loop {
        let mut ef: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for (a, b) in directed_edges(f) {
                ef.entry(sorted_edge(a, b)).or_default().push(fi);
            }
        }
        let mut done = None;
        for fs in ef.values() {
            if fs.len() != 2 || fs[0] == fs[1] {
                continue;
            }
            let (f1, f2) = (&faces[fs[0]], &faces[fs[1]]);
            let (n1, n2) = (normal(f1), normal(f2));
            let angle = n1.cross(&n2).norm().atan2(n1.dot(&n2).abs());
            if angle > tol {
                continue;
            }
            let o = pts[f1[0]];
            if f2.iter().any(|&v| (pts[v] - o).dot(&n1).abs() > 1e-9 * scale) {
                continue;
            }
            let key = (f1.clone(), f2.clone());
            if rejected.contains(&key) {
                continue;
            }
            match union_cycle(f1, f2) {
                Some(c) if weakly_convex(&c.iter().map(|&v| pts[v]).collect::<Vec<_>>(), 1e-9) => {
                    done = Some((fs[0], fs[1], c));
                    break;
                }
                Some(_) => {
                    rejected.insert(key);
                }
                None => {}
            }
        }
        match done {
            Some((i, j, c)) => {
                faces[i] = c;
                faces.remove(j);
                merged_pairs += 1;
            }
            None => break,
        }
    }
    let mut removed = 0;
    loop {
        let mut nb: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for f in &faces {
            for (a, b) in directed_edges(f) {
                nb.entry(a).or_default().insert(b);
                nb.entry(b).or_default().insert(a);
            }
        }
        let straight = nb.iter().find_map(|(&v, ns)| {
            if ns.len() != 2 {
                return None;
            }
            let mut it = ns.iter();
            let (a, b) = (*it.next().unwrap(), *it.next().unwrap());
            let d1 = pts[a] - pts[v];
            let d2 = pts[b] - pts[v];
            let bent = d1.cross(&d2).norm() >= 1e-9 * d1.norm() * d2.norm();
            (!bent && d1.dot(&d2) < 0.0).then_some(v)
        });
        match straight {
            Some(v) => {
                if faces.iter().any(|f| f.contains(&v) && f.len() <= 3) {
                    break;
                }
                for f in faces.iter_mut() {
                    f.retain(|&x| x != v);
                }
                removed += 1;
            }
            None => break,
        }
    }
    let merged = CWMesh { vertices: mesh.vertices.clone(), labels: mesh.labels.clone(), faces }.compacted();
    MergeOutcome { mesh: merged, merged_pairs, skipped_nonconvex: rejected.len(), removed_vertices: removed }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point3,
    pub b: Point3,
    pub faces: (usize, usize),
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
}

type Tri = [Point3; 3];

// Part of `t` on the plane (n, o): the two extreme points along `dir`.
fn plane_cut(t: &Tri, d: &[f64; 3], dir: &Vec3) -> Option<(f64, f64, Point3, Point3)> {
    let mut pts = Vec::with_capacity(3);
    for i in 0..3 {
        let j = (i + 1) % 3;
        if d[i] == 0.0 {
            pts.push(t[i]);
        }
        if (d[i] < 0.0 && d[j] > 0.0) || (d[i] > 0.0 && d[j] < 0.0) {
            let s = d[i] / (d[i] - d[j]);
            pts.push(t[i] + s * (t[j] - t[i]));
        }
    }
    if pts.is_empty() {
        return None;
    }
    let mut lo = (f64::INFINITY, pts[0]);
    let mut hi = (f64::NEG_INFINITY, pts[0]);
    for p in pts {
        let s = p.dot(dir);
        if s < lo.0 {
            lo = (s, p);
        }
        if s > hi.0 {
            hi = (s, p);
        }
    }
    Some((lo.0, hi.0, lo.1, hi.1))
}

/// Intersection segment of two triangles; coplanar pairs are ignored.
pub fn triangle_intersection(t1: &Tri, t2: &Tri) -> Option<(Point3, Point3)> {
    let n1 = (t1[1] - t1[0]).cross(&(t1[2] - t1[0]));
    let n2 = (t2[1] - t2[0]).cross(&(t2[2] - t2[0]));
    let (l1, l2) = (n1.norm(), n2.norm());
    if l1 == 0.0 || l2 == 0.0 {
        return None;
    }
    let (n1, n2) = (n1 / l1, n2 / l2);
    let dir = n1.cross(&n2);
    if dir.norm() < 1e-12 {
        return None;
    }
    let scale = t1.iter().chain(t2.iter()).map(|p| p.amax()).fold(1.0, f64::max);
    let eps = 1e-13 * scale;
    let snap = |x: f64| if x.abs() <= eps { 0.0 } else { x };
    let d1 = [0, 1, 2].map(|i| snap((t1[i] - t2[0]).dot(&n2)));
    if d1.iter().all(|&x| x > 0.0) || d1.iter().all(|&x| x < 0.0) {
        return None;
    }
    let d2 = [0, 1, 2].map(|i| snap((t2[i] - t1[0]).dot(&n1)));
    if d2.iter().all(|&x| x > 0.0) || d2.iter().all(|&x| x < 0.0) {
        return None;
    }
    let (a0, a1, pa0, pa1) = plane_cut(t1, &d1, &dir)?;
    let (b0, b1, pb0, pb1) = plane_cut(t2, &d2, &dir)?;
    let lo = if a0 >= b0 { pa0 } else { pb0 };
    let hi = if a1 <= b1 { pa1 } else { pb1 };
    if a0.max(b0) >= a1.min(b1) {
        return None;
    }
    Some((lo, hi))
}

fn fan(mesh: &CWMesh, f: usize) -> Vec<Tri> {
    let face = &mesh.faces[f];
    let p = |i: usize| mesh.vertices[face[i]];
    (1..face.len() - 1).map(|k| [p(0), p(k), p(k + 1)]).collect()
}

/// Intersection segments between faces that share no edge.
pub fn self_intersections(mesh: &CWMesh) -> Vec<Segment> {
    let ef = mesh.edge_faces();
    let mut adjacent: BTreeSet<(usize, usize)> = BTreeSet::new();
    for fs in ef.values() {
        if fs.len() == 2 {
            adjacent.insert(sorted_edge(fs[0], fs[1]));
        }
    }
    let tris: Vec<Vec<Tri>> = (0..mesh.faces.len()).map(|f| fan(mesh, f)).collect();
    let boxes: Vec<(Point3, Point3)> = (0..mesh.faces.len())
        .map(|f| {
            let mut lo = Point3::repeat(f64::INFINITY);
            let mut hi = Point3::repeat(f64::NEG_INFINITY);
            for &v in &mesh.faces[f] {
                lo = lo.inf(&mesh.vertices[v]);
                hi = hi.sup(&mesh.vertices[v]);
            }
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    for f in 0..mesh.faces.len() {
        for g in f + 1..mesh.faces.len() {
            if adjacent.contains(&(f, g)) {
                continue;
            }
            let (a, b) = (&boxes[f], &boxes[g]);
            if (0..3).any(|k| a.1[k] < b.0[k] - 1e-12 || b.1[k] < a.0[k] - 1e-12) {
                continue;
            }
            for t1 in &tris[f] {
                for t2 in &tris[g] {
                    if let Some((p, q)) = triangle_intersection(t1, t2) {
                        if (q - p).norm() >= MIN_SEGMENT {
                            out.push(Segment { a: p, b: q, faces: (f, g) });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Smallest distance from a segment endpoint to any vertex image.
pub fn min_endpoint_vertex_distance(mesh: &CWMesh, segs: &[Segment]) -> f64 {
    let used = mesh.used_vertices();
    segs.iter()
        .flat_map(|s| [s.a, s.b])
        .flat_map(|p| used.iter().map(move |&v| (p, v)))
        .map(|(p, v)| (p - mesh.vertices[v]).norm())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Torus,
    KleinBottle,
    Annulus,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyClass {
    pub euler_characteristic: i64,
    pub orientable: bool,
    pub boundary_loops: usize,
    pub classification: Classification,
}

pub fn classify_topology(mesh: &CWMesh) -> TopologyClass {
    let chi = mesh.euler_characteristic();
    let orientable = mesh.is_orientable();
    let loops = mesh.boundary_loops().len();
    let classification = match (chi, orientable, loops) {
        (0, true, 0) => Classification::Torus,
        (0, false, 0) => Classification::KleinBottle,
        (0, true, 2) => Classification::Annulus,
        _ => Classification::Other,
    };
    TopologyClass { euler_characteristic: chi, orientable, boundary_loops: loops, classification }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> CWMesh {
        let v: Vec<Point3> = (0..8).map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64)).collect();
        let f = vec![vec![0, 2, 3, 1], vec![4, 5, 7, 6], vec![0, 1, 5, 4], vec![2, 6, 7, 3], vec![0, 4, 6, 2], vec![1, 3, 7, 5]];
        CWMesh::new(v, f).unwrap()
    }

    fn pyramid(h: f64) -> CWMesh {
        let v = vec![
            Point3::new(0.0, 0.0, h),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, -1.0, 0.0),
        ];
        let f = vec![vec![0, 1, 2], vec![0, 2, 3], vec![0, 3, 4], vec![0, 4, 1], vec![1, 4, 3, 2]];
        CWMesh::new(v, f).unwrap()
    }

    #[test]
    fn cube_angles_and_topology() {
        let c = cube();
        assert_eq!(c.euler_characteristic(), 2);
        assert!(c.is_orientable());
        for v in 0..8 {
            let s = angle_sum(&c, v, true).unwrap();
            assert!(s.contains(1.5 * PI));
        }
        assert!(matches!(kitty_corner_pairs(&c, 0), Err(MeshError::LowValence { valence: 3, .. })));
        assert_eq!(classify_topology(&c).classification, Classification::Other);
    }

    #[test]
    fn pyramid_apex_defect() {
        let p = pyramid(0.5);
        let s = angle_sum(&p, 0, true).unwrap();
        assert!(s.hi() < 2.0 * PI);
        let flat = pyramid(0.0);
        assert!(encloses_angle(angle_sum(&flat, 0, true).unwrap(), 2.0 * PI));
    }

    #[test]
    fn boundary_vertex_rejected() {
        let m = CWMesh::new(vec![Point3::zeros(), Point3::x(), Point3::new(1.0, 1.0, 0.0), Point3::y()], vec![vec![0, 1, 2, 3]])
            .unwrap();
        assert_eq!(angle_sum(&m, 0, false), Err(MeshError::BoundaryVertex(0)));
        let s = corner_angle_sum(&m, 0, true);
        assert!(s.contains(PI / 2.0));
        assert_eq!(classify_topology(&m).boundary_loops, 1);
    }

    #[test]
    fn cofactor_kernel_example() {
        let e = |i: usize| {
            let mut c = [0.0; 3];
            c[i] = 1.0;
            c
        };
        let m = [e(0), e(1), e(2), e(0)];
        let c = cofactors_3x4(&m);
        assert_eq!(c, [1.0, 0.0, 0.0, -1.0].map(|x: f64| x * c[0]));
        assert!(c[0] != 0.0 && c[0].signum() != c[3].signum());
        let r = apply_3x4(&m, &c);
        assert!(r.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn duplicate_faces_intersect() {
        let u = Point3::zeros();
        let (a, b) = (Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0));
        let (_, v, cert) = certify_pair(&u, [&a, &b], [&a, &b]);
        assert_eq!(v, PairVerdict::Intersecting);
        assert_eq!(cert, Certificate::CoplanarOverlap);
    }

    #[test]
    fn coplanar_disjoint_faces_separate() {
        let u = Point3::zeros();
        let a = Point3::new(1.0, 0.1, 0.0);
        let b = Point3::new(0.1, 1.0, 0.0);
        let (c, d) = (-a, -b);
        let (_, v, cert) = certify_pair(&u, [&a, &b], [&c, &d]);
        assert_eq!(v, PairVerdict::Separated);
        assert_eq!(cert, Certificate::SeparatingPlane);
    }

    #[test]
    fn crossing_faces_intersect() {
        // face 1 in the xy quadrant, face 2 through it along the diagonal
        let u = Point3::zeros();
        let a = Point3::new(1.0, 0.0, 0.0);
        let b = Point3::new(0.0, 1.0, 0.0);
        let c = Point3::new(1.0, 1.0, 1.0);
        let d = Point3::new(1.0, 1.0, -1.0);
        let (_, v, _) = certify_pair(&u, [&a, &b], [&c, &d]);
        assert_eq!(v, PairVerdict::Intersecting);
    }

    #[test]
    fn merge_square() {
        let m = CWMesh::new(
            vec![Point3::zeros(), Point3::x(), Point3::new(1.0, 1.0, 0.0), Point3::y()],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
        )
        .unwrap();
        let out = merge_coplanar(&m, 1e-9);
        assert_eq!(out.mesh.num_faces(), 1);
        assert_eq!(out.mesh.faces()[0].len(), 4);
        let c = cube();
        assert_eq!(merge_coplanar(&c, 1e-9).mesh, c);
    }

    #[test]
    fn parallel_triangles_do_not_meet() {
        let t1 = [Point3::zeros(), Point3::x(), Point3::y()];
        let t2 = t1.map(|p| p + Point3::z());
        assert!(triangle_intersection(&t1, &t2).is_none());
        let t3 = [Point3::new(0.2, 0.2, -1.0), Point3::new(0.2, 0.2, 1.0), Point3::new(0.3, 0.25, 1.0)];
        let (p, q) = triangle_intersection(&t1, &t3).unwrap();
        assert!(p.z.abs() < 1e-15 && q.z.abs() < 1e-15);
    }

    #[test]
    fn orientation_detects_mobius() {
        // a five-square Moebius strip
        let n = 5;
        let mut v = Vec::new();
        for k in 0..n {
            let t = k as f64 * PI / n as f64;
            let c = Point3::new((2.0 * t).cos() * 3.0, (2.0 * t).sin() * 3.0, 0.0);
            let r = Point3::new((2.0 * t).cos() * t.cos(), (2.0 * t).sin() * t.cos(), t.sin());
            v.push(c + r);
            v.push(c - r);
        }
        let mut f = Vec::new();
        for k in 0..n - 1 {
            f.push(vec![2 * k, 2 * k + 2, 2 * k + 3, 2 * k + 1]);
        }
        f.push(vec![2 * (n - 1), 1, 0, 2 * (n - 1) + 1]);
        let m = CWMesh::new(v, f).unwrap();
        assert!(!m.is_orientable());
    }
}
