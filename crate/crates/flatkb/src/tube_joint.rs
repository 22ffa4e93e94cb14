//! Tube joints: `2n` zee-bridges wrapped into an annulus between two n-stars.
//!
//! Strip `i` uses bridge frame `F_i` with parameters
//! `(alpha_i, gamma_{i-1}, gamma_i, alpha_{i-1})`. Parameters are generated
//! outward from an anchor `k` in both directions until the two sweeps meet at
//! `k + n = k - n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cw_complex::{certify_pair, corner_angle_sum, encloses_angle, CWMesh, PairVerdict};
use crate::frames::{bridge_frames, shadow, shadow_vec, BridgeFrame, FrameError, Point3, RigidMotion, Transform, TubeFrame};
use crate::interval::{norm, vadd, vscale, vsub, Interval, Real, SignVerdict};
use crate::zee_bridge::{
    bridge_step, build_zee_bridge, check_rectangular, RectVerdict, RectangularityReport, ZeeBridge, ZeeError, ZeeParams,
};

/// Largest allowed float disagreement of the two sweeps where they meet.
pub const MEET_TOL: f64 = 1e-8;
/// Tolerance for shared placements of neighbouring strips.
pub const STRIP_TOL: f64 = 1e-10;
/// Tolerance for the equal-parameter pattern of straight joints.
pub const PATTERN_TOL: f64 = 1e-10;
/// Coaxiality tolerance.
pub const COAXIAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum JointError {
    #[error("sweeps disagree at the meeting index by {residual:e}")]
    InconsistentAtMeet { residual: f64 },
    #[error("generated parameter at index {index} is not positive")]
    NonpositiveParameter { index: i64 },
    #[error("step at index {index}: {source}")]
    Bridge { index: i64, source: ZeeError },
    #[error("strip {strip} does not match its neighbours")]
    StripMismatch { strip: usize },
    #[error("frame is not coaxial")]
    NotCoaxial,
    #[error("straight-joint parameter pattern violated by {residual:e}")]
    PatternViolation { residual: f64 },
    #[error("anchor {k} out of range for 2n = {len}")]
    AnchorOutOfRange { k: usize, len: usize },
    #[error("parameter count {got} differs from 2n = {want}")]
    ParameterCount { got: usize, want: usize },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// One discriminant, `j` in `1..=n` or `-n..=-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry<T> {
    pub j: i64,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointParams {
    /// `alpha_i` for `i` in `0..2n`.
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub k: usize,
    pub seed: (f64, f64),
    /// `Delta_1..Delta_n` followed by `Delta_-1..Delta_-n`.
    pub deltas: Vec<DeltaEntry<f64>>,
    pub meet_residual: f64,
}

impl JointParams {
    pub fn alpha(&self, i: i64) -> f64 {
        self.alphas[i.rem_euclid(self.alphas.len() as i64) as usize]
    }

    pub fn gamma(&self, i: i64) -> f64 {
        self.gammas[i.rem_euclid(self.gammas.len() as i64) as usize]
    }
}

/// Interval counterpart of [`JointParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedParams {
    pub alphas: Vec<Interval>,
    pub gammas: Vec<Interval>,
    pub k: usize,
    pub deltas: Vec<DeltaEntry<Interval>>,
}

struct Generated<T> {
    alphas: Vec<T>,
    gammas: Vec<T>,
    deltas: Vec<DeltaEntry<T>>,
    meet_residual: f64,
}

fn generate<T: Real>(frames: &[BridgeFrame<T>], k: usize, alpha: T, gamma: T) -> Result<Generated<T>, JointError> {
    let len = frames.len();
    let n = len / 2;
    if k >= len {
        return Err(JointError::AnchorOutOfRange { k, len });
    }
    let idx = |i: i64| i.rem_euclid(len as i64) as usize;
    let k = k as i64;
    // forward[j] holds (alpha, gamma) at k + j; backward[j] at k - j
    let mut forward = vec![(alpha, gamma)];
    let mut backward = vec![(alpha, gamma)];
    let mut pos = Vec::with_capacity(n);
    let mut neg = Vec::with_capacity(n);
    for j in 0..n as i64 {
        let (a, g) = forward[j as usize];
        let f = frames[idx(k + j + 1)].reversed();
        let s = bridge_step(&f, a, g).map_err(|source| JointError::Bridge { index: k + j + 1, source })?;
        if !s.delta.is_positive() || !s.beta.is_positive() {
            return Err(JointError::NonpositiveParameter { index: k + j + 1 });
        }
        pos.push(DeltaEntry { j: j + 1, value: s.discriminant });
        forward.push((s.delta, s.beta));

        let (a, g) = backward[j as usize];
        let f = &frames[idx(k - j)];
        let s = bridge_step(f, a, g).map_err(|source| JointError::Bridge { index: k - j, source })?;
        if !s.delta.is_positive() || !s.beta.is_positive() {
            return Err(JointError::NonpositiveParameter { index: k - j - 1 });
        }
        neg.push(DeltaEntry { j: -(j + 1), value: s.discriminant });
        backward.push((s.delta, s.beta));
    }
    let (fa, fg) = forward[n];
    let (ba, bg) = backward[n];
    let meet_residual = (fa.midpoint() - ba.midpoint()).abs().max((fg.midpoint() - bg.midpoint()).abs());
    if !(meet_residual <= MEET_TOL) || !fa.may_equal(ba) || !fg.may_equal(bg) {
        return Err(JointError::InconsistentAtMeet { residual: meet_residual });
    }
    let mut alphas = vec![alpha; len];
    let mut gammas = vec![gamma; len];
    for j in 0..=n as i64 {
        let (a, g) = forward[j as usize];
        alphas[idx(k + j)] = a;
        gammas[idx(k + j)] = g;
    }
    for j in 1..n as i64 {
        let (a, g) = backward[j as usize];
        alphas[idx(k - j)] = a;
        gammas[idx(k - j)] = g;
    }
    pos.extend(neg);
    Ok(Generated { alphas, gammas, deltas: pos, meet_residual })
}

pub fn generate_parameters(tf: &TubeFrame, k: usize, alpha: f64, gamma: f64) -> Result<JointParams, JointError> {
    if !(alpha > 0.0 && gamma > 0.0) {
        return Err(JointError::NonpositiveParameter { index: k as i64 });
    }
    let frames = bridge_frames(tf)?;
    let g = generate(&frames, k, alpha, gamma)?;
    Ok(JointParams {
        alphas: g.alphas,
        gammas: g.gammas,
        k,
        seed: (alpha, gamma),
        deltas: g.deltas,
        meet_residual: g.meet_residual,
    })
}

/// Runs the generation in interval arithmetic from seeds of radius `max(1e-20, ulp)`.
pub fn generate_certified(tf: &TubeFrame, k: usize, alpha: f64, gamma: f64) -> Result<CertifiedParams, JointError> {
    if !(alpha > 0.0 && gamma > 0.0) {
        return Err(JointError::NonpositiveParameter { index: k as i64 });
    }
    let frames: Vec<BridgeFrame<Interval>> = bridge_frames(tf)?.iter().map(|f| f.shadow()).collect();
    let g = generate(&frames, k, Interval::input(alpha), Interval::input(gamma))?;
    Ok(CertifiedParams { alphas: g.alphas, gammas: g.gammas, k, deltas: g.deltas })
}

/// Placed interior points `(a_i, c_i)` for one index, in any scalar type.
fn interior_points<T: Real>(
    p: &nalgebra::Vector3<T>,
    q: &nalgebra::Vector3<T>,
    s: &nalgebra::Vector3<T>,
    t: &nalgebra::Vector3<T>,
    i: i64,
    alpha: T,
    gamma: T,
) -> (nalgebra::Vector3<T>, nalgebra::Vector3<T>) {
    if i.rem_euclid(2) == 1 {
        (vadd(p, &vscale(alpha, s)), vsub(q, &vscale(gamma, t)))
    } else {
        (vsub(q, &vscale(alpha, t)), vadd(p, &vscale(gamma, s)))
    }
}

/// Certified discriminants recomputed from the stored parameters and placed points.
pub fn joint_deltas(tf: &TubeFrame, jp: &JointParams) -> Vec<DeltaEntry<Interval>> {
    let n = tf.n() as i64;
    let (s, t) = (shadow_vec(&tf.s_hat), shadow_vec(&tf.t_hat));
    let ac = |i: i64| {
        let (a, c) = interior_points(
            &shadow_vec(&tf.p.vertex(i)),
            &shadow_vec(&tf.q.vertex(i)),
            &s,
            &t,
            i,
            shadow(jp.alpha(i)),
            shadow(jp.gamma(i)),
        );
        norm(&vsub(&c, &a)).unwrap_or(Interval::ZERO)
    };
    let al = |i: i64| shadow(jp.alpha(i));
    let ga = |i: i64| shadow(jp.gamma(i));
    let k = jp.k as i64;
    let mut out = Vec::with_capacity(2 * n as usize);
    for j in 1..=n {
        let i = k + j - 1;
        out.push(DeltaEntry { j, value: al(i) - ga(i + 1) + ac(i) + ga(i) - al(i + 1) });
    }
    for j in 1..=n {
        let i = k - j + 1;
        out.push(DeltaEntry { j: -j, value: al(i) - ga(i - 1) + ac(i) + ga(i) - al(i - 1) });
    }
    out
}

/// Role of a joint vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    W,
    Y,
    A,
    C,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeJoint {
    pub frame: TubeFrame,
    pub params: JointParams,
    pub mesh: CWMesh,
    pub bridges: Vec<ZeeBridge>,
}

impl TubeJoint {
    pub fn len(&self) -> usize {
        self.params.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.alphas.is_empty()
    }

    /// Mesh vertex index of role `r` at cyclic index `i`.
    pub fn vertex_id(&self, r: Role, i: i64) -> usize {
        vertex_id(self.len(), r, i)
    }

    pub fn point(&self, r: Role, i: i64) -> Point3 {
        self.mesh.vertices()[self.vertex_id(r, i)]
    }

    /// Boundary vertex ids in star order on the `P` side.
    pub fn left_boundary(&self) -> Vec<usize> {
        (0..self.len() as i64).map(|i| self.vertex_id(if i % 2 == 0 { Role::Y } else { Role::W }, i)).collect()
    }

    /// Boundary vertex ids in star order on the `Q` side.
    pub fn right_boundary(&self) -> Vec<usize> {
        (0..self.len() as i64).map(|i| self.vertex_id(if i % 2 == 0 { Role::W } else { Role::Y }, i)).collect()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        let m = self.len() as i64;
        (0..m).flat_map(|i| [self.vertex_id(Role::A, i), self.vertex_id(Role::C, i)]).collect()
    }

    pub fn transformed(&self, m: &RigidMotion) -> TubeJoint {
        TubeJoint {
            frame: self.frame.transformed(m),
            params: self.params.clone(),
            mesh: self.mesh.transformed(m),
            bridges: self
                .bridges
                .iter()
                .map(|b| ZeeBridge {
                    frame: b.frame.transformed(m),
                    params: b.params,
                    a: m.apply_point(&b.a),
                    b: m.apply_point(&b.b),
                    c: m.apply_point(&b.c),
                    d: m.apply_point(&b.d),
                })
                .collect(),
        }
    }
}

fn vertex_id(len: usize, r: Role, i: i64) -> usize {
    let i = i.rem_euclid(len as i64) as usize;
    let block = match r {
        Role::W => 0,
        Role::Y => 1,
        Role::A => 2,
        Role::C => 3,
    };
    block * len + i
}

pub fn build_tube_joint(tf: &TubeFrame, jp: &JointParams) -> Result<TubeJoint, JointError> {
    let len = tf.p.len();
    if jp.alphas.len() != len || jp.gammas.len() != len {
        return Err(JointError::ParameterCount { got: jp.alphas.len(), want: len });
    }
    let frames = bridge_frames(tf)?;
    let mut pts = vec![Point3::zeros(); 4 * len];
    let mut labels = vec![String::new(); 4 * len];
    for i in 0..len as i64 {
        let (p, q) = (tf.p.vertex(i), tf.q.vertex(i));
        let (a, c) = interior_points(&p, &q, &tf.s_hat, &tf.t_hat, i, jp.alpha(i), jp.gamma(i));
        let (w, y) = if i % 2 == 1 { (p, q) } else { (q, p) };
        for (r, x, name) in [(Role::W, w, "w"), (Role::Y, y, "y"), (Role::A, a, "a"), (Role::C, c, "c")] {
            let id = vertex_id(len, r, i);
            pts[id] = x;
            labels[id] = format!("{name}{i}");
        }
    }
    let id = |r: Role, i: i64| vertex_id(len, r, i);
    let mut faces = Vec::with_capacity(4 * len);
    let mut bridges = Vec::with_capacity(len);
    for i in 0..len as i64 {
        let im = i - 1;
        let mut strip = vec![
            vec![id(Role::W, i), id(Role::A, i), id(Role::C, im), id(Role::Y, im)],
            vec![id(Role::A, i), id(Role::C, i), id(Role::C, im)],
            vec![id(Role::C, im), id(Role::C, i), id(Role::A, im)],
            vec![id(Role::C, i), id(Role::Y, i), id(Role::W, im), id(Role::A, im)],
        ];
        // neighbouring strips are drawn with opposite orientation
        if i % 2 == 0 {
            for f in strip.iter_mut() {
                f.reverse();
            }
        }
        faces.extend(strip);
        let params = ZeeParams { alpha: jp.alpha(i), beta: jp.gamma(im), gamma: jp.gamma(i), delta: jp.alpha(im) };
        let f = &frames[i as usize];
        let zb = build_zee_bridge(f, params).map_err(|source| JointError::Bridge { index: i, source })?;
        let checks = [
            (f.w, id(Role::W, i)),
            (f.x, id(Role::Y, im)),
            (f.y, id(Role::Y, i)),
            (f.z, id(Role::W, im)),
            (zb.a, id(Role::A, i)),
            (zb.b, id(Role::C, im)),
            (zb.c, id(Role::C, i)),
            (zb.d, id(Role::A, im)),
        ];
        if checks.iter().any(|(x, v)| (x - pts[*v]).norm() > STRIP_TOL) {
            return Err(JointError::StripMismatch { strip: i as usize });
        }
        bridges.push(zb);
    }
    let mesh = CWMesh::with_labels(pts, labels, faces).map_err(|e| FrameError::InvariantViolation(e.to_string()))?;
    Ok(TubeJoint { frame: tf.clone(), params: jp.clone(), mesh, bridges })
}

/// Generates at `k = 0` on a coaxial frame and checks the three-value pattern.
pub fn straight_joint(tf: &TubeFrame, alpha0: f64, gamma0: f64) -> Result<TubeJoint, JointError> {
    if tf.coaxial(COAXIAL_TOL).is_none() {
        return Err(JointError::NotCoaxial);
    }
    let jp = generate_parameters(tf, 0, alpha0, gamma0)?;
    let residual = straight_pattern_residual(&jp);
    if !(residual <= PATTERN_TOL) {
        return Err(JointError::PatternViolation { residual });
    }
    if !(jp.alpha(1) > jp.gamma(0)) {
        return Err(JointError::PatternViolation { residual: jp.gamma(0) - jp.alpha(1) });
    }
    build_tube_joint(tf, &jp)
}

/// Deviation from `alpha_even = alpha_0`, `gamma_even = gamma_0`,
/// `gamma_odd = alpha_0`, `alpha_odd = alpha_1`.
pub fn straight_pattern_residual(jp: &JointParams) -> f64 {
    let (a0, g0, a1) = (jp.alpha(0), jp.gamma(0), jp.alpha(1));
    let mut r: f64 = 0.0;
    for i in 0..jp.alphas.len() as i64 {
        let (wa, wg) = if i % 2 == 0 { (a0, g0) } else { (a1, a0) };
        r = r.max((jp.alpha(i) - wa).abs()).max((jp.gamma(i) - wg).abs());
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FlatVerdict {
    Flat,
    NotFlat,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexAngle {
    pub vertex: usize,
    pub label: String,
    pub sum: Interval,
    pub expected: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub strips: Vec<RectangularityReport>,
    pub deltas: Vec<DeltaEntry<Interval>>,
    pub delta_signs: Vec<SignVerdict>,
    pub interior_angles: Vec<VertexAngle>,
    pub boundary_angles: Vec<VertexAngle>,
    pub meet_residual: f64,
    /// Verdict of the rectangularity route alone.
    pub strips_verdict: FlatVerdict,
    /// Verdict of the angle-sum route alone.
    pub angles_verdict: FlatVerdict,
    pub verdict: FlatVerdict,
}

fn combine(parts: &[FlatVerdict]) -> FlatVerdict {
    if parts.contains(&FlatVerdict::NotFlat) {
        FlatVerdict::NotFlat
    } else if parts.iter().all(|&v| v == FlatVerdict::Flat) {
        FlatVerdict::Flat
    } else {
        FlatVerdict::Indeterminate
    }
}

fn angle_verdict(sum: Interval, target: f64) -> FlatVerdict {
    if encloses_angle(sum, target) {
        FlatVerdict::Flat
    } else if !sum.overlaps(Interval::from_value(target, 0.0)) {
        FlatVerdict::NotFlat
    } else {
        FlatVerdict::Indeterminate
    }
}

/// Certifies every strip rectangular and every angle sum (2pi inside, pi on the boundary).
pub fn verify_flat(tj: &TubeJoint) -> FlatnessReport {
    let strips: Vec<RectangularityReport> = tj.bridges.iter().map(|b| check_rectangular(b, true)).collect();
    let strips_verdict = combine(
        &strips
            .iter()
            .map(|r| match r.verdict {
                RectVerdict::Rectangular => FlatVerdict::Flat,
                RectVerdict::NotRectangular => FlatVerdict::NotFlat,
                RectVerdict::Uncertified => FlatVerdict::Indeterminate,
            })
            .collect::<Vec<_>>(),
    );
    let mesh = &tj.mesh;
    let angle = |v: usize, expected: f64| {
        let sum = corner_angle_sum(mesh, v, true);
        VertexAngle { vertex: v, label: mesh.labels()[v].clone(), sum, expected, certified: encloses_angle(sum, expected) }
    };
    let interior_angles: Vec<VertexAngle> = tj.interior_vertices().into_iter().map(|v| angle(v, 2.0 * PI)).collect();
    let boundary_angles: Vec<VertexAngle> =
        tj.left_boundary().into_iter().chain(tj.right_boundary()).map(|v| angle(v, PI)).collect();
    let angles_verdict = combine(
        &interior_angles.iter().chain(boundary_angles.iter()).map(|a| angle_verdict(a.sum, a.expected)).collect::<Vec<_>>(),
    );
    let deltas = joint_deltas(&tj.frame, &tj.params);
    let delta_signs = deltas.iter().map(|d| d.value.sign()).collect();
    FlatnessReport {
        strips,
        deltas,
        delta_signs,
        interior_angles,
        boundary_angles,
        meet_residual: tj.params.meet_residual,
        strips_verdict,
        angles_verdict,
        verdict: combine(&[strips_verdict, angles_verdict]),
    }
}

/// Which interior vertex family a table row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InteriorKind {
    A,
    C,
}

/// Face number with its two edge endpoints other than the centre vertex.
pub type LabelledFace = (usize, (Role, i64), (Role, i64));

/// Labelled faces around `a_i` (four) or `c_i` (six), each given by its two
/// neighbours of the centre vertex in the order used for the cofactor matrix.
pub fn labelled_faces(kind: InteriorKind, i: i64) -> Vec<LabelledFace> {
    match kind {
        InteriorKind::A => vec![
            (1, (Role::C, i + 1), (Role::W, i)),
            (2, (Role::W, i), (Role::C, i - 1)),
            (3, (Role::C, i - 1), (Role::C, i)),
            (4, (Role::C, i), (Role::C, i + 1)),
        ],
        InteriorKind::C => vec![
            (1, (Role::A, i + 1), (Role::C, i + 1)),
            (2, (Role::C, i + 1), (Role::A, i)),
            (3, (Role::A, i), (Role::C, i - 1)),
            (4, (Role::C, i - 1), (Role::A, i - 1)),
            (5, (Role::A, i - 1), (Role::Y, i)),
            (6, (Role::Y, i), (Role::A, i + 1)),
        ],
    }
}

/// Kitty-corner label pairs at `a_i` and `c_i`.
pub fn labelled_pairs(kind: InteriorKind) -> &'static [(usize, usize)] {
    match kind {
        InteriorKind::A => &[(1, 3), (4, 2)],
        InteriorKind::C => &[(1, 3), (1, 4), (1, 5), (2, 4), (2, 5), (3, 5), (6, 2), (6, 3), (6, 4)],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledRow {
    pub i: i64,
    pub j: usize,
    pub k: usize,
    pub cofactors: [f64; 4],
    pub enclosures: [Interval; 4],
    pub verdict: PairVerdict,
}

/// Cofactor rows at `a_i` or `c_i` with the face labels of the published listing.
pub fn labelled_rows(tj: &TubeJoint, kind: InteriorKind, i: i64) -> Vec<LabelledRow> {
    let centre = tj.point(if kind == InteriorKind::A { Role::A } else { Role::C }, i);
    let faces = labelled_faces(kind, i);
    let get = |label: usize| {
        let (_, p, q) = faces.iter().find(|f| f.0 == label).copied().expect("label exists");
        (tj.point(p.0, p.1), tj.point(q.0, q.1))
    };
    labelled_pairs(kind)
        .iter()
        .map(|&(j, k)| {
            let (a1, b1) = get(j);
            let (a2, b2) = get(k);
            let ((enclosures, cofactors, _), verdict, _) = certify_pair(&centre, [&a1, &b1], [&a2, &b2]);
            LabelledRow { i, j, k, cofactors, enclosures, verdict }
        })
        .collect()
}
