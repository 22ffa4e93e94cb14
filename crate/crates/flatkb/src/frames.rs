//! Placement geometry: rigid motions, n-stars, bridge frames and tube frames.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{Interval, Real};

pub type Point3 = Vector3<f64>;
pub type Vec3 = Vector3<f64>;

/// Tolerance used for the frame invariants.
pub const FRAME_TOL: f64 = 1e-12;

/// Relative radius used when a float coordinate or parameter is enclosed for
/// certified evaluation. It bounds the rounding error of the float placement
/// (a few dozen flops with libm trigonometry, at most tens of ulps).
pub const SHADOW_REL: f64 = 1e-14;

pub fn shadow(x: f64) -> Interval {
    Interval::from_value(x, SHADOW_REL * x.abs().max(1.0))
}

pub fn shadow_vec(v: &Vec3) -> Vector3<Interval> {
    v.map(shadow)
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum FrameError {
    #[error("angle {phi} outside (0, {max}) for n = {n}")]
    AngleOutOfRange { n: usize, phi: f64, max: f64 },
    #[error("n must be at least 2, got {0}")]
    TooFewSides(usize),
    #[error("direction is not orthogonal to the normal")]
    NonOrthogonalDirection,
    #[error("length must be positive, got {0}")]
    NonpositiveLength(f64),
    #[error("theta {0} outside [0, pi]")]
    ThetaOutOfRange(f64),
    #[error("frame invariant violated: {0}")]
    InvariantViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    rotation: Rotation3<f64>,
    translation: Vec3,
}

impl Default for RigidMotion {
    fn default() -> Self {
        RigidMotion::identity()
    }
}

impl RigidMotion {
    pub fn identity() -> RigidMotion {
        RigidMotion { rotation: Rotation3::identity(), translation: Vec3::zeros() }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vec3) -> RigidMotion {
        RigidMotion { rotation, translation }
    }

    pub fn translation(t: Vec3) -> RigidMotion {
        RigidMotion { rotation: Rotation3::identity(), translation: t }
    }

    /// Counterclockwise rotation about the z axis as seen from +z.
    pub fn rotation_z(angle: f64) -> RigidMotion {
        RigidMotion::rotation_axis(&Vec3::z(), angle)
    }

    pub fn rotation_axis(axis: &Vec3, angle: f64) -> RigidMotion {
        let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle);
        RigidMotion { rotation, translation: Vec3::zeros() }
    }

    pub fn rotation(&self) -> &Rotation3<f64> {
        &self.rotation
    }

    pub fn translation_part(&self) -> &Vec3 {
        &self.translation
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &RigidMotion) -> RigidMotion {
        RigidMotion {
            rotation: other.rotation * self.rotation,
            translation: other.rotation * self.translation + other.translation,
        }
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Checks orthogonality and unit determinant of the rotation part.
    pub fn is_valid(&self) -> bool {
        let m = self.rotation.matrix();
        (m.transpose() * m - nalgebra::Matrix3::identity()).abs().max() < FRAME_TOL && (m.determinant() - 1.0).abs() < FRAME_TOL
    }
}

/// Types that can be moved rigidly.
pub trait Transform {
    fn transformed(&self, m: &RigidMotion) -> Self;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Handedness {
    Right,
    Left,
}

impl Handedness {
    pub fn flipped(self) -> Handedness {
        match self {
            Handedness::Right => Handedness::Left,
            Handedness::Left => Handedness::Right,
        }
    }
}

/// How the `phi`/`psi` arguments of [`make_tube_frame`] are attached to star vertices.
///
/// `Standard` puts vertex 0 on the `+z` side of the star centre with interior
/// angle `phi` there. `Inverted` puts vertex 0 on the `-z` side with the
/// complementary angle `2pi(n-1)/n - phi`; this is the labelling under which
/// the reference vee joint reproduces its published parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AxisLabel {
    Standard,
    Inverted,
}

/// The angle complementary to `phi` in an n-star.
pub fn complementary_angle(n: usize, phi: f64) -> f64 {
    2.0 * PI * (n as f64 - 1.0) / n as f64 - phi
}

/// Planar equilateral 2n-gon with unit sides and alternating interior angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NStar {
    n: usize,
    phi: f64,
    center: Point3,
    normal: Vec3,
    handedness: Handedness,
    vertices: Vec<Point3>,
}

pub fn make_nstar(
    n: usize,
    phi: f64,
    center: Point3,
    normal: Vec3,
    p0_direction: Vec3,
    handedness: Handedness,
) -> Result<NStar, FrameError> {
    if n < 2 {
        return Err(FrameError::TooFewSides(n));
    }
    let max = complementary_angle(n, 0.0);
    if !(phi > 0.0 && phi < max) {
        return Err(FrameError::AngleOutOfRange { n, phi, max });
    }
    let normal = normal.normalize();
    if p0_direction.dot(&normal).abs() > FRAME_TOL * p0_direction.norm().max(1.0) {
        return Err(FrameError::NonOrthogonalDirection);
    }
    let e1 = p0_direction.normalize();
    let mut e2 = normal.cross(&e1);
    if handedness == Handedness::Left {
        e2 = -e2;
    }
    let nf = n as f64;
    let s = (PI / nf).sin();
    let r_even = (PI - PI / nf - phi / 2.0).sin() / s;
    let r_odd = (phi / 2.0).sin() / s;
    let vertices = (0..2 * n)
        .map(|k| {
            let r = if k % 2 == 0 { r_even } else { r_odd };
            let t = k as f64 * PI / nf;
            center + r * (t.cos() * e1 + t.sin() * e2)
        })
        .collect();
    Ok(NStar { n, phi, center, normal, handedness, vertices })
}

impl NStar {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Interior angle at even-indexed vertices.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn center(&self) -> &Point3 {
        &self.center
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn handedness(&self) -> Handedness {
        self.handedness
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertex with cyclic index.
    pub fn vertex(&self, i: i64) -> Point3 {
        let m = self.vertices.len() as i64;
        self.vertices[i.rem_euclid(m) as usize]
    }

    /// The star with vertex `i` of the result equal to vertex `-i` of `self`.
    pub fn reversed(&self) -> NStar {
        let vertices = (0..self.len() as i64).map(|i| self.vertex(-i)).collect();
        NStar { handedness: self.handedness.flipped(), vertices, ..self.clone() }
    }

    /// Relabel so that vertex `i` of the result is vertex `i + m` of `self`.
    pub fn shifted(&self, m: i64) -> NStar {
        let vertices = (0..self.len() as i64).map(|i| self.vertex(i + m)).collect();
        let phi = if m.rem_euclid(2) == 1 { complementary_angle(self.n, self.phi) } else { self.phi };
        NStar { phi, vertices, ..self.clone() }
    }

    /// Interior angle at vertex `i`, from the placed coordinates.
    pub fn interior_angle(&self, i: i64) -> f64 {
        let p = self.vertex(i);
        let a = self.vertex(i - 1) - p;
        let b = self.vertex(i + 1) - p;
        let ang = a.cross(&b).norm().atan2(a.dot(&b));
        // reflex when the turn disagrees with the winding sense
        let winding = (self.vertex(i) - self.center).cross(&(self.vertex(i + 1) - self.center));
        let turn = (p - self.vertex(i - 1)).cross(&(self.vertex(i + 1) - p));
        if turn.dot(&winding) < 0.0 {
            2.0 * PI - ang
        } else {
            ang
        }
    }

    /// Handedness recomputed from the vertex positions.
    pub fn measured_handedness(&self) -> Handedness {
        let w = (self.vertex(0) - self.center).cross(&(self.vertex(1) - self.center));
        if w.dot(&self.normal) > 0.0 {
            Handedness::Right
        } else {
            Handedness::Left
        }
    }

    /// Largest deviation from unit side length, coplanarity and angle alternation.
    pub fn invariant_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        let alt = complementary_angle(self.n, self.phi);
        for i in 0..self.len() as i64 {
            r = r.max(((self.vertex(i + 1) - self.vertex(i)).norm() - 1.0).abs());
            r = r.max((self.vertex(i) - self.center).dot(&self.normal).abs());
            let want = if i % 2 == 0 { self.phi } else { alt };
            r = r.max((self.interior_angle(i) - want).abs());
        }
        r
    }
}

impl Transform for NStar {
    fn transformed(&self, m: &RigidMotion) -> NStar {
        NStar {
            n: self.n,
            phi: self.phi,
            center: m.apply_point(&self.center),
            normal: m.apply_vector(&self.normal),
            handedness: self.handedness,
            vertices: self.vertices.iter().map(|p| m.apply_point(p)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FrameKind {
    Bend,
    Vee,
    DerivedCoaxial,
}

/// A pair of stars with their normals; the anchor of one tube joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeFrame {
    pub p: NStar,
    pub q: NStar,
    pub s_hat: Vec3,
    pub t_hat: Vec3,
    pub kind: FrameKind,
}

pub fn make_tube_frame(
    kind: FrameKind,
    n: usize,
    l: f64,
    theta: f64,
    phi: f64,
    psi: f64,
    label: AxisLabel,
) -> Result<TubeFrame, FrameError> {
    if !(l > 0.0) {
        return Err(FrameError::NonpositiveLength(l));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(FrameError::ThetaOutOfRange(theta));
    }
    let s_hat = Vec3::new(-1.0, 0.0, 0.0);
    let t_hat = Vec3::new(theta.cos(), theta.sin(), 0.0);
    let (dir, phi_p, psi_q) = match label {
        AxisLabel::Standard => (Vec3::z(), phi, psi),
        AxisLabel::Inverted => {
            // validate the stated angles before complementing them
            for a in [phi, psi] {
                let max = complementary_angle(n.max(2), 0.0);
                if !(a > 0.0 && a < max) {
                    return Err(FrameError::AngleOutOfRange { n, phi: a, max });
                }
            }
            (-Vec3::z(), complementary_angle(n, phi), complementary_angle(n, psi))
        }
    };
    let p = make_nstar(n, phi_p, Vec3::new(l, 0.0, 0.0), s_hat, dir, Handedness::Right)?;
    let q_hand = match kind {
        FrameKind::Vee => Handedness::Left,
        _ => Handedness::Right,
    };
    let q = make_nstar(n, psi_q, l * t_hat, t_hat, dir, q_hand)?;
    Ok(TubeFrame { p, q, s_hat, t_hat, kind })
}

/// Which of the two coaxial configurations a frame realises, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Coaxial {
    /// `s = t` and the Q centre is the P centre moved by `2L s`.
    Stacked,
    /// `s = -t` and both centres coincide.
    Folded,
}

impl TubeFrame {
    pub fn n(&self) -> usize {
        self.p.n()
    }

    pub fn coaxial(&self, tol: f64) -> Option<Coaxial> {
        let d = self.q.center() - self.p.center();
        if (self.s_hat - self.t_hat).norm() < tol {
            let along = d.dot(&self.s_hat);
            if along > tol && (d - along * self.s_hat).norm() < tol {
                return Some(Coaxial::Stacked);
            }
        }
        if (self.s_hat + self.t_hat).norm() < tol && d.norm() < tol {
            return Some(Coaxial::Folded);
        }
        None
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if self.p.n() != self.q.n() {
            return Err(FrameError::InvariantViolation("stars differ in n".into()));
        }
        for (star, nrm) in [(&self.p, &self.s_hat), (&self.q, &self.t_hat)] {
            if nrm.cross(star.normal()).norm() > 1e-10 {
                return Err(FrameError::InvariantViolation("normal not perpendicular to star".into()));
            }
        }
        Ok(())
    }
}

impl Transform for TubeFrame {
    fn transformed(&self, m: &RigidMotion) -> TubeFrame {
        TubeFrame {
            p: self.p.transformed(m),
            q: self.q.transformed(m),
            s_hat: m.apply_vector(&self.s_hat),
            t_hat: m.apply_vector(&self.t_hat),
            kind: self.kind,
        }
    }
}

/// `(W, X, Y, Z, s, t)` with unit edges `WX`, `YZ` orthogonal to `s`, `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeFrame<T: Real> {
    pub w: Vector3<T>,
    pub x: Vector3<T>,
    pub y: Vector3<T>,
    pub z: Vector3<T>,
    pub s_hat: Vector3<T>,
    pub t_hat: Vector3<T>,
}

impl<T: Real> BridgeFrame<T> {
    /// `(Z, Y, X, W, -t, -s)`.
    pub fn reversed(&self) -> BridgeFrame<T> {
        BridgeFrame { w: self.z, x: self.y, y: self.x, z: self.w, s_hat: -self.t_hat, t_hat: -self.s_hat }
    }
}

pub fn reverse_bridge_frame<T: Real>(f: &BridgeFrame<T>) -> BridgeFrame<T> {
    f.reversed()
}

impl BridgeFrame<f64> {
    pub fn u_hat(&self) -> Vec3 {
        self.x - self.w
    }

    pub fn v_hat(&self) -> Vec3 {
        self.z - self.y
    }

    /// Largest violation of the unit-edge and orthogonality conditions.
    pub fn invariant_residual(&self) -> f64 {
        let u = self.u_hat();
        let v = self.v_hat();
        [
            (u.norm() - 1.0).abs(),
            (v.norm() - 1.0).abs(),
            self.s_hat.dot(&u).abs(),
            self.t_hat.dot(&v).abs(),
            (self.s_hat.norm() - 1.0).abs(),
            (self.t_hat.norm() - 1.0).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Enclosure of the frame for certified evaluation.
    pub fn shadow(&self) -> BridgeFrame<Interval> {
        BridgeFrame {
            w: shadow_vec(&self.w),
            x: shadow_vec(&self.x),
            y: shadow_vec(&self.y),
            z: shadow_vec(&self.z),
            s_hat: shadow_vec(&self.s_hat),
            t_hat: shadow_vec(&self.t_hat),
        }
    }
}

impl Transform for BridgeFrame<f64> {
    fn transformed(&self, m: &RigidMotion) -> Self {
        BridgeFrame {
            w: m.apply_point(&self.w),
            x: m.apply_point(&self.x),
            y: m.apply_point(&self.y),
            z: m.apply_point(&self.z),
            s_hat: m.apply_vector(&self.s_hat),
            t_hat: m.apply_vector(&self.t_hat),
        }
    }
}

/// The `2n` bridge frames of a tube frame, indexed `0..2n`.
pub fn bridge_frames(tf: &TubeFrame) -> Result<Vec<BridgeFrame<f64>>, FrameError> {
    let (p, q) = (&tf.p, &tf.q);
    let mut out = Vec::with_capacity(p.len());
    for i in 0..p.len() as i64 {
        let f = if i % 2 == 1 {
            BridgeFrame {
                w: p.vertex(i),
                x: p.vertex(i - 1),
                y: q.vertex(i),
                z: q.vertex(i - 1),
                s_hat: tf.s_hat,
                t_hat: tf.t_hat,
            }
        } else {
            BridgeFrame {
                w: q.vertex(i),
                x: q.vertex(i - 1),
                y: p.vertex(i),
                z: p.vertex(i - 1),
                s_hat: -tf.t_hat,
                t_hat: -tf.s_hat,
            }
        };
        let r = f.invariant_residual();
        if r > 1e-10 {
            return Err(FrameError::InvariantViolation(format!("bridge frame {i} residual {r:e}")));
        }
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(n: usize, phi: f64) -> NStar {
        make_nstar(n, phi, Vec3::zeros(), Vec3::z(), Vec3::x(), Handedness::Right).unwrap()
    }

    #[test]
    fn hexagon_radii() {
        let s = star(6, PI);
        assert!((s.vertex(0).norm() - 3f64.sqrt()).abs() < 1e-12);
        assert!((s.vertex(1).norm() - 2.0).abs() < 1e-12);
        assert!(s.invariant_residual() < 1e-12);
    }

    #[test]
    fn three_halves_pi_radii() {
        let s = star(6, 1.5 * PI);
        assert!((s.vertex(1).norm() - 2f64.sqrt()).abs() < 1e-12);
        assert!((s.vertex(0).norm() - 2.0 * (PI / 12.0).sin()).abs() < 1e-12);
        assert!(s.invariant_residual() < 1e-12);
    }

    #[test]
    fn rhombus() {
        let s = star(2, 1.0);
        assert_eq!(s.len(), 4);
        assert!(s.invariant_residual() < 1e-12);
    }

    #[test]
    fn range_errors() {
        assert!(matches!(
            make_nstar(6, 0.0, Vec3::zeros(), Vec3::z(), Vec3::x(), Handedness::Right),
            Err(FrameError::AngleOutOfRange { .. })
        ));
        assert!(matches!(
            make_nstar(6, 1.0, Vec3::zeros(), Vec3::z(), Vec3::z(), Handedness::Right),
            Err(FrameError::NonOrthogonalDirection)
        ));
    }

    #[test]
    fn handedness_matches_winding() {
        let s = star(6, 2.0);
        assert_eq!(s.measured_handedness(), Handedness::Right);
        let r = s.reversed();
        assert_eq!(r.handedness(), Handedness::Left);
        assert_eq!(r.measured_handedness(), Handedness::Left);
        assert_eq!(r.reversed(), s);
        assert_eq!(r.vertex(1), s.vertex(-1));
    }

    #[test]
    fn vee_frame_placement() {
        let tf = make_tube_frame(FrameKind::Vee, 6, 4.0, PI / 3.0, PI, 1.5 * PI, AxisLabel::Standard).unwrap();
        assert!((tf.p.center() - Vec3::new(4.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((tf.q.center() - Vec3::new(2.0, 2.0 * 3f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!((tf.t_hat - Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0)).norm() < 1e-12);
        assert_eq!(tf.q.measured_handedness(), Handedness::Left);
        let chord = (tf.q.center() - tf.p.center()).norm();
        assert!((chord - 8.0 * (PI / 6.0).sin()).abs() < 1e-12);
        let frames = bridge_frames(&tf).unwrap();
        assert_eq!(frames[1].w, tf.p.vertex(1));
        assert_eq!(frames[2].s_hat, -tf.t_hat);
    }

    #[test]
    fn theta_zero_is_folded() {
        let tf = make_tube_frame(FrameKind::Vee, 8, 1.0, 0.0, 4.5, PI, AxisLabel::Standard).unwrap();
        assert_eq!(tf.coaxial(1e-10), Some(Coaxial::Folded));
        let tb = make_tube_frame(FrameKind::Bend, 6, 2.0, PI, PI, PI, AxisLabel::Standard).unwrap();
        assert_eq!(tb.coaxial(1e-10), Some(Coaxial::Stacked));
    }

    #[test]
    fn rigid_motion_examples() {
        let m = RigidMotion::rotation_z(-2.0 * PI / 3.0);
        let p = m.apply_point(&Vec3::new(-2.0, -2.0 * 3f64.sqrt(), 0.0));
        assert!((p - Vec3::new(-2.0, 2.0 * 3f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!(m.is_valid());
        let s = make_nstar(6, PI, Vec3::new(4.0, 0.0, 0.0), Vec3::x(), Vec3::z(), Handedness::Right).unwrap();
        let t = s.transformed(&RigidMotion::translation(Vec3::new(1.0, 2.0, 3.0)));
        assert!((t.center() - Vec3::new(5.0, 2.0, 3.0)).norm() < 1e-15);
        assert_eq!(s.transformed(&RigidMotion::identity()), s);
    }

    #[test]
    fn bridge_reversal_involution() {
        let tf = make_tube_frame(FrameKind::Bend, 4, 3.0, 1.0, 2.0, 2.5, AxisLabel::Standard).unwrap();
        for f in bridge_frames(&tf).unwrap() {
            assert_eq!(f.reversed().reversed(), f);
            assert_eq!(f.reversed().s_hat, -f.t_hat);
        }
    }

    #[test]
    fn shifted_star_keeps_invariants() {
        let s = star(6, 2.0).shifted(1);
        assert!(s.invariant_residual() < 1e-12);
        assert!((s.phi() - complementary_angle(6, 2.0)).abs() < 1e-15);
    }
}
