//! Zee-bridges: the four-face strip spanning two unit edges of a bridge frame.
//!
//! The abstract surface has vertices `w, x, y, z, a, b, c, d` and faces
//! `[w,a,b,x]`, `[a,c,b]`, `[b,c,d]`, `[c,y,z,d]`. The map sends `w..z` to the
//! frame points and `a = W + alpha s`, `b = X + beta s`, `c = Y - gamma t`,
//! `d = Z - delta t`.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{shadow, BridgeFrame, Point3, FRAME_TOL};
use crate::interval::{dot, lift_vec, norm, vadd, vscale, vsub, Interval, IntervalError, Real};

/// Float tolerance for the rectangularity residuals.
pub const RECT_FLOAT_TOL: f64 = 1e-9;
/// Maximum width of a certified residual enclosure.
pub const RECT_CERT_WIDTH: f64 = 1e-6;
/// Denominators closer to zero than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ZeeError {
    #[error("ray degeneracy: denominator vanishes")]
    DomainRayDegeneracy,
    #[error("face degenerates or is not strictly convex")]
    NonconvexFace,
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeeParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

/// Intermediate quantities of one bridge step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeStep<T: Real> {
    pub beta: T,
    pub delta: T,
    pub ac_len: T,
    pub discriminant: T,
}

fn bar_beta_inner<T: Real>(f: &BridgeFrame<T>, alpha: T, gamma: T) -> Result<(T, T), ZeeError> {
    let u = vsub(&f.x, &f.w);
    let a = vadd(&f.w, &vscale(alpha, &f.s_hat));
    let c = vsub(&f.y, &vscale(gamma, &f.t_hat));
    let ac = vsub(&c, &a);
    let ac_len = norm(&ac)?;
    let den = ac_len - dot(&ac, &f.s_hat);
    if den.near_zero(DEGENERACY_TOL) {
        return Err(ZeeError::DomainRayDegeneracy);
    }
    Ok((alpha + dot(&ac, &u).try_div(den)?, ac_len))
}

/// All derived quantities for `(f, alpha, gamma)`.
pub fn bridge_step<T: Real>(f: &BridgeFrame<T>, alpha: T, gamma: T) -> Result<BridgeStep<T>, ZeeError> {
    let (beta, ac_len) = bar_beta_inner(f, alpha, gamma)?;
    let v = vsub(&f.z, &f.y);
    let b = vadd(&f.x, &vscale(beta, &f.s_hat));
    let c = vsub(&f.y, &vscale(gamma, &f.t_hat));
    let bc = vsub(&c, &b);
    let ell = alpha - beta + ac_len;
    let den = dot(&bc, &f.t_hat) - ell;
    if den.near_zero(DEGENERACY_TOL) {
        return Err(ZeeError::DomainRayDegeneracy);
    }
    let delta = gamma + (dot(&bc, &v) + T::lift(1.0)).try_div(den)?;
    let discriminant = alpha - beta + ac_len + gamma - delta;
    Ok(BridgeStep { beta, delta, ac_len, discriminant })
}

pub fn bar_beta<T: Real>(f: &BridgeFrame<T>, alpha: T, gamma: T) -> Result<T, ZeeError> {
    bar_beta_inner(f, alpha, gamma).map(|r| r.0)
}

pub fn bar_delta<T: Real>(f: &BridgeFrame<T>, alpha: T, gamma: T) -> Result<T, ZeeError> {
    bridge_step(f, alpha, gamma).map(|s| s.delta)
}

pub fn discriminant<T: Real>(f: &BridgeFrame<T>, alpha: T, gamma: T) -> Result<T, ZeeError> {
    bridge_step(f, alpha, gamma).map(|s| s.discriminant)
}

/// Zee-bridge placed in space.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeeBridge {
    pub frame: BridgeFrame<f64>,
    pub params: ZeeParams,
    pub a: Point3,
    pub b: Point3,
    pub c: Point3,
    pub d: Point3,
}

impl ZeeBridge {
    /// Corner lists of the four faces.
    pub fn faces(&self) -> [Vec<Point3>; 4] {
        let f = &self.frame;
        [
            vec![f.w, self.a, self.b, f.x],
            vec![self.a, self.c, self.b],
            vec![self.b, self.c, self.d],
            vec![self.c, f.y, f.z, self.d],
        ]
    }

    /// Width of the induced rectangle, `alpha + |AC| + gamma`.
    pub fn width(&self) -> f64 {
        self.params.alpha + (self.c - self.a).norm() + self.params.gamma
    }
}

pub fn build_zee_bridge(f: &BridgeFrame<f64>, p: ZeeParams) -> Result<ZeeBridge, ZeeError> {
    if [p.alpha, p.beta, p.gamma, p.delta].iter().any(|&v| !(v > FRAME_TOL)) {
        return Err(ZeeError::NonconvexFace);
    }
    let zb = ZeeBridge {
        frame: *f,
        params: p,
        a: f.w + p.alpha * f.s_hat,
        b: f.x + p.beta * f.s_hat,
        c: f.y - p.gamma * f.t_hat,
        d: f.z - p.delta * f.t_hat,
    };
    for tri in [[zb.a, zb.c, zb.b], [zb.b, zb.c, zb.d]] {
        if (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm() < FRAME_TOL {
            return Err(ZeeError::NonconvexFace);
        }
    }
    Ok(zb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RectVerdict {
    Rectangular,
    NotRectangular,
    Uncertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangularityReport {
    pub verdict: RectVerdict,
    /// `alpha + |AC| + gamma - (beta + |BD| + delta)`
    pub perimeter_residual: f64,
    /// `|BC| - sqrt(1 + (|AC| + alpha - beta)^2)`
    pub diagonal_residual: f64,
    pub certified: Option<[Interval; 2]>,
    pub width: f64,
    pub height: f64,
}

fn residuals<T: Real>(pts: [&Vector3<T>; 4], alpha: T, beta: T, gamma: T, delta: T) -> Result<[T; 2], IntervalError> {
    let [a, b, c, d] = pts;
    let ac = norm(&vsub(c, a))?;
    let bd = norm(&vsub(d, b))?;
    let bc = norm(&vsub(c, b))?;
    let off = ac + alpha - beta;
    let r1 = alpha + ac + gamma - (beta + bd + delta);
    let r2 = bc - (T::lift(1.0) + off * off).try_sqrt()?;
    Ok([r1, r2])
}

pub fn check_rectangular(zb: &ZeeBridge, certified: bool) -> RectangularityReport {
    let p = zb.params;
    let width = zb.width();
    let [r1, r2] =
        residuals([&zb.a, &zb.b, &zb.c, &zb.d], p.alpha, p.beta, p.gamma, p.delta).unwrap_or([f64::INFINITY, f64::INFINITY]);
    let float_ok = r1.abs() < RECT_FLOAT_TOL && r2.abs() < RECT_FLOAT_TOL;
    let mut report = RectangularityReport {
        verdict: if float_ok { RectVerdict::Rectangular } else { RectVerdict::NotRectangular },
        perimeter_residual: r1,
        diagonal_residual: r2,
        certified: None,
        width,
        height: 1.0,
    };
    if certified {
        let f = zb.frame.shadow();
        let (al, be, ga, de) = (shadow(p.alpha), shadow(p.beta), shadow(p.gamma), shadow(p.delta));
        let a = vadd(&f.w, &vscale(al, &f.s_hat));
        let b = vadd(&f.x, &vscale(be, &f.s_hat));
        let c = vsub(&f.y, &vscale(ga, &f.t_hat));
        let d = vsub(&f.z, &vscale(de, &f.t_hat));
        report.verdict = match residuals([&a, &b, &c, &d], al, be, ga, de) {
            Ok(iv) => {
                report.certified = Some(iv);
                if iv.iter().any(|r| !r.contains_zero()) {
                    RectVerdict::NotRectangular
                } else if iv.iter().all(|r| r.width() < RECT_CERT_WIDTH) {
                    RectVerdict::Rectangular
                } else {
                    RectVerdict::Uncertified
                }
            }
            Err(_) => RectVerdict::Uncertified,
        };
    }
    report
}

/// Whether `b` avoids the unit half-cylinder used by the sufficient rectangularity test.
pub fn outside_half_cylinder(b: &Point3, c: &Point3, t_hat: &Point3) -> bool {
    let bc = c - b;
    let along = bc.dot(t_hat);
    along < 0.0 || bc.norm_squared() - along * along > 1.0
}

pub fn cylinder_criterion(f: &BridgeFrame<f64>, alpha: f64, gamma: f64) -> Result<bool, ZeeError> {
    let beta = bar_beta(f, alpha, gamma)?;
    let b = f.x + beta * f.s_hat;
    let c = f.y - gamma * f.t_hat;
    Ok(outside_half_cylinder(&b, &c, &f.t_hat))
}

/// Lays the four faces out in the plane, face by face across shared edges.
///
/// Returns the images of `[w, x, y, z, a, b, c, d]` with `w` at the origin and
/// `a` on the positive first axis.
pub fn develop(zb: &ZeeBridge) -> [Vector2<f64>; 8] {
    let f = &zb.frame;
    let d3 = |p: &Point3, q: &Point3| (p - q).norm();
    let w = Vector2::new(0.0, 0.0);
    let a = Vector2::new(d3(&zb.a, &f.w), 0.0);
    let above = Vector2::new(0.0, 1.0);
    let x = place(&w, &a, d3(&f.x, &f.w), d3(&f.x, &zb.a), &above, true);
    let b = place(&w, &a, d3(&zb.b, &f.w), d3(&zb.b, &zb.a), &above, true);
    let c = place(&a, &b, d3(&zb.c, &zb.a), d3(&zb.c, &zb.b), &w, false);
    let d = place(&b, &c, d3(&zb.d, &zb.b), d3(&zb.d, &zb.c), &a, false);
    let y = place(&c, &d, d3(&f.y, &zb.c), d3(&f.y, &zb.d), &b, false);
    let z = place(&c, &d, d3(&f.z, &zb.c), d3(&f.z, &zb.d), &b, false);
    [w, x, y, z, a, b, c, d]
}

// Point at distances (rp, rq) from p and q, on the side of line pq that
// matches `same_side` relative to `reference`.
fn place(p: &Vector2<f64>, q: &Vector2<f64>, rp: f64, rq: f64, reference: &Vector2<f64>, same_side: bool) -> Vector2<f64> {
    let e = q - p;
    let dist = e.norm();
    let ex = e / dist;
    let ey = Vector2::new(-ex.y, ex.x);
    let u = (rp * rp - rq * rq + dist * dist) / (2.0 * dist);
    let h = (rp * rp - u * u).max(0.0).sqrt();
    let ref_side = (reference - p).dot(&ey);
    let sign = if (ref_side >= 0.0) == same_side { 1.0 } else { -1.0 };
    p + u * ex + sign * h * ey
}

/// Largest distance between the developed layout and the ideal rectangle.
pub fn layout_residual(zb: &ZeeBridge) -> f64 {
    let p = zb.params;
    let ac = (zb.c - zb.a).norm();
    let bd = (zb.d - zb.b).norm();
    let want = [
        (0.0, 0.0),
        (0.0, 1.0),
        (p.alpha + ac + p.gamma, 0.0),
        (p.beta + bd + p.delta, 1.0),
        (p.alpha, 0.0),
        (p.beta, 1.0),
        (p.alpha + ac, 0.0),
        (p.beta + bd, 1.0),
    ];
    develop(zb).iter().zip(want.iter()).map(|(g, &(u, v))| (g - Vector2::new(u, v)).norm()).fold(0.0, f64::max)
}

/// Certified enclosure of the discriminant for a float frame.
pub fn certified_step(f: &BridgeFrame<f64>, alpha: Interval, gamma: Interval) -> Result<BridgeStep<Interval>, ZeeError> {
    bridge_step(&f.shadow(), alpha, gamma)
}

/// Lifts a float frame into any scalar type without widening.
pub fn lift_frame<T: Real>(f: &BridgeFrame<f64>) -> BridgeFrame<T> {
    BridgeFrame {
        w: lift_vec(&f.w),
        x: lift_vec(&f.x),
        y: lift_vec(&f.y),
        z: lift_vec(&f.z),
        s_hat: lift_vec(&f.s_hat),
        t_hat: lift_vec(&f.t_hat),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Vec3;

    // Unit edges along y, s = +z at the left, t = -z at the right.
    fn flat_frame() -> BridgeFrame<f64> {
        BridgeFrame {
            w: Vec3::new(0.0, 0.0, 0.0),
            x: Vec3::new(0.0, 1.0, 0.0),
            y: Vec3::new(3.0, 0.0, 0.0),
            z: Vec3::new(3.0, 1.0, 0.0),
            s_hat: Vec3::new(0.0, 0.0, 1.0),
            t_hat: Vec3::new(0.0, 0.0, -1.0),
        }
    }

    #[test]
    fn equal_parameters_give_four_faces() {
        let zb = build_zee_bridge(&flat_frame(), ZeeParams { alpha: 1.0, beta: 1.0, gamma: 1.0, delta: 1.0 }).unwrap();
        assert_eq!(zb.a, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(zb.c, Vec3::new(3.0, 0.0, 1.0));
        let faces = zb.faces();
        assert_eq!(faces.len(), 4);
        assert_eq!(faces.iter().map(|f| f.len()).sum::<usize>(), 14);
        // trapezoid [w,a,b,x]: parallel sides alpha and beta at distance 1
        assert!(((faces[0][1] - faces[0][0]).norm() - 1.0).abs() < 1e-15);
        assert!(((faces[0][3] - faces[0][0]).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_projection_keeps_alpha() {
        // AC orthogonal to u gives beta = alpha
        let f = flat_frame();
        let b = bar_beta(&f, 1.0, 1.0).unwrap();
        assert!((b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generated_bridge_is_rectangular() {
        let f = flat_frame();
        let s = bridge_step(&f, 1.0, 1.0).unwrap();
        assert!(s.discriminant > 0.0);
        let zb = build_zee_bridge(&f, ZeeParams { alpha: 1.0, beta: s.beta, gamma: 1.0, delta: s.delta }).unwrap();
        let r = check_rectangular(&zb, true);
        assert_eq!(r.verdict, RectVerdict::Rectangular);
        assert!(layout_residual(&zb) < 1e-9);
        let bad = build_zee_bridge(&f, ZeeParams { beta: s.beta + 0.1, ..zb.params }).unwrap();
        assert_eq!(check_rectangular(&bad, true).verdict, RectVerdict::NotRectangular);
        assert_eq!(check_rectangular(&bad, false).verdict, RectVerdict::NotRectangular);
    }

    #[test]
    fn degenerate_ray() {
        // C straight above A along s
        let mut f = flat_frame();
        f.t_hat = Vec3::new(0.0, 0.0, -1.0);
        f.y = Vec3::new(0.0, 0.0, 0.0);
        f.z = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(bar_beta(&f, 1.0, 2.0), Err(ZeeError::DomainRayDegeneracy));
        let fi = lift_frame::<Interval>(&f);
        assert_eq!(bar_beta(&fi, Interval::point(1.0), Interval::point(2.0)), Err(ZeeError::DomainRayDegeneracy));
    }

    #[test]
    fn nonpositive_parameter_rejected() {
        let p = ZeeParams { alpha: 0.0, beta: 1.0, gamma: 1.0, delta: 1.0 };
        assert_eq!(build_zee_bridge(&flat_frame(), p), Err(ZeeError::NonconvexFace));
    }

    #[test]
    fn reversal_duality() {
        let f = flat_frame();
        let s = bridge_step(&f, 1.0, 1.5).unwrap();
        let zb = build_zee_bridge(&f, ZeeParams { alpha: 1.0, beta: s.beta, gamma: 1.5, delta: s.delta }).unwrap();
        let r = build_zee_bridge(&f.reversed(), ZeeParams { alpha: s.delta, beta: 1.5, gamma: s.beta, delta: 1.0 }).unwrap();
        let mut p1: Vec<_> = zb.faces().concat();
        let mut p2: Vec<_> = r.faces().concat();
        let key = |v: &Vec3| (v.x * 1e9).round() as i64 * 31 + (v.y * 1e9).round() as i64 * 7 + (v.z * 1e9).round() as i64;
        p1.sort_by_key(key);
        p2.sort_by_key(key);
        for (a, b) in p1.iter().zip(p2.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn half_cylinder_cases() {
        let c = Vec3::zeros();
        let t = Vec3::z();
        // C - B along +t: B in front of C, 0.5 from the axis
        assert!(!outside_half_cylinder(&Vec3::new(0.5, 0.0, -2.0), &c, &t));
        assert!(outside_half_cylinder(&Vec3::new(0.5, 0.0, 2.0), &c, &t));
        assert!(outside_half_cylinder(&Vec3::new(2.0, 0.0, -2.0), &c, &t));
    }
}
