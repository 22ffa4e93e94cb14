//! Outward-rounded interval arithmetic on scalars and 3-vectors.
//!
//! Endpoints are `f64`. Directed rounding is emulated with error-free
//! transformations (TwoSum, fma-based TwoProduct, exact division and square-root
//! remainders): an endpoint is stepped outward by one representable value only
//! when the round-to-nearest result was inexact in the wrong direction. Exact
//! operations therefore produce exact endpoints.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Input radius applied to construction parameters in certified mode.
pub const INPUT_RADIUS: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum IntervalError {
    #[error("division by an interval containing zero")]
    DivisionByIntervalContainingZero,
    #[error("square root of a negative interval")]
    NegativeArgument,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SignVerdict {
    Positive,
    Negative,
    ZeroUncertifiable,
}

impl SignVerdict {
    pub fn is_certified(self) -> bool {
        self != SignVerdict::ZeroUncertifiable
    }
}

impl fmt::Display for SignVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SignVerdict::Positive => "POSITIVE",
            SignVerdict::Negative => "NEGATIVE",
            SignVerdict::ZeroUncertifiable => "ZERO_UNCERTIFIABLE",
        };
        f.write_str(s)
    }
}

// ---- directed rounding helpers ----

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bp = s - a;
    let ap = s - bp;
    (s, (a - ap) + (b - bp))
}

fn add_down(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return if s == f64::INFINITY { f64::MAX } else { s };
    }
    if e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return if s == f64::NEG_INFINITY { f64::MIN } else { s };
    }
    if e > 0.0 {
        s.next_up()
    } else {
        s
    }
}

// Below this magnitude the fma residual may itself be rounded.
const TINY: f64 = 1e-280;

fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return if p == f64::INFINITY { f64::MAX } else { p };
    }
    if p.abs() < TINY {
        return p.next_down();
    }
    let e = a.mul_add(b, -p);
    if e < 0.0 {
        p.next_down()
    } else {
        p
    }
}

fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return if p == f64::NEG_INFINITY { f64::MIN } else { p };
    }
    if p.abs() < TINY {
        return p.next_up();
    }
    let e = a.mul_add(b, -p);
    if e > 0.0 {
        p.next_up()
    } else {
        p
    }
}

// sign of (a - q*b)/b tells on which side of q the exact quotient lies
fn div_residual_sign(a: f64, b: f64, q: f64) -> f64 {
    let r = (-q).mul_add(b, a);
    if b > 0.0 {
        r
    } else {
        -r
    }
}

fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return if q == f64::INFINITY { f64::MAX } else { q };
    }
    if q.abs() < TINY || a.abs() < TINY {
        return q.next_down();
    }
    if div_residual_sign(a, b, q) < 0.0 {
        q.next_down()
    } else {
        q
    }
}

fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return if q == f64::NEG_INFINITY { f64::MIN } else { q };
    }
    if q.abs() < TINY || a.abs() < TINY {
        return q.next_up();
    }
    if div_residual_sign(a, b, q) > 0.0 {
        q.next_up()
    } else {
        q
    }
}

fn sqrt_down(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = x.sqrt();
    if x < TINY {
        return s.next_down().max(0.0);
    }
    let r = (-s).mul_add(s, x);
    if r < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn sqrt_up(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = x.sqrt();
    if x < TINY || !s.is_finite() {
        return s.next_up();
    }
    let r = (-s).mul_add(s, x);
    if r > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    /// Panics if the bounds are NaN or out of order.
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(lo <= hi, "interval bounds out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Interval {
        Interval::new(v, v)
    }

    /// `[v - radius, v + radius]`, widened outward by one representable step.
    pub fn from_value(v: f64, radius: f64) -> Interval {
        assert!(radius >= 0.0, "negative radius");
        let lo = add_down(v, -radius).next_down();
        let hi = add_up(v, radius).next_up();
        Interval::new(lo, hi)
    }

    /// Enclosure of a construction input with radius `max(1e-20, one ulp)`.
    pub fn input(v: f64) -> Interval {
        Interval::from_value(v, INPUT_RADIUS)
    }

    /// Enclosure of pi.
    pub fn pi() -> Interval {
        // f64 PI is below the true value
        Interval::new(std::f64::consts::PI, std::f64::consts::PI.next_up())
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn mid(self) -> f64 {
        let m = 0.5 * self.lo + 0.5 * self.hi;
        if m.is_finite() {
            m
        } else {
            0.0
        }
    }

    pub fn width(self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    pub fn radius(self) -> f64 {
        let m = self.mid();
        (add_up(self.hi, -m)).max(add_up(m, -self.lo))
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(self) -> bool {
        self.contains(0.0)
    }

    pub fn overlaps(self, other: Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn sign(self) -> SignVerdict {
        if self.lo > 0.0 {
            SignVerdict::Positive
        } else if self.hi < 0.0 {
            SignVerdict::Negative
        } else {
            SignVerdict::ZeroUncertifiable
        }
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval::new(0.0, (-self.lo).max(self.hi))
        }
    }

    pub fn sqr(self) -> Interval {
        let a = self.abs();
        Interval::new(mul_down(a.lo, a.lo), mul_up(a.hi, a.hi))
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByIntervalContainingZero);
        }
        let c = [(self.lo, rhs.lo), (self.lo, rhs.hi), (self.hi, rhs.lo), (self.hi, rhs.hi)];
        let lo = c.iter().map(|&(a, b)| div_down(a, b)).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|&(a, b)| div_up(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Ok(Interval::new(lo, hi))
    }

    /// Square root; a lower bound slightly below zero is clamped and flagged.
    pub fn sqrt_flagged(self) -> Result<(Interval, bool), IntervalError> {
        if self.hi < 0.0 {
            return Err(IntervalError::NegativeArgument);
        }
        let clamped = self.lo < 0.0;
        let lo = if clamped { 0.0 } else { sqrt_down(self.lo) };
        Ok((Interval::new(lo, sqrt_up(self.hi)), clamped))
    }

    pub fn sqrt(self) -> Result<Interval, IntervalError> {
        self.sqrt_flagged().map(|(r, _)| r)
    }

    /// Enclosure of `atan2(y, x)` for intervals with `y >= 0`, i.e. angles in `[0, pi]`.
    ///
    /// On the closed upper half-plane atan2 is monotone in each argument, so the
    /// extremes are attained at the corners. The libm result is widened by four
    /// ulps on each side.
    pub fn atan2_upper(y: Interval, x: Interval) -> Interval {
        let y = Interval::new(y.lo.max(0.0), y.hi.max(0.0));
        if y.lo == 0.0 && x.contains_zero() {
            return Interval::new(0.0, std::f64::consts::PI.next_up());
        }
        let corners = [(y.lo, x.lo), (y.lo, x.hi), (y.hi, x.lo), (y.hi, x.hi)];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(yy, xx) in &corners {
            let t = yy.atan2(xx);
            lo = lo.min(t);
            hi = hi.max(t);
        }
        for _ in 0..4 {
            lo = lo.next_down();
            hi = hi.next_up();
        }
        Interval::new(lo.max(0.0), hi.min(std::f64::consts::PI.next_up()))
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new(add_down(self.lo, rhs.lo), add_up(self.hi, rhs.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::new(add_down(self.lo, -rhs.hi), add_up(self.hi, -rhs.lo))
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [(self.lo, rhs.lo), (self.lo, rhs.hi), (self.hi, rhs.lo), (self.hi, rhs.hi)];
        let lo = c.iter().map(|&(a, b)| mul_down(a, b)).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|&(a, b)| mul_up(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }
}

/// Interval shadow of a point or vector in R^3.
pub type IVec3 = Vector3<Interval>;

pub fn ivec3(x: Interval, y: Interval, z: Interval) -> IVec3 {
    Vector3::new(x, y, z)
}

/// Componentwise enclosure of a float vector.
pub fn ivec_from(v: &Vector3<f64>, radius: f64) -> IVec3 {
    v.map(|c| Interval::from_value(c, radius))
}

pub fn ia_dot3(a: &IVec3, b: &IVec3) -> Interval {
    dot(a, b)
}

pub fn ia_cross3(a: &IVec3, b: &IVec3) -> IVec3 {
    cross(a, b)
}

pub fn ia_norm3(a: &IVec3) -> Interval {
    let s = a.x.sqr() + a.y.sqr() + a.z.sqr();
    // a sum of squares cannot be negative
    s.sqrt().unwrap_or(Interval::ZERO)
}

pub fn ia_sign(a: Interval) -> SignVerdict {
    a.sign()
}

/// Scalar type shared by the floating-point and the certified code paths.
pub trait Real:
    Copy + fmt::Debug + PartialEq + 'static + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn lift(x: f64) -> Self;
    fn try_div(self, rhs: Self) -> Result<Self, IntervalError>;
    fn try_sqrt(self) -> Result<Self, IntervalError>;
    fn midpoint(self) -> f64;
    /// True when the value cannot be told apart from zero at tolerance `tol`.
    fn near_zero(self, tol: f64) -> bool;
    /// Strictly positive, certified for intervals.
    fn is_positive(self) -> bool;
    /// Whether two evaluations of the same quantity can be equal.
    fn may_equal(self, other: Self) -> bool;
}

impl Real for f64 {
    fn lift(x: f64) -> f64 {
        x
    }
    fn try_div(self, rhs: f64) -> Result<f64, IntervalError> {
        if rhs == 0.0 {
            Err(IntervalError::DivisionByIntervalContainingZero)
        } else {
            Ok(self / rhs)
        }
    }
    fn try_sqrt(self) -> Result<f64, IntervalError> {
        if self < 0.0 {
            // rounding noise just below zero
            if self > -1e-12 {
                Ok(0.0)
            } else {
                Err(IntervalError::NegativeArgument)
            }
        } else {
            Ok(self.sqrt())
        }
    }
    fn midpoint(self) -> f64 {
        self
    }
    fn near_zero(self, tol: f64) -> bool {
        self.abs() <= tol
    }
    fn is_positive(self) -> bool {
        self > 0.0
    }
    fn may_equal(self, _other: f64) -> bool {
        true
    }
}

impl Real for Interval {
    fn lift(x: f64) -> Interval {
        Interval::point(x)
    }
    fn try_div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        self.checked_div(rhs)
    }
    fn try_sqrt(self) -> Result<Interval, IntervalError> {
        self.sqrt()
    }
    fn midpoint(self) -> f64 {
        self.mid()
    }
    fn near_zero(self, tol: f64) -> bool {
        self.contains_zero() || self.mid().abs() <= tol
    }
    fn is_positive(self) -> bool {
        self.lo > 0.0
    }
    fn may_equal(self, other: Interval) -> bool {
        self.overlaps(other)
    }
}

pub fn dot<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> T {
    a.x * b.x + a.y * b.y + a.z * b.z
}

pub fn cross<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> Vector3<T> {
    Vector3::new(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x)
}

pub fn norm<T: Real>(a: &Vector3<T>) -> Result<T, IntervalError> {
    dot(a, a).try_sqrt()
}

pub fn vsub<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> Vector3<T> {
    Vector3::new(a.x - b.x, a.y - b.y, a.z - b.z)
}

pub fn vadd<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> Vector3<T> {
    Vector3::new(a.x + b.x, a.y + b.y, a.z + b.z)
}

pub fn vscale<T: Real>(s: T, a: &Vector3<T>) -> Vector3<T> {
    Vector3::new(s * a.x, s * a.y, s * a.z)
}

pub fn vneg<T: Real>(a: &Vector3<T>) -> Vector3<T> {
    Vector3::new(-a.x, -a.y, -a.z)
}

pub fn lift_vec<T: Real>(v: &Vector3<f64>) -> Vector3<T> {
    Vector3::new(T::lift(v.x), T::lift(v.y), T::lift(v.z))
}
