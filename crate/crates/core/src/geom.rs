//! Planar kernel: vectors, half-translation isometries and angle helpers.
//!
//! Everything here is generic over the float type so the predicates can be
//! exercised in `f32` as well; the rest of the crate uses the `f64` aliases
//! exported from the crate root.

use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Float> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    /// Unit vector at planar angle `a`.
    pub fn from_angle(a: T) -> Self {
        Vec2::new(a.cos(), a.sin())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3d cross product; positive when `o` is
    /// counterclockwise from `self`.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> T {
        self.dot(self)
    }

    pub fn unit(self) -> Self {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn scale(self, k: T) -> Self {
        Vec2::new(self.x * k, self.y * k)
    }

    /// Left normal (rotation by +π/2).
    pub fn perp(self) -> Self {
        Vec2::new(-self.y, self.x)
    }

    /// Rotate counterclockwise by angle `a`.
    pub fn rotate(self, a: T) -> Self {
        let (s, c) = a.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Planar angle in (-π, π].
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }
}

impl<T: Float> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Float> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Float> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Float> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<T: Float> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

/// Counterclockwise angle from `a` to `b`, in [0, 2π).
pub fn angle_ccw<T: Float + FloatConst>(a: Vec2<T>, b: Vec2<T>) -> T {
    let t = a.cross(b).atan2(a.dot(b));
    if t < T::zero() {
        t + T::TAU()
    } else {
        t
    }
}

/// Signed angle from `a` to `b`, in (-π, π].
pub fn angle_signed<T: Float>(a: Vec2<T>, b: Vec2<T>) -> T {
    a.cross(b).atan2(a.dot(b))
}

/// Reduce `x` into [0, period).
pub fn wrap<T: Float>(x: T, period: T) -> T {
    let r = x % period;
    let r = if r < T::zero() { r + period } else { r };
    if r >= period {
        r - period
    } else {
        r
    }
}

/// Map `z ↦ rho·z + trans` with `rho = ±1`: the isometries that arise when
/// polygons are developed across translation and half-translation gluings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iso<T> {
    pub rho: T,
    pub trans: Vec2<T>,
}

impl<T: Float> Iso<T> {
    pub fn identity() -> Self {
        Iso { rho: T::one(), trans: Vec2::zero() }
    }

    pub fn apply(&self, p: Vec2<T>) -> Vec2<T> {
        p * self.rho + self.trans
    }

    pub fn apply_dir(&self, v: Vec2<T>) -> Vec2<T> {
        v * self.rho
    }

    pub fn inverse(&self) -> Self {
        // z = rho·(w - t)
        Iso { rho: self.rho, trans: -(self.trans * self.rho) }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Iso { rho: self.rho * other.rho, trans: self.apply(other.trans) }
    }
}

/// Signed area of a closed polygon (positive when counterclockwise).
pub fn signed_area<T: Float>(pts: &[Vec2<T>]) -> T {
    let n = pts.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc = acc + pts[i].cross(pts[(i + 1) % n]);
    }
    acc / (T::one() + T::one())
}

/// Intersection parameter `t` of the ray `dir·t` (from the origin) with the
/// line through `a` and `b`; `None` when parallel.
pub fn ray_line_param<T: Float>(dir: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> Option<T> {
    let e = b - a;
    let den = dir.cross(e);
    if den == T::zero() {
        return None;
    }
    Some(a.cross(e) / den)
}

/// Euclidean distance from the origin to the segment [a, b].
pub fn origin_segment_dist<T: Float>(a: Vec2<T>, b: Vec2<T>) -> T {
    let e = b - a;
    let l2 = e.norm2();
    if l2 == T::zero() {
        return a.norm();
    }
    let t = (-a.dot(e) / l2).max(T::zero()).min(T::one());
    (a + e * t).norm()
}
