//! Vectors and rotations in the tracking frame (right-handed, y-up, meters).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Maximum deviation from unit norm accepted for a rotation quaternion.
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, o: Self, u: T) -> Self {
        Self::new(
            self.x + (o.x - self.x) * u,
            self.y + (o.y - self.y) * u,
            self.z + (o.z - self.z) * u,
        )
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()), U::lit(self.z.as_f64()))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real + Serialize> Serialize for Vec3<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y, self.z].serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for Vec3<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y, z] = <[T; 3]>::deserialize(d)?;
        Ok(Self::new(x, y, z))
    }
}

/// Rotation quaternion `w + xi + yj + zk`.
///
/// Stored components are not forced to unit norm so that malformed input can be
/// carried to validation; operations that need a rotation check
/// [`UnitQuat::is_unit`] or go through [`UnitQuat::try_new`]. `q` and `-q`
/// denote the same rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuat<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Default for UnitQuat<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> UnitQuat<T> {
    pub fn identity() -> Self {
        Self::new_unchecked(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub const fn new_unchecked(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    /// Accepts components whose norm is within [`UNIT_TOLERANCE`] of one.
    pub fn try_new(w: T, x: T, y: T, z: T) -> Result<Self> {
        let q = Self::new_unchecked(w, x, y, z);
        if q.is_unit() {
            Ok(q)
        } else {
            Err(Error::InvalidQuaternion { norm: q.norm().as_f64() })
        }
    }

    /// Scales arbitrary non-zero components onto the unit sphere.
    pub fn normalize(w: T, x: T, y: T, z: T) -> Option<Self> {
        let q = Self::new_unchecked(w, x, y, z);
        let n = q.norm();
        if n > T::zero() && n.is_finite() {
            let inv = T::one() / n;
            Some(Self::new_unchecked(w * inv, x * inv, y * inv, z * inv))
        } else {
            None
        }
    }

    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let axis = axis.normalized().unwrap_or_else(Vec3::unit_z);
        let half = angle * T::lit(0.5);
        let s = half.sin();
        Self::new_unchecked(half.cos(), axis.x * s, axis.y * s, axis.z * s)
    }

    pub fn norm(self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn is_unit(self) -> bool {
        self.is_finite() && (self.norm() - T::one()).abs() <= T::lit(UNIT_TOLERANCE)
    }

    pub fn dot(self, o: Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn negated(self) -> Self {
        Self::new_unchecked(-self.w, -self.x, -self.y, -self.z)
    }

    pub fn conjugate(self) -> Self {
        Self::new_unchecked(self.w, -self.x, -self.y, -self.z)
    }

    /// Rotates `v` by this quaternion.
    pub fn rotate(self, v: Vec3<T>) -> Vec3<T> {
        let u = Vec3::new(self.x, self.y, self.z);
        let two = T::lit(2.0);
        let t = u.cross(v) * two;
        v + t * self.w + u.cross(t)
    }

    /// Shortest-arc spherical interpolation; `u = 0` gives `self`, `u = 1` gives `o`
    /// (or `-o`, the same rotation).
    pub fn slerp(self, o: Self, u: T) -> Self {
        if u == T::zero() {
            return self;
        }
        let mut cos = self.dot(o);
        let mut o = o;
        if cos < T::zero() {
            cos = -cos;
            o = o.negated();
        }
        let cos = cos.min(T::one());
        let theta = cos.acos();
        let sin = theta.sin();
        let (wa, wb) = if sin <= T::lit(1e-12) {
            (T::one() - u, u)
        } else {
            (((T::one() - u) * theta).sin() / sin, (u * theta).sin() / sin)
        };
        let q = Self::new_unchecked(
            self.w * wa + o.w * wb,
            self.x * wa + o.x * wb,
            self.y * wa + o.y * wb,
            self.z * wa + o.z * wb,
        );
        Self::normalize(q.w, q.x, q.y, q.z).unwrap_or(q)
    }

    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn cast<U: Real>(self) -> UnitQuat<U> {
        UnitQuat::new_unchecked(
            U::lit(self.w.as_f64()),
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Real> Mul for UnitQuat<T> {
    type Output = Self;
    /// Hamilton product: `self * o` applies `o` first.
    fn mul(self, o: Self) -> Self {
        Self::new_unchecked(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl<T: Real + Serialize> Serialize for UnitQuat<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.w, self.x, self.y, self.z].serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for UnitQuat<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [w, x, y, z] = <[T; 4]>::deserialize(d)?;
        Ok(Self::new_unchecked(w, x, y, z))
    }
}

/// Rotation angle between two orientations, in `[0, π]`.
///
/// Equal to `2·acos(min(1, |⟨a, b⟩|))`, so antipodal quaternions compare
/// equal. Evaluated as `4·atan2(|a − b|, |a + b|)` with `b` sign-aligned to
/// `a`, which keeps full precision for small angles where `acos` near 1 does not.
pub fn geodesic_angle<T: Real>(a: UnitQuat<T>, b: UnitQuat<T>) -> Result<T> {
    for q in [a, b] {
        if !q.is_unit() {
            return Err(Error::InvalidQuaternion { norm: q.norm().as_f64() });
        }
    }
    let b = if a.dot(b) < T::zero() { b.negated() } else { b };
    let (a, b) = (a.to_array(), b.to_array());
    let norm = |f: &dyn Fn(T, T) -> T| (0..4).map(|i| f(a[i], b[i]).powi(2)).sum::<T>().sqrt();
    let diff = norm(&|x, y| x - y);
    let sum = norm(&|x, y| x + y);
    Ok(T::lit(4.0) * diff.atan2(sum))
}
