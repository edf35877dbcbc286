//! Minimal 3-vector and symmetric 3×3 matrix algebra used by the rigid-body
//! equations.

use crate::scalar::Scalar;
use core::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

/// A column vector in ℝ³.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// Unit vector along the third (symmetry) axis.
    #[inline]
    pub fn e3() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    #[inline]
    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    /// Returns the vector scaled to unit length (unchanged if zero).
    #[inline]
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            self * (T::one() / n)
        } else {
            self
        }
    }

    /// Component-wise product (application of a diagonal matrix).
    #[inline]
    pub fn hadamard(self, o: Self) -> Self {
        Self::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    #[inline]
    pub fn max_abs(self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// A symmetric 3×3 matrix stored by its six independent entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym3<T> {
    pub xx: T,
    pub yy: T,
    pub zz: T,
    pub xy: T,
    pub xz: T,
    pub yz: T,
}

impl<T: Scalar> Sym3<T> {
    /// Diagonal matrix.
    pub fn diag(d: Vec3<T>) -> Self {
        let z = T::zero();
        Self {
            xx: d.x,
            yy: d.y,
            zz: d.z,
            xy: z,
            xz: z,
            yz: z,
        }
    }

    /// `s·Id − v⊗v` added to `self`.
    pub fn add_scaled_identity_minus_outer(self, s: T, v: Vec3<T>) -> Self {
        Self {
            xx: self.xx + s - v.x * v.x,
            yy: self.yy + s - v.y * v.y,
            zz: self.zz + s - v.z * v.z,
            xy: self.xy - v.x * v.y,
            xz: self.xz - v.x * v.z,
            yz: self.yz - v.y * v.z,
        }
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(
            self.xx * v.x + self.xy * v.y + self.xz * v.z,
            self.xy * v.x + self.yy * v.y + self.yz * v.z,
            self.xz * v.x + self.yz * v.y + self.zz * v.z,
        )
    }

    pub fn det(&self) -> T {
        self.xx * (self.yy * self.zz - self.yz * self.yz)
            - self.xy * (self.xy * self.zz - self.yz * self.xz)
            + self.xz * (self.xy * self.yz - self.yy * self.xz)
    }

    /// Solves `self · x = b` by the adjugate formula; `None` if singular.
    pub fn solve(&self, b: Vec3<T>) -> Option<Vec3<T>> {
        let c_xx = self.yy * self.zz - self.yz * self.yz;
        let c_xy = self.xz * self.yz - self.xy * self.zz;
        let c_xz = self.xy * self.yz - self.xz * self.yy;
        let c_yy = self.xx * self.zz - self.xz * self.xz;
        let c_yz = self.xy * self.xz - self.xx * self.yz;
        let c_zz = self.xx * self.yy - self.xy * self.xy;
        let det = self.xx * c_xx + self.xy * c_xy + self.xz * c_xz;
        let scale = self.xx.abs().max(self.yy.abs()).max(self.zz.abs());
        if !(det.abs() > T::eps() * scale * scale * scale) {
            return None;
        }
        let inv = T::one() / det;
        Some(Vec3::new(
            (c_xx * b.x + c_xy * b.y + c_xz * b.z) * inv,
            (c_xy * b.x + c_yy * b.y + c_yz * b.z) * inv,
            (c_xz * b.x + c_yz * b.y + c_zz * b.z) * inv,
        ))
    }
}
