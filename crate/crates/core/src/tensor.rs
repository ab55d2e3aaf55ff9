//! Small fixed-size linear algebra: 2-vectors, general 2×2 tensors and
//! symmetric 2×2 matrices.

use std::ops::{Add, Mul, Sub};

pub type Vec2 = [f64; 2];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// General (not necessarily symmetric) 2×2 tensor, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor2 {
    pub m: [[f64; 2]; 2],
}

impl Tensor2 {
    pub const fn new(xx: f64, xy: f64, yx: f64, yy: f64) -> Self {
        Tensor2 { m: [[xx, xy], [yx, yy]] }
    }

    pub const fn identity() -> Self {
        Tensor2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub const fn zero() -> Self {
        Tensor2::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn symmetric(xx: f64, xy: f64, yy: f64) -> Self {
        Tensor2::new(xx, xy, xy, yy)
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Frobenius inner product `a : b`.
    pub fn ddot(&self, other: &Tensor2) -> f64 {
        let (a, b) = (&self.m, &other.m);
        a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn transpose(&self) -> Tensor2 {
        Tensor2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    /// Skew part measure `τ12 − τ21`.
    pub fn asym(&self) -> f64 {
        self.m[0][1] - self.m[1][0]
    }

    pub fn scale(&self, s: f64) -> Tensor2 {
        let m = &self.m;
        Tensor2::new(s * m[0][0], s * m[0][1], s * m[1][0], s * m[1][1])
    }

    pub fn row(&self, i: usize) -> Vec2 {
        self.m[i]
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    fn add(self, o: Tensor2) -> Tensor2 {
        let (a, b) = (self.m, o.m);
        Tensor2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    fn sub(self, o: Tensor2) -> Tensor2 {
        self + o.scale(-1.0)
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Tensor2;
    fn mul(self, s: f64) -> Tensor2 {
        self.scale(s)
    }
}

/// Symmetric 2×2 matrix stored as `(a11, a12, a22)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        SymMat2 { a11, a12, a22 }
    }

    pub const fn identity() -> Self {
        SymMat2::new(1.0, 0.0, 1.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMat2::new(s * self.a11, s * self.a12, s * self.a22)
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn inverse(&self) -> Option<SymMat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(SymMat2::new(self.a22 / d, -self.a12 / d, self.a11 / d))
    }

    /// Eigenvalues in ascending order, closed form.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.a11 + self.a22);
        let half_diff = 0.5 * (self.a11 - self.a22);
        let rad = half_diff.hypot(self.a12);
        (mean - rad, mean + rad)
    }

    pub fn is_spd(&self) -> bool {
        self.a11 > 0.0 && self.det() > 0.0
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }

    /// `a^T M b`.
    pub fn bilinear(&self, a: Vec2, b: Vec2) -> f64 {
        dot(a, self.apply(b))
    }
}
