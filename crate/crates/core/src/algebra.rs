//! Arithmetic in the commutative biharmonic algebra over the complex field.
//!
//! Elements are stored in the biharmonic basis `{e1, e2}` with the
//! multiplication table `e1² = e1`, `e1 e2 = e2`, `e2² = e1 + 2i e2`.
//! The algebra is isomorphic to the dual numbers over ℂ: writing
//! `n = e2 − i e1` (so that `n² = 0`), an element `z1 e1 + z2 e2` equals
//! `w e1 + v n` with `w = z1 + i z2` and `v = z2`. That "spectral" form is
//! what makes inversion cheap, but it is only ever a conversion.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Scale-relative cutoff on `|z1 + i z2|` below which an element is treated
/// as a zero divisor.
pub const INVERTIBILITY_TOLERANCE: f64 = 1e-14;

/// An element `z1 e1 + z2 e2` of the biharmonic algebra.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BihNumber {
    pub z1: Complex64,
    pub z2: Complex64,
}

/// Real components of `U1 e1 + U2 i e1 + U3 e2 + U4 i e2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonogenicComponents {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
}

impl BihNumber {
    pub const ZERO: BihNumber = BihNumber::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    /// The unit `e1`.
    pub const E1: BihNumber = BihNumber::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    pub const E2: BihNumber = BihNumber::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    /// The nilpotent `ρ = 2 e1 + 2i e2`.
    pub const RHO: BihNumber = BihNumber::new(Complex64::new(2.0, 0.0), Complex64::new(0.0, 2.0));

    pub const fn new(z1: Complex64, z2: Complex64) -> Self {
        BihNumber { z1, z2 }
    }

    /// `c e1` for a complex scalar `c`.
    pub fn scalar(c: Complex64) -> Self {
        BihNumber::new(c, Complex64::new(0.0, 0.0))
    }

    /// Builds an element from the spectral coordinates `(w, v)` of `w e1 + v n`.
    pub fn from_spectral(w: Complex64, v: Complex64) -> Self {
        BihNumber::new(w - I * v, v)
    }

    /// Spectral coordinates `(w, v)` with `w = z1 + i z2`, `v = z2`.
    pub fn spectral(self) -> (Complex64, Complex64) {
        (self.z1 + I * self.z2, self.z2)
    }

    /// Euclidean norm `sqrt(|z1|² + |z2|²)`.
    pub fn norm(self) -> f64 {
        (self.z1.norm_sqr() + self.z2.norm_sqr()).sqrt()
    }

    pub fn components(self) -> MonogenicComponents {
        MonogenicComponents { u1: self.z1.re, u2: self.z1.im, u3: self.z2.re, u4: self.z2.im }
    }

    pub fn inverse(self) -> Result<BihNumber> {
        let (w, v) = self.spectral();
        let modulus = w.norm();
        if modulus <= INVERTIBILITY_TOLERANCE * self.norm().max(1.0) {
            return Err(Error::NonInvertible { modulus });
        }
        let inv_w = w.inv();
        Ok(BihNumber::from_spectral(inv_w, -v * inv_w * inv_w))
    }

    /// Non-negative integer power by repeated multiplication.
    pub fn powu(self, n: u32) -> BihNumber {
        (0..n).fold(BihNumber::E1, |acc, _| acc * self)
    }

    pub fn max_abs_diff(self, other: BihNumber) -> f64 {
        (self.z1 - other.z1).norm().max((self.z2 - other.z2).norm())
    }
}

impl MonogenicComponents {
    pub fn to_bih(self) -> BihNumber {
        BihNumber::new(Complex64::new(self.u1, self.u2), Complex64::new(self.u3, self.u4))
    }
}

impl From<MonogenicComponents> for BihNumber {
    fn from(c: MonogenicComponents) -> Self {
        c.to_bih()
    }
}

impl fmt::Display for BihNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})e1 + ({})e2", self.z1, self.z2)
    }
}

impl Add for BihNumber {
    type Output = BihNumber;
    fn add(self, rhs: BihNumber) -> BihNumber {
        BihNumber::new(self.z1 + rhs.z1, self.z2 + rhs.z2)
    }
}

impl AddAssign for BihNumber {
    fn add_assign(&mut self, rhs: BihNumber) {
        *self = *self + rhs;
    }
}

impl Sub for BihNumber {
    type Output = BihNumber;
    fn sub(self, rhs: BihNumber) -> BihNumber {
        BihNumber::new(self.z1 - rhs.z1, self.z2 - rhs.z2)
    }
}

impl SubAssign for BihNumber {
    fn sub_assign(&mut self, rhs: BihNumber) {
        *self = *self - rhs;
    }
}

impl Neg for BihNumber {
    type Output = BihNumber;
    fn neg(self) -> BihNumber {
        BihNumber::new(-self.z1, -self.z2)
    }
}

impl Mul for BihNumber {
    type Output = BihNumber;
    fn mul(self, rhs: BihNumber) -> BihNumber {
        let (a1, a2, b1, b2) = (self.z1, self.z2, rhs.z1, rhs.z2);
        BihNumber::new(a1 * b1 + a2 * b2, a1 * b2 + a2 * b1 + 2.0 * I * a2 * b2)
    }
}

impl MulAssign for BihNumber {
    fn mul_assign(&mut self, rhs: BihNumber) {
        *self = *self * rhs;
    }
}

impl Mul<Complex64> for BihNumber {
    type Output = BihNumber;
    fn mul(self, rhs: Complex64) -> BihNumber {
        BihNumber::new(self.z1 * rhs, self.z2 * rhs)
    }
}

impl Mul<f64> for BihNumber {
    type Output = BihNumber;
    fn mul(self, rhs: f64) -> BihNumber {
        BihNumber::new(self.z1 * rhs, self.z2 * rhs)
    }
}

impl Div<f64> for BihNumber {
    type Output = BihNumber;
    fn div(self, rhs: f64) -> BihNumber {
        BihNumber::new(self.z1 / rhs, self.z2 / rhs)
    }
}

impl std::iter::Sum for BihNumber {
    fn sum<It: Iterator<Item = BihNumber>>(iter: It) -> BihNumber {
        iter.fold(BihNumber::ZERO, |a, b| a + b)
    }
}

/// `x e1 + y e2`, the image of the plane point `(x, y)` in the biharmonic plane.
pub fn embed_point(x: f64, y: f64) -> BihNumber {
    BihNumber::new(Complex64::new(x, 0.0), Complex64::new(y, 0.0))
}

/// `ζⁿ`.
pub fn monomial(zeta: BihNumber, n: u32) -> BihNumber {
    zeta.powu(n)
}

/// `(τ − ζ)⁻¹`.
///
/// With `points = Some((σ(S), σ(Z)))`, where `τ` and `ζ` are the images of the
/// complex points `σ(S)` and `σ(Z)`, this evaluates the split form
/// `1/(σ(S) − σ(Z)) + (iρ/2)(σ₂(S) − σ₂(Z))/(σ(S) − σ(Z))²` instead of a
/// general inverse.
pub fn inverse_difference(
    tau: BihNumber,
    zeta: BihNumber,
    points: Option<(Complex64, Complex64)>,
) -> Result<BihNumber> {
    match points {
        Some((sigma_s, sigma_z)) => {
            let delta = sigma_s - sigma_z;
            let scale = sigma_s.norm().max(sigma_z.norm()).max(1.0);
            if delta.norm() <= INVERTIBILITY_TOLERANCE * scale {
                return Err(Error::NonInvertible { modulus: delta.norm() });
            }
            let inv = delta.inv();
            let coeff = I * 0.5 * (sigma_s.im - sigma_z.im) * inv * inv;
            Ok(BihNumber::scalar(inv) + BihNumber::RHO * coeff)
        }
        None => (tau - zeta).inverse(),
    }
}

/// Values of a function sampled on a uniform rectangular grid, stored row by row
/// (`x` varies fastest).
#[derive(Clone, Debug)]
pub struct SampleGrid<T> {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<T>,
}

impl<T: Copy> SampleGrid<T> {
    pub fn from_fn(x0: f64, y0: f64, h: f64, nx: usize, ny: usize, f: impl Fn(f64, f64) -> T) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(x0 + i as f64 * h, y0 + j as f64 * h));
            }
        }
        SampleGrid { x0, y0, h, nx, ny, values }
    }

    /// Square grid covering `[-half_width, half_width]²` with step `h`.
    pub fn centered(half_width: f64, h: f64, f: impl Fn(f64, f64) -> T) -> Self {
        let n = (2.0 * half_width / h).round() as usize + 1;
        Self::from_fn(-half_width, -half_width, h, n, n, f)
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[j * self.nx + i]
    }

    fn require(&self, min: usize) -> Result<()> {
        let actual = self.nx.min(self.ny);
        if actual < min {
            return Err(Error::GridTooSmall { required: min, actual });
        }
        Ok(())
    }
}

/// Max over interior points of `‖∂F/∂y − (∂F/∂x) e2‖` with centred differences.
///
/// Exact monogenic samples give `O(h²)`; anything bounded away from zero flags
/// a non-monogenic field.
pub fn cauchy_riemann_residual(f: &SampleGrid<BihNumber>) -> Result<f64> {
    f.require(3)?;
    let inv = 0.5 / f.h;
    let mut worst = 0.0f64;
    for j in 1..f.ny - 1 {
        for i in 1..f.nx - 1 {
            let dx = (f.at(i + 1, j) - f.at(i - 1, j)) * inv;
            let dy = (f.at(i, j + 1) - f.at(i, j - 1)) * inv;
            worst = worst.max((dy - dx * BihNumber::E2).norm());
        }
    }
    Ok(worst)
}

/// Max over admissible interior points of the 13-point `Δ²` stencil divided by `h⁴`.
pub fn biharmonic_residual(u: &SampleGrid<f64>) -> Result<f64> {
    u.require(5)?;
    let h4 = u.h.powi(4);
    let mut worst = 0.0f64;
    for j in 2..u.ny - 2 {
        for i in 2..u.nx - 2 {
            let c = u.at(i, j);
            let axial = u.at(i + 1, j) + u.at(i - 1, j) + u.at(i, j + 1) + u.at(i, j - 1);
            let diagonal = u.at(i + 1, j + 1) + u.at(i - 1, j + 1) + u.at(i + 1, j - 1) + u.at(i - 1, j - 1);
            let far = u.at(i + 2, j) + u.at(i - 2, j) + u.at(i, j + 2) + u.at(i, j - 2);
            let stencil = 20.0 * c - 8.0 * axial + 2.0 * diagonal + far;
            worst = worst.max((stencil / h4).abs());
        }
    }
    Ok(worst)
}
