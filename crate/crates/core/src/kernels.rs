//! Boundary densities and the kernels `Ω₁`, `Ω₂`, `Ω*`, `Ω**`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CornerDomainMap, CornerSpec, PointData};
use crate::quadrature::grid::QuadratureGrid;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fraction of `𝓡(Z)` below which `Ω₂` switches to the rearranged form.
pub const REARRANGE_FRACTION: f64 = 0.1;

/// One real density component on the circle.
#[derive(Clone)]
pub enum DensityComponent {
    Zero,
    /// Closed-form rule in the angle `θ` of `S = e^{iθ}`.
    Rule(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Values at the nodes of `grid`, interpolated elsewhere.
    Samples { grid: Arc<QuadratureGrid>, values: Vec<f64> },
}

impl fmt::Debug for DensityComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityComponent::Zero => write!(f, "Zero"),
            DensityComponent::Rule(_) => write!(f, "Rule(..)"),
            DensityComponent::Samples { values, .. } => write!(f, "Samples({} values)", values.len()),
        }
    }
}

impl DensityComponent {
    pub fn rule(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        DensityComponent::Rule(Arc::new(f))
    }

    /// Value at angle `theta`; samples outside the covered arcs read as 0.
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            DensityComponent::Zero => 0.0,
            DensityComponent::Rule(f) => f(theta),
            DensityComponent::Samples { grid, values } => grid.interpolate(values, theta).unwrap_or(0.0),
        }
    }

    /// Values at the nodes of `grid` (exact node values when sampled on it).
    pub fn at_nodes(&self, grid: &QuadratureGrid) -> Vec<f64> {
        match self {
            DensityComponent::Samples { grid: g, values } if g.as_ref() == grid => values.clone(),
            _ => grid.theta.iter().map(|t| self.eval(*t)).collect(),
        }
    }
}

/// The pair `(φ₁, φ₃)` of real densities, with the corner exponents `γⱼ` of
/// the weighted class it is meant to belong to.
#[derive(Clone, Debug)]
pub struct BoundaryDensity {
    pub phi1: DensityComponent,
    pub phi3: DensityComponent,
    pub gammas: Vec<f64>,
}

impl BoundaryDensity {
    pub fn zero() -> Self {
        BoundaryDensity { phi1: DensityComponent::Zero, phi3: DensityComponent::Zero, gammas: Vec::new() }
    }

    pub fn from_rules(
        phi1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi3: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        BoundaryDensity { phi1: DensityComponent::rule(phi1), phi3: DensityComponent::rule(phi3), gammas: Vec::new() }
    }

    pub fn from_samples(grid: Arc<QuadratureGrid>, phi1: Vec<f64>, phi3: Vec<f64>) -> Self {
        BoundaryDensity {
            phi1: DensityComponent::Samples { grid: grid.clone(), values: phi1 },
            phi3: DensityComponent::Samples { grid, values: phi3 },
            gammas: Vec::new(),
        }
    }

    pub fn with_gammas(mut self, gammas: Vec<f64>) -> Self {
        self.gammas = gammas;
        self
    }

    pub fn eval(&self, theta: f64) -> (f64, f64) {
        (self.phi1.eval(theta), self.phi3.eval(theta))
    }

    /// `sup |φ_l(S)| ∏|S − Xⱼ|^{γⱼ}` over the given angles, for both components.
    pub fn weighted_sup(&self, corners: &[Complex64], angles: &[f64]) -> f64 {
        let mut sup = 0.0f64;
        for t in angles {
            let s = Complex64::from_polar(1.0, *t);
            let weight: f64 =
                corners.iter().zip(&self.gammas).map(|(x, g)| (s - x).norm().powf(*g)).product();
            let (a, b) = self.eval(*t);
            sup = sup.max(a.abs() * weight).max(b.abs() * weight);
        }
        sup
    }
}

fn check_d(d: Complex64, s: &PointData, z: &PointData) -> Result<Complex64> {
    if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
        return Err(Error::MapViolation(format!(
            "difference quotient d = {d} is degenerate at S = {}, Z = {}",
            s.z, z.z
        )));
    }
    Ok(d)
}

/// `Ω₁^φ(S, Z) = φ(S)(σ'(S)/d(S, Z) − 1)`, evaluated as `φ·σ[S,S,Z](S − Z)/d`.
pub fn kernel_omega1(map: &CornerDomainMap, phi: f64, s: &PointData, z: &PointData) -> Result<Complex64> {
    if phi == 0.0 || s.z == z.z {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let d = check_d(map.d_at(s, z), s, z)?;
    Ok(phi * map.dd2_at(s, z) * (s.z - z.z) / d)
}

/// `Ω₂^φ(S, Z) = (φ/2)(σ'(S) d₂/d² − σ₂'(S)/d)`, the direct form.
pub fn kernel_omega2_direct(map: &CornerDomainMap, phi: f64, s: &PointData, z: &PointData) -> Result<Complex64> {
    if phi == 0.0 || s.z == z.z {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let d = check_d(map.d_at(s, z), s, z)?;
    let (_, d2) = map.d12_at(s, z);
    let (_, s2) = map.contour_derivatives_at(s);
    Ok(0.5 * phi * (s.dsigma * d2 / (d * d) - s2 / d))
}

/// `Ω₂^φ(S, Z) = (φ/2)(d₂(σ₁'(S) − d₁) − d₁(σ₂'(S) − d₂))/d²`, the rearranged form.
pub fn kernel_omega2_rearranged(
    map: &CornerDomainMap,
    phi: f64,
    s: &PointData,
    z: &PointData,
) -> Result<Complex64> {
    if phi == 0.0 || s.z == z.z {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let d = check_d(map.d_at(s, z), s, z)?;
    let (d1, d2) = map.d12_at(s, z);
    let (s1, s2) = map.contour_derivatives_at(s);
    Ok(0.5 * phi * (d2 * (s1 - d1) - d1 * (s2 - d2)) / (d * d))
}

/// `Ω₂^φ`, switching to the rearranged form when `|S − Z| < 0.1·𝓡(Z)`.
pub fn kernel_omega2(map: &CornerDomainMap, phi: f64, s: &PointData, z: &PointData) -> Result<Complex64> {
    if (s.z - z.z).norm() < REARRANGE_FRACTION * map.r(z.z) {
        kernel_omega2_rearranged(map, phi, s, z)
    } else {
        kernel_omega2_direct(map, phi, s, z)
    }
}

/// `Ω₁^1(S,Z)/(S − Z)` and `Ω₂^1(S,Z)/(S − Z)`: the unit-density kernels divided
/// by `S − Z`. At `S = Z` (on the circle) their limits along the circle.
pub fn kernel_quotients(map: &CornerDomainMap, s: &PointData, z: &PointData) -> Result<(Complex64, Complex64)> {
    let d = check_d(map.d_at(s, z), s, z)?;
    let q1 = map.dd2_at(s, z) / d;
    let h = s.z - z.z;
    let q2 = if h.norm() == 0.0 {
        let (c1, c2) = map.contour_derivatives_at(z);
        let (l1, l2) = map.contour_second_at(z);
        0.5 * (c2 * l1 - c1 * l2) / (d * d)
    } else {
        kernel_omega2(map, 1.0, s, z)? / h
    };
    Ok((q1, q2))
}

/// `Ω*^φ = Ω₁^{φ₁} + 2iΩ₂^{φ₁} − 2Ω₂^{φ₃}` at densities `(phi1, phi3)` taken at `S`.
pub fn kernel_omega_star(
    map: &CornerDomainMap,
    phi1: f64,
    phi3: f64,
    s: &PointData,
    z: &PointData,
) -> Result<Complex64> {
    let o1 = kernel_omega1(map, phi1, s, z)?;
    let o2 = kernel_omega2(map, 1.0, s, z)?;
    Ok(o1 + 2.0 * I * phi1 * o2 - 2.0 * phi3 * o2)
}

/// `Ω**^φ = Ω₁^{φ₃} − 2iΩ₂^{φ₃} − 2Ω₂^{φ₁}`.
pub fn kernel_omega_star_star(
    map: &CornerDomainMap,
    phi1: f64,
    phi3: f64,
    s: &PointData,
    z: &PointData,
) -> Result<Complex64> {
    let o1 = kernel_omega1(map, phi3, s, z)?;
    let o2 = kernel_omega2(map, 1.0, s, z)?;
    Ok(o1 - 2.0 * I * phi3 * o2 - 2.0 * phi1 * o2)
}

/// `Ω*` and `Ω**` for a [`BoundaryDensity`] at `S = e^{iθ}`.
pub fn omega_pair(
    map: &CornerDomainMap,
    density: &BoundaryDensity,
    theta: f64,
    s: &PointData,
    z: &PointData,
) -> Result<(Complex64, Complex64)> {
    let (p1, p3) = density.eval(theta);
    Ok((kernel_omega_star(map, p1, p3, s, z)?, kernel_omega_star_star(map, p1, p3, s, z)?))
}

/// Exponent families attached to a corner set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub beta: f64,
    pub beta0: f64,
    pub gammas: Vec<f64>,
    pub gamma_primes: Vec<f64>,
}

/// `γⱼ = (βⱼ + 1)αⱼ`, `γⱼ' = −βⱼ` for `βⱼ < 0` (else 0), the combined `β`
/// taken over both branches and `β₀ = max(0, −βⱼ)`. Fails unless `β < 1` and
/// `γⱼ + γⱼ' < 1`.
pub fn exponent_bookkeeping(corners: &[CornerSpec]) -> Result<Exponents> {
    let mut out = Exponents { beta: 0.0, beta0: 0.0, gammas: Vec::new(), gamma_primes: Vec::new() };
    for c in corners {
        c.validate()?;
        let gamma = c.gamma();
        let gamma_prime = if c.beta < 0.0 { -c.beta } else { 0.0 };
        let branch = if c.beta >= 0.0 { gamma } else { gamma - c.beta };
        out.beta = out.beta.max(branch);
        out.beta0 = out.beta0.max(-c.beta);
        if gamma + gamma_prime >= 1.0 {
            return Err(Error::ExponentOutOfRange(format!(
                "gamma + gamma' = {} must be below 1 at the corner at angle {}",
                gamma + gamma_prime,
                c.angle
            )));
        }
        out.gammas.push(gamma);
        out.gamma_primes.push(gamma_prime);
    }
    if out.beta >= 1.0 {
        return Err(Error::ExponentOutOfRange(format!("combined exponent beta = {} must be below 1", out.beta)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_kernels() {
        let map = CornerDomainMap::identity();
        let (s, z) = (map.point(c(1.0, 0.0)), map.point(c(0.0, 0.0)));
        assert_eq!(kernel_omega1(&map, 1.0, &s, &z).unwrap(), c(0.0, 0.0));
        let o2 = kernel_omega2_direct(&map, 1.0, &s, &z).unwrap();
        assert!((o2 - c(0.0, 0.5)).norm() < 1e-15);
        assert_eq!(kernel_omega2(&map, 0.0, &s, &z).unwrap(), c(0.0, 0.0));
        let star = kernel_omega_star(&map, 1.0, 0.0, &s, &z).unwrap();
        assert!((star - 2.0 * I * o2).norm() < 1e-15);
        assert_eq!(kernel_omega_star(&map, 0.0, 0.0, &s, &z).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn cusp_omega1_value() {
        let map = CornerDomainMap::cusp(0.0).unwrap();
        let (s, z) = (map.point(c(1.0, 0.0)), map.point(c(0.0, 0.0)));
        let v = kernel_omega1(&map, 1.0, &s, &z).unwrap();
        assert!((v - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn omega1_vanishes_linearly() {
        let map = CornerDomainMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.2, 0.1)]).unwrap();
        let z = map.point(Complex64::from_polar(1.0, 0.3));
        let slopes: Vec<f64> = (10..20)
            .map(|k| {
                let h = 2f64.powi(-k);
                let s = map.point(Complex64::from_polar(1.0, 0.3 + h));
                kernel_omega1(&map, 1.0, &s, &z).unwrap().norm() / (s.z - z.z).norm()
            })
            .collect();
        let first = slopes[0];
        for v in &slopes {
            assert!((v - first).abs() < 1e-2 * first);
        }
    }

    #[test]
    fn quotient_diagonal_limits() {
        let map = CornerDomainMap::cusp(0.0).unwrap();
        let z = map.point(Complex64::from_polar(1.0, 1.1));
        let (d1, d2) = kernel_quotients(&map, &z, &z).unwrap();
        let s = map.point(Complex64::from_polar(1.0, 1.1 + 1e-5));
        let (n1, n2) = kernel_quotients(&map, &s, &z).unwrap();
        assert!((d1 - n1).norm() < 1e-4);
        assert!((d2 - n2).norm() < 1e-4);
    }

    #[test]
    fn exponent_examples() {
        let e = exponent_bookkeeping(&[CornerSpec { angle: PI, beta: 1.0, alpha: 0.4 }]).unwrap();
        assert!((e.gammas[0] - 0.8).abs() < 1e-15);
        assert_eq!(e.gamma_primes[0], 0.0);
        assert!((e.beta - 0.8).abs() < 1e-15);
        assert_eq!(e.beta0, 0.0);
        let e = exponent_bookkeeping(&[CornerSpec { angle: 0.0, beta: -0.5, alpha: 0.6 }]).unwrap();
        assert!((e.gammas[0] - 0.3).abs() < 1e-15);
        assert!((e.gamma_primes[0] - 0.5).abs() < 1e-15);
        assert!((e.beta - 0.8).abs() < 1e-15);
        assert!((e.beta0 - 0.5).abs() < 1e-15);
        assert!(matches!(
            exponent_bookkeeping(&[CornerSpec { angle: 0.0, beta: 1.0, alpha: 0.6 }]),
            Err(Error::ExponentOutOfRange(_))
        ));
    }

    #[test]
    fn weighted_sup_of_corner_singularity() {
        let x = c(-1.0, 0.0);
        let density = BoundaryDensity::from_rules(
            move |t| (Complex64::from_polar(1.0, t) - x).norm().powf(-0.5),
            |_| 0.0,
        )
        .with_gammas(vec![0.5]);
        let coarse: Vec<f64> = (0..1000).map(|k| PI + 1e-6 + k as f64 * 1e-3).collect();
        let fine: Vec<f64> = (0..4000).map(|k| PI + 1e-9 + k as f64 * 2.5e-4).collect();
        let a = density.weighted_sup(&[x], &coarse);
        let b = density.weighted_sup(&[x], &fine);
        assert!((a - 1.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-9);
    }
}
