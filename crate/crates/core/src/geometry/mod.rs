//! Conformal maps of the unit disk onto domains with corners, and the
//! difference quotients built from them.

pub mod modulus;

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{adaptive_best, cached_gauss, gauss_jacobi_unit, AdaptiveOptions};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Chord length below which the corner-exponent family evaluates `d` by
/// integrating `σ'` along the chord instead of dividing cached values.
const CHORD_SWITCH: f64 = 0.05;

/// A corner preimage `X = e^{i angle}` with the exponent of `σ'` there and the
/// growth exponent allowed for the boundary data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerSpec {
    pub angle: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl CornerSpec {
    pub fn new(angle: f64, beta: f64, alpha: f64) -> Result<Self> {
        let c = CornerSpec { angle, beta, alpha };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > -1.0 && self.beta <= 1.0) {
            return Err(Error::ExponentOutOfRange(format!(
                "beta = {} at angle {} must lie in the admissible range (-1, 1]",
                self.beta, self.angle
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::ExponentOutOfRange(format!("alpha = {} must be non-negative", self.alpha)));
        }
        let bound = if self.beta >= 0.0 { 1.0 / (self.beta + 1.0) } else { 1.0 };
        if self.alpha >= bound {
            return Err(Error::ExponentOutOfRange(format!(
                "alpha = {} must be below {} for beta = {}",
                self.alpha, bound, self.beta
            )));
        }
        if !self.angle.is_finite() {
            return Err(Error::Config(format!("corner angle {} is not finite", self.angle)));
        }
        Ok(())
    }

    pub fn x(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle)
    }

    /// `γ = (β + 1)α`.
    pub fn gamma(&self) -> f64 {
        (self.beta + 1.0) * self.alpha
    }
}

/// How `σ` is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MapRule {
    Identity,
    /// `σ(Z) = (Z + 1)²`.
    Cusp,
    /// `σ(Z) = Σ a_k Z^k`.
    Polynomial { coeffs: Vec<Complex64> },
    /// `σ'(Z) = scale · ∏ (1 − Z X̄_j)^{β_j}` with `σ(0) = 0`.
    CornerFamily { scale: Complex64 },
}

/// Map value and first two derivatives at one point, cached so kernels can
/// reuse them across many pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointData {
    pub z: Complex64,
    pub sigma: Complex64,
    pub dsigma: Complex64,
    pub d2sigma: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CornerDomainMap {
    pub name: String,
    pub rule: MapRule,
    pub corners: Vec<CornerSpec>,
    r0: f64,
    /// `σ` at equally spaced boundary points, for maps given through `σ'` only.
    anchors: Arc<Vec<Option<Complex64>>>,
    /// Local representations around each corner, for maps given through `σ'` only.
    patches: Arc<Vec<CornerPatch>>,
}

/// Near the corner `X`, with `u = 1 − Z X̄` and `G = σ'/u^β` analytic there,
/// `σ(Z) = σ(X) − X F(u)` where `F(u) = u^{β+1} ∫₀¹ t^β G(ut) dt`. The integral
/// is a Gauss–Jacobi sum, so `σ` and its divided differences keep their
/// relative accuracy however close `Z` comes to the corner.
#[derive(Clone, Debug, PartialEq)]
struct CornerPatch {
    /// The representation is used for `|u|` below this.
    radius: f64,
    sigma_x: Complex64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Gauss–Jacobi nodes per corner patch.
const PATCH_NODES: usize = 24;

/// Number of cached boundary values of `σ` for the corner family.
const ANCHORS: usize = 256;

impl CornerDomainMap {
    fn build(name: &str, rule: MapRule, corners: Vec<CornerSpec>) -> Result<Self> {
        for c in &corners {
            c.validate()?;
        }
        let mut r0 = f64::INFINITY;
        for (k, a) in corners.iter().enumerate() {
            for b in &corners[k + 1..] {
                r0 = r0.min((a.x() - b.x()).norm());
            }
        }
        if corners.len() <= 1 {
            r0 = 1.0;
        }
        if r0 < 1e-8 {
            return Err(Error::Config("corner preimages must be distinct".into()));
        }
        Ok(CornerDomainMap {
            name: name.to_string(),
            rule,
            corners,
            r0,
            anchors: Arc::new(Vec::new()),
            patches: Arc::new(Vec::new()),
        })
    }

    pub fn identity() -> Self {
        Self::build("identity", MapRule::Identity, Vec::new()).expect("identity map is valid")
    }

    /// `σ(Z) = (Z + 1)²` with its cusp at `X = −1` (`β = 1`) and data exponent `alpha`.
    pub fn cusp(alpha: f64) -> Result<Self> {
        Self::build("cusp", MapRule::Cusp, vec![CornerSpec::new(PI, 1.0, alpha)?])
    }

    /// Polynomial map without corners. `σ'` must not vanish on the closed disk.
    pub fn polynomial(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Config("polynomial map needs at least a linear term".into()));
        }
        let map = Self::build("polynomial", MapRule::Polynomial { coeffs }, Vec::new())?;
        map.check_univalent(256)?;
        Ok(map)
    }

    /// Map defined through `σ'(Z) = scale · ∏ (1 − Z X̄_j)^{β_j}`.
    pub fn corner_family(corners: Vec<CornerSpec>, scale: Complex64) -> Result<Self> {
        if corners.is_empty() {
            return Err(Error::Config("corner family needs at least one corner".into()));
        }
        if scale.norm() == 0.0 {
            return Err(Error::Config("corner family scale must be nonzero".into()));
        }
        let mut map = Self::build("corner-family", MapRule::CornerFamily { scale }, corners)?;
        let spacing = TAU / ANCHORS as f64;
        let anchors: Vec<Option<Complex64>> = (0..ANCHORS)
            .map(|k| {
                let a = Complex64::from_polar(1.0, spacing * k as f64);
                if map.r(a) < spacing {
                    return None;
                }
                Some(a * map.chord_integral(Complex64::new(0.0, 0.0), a, false))
            })
            .collect();
        map.anchors = Arc::new(anchors);
        // G is analytic for |u| below the distance to the nearest other corner.
        let radius = 0.25 * map.r0.min(2.0);
        let patches = (0..map.corners.len())
            .map(|k| {
                let c = &map.corners[k];
                let (nodes, weights) = gauss_jacobi_unit(PATCH_NODES, c.beta);
                let mut patch = CornerPatch { radius, sigma_x: Complex64::new(0.0, 0.0), nodes, weights };
                let z0 = c.x() * (1.0 - radius);
                let sigma_z0 = z0 * map.chord_integral(Complex64::new(0.0, 0.0), z0, false);
                patch.sigma_x = sigma_z0 + c.x() * map.patch_f(k, &patch, Complex64::new(radius, 0.0));
                patch
            })
            .collect();
        map.patches = Arc::new(patches);
        map.check_univalent(256)?;
        Ok(map)
    }

    /// Looks a map up by catalog name. `params` are the polynomial coefficients
    /// (as `[re, im]` pairs) or the corner-family scale; `corners` apply to the
    /// corner family, and the first entry's `alpha` to the cusp.
    pub fn from_catalog(name: &str, params: &[[f64; 2]], corners: &[CornerSpec]) -> Result<Self> {
        match name {
            "identity" => {
                if !corners.is_empty() {
                    return Err(Error::Config("identity map takes no corners".into()));
                }
                Ok(Self::identity())
            }
            "cusp" => {
                let alpha = match corners {
                    [] => 0.0,
                    [c] => {
                        c.validate()?;
                        if (c.beta - 1.0).abs() > 1e-12 || (Complex64::from_polar(1.0, c.angle) + 1.0).norm() > 1e-12 {
                            return Err(Error::Config("cusp map has its corner at angle pi with beta = 1".into()));
                        }
                        c.alpha
                    }
                    _ => return Err(Error::Config("cusp map has exactly one corner".into())),
                };
                Self::cusp(alpha)
            }
            "polynomial" => {
                if !corners.is_empty() {
                    return Err(Error::Config("polynomial map takes no corners".into()));
                }
                Self::polynomial(params.iter().map(|p| Complex64::new(p[0], p[1])).collect())
            }
            "corner-family" => {
                let scale = params.first().map(|p| Complex64::new(p[0], p[1])).unwrap_or(Complex64::new(1.0, 0.0));
                Self::corner_family(corners.to_vec(), scale)
            }
            other => Err(Error::Config(format!(
                "unknown map '{other}' (expected identity, cusp, polynomial or corner-family)"
            ))),
        }
    }

    /// Minimum pairwise distance of corner preimages, 1 with fewer than two corners.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Distance from `z` to the nearest corner preimage; 1 for a map without corners.
    pub fn r(&self, z: Complex64) -> f64 {
        if self.corners.is_empty() {
            return 1.0;
        }
        self.corners.iter().map(|c| (z - c.x()).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn corner_points(&self) -> Vec<Complex64> {
        self.corners.iter().map(|c| c.x()).collect()
    }

    pub fn sigma_prime(&self, z: Complex64) -> Complex64 {
        match &self.rule {
            MapRule::Identity => Complex64::new(1.0, 0.0),
            MapRule::Cusp => 2.0 * (z + 1.0),
            MapRule::Polynomial { coeffs } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, a) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * z + a * k as f64;
                }
                acc
            }
            MapRule::CornerFamily { scale } => {
                let mut v = *scale;
                for c in &self.corners {
                    let base = 1.0 - z * c.x().conj();
                    if base.norm() == 0.0 {
                        return if c.beta > 0.0 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            Complex64::new(f64::INFINITY, 0.0)
                        };
                    }
                    v *= base.powf(c.beta);
                }
                v
            }
        }
    }

    pub fn sigma_second(&self, z: Complex64) -> Complex64 {
        match &self.rule {
            MapRule::Identity => Complex64::new(0.0, 0.0),
            MapRule::Cusp => Complex64::new(2.0, 0.0),
            MapRule::Polynomial { coeffs } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, a) in coeffs.iter().enumerate().skip(2).rev() {
                    acc = acc * z + a * (k * (k - 1)) as f64;
                }
                acc
            }
            MapRule::CornerFamily { .. } => {
                let log_derivative: Complex64 = self
                    .corners
                    .iter()
                    .map(|c| -c.beta * c.x().conj() / (1.0 - z * c.x().conj()))
                    .sum();
                self.sigma_prime(z) * log_derivative
            }
        }
    }

    pub fn sigma(&self, z: Complex64) -> Complex64 {
        match &self.rule {
            MapRule::Identity => z,
            MapRule::Cusp => (z + 1.0) * (z + 1.0),
            MapRule::Polynomial { coeffs } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in coeffs.iter().rev() {
                    acc = acc * z + a;
                }
                acc
            }
            MapRule::CornerFamily { .. } => {
                if let Some((k, u)) = self.patch_of(z) {
                    return self.patches[k].sigma_x - self.corners[k].x() * self.patch_f(k, &self.patches[k], u);
                }
                // Integrate σ' from the origin or from the nearest cached boundary value.
                let mut base = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                if !self.anchors.is_empty() {
                    let k = (z.arg().rem_euclid(TAU) / TAU * ANCHORS as f64).round() as usize % ANCHORS;
                    let a = Complex64::from_polar(1.0, TAU * k as f64 / ANCHORS as f64);
                    if let Some(v) = self.anchors[k] {
                        if (z - a).norm() < z.norm() {
                            base = (a, v);
                        }
                    }
                }
                if z == base.0 {
                    return base.1;
                }
                base.1 + (z - base.0) * self.chord_integral(base.0, z, false)
            }
        }
    }

    /// The corner patch containing `z` with its local variable `u = 1 − z X̄_k`.
    fn patch_of(&self, z: Complex64) -> Option<(usize, Complex64)> {
        self.patches.iter().enumerate().find_map(|(k, p)| {
            let u = 1.0 - z * self.corners[k].x().conj();
            (u.norm() < p.radius).then_some((k, u))
        })
    }

    /// `G(u) = σ'/u^β` at `X_k(1 − u)`: the scale times the other corner factors.
    fn patch_g(&self, k: usize, u: Complex64) -> Complex64 {
        let MapRule::CornerFamily { scale } = &self.rule else {
            unreachable!("corner patches exist for the corner family only")
        };
        let w = self.corners[k].x() * (1.0 - u);
        self.corners
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .fold(*scale, |acc, (_, c)| acc * (1.0 - w * c.x().conj()).powf(c.beta))
    }

    /// `F(u) = u^{β+1} ∫₀¹ t^β G(ut) dt`.
    fn patch_f(&self, k: usize, patch: &CornerPatch, u: Complex64) -> Complex64 {
        if u.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let integral: Complex64 =
            patch.nodes.iter().zip(&patch.weights).map(|(t, w)| self.patch_g(k, u * *t) * *w).sum();
        u.powf(self.corners[k].beta + 1.0) * integral
    }

    /// `F[u_S, u_Z]` when both points lie in the same corner patch and the
    /// chord between them comes close to that corner, which is where the
    /// chord integral is expensive and the divided difference of `F` is not.
    fn patch_quotient(&self, s: Complex64, z: Complex64) -> Option<(usize, Complex64, Complex64, Complex64)> {
        let (k, us) = self.patch_of(s)?;
        let (kz, uz) = self.patch_of(z)?;
        let du = us - uz;
        if kz != k || du.norm() == 0.0 || du.norm() < 0.25 * us.norm().min(uz.norm()) {
            return None;
        }
        let p = &self.patches[k];
        Some((k, us, du, (self.patch_f(k, p, us) - self.patch_f(k, p, uz)) / du))
    }

    /// `σ'` (or, with `second`, `σ''`) of the corner family at `X_k(1 − u)`,
    /// computed from the local variable `u = 1 − W·X̄_k` so that the factor
    /// vanishing or blowing up at `X_k` keeps full relative accuracy.
    fn local_derivative(&self, k: usize, u: Complex64, second: bool) -> Complex64 {
        let MapRule::CornerFamily { scale } = &self.rule else {
            unreachable!("local corner variable is only used by the corner family")
        };
        let ck = &self.corners[k];
        let w = ck.x() * (1.0 - u);
        let mut v = *scale * u.powf(ck.beta);
        let mut log_derivative = -ck.beta * ck.x().conj() / u;
        for (j, c) in self.corners.iter().enumerate() {
            if j != k {
                let base = 1.0 - w * c.x().conj();
                v *= base.powf(c.beta);
                log_derivative -= c.beta * c.x().conj() / base;
            }
        }
        if second {
            v * log_derivative
        } else {
            v
        }
    }

    /// `∫₀¹ σ'(a + t(b − a)) dt`, or `∫₀¹ t σ''(a + t(b − a)) dt` with `second`.
    /// Chords passing close to a corner are parametrised in that corner's local
    /// variable and integrated adaptively with a breakpoint at the closest approach.
    fn chord_integral(&self, a: Complex64, b: Complex64, second: bool) -> Complex64 {
        let h = b - a;
        let weight = |t: f64| if second { t } else { 1.0 };
        let closest = |x: Complex64| {
            let t = (((x - a) * h.conj()).re / h.norm_sqr()).clamp(0.0, 1.0);
            ((x - (a + h * t)).norm(), t)
        };
        let (k, clearance) = self
            .corners
            .iter()
            .enumerate()
            .map(|(k, c)| (k, closest(c.x()).0))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if clearance > 4.0 * h.norm() {
            let (x, w) = cached_gauss(16);
            return x
                .iter()
                .zip(w)
                .map(|(xi, wi)| {
                    let t = 0.5 + 0.5 * xi;
                    let z = a + h * t;
                    let d = if second { self.sigma_second(z) } else { self.sigma_prime(z) };
                    d * (weight(t) * 0.5 * wi)
                })
                .sum();
        }
        let xk = self.corners[k].x().conj();
        let (ua, ub) = (1.0 - a * xk, 1.0 - b * xk);
        let mut breaks = vec![0.0, 0.02, 0.25, 0.5, 0.75, 0.98, 1.0];
        for c in &self.corners {
            let (_, t) = closest(c.x());
            if t > 0.0 && t < 1.0 {
                breaks.push(t);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let opts = AdaptiveOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 400 };
        let (v, err, _) = adaptive_best(
            |t| self.local_derivative(k, ua + (ub - ua) * t, second) * weight(t),
            &breaks,
            opts,
        );
        if err <= 1e-9 * v.norm().max(1e-6) {
            v
        } else {
            Complex64::new(f64::NAN, f64::NAN)
        }
    }

    pub fn point(&self, z: Complex64) -> PointData {
        PointData { z, sigma: self.sigma(z), dsigma: self.sigma_prime(z), d2sigma: self.sigma_second(z) }
    }

    /// `d(S, Z) = (σ(S) − σ(Z))/(S − Z)`, equal to `σ'(S)` when `S = Z`.
    pub fn d(&self, s: Complex64, z: Complex64) -> Complex64 {
        match &self.rule {
            MapRule::CornerFamily { .. } => self.d_at(&self.point(s), &self.point(z)),
            _ => self.d_exact(s, z),
        }
    }

    fn d_exact(&self, s: Complex64, z: Complex64) -> Complex64 {
        match &self.rule {
            MapRule::Identity => Complex64::new(1.0, 0.0),
            MapRule::Cusp => s + z + 2.0,
            MapRule::Polynomial { coeffs } => {
                // Σ a_k (S^{k-1} + S^{k-2} Z + ... + Z^{k-1}), via Horner on the
                // complete homogeneous sums h_{k-1}(S, Z).
                let mut total = Complex64::new(0.0, 0.0);
                let mut h = Complex64::new(1.0, 0.0);
                let mut zp = Complex64::new(1.0, 0.0);
                for (k, a) in coeffs.iter().enumerate().skip(1) {
                    if k > 1 {
                        zp *= z;
                        h = h * s + zp;
                    }
                    total += a * h;
                }
                total
            }
            MapRule::CornerFamily { .. } => unreachable!("corner family uses cached point data"),
        }
    }

    /// `d(S, Z)` from cached point data.
    pub fn d_at(&self, s: &PointData, z: &PointData) -> Complex64 {
        if s.z == z.z {
            return s.dsigma;
        }
        match &self.rule {
            MapRule::CornerFamily { .. } => {
                if let Some((_, _, _, q)) = self.patch_quotient(s.z, z.z) {
                    return q;
                }
                let chord = if (s.z - z.z).norm() < CHORD_SWITCH {
                    self.chord_integral(z.z, s.z, false)
                } else {
                    Complex64::new(f64::NAN, 0.0)
                };
                if chord.is_finite() {
                    chord
                } else {
                    (s.sigma - z.sigma) / (s.z - z.z)
                }
            }
            _ => self.d_exact(s.z, z.z),
        }
    }

    /// `(σ'(S) − d(S, Z))/(S − Z)`, the second divided difference `σ[S, S, Z]`,
    /// evaluated without cancellation. Equals `σ''(S)/2` when `S = Z`.
    pub fn dd2_at(&self, s: &PointData, z: &PointData) -> Complex64 {
        if s.z == z.z {
            return 0.5 * s.d2sigma;
        }
        match &self.rule {
            MapRule::Identity => Complex64::new(0.0, 0.0),
            MapRule::Cusp => Complex64::new(1.0, 0.0),
            MapRule::Polynomial { coeffs } => {
                // Σ_k a_k Σ_{j=0}^{k-2} (j+1) S^j Z^{k-2-j}
                let mut total = Complex64::new(0.0, 0.0);
                for (k, a) in coeffs.iter().enumerate().skip(2) {
                    let mut inner = Complex64::new(0.0, 0.0);
                    for j in 0..=k - 2 {
                        inner += (j as f64 + 1.0) * s.z.powu(j as u32) * z.z.powu((k - 2 - j) as u32);
                    }
                    total += a * inner;
                }
                total
            }
            MapRule::CornerFamily { .. } => {
                if let Some((k, us, du, q)) = self.patch_quotient(s.z, z.z) {
                    // σ[S,S,Z] = −X̄ (F'(u_S) − F[u_S,u_Z]) / (u_S − u_Z)
                    let fp = self.local_derivative(k, us, false);
                    return -self.corners[k].x().conj() * (fp - q) / du;
                }
                let chord = if (s.z - z.z).norm() < CHORD_SWITCH {
                    self.chord_integral(z.z, s.z, true)
                } else {
                    Complex64::new(f64::NAN, 0.0)
                };
                // Across a corner the chord integral is limited by rounding in
                // the node positions, while the quotient loses little there.
                if chord.is_finite() {
                    chord
                } else {
                    (s.dsigma - self.d_at(s, z)) / (s.z - z.z)
                }
            }
        }
    }

    pub fn dd2(&self, s: Complex64, z: Complex64) -> Complex64 {
        self.dd2_at(&self.point(s), &self.point(z))
    }

    /// `(d₁, d₂)` with `d_k = (σ_k(S) − σ_k(Z))/(S − Z)`, `σ₁ = Re σ`, `σ₂ = Im σ`.
    /// When `S = Z` on the unit circle the contour derivatives are returned.
    pub fn d12_at(&self, s: &PointData, z: &PointData) -> (Complex64, Complex64) {
        let h = s.z - z.z;
        if h.norm() == 0.0 {
            return self.contour_derivatives_at(s);
        }
        let delta = match &self.rule {
            MapRule::CornerFamily { .. } if h.norm() >= CHORD_SWITCH => s.sigma - z.sigma,
            _ => self.d_at(s, z) * h,
        };
        (Complex64::new(delta.re, 0.0) / h, Complex64::new(delta.im, 0.0) / h)
    }

    pub fn d12(&self, s: Complex64, z: Complex64) -> (Complex64, Complex64) {
        self.d12_at(&self.point(s), &self.point(z))
    }

    /// Derivatives of `σ₁ = Re σ` and `σ₂ = Im σ` along the unit circle with
    /// respect to the complex variable: `σ_k'(S) = (d σ_k/dθ)/(iS)`.
    pub fn contour_derivatives_at(&self, s: &PointData) -> (Complex64, Complex64) {
        let ds = I * s.z;
        let g = ds * s.dsigma;
        (Complex64::new(g.re, 0.0) / ds, Complex64::new(g.im, 0.0) / ds)
    }

    pub fn contour_derivatives(&self, s: Complex64) -> (Complex64, Complex64) {
        self.contour_derivatives_at(&self.point(s))
    }

    /// Limits of `(σ_k'(S) − d_k(S, Z))/(S − Z)` as `S → Z` along the circle.
    pub fn contour_second_at(&self, z: &PointData) -> (Complex64, Complex64) {
        let p = I * z.z;
        let q = -z.z;
        let a = p * z.dsigma;
        let b = -z.z * z.dsigma - z.z * z.z * z.d2sigma;
        let p3 = 2.0 * p * p * p;
        (
            (Complex64::new(b.re, 0.0) * p - Complex64::new(a.re, 0.0) * q) / p3,
            (Complex64::new(b.im, 0.0) * p - Complex64::new(a.im, 0.0) * q) / p3,
        )
    }

    /// Boundary point `σ(e^{iθ})` as `(x, y)`.
    pub fn boundary_point(&self, theta: f64) -> (f64, f64) {
        let w = self.sigma(Complex64::from_polar(1.0, theta));
        (w.re, w.im)
    }

    /// Checks that the image of a fine boundary polygon is simple and that `σ'`
    /// stays away from zero at the sample points off the corners.
    pub fn check_univalent(&self, samples: usize) -> Result<()> {
        let pts: Vec<Complex64> = (0..samples)
            .map(|k| {
                let theta = 2.0 * PI * (k as f64 + 0.5) / samples as f64;
                self.sigma(Complex64::from_polar(1.0, theta))
            })
            .collect();
        for (k, p) in pts.iter().enumerate() {
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(Error::MapViolation(format!("sigma is not finite at boundary sample {k}")));
            }
            let s = Complex64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / samples as f64);
            let dp = self.sigma_prime(s);
            if dp.norm() < 1e-12 * self.r(s).max(1e-300) {
                return Err(Error::MapViolation(format!("sigma' vanishes near boundary sample {k}")));
            }
        }
        let n = pts.len();
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (pts[j], pts[(j + 1) % n]);
                if segments_cross(a, b, c, d) {
                    return Err(Error::MapViolation(format!(
                        "boundary image self-intersects between samples {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Shorter arc length between two unit-circle points divided by their chord.
pub fn arc_chord_ratio(s: Complex64, t: Complex64) -> f64 {
    let chord = (s - t).norm();
    let arc = 2.0 * (0.5 * chord).min(1.0).asin();
    if chord < 1e-6 {
        // asin(x)/x = 1 + x²/6 + ...
        let x = 0.5 * chord;
        return 1.0 + x * x / 6.0;
    }
    arc / chord
}

/// Named maps available out of the box.
pub fn builtin_maps() -> Vec<CornerDomainMap> {
    vec![
        CornerDomainMap::identity(),
        CornerDomainMap::cusp(0.0).expect("cusp map"),
        CornerDomainMap::polynomial(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.0)])
            .expect("polynomial map"),
        CornerDomainMap::corner_family(
            vec![CornerSpec::new(0.0, 0.5, 0.2).expect("corner")],
            Complex64::new(1.0, 0.0),
        )
        .expect("corner family map"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn distance_to_corners() {
        let cusp = CornerDomainMap::cusp(0.0).unwrap();
        assert!((cusp.r(c(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(cusp.r0(), 1.0);
        let two = CornerDomainMap::corner_family(
            vec![CornerSpec::new(0.0, -0.5, 0.1).unwrap(), CornerSpec::new(PI, -0.5, 0.1).unwrap()],
            c(1.0, 0.0),
        )
        .unwrap();
        assert!((two.r(c(0.0, 1.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert!((two.r0() - 2.0).abs() < 1e-15);
        let id = CornerDomainMap::identity();
        assert_eq!(id.r0(), 1.0);
        assert_eq!(id.r(c(0.3, 0.2)), 1.0);
        assert!(id.corners.is_empty());
    }

    #[test]
    fn exponent_ranges() {
        assert!(CornerSpec::new(0.0, 1.5, 0.0).is_err());
        assert!(CornerSpec::new(0.0, -1.0, 0.0).is_err());
        assert!(CornerSpec::new(0.0, 1.0, 0.6).is_err());
        assert!(CornerSpec::new(0.0, -0.5, 0.9).is_ok());
        let err = CornerSpec::new(0.0, 1.5, 0.0).unwrap_err().to_string();
        assert!(err.contains("(-1, 1]"));
    }

    #[test]
    fn quotient_closed_forms() {
        let id = CornerDomainMap::identity();
        assert_eq!(id.d(c(0.6, 0.8), c(0.1, -0.2)), c(1.0, 0.0));
        let cusp = CornerDomainMap::cusp(0.0).unwrap();
        assert_eq!(cusp.d(c(1.0, 0.0), c(0.0, 0.0)), c(3.0, 0.0));
        let (d1, d2) = cusp.d12(c(0.0, 1.0), c(0.0, 0.0));
        assert!((d1 + I * d2 - c(2.0, 1.0)).norm() < 1e-14);
        let (d1, d2) = id.d12(c(0.6, 0.8), c(0.1, -0.2));
        assert!((d1 + I * d2 - 1.0).norm() < 1e-15);
    }

    #[test]
    fn polynomial_quotient_near_diagonal() {
        let map = CornerDomainMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.2, 0.1), c(0.05, 0.0)]).unwrap();
        let s = Complex64::from_polar(1.0, 0.7);
        let z = s + c(1e-12, -3e-13);
        // Oracle: direct quotients at |S−Z| = 1e-6 and 2e-6, extrapolated linearly.
        let dir = c(1.0, 0.3) / c(1.0, 0.3).norm();
        let q = |h: f64| (map.sigma(s + dir * h) - map.sigma(s)) / (dir * h);
        let oracle = 2.0 * q(1e-6) - q(2e-6);
        assert!((map.d(s, z) - oracle).norm() < 1e-9);
        assert!((map.d(s, z) - map.sigma_prime(s)).norm() < 1e-9);
        assert_eq!(map.d(s, s), map.sigma_prime(s));
    }

    #[test]
    fn arc_chord_values() {
        assert!((arc_chord_ratio(c(1.0, 0.0), c(-1.0, 0.0)) - PI / 2.0).abs() < 1e-15);
        let t = Complex64::from_polar(1.0, 1e-6);
        assert!((arc_chord_ratio(c(1.0, 0.0), t) - 1.0).abs() < 1e-12);
        let q = arc_chord_ratio(c(1.0, 0.0), c(0.0, 1.0));
        assert!((q - (PI / 2.0) / 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cusp_derivative_bound() {
        let cusp = CornerDomainMap::cusp(0.0).unwrap();
        for z in [c(0.3, 0.1), c(-0.9, 0.0), Complex64::from_polar(1.0, 2.0)] {
            assert!((cusp.sigma_prime(z).norm() / (z + 1.0).norm() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn corner_family_radial_exponent() {
        let map =
            CornerDomainMap::corner_family(vec![CornerSpec::new(0.0, 0.5, 0.2).unwrap()], c(1.0, 0.0)).unwrap();
        // Log-log regression of |σ'| against the distance to X = 1 along the radius.
        let pts: Vec<(f64, f64)> = (4..16)
            .map(|k| {
                let dist = 2f64.powi(-k);
                (dist.ln(), map.sigma_prime(c(1.0 - dist, 0.0)).norm().ln())
            })
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / n, sy / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - 0.5).abs() < 0.02);
    }

    #[test]
    fn corner_family_sigma_consistent() {
        let map =
            CornerDomainMap::corner_family(vec![CornerSpec::new(1.0, -0.4, 0.3).unwrap()], c(1.0, 0.0)).unwrap();
        let z = c(0.3, -0.2);
        let h = 1e-5;
        let fd = (map.sigma(z + h) - map.sigma(z - h)) / (2.0 * h);
        assert!((fd - map.sigma_prime(z)).norm() < 1e-8);
        let s = Complex64::from_polar(1.0, 2.5);
        let chord = map.d(s, c(0.5, 0.1));
        let quotient = (map.sigma(s) - map.sigma(c(0.5, 0.1))) / (s - c(0.5, 0.1));
        assert!((chord - quotient).norm() < 1e-11);
        let t = Complex64::from_polar(1.0, 2.6);
        let (ps, pt) = (map.point(s), map.point(t));
        let dd2 = map.dd2_at(&ps, &pt);
        let direct = (ps.dsigma - map.d_at(&ps, &pt)) / (s - t);
        assert!((dd2 - direct).norm() < 1e-9);
    }

    #[test]
    fn contour_derivatives_identity() {
        let id = CornerDomainMap::identity();
        let (s1, s2) = id.contour_derivatives(c(1.0, 0.0));
        assert!((s2 - c(0.0, -1.0)).norm() < 1e-15);
        assert!(s1.norm() < 1e-15);
        // Independent finite differences of Im σ along the circle.
        let theta = 0.9;
        let s = Complex64::from_polar(1.0, theta);
        let h = 1e-6;
        let fd = (Complex64::from_polar(1.0, theta + h).im - Complex64::from_polar(1.0, theta - h).im) / (2.0 * h);
        let (_, s2) = id.contour_derivatives(s);
        assert!((s2 - fd / (I * s)).norm() < 1e-9);
        assert!((s2 - (1.0 + 1.0 / (s * s)) / (2.0 * I)).norm() < 1e-14);
    }

    #[test]
    fn contour_second_derivative_limits() {
        let map = CornerDomainMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.2, 0.1)]).unwrap();
        let z = Complex64::from_polar(1.0, 0.4);
        let (lim1, lim2) = map.contour_second_at(&map.point(z));
        let s = Complex64::from_polar(1.0, 0.4 + 1e-5);
        let (ps, pz) = (map.point(s), map.point(z));
        let (a1, a2) = map.contour_derivatives_at(&ps);
        let (d1, d2) = map.d12_at(&ps, &pz);
        assert!(((a1 - d1) / (s - z) - lim1).norm() < 1e-4);
        assert!(((a2 - d2) / (s - z) - lim2).norm() < 1e-4);
    }

    #[test]
    fn non_univalent_polynomial_rejected() {
        // Z + 0.8 Z²: σ' vanishes at −0.625 inside the disk and the boundary loops.
        assert!(CornerDomainMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.8, 0.0)]).is_err());
    }

    #[test]
    fn catalog_lookup() {
        assert_eq!(builtin_maps().len(), 4);
        assert!(CornerDomainMap::from_catalog("nope", &[], &[]).is_err());
        assert_eq!(CornerDomainMap::from_catalog("identity", &[], &[]).unwrap().name, "identity");
    }

    fn two_corner_map() -> CornerDomainMap {
        CornerDomainMap::corner_family(
            vec![CornerSpec::new(0.0, 0.5, 0.0).unwrap(), CornerSpec::new(PI, -0.5, 0.0).unwrap()],
            c(1.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn corner_patch_matches_chord_integration() {
        let map = two_corner_map();
        for (k, corner) in map.corners.iter().enumerate() {
            for (r, arg) in [(0.05, 0.3), (0.2, -1.0), (0.4, 1.2), (0.45, 0.0)] {
                let u = Complex64::from_polar(r, arg);
                let z = corner.x() * (1.0 - u);
                assert_eq!(map.patch_of(z).map(|p| p.0), Some(k));
                let chord = z * map.chord_integral(c(0.0, 0.0), z, false);
                assert!((map.sigma(z) - chord).norm() < 1e-12, "corner {k} u {u}: {} vs {chord}", map.sigma(z));
            }
        }
    }

    #[test]
    fn corner_patch_quotients_agree_with_chords() {
        let map = two_corner_map();
        for corner in &map.corners {
            let x = corner.x();
            for (a, b) in [(1e-3, -2e-3), (1e-2, 3e-2), (-5e-3, 4e-3)] {
                let s = map.point(x * Complex64::from_polar(1.0, a));
                let z = map.point(x * Complex64::from_polar(0.999, b));
                let (_, _, _, q) = map.patch_quotient(s.z, z.z).expect("both points in one patch");
                let chord = map.chord_integral(z.z, s.z, false);
                assert!((q - chord).norm() <= 1e-9 * chord.norm(), "{q} vs {chord}");
                let dd2 = map.dd2_at(&s, &z);
                let chord2 = map.chord_integral(z.z, s.z, true);
                assert!((dd2 - chord2).norm() <= 1e-7 * chord2.norm(), "{dd2} vs {chord2}");
            }
        }
    }

    #[test]
    fn corner_family_quotients_finite_across_corners() {
        let map = two_corner_map();
        let offs: Vec<f64> = (0..25).map(|k| 10f64.powf(-9.0 + 8.0 * k as f64 / 24.0)).collect();
        for corner in &map.corners {
            let base = corner.angle;
            for &a in &offs {
                for &b in &offs {
                    for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0)] {
                        let p = map.point(Complex64::from_polar(1.0, base + sa * a));
                        let q = map.point(Complex64::from_polar(1.0, base + sb * b));
                        for v in [map.d_at(&p, &q), map.dd2_at(&p, &q)] {
                            assert!(v.re.is_finite() && v.im.is_finite(), "{base} {a} {b}: {v}");
                        }
                    }
                }
            }
        }
    }
}
