//! End-to-end workflow for the (1-3)-problem: data pull-back, boundary solve,
//! evaluation of `Φ`, antidifferentiation to `u`, and manufactured checks.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{embed_point, inverse_difference, monomial, BihNumber};
use crate::error::{Error, Result};
use crate::geometry::{CornerDomainMap, PointData};
use crate::kernels::{exponent_bookkeeping, kernel_quotients, BoundaryDensity, Exponents};
use crate::quadrature::nystrom::{assemble_system, solve_densities, solve_min_norm, SolveDiagnostics};
use crate::quadrature::{
    boundary_value_u13, circle_integral, mean_constant, node_points, BoundaryData, CauchyOptions, GridParams,
    QuadratureGrid,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Boundary data `u₁, u₃` as functions of the physical point `(x, y)`.
pub type PhysicalFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Where the boundary data comes from.
#[derive(Clone)]
pub enum DataSource {
    /// `u₁ = U₁[ζⁿ]`, `u₃ = U₃[ζⁿ]` on the boundary, with `ζⁿ` kept as the exact solution.
    Manufactured { degree: u32 },
    /// Functions of the physical boundary point.
    Physical { u1: PhysicalFn, u3: PhysicalFn },
    /// Samples `(θ, ũ₁, ũ₃)` on the unit circle, interpolated periodically.
    Samples(Arc<TabulatedData>),
}

impl fmt::Debug for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::Manufactured { degree } => write!(f, "Manufactured {{ degree: {degree} }}"),
            DataSource::Physical { .. } => write!(f, "Physical(..)"),
            DataSource::Samples(t) => write!(f, "Samples({} rows)", t.theta.len()),
        }
    }
}

/// Interior probe layout: every radius at every one of `angles` equally spaced angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub radii: Vec<f64>,
    pub angles: usize,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec { radii: (1..=9).map(|k| 0.1 * k as f64).chain([0.98]).collect(), angles: 16 }
    }
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub map: CornerDomainMap,
    pub data: DataSource,
    pub grid: GridParams,
    pub cauchy: CauchyOptions,
    pub probes: ProbeSpec,
    /// Number of boundary points at which the boundary-limit formulas are
    /// compared with the data after the solve.
    pub boundary_checks: usize,
}

impl ProblemSpec {
    pub fn new(map: CornerDomainMap, data: DataSource, grid: GridParams) -> Self {
        ProblemSpec {
            map,
            data,
            grid,
            cauchy: CauchyOptions::default(),
            probes: ProbeSpec::default(),
            boundary_checks: 16,
        }
    }

    /// Exact monogenic solution `ζⁿ`, when the data was manufactured.
    pub fn exact_degree(&self) -> Option<u32> {
        match self.data {
            DataSource::Manufactured { degree } => Some(degree),
            _ => None,
        }
    }
}

/// Tabulated boundary samples on the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedData {
    pub theta: Vec<f64>,
    pub u1: Vec<f64>,
    pub u3: Vec<f64>,
}

impl TabulatedData {
    pub fn new(theta: Vec<f64>, u1: Vec<f64>, u3: Vec<f64>) -> Result<Self> {
        if theta.len() < 4 || theta.len() != u1.len() || theta.len() != u3.len() {
            return Err(Error::Config("boundary samples need at least 4 rows of (theta, u1, u3)".into()));
        }
        if theta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("boundary sample angles must be strictly increasing".into()));
        }
        if theta[theta.len() - 1] - theta[0] >= TAU {
            return Err(Error::Config("boundary sample angles must span less than one turn".into()));
        }
        Ok(TabulatedData { theta, u1, u3 })
    }

    /// Periodic cubic Lagrange interpolation through the four nearest samples.
    fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let n = self.theta.len();
        let t0 = self.theta[0];
        let t = t0 + (t - t0).rem_euclid(TAU);
        let k = self.theta.partition_point(|x| *x <= t);
        // Samples k-1 and k bracket t (with wrap-around).
        let idx = |m: isize| -> (f64, f64) {
            let wrapped = m.rem_euclid(n as isize) as usize;
            let shift = (m - wrapped as isize) / n as isize;
            (self.theta[wrapped] + shift as f64 * TAU, values[wrapped])
        };
        let pts: Vec<(f64, f64)> = (-2..2).map(|j| idx(k as isize + j)).collect();
        let mut total = 0.0;
        for (i, (xi, yi)) in pts.iter().enumerate() {
            let mut l = 1.0;
            for (j, (xj, _)) in pts.iter().enumerate() {
                if i != j {
                    l *= (t - xj) / (xi - xj);
                }
            }
            total += l * yi;
        }
        total
    }

    pub fn to_boundary_data(self: &Arc<Self>) -> BoundaryData {
        let a = self.clone();
        let b = self.clone();
        BoundaryData::new(move |t| a.interpolate(&a.u1, t), move |t| b.interpolate(&b.u3, t))
    }
}

/// `ũ_l(e^{iθ}) = u_l(σ₁(e^{iθ}), σ₂(e^{iθ}))`.
pub fn pull_back(map: &CornerDomainMap, u1: PhysicalFn, u3: PhysicalFn) -> BoundaryData {
    let m1 = map.clone();
    let m3 = map.clone();
    BoundaryData::new(
        move |t| {
            let w = m1.sigma(Complex64::from_polar(1.0, t));
            u1(w.re, w.im)
        },
        move |t| {
            let w = m3.sigma(Complex64::from_polar(1.0, t));
            u3(w.re, w.im)
        },
    )
}

/// Boundary data of the manufactured solution `ζⁿ` on the image of `map`.
pub fn manufactured_data(map: &CornerDomainMap, degree: u32) -> BoundaryData {
    let f = move |x: f64, y: f64| monomial(embed_point(x, y), degree).components();
    pull_back(map, Arc::new(move |x, y| f(x, y).u1), Arc::new(move |x, y| f(x, y).u3))
}

/// A manufactured problem with exact solution `ζⁿ`.
pub fn manufactured_problem(map: &CornerDomainMap, degree: u32, grid: GridParams) -> Result<(ProblemSpec, u32)> {
    if degree < 1 {
        return Err(Error::Config("manufactured degree must be at least 1".into()));
    }
    Ok((ProblemSpec::new(map.clone(), DataSource::Manufactured { degree }, grid), degree))
}

/// The pulled-back data of a problem.
pub fn boundary_data(spec: &ProblemSpec) -> BoundaryData {
    match &spec.data {
        DataSource::Manufactured { degree } => manufactured_data(&spec.map, *degree),
        DataSource::Physical { u1, u3 } => pull_back(&spec.map, u1.clone(), u3.clone()),
        DataSource::Samples(t) => t.to_boundary_data(),
    }
}

/// Flags data growing faster than `‖ζ − ζⱼ‖^{−αⱼ}` at some corner: the weighted
/// data `|ũ|·‖ζ − ζⱼ‖^{αⱼ}` must not keep growing on the approach.
pub fn check_data_growth(map: &CornerDomainMap, data: &BoundaryData) -> Result<()> {
    for (j, c) in map.corners.iter().enumerate() {
        let xj = map.sigma(c.x());
        for side in [-1.0, 1.0] {
            let mut pts = Vec::new();
            for k in 8..=36 {
                let t = c.angle + side * 2f64.powi(-k);
                let dist = (map.sigma(Complex64::from_polar(1.0, t)) - xj).norm();
                if dist <= 0.0 || !dist.is_finite() {
                    continue;
                }
                let v = (data.u1)(t).abs().max((data.u3)(t).abs());
                if !v.is_finite() {
                    return Err(Error::DataSingularAtCorner { corner: j });
                }
                let w = v * dist.powf(c.alpha);
                pts.push((dist.ln(), w.max(1e-300).ln()));
            }
            if pts.len() < 4 {
                continue;
            }
            let tail = &pts[pts.len() / 2..];
            let n = tail.len() as f64;
            let (sx, sy) = tail.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            let (mx, my) = (sx / n, sy / n);
            let slope = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / tail.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            let growth = tail[tail.len() - 1].1 - tail[0].1;
            if slope < -0.05 && growth > 0.5 {
                return Err(Error::DataSingularAtCorner { corner: j });
            }
        }
    }
    Ok(())
}

/// `σ̃'(S) = σ'(S) − (i/2)σ₂'(S)ρ` as an algebra element.
fn pulled_back_derivative(map: &CornerDomainMap, s: &PointData) -> BihNumber {
    let (_, s2) = map.contour_derivatives_at(s);
    BihNumber::scalar(s.dsigma) - BihNumber::RHO * (0.5 * I * s2)
}

fn density_nodes(density: &BoundaryDensity, grid: &QuadratureGrid) -> (Vec<f64>, Vec<f64>) {
    (density.phi1.at_nodes(grid), density.phi3.at_nodes(grid))
}

/// Evaluator of `Φ` at interior points for a fixed density, caching node data.
pub struct PhiEvaluator<'a> {
    pub map: &'a CornerDomainMap,
    pub density: &'a BoundaryDensity,
    pub grid: &'a QuadratureGrid,
    pub opts: CauchyOptions,
    points: Vec<PointData>,
    p1: Vec<f64>,
    p3: Vec<f64>,
    c1: f64,
    c3: f64,
}

impl<'a> PhiEvaluator<'a> {
    pub fn new(map: &'a CornerDomainMap, density: &'a BoundaryDensity, grid: &'a QuadratureGrid, opts: CauchyOptions) -> Self {
        let points = node_points(map, grid);
        let (p1, p3) = density_nodes(density, grid);
        let c1 = mean_constant(&p1, grid);
        let c3 = mean_constant(&p3, grid);
        PhiEvaluator { map, density, grid, opts, points, p1, p3, c1, c3 }
    }

    fn point(&self, t: f64, j: Option<usize>) -> PointData {
        match j {
            Some(j) => self.points[j],
            None => self.map.point(Complex64::from_polar(1.0, t)),
        }
    }

    fn values(&self, t: f64, j: Option<usize>) -> (f64, f64) {
        match j {
            Some(j) => (self.p1[j], self.p3[j]),
            None => self.density.eval(t),
        }
    }

    /// The two integrands of the expanded representation at `S = e^{iθ}`:
    /// `Ω*(S,Z)·S/(S − Z) + ½φ₁(S + Z)/(S − Z)` and its `Ω**`, `φ₃` twin,
    /// both integrated against `dθ/2π`.
    fn integrands(&self, t: f64, j: Option<usize>, zp: &PointData) -> Result<(Complex64, Complex64)> {
        let s = self.point(t, j);
        let (f1, f3) = self.values(t, j);
        let (q1, q2) = kernel_quotients(self.map, &s, zp)?;
        let star = f1 * q1 + 2.0 * I * f1 * q2 - 2.0 * f3 * q2;
        let star_star = f3 * q1 - 2.0 * I * f3 * q2 - 2.0 * f1 * q2;
        let sch = (s.z + zp.z) / (s.z - zp.z);
        Ok((star * s.z + 0.5 * f1 * sch, star_star * s.z + 0.5 * f3 * sch))
    }

    /// `Φ(ζ)` at the image `ζ` of the interior point `z`:
    /// `e₁(𝓘[Ω*] + ½𝒮[φ₁] + C₁) + e₂(𝓘[Ω**] + ½𝒮[φ₃] + C₃)`.
    pub fn eval(&self, z: Complex64) -> Result<BihNumber> {
        if z.norm() >= 1.0 {
            return Err(Error::Config(format!("Phi is evaluated at interior points only, got {z}")));
        }
        let zp = self.map.point(z);
        let near = 1.0 - z.norm() < self.opts.near_factor * self.grid.local_spacing(z.arg()) && z.norm() >= 0.5;
        let (a, b) = if !near {
            let mut a = Complex64::new(0.0, 0.0);
            let mut b = Complex64::new(0.0, 0.0);
            for (j, (t, w)) in self.grid.theta.iter().zip(&self.grid.weights).enumerate() {
                let (x, y) = self.integrands(*t, Some(j), &zp)?;
                a += x * *w;
                b += y * *w;
            }
            (a / TAU, b / TAU)
        } else {
            (
                circle_integral(|t, j| Ok(self.integrands(t, j, &zp)?.0), z, self.grid, &self.opts)?,
                circle_integral(|t, j| Ok(self.integrands(t, j, &zp)?.1), z, self.grid, &self.opts)?,
            )
        };
        Ok(BihNumber::new(a + self.c1, b + self.c3))
    }

    /// `Φ(ζ)` from the defining integral `(1/2πi) ∫ φ̃(S) σ̃'(S) (τ − ζ)⁻¹ dS`
    /// without the kernel expansion.
    pub fn eval_unexpanded(&self, z: Complex64) -> Result<BihNumber> {
        let zp = self.map.point(z);
        let zeta = embed_point(zp.sigma.re, zp.sigma.im);
        let integrand = |t: f64, j: Option<usize>| -> Result<BihNumber> {
            let s = self.point(t, j);
            let (f1, f3) = self.values(t, j);
            let phi = BihNumber::new(Complex64::new(f1, 0.0), Complex64::new(f3, 0.0));
            let tau = embed_point(s.sigma.re, s.sigma.im);
            let inv = inverse_difference(tau, zeta, Some((s.sigma, zp.sigma)))?;
            // (1/2πi) dS = (1/2π) S dθ
            Ok(phi * pulled_back_derivative(self.map, &s) * inv * s.z)
        };
        let a = circle_integral(|t, j| Ok(integrand(t, j)?.z1), z, self.grid, &self.opts)?;
        let b = circle_integral(|t, j| Ok(integrand(t, j)?.z2), z, self.grid, &self.opts)?;
        Ok(BihNumber::new(a, b))
    }
}

/// `Φ(ζ)` at the image of the interior point `z` (expanded representation).
pub fn evaluate_phi(
    map: &CornerDomainMap,
    density: &BoundaryDensity,
    z: Complex64,
    grid: &QuadratureGrid,
    opts: &CauchyOptions,
) -> Result<BihNumber> {
    PhiEvaluator::new(map, density, grid, *opts).eval(z)
}

/// `Φ₁ = ∫ Φ(τ) dτ + base` at every vertex of a polyline of interior disk
/// points, with `dτ = Re(σ'dZ) e₁ + Im(σ'dZ) e₂`. The first entry is `base`.
/// Each leg is cut into pieces no longer than 0.4 of their distance to the
/// circle and integrated with 16-point Gauss–Legendre.
pub fn antiderivative_u(
    map: &CornerDomainMap,
    phi: impl Fn(Complex64) -> Result<BihNumber>,
    path: &[Complex64],
    base: BihNumber,
) -> Result<Vec<BihNumber>> {
    for z in path {
        if !(z.norm() < 1.0) {
            return Err(Error::PathExitsDomain(format!("{z}")));
        }
    }
    let (x, w) = crate::integrate::cached_gauss(16);
    let mut out = Vec::with_capacity(path.len());
    let mut acc = base;
    if !path.is_empty() {
        out.push(acc);
    }
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let total = (b - a).norm();
        let dir = if total > 0.0 { (b - a) / total } else { Complex64::new(0.0, 0.0) };
        let mut walked = 0.0;
        while walked < total {
            // Sub-segments shrink with the distance to the circle.
            let za = a + dir * walked;
            let step = (0.4 * (1.0 - za.norm())).clamp(0.002, 0.25).min(total - walked);
            let zb = if walked + step >= total { b } else { za + dir * step };
            walked += step;
            let (mid, half) = ((za + zb) * 0.5, (zb - za) * 0.5);
            for (xi, wi) in x.iter().zip(w) {
                let z = mid + half * *xi;
                let dz = half * *wi;
                let dw = map.sigma_prime(z) * dz;
                acc += phi(z)? * embed_point(dw.re, dw.im);
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// One interior field sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    /// Disk point `Z`.
    pub zr: f64,
    pub zi: f64,
    /// Physical point `σ(Z)`.
    pub x: f64,
    pub y: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
    /// `U₁[Φ₁]`, the biharmonic function, up to the constant fixed at `Z = 0`.
    pub u: f64,
}

/// Errors against the manufactured solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Probes with `|Z|` up to this radius enter the metrics.
    pub radius: f64,
    pub u1_relative: f64,
    pub u3_relative: f64,
    pub u_relative: f64,
    /// Logged only: the (1-3)-problem does not pin these components.
    pub u2_max_abs: f64,
    pub u4_max_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub theta: f64,
    pub phi1: f64,
    pub phi3: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub map: String,
    pub diagnostics: SolveDiagnostics,
    pub exponents: Option<Exponents>,
    /// `sup |φ_l| ∏|S − Xⱼ|^{γⱼ}` over the nodes.
    pub weighted_sup: f64,
    /// Max deviation of the boundary-limit formulas from the data at off-grid points.
    pub boundary_residual: f64,
    pub density: Vec<DensitySample>,
    pub field: Vec<FieldSample>,
    pub errors: Option<ErrorMetrics>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub solved_density: Option<BoundaryDensity>,
}

impl SolveReport {
    /// True when every reported number is finite.
    pub fn all_finite(&self) -> bool {
        let d = &self.diagnostics;
        d.residual_offgrid.is_finite()
            && d.residual_nodes.is_finite()
            && self.boundary_residual.is_finite()
            && self.field.iter().all(|f| [f.u1, f.u2, f.u3, f.u4, f.u].iter().all(|v| v.is_finite()))
            && self.density.iter().all(|s| s.phi1.is_finite() && s.phi3.is_finite())
    }
}

/// Solve of the boundary system alone: grid, density and diagnostics.
pub fn solve_boundary(
    map: &CornerDomainMap,
    data: &BoundaryData,
    grid: Arc<QuadratureGrid>,
) -> Result<(BoundaryDensity, SolveDiagnostics)> {
    let system = assemble_system(map, data, grid)?;
    match solve_densities(map, &system) {
        Ok(v) => Ok(v),
        Err(Error::SingularSystem { .. }) => solve_min_norm(map, &system),
        Err(e) => Err(e),
    }
}

/// Full pipeline: pull back, solve, evaluate `Φ` and `u` at the probes, check
/// the boundary-limit formulas against the data, and compare with the exact
/// solution when one is attached.
pub fn solve_13_problem(spec: &ProblemSpec) -> Result<SolveReport> {
    let map = &spec.map;
    let exponents = if map.corners.is_empty() { None } else { Some(exponent_bookkeeping(&map.corners)?) };
    let data = boundary_data(spec);
    check_data_growth(map, &data)?;
    let grid = Arc::new(QuadratureGrid::for_map(map, &spec.grid)?);
    let (mut density, diagnostics) = solve_boundary(map, &data, grid.clone())?;
    let mut warnings = Vec::new();
    if diagnostics.singular {
        warnings.push(format!(
            "system is numerically singular (condition {:.3e}); minimum-norm solution reported",
            diagnostics.condition
        ));
    }
    if let Some(e) = &exponents {
        density = density.with_gammas(e.gammas.clone());
    }
    let weighted_sup = density.weighted_sup(&map.corner_points(), &grid.theta);

    // Boundary-limit check at points between nodes, spread over the circle.
    let checks = crate::quadrature::nystrom::checkpoints(&grid);
    let stride = (checks.len() / spec.boundary_checks.max(1)).max(1);
    let mut boundary_residual = 0.0f64;
    let points = node_points(map, &grid);
    // Offset by half a stride so that no check sits in the cell next to a corner.
    for t in checks.iter().skip(stride / 2).step_by(stride) {
        let (b1, b3) = boundary_value_u13(map, &density, *t, &grid, Some(&points), &spec.cauchy)?;
        let e = (b1 - (data.u1)(*t)).abs().max((b3 - (data.u3)(*t)).abs());
        boundary_residual = if e.is_nan() { f64::NAN } else { boundary_residual.max(e) };
    }

    let evaluator = PhiEvaluator::new(map, &density, &grid, spec.cauchy);
    let exact = spec.exact_degree();
    let base = match exact {
        Some(n) => {
            let w = map.sigma(Complex64::new(0.0, 0.0));
            monomial(embed_point(w.re, w.im), n + 1) * (1.0 / (n + 1) as f64)
        }
        None => BihNumber::ZERO,
    };
    let mut radii = spec.probes.radii.clone();
    radii.sort_by(f64::total_cmp);
    let angles = spec.probes.angles.max(1);
    let ray = |k: usize| -> Result<Vec<FieldSample>> {
        let angle = TAU * k as f64 / angles as f64;
        let mut path = vec![Complex64::new(0.0, 0.0)];
        path.extend(radii.iter().map(|r| Complex64::from_polar(*r, angle)));
        let phi1 = antiderivative_u(map, |z| evaluator.eval(z), &path, base)?;
        let mut out = Vec::with_capacity(radii.len());
        for (z, p1) in path.iter().zip(&phi1).skip(1) {
            let phi = evaluator.eval(*z)?;
            let w = map.sigma(*z);
            let c = phi.components();
            out.push(FieldSample { zr: z.re, zi: z.im, x: w.re, y: w.im, u1: c.u1, u2: c.u2, u3: c.u3, u4: c.u4, u: p1.z1.re });
        }
        Ok(out)
    };
    #[cfg(feature = "parallel")]
    let rays: Vec<Result<Vec<FieldSample>>> = {
        use rayon::prelude::*;
        (0..angles).into_par_iter().map(ray).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rays: Vec<Result<Vec<FieldSample>>> = (0..angles).map(ray).collect();
    let mut field = Vec::new();
    for r in rays {
        field.extend(r?);
    }
    let errors = exact.map(|n| error_metrics(&field, n, 0.9 + 1e-12));
    let density_samples = grid
        .theta
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let (a, b) = density_nodes_at(&density, &grid, j);
            DensitySample { theta: *t, phi1: a, phi3: b }
        })
        .collect();
    Ok(SolveReport {
        map: map.name.clone(),
        diagnostics,
        exponents,
        weighted_sup,
        boundary_residual,
        density: density_samples,
        field,
        errors,
        warnings,
        solved_density: Some(density),
    })
}

fn density_nodes_at(density: &BoundaryDensity, grid: &QuadratureGrid, j: usize) -> (f64, f64) {
    use crate::kernels::DensityComponent;
    let get = |c: &DensityComponent| match c {
        DensityComponent::Samples { values, .. } => values[j],
        other => other.eval(grid.theta[j]),
    };
    (get(&density.phi1), get(&density.phi3))
}

/// Relative max errors of `U₁`, `U₃` and `u` against `ζⁿ` over probes with `|Z| ≤ radius`.
pub fn error_metrics(field: &[FieldSample], degree: u32, radius: f64) -> ErrorMetrics {
    let (mut e1, mut e3, mut eu, mut m1, mut m3, mut mu, mut u2, mut u4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for f in field {
        if (f.zr * f.zr + f.zi * f.zi).sqrt() > radius {
            continue;
        }
        let zeta = embed_point(f.x, f.y);
        let exact = monomial(zeta, degree).components();
        let exact_u = (monomial(zeta, degree + 1) * (1.0 / (degree + 1) as f64)).components().u1;
        e1 = e1.max((f.u1 - exact.u1).abs());
        e3 = e3.max((f.u3 - exact.u3).abs());
        eu = eu.max((f.u - exact_u).abs());
        m1 = m1.max(exact.u1.abs());
        m3 = m3.max(exact.u3.abs());
        mu = mu.max(exact_u.abs());
        u2 = u2.max((f.u2 - exact.u2).abs());
        u4 = u4.max((f.u4 - exact.u4).abs());
    }
    let rel = |e: f64, m: f64| if m > 0.0 { e / m } else { e };
    ErrorMetrics {
        radius,
        u1_relative: rel(e1, m1),
        u3_relative: rel(e3, m3),
        u_relative: rel(eu, mu),
        u2_max_abs: u2,
        u4_max_abs: u4,
    }
}

/// Interior limits of `(U₁, U₃)` along one radius, extrapolated to the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRow {
    pub density: String,
    pub theta: f64,
    pub boundary_u1: f64,
    pub boundary_u3: f64,
    pub limit_u1: f64,
    pub limit_u3: f64,
    pub deviation: f64,
}

/// Polynomial extrapolation to `h = 0` through all `(h, v)` pairs (Neville).
pub fn extrapolate_to_zero(hs: &[f64], vs: &[f64]) -> f64 {
    let mut p = vs.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (hs[i + m] * p[i] - hs[i] * p[i + 1]) / (hs[i + m] - hs[i]);
        }
    }
    p[0]
}

/// Compares the boundary-limit formulas with radial interior limits of
/// `(U₁, U₃)` taken at `1 − 2^{-k}`, `k = 4..=9`, extrapolated to `r = 1`.
pub fn jump_check(
    map: &CornerDomainMap,
    named: &[(String, BoundaryDensity)],
    angles: &[f64],
    grid: &QuadratureGrid,
    opts: &CauchyOptions,
) -> Result<Vec<JumpRow>> {
    let hs: Vec<f64> = (4..=9).map(|k| 2f64.powi(-k)).collect();
    let points = node_points(map, grid);
    let mut rows = Vec::new();
    for (name, density) in named {
        let eval = PhiEvaluator::new(map, density, grid, *opts);
        for theta in angles {
            let (b1, b3) = boundary_value_u13(map, density, *theta, grid, Some(&points), opts)?;
            let mut v1 = Vec::new();
            let mut v3 = Vec::new();
            for h in &hs {
                let phi = eval.eval(Complex64::from_polar(1.0 - h, *theta))?;
                v1.push(phi.z1.re);
                v3.push(phi.z2.re);
            }
            let l1 = extrapolate_to_zero(&hs, &v1);
            let l3 = extrapolate_to_zero(&hs, &v3);
            rows.push(JumpRow {
                density: name.clone(),
                theta: *theta,
                boundary_u1: b1,
                boundary_u3: b3,
                limit_u1: l1,
                limit_u3: l3,
                deviation: (l1 - b1).abs().max((l3 - b3).abs()),
            });
        }
    }
    Ok(rows)
}

/// The three test densities `(1, 0)`, `(0, 1)` and `(cos θ, sin 2θ)`.
pub fn standard_densities() -> Vec<(String, BoundaryDensity)> {
    vec![
        ("(1,0)".to_string(), BoundaryDensity::from_rules(|_| 1.0, |_| 0.0)),
        ("(0,1)".to_string(), BoundaryDensity::from_rules(|_| 0.0, |_| 1.0)),
        ("(cos t, sin 2t)".to_string(), BoundaryDensity::from_rules(|t| t.cos(), |t| (2.0 * t).sin())),
    ]
}

/// Five radii at angles spread over the circle, avoiding corner preimages.
pub fn default_jump_angles() -> Vec<f64> {
    vec![0.3, 0.3 + 0.4 * PI, 0.3 + 0.8 * PI, 0.3 + 1.2 * PI, 0.3 + 1.6 * PI]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pull_back_identity_and_cusp() {
        let id = CornerDomainMap::identity();
        let d = pull_back(&id, Arc::new(|x, _| x), Arc::new(|_, y| y));
        assert!(((d.u1)(0.4) - 0.4f64.cos()).abs() < 1e-15);
        let k = pull_back(&id, Arc::new(|_, _| 2.5), Arc::new(|_, _| -1.0));
        assert_eq!(((k.u1)(1.0), (k.u3)(2.0)), (2.5, -1.0));
        let cusp = CornerDomainMap::cusp(0.0).unwrap();
        let d = pull_back(&cusp, Arc::new(|x, _| x), Arc::new(|_, y| y));
        let t = 0.9;
        let oracle = (Complex64::from_polar(1.0, t) + 1.0).powu(2).re;
        assert!(((d.u1)(t) - oracle).abs() < 1e-15);
    }

    #[test]
    fn manufactured_low_degrees() {
        let id = CornerDomainMap::identity();
        let d1 = manufactured_data(&id, 1);
        assert!(((d1.u1)(0.3) - 0.3f64.cos()).abs() < 1e-15 && ((d1.u3)(0.3) - 0.3f64.sin()).abs() < 1e-15);
        let d2 = manufactured_data(&id, 2);
        let (x, y) = (0.3f64.cos(), 0.3f64.sin());
        assert!(((d2.u1)(0.3) - (x * x + y * y)).abs() < 1e-15);
        assert!(((d2.u3)(0.3) - 2.0 * x * y).abs() < 1e-15);
    }

    #[test]
    fn manufactured_cubic_on_cusp() {
        // Symbolic expansion of ζ³: U₁ = x³ + 3xy² ... via (w + v n)³ with w = x + iy, v = y.
        let cusp = CornerDomainMap::cusp(0.0).unwrap();
        let d = manufactured_data(&cusp, 3);
        for t in [0.2, 1.7, 4.0] {
            let p = cusp.sigma(Complex64::from_polar(1.0, t));
            let (x, y) = (p.re, p.im);
            let w = c(x, y);
            let z1 = w * w * w - I * 3.0 * w * w * y;
            let z2 = 3.0 * w * w * y;
            assert!(((d.u1)(t) - z1.re).abs() < 1e-12);
            assert!(((d.u3)(t) - z2.re).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_density_gives_zero_phi() {
        let id = CornerDomainMap::identity();
        let g = QuadratureGrid::uniform(64, 0.0).unwrap();
        let v = evaluate_phi(&id, &BoundaryDensity::zero(), c(0.2, 0.3), &g, &CauchyOptions::default()).unwrap();
        assert_eq!(v, BihNumber::ZERO);
    }

    #[test]
    fn expanded_matches_unexpanded() {
        let id = CornerDomainMap::identity();
        let g = QuadratureGrid::uniform(512, 0.0).unwrap();
        let density = BoundaryDensity::from_rules(|t| t.cos(), |t| t.sin());
        let ev = PhiEvaluator::new(&id, &density, &g, CauchyOptions::default());
        let z = c(0.0, 0.4);
        let a = ev.eval(z).unwrap();
        let b = ev.eval_unexpanded(z).unwrap();
        assert!(a.max_abs_diff(b) < 1e-8, "{a} vs {b}");
        let cusp = CornerDomainMap::cusp(0.0).unwrap();
        let g = QuadratureGrid::graded(256, 3.0, 0.0, &[PI]).unwrap();
        let ev = PhiEvaluator::new(&cusp, &density, &g, CauchyOptions::default());
        let z = c(0.2, -0.3);
        assert!(ev.eval(z).unwrap().max_abs_diff(ev.eval_unexpanded(z).unwrap()) < 1e-8);
    }

    #[test]
    fn antiderivative_of_simple_fields() {
        let id = CornerDomainMap::identity();
        let path = [c(0.0, 0.0), c(0.3, 0.1), c(0.5, -0.2)];
        let out = antiderivative_u(&id, |_| Ok(BihNumber::E1), &path, BihNumber::ZERO).unwrap();
        assert!((out[2].z1.re - 0.5).abs() < 1e-14);
        let two_zeta = |z: Complex64| Ok(embed_point(z.re, z.im) * 2.0);
        let out = antiderivative_u(&id, two_zeta, &path, BihNumber::ZERO).unwrap();
        assert!((out[2].z1.re - (0.25 + 0.04)).abs() < 1e-12);
        let other = [c(0.0, 0.0), c(-0.2, -0.4), c(0.5, -0.2)];
        let alt = antiderivative_u(&id, two_zeta, &other, BihNumber::ZERO).unwrap();
        assert!(alt[2].max_abs_diff(out[2]) < 1e-12);
        assert!(matches!(
            antiderivative_u(&id, two_zeta, &[c(0.0, 0.0), c(1.0, 0.0)], BihNumber::ZERO),
            Err(Error::PathExitsDomain(_))
        ));
    }

    #[test]
    fn tabulated_interpolation() {
        let n = 64;
        let theta: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
        let u1: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let u3: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let tab = Arc::new(TabulatedData::new(theta, u1, u3).unwrap());
        let d = tab.to_boundary_data();
        for t in [0.01, 3.0, 6.27, -0.5] {
            assert!(((d.u1)(t) - t.cos()).abs() < 1e-5);
            assert!(((d.u3)(t) - t.sin()).abs() < 1e-5);
        }
        assert!(TabulatedData::new(vec![0.0, 1.0, 0.5, 2.0], vec![0.0; 4], vec![0.0; 4]).is_err());
    }

    #[test]
    fn data_growth_flagged() {
        let cusp = CornerDomainMap::cusp(0.1).unwrap();
        let fine = pull_back(&cusp, Arc::new(|x, _| x), Arc::new(|_, y| y));
        assert!(check_data_growth(&cusp, &fine).is_ok());
        let wild = pull_back(&cusp, Arc::new(|x, y| (x * x + y * y).powf(-0.4)), Arc::new(|_, _| 0.0));
        assert!(matches!(check_data_growth(&cusp, &wild), Err(Error::DataSingularAtCorner { corner: 0 })));
    }

    #[test]
    fn neville_extrapolation() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let vs: Vec<f64> = hs.iter().map(|h| 2.0 + 3.0 * h - h * h).collect();
        assert!((extrapolate_to_zero(&hs, &vs) - 2.0).abs() < 1e-13);
    }
}
