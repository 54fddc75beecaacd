//! Quadrature on the unit circle: Cauchy-type integrals, the Schwarz integral,
//! the mean constants, boundary values, and the discretized boundary system.

pub mod grid;
pub mod nystrom;
pub mod sweep;

use std::cell::RefCell;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{CornerDomainMap, PointData};
use crate::integrate::{adaptive_graded, cached_gauss, AdaptiveOptions};
use crate::kernels::{kernel_omega_star, kernel_omega_star_star, BoundaryDensity, DensityComponent};

pub use grid::{GridParams, QuadratureGrid};

/// Points with `| |Z| − 1 |` below this are treated as lying on the circle.
pub const ON_CIRCLE: f64 = 1e-13;

/// Controls how singular and nearly singular integrals are resolved.
#[derive(Clone, Copy, Debug)]
pub struct CauchyOptions {
    /// Interior points closer to the circle than `near_factor` local node
    /// spacings are integrated adaptively instead of with the grid rule.
    pub near_factor: f64,
    /// Agreement required between the 16- and 32-node panels around a
    /// boundary point, relative to `max(1, |panel|)`.
    pub panel_tol: f64,
    pub adaptive: AdaptiveOptions,
}

impl Default for CauchyOptions {
    fn default() -> Self {
        CauchyOptions {
            near_factor: 6.0,
            panel_tol: 1e-8,
            adaptive: AdaptiveOptions { abs_tol: 1e-11, rel_tol: 1e-10, max_intervals: 20_000 },
        }
    }
}

/// Pulled-back boundary data `(ũ₁, ũ₃)` as functions of the angle on the circle.
#[derive(Clone)]
pub struct BoundaryData {
    pub u1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub u3: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundaryData(..)")
    }
}

impl BoundaryData {
    pub fn new(
        u1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u3: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        BoundaryData { u1: Arc::new(u1), u3: Arc::new(u3) }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, |_| 0.0)
    }
}

/// `(1/2π) ∫ g(θ) dθ` over the arcs covered by `grid`, for an integrand that
/// is smooth except possibly near the angle of the interior point `z`.
/// The integrand receives the angle and, on the grid rule, the node index.
pub fn circle_integral(
    g: impl Fn(f64, Option<usize>) -> Result<Complex64>,
    z: Complex64,
    grid: &QuadratureGrid,
    opts: &CauchyOptions,
) -> Result<Complex64> {
    let dist = 1.0 - z.norm();
    let theta_z = z.arg();
    if dist >= opts.near_factor * grid.local_spacing(theta_z).max(TAU / grid.len() as f64 * 1e-3) || z.norm() < 0.5 {
        let mut total = Complex64::new(0.0, 0.0);
        for (j, (t, w)) in grid.theta.iter().zip(&grid.weights).enumerate() {
            total += g(*t, Some(j))? * *w;
        }
        return Ok(total / TAU);
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |t: f64| match g(t, None) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut integrand = integrand;
    for (a, b) in grid.arc_ranges() {
        let mut breaks = vec![a];
        // Interpolated densities switch stencil at the nodes.
        for t in &grid.theta {
            let t = a + grid::wrap_angle(*t - a);
            if t > a && t < b {
                breaks.push(t);
            }
        }
        // Cluster breakpoints around the projection of z at the scale of its distance.
        let rel = a + grid::wrap_angle(theta_z - a);
        for k in [-4.0, -1.0, 0.0, 1.0, 4.0] {
            let t = rel + k * dist.max(1e-12);
            if t > a && t < b {
                breaks.push(t);
            }
            let t2 = t - TAU;
            if t2 > a && t2 < b {
                breaks.push(t2);
            }
        }
        breaks.push(b);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let (v, err, tol) = adaptive_graded(&mut integrand, &breaks, grid.end_grading(a, b), opts.adaptive);
        if !(err <= tol) {
            return Err(Error::SingularityUnresolved { change: err, tolerance: tol });
        }
        total += v;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(total / TAU)
}

/// `𝓘[Ω](Z) = (1/2πi) ∫_Γ Ω(S, Z)/(S − Z) dS` for a kernel given as a function
/// of the angle of `S` (and the node index when `S` is a grid node).
///
/// Interior points use the grid rule or, close to the circle, adaptive
/// quadrature. Points on the circle replace the two nodes bracketing `Z` by a
/// Gauss panel split at `Z`, checked against a panel of twice the size.
pub fn integral_i(
    omega: impl Fn(f64, Option<usize>) -> Result<Complex64>,
    z: Complex64,
    grid: &QuadratureGrid,
    opts: &CauchyOptions,
) -> Result<Complex64> {
    if grid.is_empty() {
        return Err(Error::Config("empty quadrature grid".into()));
    }
    let r = z.norm();
    if r > 1.0 + ON_CIRCLE {
        return Err(Error::Config(format!("evaluation point {z} lies outside the closed disk")));
    }
    if r < 1.0 - ON_CIRCLE {
        return circle_integral(
            |t, j| {
                let s = Complex64::from_polar(1.0, t);
                Ok(omega(t, j)? * s / (s - z))
            },
            z,
            grid,
            opts,
        );
    }
    let theta_z = z.arg();
    if grid.corner_distance(theta_z) < 1e-12 {
        return Err(Error::NodeOnCorner { angle: theta_z });
    }
    let z = Complex64::from_polar(1.0, theta_z);
    let Some((skip, (a, b), tz)) = grid.bracketing_cells(theta_z) else {
        return Err(Error::Config(format!("boundary point at angle {theta_z} lies in an excluded arc")));
    };
    let f = |t: f64| -> Result<Complex64> {
        let s = Complex64::from_polar(1.0, t);
        if s == z {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(omega(t, None)? * s / (s - z))
    };
    let mut rest = Complex64::new(0.0, 0.0);
    for (j, (t, w)) in grid.theta.iter().zip(&grid.weights).enumerate() {
        if j == skip[0] || j == skip[1] {
            continue;
        }
        let s = grid.nodes[j];
        rest += omega(*t, Some(j))? * s / (s - z) * *w;
    }
    let panel = |n: usize| -> Result<Complex64> {
        let (x, wts) = cached_gauss(n);
        let mut total = Complex64::new(0.0, 0.0);
        for (lo, hi) in [(a, tz), (tz, b)] {
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            if half <= 0.0 {
                continue;
            }
            for (xi, wi) in x.iter().zip(wts) {
                total += f(mid + half * xi)? * (*wi * half);
            }
        }
        Ok(total)
    };
    let coarse = panel(8)?;
    let fine = panel(16)?;
    let change = (fine - coarse).norm();
    let tolerance = opts.panel_tol * fine.norm().max(1.0);
    if change <= tolerance {
        return Ok((rest + fine) / TAU);
    }
    // Close to a corner the panel sees the density singularity as well; refine adaptively.
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |t: f64| match f(t) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    };
    let local = AdaptiveOptions { abs_tol: tolerance, rel_tol: opts.panel_tol, ..opts.adaptive };
    let mut breaks = vec![a, tz, b];
    breaks.dedup();
    let (v, err, _) = adaptive_graded(integrand, &breaks, grid.end_grading(a, b), local);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if err <= tolerance {
        Ok((rest + v) / TAU)
    } else {
        Err(Error::SingularityUnresolved { change: if err.is_finite() { err } else { change }, tolerance })
    }
}

/// `𝒮[φ](Z) = (1/2πi) ∫_Γ (φ(S)/S)(S + Z)/(S − Z) dS` for interior `Z`.
pub fn schwarz_integral(
    phi: impl Fn(f64) -> f64,
    z: Complex64,
    grid: &QuadratureGrid,
    opts: &CauchyOptions,
) -> Result<Complex64> {
    if z.norm() >= 1.0 {
        return Err(Error::Config(format!("Schwarz integral needs an interior point, got {z}")));
    }
    circle_integral(
        |t, _| {
            let s = Complex64::from_polar(1.0, t);
            Ok(phi(t) * (s + z) / (s - z))
        },
        z,
        grid,
        opts,
    )
}

/// `C_φ = (1/4πi) ∫_Γ φ(S)/S dS = (1/4π) ∫ φ(e^{iθ}) dθ` by the grid rule.
pub fn mean_constant(phi: &[f64], grid: &QuadratureGrid) -> f64 {
    phi.iter().zip(&grid.weights).map(|(p, w)| p * w).sum::<f64>() / (4.0 * PI)
}

/// Map data at every grid node.
pub fn node_points(map: &CornerDomainMap, grid: &QuadratureGrid) -> Vec<PointData> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.nodes.par_iter().map(|s| map.point(*s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.nodes.iter().map(|s| map.point(*s)).collect()
    }
}

/// The right-hand sides of the boundary-limit formulas
/// `½φ₁(Z₀) + Re 𝓘[Ω*](Z₀) + C_{φ₁}` and `½φ₃(Z₀) + Re 𝓘[Ω**](Z₀) + C_{φ₃}`
/// at `Z₀ = e^{iθ₀}`.
pub fn boundary_value_u13(
    map: &CornerDomainMap,
    density: &BoundaryDensity,
    theta0: f64,
    grid: &QuadratureGrid,
    points: Option<&[PointData]>,
    opts: &CauchyOptions,
) -> Result<(f64, f64)> {
    if let (DensityComponent::Zero, DensityComponent::Zero) = (&density.phi1, &density.phi3) {
        return Ok((0.0, 0.0));
    }
    let z0 = Complex64::from_polar(1.0, theta0);
    let zp = map.point(z0);
    let p1 = density.phi1.at_nodes(grid);
    let p3 = density.phi3.at_nodes(grid);
    let pd = |t: f64, j: Option<usize>| match (j, points) {
        (Some(j), Some(p)) => p[j],
        _ => map.point(Complex64::from_polar(1.0, t)),
    };
    let vals = |t: f64, j: Option<usize>| match j {
        Some(j) => (p1[j], p3[j]),
        None => density.eval(t),
    };
    let star = integral_i(
        |t, j| {
            let (a, b) = vals(t, j);
            kernel_omega_star(map, a, b, &pd(t, j), &zp)
        },
        z0,
        grid,
        opts,
    )?;
    let star_star = integral_i(
        |t, j| {
            let (a, b) = vals(t, j);
            kernel_omega_star_star(map, a, b, &pd(t, j), &zp)
        },
        z0,
        grid,
        opts,
    )?;
    let (f1, f3) = density.eval(theta0);
    Ok((
        0.5 * f1 + star.re + mean_constant(&p1, grid),
        0.5 * f3 + star_star.re + mean_constant(&p3, grid),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_omega2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trivial_cauchy_integrals() {
        let g = QuadratureGrid::uniform(64, 0.0).unwrap();
        let o = CauchyOptions::default();
        assert_eq!(integral_i(|_, _| Ok(c(0.0, 0.0)), c(0.2, 0.1), &g, &o).unwrap(), c(0.0, 0.0));
        let z = c(0.3, -0.2);
        let v = integral_i(|t, _| Ok(Complex64::from_polar(1.0, t) - z), z, &g, &o).unwrap();
        assert!(v.norm() < 1e-14);
        let v = integral_i(|_, _| Ok(c(1.0, 0.0)), c(0.0, 0.0), &g, &o).unwrap();
        assert!((v - 1.0).norm() < 1e-14);
        // Near the circle the adaptive path gives the same residue.
        let v = integral_i(|_, _| Ok(c(1.0, 0.0)), c(0.0, 0.999), &g, &o).unwrap();
        assert!((v - 1.0).norm() < 1e-10);
    }

    #[test]
    fn schwarz_identities() {
        let g = QuadratureGrid::uniform(256, 0.0).unwrap();
        let o = CauchyOptions::default();
        let z = c(0.3, 0.4);
        assert!((schwarz_integral(|_| 1.0, z, &g, &o).unwrap() - 1.0).norm() < 1e-12);
        let v = schwarz_integral(|t| t.cos(), c(0.5, 0.0), &g, &o).unwrap();
        assert!((v.re - 0.5).abs() < 1e-12);
        let z = Complex64::from_polar(0.3, PI / 7.0);
        let v = schwarz_integral(|t| (3.0 * t).cos(), z, &g, &o).unwrap();
        assert!((v.re - 0.027 * (3.0 * PI / 7.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn mean_constants() {
        let g = QuadratureGrid::uniform(64, 0.0).unwrap();
        let ones = vec![1.0; 64];
        assert!((mean_constant(&ones, &g) - 0.5).abs() < 1e-15);
        let cos: Vec<f64> = g.theta.iter().map(|t| t.cos()).collect();
        assert!(mean_constant(&cos, &g).abs() < 1e-15);
        let f: Vec<f64> = g.theta.iter().map(|t| 2.0 + (5.0 * t).cos()).collect();
        assert!((mean_constant(&f, &g) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_boundary_value_unit_density() {
        let map = CornerDomainMap::identity();
        let g = QuadratureGrid::uniform(128, 0.0).unwrap();
        let o = CauchyOptions::default();
        let density = BoundaryDensity::from_rules(|_| 1.0, |_| 0.0);
        let theta0 = 0.7;
        let (u1, _) = boundary_value_u13(&map, &density, theta0, &g, None, &o).unwrap();
        let z0 = map.point(Complex64::from_polar(1.0, theta0));
        let i2 = integral_i(
            |t, _| Ok(2.0 * Complex64::i() * kernel_omega2(&map, 1.0, &map.point(Complex64::from_polar(1.0, t)), &z0)?),
            z0.z,
            &g,
            &o,
        )
        .unwrap();
        assert!((u1 - (0.5 + i2.re + 0.5)).abs() < 1e-12);
        let zero = boundary_value_u13(&map, &BoundaryDensity::zero(), theta0, &g, None, &o).unwrap();
        assert_eq!(zero, (0.0, 0.0));
    }

    #[test]
    fn boundary_point_on_corner_rejected() {
        let g = QuadratureGrid::graded(64, 3.0, 0.0, &[PI]).unwrap();
        let r = integral_i(|_, _| Ok(c(1.0, 0.0)), c(-1.0, 0.0), &g, &CauchyOptions::default());
        assert!(matches!(r, Err(Error::NodeOnCorner { .. })));
    }
}
