//! Worked examples checked against values computed here by independent means:
//! hand expansion, Cramer's rule, finite differences, direct quadrature.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use bihsolve::algebra::{biharmonic_residual, cauchy_riemann_residual, embed_point, monomial, SampleGrid};
use bihsolve::geometry::arc_chord_ratio;
use bihsolve::kernels::{kernel_omega1, kernel_omega2};
use bihsolve::pipeline::{antiderivative_u, evaluate_phi, manufactured_data, pull_back, solve_boundary};
use bihsolve::quadrature::{boundary_value_u13, mean_constant, schwarz_integral, CauchyOptions};
use bihsolve::{BihNumber, BoundaryData, BoundaryDensity, CornerDomainMap, CornerSpec, QuadratureGrid};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Neville extrapolation to h = 0, written out here rather than borrowed.
fn extrapolate(hs: &[f64], vs: &[f64]) -> f64 {
    let mut p = vs.to_vec();
    for m in 1..p.len() {
        for i in 0..p.len() - m {
            p[i] = (hs[i + m] * p[i] - hs[i] * p[i + 1]) / (hs[i + m] - hs[i]);
        }
    }
    p[0]
}

#[test]
fn inverse_of_2e1_plus_e2_matches_cramer() {
    // (2e₁ + e₂)(x₁e₁ + x₂e₂) = (2x₁ + x₂)e₁ + (x₁ + (2 + 2i)x₂)e₂ = e₁.
    let (a, b, cc, d) = (c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(2.0, 2.0));
    let det = a * d - b * cc;
    let x1 = d / det;
    let x2 = -cc / det;
    assert!((x1 - c(14.0, -2.0) / 25.0).norm() < 1e-15);
    assert!((x2 - c(-3.0, 4.0) / 25.0).norm() < 1e-15);
    let inv = BihNumber::new(c(2.0, 0.0), c(1.0, 0.0)).inverse().unwrap();
    assert!((inv.z1 - x1).norm() < 1e-15 && (inv.z2 - x2).norm() < 1e-15, "{inv}");
}

#[test]
fn cube_of_zeta_matches_spectral_form() {
    // In spectral form w e₁ + v n with n² = 0, (w + v n)³ = w³ + 3w²v n.
    let zeta = embed_point(1.0, 1.0);
    let (w, v) = zeta.spectral();
    let oracle = BihNumber::from_spectral(w * w * w, 3.0 * w * w * v);
    assert!(monomial(zeta, 3).max_abs_diff(oracle) < 1e-14);
    assert_eq!(monomial(zeta, 0), BihNumber::E1);
}

#[test]
fn hand_expanded_cube_components_are_biharmonic() {
    // ζ³ = (x³ + 3xy² + 2iy³)e₁ + (3x²y − 3y³ + 6ixy²)e₂.
    for (x, y) in [(0.3, -0.2), (1.1, 0.7), (-0.5, 0.4)] {
        let m = monomial(embed_point(x, y), 3).components();
        assert!((m.u1 - (x * x * x + 3.0 * x * y * y)).abs() < 1e-14);
        assert!((m.u2 - 2.0 * y * y * y).abs() < 1e-14);
        assert!((m.u3 - (3.0 * x * x * y - 3.0 * y * y * y)).abs() < 1e-14);
        assert!((m.u4 - 6.0 * x * y * y).abs() < 1e-14);
    }
    let u3 = SampleGrid::centered(0.4, 0.02, |x, y| 3.0 * x * x * y - 3.0 * y * y * y);
    assert!(biharmonic_residual(&u3).unwrap() <= 1e-6);
}

#[test]
fn cauchy_riemann_separates_monogenic_from_not() {
    let square = SampleGrid::centered(0.4, 0.01, |x, y| monomial(embed_point(x, y), 2));
    assert!(cauchy_riemann_residual(&square).unwrap() <= 1e-10);
    let constant = SampleGrid::centered(0.4, 0.01, |_, _| BihNumber::E1);
    assert_eq!(cauchy_riemann_residual(&constant).unwrap(), 0.0);
    // U₁ = x, U₃ = −y: ∂Φ/∂y = −e₂ but (∂Φ/∂x)e₂ = e₂, so the residual is 2.
    for h in [0.1, 0.05] {
        let bad = SampleGrid::centered(0.4, h, |x, y| BihNumber::new(c(x, 0.0), c(-y, 0.0)));
        assert!(cauchy_riemann_residual(&bad).unwrap() >= 0.5);
    }
}

#[test]
fn corner_distance_examples() {
    let cusp = CornerDomainMap::cusp(0.0).unwrap();
    assert_eq!(cusp.r(c(0.0, 0.0)), 1.0);
    let two = CornerDomainMap::corner_family(
        vec![CornerSpec::new(0.0, 0.5, 0.0).unwrap(), CornerSpec::new(PI, 0.5, 0.0).unwrap()],
        c(1.0, 0.0),
    )
    .unwrap();
    assert!((two.r(c(0.0, 1.0)) - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn difference_quotient_examples() {
    let id = CornerDomainMap::identity();
    assert_eq!(id.d(c(0.3, 0.1), c(-0.5, 0.2)), c(1.0, 0.0));
    let cusp = CornerDomainMap::cusp(0.0).unwrap();
    // σ(i) − σ(0) = (i + 1)² − 1 = 2i − 1, divided by i.
    let direct = (cusp.sigma(c(0.0, 1.0)) - cusp.sigma(c(0.0, 0.0))) / c(0.0, 1.0);
    assert!((direct - c(2.0, 1.0)).norm() < 1e-15);
    assert!((cusp.d(c(0.0, 1.0), c(0.0, 0.0)) - direct).norm() < 1e-15);
    let (d1, d2) = cusp.d12(c(0.0, 1.0), c(0.0, 0.0));
    assert!((d1 + c(0.0, 1.0) * d2 - c(2.0, 1.0)).norm() < 1e-15);

    // Near-diagonal quotient of a cubic: σ'(S) from a Richardson pair of
    // quotients at |S − Z| = 1e-6 and 2e-6.
    let poly = CornerDomainMap::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.2, 0.1), c(0.0, -0.05)]).unwrap();
    let s = Complex64::from_polar(1.0, 0.7);
    let q = |h: f64| {
        let z = s - Complex64::from_polar(h, 0.2);
        (poly.sigma(s) - poly.sigma(z)) / (s - z)
    };
    let oracle = 2.0 * q(1e-6) - q(2e-6);
    let z = s - Complex64::from_polar(1e-12, 0.2);
    assert!((poly.d(s, z) - oracle).norm() < 1e-9);
}

#[test]
fn arc_over_chord_at_a_right_angle() {
    let r = arc_chord_ratio(c(1.0, 0.0), c(0.0, 1.0));
    assert!((r - FRAC_PI_2 / 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn corner_family_radial_exponent() {
    let map = CornerDomainMap::corner_family(vec![CornerSpec::new(0.0, 0.5, 0.0).unwrap()], c(1.0, 0.0)).unwrap();
    let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..=40 {
        let eps = 10f64.powf(-2.0 - 4.0 * k as f64 / 40.0);
        let (lx, ly) = (eps.ln(), map.sigma_prime(c(1.0 - eps, 0.0)).norm().ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        n += 1.0;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!((slope - 0.5).abs() <= 0.02, "slope {slope}");
}

#[test]
fn cusp_omega1_closed_form() {
    let map = CornerDomainMap::cusp(0.0).unwrap();
    let (s, z) = (c(1.0, 0.0), c(0.0, 0.0));
    let sigma_prime = 2.0 * (s + 1.0);
    let d = ((s + 1.0) * (s + 1.0) - (z + 1.0) * (z + 1.0)) / (s - z);
    assert_eq!((sigma_prime, d), (c(4.0, 0.0), c(3.0, 0.0)));
    let oracle = sigma_prime / d - 1.0;
    let v = kernel_omega1(&map, 1.0, &map.point(s), &map.point(z)).unwrap();
    assert!((v - oracle).norm() < 1e-15 && (v - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
}

#[test]
fn identity_omega2_from_finite_differences() {
    let map = CornerDomainMap::identity();
    // σ₂ = Im S on the circle; σ₂'(S) = (dσ₂/dθ)/(iS) by a central difference.
    let h = 1e-5f64;
    let sigma2_prime = ((h.sin() - (-h).sin()) / (2.0 * h)) / c(0.0, 1.0);
    assert!((sigma2_prime - c(0.0, -1.0)).norm() < 1e-9);
    // d = 1, d₂ = (Im S − Im Z)/(S − Z) = 0 at S = 1, Z = 0, σ'(S) = 1.
    let oracle = 0.5 * (c(0.0, 0.0) - sigma2_prime / 1.0);
    let v = kernel_omega2(&map, 1.0, &map.point(c(1.0, 0.0)), &map.point(c(0.0, 0.0))).unwrap();
    assert!((v - oracle).norm() < 1e-9);
    assert!((v - c(0.0, 0.5)).norm() < 1e-15);
}

#[test]
fn schwarz_of_cos_3theta() {
    let grid = QuadratureGrid::uniform(256, 0.0).unwrap();
    let z = Complex64::from_polar(0.3, PI / 7.0);
    let v = schwarz_integral(|t| (3.0 * t).cos(), z, &grid, &CauchyOptions::default()).unwrap();
    assert!((v.re - 0.027 * (3.0 * PI / 7.0).cos()).abs() < 1e-12);
}

#[test]
fn mean_constant_of_2_plus_cos_5theta() {
    let phi = |t: f64| 2.0 + (5.0 * t).cos();
    // Direct angular quadrature: (1/4π) ∫ φ dθ by a 10⁴-point trapezoid rule.
    let m = 10_000;
    let oracle: f64 = (0..m).map(|k| phi(TAU * k as f64 / m as f64)).sum::<f64>() * (TAU / m as f64) / (4.0 * PI);
    assert!((oracle - 1.0).abs() < 1e-12);
    let grid = QuadratureGrid::uniform(64, 0.0).unwrap();
    let values: Vec<f64> = grid.theta.iter().map(|t| phi(*t)).collect();
    assert!((mean_constant(&values, &grid) - oracle).abs() < 1e-12);
}

#[test]
fn boundary_value_matches_the_interior_limit() {
    let map = CornerDomainMap::identity();
    let grid = QuadratureGrid::uniform(512, 0.0).unwrap();
    let opts = CauchyOptions::default();
    let density = BoundaryDensity::from_rules(|t| t.cos(), |_| 0.0);
    let (b1, _) = boundary_value_u13(&map, &density, 0.0, &grid, None, &opts).unwrap();
    let hs: Vec<f64> = (4..=12).map(|k| 2f64.powi(-k)).collect();
    let vs: Vec<f64> = hs
        .iter()
        .map(|h| evaluate_phi(&map, &density, c(1.0 - h, 0.0), &grid, &opts).unwrap().z1.re)
        .collect();
    let limit = extrapolate(&hs, &vs);
    assert!((limit - b1).abs() < 1e-6, "limit {limit} boundary {b1}");
    let zero = BoundaryDensity::zero();
    assert_eq!(boundary_value_u13(&map, &zero, 0.4, &grid, None, &opts).unwrap(), (0.0, 0.0));
}

#[test]
fn pull_back_through_the_cusp() {
    let cusp = CornerDomainMap::cusp(0.0).unwrap();
    let data = pull_back(&cusp, Arc::new(|x, _| x), Arc::new(|_, _| 3.0));
    for t in [0.0, 0.9, 2.0, 4.4] {
        let s = Complex64::from_polar(1.0, t);
        assert!(((data.u1)(t) - ((s + 1.0) * (s + 1.0)).re).abs() < 1e-14);
        assert_eq!((data.u3)(t), 3.0);
    }
    // Degree-3 manufactured traces against the hand expansion of ζ³.
    let cubic = manufactured_data(&cusp, 3);
    for t in [0.3, 1.7, 2.9, 5.0] {
        let w = cusp.sigma(Complex64::from_polar(1.0, t));
        let (x, y) = (w.re, w.im);
        assert!(((cubic.u1)(t) - (x * x * x + 3.0 * x * y * y)).abs() < 1e-12);
        assert!(((cubic.u3)(t) - (3.0 * x * x * y - 3.0 * y * y * y)).abs() < 1e-12);
    }
}

#[test]
fn antiderivative_of_2zeta_recovers_r_squared() {
    let map = CornerDomainMap::identity();
    let path: Vec<Complex64> = (0..=8).map(|k| Complex64::from_polar(0.1 * k as f64, 0.7)).collect();
    let phi = |z: Complex64| Ok(embed_point(z.re, z.im) * 2.0);
    let acc = antiderivative_u(&map, phi, &path, BihNumber::ZERO).unwrap();
    for (z, v) in path.iter().zip(&acc) {
        assert!((v.z1.re - z.norm_sqr()).abs() < 1e-8);
    }
    // Two paths to the same endpoint for Φ = ζ³.
    let cube = |z: Complex64| Ok(monomial(embed_point(z.re, z.im), 3));
    let end = c(0.5, 0.4);
    let a = antiderivative_u(&map, cube, &[c(0.0, 0.0), c(0.5, 0.0), end], BihNumber::ZERO).unwrap();
    let b = antiderivative_u(&map, cube, &[c(0.0, 0.0), c(0.0, 0.4), c(-0.2, 0.6), end], BihNumber::ZERO).unwrap();
    assert!(a.last().unwrap().max_abs_diff(*b.last().unwrap()) <= 1e-9);
}

fn disk_data(offset: f64) -> BoundaryData {
    // Traces of ζ² on the circle, rotated by `offset`.
    let f = move |t: f64| monomial(embed_point((t - offset).cos(), (t - offset).sin()), 2).components();
    BoundaryData { u1: Arc::new(move |t| f(t).u1), u3: Arc::new(move |t| f(t).u3) }
}

#[test]
fn rotated_disk_problem_has_rotated_solution() {
    let map = CornerDomainMap::identity();
    let alpha = 0.37;
    let (base, _) = solve_boundary(&map, &disk_data(0.0), Arc::new(QuadratureGrid::uniform(128, 0.0).unwrap())).unwrap();
    let (turned, _) = solve_boundary(&map, &disk_data(alpha), Arc::new(QuadratureGrid::uniform(128, alpha).unwrap())).unwrap();
    for k in 0..128 {
        let t = TAU * (k as f64 + 0.5) / 128.0;
        let (a1, a3) = base.eval(t);
        let (b1, b3) = turned.eval(t + alpha);
        assert!((a1 - b1).abs() < 1e-10 && (a3 - b3).abs() < 1e-10, "at {t}: {a1} {a3} vs {b1} {b3}");
    }
}

#[test]
fn disk_densities_self_converge() {
    let map = CornerDomainMap::identity();
    let (coarse, _) = solve_boundary(&map, &disk_data(0.0), Arc::new(QuadratureGrid::uniform(64, 0.0).unwrap())).unwrap();
    let (fine, _) = solve_boundary(&map, &disk_data(0.0), Arc::new(QuadratureGrid::uniform(128, 0.0).unwrap())).unwrap();
    let grid = QuadratureGrid::uniform(64, 0.0).unwrap();
    for t in &grid.theta {
        let (a1, a3) = coarse.eval(*t);
        let (b1, b3) = fine.eval(*t);
        assert!((a1 - b1).abs() <= 1e-6 && (a3 - b3).abs() <= 1e-6, "at {t}: {a1} {a3} vs {b1} {b3}");
    }
}
