use std::f64::consts::{PI, TAU};

use bihsolve::algebra::{embed_point, monomial};
use bihsolve::config::{Command, RunConfig};
use bihsolve::kernels::kernel_omega_star;
use bihsolve::quadrature::grid::GridParams;
use bihsolve::{BihNumber, CornerDomainMap, CornerSpec, QuadratureGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn bih() -> impl Strategy<Value = BihNumber> {
    (complex(), complex()).prop_map(|(a, b)| BihNumber::new(a, b))
}

fn close(a: BihNumber, b: BihNumber, scale: f64) -> bool {
    a.max_abs_diff(b) <= 1e-13 * scale.max(1.0)
}

/// A point of the open disk, kept off the circle.
fn disk_point() -> impl Strategy<Value = Complex64> {
    (0.0..0.97f64, 0.0..TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #[test]
    fn product_commutes(a in bih(), b in bih()) {
        prop_assert_eq!(a * b, b * a);
    }

    #[test]
    fn product_associates(a in bih(), b in bih(), c in bih()) {
        let scale = a.norm() * b.norm() * c.norm();
        prop_assert!(close((a * b) * c, a * (b * c), scale));
    }

    #[test]
    fn product_distributes(a in bih(), b in bih(), c in bih()) {
        let scale = a.norm() * (b.norm() + c.norm());
        prop_assert!(close(a * (b + c), a * b + a * c, scale));
    }

    #[test]
    fn e1_is_the_unit(a in bih()) {
        prop_assert_eq!(a * BihNumber::E1, a);
    }

    #[test]
    fn spectral_character_is_multiplicative(a in bih(), b in bih()) {
        let w = (a * b).spectral().0;
        let expect = a.spectral().0 * b.spectral().0;
        prop_assert!((w - expect).norm() <= 1e-13 * (1.0 + a.norm() * b.norm()));
    }

    #[test]
    fn inverse_round_trips_off_the_radical(a in bih()) {
        prop_assume!(a.spectral().0.norm() >= 0.1);
        let inv = a.inverse().unwrap();
        // The inverse grows like |v|/|w|², so the bound scales with it.
        let scale = a.norm() * inv.norm();
        prop_assert!((a * inv).max_abs_diff(BihNumber::E1) <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn radical_elements_are_not_invertible(v in complex()) {
        prop_assume!(v.norm() > 1e-3);
        prop_assert!(BihNumber::from_spectral(Complex64::new(0.0, 0.0), v).inverse().is_err());
    }

    #[test]
    fn powers_of_zeta_add_exponents(x in -0.9..0.9f64, y in -0.9..0.9f64, m in 0u32..6, n in 0u32..6) {
        let z = embed_point(x, y);
        prop_assert!(close(monomial(z, m + n), monomial(z, m) * monomial(z, n), 1.0));
    }

    #[test]
    fn omega_star_is_linear_in_the_density(
        t in 0.0..TAU,
        z in disk_point(),
        (p1, p3, q1, q3) in (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
        (a, b) in (-2.0..2.0f64, -2.0..2.0f64),
    ) {
        let map = CornerDomainMap::cusp(0.0).unwrap();
        prop_assume!((Complex64::from_polar(1.0, t) - z).norm() > 1e-3);
        let (s, z) = (map.point(Complex64::from_polar(1.0, t)), map.point(z));
        let combined = kernel_omega_star(&map, a * p1 + b * q1, a * p3 + b * q3, &s, &z).unwrap();
        let separate = a * kernel_omega_star(&map, p1, p3, &s, &z).unwrap() + b * kernel_omega_star(&map, q1, q3, &s, &z).unwrap();
        prop_assert!((combined - separate).norm() <= 1e-12 * (1.0 + separate.norm()));
    }

    #[test]
    fn difference_quotient_is_symmetric(s in disk_point(), z in disk_point(), c in complex()) {
        prop_assume!((s - z).norm() > 1e-6);
        let maps = [
            CornerDomainMap::cusp(0.0).unwrap(),
            CornerDomainMap::polynomial(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), 0.1 * c]).unwrap(),
        ];
        for map in &maps {
            let (a, b) = (map.d(s, z), map.d(z, s));
            prop_assert!((a - b).norm() <= 1e-14 * (1.0 + a.norm()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn graded_weights_cover_the_circle(
        n in 32usize..400,
        q in 1.0..5.0f64,
        delta in prop_oneof![Just(0.0), 0.001..0.2f64],
        angles in prop::collection::vec(0.0..TAU, 0..4),
    ) {
        let mut angles = angles;
        angles.sort_by(f64::total_cmp);
        // Corners closer than the excluded arcs would overlap; keep them apart.
        prop_assume!(angles.windows(2).all(|w| w[1] - w[0] > 0.5));
        prop_assume!(angles.len() < 2 || angles[0] + TAU - angles[angles.len() - 1] > 0.5);
        let grid = QuadratureGrid::graded(n, q, delta, &angles).unwrap();
        let total: f64 = grid.weights.iter().sum();
        // `delta` is a chord distance, so each excluded half-arc is 2 asin(delta/2).
        let covered = TAU - 4.0 * (0.5 * delta).asin() * angles.len() as f64;
        prop_assert!((total - covered).abs() <= 1e-12 * TAU, "{} vs {}", total, covered);
        prop_assert!(grid.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn config_survives_emit_and_parse(
        command in prop_oneof![
            Just(Command::Solve),
            Just(Command::JumpCheck),
            Just(Command::LemmaCheck),
            Just(Command::AlgebraSelftest),
            Just(Command::DeltaSweep),
            Just(Command::FieldExport),
        ],
        n in 16usize..2048,
        q in 1.0..6.0f64,
        delta in 0.0..0.2f64,
        angle in 0.0..TAU,
        beta in -0.9..1.0f64,
    ) {
        let mut cfg = RunConfig::new(command);
        cfg.grid = GridParams { n, q, delta, phase: 0.0 };
        cfg.map.name = "corner-family".into();
        cfg.map.corners = vec![CornerSpec::new(angle, beta, 0.0).unwrap(), CornerSpec::new(angle + PI, 0.5, 0.0).unwrap()];
        let text = cfg.emit().unwrap();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
