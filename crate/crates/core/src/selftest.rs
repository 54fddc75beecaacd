//! Numerical self-checks of the algebra: multiplication table, nilpotents,
//! inversion, monogenicity of powers of ζ and biharmonicity of their components.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{biharmonic_residual, cauchy_riemann_residual, embed_point, monomial, BihNumber, SampleGrid};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SelfCheck {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        SelfCheck { name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        SelfCheck { name: name.into(), value, tolerance, pass: value >= tolerance }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestOptions {
    pub inverse_samples: usize,
    pub max_degree: u32,
    /// Half-width of the square sample grids centred at the origin.
    pub half_width: f64,
    /// Step of the biharmonic stencil check.
    pub stencil_step: f64,
    /// Coarse step of the Cauchy–Riemann order estimate (halved once).
    pub cr_step: f64,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions {
            inverse_samples: 10_000,
            max_degree: 6,
            half_width: 0.4,
            stencil_step: 0.02,
            cr_step: 0.01,
            seed: 11,
        }
    }
}

/// Cauchy–Riemann residuals below this are rounding, not truncation, and
/// carry no convergence order.
const CR_FLOOR: f64 = 1e-9;

/// Runs every check; `pass` on each row says whether it met its tolerance.
pub fn algebra_selftest(opts: &SelftestOptions) -> Result<Vec<SelfCheck>> {
    let (e1, e2, rho) = (BihNumber::E1, BihNumber::E2, BihNumber::RHO);
    let i2 = BihNumber::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0));
    let exact = |a: BihNumber, b: BihNumber| if a == b { 0.0 } else { a.max_abs_diff(b).max(f64::MIN_POSITIVE) };
    let mut out = vec![
        SelfCheck::at_most("e1*e1 = e1", exact(e1 * e1, e1), 0.0),
        SelfCheck::at_most("e1*e2 = e2", exact(e1 * e2, e2), 0.0),
        SelfCheck::at_most("e2*e1 = e2", exact(e2 * e1, e2), 0.0),
        SelfCheck::at_most("e2*e2 = e1 + 2i e2", exact(e2 * e2, i2), 0.0),
        SelfCheck::at_most("(e1^2 + e2^2)^2 = 0", exact((e1 * e1 + e2 * e2) * (e1 * e1 + e2 * e2), BihNumber::ZERO), 0.0),
        SelfCheck::at_most("rho^2 = 0", exact(rho * rho, BihNumber::ZERO), 0.0),
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    let mut drawn = 0;
    while drawn < opts.inverse_samples {
        let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let x = BihNumber::new(c(), c());
        // Keep clear of the radical so the round trip measures arithmetic, not conditioning.
        if x.spectral().0.norm() < 0.1 {
            continue;
        }
        drawn += 1;
        let inv = x.inverse()?;
        worst = worst.max((x * inv).max_abs_diff(e1)).max((inv * x).max_abs_diff(e1));
    }
    out.push(SelfCheck::at_most(format!("inverse round trip ({} samples)", opts.inverse_samples), worst, 1e-12));

    for n in 0..=opts.max_degree {
        let field = |h: f64| SampleGrid::centered(opts.half_width, h, |x, y| monomial(embed_point(x, y), n));
        let coarse = cauchy_riemann_residual(&field(opts.cr_step))?;
        let fine = cauchy_riemann_residual(&field(0.5 * opts.cr_step))?;
        if coarse <= CR_FLOOR {
            out.push(SelfCheck::at_most(format!("zeta^{n} Cauchy-Riemann residual (exact)"), coarse.max(fine), CR_FLOOR));
        } else {
            out.push(SelfCheck::at_least(format!("zeta^{n} Cauchy-Riemann order"), (coarse / fine).log2(), 1.9));
        }
        for (label, pick) in [("U1", 0usize), ("U3", 1)] {
            let u = SampleGrid::centered(opts.half_width, opts.stencil_step, |x, y| {
                let c = monomial(embed_point(x, y), n).components();
                if pick == 0 {
                    c.u1
                } else {
                    c.u3
                }
            });
            out.push(SelfCheck::at_most(format!("zeta^{n} {label} biharmonic residual"), biharmonic_residual(&u)?, 1e-6));
        }
    }
    Ok(out)
}
