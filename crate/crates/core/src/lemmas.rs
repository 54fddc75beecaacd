//! Sampled checks of the difference-quotient and kernel estimates.
//!
//! Each row fits a constant to a sampled ratio (99.9th percentile for upper
//! bounds, 0.1th for lower bounds), repeats with four times as many samples
//! from an independent stream, and reports the relative drift. Constants are
//! reported, not compared with any reference value.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::modulus::{Modulus, ModulusConfig};
use crate::geometry::{CornerDomainMap, PointData};
use crate::integrate::{adaptive_graded, adaptive_real, AdaptiveOptions};
use crate::kernels::{exponent_bookkeeping, kernel_omega1, kernel_omega2, kernel_omega_star, kernel_quotients};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub lemma: String,
    pub quantity: String,
    pub kind: BoundKind,
    pub samples: usize,
    pub samples_refined: usize,
    /// Fitted constant on the base sample.
    pub fitted: f64,
    /// Fitted constant on the 4× sample.
    pub fitted_refined: f64,
    /// Raw extreme (max for upper bounds, min for lower bounds) on the 4× sample.
    pub raw_extreme: f64,
    pub drift: f64,
    pub drift_tolerance: f64,
    /// Ratios that came out NaN or infinite.
    pub nonfinite: usize,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub map: String,
    pub r0: f64,
    pub seed: u64,
    pub rows: Vec<LemmaRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaOptions {
    /// Base sample count for the difference-quotient rows.
    pub samples: usize,
    /// Base sample count for the rows that need a singular integral per sample.
    pub integral_samples: usize,
    pub seed: u64,
    pub modulus: ModulusConfig,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        LemmaOptions { samples: 100_000, integral_samples: 24, seed: 20240611, modulus: ModulusConfig::default() }
    }
}

const UPPER_QUANTILE: f64 = 0.999;
const LOWER_QUANTILE: f64 = 0.001;

fn quantile(values: &mut [f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let k = ((values.len() - 1) as f64 * q).round() as usize;
    let (_, v, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    *v
}

fn fit(mut values: Vec<f64>, kind: BoundKind) -> (f64, f64, usize) {
    let total = values.len();
    values.retain(|v| v.is_finite());
    let nonfinite = total - values.len();
    let raw = match kind {
        BoundKind::Upper => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        BoundKind::Lower => values.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let q = match kind {
        BoundKind::Upper => UPPER_QUANTILE,
        BoundKind::Lower => LOWER_QUANTILE,
    };
    (quantile(&mut values, q), raw, nonfinite)
}

#[allow(clippy::too_many_arguments)]
fn row(
    lemma: &str,
    quantity: &str,
    kind: BoundKind,
    tolerance: f64,
    base: Vec<f64>,
    refined: Vec<f64>,
    floor: f64,
) -> LemmaRow {
    let (samples, samples_refined) = (base.len(), refined.len());
    let (fitted, _, n1) = fit(base, kind);
    let (fitted_refined, raw_extreme, n2) = fit(refined, kind);
    let drift = (fitted_refined - fitted).abs() / fitted.abs();
    let positive = fitted > floor && fitted_refined > floor;
    LemmaRow {
        lemma: lemma.to_string(),
        quantity: quantity.to_string(),
        kind,
        samples,
        samples_refined,
        fitted,
        fitted_refined,
        raw_extreme,
        drift,
        drift_tolerance: tolerance,
        nonfinite: n1 + n2,
        stable: fitted.is_finite() && fitted_refined.is_finite() && positive && drift <= tolerance && n1 + n2 == 0,
    }
}

/// Random points on the circle and in the closed disk, half of them spread
/// uniformly and half drawn log-uniformly close to a random corner.
pub struct Sampler<'a> {
    map: &'a CornerDomainMap,
    rng: ChaCha8Rng,
}

impl<'a> Sampler<'a> {
    pub fn new(map: &'a CornerDomainMap, seed: u64) -> Self {
        Sampler { map, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn near_corner(&mut self) -> Option<f64> {
        if self.map.corners.is_empty() || self.rng.random::<bool>() {
            return None;
        }
        let j = self.rng.random_range(0..self.map.corners.len());
        Some(self.map.corners[j].angle)
    }

    /// Log-uniform distance in `[1e-6, 0.5]`.
    fn small(&mut self) -> f64 {
        10f64.powf(self.rng.random_range(-6.0..(0.5f64).log10()))
    }

    pub fn circle(&mut self) -> Complex64 {
        let t = match self.near_corner() {
            Some(a) => a + if self.rng.random::<bool>() { 1.0 } else { -1.0 } * self.small(),
            None => self.rng.random_range(0.0..TAU),
        };
        Complex64::from_polar(1.0, t)
    }

    pub fn disk(&mut self) -> Complex64 {
        match self.near_corner() {
            Some(a) => {
                let x = Complex64::from_polar(1.0, a);
                let rho = self.small();
                let psi = self.rng.random_range(-0.5 * PI..0.5 * PI);
                let z = x * (1.0 - Complex64::from_polar(rho, psi));
                if z.norm() > 1.0 {
                    x * (1.0 - rho)
                } else {
                    z
                }
            }
            None => Complex64::from_polar(self.rng.random::<f64>().sqrt(), self.rng.random_range(0.0..TAU)),
        }
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }
}

fn corner_product(map: &CornerDomainMap, f: impl Fn(Complex64, f64) -> f64) -> f64 {
    map.corners.iter().map(|c| f(c.x(), c.beta)).product()
}

/// `∏ⱼ(|S − Xⱼ| + |Z − Xⱼ|)^{βⱼ}`.
pub fn pair_envelope(map: &CornerDomainMap, s: Complex64, z: Complex64) -> f64 {
    corner_product(map, |x, b| ((s - x).norm() + (z - x).norm()).powf(b))
}

fn min_ratio(omega: &Modulus, num: f64, den: f64) -> f64 {
    (omega.eval(num) / omega.eval(den)).min(1.0)
}

/// Density `(1 + cos(t)/2)·∏ⱼ |σ(S) − σ(Xⱼ)|^{−αⱼ}` at the edge of the admissible class.
/// The smooth factor matters: `𝓘[Ω*]` annihilates constants, so with all `αⱼ = 0`
/// a bare product would test nothing.
pub fn class_density(map: &CornerDomainMap) -> impl Fn(f64) -> f64 + '_ {
    let images: Vec<(Complex64, f64)> = map.corners.iter().map(|c| (map.sigma(c.x()), c.alpha)).collect();
    move |t: f64| {
        let smooth = 1.0 + 0.5 * t.cos();
        if images.iter().all(|(_, a)| *a == 0.0) {
            return smooth;
        }
        let w = map.sigma(Complex64::from_polar(1.0, t));
        smooth * images.iter().map(|(x, a)| (w - x).norm().powf(-a)).product::<f64>()
    }
}

/// Half-width in θ of the window around a boundary target evaluated by the diagonal limit.
const DIAGONAL_WINDOW: f64 = 1e-5;

/// `𝓘[Ω*](Z)` for the density `(φ, 0)` by adaptive quadrature over the whole
/// circle, one corner-to-corner arc at a time, graded at the corners and
/// broken around the angle of `Z`.
pub fn cauchy_adaptive(map: &CornerDomainMap, phi: &dyn Fn(f64) -> f64, z: Complex64) -> Result<Complex64> {
    // Targets within rounding of the circle are boundary targets.
    let (z, dist) = match 1.0 - z.norm() {
        d if d < 1e-12 => (z / z.norm(), 0.0),
        d => (z, d),
    };
    let zp = map.point(z);
    let start = map.corners.first().map(|c| c.angle).unwrap_or(0.0);
    let tz = start + (z.arg() - start).rem_euclid(TAU);
    let mut corners: Vec<f64> = map.corners.iter().map(|c| start + (c.angle - start).rem_euclid(TAU)).collect();
    corners.push(start + TAU);
    corners.sort_by(f64::total_cmp);
    corners.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut extra = vec![tz];
    if dist > 0.0 {
        for k in [-4.0, -1.0, 1.0, 4.0] {
            extra.push(tz + k * dist);
        }
    }
    let failure = std::cell::RefCell::new(None);
    // On the circle, Re/Im splitting of d·(S − Z) loses about ε/|S − Z|² next to
    // the target; there the integrand is replaced by its limit along the circle.
    let diagonal = if dist == 0.0 {
        let (q1, q2) = kernel_quotients(map, &zp, &zp)?;
        Some((q1 + 2.0 * Complex64::i() * q2) * z)
    } else {
        None
    };
    let integrand = |t: f64| {
        let s = Complex64::from_polar(1.0, t);
        let p = phi(t);
        if !p.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        if let Some(limit) = diagonal {
            if ((t - tz + PI).rem_euclid(TAU) - PI).abs() < DIAGONAL_WINDOW {
                return p * limit;
            }
        }
        if s == z {
            return Complex64::new(0.0, 0.0);
        }
        match kernel_omega_star(map, p, 0.0, &map.point(s), &zp) {
            Ok(v) => v * s / (s - z),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let opts = AdaptiveOptions { abs_tol: 1e-11, rel_tol: 1e-9, max_intervals: 20_000 };
    let grade = if map.corners.is_empty() { 1 } else { 4 };
    let mut total = Complex64::new(0.0, 0.0);
    let mut lo = start;
    for &hi in &corners {
        let mut breaks = vec![lo, hi];
        breaks.extend(extra.iter().copied().filter(|b| *b > lo && *b < hi));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let (v, err, tol) = adaptive_graded(integrand, &breaks, (grade, grade), opts);
        if !(err <= tol) {
            return Err(Error::SingularityUnresolved { change: err, tolerance: tol });
        }
        total += v;
        lo = hi;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(total / TAU)
}

/// Runs every lemma row on `map`.
pub fn lemma_check(map: &CornerDomainMap, opts: &LemmaOptions) -> Result<LemmaReport> {
    opts.modulus.validate()?;
    if opts.samples < 1000 {
        return Err(Error::Config("lemma checks need at least 1000 samples".into()));
    }
    let r0 = map.r0() / 8.0;
    let mut rows = Vec::new();
    rows.extend(quotient_rows(map, opts, r0)?);
    rows.extend(kernel_rows(map, opts, r0)?);
    rows.push(lemma2_row(map, opts, r0)?);
    if !map.corners.is_empty() {
        rows.push(lemma3_row(map, opts, r0)?);
    }
    Ok(LemmaReport { map: map.name.clone(), r0, seed: opts.seed, rows })
}

fn draw<T>(n: usize, seed: u64, map: &CornerDomainMap, mut f: impl FnMut(&mut Sampler) -> Option<T>) -> Vec<T> {
    let mut sampler = Sampler::new(map, seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n && attempts < 50 * n {
        attempts += 1;
        if let Some(v) = f(&mut sampler) {
            out.push(v);
        }
    }
    out
}

/// Rows 4-9: bounds on `d`, `d₁`, `d₂` and their transfer to `σₖ'`.
fn quotient_rows(map: &CornerDomainMap, opts: &LemmaOptions, r0: f64) -> Result<Vec<LemmaRow>> {
    let n = opts.samples;
    let modulus = &opts.modulus;
    type Quantities = [f64; 6];
    let sample = |s: &mut Sampler| -> Option<Quantities> {
        let sz = s.circle();
        let z = s.disk();
        if sz == z {
            return None;
        }
        let sp = map.point(sz);
        let zp = map.point(z);
        let d = map.d_at(&sp, &zp);
        let (d1, d2) = map.d12_at(&sp, &zp);
        let truncated = map.r(sz) >= r0 && map.r(z) >= r0;
        let env = pair_envelope(map, sz, z);
        let (c1, c2) = map.contour_derivatives_at(&sp);
        let omega = modulus.select(map.r(z), r0);
        let transfer_env = min_ratio(&omega, (sz - z).norm(), 0.5 * map.r(z))
            * (corner_product(map, |x, b| (sz - x).norm().powf(b)) + env);
        let transfer = ((c1 - d1).norm() + (c2 - d2).norm()) / transfer_env;
        // Row 9: a boundary point Z₀ near Z, and S far enough from it.
        let t0 = z.arg();
        let z0 = Complex64::from_polar(1.0, t0);
        let lemma9 = if (sz - z0).norm() >= 2.0 * (z - z0).norm() && z0 != z && sz != z0 && map.r(z0) > 0.0 {
            let z0p = map.point(z0);
            let (e1, e2) = map.d12_at(&sp, &z0p);
            let omega0 = modulus.select(map.r(z0), r0);
            let env9 = (z - z0).norm() / (sz - z0).norm()
                * min_ratio(&omega0, (sz - z0).norm(), 0.5 * map.r(z0))
                * (pair_envelope(map, sz, z0) + pair_envelope(map, z, z0));
            ((d1 - e1).norm() + (d2 - e2).norm()) / env9
        } else {
            f64::NAN
        };
        Some([
            if truncated { d1.norm().max(d2.norm()) } else { f64::NAN },
            if truncated { d.norm() } else { f64::NAN },
            (d1.norm() + d2.norm()) / env,
            d.norm() / env,
            transfer,
            lemma9,
        ])
    };
    let base = draw(n, opts.seed, map, sample);
    let refined = draw(4 * n, opts.seed.wrapping_add(1), map, sample);
    let column = |v: &[Quantities], k: usize, skip_nan: bool| -> Vec<f64> {
        v.iter().map(|q| q[k]).filter(|x| !(skip_nan && x.is_nan())).collect()
    };
    Ok(vec![
        row("4", "max(|d1|, |d2|) on the corner-truncated sets", BoundKind::Upper, 0.05, column(&base, 0, true), column(&refined, 0, true), 0.0),
        row("5", "|d| on the corner-truncated sets", BoundKind::Lower, 0.05, column(&base, 1, true), column(&refined, 1, true), 1e-6),
        row("6", "(|d1| + |d2|) / prod (|S-Xj| + |Z-Xj|)^bj", BoundKind::Upper, 0.10, column(&base, 2, false), column(&refined, 2, false), 0.0),
        row("7", "|d| / prod (|S-Xj| + |Z-Xj|)^bj", BoundKind::Lower, 0.10, column(&base, 3, false), column(&refined, 3, false), 0.0),
        row("8", "sum |sk'(S) - dk(S,Z)| / transfer envelope", BoundKind::Upper, 0.10, column(&base, 4, false), column(&refined, 4, false), 0.0),
        row("9", "sum |dk(S,Z) - dk(S,Z0)| / difference envelope", BoundKind::Upper, 0.10, column(&base, 5, true), column(&refined, 5, true), 0.0),
    ])
}

/// Rows 10.1 and 10.2: kernel envelopes for a density at the edge of the class.
fn kernel_rows(map: &CornerDomainMap, opts: &LemmaOptions, r0: f64) -> Result<Vec<LemmaRow>> {
    let exps = exponent_bookkeeping(&map.corners)?;
    let phi = class_density(map);
    let modulus = &opts.modulus;
    let n = opts.samples;
    let sample = |s: &mut Sampler| -> Option<[f64; 2]> {
        let sz = s.circle();
        let z = s.disk();
        if sz == z || z.norm() >= 1.0 {
            return None;
        }
        let sp: PointData = map.point(sz);
        let zp = map.point(z);
        let f = phi(sz.arg());
        let size = kernel_omega1(map, f, &sp, &zp).ok()?.norm().max(kernel_omega2(map, f, &sp, &zp).ok()?.norm());
        let omega = modulus.select(map.r(z), r0);
        let env1 = map.r(sz).powf(-exps.beta) * min_ratio(&omega, (sz - z).norm(), 0.5 * map.r(z));
        // Corner envelope, only where Z is within r0 of its nearest corner.
        let second = match map.corners.iter().enumerate().find(|(_, c)| (z - c.x()).norm() < r0) {
            Some((j, _)) => {
                let (g, gp) = (exps.gammas[j], exps.gamma_primes[j]);
                let env2 = map.r(sz).max(map.r(z)).powf(gp) / map.r(sz).powf(g + gp);
                size / env2
            }
            None => f64::NAN,
        };
        Some([size / env1, second])
    };
    let base = draw(n, opts.seed.wrapping_add(2), map, sample);
    let refined = draw(4 * n, opts.seed.wrapping_add(3), map, sample);
    let col = |v: &[[f64; 2]], k: usize| -> Vec<f64> { v.iter().map(|q| q[k]).filter(|x| !x.is_nan()).collect() };
    let mut rows = vec![row(
        "10.1",
        "max(|Om1|, |Om2|) / R(S)^-beta min(w(|S-Z|)/w(R(Z)/2), 1)",
        BoundKind::Upper,
        0.10,
        col(&base, 0),
        col(&refined, 0),
        0.0,
    )];
    if !map.corners.is_empty() {
        rows.push(row(
            "10.2",
            "max(|Om1|, |Om2|) / corner envelope with gamma, gamma'",
            BoundKind::Upper,
            0.10,
            col(&base, 1),
            col(&refined, 1),
            0.0,
        ));
    }
    Ok(rows)
}

/// `ε ∫_ε² ω(η)/η² dη`.
fn tail_integral(omega: &Modulus, eps: f64) -> Result<f64> {
    let opts = AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 2000 };
    let breaks: Vec<f64> = (0..=40).map(|k| eps * (2.0 / eps).powf(k as f64 / 40.0)).collect();
    Ok(eps * adaptive_real(|x| omega.eval(x) / (x * x), &breaks, opts)?)
}

/// Row 2: boundary modulus of continuity of `𝓘[Ω*]` away from the corners.
fn lemma2_row(map: &CornerDomainMap, opts: &LemmaOptions, r0: f64) -> Result<LemmaRow> {
    let phi = class_density(map);
    let exps = exponent_bookkeeping(&map.corners)?;
    let omega = opts.modulus.omega().clone();
    let r = r0;
    let ratio = |s: &mut Sampler| -> Option<Result<f64>> {
        let t0 = s.uniform(0.0, TAU);
        let z0 = Complex64::from_polar(1.0, t0);
        if map.r(z0) < 2.0 * r {
            return None;
        }
        // |T − T₀| = ε ≤ r/8, log-uniform down to 1e-4 r.
        let eps = r / 8.0 * 10f64.powf(s.uniform(-4.0, 0.0));
        let t = t0 + 2.0 * (0.5 * eps).asin();
        let z = Complex64::from_polar(1.0, t);
        let run = || -> Result<f64> {
            let diff = (cauchy_adaptive(map, &phi, z)? - cauchy_adaptive(map, &phi, z0)?).norm();
            let inner = omega.log_integral(eps).unwrap_or(f64::INFINITY);
            let env = r.powf(-exps.beta)
                * (eps / r.powf(1.0 + exps.beta0)
                    + tail_integral(&omega, eps)? / (r.powf(exps.beta0) * omega.eval(0.5 * r))
                    + (inner + tail_integral(&omega, eps)?) / omega.eval(0.5 * r));
            Ok(diff / env)
        };
        Some(run())
    };
    let n = opts.integral_samples;
    let base: Result<Vec<f64>> = draw(n, opts.seed.wrapping_add(4), map, ratio).into_iter().collect();
    let refined: Result<Vec<f64>> = draw(4 * n, opts.seed.wrapping_add(5), map, ratio).into_iter().collect();
    Ok(row("2", "|I[Om*](T) - I[Om*](T0)| / boundary difference envelope", BoundKind::Upper, 0.10, base?, refined?, 0.0))
}

/// Row 3: `|𝓘[Ω*](Z)|·𝓡(Z)^{γⱼ}` on approach paths into each corner.
/// The refined run samples the same depth range four times as densely.
fn lemma3_row(map: &CornerDomainMap, opts: &LemmaOptions, r0: f64) -> Result<LemmaRow> {
    let phi = class_density(map);
    let exps = exponent_bookkeeping(&map.corners)?;
    let depths = |n: usize| -> Vec<f64> {
        let (hi, lo) = ((0.5 * r0).ln(), 1e-4f64.ln());
        (0..n).map(|k| (hi + (lo - hi) * k as f64 / (n - 1).max(1) as f64).exp()).collect()
    };
    let run = |n: usize| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (j, c) in map.corners.iter().enumerate() {
            let x = c.x();
            for psi in [0.0, PI / 3.0, -PI / 3.0] {
                for rho in depths(n) {
                    let z = x * (1.0 - Complex64::from_polar(rho, psi));
                    if z.norm() >= 1.0 {
                        continue;
                    }
                    let v = cauchy_adaptive(map, &phi, z)?.norm();
                    out.push(v * map.r(z).powf(exps.gammas[j]));
                }
            }
        }
        Ok(out)
    };
    let n = opts.integral_samples.max(4);
    Ok(row("3", "|I[Om*](Z)| R(Z)^gamma_j on approach paths", BoundKind::Upper, 0.10, run(n)?, run(4 * n)?, 0.0))
}
