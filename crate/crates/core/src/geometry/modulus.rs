//! Moduli of continuity and the Dini-type admissibility checks applied to them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{adaptive_real, AdaptiveOptions};

/// A modulus of continuity `ω` on `(0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Modulus {
    /// `ω(η) = η^λ`, `0 < λ ≤ 1`.
    Power { lambda: f64 },
    /// `ω(η) = 1/ln(e + 1/η)`.
    InverseLog,
    Sum { terms: Vec<Modulus> },
}

impl Modulus {
    pub fn power(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Config(format!("power modulus exponent {lambda} must lie in (0, 1]")));
        }
        Ok(Modulus::Power { lambda })
    }

    pub fn eval(&self, eta: f64) -> f64 {
        if eta <= 0.0 {
            return 0.0;
        }
        self.eval_log(-eta.ln())
    }

    /// `ω(e^{−t})`, evaluated without underflow for large `t`.
    pub fn eval_log(&self, t: f64) -> f64 {
        match self {
            Modulus::Power { lambda } => (-lambda * t).exp(),
            Modulus::InverseLog => {
                // ln(e + e^t) = max(1, t) + ln(1 + e^{-|t-1|})
                let m = t.max(1.0);
                1.0 / (m + (-(t - 1.0).abs()).exp().ln_1p())
            }
            Modulus::Sum { terms } => terms.iter().map(|m| m.eval_log(t)).sum(),
        }
    }

    /// `∫₀^ε ω(η)/η dη`, computed in the variable `t = −ln η` block by block.
    /// `None` when the dyadic tail blocks stop shrinking (the integral diverges).
    pub fn log_integral(&self, eps: f64) -> Option<f64> {
        let t0 = -eps.ln();
        let opts = AdaptiveOptions { abs_tol: 1e-16, rel_tol: 1e-12, max_intervals: 2000 };
        let mut total = 0.0;
        let mut prev = f64::INFINITY;
        let mut shrinking = 0usize;
        let mut start = t0;
        for k in 0..64 {
            let end = t0 + 2f64.powi(k + 1) - 1.0;
            let block = adaptive_real(|t| self.eval_log(t), &[start, end], opts).ok()?;
            total += block;
            if block <= 1e-17 * total.max(1e-300) || block == 0.0 {
                return Some(total);
            }
            if block <= 0.5 * prev {
                shrinking += 1;
            } else {
                shrinking = 0;
            }
            if shrinking >= 4 && block <= 1e-15 * total {
                return Some(total);
            }
            prev = block;
            start = end;
        }
        None
    }
}

/// Outcome of a Dini admissibility check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiniCheck {
    pub accepted: bool,
    /// The integral (first check) or the largest sampled ratio (second check).
    pub value: f64,
    pub detail: String,
}

/// Accepts `ω` when `∫₀² ω(η)/η dη` is finite.
pub fn validate_dini(omega: &Modulus) -> DiniCheck {
    match omega.log_integral(2.0) {
        Some(v) => DiniCheck { accepted: true, value: v, detail: format!("integral of omega/eta over (0,2] = {v:.6e}") },
        None => DiniCheck {
            accepted: false,
            value: f64::INFINITY,
            detail: "integral of omega/eta over (0,2] diverges".into(),
        },
    }
}

/// Accepts `ω` when `∫₀^ε ω(η)/η dη ≤ c·ω(ε)` with one constant `c` for all
/// sampled `ε = 2^{-k}`, `k = 1..=40`: the ratio must be finite and must not
/// grow as `ε` shrinks.
pub fn validate_dini_star(omega: &Modulus) -> DiniCheck {
    let mut ratios = Vec::with_capacity(40);
    for k in 1..=40 {
        let eps = 2f64.powi(-k);
        let Some(integral) = omega.log_integral(eps) else {
            return DiniCheck {
                accepted: false,
                value: f64::INFINITY,
                detail: format!("integral of omega/eta over (0, 2^-{k}] diverges"),
            };
        };
        ratios.push(integral / omega.eval(eps));
    }
    let early = ratios[..20].iter().cloned().fold(0.0, f64::max);
    let late = ratios[20..].iter().cloned().fold(0.0, f64::max);
    let accepted = late <= 1.1 * early && late.is_finite();
    DiniCheck {
        accepted,
        value: early.max(late),
        detail: format!("ratio max over k<=20: {early:.6e}; over 20<k<=40: {late:.6e}"),
    }
}

/// The pair `(ω₁, ω₁*)` and the rule choosing between them by the distance
/// from `Z` to the corner set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusConfig {
    pub omega1: Modulus,
    pub omega1_star: Modulus,
    /// Separate slots for the density, kernel and result moduli; all default
    /// to `omega1`.
    pub omega0: Option<Modulus>,
    pub omega2: Option<Modulus>,
}

impl Default for ModulusConfig {
    fn default() -> Self {
        ModulusConfig {
            omega1: Modulus::Power { lambda: 0.5 },
            omega1_star: Modulus::Power { lambda: 0.5 },
            omega0: None,
            omega2: None,
        }
    }
}

impl ModulusConfig {
    /// Runs both Dini checks and a sampled semi-additivity test.
    pub fn validate(&self) -> Result<()> {
        let first = validate_dini(&self.omega1);
        if !first.accepted {
            return Err(Error::Config(format!("omega1 rejected: {}", first.detail)));
        }
        let second = validate_dini_star(&self.omega1_star);
        if !second.accepted {
            return Err(Error::Config(format!("omega1_star rejected: {}", second.detail)));
        }
        for (name, m) in [("omega1", &self.omega1), ("omega1_star", &self.omega1_star)] {
            if let Some(v) = semi_additivity_violation(m, 2000, 7) {
                return Err(Error::Config(format!("{name} is not semi-additive: {v}")));
            }
        }
        Ok(())
    }

    /// `ω₁*` when `𝓡(Z) ≤ r₀/2`, else `ω₁ + ω₁*`.
    pub fn select(&self, r_z: f64, r0: f64) -> Modulus {
        if r_z <= 0.5 * r0 {
            self.omega1_star.clone()
        } else {
            Modulus::Sum { terms: vec![self.omega1.clone(), self.omega1_star.clone()] }
        }
    }

    pub fn omega(&self) -> &Modulus {
        self.omega0.as_ref().unwrap_or(&self.omega1)
    }
}

/// Samples `ω(a + b) ≤ ω(a) + ω(b)` and `ω(λη) ≤ (λ + 1)ω(η)`; returns a
/// description of the first violation.
pub fn semi_additivity_violation(omega: &Modulus, samples: usize, seed: u64) -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let a = 10f64.powf(rng.random_range(-12.0..0.5));
        let b = 10f64.powf(rng.random_range(-12.0..0.5));
        let lhs = omega.eval(a + b);
        let rhs = omega.eval(a) + omega.eval(b);
        if lhs > rhs * (1.0 + 1e-12) {
            return Some(format!("omega({a:e} + {b:e}) = {lhs:e} > {rhs:e}"));
        }
        let lambda = rng.random_range(0.0..50.0);
        if omega.eval(lambda * a) > (lambda + 1.0) * omega.eval(a) * (1.0 + 1e-12) {
            return Some(format!("omega({lambda} * {a:e}) exceeds ({lambda} + 1) omega({a:e})"));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_accepted_by_both() {
        let w = Modulus::power(0.5).unwrap();
        let first = validate_dini(&w);
        assert!(first.accepted);
        // ∫₀² η^{-1/2} dη = 2√2
        assert!((first.value - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        let second = validate_dini_star(&w);
        assert!(second.accepted);
        assert!((second.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_log_rejected() {
        let w = Modulus::InverseLog;
        assert!(!validate_dini_star(&w).accepted);
        assert!(!validate_dini(&w).accepted);
    }

    #[test]
    fn eval_log_matches_eval() {
        for eta in [1e-300, 1e-5, 0.3, 1.0, 5.0] {
            let w = Modulus::InverseLog;
            let direct = 1.0 / (std::f64::consts::E + 1.0 / eta).ln();
            assert!((w.eval(eta) - direct).abs() < 1e-14 * direct);
        }
    }

    #[test]
    fn selection_rule() {
        let cfg = ModulusConfig::default();
        assert_eq!(cfg.select(0.1, 1.0), cfg.omega1_star);
        assert!(matches!(cfg.select(0.9, 1.0), Modulus::Sum { .. }));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn semi_additive_builtins() {
        assert!(semi_additivity_violation(&Modulus::Power { lambda: 0.3 }, 5000, 1).is_none());
        assert!(semi_additivity_violation(&Modulus::InverseLog, 5000, 2).is_none());
        assert!(Modulus::power(1.5).is_err());
    }
}
