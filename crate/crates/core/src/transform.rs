//! Laplace transforms in time of the processing/repair fields for general
//! hazards.
//!
//! With `S₀(x) = e^{-∫₀ˣ(λ+μ)}` and `S_η(x) = e^{-∫₀ˣη}`,
//!
//! ```text
//! Λ(s) = ∫ λ(x) e^{-sx} S₀(x) dx        H(s) = ∫ η(x) e^{-sx} S_η(x) dx
//! D(s) = 1 − Λ(s)H(s)
//! p̂₁(x,s) = (1+κ) S_η(x) e^{-sx} Λ(s)/D(s)
//! p̂₀(x,s) = (1+κ) S₀(x) e^{-sx} [1 + H(s)Λ(s)/D(s)]
//! ```
//!
//! where `κ` is the endpoint-delta weight of the [`MassConvention`]. The
//! first term of `p̂₀` is the transform of the atom at `t = x`.

use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::convention::MassConvention;
use crate::error::{Error, Result};
use crate::model::LiCaoRates;
use crate::quadrature::{gauss_kronrod, QuadOptions};
use crate::rate::{HazardSum, RateFunction};

/// `|D(s)|` below this is treated as a spectral point.
pub const NEAR_SINGULAR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub quad_rtol: f64,
    /// Integrate until `e^{-R(x) - Re(s)·x}` drops below this.
    pub survival_floor: f64,
    /// Hard upper limit for the age integrals.
    pub tail_cap: f64,
    pub convention: MassConvention,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            quad_rtol: 1e-10,
            survival_floor: 1e-14,
            tail_cap: 1e4,
            convention: MassConvention::default(),
        }
    }
}

impl TransformConfig {
    pub fn with_convention(convention: MassConvention) -> Self {
        TransformConfig {
            convention,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quad_rtol > 0.0 && self.quad_rtol <= 1e-4) {
            return Err(Error::Config(alloc::format!("quad_rtol must lie in (0, 1e-4], got {}", self.quad_rtol)));
        }
        if !(self.survival_floor > 0.0 && self.survival_floor < 1.0) || !(self.tail_cap > 0.0) {
            return Err(Error::Config("tail cut must be positive".into()));
        }
        Ok(())
    }

    fn atom_factor(&self) -> f64 {
        1.0 + self.convention.kappa()
    }
}

// Upper limit where the integrand envelope e^{-R(x) - σx} falls below the floor.
fn tail_cut(hazards: &HazardSum<'_>, sigma: f64, cfg: &TransformConfig) -> Option<f64> {
    let target = -cfg.survival_floor.ln();
    let exponent = |x: f64| hazards.cumulative(x) + sigma * x;
    let mut hi = 1.0;
    while exponent(hi) < target {
        if hi >= cfg.tail_cap {
            // envelope still large at the cap: only acceptable if it decays at all
            return if exponent(cfg.tail_cap) > exponent(cfg.tail_cap * 0.5) {
                Some(cfg.tail_cap)
            } else {
                None
            };
        }
        hi = (hi * 2.0).min(cfg.tail_cap);
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if exponent(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// `∫₀^∞ w(x) e^{-sx - Σ R(x)} dx` for a weight hazard `w` and the hazards
/// that define survival.
pub fn hazard_kernel(s: Complex64, weight: &RateFunction, survival: &[&RateFunction], cfg: &TransformConfig) -> Result<Complex64> {
    if weight.as_constant() == Some(0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let hazards = HazardSum(survival);
    let upper = tail_cut(&hazards, s.re, cfg).ok_or(Error::Divergent { re: s.re, im: s.im })?;
    let panels = ((s.im.abs() * upper / core::f64::consts::TAU).ceil() as usize).clamp(1, 1 << 20);
    let opts = QuadOptions {
        rtol: cfg.quad_rtol,
        atol: 0.0,
        max_intervals: panels.saturating_mul(4).max(100_000),
        initial_panels: panels,
    };
    let f = |x: f64| {
        let w = weight.hazard_unchecked(x);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let env = w * (-hazards.cumulative(x) - s.re * x).exp();
        let (sin, cos) = (s.im * x).sin_cos();
        Complex64::new(env * cos, -env * sin)
    };
    let r = gauss_kronrod(f, 0.0, upper, &opts);
    if !r.converged {
        return Err(Error::Quadrature {
            achieved: r.error,
            requested: cfg.quad_rtol * r.value.norm(),
        });
    }
    if !(r.value.re.is_finite() && r.value.im.is_finite()) {
        return Err(Error::NonFinite { re: s.re, im: s.im });
    }
    Ok(r.value)
}

/// `Λ(s)`: transform of the breakdown-time density.
pub fn lambda_kernel(s: Complex64, lambda: &RateFunction, mu: &RateFunction, cfg: &TransformConfig) -> Result<Complex64> {
    hazard_kernel(s, lambda, &[lambda, mu], cfg)
}

/// `H(s)`: transform of the repair-time density.
pub fn eta_kernel(s: Complex64, eta: &RateFunction, cfg: &TransformConfig) -> Result<Complex64> {
    hazard_kernel(s, eta, &[eta], cfg)
}

/// `Λ(s)` and `H(s)` evaluated together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernels {
    pub lambda: Complex64,
    pub eta: Complex64,
}

impl Kernels {
    pub fn compute(s: Complex64, rates: &LiCaoRates, cfg: &TransformConfig) -> Result<Self> {
        Ok(Kernels {
            lambda: lambda_kernel(s, &rates.lambda, &rates.mu, cfg)?,
            eta: eta_kernel(s, &rates.eta, cfg)?,
        })
    }

    pub fn denominator(&self) -> Complex64 {
        Complex64::new(1.0, 0.0) - self.lambda * self.eta
    }

    // D(s), refusing spectral points
    fn regular_denominator(&self, s: Complex64) -> Result<Complex64> {
        let d = self.denominator();
        if d.norm() < NEAR_SINGULAR {
            return Err(Error::NearSingular {
                re: s.re,
                im: s.im,
                modulus: d.norm(),
            });
        }
        Ok(d)
    }
}

/// `D(s) = 1 − Λ(s)H(s)`. Use [`is_near_singular`] to test the result.
pub fn denominator(s: Complex64, rates: &LiCaoRates, cfg: &TransformConfig) -> Result<Complex64> {
    Ok(Kernels::compute(s, rates, cfg)?.denominator())
}

pub fn is_near_singular(d: Complex64) -> bool {
    d.norm() < NEAR_SINGULAR
}

fn processing_survival(x: f64, rates: &LiCaoRates) -> f64 {
    (-(rates.lambda.cumulative_unchecked(x) + rates.mu.cumulative_unchecked(x))).exp()
}

fn check_age(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(alloc::format!("age must be finite and >= 0, got {x}")))
    }
}

/// Mass of the atom of `p₀(x,·)`, located at `t = x`: `(1+κ)S₀(x)`.
pub fn atom_mass_in_t(x: f64, rates: &LiCaoRates, cfg: &TransformConfig) -> Result<f64> {
    check_age(x)?;
    Ok(cfg.atom_factor() * processing_survival(x, rates))
}

/// `p̂₀(x,s)` split as `e^{-sx}·(atom + smooth(s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayedTransform {
    /// Atom mass; its transform is `atom·e^{-sx}`.
    pub atom: f64,
    /// `p̂ · e^{sx}` minus the atom: the transform of the smooth part
    /// shifted back by the delay `x`.
    pub smooth: Complex64,
}

impl DelayedTransform {
    pub fn assemble(&self, x: f64, s: Complex64) -> Complex64 {
        (-s * x).exp() * (self.smooth + self.atom)
    }
}

pub fn hat_p0_parts(x: f64, s: Complex64, rates: &LiCaoRates, cfg: &TransformConfig) -> Result<DelayedTransform> {
    let k = Kernels::compute(s, rates, cfg)?;
    hat_p0_parts_with(x, s, rates, cfg, &k)
}

/// As [`hat_p0_parts`] with precomputed kernels.
pub fn hat_p0_parts_with(x: f64, s: Complex64, rates: &LiCaoRates, cfg: &TransformConfig, k: &Kernels) -> Result<DelayedTransform> {
    check_age(x)?;
    let d = k.regular_denominator(s)?;
    let atom = cfg.atom_factor() * processing_survival(x, rates);
    Ok(DelayedTransform {
        atom,
        smooth: k.eta * k.lambda / d * atom,
    })
}

pub fn hat_p1_parts(x: f64, s: Complex64, rates: &LiCaoRates, cfg: &TransformConfig) -> Result<DelayedTransform> {
    let k = Kernels::compute(s, rates, cfg)?;
    hat_p1_parts_with(x, s, rates, cfg, &k)
}

pub fn hat_p1_parts_with(x: f64, s: Complex64, rates: &LiCaoRates, cfg: &TransformConfig, k: &Kernels) -> Result<DelayedTransform> {
    check_age(x)?;
    let d = k.regular_denominator(s)?;
    let surv = (-rates.eta.cumulative_unchecked(x)).exp();
    Ok(DelayedTransform {
        atom: 0.0,
        smooth: k.lambda / d * (cfg.atom_factor() * surv),
    })
}

/// `p̂₀(x,s)`, atom included.
pub fn hat_p0(x: f64, s: Complex64, rates: &LiCaoRates, cfg: &TransformConfig) -> Result<Complex64> {
    Ok(hat_p0_parts(x, s, rates, cfg)?.assemble(x, s))
}

/// `p̂₁(x,s)`.
pub fn hat_p1(x: f64, s: Complex64, rates: &LiCaoRates, cfg: &TransformConfig) -> Result<Complex64> {
    Ok(hat_p1_parts(x, s, rates, cfg)?.assemble(x, s))
}
