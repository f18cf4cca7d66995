//! Numerical Laplace inversion in time.
//!
//! Atoms and the pure delay `e^{-sx}` are removed analytically before
//! inverting, so the algorithms only ever see the smooth remainder, which
//! starts at `τ = t − x = 0`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LiCaoRates;
use crate::state::Atom;
use crate::transform::{self, Kernels, TransformConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InversionMethod {
    GaverStehfest,
    Euler,
}

impl core::str::FromStr for InversionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaver-stehfest" | "stehfest" => Ok(InversionMethod::GaverStehfest),
            "euler" => Ok(InversionMethod::Euler),
            other => Err(Error::InvalidParameter(alloc::format!("unknown inversion method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub method: InversionMethod,
    pub gs_terms: usize,
    pub euler_m: usize,
    /// Smallest `|t − x|` at which a field value is inverted.
    pub t_min_gap: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            method: InversionMethod::Euler,
            gs_terms: 14,
            euler_m: 20,
            t_min_gap: 0.05,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gs_terms % 2 != 0 || !(8..=20).contains(&self.gs_terms) {
            return Err(Error::Config(alloc::format!(
                "gs_terms must be even and in [8, 20], got {}",
                self.gs_terms
            )));
        }
        if !(10..=50).contains(&self.euler_m) {
            return Err(Error::Config(alloc::format!("euler_m must be in [10, 50], got {}", self.euler_m)));
        }
        if !(self.t_min_gap > 0.0) {
            return Err(Error::Config("t_min_gap must be positive".into()));
        }
        Ok(())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Stehfest weights `V₁ … V_N`.
pub fn stehfest_weights(n: usize) -> Result<Vec<f64>> {
    if n % 2 != 0 || !(2..=20).contains(&n) {
        return Err(Error::Config(alloc::format!(
            "Stehfest needs an even term count of at most 20, got {n}"
        )));
    }
    let half = n / 2;
    let mut v = vec![0.0; n];
    for k in 1..=n {
        let mut sum = 0.0;
        for j in k.div_ceil(2)..=k.min(half) {
            sum += (j as f64).powi(half as i32) * factorial(2 * j)
                / (factorial(half - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k));
        }
        let sign = if (k + half) % 2 == 0 { 1.0 } else { -1.0 };
        v[k - 1] = sign * sum;
    }
    Ok(v)
}

/// `f(t) ≈ (ln2/t) Σ V_k F(k·ln2/t)` using real samples only.
pub fn gaver_stehfest<F: FnMut(f64) -> Result<f64>>(mut f: F, t: f64, terms: usize) -> Result<f64> {
    check_time(t)?;
    let v = stehfest_weights(terms)?;
    let a = core::f64::consts::LN_2 / t;
    let mut sum = 0.0;
    for (k, w) in v.iter().enumerate() {
        let s = a * (k + 1) as f64;
        let fs = f(s)?;
        if !fs.is_finite() {
            return Err(Error::NonFinite { re: s, im: 0.0 });
        }
        sum += w * fs;
    }
    Ok(a * sum)
}

/// Nodes `β_k` and weights `η_k` of the Euler-summed Bromwich rule.
pub fn euler_coefficients(m: usize) -> (Vec<Complex64>, Vec<f64>) {
    let mut xi = vec![0.0; 2 * m + 1];
    xi[0] = 0.5;
    for x in xi.iter_mut().take(m + 1).skip(1) {
        *x = 1.0;
    }
    let two_m = 0.5f64.powi(m as i32);
    xi[2 * m] = two_m;
    let mut binom = 1.0;
    for k in 1..m {
        binom = binom * (m - k + 1) as f64 / k as f64;
        xi[2 * m - k] = xi[2 * m - k + 1] + two_m * binom;
    }
    let shift = m as f64 * core::f64::consts::LN_10 / 3.0;
    let nodes = (0..=2 * m)
        .map(|k| Complex64::new(shift, core::f64::consts::PI * k as f64))
        .collect();
    let weights = xi
        .iter()
        .enumerate()
        .map(|(k, x)| if k % 2 == 0 { *x } else { -*x })
        .collect();
    (nodes, weights)
}

/// `f(t) ≈ (10^{M/3}/t) Σ η_k Re F(β_k/t)`.
pub fn euler_inversion<F: FnMut(Complex64) -> Result<Complex64>>(mut f: F, t: f64, m: usize) -> Result<f64> {
    check_time(t)?;
    let (nodes, weights) = euler_coefficients(m);
    let mut sum = 0.0;
    for (b, w) in nodes.iter().zip(&weights) {
        let s = b / t;
        let fs = f(s)?;
        if !(fs.re.is_finite() && fs.im.is_finite()) {
            return Err(Error::NonFinite { re: s.re, im: s.im });
        }
        sum += w * fs.re;
    }
    Ok(10f64.powf(m as f64 / 3.0) / t * sum)
}

/// Inverts `F` with the configured method. Stehfest samples `F` on the
/// positive real axis.
pub fn invert<F: FnMut(Complex64) -> Result<Complex64>>(mut f: F, t: f64, cfg: &InversionConfig) -> Result<f64> {
    invert_by(&mut f, t, cfg, cfg.method)
}

fn invert_by<F: FnMut(Complex64) -> Result<Complex64>>(f: &mut F, t: f64, cfg: &InversionConfig, method: InversionMethod) -> Result<f64> {
    cfg.validate()?;
    match method {
        InversionMethod::Euler => euler_inversion(&mut *f, t, cfg.euler_m),
        InversionMethod::GaverStehfest => gaver_stehfest(|s| Ok(f(Complex64::new(s, 0.0))?.re), t, cfg.gs_terms),
    }
}

/// Both methods on the same transform; `spread = |euler − stehfest|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodComparison {
    pub euler: f64,
    pub stehfest: f64,
    pub spread: f64,
}

pub fn invert_both<F: FnMut(Complex64) -> Result<Complex64>>(mut f: F, t: f64, cfg: &InversionConfig) -> Result<MethodComparison> {
    let euler = invert_by(&mut f, t, cfg, InversionMethod::Euler)?;
    let stehfest = invert_by(&mut f, t, cfg, InversionMethod::GaverStehfest)?;
    Ok(MethodComparison {
        euler,
        stehfest,
        spread: (euler - stehfest).abs(),
    })
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(alloc::format!("inversion time must be positive, got {t}")))
    }
}

/// The field at `(x, t)` by inversion: `None` when causality alone says 0.
fn delayed_time(x: f64, t: f64, cfg: &InversionConfig) -> Result<Option<f64>> {
    if !(x >= 0.0 && t >= 0.0 && x.is_finite() && t.is_finite()) {
        return Err(Error::Domain(alloc::format!("need x, t >= 0, got x = {x}, t = {t}")));
    }
    let tau = t - x;
    if tau.abs() < cfg.t_min_gap {
        return Err(Error::Exclusion { x, t, gap: cfg.t_min_gap });
    }
    // the transform carries an exact factor e^{-sx}, so nothing arrives before t = x
    Ok(if tau < 0.0 { None } else { Some(tau) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P0Inversion {
    /// Atom of `p₀(x,·)`; `location` is the time `t = x` where it sits.
    pub atom: Atom,
    /// Smooth density at `(x, t)`.
    pub density: f64,
}

/// Atom of `p₀(x,·)` only; valid for any `t`.
pub fn p0_atom(x: f64, rates: &LiCaoRates, tcfg: &TransformConfig) -> Result<Atom> {
    Ok(Atom {
        location: x,
        mass: transform::atom_mass_in_t(x, rates, tcfg)?,
    })
}

/// `p₀(x,t)` for general hazards.
pub fn invert_p0(x: f64, t: f64, rates: &LiCaoRates, tcfg: &TransformConfig, icfg: &InversionConfig) -> Result<P0Inversion> {
    let atom = p0_atom(x, rates, tcfg)?;
    let density = match delayed_time(x, t, icfg)? {
        None => 0.0,
        Some(tau) => invert(
            |s| Ok(transform::hat_p0_parts(x, s, rates, tcfg)?.smooth),
            tau,
            icfg,
        )?,
    };
    Ok(P0Inversion { atom, density })
}

/// `p₁(x,t)` for general hazards.
pub fn invert_p1(x: f64, t: f64, rates: &LiCaoRates, tcfg: &TransformConfig, icfg: &InversionConfig) -> Result<f64> {
    match delayed_time(x, t, icfg)? {
        None => Ok(0.0),
        Some(tau) => invert(|s| Ok(transform::hat_p1_parts(x, s, rates, tcfg)?.smooth), tau, icfg),
    }
}

/// Both fields at `(x, t)` by both methods. Kernels are shared between the
/// two fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldComparison {
    pub p0: MethodComparison,
    pub p1: MethodComparison,
}

pub fn invert_fields_both(
    x: f64,
    t: f64,
    rates: &LiCaoRates,
    tcfg: &TransformConfig,
    icfg: &InversionConfig,
) -> Result<Option<FieldComparison>> {
    let Some(tau) = delayed_time(x, t, icfg)? else {
        return Ok(None);
    };
    let mut f0 = |s: Complex64| Ok(transform::hat_p0_parts(x, s, rates, tcfg)?.smooth);
    let p0 = invert_both(&mut f0, tau, icfg)?;
    let mut f1 = |s: Complex64| {
        let k = Kernels::compute(s, rates, tcfg)?;
        Ok(transform::hat_p1_parts_with(x, s, rates, tcfg, &k)?.smooth)
    };
    let p1 = invert_both(&mut f1, tau, icfg)?;
    Ok(Some(FieldComparison { p0, p1 }))
}
