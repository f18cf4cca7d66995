//! Exact transient solution of the constant-rate processing/repair model.
//!
//! With breakdown rate `λ`, completion rate `μ`, repair rate `η` and
//! `a = λ + μ`, the system is
//!
//! ```text
//! ∂p₀/∂t + ∂p₀/∂x = -a p₀        p₀(0,t) = δ(t) + η ∫ p₁ dx     p₀(x,0) = δ(x)
//! ∂p₁/∂t + ∂p₁/∂x = -η p₁        p₁(0,t) = λ ∫ p₀ dx            p₁(x,0) = 0
//! ```
//!
//! The integrated masses are two-exponential sums on the roots `z₁ ≥ z₂` of
//! `z² + (a+η)z + μη`. Along the characteristic `x = t` the processing field
//! carries an atom of mass `2·scale·e^{-at}`; the repair field has a bounded
//! jump there.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::convention::MassConvention;
use crate::error::{Error, Result};

/// Relative gap below which the two roots are treated as coincident.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
    pub z1: f64,
    pub z2: f64,
    pub l1: f64,
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    pub convention: MassConvention,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P0Point {
    /// Mass of the atom when `x` sits on the characteristic `x = t`, else 0.
    pub atom: f64,
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Point {
    /// Set on `x = t`, where `p₁` jumps from its left limit to 0.
    pub jump: bool,
    pub density: f64,
}

fn check_rates(lambda: f64, mu: f64, eta: f64) -> Result<()> {
    for (name, v) in [("lambda", lambda), ("mu", mu), ("eta", eta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(alloc::format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(alloc::format!("time must be finite and >= 0, got {t}")))
    }
}

/// Roots `z₁ ≥ z₂` of `z² + (λ+μ+η)z + μη`.
///
/// `z₂` is computed first (no cancellation since both terms are negative) and
/// `z₁ = μη / z₂`, which stays accurate when `z₁` is tiny.
pub fn characteristic_roots(lambda: f64, mu: f64, eta: f64) -> Result<(f64, f64)> {
    check_rates(lambda, mu, eta)?;
    let (z1, z2, _) = roots_with_gap(lambda, mu, eta);
    Ok((z1, z2))
}

fn roots_with_gap(lambda: f64, mu: f64, eta: f64) -> (f64, f64, f64) {
    let b = lambda + mu + eta;
    let d = (lambda + mu - eta).powi(2) + 4.0 * lambda * eta;
    let sq = d.sqrt();
    let z2 = -0.5 * (b + sq);
    let z1 = mu * eta / z2;
    (z1, z2, sq)
}

fn nondegenerate(lambda: f64, mu: f64, eta: f64) -> Result<(f64, f64, f64)> {
    check_rates(lambda, mu, eta)?;
    let (z1, z2, gap) = roots_with_gap(lambda, mu, eta);
    let threshold = DEGENERACY_THRESHOLD * (lambda + mu + eta);
    if gap < threshold {
        return Err(Error::DegenerateSpectrum { gap, threshold });
    }
    Ok((z1, z2, gap))
}

/// Residues of the mass transforms, scaled by the convention.
pub fn partial_fraction_coeffs(lambda: f64, mu: f64, eta: f64, convention: MassConvention) -> Result<SpectralData> {
    let (z1, z2, gap) = nondegenerate(lambda, mu, eta)?;
    let two = 2.0 * convention.scale();
    let h1 = two * lambda / gap;
    Ok(SpectralData {
        lambda,
        mu,
        eta,
        z1,
        z2,
        l1: two * (z1 + eta) / gap,
        l2: -two * (z2 + eta) / gap,
        h1,
        h2: -h1,
        convention,
    })
}

impl SpectralData {
    pub fn new(lambda: f64, mu: f64, eta: f64, convention: MassConvention) -> Result<Self> {
        partial_fraction_coeffs(lambda, mu, eta, convention)
    }

    pub fn with_convention(&self, convention: MassConvention) -> Self {
        partial_fraction_coeffs(self.lambda, self.mu, self.eta, convention).expect("rates were already validated")
    }

    /// `λ + μ`.
    pub fn exit_rate(&self) -> f64 {
        self.lambda + self.mu
    }

    pub fn scale(&self) -> f64 {
        self.convention.scale()
    }

    /// Total processing mass `∫p₀(x,t)dx`, atom included.
    pub fn boundary_transform_p0(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.l1 * (self.z1 * t).exp() + self.l2 * (self.z2 * t).exp())
    }

    /// Total repair mass `∫p₁(x,t)dx`.
    pub fn boundary_transform_p1(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.h1 * self.two_exp_diff(t))
    }

    // e^{z1 t} - e^{z2 t} without cancellation at small t
    fn two_exp_diff(&self, t: f64) -> f64 {
        (self.z2 * t).exp() * ((self.z1 - self.z2) * t).exp_m1()
    }

    /// Mass of the atom travelling on `x = t`.
    pub fn atom_mass(&self, t: f64) -> f64 {
        2.0 * self.scale() * (-self.exit_rate() * t).exp()
    }

    /// Processing field at `(x, t)`.
    ///
    /// Behind the front (`x < t`) the density is `η·B₁(t−x)·e^{-ax}`, the
    /// repair outflow at time `t − x` carried forward without interruption.
    /// At and beyond the front the smooth part vanishes.
    pub fn eval_p0(&self, x: f64, t: f64) -> Result<P0Point> {
        check_time(x)?;
        check_time(t)?;
        let on_front = on_characteristic(x, t);
        let atom = if on_front { self.atom_mass(t) } else { 0.0 };
        let density = if x < t && !on_front {
            self.eta * self.h1 * self.two_exp_diff(t - x) * (-self.exit_rate() * x).exp()
        } else {
            0.0
        };
        Ok(P0Point { atom, density })
    }

    /// Repair field at `(x, t)`: `λ·B₀(t−x)·e^{-ηx}` behind the front.
    pub fn eval_p1(&self, x: f64, t: f64) -> Result<P1Point> {
        check_time(x)?;
        check_time(t)?;
        let on_front = on_characteristic(x, t);
        let density = if x < t && !on_front {
            let tau = t - x;
            self.lambda * (self.l1 * (self.z1 * tau).exp() + self.l2 * (self.z2 * tau).exp()) * (-self.eta * x).exp()
        } else {
            0.0
        };
        Ok(P1Point { jump: on_front, density })
    }

    /// Expanded series form of the solution, see [`SeriesForm`].
    pub fn series(&self, variant: SeriesVariant) -> SeriesForm {
        SeriesForm::new(self, variant)
    }
}

/// `x` and `t` coincide up to rounding.
pub fn on_characteristic(x: f64, t: f64) -> bool {
    (x - t).abs() <= 1e-12 * t.abs().max(1.0)
}

/// Two-state forward equations `P₀' = -(λ+μ)P₀ + ηP₁`, `P₁' = λP₀ - ηP₁`,
/// `P(0) = (1, 0)`, solved by Sylvester's formula for `e^{At}`.
pub fn ode_oracle(lambda: f64, mu: f64, eta: f64, t: f64) -> Result<(f64, f64)> {
    let (z1, z2, gap) = nondegenerate(lambda, mu, eta)?;
    check_time(t)?;
    // e^{At} = (e^{z1 t}(A - z2 I) - e^{z2 t}(A - z1 I)) / (z1 - z2), first column
    let a00 = -(lambda + mu);
    let (e1, e2) = ((z1 * t).exp(), (z2 * t).exp());
    let p0 = (e1 * (a00 - z2) - e2 * (a00 - z1)) / gap;
    let p1 = lambda * (e1 - e2) / gap;
    Ok((p0, p1))
}

/// Which coefficient and sign set the series uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesVariant {
    /// Coefficients and signs that follow from the partial-fraction
    /// derivation. Agrees with [`SpectralData::eval_p0`] and `eval_p1`.
    Derivation,
    /// The closed form as printed in the theorem statement: `l₁` built from
    /// `z₁ − η` instead of `z₁ + η`, `l₂` from `z₂ − η`, and a minus sign on
    /// the `e^{z₂t}e^{-(η+z₂)x}` term of `p₁`. Kept as a regression fixture;
    /// it violates the boundary condition for `p₁`.
    TheoremVerbatim,
}

/// The solution written as the published sum of exponentials, with each
/// delta-convolution `∫₀ˣ f(x−z)δ(z−t)dz` replaced by `f(x−t)·𝟙{t ≤ x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesForm {
    lambda: f64,
    mu: f64,
    eta: f64,
    z1: f64,
    z2: f64,
    l1: f64,
    l2: f64,
    h1: f64,
    h2: f64,
    scale: f64,
    variant: SeriesVariant,
}

impl SeriesForm {
    pub fn new(sd: &SpectralData, variant: SeriesVariant) -> Self {
        let (l1, l2) = match variant {
            SeriesVariant::Derivation => (sd.l1, sd.l2),
            SeriesVariant::TheoremVerbatim => {
                let two = 2.0 * sd.scale();
                let gap = sd.z1 - sd.z2;
                (two * (sd.z1 - sd.eta) / gap, -two * (sd.z2 - sd.eta) / gap)
            }
        };
        SeriesForm {
            lambda: sd.lambda,
            mu: sd.mu,
            eta: sd.eta,
            z1: sd.z1,
            z2: sd.z2,
            l1,
            l2,
            h1: sd.h1,
            h2: sd.h2,
            scale: sd.scale(),
            variant,
        }
    }

    pub fn l_coefficients(&self) -> (f64, f64) {
        (self.l1, self.l2)
    }

    /// Smooth part of `p₀(x,t)`.
    pub fn p0_density(&self, x: f64, t: f64) -> f64 {
        let (lam, eta) = (self.lambda, self.eta);
        let a = lam + self.mu;
        let c = a - eta;
        let ind = if t <= x { 1.0 } else { 0.0 };
        let y = x - t;
        let mut sum = 0.0;
        for (z, l) in [(self.z1, self.l1), (self.z2, self.l2)] {
            let big_a = lam * eta * l / (z + eta);
            let ezt = (z * t).exp();
            sum += big_a * ezt * (-c * x).exp() - big_a * (-eta * t).exp() * (-c * x).exp();
            sum += -big_a * ezt * (-c * x).exp() + big_a * ezt * (-(a + z) * x).exp();
            if ind > 0.0 {
                sum += big_a * (-a * t).exp() * (-c * y).exp() - big_a * (-a * t).exp() * (-(a + z) * y).exp();
            }
        }
        sum
    }

    /// Smooth part of `p₁(x,t)`.
    pub fn p1_density(&self, x: f64, t: f64) -> f64 {
        let (lam, eta) = (self.lambda, self.eta);
        let a = lam + self.mu;
        let c = a - eta;
        let ind = if t <= x { 1.0 } else { 0.0 };
        let y = x - t;
        let two = 2.0 * self.scale;
        let mut sum = two * lam * (c * x).exp() * (-a * t).exp();
        if ind > 0.0 {
            sum -= two * lam * (-eta * t).exp() * (c * y).exp();
        }
        for (i, (z, h)) in [(self.z1, self.h1), (self.z2, self.h2)].into_iter().enumerate() {
            let big_b = lam * eta * h / (a + z);
            let ezt = (z * t).exp();
            sum += big_b * ezt * (c * x).exp() - big_b * (-a * t).exp() * (c * x).exp();
            let flip = if i == 1 && self.variant == SeriesVariant::TheoremVerbatim { -1.0 } else { 1.0 };
            sum += -big_b * ezt * (c * x).exp() + flip * big_b * ezt * (-(eta + z) * x).exp();
            if ind > 0.0 {
                sum += big_b * (-eta * t).exp() * (c * y).exp() - big_b * (-eta * t).exp() * (-(eta + z) * y).exp();
            }
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: MassConvention = MassConvention::Paper;

    #[test]
    fn unit_rates() {
        let (z1, z2) = characteristic_roots(1.0, 1.0, 1.0).unwrap();
        assert!((z1 * z1 + 3.0 * z1 + 1.0).abs() < 1e-12);
        assert!((z2 * z2 + 3.0 * z2 + 1.0).abs() < 1e-12);
        assert!((z1 + 0.3819660112501051).abs() < 1e-12);
        assert!((z2 + 2.618033988749895).abs() < 1e-12);
        let sd = SpectralData::new(1.0, 1.0, 1.0, P).unwrap();
        // residue of 2(z+η)/((z−z1)(z−z2)) at z1 and z2, and of 2λ/(...)
        assert!((sd.l1 - 2.0 * (z1 + 1.0) / (z1 - z2)).abs() < 1e-14);
        assert!((sd.l1 - 0.5527864045000421).abs() < 1e-12);
        assert!((sd.l2 - 1.4472135954999579).abs() < 1e-12);
        assert!((sd.h1 - 0.8944271909999159).abs() < 1e-12);
    }

    #[test]
    fn tiny_lambda_limit() {
        let (z1, z2) = characteristic_roots(1e-15, 1.0, 2.0).unwrap();
        assert!((z1 + 1.0).abs() < 1e-12);
        assert!((z2 + 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_domain() {
        assert!(matches!(characteristic_roots(0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(
            SpectralData::new(1e-22, 1.0, 1.0, P),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn initial_values() {
        let paper = SpectralData::new(1.0, 1.0, 1.0, P).unwrap();
        let prob = paper.with_convention(MassConvention::Probabilistic);
        assert!((paper.boundary_transform_p0(0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((prob.boundary_transform_p0(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(prob.boundary_transform_p1(0.0).unwrap(), 0.0);
        assert!(prob.boundary_transform_p1(200.0).unwrap() < 1e-30);
        let p = prob.eval_p0(0.3, 0.0).unwrap();
        assert_eq!((p.atom, p.density), (0.0, 0.0));
        assert_eq!(prob.eval_p0(0.0, 0.0).unwrap().atom, 1.0);
        assert_eq!(prob.eval_p1(0.7, 0.0).unwrap().density, 0.0);
    }

    #[test]
    fn ode_limits() {
        assert_eq!(ode_oracle(1.0, 1.0, 1.0, 0.0).unwrap(), (1.0, 0.0));
        let (p0, p1) = ode_oracle(1e-9, 0.7, 1.3, 2.0).unwrap();
        assert!((p0 - (-1.4f64).exp()).abs() < 1e-8);
        assert!(p1.abs() < 1e-8);
    }

    #[test]
    fn verbatim_series_differs_only_where_expected() {
        let sd = SpectralData::new(1.0, 1.0, 1.0, P).unwrap();
        let v = sd.series(SeriesVariant::TheoremVerbatim);
        let (l1, l2) = v.l_coefficients();
        assert!((l1 - 2.0 * (sd.z1 - 1.0) / (sd.z1 - sd.z2)).abs() < 1e-15);
        assert!((l2 + 2.0 * (sd.z2 - 1.0) / (sd.z1 - sd.z2)).abs() < 1e-15);
    }
}
