mod common;

use common::{integrate_gl, random_triples};
use svtk_core::closed_form::{ode_oracle, SpectralData};
use svtk_core::transform::{
    atom_mass_in_t, denominator, eta_kernel, hat_p0, hat_p0_parts, hat_p1, lambda_kernel, TransformConfig,
};
use svtk_core::{Complex64, Error, LiCaoRates, MassConvention, RateFunction};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cfg(conv: MassConvention) -> TransformConfig {
    TransformConfig::with_convention(conv)
}

#[test]
fn constant_rate_kernels_are_rational() {
    let (l, m, e) = (RateFunction::constant(0.7).unwrap(), RateFunction::constant(1.3).unwrap(), RateFunction::constant(2.0).unwrap());
    let tc = TransformConfig::default();
    for s in [c(0.0, 0.0), c(0.5, 0.0), c(1.0, 3.0), c(2.5, -7.0), c(0.1, 40.0)] {
        let lam = lambda_kernel(s, &l, &m, &tc).unwrap();
        let want = 0.7 / (s + 2.0);
        assert!((lam - want).norm() < 1e-10 * want.norm().max(1e-3), "{s}: {lam} vs {want}");
        let h = eta_kernel(s, &e, &tc).unwrap();
        let want = 2.0 / (s + 2.0);
        assert!((h - want).norm() < 1e-10 * want.norm().max(1e-3));
    }
}

#[test]
fn kernels_at_zero_are_probabilities() {
    let tc = TransformConfig::default();
    let zero = RateFunction::constant(0.0).unwrap();
    for r in [
        RateFunction::constant(0.4).unwrap(),
        RateFunction::weibull(2.0, 1.0).unwrap(),
        RateFunction::weibull(0.7, 2.0).unwrap(),
        RateFunction::piecewise_linear(vec![(0.0, 0.2), (1.0, 2.0), (3.0, 0.5)]).unwrap(),
    ] {
        let lam = lambda_kernel(c(0.0, 0.0), &r, &zero, &tc).unwrap();
        assert!((lam.re - 1.0).abs() < 1e-9 && lam.im.abs() < 1e-12, "{r:?}: {lam}");
        let h = eta_kernel(c(0.0, 0.0), &r, &tc).unwrap();
        assert!((h.re - 1.0).abs() < 1e-9);
    }
}

#[test]
fn weibull_kernels_match_a_refined_oracle() {
    let tc = TransformConfig::default();
    let w = RateFunction::weibull(2.0, 1.0).unwrap();
    let one = RateFunction::constant(1.0).unwrap();
    // λ(x) = 2x, survival e^{-x² - x}
    let lam = lambda_kernel(c(1.0, 0.0), &w, &one, &tc).unwrap();
    let oracle = integrate_gl(|x| 2.0 * x * (-x * x - 2.0 * x).exp(), 0.0, 12.0, 400);
    assert!((lam.re - oracle).abs() < 1e-9 && lam.im.abs() < 1e-12);
    let h = eta_kernel(c(0.5, 0.0), &w, &tc).unwrap();
    let oracle = integrate_gl(|x| 2.0 * x * (-x * x - 0.5 * x).exp(), 0.0, 12.0, 400);
    assert!((h.re - oracle).abs() < 1e-9);
}

#[test]
fn kernels_decrease_along_the_real_axis() {
    let tc = TransformConfig::default();
    let w = RateFunction::weibull(1.5, 0.8).unwrap();
    let mu = RateFunction::constant(0.3).unwrap();
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for k in 0..20 {
        let s = c(0.25 * k as f64, 0.0);
        let lam = lambda_kernel(s, &w, &mu, &tc).unwrap().re;
        let h = eta_kernel(s, &w, &tc).unwrap().re;
        assert!(lam > 0.0 && lam <= 1.0 + 1e-9 && h > 0.0 && h <= 1.0 + 1e-9);
        assert!(lam < prev.0 && h < prev.1);
        prev = (lam, h);
    }
}

#[test]
fn denominator_is_rational_for_constant_rates() {
    let (lambda, mu, eta) = (1.0, 0.5, 2.0);
    let rates = LiCaoRates::constant(lambda, mu, eta).unwrap();
    let tc = TransformConfig::default();
    for s in [c(0.3, 0.0), c(1.0, 1.0), c(4.0, -2.0)] {
        let d = denominator(s, &rates, &tc).unwrap();
        let want = (s * s + (lambda + mu + eta) * s + mu * eta) / ((s + lambda + mu) * (s + eta));
        assert!((d - want).norm() < 1e-10);
    }
    for s in [0.1, 1.0, 10.0] {
        let d = denominator(c(s, 0.0), &rates, &tc).unwrap();
        assert!(d.re > 0.0 && d.re < 1.0);
    }
    let far = denominator(c(1e4, 0.0), &rates, &tc).unwrap();
    assert!((far.re - 1.0).abs() < 1e-3);
}

#[test]
fn denominator_vanishes_at_the_characteristic_roots() {
    for (lambda, mu, eta) in [(1.0, 1.0, 1.0), (0.8, 0.5, 1.2), (3.0, 0.2, 0.7)] {
        let sd = SpectralData::new(lambda, mu, eta, MassConvention::Probabilistic).unwrap();
        let rates = LiCaoRates::constant(lambda, mu, eta).unwrap();
        let tc = TransformConfig::default();
        // z1 lies where both kernel integrals still converge: bisect D on the real axis
        let d = |s: f64| denominator(c(s, 0.0), &rates, &tc).unwrap().re;
        let (mut lo, mut hi) = (-(lambda + mu).min(eta) + 1e-9, 0.0);
        assert!(d(lo) < 0.0 && d(hi) > 0.0);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if d(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((hi - sd.z1).abs() < 1e-10, "{hi} vs {}", sd.z1);
        // z2 lies beyond the abscissa of convergence of the kernels
        let r = denominator(c(sd.z2, 0.0), &rates, &tc);
        assert!(matches!(r, Err(Error::Divergent { .. })), "{r:?}");
        let err = hat_p0(0.5, c(sd.z1, 0.0), &rates, &tc);
        assert!(matches!(err, Err(Error::NearSingular { .. })), "{err:?}");
    }
}

// ∫ e^{-st} f(x, t) dt over t ∈ [x, ∞), by Gauss–Legendre in τ = t − x.
fn time_transform(f: impl Fn(f64) -> f64, x: f64, s: f64, horizon: f64) -> f64 {
    (-s * x).exp() * integrate_gl(|tau| (-s * tau).exp() * f(x + tau), 0.0, horizon, 60)
}

#[test]
fn fields_match_time_quadrature_of_the_closed_form() {
    for (i, (lambda, mu, eta)) in random_triples(5, 100, 0.2, 4.0).into_iter().enumerate() {
        let x = 0.1 + 0.02 * i as f64;
        let s = 0.2 + 0.03 * i as f64;
        let conv = if i % 2 == 0 { MassConvention::Probabilistic } else { MassConvention::Paper };
        let sd = SpectralData::new(lambda, mu, eta, conv).unwrap();
        let rates = LiCaoRates::constant(lambda, mu, eta).unwrap();
        let tc = cfg(conv);
        let horizon = 40.0 / (s - sd.z1);
        let p0 = time_transform(|t| sd.eval_p0(x, t).unwrap().density, x, s, horizon) + sd.atom_mass(x) * (-s * x).exp();
        let p1 = time_transform(|t| sd.eval_p1(x, t).unwrap().density, x, s, horizon);
        let h0 = hat_p0(x, c(s, 0.0), &rates, &tc).unwrap();
        let h1 = hat_p1(x, c(s, 0.0), &rates, &tc).unwrap();
        assert!((h0.re - p0).abs() < 1e-6 * p0.abs().max(1e-300), "case {i}: {h0} vs {p0}");
        assert!((h1.re - p1).abs() < 1e-6 * p1.abs().max(1e-300), "case {i}: {h1} vs {p1}");
    }
}

#[test]
fn boundary_transform_integrates_the_entry_flow() {
    let (lambda, mu, eta) = (1.0, 1.0, 1.0);
    let rates = LiCaoRates::constant(lambda, mu, eta).unwrap();
    let h = hat_p0(0.0, c(0.0, 0.0), &rates, &TransformConfig::default()).unwrap();
    // δ(t) plus the repair outflow η·P1(t)
    let flow = 1.0 + integrate_gl(|t| eta * ode_oracle(lambda, mu, eta, t).unwrap().1, 0.0, 100.0, 200);
    assert!((h.re - flow).abs() < 1e-8, "{h} vs {flow}");
}

#[test]
fn paper_fields_are_twice_the_probabilistic_ones() {
    let rates = LiCaoRates::new(
        RateFunction::weibull(2.0, 1.0).unwrap(),
        RateFunction::constant(1.0).unwrap(),
        RateFunction::constant(1.5).unwrap(),
    );
    for &(x, s) in &[(0.0, c(0.5, 0.0)), (0.7, c(1.0, 2.0)), (2.0, c(3.0, -1.0))] {
        let p = hat_p0(x, s, &rates, &cfg(MassConvention::Paper)).unwrap();
        let q = hat_p0(x, s, &rates, &cfg(MassConvention::Probabilistic)).unwrap();
        assert_eq!(p, q * 2.0);
        let p = hat_p1(x, s, &rates, &cfg(MassConvention::Paper)).unwrap();
        let q = hat_p1(x, s, &rates, &cfg(MassConvention::Probabilistic)).unwrap();
        assert_eq!(p, q * 2.0);
    }
}

#[test]
fn no_breakdowns_leaves_only_the_atom() {
    let rates = LiCaoRates::new(
        RateFunction::constant(0.0).unwrap(),
        RateFunction::weibull(1.5, 1.0).unwrap(),
        RateFunction::constant(1.0).unwrap(),
    );
    let tc = cfg(MassConvention::Paper);
    let (x, s) = (0.8, c(0.4, 1.0));
    let p0 = hat_p0(x, s, &rates, &tc).unwrap();
    let want = (-s * x).exp() * 2.0 * (-(0.8f64).powf(1.5)).exp();
    assert!((p0 - want).norm() < 1e-14);
    assert_eq!(hat_p1(x, s, &rates, &tc).unwrap(), c(0.0, 0.0));
    let parts = hat_p0_parts(x, s, &rates, &tc).unwrap();
    assert_eq!(parts.smooth, c(0.0, 0.0));
}

#[test]
fn atom_masses() {
    let rates = LiCaoRates::constant(1.0, 1.0, 3.0).unwrap();
    assert_eq!(atom_mass_in_t(0.0, &rates, &cfg(MassConvention::Paper)).unwrap(), 2.0);
    let m = atom_mass_in_t(1.0, &rates, &cfg(MassConvention::Probabilistic)).unwrap();
    assert!((m - (-2.0f64).exp()).abs() < 1e-15);
    let w = LiCaoRates::new(
        RateFunction::weibull(2.0, 1.0).unwrap(),
        RateFunction::weibull(0.5, 3.0).unwrap(),
        RateFunction::constant(1.0).unwrap(),
    );
    let m = atom_mass_in_t(2.0, &w, &cfg(MassConvention::Paper)).unwrap();
    let r = w.lambda.cumulative_hazard(2.0).unwrap() + w.mu.cumulative_hazard(2.0).unwrap();
    assert!((m - 2.0 * (-r).exp()).abs() < 1e-15);
    assert!(atom_mass_in_t(-1.0, &rates, &TransformConfig::default()).is_err());
}

#[test]
fn large_real_s_decays() {
    let rates = LiCaoRates::constant(1.0, 1.0, 1.0).unwrap();
    let tc = TransformConfig::default();
    let v = hat_p1(0.0, c(50.0, 0.0), &rates, &tc).unwrap();
    assert!(v.re > 0.0 && v.re < 2.0 / 50.0);
}

#[test]
fn config_validation() {
    let mut tc = TransformConfig::default();
    assert!(tc.validate().is_ok());
    tc.quad_rtol = 1e-2;
    assert!(tc.validate().is_err());
}
