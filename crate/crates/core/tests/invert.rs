mod common;

use common::integrate_gl;
use std::f64::consts::PI;
use svtk_core::closed_form::{ode_oracle, SpectralData};
use svtk_core::invert::{
    euler_inversion, gaver_stehfest, invert_both, invert_fields_both, invert_p0, invert_p1, InversionConfig, InversionMethod,
};
use svtk_core::transform::{hat_p0_parts, hat_p1_parts, TransformConfig};
use svtk_core::{Complex64, Error, LiCaoRates, MassConvention, RateFunction};

type Pair = (&'static str, fn(Complex64) -> Complex64, fn(f64) -> f64, f64);

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

// (name, F, f, t)
fn corpus() -> Vec<Pair> {
    vec![
        ("exponential", |s| one() / (s + 1.0), |t| (-t).exp(), 1.0),
        ("ramp", |s| one() / (s * s), |t| t, 2.0),
        ("step", |s| one() / s, |_| 1.0, 3.0),
        ("cosine", |s| s / (s * s + 1.0), f64::cos, 0.8),
        ("sine", |s| one() / (s * s + 1.0), f64::sin, 1.0),
        ("damped cosine", |s| (s + 0.5) / ((s + 0.5) * (s + 0.5) + 4.0), |t| (-0.5 * t).exp() * (2.0 * t).cos(), 1.5),
        ("gamma", |s| one() / ((s + 1.0) * (s + 1.0)), |t| t * (-t).exp(), 1.0),
        ("saturation", |s| one() / (s * (s + 2.0)), |t| 0.5 * (1.0 - (-2.0 * t).exp()), 0.7),
        ("inverse root", |s| one() / s.sqrt(), |t| 1.0 / (PI * t).sqrt(), 1.0),
        ("two exponentials", |s| one() / ((s + 1.0) * (s + 3.0)), |t| 0.5 * ((-t).exp() - (-3.0 * t).exp()), 2.5),
    ]
}

#[test]
fn euler_reproduces_the_pair_corpus() {
    for (name, f, exact, t) in corpus() {
        let v = euler_inversion(|s| Ok(f(s)), t, 20).unwrap();
        assert!((v - exact(t)).abs() < 1e-6, "{name}: {v} vs {}", exact(t));
    }
    let v = euler_inversion(|s| Ok(one() / (s + 1.0)), 1.0, 20).unwrap();
    assert!((v - (-1.0f64).exp()).abs() < 1e-9);
}

#[test]
fn euler_on_a_shifted_step_is_limited_by_the_jump() {
    // the jump at t/2 aliases in the damped Fourier series; the error stays
    // between 1e-3 and 2e-2 for every M in 10..=50
    let v = euler_inversion(|s| Ok((-s).exp() / s), 2.0, 20).unwrap();
    assert!((v - 1.0).abs() < 2e-2, "{v}");
    let v = euler_inversion(|s| Ok((-s).exp() / s), 3.0, 40).unwrap();
    assert!((v - 1.0).abs() < 1e-5, "{v}");
}

#[test]
fn stehfest_reproduces_the_non_oscillatory_pairs() {
    for (name, f, exact, t) in corpus() {
        if matches!(name, "sine" | "cosine" | "damped cosine") {
            continue;
        }
        let v = gaver_stehfest(|s| Ok(f(Complex64::new(s, 0.0)).re), t, 14).unwrap();
        assert!((v - exact(t)).abs() < 1e-4, "{name}: {v} vs {}", exact(t));
    }
    // truncation at 14 terms, observed 9.5e-7 and 7.2e-7
    let v = gaver_stehfest(|s| Ok(1.0 / (s + 1.0)), 1.0, 14).unwrap();
    assert!((v - (-1.0f64).exp()).abs() < 2e-6);
    let v = gaver_stehfest(|s| Ok(1.0 / (s * s)), 2.0, 14).unwrap();
    assert!((v - 2.0).abs() < 2e-6);
    let v = gaver_stehfest(|s| Ok(1.0 / (s * s + 1.0)), 1.0, 14).unwrap();
    assert!((v - 1f64.sin()).abs() < 1e-3);
}

#[test]
fn stehfest_term_limits() {
    assert!(matches!(gaver_stehfest(|_| Ok(1.0), 1.0, 22), Err(Error::Config(_))));
    assert!(matches!(gaver_stehfest(|_| Ok(1.0), 1.0, 13), Err(Error::Config(_))));
    assert!(gaver_stehfest(|_| Ok(1.0), 0.0, 14).is_err());
}

#[test]
fn nonfinite_samples_are_reported() {
    let r = euler_inversion(|s| Ok(Complex64::new(f64::NAN, 0.0) * s), 1.0, 20);
    assert!(matches!(r, Err(Error::NonFinite { .. })));
}

#[test]
fn euler_inverts_the_processing_mass() {
    let (lambda, mu, eta) = (1.0, 1.0, 1.0);
    let f = |s: Complex64| Ok((s + eta) / ((s + lambda + mu) * (s + eta) - lambda * eta));
    let v = euler_inversion(f, 1.0, 20).unwrap();
    let (p0, _) = ode_oracle(lambda, mu, eta, 1.0).unwrap();
    assert!((v - p0).abs() < 1e-9, "{v} vs {p0}");
}

#[test]
fn both_methods_report_their_spread() {
    let cfg = InversionConfig::default();
    let r = invert_both(|s| Ok(one() / (s + 2.0)), 0.5, &cfg).unwrap();
    assert!((r.euler - (-1.0f64).exp()).abs() < 1e-9);
    assert!(r.spread < 1e-5 && r.spread == (r.euler - r.stehfest).abs());
}

#[test]
fn config_validation() {
    let mut cfg = InversionConfig::default();
    assert!(cfg.validate().is_ok());
    cfg.gs_terms = 6;
    assert!(cfg.validate().is_err());
    cfg = InversionConfig { euler_m: 60, ..Default::default() };
    assert!(cfg.validate().is_err());
    assert_eq!("euler".parse::<InversionMethod>().unwrap(), InversionMethod::Euler);
    assert!("talbot".parse::<InversionMethod>().is_err());
}

#[test]
fn constant_rate_fields_match_the_closed_form() {
    for conv in [MassConvention::Probabilistic, MassConvention::Paper] {
        let sd = SpectralData::new(1.0, 1.0, 1.0, conv).unwrap();
        let rates = LiCaoRates::constant(1.0, 1.0, 1.0).unwrap();
        let tc = TransformConfig::with_convention(conv);
        let ic = InversionConfig::default();
        let p = invert_p0(0.5, 1.0, &rates, &tc, &ic).unwrap();
        assert!((p.density - sd.eval_p0(0.5, 1.0).unwrap().density).abs() < 1e-5);
        assert_eq!(p.atom.location, 0.5);
        assert!((p.atom.mass - sd.atom_mass(0.5)).abs() < 1e-15);
        let v = invert_p1(0.3, 1.7, &rates, &tc, &ic).unwrap();
        assert!((v - sd.eval_p1(0.3, 1.7).unwrap().density).abs() < 1e-5);
    }
}

#[test]
fn inversion_respects_causality_and_the_exclusion_zone() {
    let rates = LiCaoRates::constant(1.0, 1.0, 1.0).unwrap();
    let (tc, ic) = (TransformConfig::default(), InversionConfig::default());
    assert_eq!(invert_p0(3.0, 1.0, &rates, &tc, &ic).unwrap().density, 0.0);
    assert_eq!(invert_p1(3.0, 0.01, &rates, &tc, &ic).unwrap(), 0.0);
    assert!(matches!(invert_p0(1.0, 1.02, &rates, &tc, &ic), Err(Error::Exclusion { .. })));
    assert!(matches!(invert_p1(1.0, 0.99, &rates, &tc, &ic), Err(Error::Exclusion { .. })));
    assert!(invert_fields_both(3.0, 1.0, &rates, &tc, &ic).unwrap().is_none());
}

#[test]
fn inversion_is_deterministic() {
    let rates = LiCaoRates::new(
        RateFunction::weibull(2.0, 1.0).unwrap(),
        RateFunction::constant(1.0).unwrap(),
        RateFunction::constant(1.5).unwrap(),
    );
    let (tc, ic) = (TransformConfig::default(), InversionConfig::default());
    let a = invert_p1(0.4, 1.3, &rates, &tc, &ic).unwrap();
    let b = invert_p1(0.4, 1.3, &rates, &tc, &ic).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

fn weibull_rates() -> LiCaoRates {
    LiCaoRates::new(
        RateFunction::weibull(2.0, 1.0).unwrap(),
        RateFunction::constant(1.0).unwrap(),
        RateFunction::constant(1.5).unwrap(),
    )
}

#[test]
fn repair_entry_flow_matches_the_integrated_processing_field() {
    let rates = weibull_rates();
    let (tc, ic) = (TransformConfig::default(), InversionConfig::default());
    let t = 1.2;
    let entry = invert_p1(0.0, t, &rates, &tc, &ic).unwrap();
    // λ-weighted processing mass; the smooth part is inverted directly so
    // the quadrature may approach the front
    let smooth = integrate_gl(
        |x| {
            let f = |s: Complex64| Ok(hat_p0_parts(x, s, &rates, &tc)?.smooth);
            rates.lambda.hazard(x).unwrap() * euler_inversion(f, t - x, 20).unwrap()
        },
        0.0,
        t,
        3,
    );
    let atom = rates.lambda.hazard(t).unwrap() * invert_p0(t, t + 1.0, &rates, &tc, &ic).unwrap().atom.mass;
    assert!((entry - (smooth + atom)).abs() < 1e-3, "{entry} vs {}", smooth + atom);
}

#[test]
fn weibull_round_trip_reproduces_the_transforms() {
    let rates = weibull_rates();
    let tc = TransformConfig::default();
    for x in [0.25, 1.0] {
        for s in [0.5, 1.0, 2.0] {
            let smooth0 = |tau: f64| euler_inversion(|z| Ok(hat_p0_parts(x, z, &rates, &tc)?.smooth), tau, 20).unwrap();
            let smooth1 = |tau: f64| euler_inversion(|z| Ok(hat_p1_parts(x, z, &rates, &tc)?.smooth), tau, 20).unwrap();
            let horizon = 40.0 / s;
            let f0 = integrate_gl(|tau| (-s * tau).exp() * smooth0(tau), 0.0, horizon, 4);
            let f1 = integrate_gl(|tau| (-s * tau).exp() * smooth1(tau), 0.0, horizon, 4);
            let z = Complex64::new(s, 0.0);
            let h0 = hat_p0_parts(x, z, &rates, &tc).unwrap();
            let h1 = hat_p1_parts(x, z, &rates, &tc).unwrap();
            let shift = (-s * x).exp();
            let forward0 = shift * (f0 + h0.atom);
            let forward1 = shift * f1;
            assert!((forward0 - h0.assemble(x, z).re).abs() < 1e-4, "p0 x={x} s={s}");
            assert!((forward1 - h1.assemble(x, z).re).abs() < 1e-4, "p1 x={x} s={s}");
        }
    }
}
