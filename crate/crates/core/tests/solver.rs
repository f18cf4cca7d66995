mod common;

use common::rk4_two_state;
use svtk_core::closed_form::SpectralData;
use svtk_core::model::{Entry, InitialProfile};
use svtk_core::registry::{self, licao_model, yue_model_1};
use svtk_core::solver::{mass_balance, residual_check, solve, SolutionTrajectory, SolverConfig};
use svtk_core::{Error, LiCaoRates, MassConvention, RateFunction, TransportModel};

fn licao(lambda: f64, mu: f64, eta: f64) -> TransportModel {
    licao_model(&LiCaoRates::constant(lambda, mu, eta).unwrap())
}

/// Largest density error at nodes `x ≤ t − 2dx` relative to the largest
/// exact value, per component.
fn density_errors(traj: &SolutionTrajectory, sd: &SpectralData) -> [f64; 2] {
    let t = *traj.times.last().unwrap();
    let dx = traj.dx;
    let mut out = [0.0; 2];
    for (c, state) in traj.final_states().iter().enumerate() {
        let (mut err, mut peak) = (0.0f64, 0.0f64);
        let g = state.grid();
        for k in 0..g.len() {
            let x = g.x(k);
            if x > t - 2.0 * dx {
                break;
            }
            let exact = if c == 0 {
                sd.eval_p0(x, t).unwrap().density
            } else {
                sd.eval_p1(x, t).unwrap().density
            };
            err = err.max((state.density()[k] - exact).abs());
            peak = peak.max(exact.abs());
        }
        out[c] = err / peak;
    }
    out
}

#[test]
fn constant_rates_converge_at_first_order() {
    let sd = SpectralData::new(1.0, 1.0, 1.0, MassConvention::Probabilistic).unwrap();
    let m = licao(1.0, 1.0, 1.0);
    let errs: Vec<[f64; 2]> = [128.0, 256.0, 512.0]
        .iter()
        .map(|n| density_errors(&solve(&m, &SolverConfig::new(2.0).with_dx(1.0 / n)).unwrap(), &sd))
        .collect();
    for c in 0..2 {
        for w in errs.windows(2) {
            let ratio = w[0][c] / w[1][c];
            assert!((1.6..=2.4).contains(&ratio), "component {c}: ratio {ratio}");
        }
        assert!(errs[2][c] < 0.02, "component {c}: {}", errs[2][c]);
    }
}

#[test]
fn atom_follows_the_characteristic_exactly() {
    for conv in [MassConvention::Probabilistic, MassConvention::Paper] {
        let sd = SpectralData::new(0.7, 0.4, 1.3, conv).unwrap();
        let traj = solve(&licao(0.7, 0.4, 1.3), &SolverConfig::new(3.0).with_convention(conv)).unwrap();
        for (t, states) in traj.times.iter().zip(&traj.states) {
            let a = states[0].atoms();
            assert_eq!(a.len(), 1);
            assert!((a[0].location - t).abs() < 1e-12);
            assert!((a[0].mass - sd.atom_mass(*t)).abs() < 1e-10);
            assert!(states[1].atoms().is_empty());
        }
    }
}

#[test]
fn without_breakdowns_only_the_atom_remains() {
    let traj = solve(&licao(0.0, 0.8, 1.0), &SolverConfig::new(2.0)).unwrap();
    for (t, states) in traj.times.iter().zip(&traj.states) {
        assert!(states[0].density().iter().all(|v| *v == 0.0));
        assert!(states[1].density().iter().all(|v| *v == 0.0));
        assert!((states[0].atoms()[0].mass - (-0.8 * t).exp()).abs() < 1e-12);
    }
}

#[test]
fn total_mass_matches_the_ode() {
    let traj = solve(&licao(1.0, 1.0, 1.0), &SolverConfig::new(2.0).with_dx(1.0 / 512.0)).unwrap();
    let (p0, p1) = rk4_two_state(1.0, 1.0, 1.0, 2.0, 1e-12);
    let m = traj.component_masses(traj.times.len() - 1);
    assert!((m[0] - p0).abs() < 5e-3 && (m[1] - p1).abs() < 5e-3, "{m:?} vs ({p0}, {p1})");
}

#[test]
fn densities_stay_nonnegative_and_causal() {
    let f = RateFunction::weibull(2.0, 0.8).unwrap();
    let m = licao_model(&LiCaoRates::new(
        f,
        RateFunction::constant(0.3).unwrap(),
        RateFunction::piecewise_linear(vec![(0.0, 0.2), (1.0, 3.0), (4.0, 0.5)]).unwrap(),
    ))
    .with_smooth_initial(vec![Some(InitialProfile { knots: vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)] }), None])
    .unwrap();
    let traj = solve(&m, &SolverConfig::new(3.0).with_dx(1.0 / 128.0)).unwrap();
    for (t, states) in traj.times.iter().zip(&traj.states) {
        for s in states {
            let g = s.grid();
            for (k, v) in s.density().iter().enumerate() {
                assert!(*v >= -1e-12);
                if g.x(k) > t + 1.0 + 1e-9 {
                    assert_eq!(*v, 0.0, "x = {} at t = {t}", g.x(k));
                }
            }
        }
    }
}

#[test]
fn solver_residual_is_first_order() {
    let dx = 1.0 / 512.0;
    let m = licao(1.0, 1.0, 1.0);
    let traj = solve(&m, &SolverConfig::new(1.5).with_dx(dx).with_snapshot_every(1)).unwrap();
    let probes = [(0.25, 1.0), (0.5, 1.0), (0.75, 1.25), (0.125, 0.5)];
    let r = residual_check(&traj, &m, &probes).unwrap();
    println!("solver residual at dx = 1/512: {r:e}");
    assert!(r < 5.0 * dx, "{r}");
}

#[test]
fn residual_rejects_probes_near_the_front() {
    let m = licao(1.0, 1.0, 1.0);
    let traj = solve(&m, &SolverConfig::new(1.0).with_dx(1.0 / 64.0).with_snapshot_every(1)).unwrap();
    let r = residual_check(&traj, &m, &[(0.5 - 1.0 / 64.0, 0.5)]);
    assert!(matches!(r, Err(Error::Probe { .. })));
    assert!(residual_check(&traj, &m, &[(0.1, 0.3)]).is_err());
}

#[test]
fn main_model_ledger_closes() {
    let m = licao(1.0, 1.0, 1.0);
    let traj = solve(&m, &SolverConfig::new(3.0).with_dx(1.0 / 512.0)).unwrap();
    let ledger = mass_balance(&traj, &m);
    assert!((ledger.injected - 1.0).abs() < 1e-12);
    assert!(ledger.relative_closure < 0.01, "{}", ledger.relative_closure);
    assert_eq!(ledger.channels.len(), 1);
    assert_eq!(ledger.channels[0].name, "processing");
    let last = ledger.entries.last().unwrap();
    assert!(last.cumulative_absorbed > 0.5 && last.cumulative_cut == 0.0);
}

#[test]
fn conservative_variant_keeps_its_mass() {
    let m = licao(1.0, 0.0, 1.0);
    let traj = solve(&m, &SolverConfig::new(5.0).with_dx(1.0 / 512.0)).unwrap();
    let ledger = mass_balance(&traj, &m);
    assert!(ledger.channels.is_empty());
    for e in &ledger.entries {
        assert!((e.total_mass - 1.0).abs() < 5e-3, "{} at {}", e.total_mass, e.t);
    }
}

#[test]
fn linton_ledger_closes_despite_creation() {
    let m = registry::lookup("linton").unwrap();
    let traj = solve(&m, &SolverConfig::new(5.0).with_dx(1.0 / 256.0)).unwrap();
    let ledger = mass_balance(&traj, &m);
    assert!(ledger.relative_closure < 0.01, "{}", ledger.relative_closure);
    assert!(ledger.channels.iter().any(|c| c.min_gap < 0.0));
}

#[test]
fn yue_first_system_stays_bounded() {
    let one = RateFunction::constant(1.0).unwrap();
    let m = yue_model_1(1.0, &one, &one).unwrap();
    let traj = solve(&m, &SolverConfig::new(10.0)).unwrap();
    let ledger = mass_balance(&traj, &m);
    let mut prev = f64::INFINITY;
    for e in &ledger.entries {
        assert!(e.total_mass <= ledger.injected * (1.0 + 1e-9));
        assert!(e.total_mass <= prev * (1.0 + 1e-12), "mass grew at t = {}", e.t);
        prev = e.total_mass;
    }
}

#[test]
fn short_domain_is_rejected() {
    let cfg = SolverConfig {
        x_max: Some(1.0),
        ..SolverConfig::new(2.0)
    };
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    assert!(solve(&licao(1.0, 1.0, 1.0), &cfg).is_err());
    let cfg = SolverConfig {
        x_max: Some(2.0 - 1e-9),
        ..SolverConfig::new(2.0)
    };
    assert!(matches!(solve(&licao(1.0, 1.0, 1.0), &cfg), Err(Error::Config(_) | Error::DomainCut { .. })));
}

#[test]
fn invalid_models_are_refused() {
    let one = RateFunction::constant(1.0).unwrap();
    let m = TransportModel::new(
        vec!["a".into()],
        vec![vec![Entry::minus(one.clone())]],
        vec![vec![Entry::minus(one)]],
        vec![1.0],
        vec![0.0],
    )
    .unwrap();
    match solve(&m, &SolverConfig::new(1.0)) {
        Err(Error::InvalidModel { check }) => assert_eq!(check, "boundary_kernel_nonnegative"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn mass_is_cut_at_the_domain_end() {
    let m = licao(0.0, 0.0, 1.0)
        .with_smooth_initial(vec![Some(InitialProfile { knots: vec![(0.0, 1.0), (2.0, 1.0)] }), None])
        .unwrap();
    let cfg = SolverConfig {
        x_max: Some(2.0),
        ..SolverConfig::new(1.0).with_dx(1.0 / 64.0)
    };
    let traj = solve(&m, &cfg).unwrap();
    let ledger = mass_balance(&traj, &m);
    let last = ledger.entries.last().unwrap();
    assert!(last.cumulative_cut > 0.9 && last.cumulative_cut < 1.1, "{}", last.cumulative_cut);
    assert!(ledger.relative_closure < 1e-12);
}
