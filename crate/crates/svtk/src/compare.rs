//! `svtk compare`: runs the selected methods on the processing/repair model
//! and checks each defined pair against its tolerance.
//!
//! Defined pairs: closed form against any other method, and solver against
//! inversion. Every selected method must take part in at least one pair.

use svtk_core::closed_form::SpectralData;
use svtk_core::invert::{self, InversionConfig};
use svtk_core::montecarlo::{compare_to_closed_form, SimConfig, SimEstimate};
use svtk_core::registry::licao_model;
use svtk_core::report::{ComparisonReport, Metric, ReportEntry};
use svtk_core::solver::{solve, SolutionTrajectory, SolverConfig};
use svtk_core::transform::TransformConfig;
use svtk_core::{LiCaoRates, MassConvention, RateFunction};

use crate::cli::{CompareArgs, Method, RunStatus};
use crate::error::{CliError, Result};
use crate::io::OutputDir;
use crate::parallel;

/// Distance from the jump at `x = t` kept by the inversion probes.
pub const PROBE_GAP: f64 = 0.25;

fn defined(a: Method, b: Method) -> bool {
    use Method::*;
    matches!((a, b), (ClosedForm, _) | (_, ClosedForm) | (Pde, Inversion) | (Inversion, Pde)) && a != b
}

/// The pairs to run, or a usage error explaining why the selection does not work.
pub fn plan(methods: &[Method]) -> std::result::Result<Vec<(Method, Method)>, String> {
    let mut m = methods.to_vec();
    m.sort();
    m.dedup();
    if m.len() < 2 {
        return Err("select at least two distinct methods".into());
    }
    let mut pairs = Vec::new();
    for (i, &a) in m.iter().enumerate() {
        for &b in &m[i + 1..] {
            if defined(a, b) {
                pairs.push((a, b));
            }
        }
    }
    for &a in &m {
        if !pairs.iter().any(|&(p, q)| p == a || q == a) {
            let others: Vec<&str> = m.iter().filter(|&&b| b != a).map(|b| b.label()).collect();
            return Err(format!(
                "no comparison is defined between {} and {}; add closed-form",
                a.label(),
                others.join(", ")
            ));
        }
    }
    Ok(pairs)
}

struct Fields {
    sd: Option<SpectralData>,
    pde: Option<SolutionTrajectory>,
    /// `(x, p0, p1)` at the probes.
    inversion: Option<Vec<(f64, f64, f64)>>,
    mc: Option<SimEstimate>,
}

pub fn run(a: &CompareArgs, out: &mut OutputDir) -> Result<RunStatus> {
    let pairs = plan(&a.methods).map_err(CliError::Usage)?;
    let uses = |m: Method| pairs.iter().any(|&(p, q)| p == m || q == m);
    let rates = a.hazards.resolve()?;
    let constants = rates.as_constants();
    if uses(Method::ClosedForm) && constants.is_none() {
        return Err(CliError::Usage("closed-form needs constant rates".into()));
    }
    if uses(Method::Montecarlo) && a.seed.is_none() {
        return Err(CliError::Usage("--seed is required when montecarlo is selected".into()));
    }
    if uses(Method::Inversion) && !(a.t > PROBE_GAP && a.probes >= 2) {
        return Err(CliError::Usage(format!(
            "inversion probes need t > {PROBE_GAP} and --probes >= 2"
        )));
    }

    let fields = Fields {
        sd: match constants {
            Some((l, m, e)) if uses(Method::ClosedForm) => Some(SpectralData::new(l, m, e, MassConvention::Probabilistic)?),
            _ => None,
        },
        pde: if uses(Method::Pde) {
            Some(solve(&licao_model(&rates), &SolverConfig::new(a.t).with_dx(a.dx))?)
        } else {
            None
        },
        inversion: if uses(Method::Inversion) {
            Some(inversion_probes(&rates, a)?)
        } else {
            None
        },
        mc: if uses(Method::Montecarlo) {
            let cfg = SimConfig {
                n_traj: a.n,
                seed: a.seed.unwrap_or_default(),
                horizon: a.t,
                bins: a.bins,
            };
            let est = parallel::with_threads(a.threads, || {
                parallel::simulate(&rates.lambda, &rates.mu, &rates.eta, &cfg, &[a.t])
            })
            .map_err(CliError::Usage)??;
            Some(est)
        } else {
            None
        },
    };

    let labels: Vec<String> = pairs.iter().map(|(p, q)| format!("{} vs {}", p.label(), q.label())).collect();
    let mut report = ComparisonReport::new(format!(
        "compare at t = {}: {}; lambda = {}, mu = {}, eta = {}",
        a.t,
        labels.join(", "),
        describe(&rates.lambda),
        describe(&rates.mu),
        describe(&rates.eta),
    ));
    for &(p, q) in &pairs {
        let part = match (p, q) {
            (Method::ClosedForm, Method::Pde) => closed_form_vs_pde(fields.sd.as_ref().unwrap(), fields.pde.as_ref().unwrap(), a),
            (Method::ClosedForm, Method::Inversion) => {
                closed_form_vs_inversion(fields.sd.as_ref().unwrap(), fields.inversion.as_ref().unwrap(), a)
            }
            (Method::ClosedForm, Method::Montecarlo) => {
                closed_form_vs_montecarlo(fields.sd.as_ref().unwrap(), fields.mc.as_ref().unwrap(), a)?
            }
            (Method::Pde, Method::Inversion) => pde_vs_inversion(fields.pde.as_ref().unwrap(), fields.inversion.as_ref().unwrap(), a),
            _ => unreachable!("plan only returns defined pairs"),
        };
        report.merge(part);
    }
    out.write_json("compare_report.json", &report)?;
    print!("{report}");
    for p in out.written() {
        println!("wrote {}", p.display());
    }
    let failure = if report.all_pass() {
        None
    } else {
        let failed: Vec<&str> = report.failures().map(|e| e.name.as_str()).collect();
        Some(CliError::Tolerance(if report.insufficient_data {
            "insufficient Monte Carlo data for a comparison".into()
        } else {
            format!("{} comparison(s) out of tolerance: {}", failed.len(), failed.join(", "))
        }))
    };
    Ok(RunStatus { seed: a.seed, failure })
}

fn describe(rate: &RateFunction) -> String {
    match rate.as_constant() {
        Some(c) => c.to_string(),
        None => {
            let p: Vec<String> = rate.params().iter().map(f64::to_string).collect();
            format!("{}({})", rate.kind(), p.join(", "))
        }
    }
}

fn probe_ages(a: &CompareArgs) -> Vec<f64> {
    let top = a.t - PROBE_GAP;
    (0..a.probes).map(|k| top * k as f64 / (a.probes - 1) as f64).collect()
}

fn inversion_probes(rates: &LiCaoRates, a: &CompareArgs) -> Result<Vec<(f64, f64, f64)>> {
    let (tc, ic) = (TransformConfig::default(), InversionConfig::default());
    probe_ages(a)
        .into_iter()
        .map(|x| {
            let p0 = invert::invert_p0(x, a.t, rates, &tc, &ic)?.density;
            let p1 = invert::invert_p1(x, a.t, rates, &tc, &ic)?;
            Ok((x, p0, p1))
        })
        .collect()
}

/// Max and mean absolute differences, and the reference peak.
fn errors(pairs: impl Iterator<Item = (f64, f64)>) -> (f64, f64, f64) {
    let (mut max, mut sum, mut peak, mut n) = (0.0f64, 0.0, 0.0f64, 0usize);
    for (est, reference) in pairs {
        let d = (est - reference).abs();
        max = max.max(d);
        sum += d;
        peak = peak.max(reference.abs());
        n += 1;
    }
    (max, sum / n.max(1) as f64, peak)
}

/// Entries for one field: errors relative to the reference peak.
fn relative_entries(report: &mut ComparisonReport, name: &str, (max, mean, peak): (f64, f64, f64), tol: f64) {
    let scale = if peak > 0.0 { peak } else { 1.0 };
    report.push(ReportEntry::with_error(format!("{name}_max"), max, peak, max / scale, Metric::RelError, tol));
    report.push(ReportEntry::with_error(format!("{name}_mean"), mean, peak, mean / scale, Metric::RelError, tol));
}

fn absolute_entries(report: &mut ComparisonReport, name: &str, (max, mean, peak): (f64, f64, f64), tol: f64) {
    report.push(ReportEntry::with_error(format!("{name}_max"), max, peak, max, Metric::MaxAbsError, tol));
    report.push(ReportEntry::with_error(format!("{name}_mean"), mean, peak, mean, Metric::MeanAbsError, tol));
}

fn closed_form_vs_pde(sd: &SpectralData, traj: &SolutionTrajectory, a: &CompareArgs) -> ComparisonReport {
    let t = *traj.times.last().expect("trajectory has a final time");
    let mut r = ComparisonReport::new(format!(
        "closed-form vs pde, dx = {}: errors relative to the density peak on x <= t - 2dx",
        traj.dx
    ));
    let states = traj.final_states();
    for (c, name) in [(0usize, "pde_p0_density"), (1, "pde_p1_density")] {
        let s = &states[c];
        let g = s.grid();
        let pairs = (0..g.len()).map(|k| (k, g.x(k))).take_while(|&(_, x)| x <= t - 2.0 * traj.dx).map(|(k, x)| {
            let exact = if c == 0 {
                sd.eval_p0(x, t).map(|p| p.density)
            } else {
                sd.eval_p1(x, t).map(|p| p.density)
            };
            (s.density()[k], exact.unwrap_or(f64::NAN))
        });
        relative_entries(&mut r, name, errors(pairs), a.pde_tol);
    }
    let atom = states[0].atom_mass();
    r.push(ReportEntry::new("pde_atom_mass", atom, sd.atom_mass(t), Metric::AbsError, 1e-10));
    let masses = [
        ("pde_p0_mass", states[0].total_mass(), sd.boundary_transform_p0(t)),
        ("pde_p1_mass", states[1].total_mass(), sd.boundary_transform_p1(t)),
    ];
    for (name, est, exact) in masses {
        let exact = exact.unwrap_or(f64::NAN);
        let err = (est - exact).abs() / exact.abs().max(f64::MIN_POSITIVE);
        r.push(ReportEntry::with_error(name, est, exact, err, Metric::RelError, a.pde_tol));
    }
    r
}

fn closed_form_vs_inversion(sd: &SpectralData, probes: &[(f64, f64, f64)], a: &CompareArgs) -> ComparisonReport {
    let mut r = ComparisonReport::new(format!(
        "closed-form vs inversion (euler), {} probes on x <= t - {PROBE_GAP}",
        probes.len()
    ));
    let exact = |x: f64, c: usize| {
        if c == 0 {
            sd.eval_p0(x, a.t).map(|p| p.density).unwrap_or(f64::NAN)
        } else {
            sd.eval_p1(x, a.t).map(|p| p.density).unwrap_or(f64::NAN)
        }
    };
    absolute_entries(&mut r, "inversion_p0_density", errors(probes.iter().map(|&(x, p0, _)| (p0, exact(x, 0)))), a.inversion_tol);
    absolute_entries(&mut r, "inversion_p1_density", errors(probes.iter().map(|&(x, _, p1)| (p1, exact(x, 1)))), a.inversion_tol);
    r
}

fn closed_form_vs_montecarlo(sd: &SpectralData, est: &SimEstimate, a: &CompareArgs) -> Result<ComparisonReport> {
    let mut r = compare_to_closed_form(est, sd, a.t)?;
    if a.z != 3.0 {
        for e in &mut r.entries {
            if e.metric == Metric::ZScore {
                *e = ReportEntry::with_error(e.name.clone(), e.estimate, e.reference, e.error, e.metric, a.z);
            }
        }
    }
    Ok(r)
}

fn pde_vs_inversion(traj: &SolutionTrajectory, probes: &[(f64, f64, f64)], a: &CompareArgs) -> ComparisonReport {
    let mut r = ComparisonReport::new(format!(
        "pde (dx = {}) vs inversion (euler) at {} probes: errors relative to the inverted peak",
        traj.dx,
        probes.len()
    ));
    let states = traj.final_states();
    for (c, name) in [(0usize, "pde_vs_inversion_p0"), (1, "pde_vs_inversion_p1")] {
        let pairs = probes.iter().map(|&(x, p0, p1)| (states[c].density_at(x), if c == 0 { p0 } else { p1 }));
        relative_entries(&mut r, name, errors(pairs), a.pde_tol);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use Method::*;

    #[test]
    fn planning() {
        assert_eq!(plan(&[ClosedForm, Pde]).unwrap(), vec![(ClosedForm, Pde)]);
        assert_eq!(plan(&[Pde, Inversion]).unwrap(), vec![(Pde, Inversion)]);
        assert_eq!(plan(&[Montecarlo, ClosedForm, Pde]).unwrap().len(), 2);
        assert!(plan(&[Pde]).is_err());
        assert!(plan(&[Pde, Pde]).is_err());
        assert!(plan(&[Pde, Montecarlo]).is_err());
        assert!(plan(&[Pde, Inversion, Montecarlo]).is_err());
        assert_eq!(plan(&[ClosedForm, Pde, Inversion, Montecarlo]).unwrap().len(), 4);
    }
}
