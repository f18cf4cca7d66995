//! Subcommand bodies. Each writes its files into the [`OutputDir`] and
//! leaves the manifest to the caller.

use serde::Serialize;
use svtk_core::closed_form::SpectralData;
use svtk_core::invert::{self, InversionConfig, InversionMethod};
use svtk_core::montecarlo::SimConfig;
use svtk_core::registry::{self, MODEL_NAMES};
use svtk_core::solver::{mass_balance, solve, SolverConfig};
use svtk_core::transform::{self, TransformConfig};
use svtk_core::{Error as CoreError, LiCaoRates};

use crate::cli::{Command, EvalArgs, ExportArgs, InvertArgs, InvertMethod, RunStatus, SimulateArgs, SolveArgs, TransformArgs};
use crate::compare;
use crate::error::{CliError, Result};
use crate::io::{CsvRow, OutputDir};
use crate::parallel;
use crate::parse;

pub fn run(command: &Command, out: &mut OutputDir) -> Result<RunStatus> {
    match command {
        Command::Eval(a) => eval(a, out),
        Command::Transform(a) => transform(a, out),
        Command::Invert(a) => invert(a, out),
        Command::Solve(a) => solve_cmd(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Compare(a) => compare::run(a, out),
        Command::ListModels => list_models(out),
        Command::Export(a) => export(a, out),
        Command::Replay(_) => Err(CliError::Usage("replay is handled by the dispatcher".into())),
    }
}

fn usage(e: String) -> CliError {
    CliError::Usage(e)
}

fn report_written(out: &OutputDir) {
    for p in out.written() {
        println!("wrote {}", p.display());
    }
}

#[derive(Serialize)]
pub struct EvalRow {
    pub x: f64,
    pub t: f64,
    pub p0_density: f64,
    pub p0_atom: f64,
    pub p1_density: f64,
}

impl CsvRow for EvalRow {
    const HEADER: &'static [&'static str] = &["x", "t", "p0_density", "p0_atom", "p1_density"];
}

#[derive(Serialize)]
pub struct EvalMassRow {
    pub t: f64,
    pub p0_mass: f64,
    pub p1_mass: f64,
    pub atom_mass: f64,
}

impl CsvRow for EvalMassRow {
    const HEADER: &'static [&'static str] = &["t", "p0_mass", "p1_mass", "atom_mass"];
}

fn eval(a: &EvalArgs, out: &mut OutputDir) -> Result<RunStatus> {
    let [l, m, e] = a.rates.ok_or_else(|| usage("--rates is required".into()))?;
    let sd = SpectralData::new(l, m, e, a.convention)?;
    let t_max = a.times.iter().copied().fold(0.0, f64::max);
    let xs = match &a.x_grid {
        Some(g) => parse::grid(g).map_err(usage)?,
        None => parse::grid(&format!("0:{t_max}:0.01")).map_err(usage)?,
    };
    let mut rows = Vec::with_capacity(xs.len() * a.times.len());
    let mut masses = Vec::new();
    for &t in &a.times {
        for &x in &xs {
            let p0 = sd.eval_p0(x, t)?;
            let p1 = sd.eval_p1(x, t)?;
            rows.push(EvalRow {
                x,
                t,
                p0_density: p0.density,
                p0_atom: p0.atom,
                p1_density: p1.density,
            });
        }
        masses.push(EvalMassRow {
            t,
            p0_mass: sd.boundary_transform_p0(t)?,
            p1_mass: sd.boundary_transform_p1(t)?,
            atom_mass: sd.atom_mass(t),
        });
    }
    out.write_csv("eval_fields.csv", rows)?;
    out.write_csv("eval_masses.csv", masses)?;
    report_written(out);
    Ok(RunStatus::default())
}

#[derive(Serialize)]
pub struct TransformRow {
    pub x: f64,
    pub s_re: f64,
    pub s_im: f64,
    pub p0_re: f64,
    pub p0_im: f64,
    pub p1_re: f64,
    pub p1_im: f64,
}

impl CsvRow for TransformRow {
    const HEADER: &'static [&'static str] = &["x", "s_re", "s_im", "p0_re", "p0_im", "p1_re", "p1_im"];
}

fn transform(a: &TransformArgs, out: &mut OutputDir) -> Result<RunStatus> {
    let rates = a.hazards.resolve()?;
    let tc = TransformConfig::with_convention(a.convention);
    let ss = a.s.iter().map(|s| parse::complex(s)).collect::<std::result::Result<Vec<_>, _>>().map_err(usage)?;
    let mut rows = Vec::new();
    for &x in &a.ages {
        for &s in &ss {
            let k = transform::Kernels::compute(s, &rates, &tc)?;
            let p0 = transform::hat_p0_parts_with(x, s, &rates, &tc, &k)?.assemble(x, s);
            let p1 = transform::hat_p1_parts_with(x, s, &rates, &tc, &k)?.assemble(x, s);
            rows.push(TransformRow {
                x,
                s_re: s.re,
                s_im: s.im,
                p0_re: p0.re,
                p0_im: p0.im,
                p1_re: p1.re,
                p1_im: p1.im,
            });
        }
    }
    out.write_csv("transform.csv", rows)?;
    report_written(out);
    Ok(RunStatus::default())
}

#[derive(Serialize)]
pub struct InvertRow {
    pub x: f64,
    pub t: f64,
    pub method: &'static str,
    /// `ok` or `excluded` (too close to the line `t = x`).
    pub status: &'static str,
    /// Atom of `p0(x, .)` when `t = x`, otherwise 0.
    pub p0_atom: f64,
    pub p0_density: Option<f64>,
    pub p1_density: Option<f64>,
}

impl CsvRow for InvertRow {
    const HEADER: &'static [&'static str] = &["x", "t", "method", "status", "p0_atom", "p0_density", "p1_density"];
}

fn invert(a: &InvertArgs, out: &mut OutputDir) -> Result<RunStatus> {
    let rates = a.hazards.resolve()?;
    let xs = parse::grid(&a.x_grid).map_err(usage)?;
    let tc = TransformConfig::with_convention(a.convention);
    let icfg = InversionConfig {
        method: InversionMethod::Euler,
        gs_terms: a.gs_terms,
        euler_m: a.euler_m,
        t_min_gap: a.min_gap,
    };
    icfg.validate()?;
    let methods: &[&'static str] = match a.method {
        InvertMethod::Euler => &["euler"],
        InvertMethod::Stehfest => &["stehfest"],
        InvertMethod::Both => &["euler", "stehfest"],
    };
    let mut rows = Vec::new();
    for &t in &a.times {
        for &x in &xs {
            let atom = if svtk_core::closed_form::on_characteristic(x, t) {
                invert::p0_atom(x, &rates, &tc)?.mass
            } else {
                0.0
            };
            let values = field_values(x, t, &rates, &tc, &icfg, a.method)?;
            for (i, name) in methods.iter().enumerate() {
                let v = values.map(|v| v[i]);
                rows.push(InvertRow {
                    x,
                    t,
                    method: name,
                    status: if v.is_some() { "ok" } else { "excluded" },
                    p0_atom: atom,
                    p0_density: v.map(|v| v.0),
                    p1_density: v.map(|v| v.1),
                });
            }
        }
    }
    out.write_csv("invert.csv", rows)?;
    report_written(out);
    Ok(RunStatus::default())
}

/// `(p0, p1)` densities per requested method, `None` inside the exclusion band.
fn field_values(
    x: f64,
    t: f64,
    rates: &LiCaoRates,
    tc: &TransformConfig,
    icfg: &InversionConfig,
    method: InvertMethod,
) -> Result<Option<[(f64, f64); 2]>> {
    let single = |m: InversionMethod| -> svtk_core::Result<(f64, f64)> {
        let cfg = InversionConfig { method: m, ..*icfg };
        Ok((invert::invert_p0(x, t, rates, tc, &cfg)?.density, invert::invert_p1(x, t, rates, tc, &cfg)?))
    };
    let r = match method {
        InvertMethod::Euler => single(InversionMethod::Euler).map(|v| [v, v]),
        InvertMethod::Stehfest => single(InversionMethod::GaverStehfest).map(|v| [v, v]),
        InvertMethod::Both => invert::invert_fields_both(x, t, rates, tc, icfg).map(|c| match c {
            Some(c) => [(c.p0.euler, c.p1.euler), (c.p0.stehfest, c.p1.stehfest)],
            None => [(0.0, 0.0); 2],
        }),
    };
    match r {
        Ok(v) => Ok(Some(v)),
        Err(CoreError::Exclusion { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
pub struct DensityRow<'a> {
    pub t: f64,
    pub component: &'a str,
    pub x: f64,
    pub density: f64,
}

impl CsvRow for DensityRow<'_> {
    const HEADER: &'static [&'static str] = &["t", "component", "x", "density"];
}

#[derive(Serialize)]
pub struct AtomRow<'a> {
    pub t: f64,
    pub component: &'a str,
    pub location: f64,
    pub mass: f64,
}

impl CsvRow for AtomRow<'_> {
    const HEADER: &'static [&'static str] = &["t", "component", "location", "mass"];
}

#[derive(Serialize)]
pub struct ComponentMassRow<'a> {
    pub t: f64,
    pub component: &'a str,
    pub smooth_mass: f64,
    pub atom_mass: f64,
}

impl CsvRow for ComponentMassRow<'_> {
    const HEADER: &'static [&'static str] = &["t", "component", "smooth_mass", "atom_mass"];
}

#[derive(Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub total_mass: f64,
    pub absorbed_rate: f64,
    pub cumulative_absorbed: f64,
    pub cumulative_cut: f64,
    pub closure: f64,
}

impl CsvRow for LedgerRow {
    const HEADER: &'static [&'static str] =
        &["t", "total_mass", "absorbed_rate", "cumulative_absorbed", "cumulative_cut", "closure"];
}

fn solve_cmd(a: &SolveArgs, out: &mut OutputDir) -> Result<RunStatus> {
    let model = parse::load_model(&a.model, &a.params)?;
    if a.snapshots == 0 {
        return Err(usage("--snapshots must be at least 1".into()));
    }
    if a.x_stride == Some(0) {
        return Err(usage("--x-stride must be at least 1".into()));
    }
    let mut cfg = SolverConfig::new(a.t_final).with_dx(a.dx).with_convention(a.convention);
    cfg.x_max = a.x_max;
    cfg.validate()?;
    let steps = (a.t_final / a.dx).ceil() as usize;
    cfg.snapshot_every = (steps / a.snapshots).max(1);
    let traj = solve(&model, &cfg)?;
    let ledger = mass_balance(&traj, &model);

    let nodes = traj.final_states().iter().map(|s| s.grid().len()).max().unwrap_or(1);
    let stride = a.x_stride.unwrap_or((nodes / 400).max(1));
    let names = &traj.names;
    let mut density = Vec::new();
    let mut atoms = Vec::new();
    let mut masses = Vec::new();
    for (&t, states) in traj.times.iter().zip(&traj.states) {
        for (name, s) in names.iter().zip(states) {
            let g = s.grid();
            for k in (0..g.len()).step_by(stride) {
                density.push(DensityRow {
                    t,
                    component: name,
                    x: g.x(k),
                    density: s.density()[k],
                });
            }
            for at in s.atoms() {
                atoms.push(AtomRow {
                    t,
                    component: name,
                    location: at.location,
                    mass: at.mass,
                });
            }
            masses.push(ComponentMassRow {
                t,
                component: name,
                smooth_mass: s.smooth_mass(),
                atom_mass: s.atom_mass(),
            });
        }
    }
    out.write_csv("solve_density.csv", density)?;
    out.write_csv("solve_atoms.csv", atoms)?;
    out.write_csv("solve_masses.csv", masses)?;
    out.write_csv(
        "solve_ledger.csv",
        ledger.entries.iter().map(|e| LedgerRow {
            t: e.t,
            total_mass: e.total_mass,
            absorbed_rate: e.absorbed_rate,
            cumulative_absorbed: e.cumulative_absorbed,
            cumulative_cut: e.cumulative_cut,
            closure: e.closure,
        }),
    )?;
    report_written(out);
    println!(
        "{} components, {} steps, mass ledger closes to {:.2e} of the injected mass",
        names.len(),
        traj.steps.len().saturating_sub(1),
        ledger.relative_closure
    );
    for c in &ledger.channels {
        println!("  channel {} ({:?}): gap in [{}, {}]", c.name, c.kind, c.min_gap, c.max_gap);
    }
    Ok(RunStatus::default())
}

#[derive(Serialize)]
pub struct ProbabilityRow {
    pub t: f64,
    pub p0: f64,
    pub p0_se: f64,
    pub p1: f64,
    pub p1_se: f64,
    pub p_done: f64,
    pub p_done_se: f64,
    pub never_interrupted: f64,
    pub never_interrupted_se: f64,
}

impl CsvRow for ProbabilityRow {
    const HEADER: &'static [&'static str] = &[
        "t",
        "p0",
        "p0_se",
        "p1",
        "p1_se",
        "p_done",
        "p_done_se",
        "never_interrupted",
        "never_interrupted_se",
    ];
}

#[derive(Serialize)]
pub struct HistogramRow {
    pub t: f64,
    pub state: &'static str,
    pub bin_lower: f64,
    pub bin_upper: f64,
    pub density: f64,
    pub density_se: f64,
}

impl CsvRow for HistogramRow {
    const HEADER: &'static [&'static str] = &["t", "state", "bin_lower", "bin_upper", "density", "density_se"];
}

fn simulate(a: &SimulateArgs, out: &mut OutputDir) -> Result<RunStatus> {
    let seed = a.seed.ok_or_else(|| usage("--seed is required".into()))?;
    let rates = a.hazards.resolve()?;
    let times = parse::grid(&a.t_grid).map_err(usage)?;
    let horizon = a.horizon.unwrap_or_else(|| times.iter().copied().fold(0.0, f64::max));
    let cfg = SimConfig {
        n_traj: a.n,
        seed,
        horizon,
        bins: a.bins,
    };
    let est = parallel::with_threads(a.threads, || parallel::simulate(&rates.lambda, &rates.mu, &rates.eta, &cfg, &times))
        .map_err(usage)??;
    let probs = (0..times.len()).map(|q| ProbabilityRow {
        t: times[q],
        p0: est.p0[q].value,
        p0_se: est.p0[q].se,
        p1: est.p1[q].value,
        p1_se: est.p1[q].se,
        p_done: est.p_done[q].value,
        p_done_se: est.p_done[q].se,
        never_interrupted: est.never_interrupted[q].value,
        never_interrupted_se: est.never_interrupted[q].se,
    });
    out.write_csv("simulate_probabilities.csv", probs)?;
    let mut hist = Vec::new();
    for (q, &t) in times.iter().enumerate() {
        for (state, h) in [("processing", &est.hist_p0[q]), ("repair", &est.hist_p1[q])] {
            for (k, d) in h.density.iter().enumerate() {
                hist.push(HistogramRow {
                    t,
                    state,
                    bin_lower: k as f64 * h.bin_width,
                    bin_upper: (k + 1) as f64 * h.bin_width,
                    density: d.value,
                    density_se: d.se,
                });
            }
        }
    }
    out.write_csv("simulate_histograms.csv", hist)?;
    report_written(out);
    if est.insufficient_data {
        println!("note: fewer than two trajectories; standard errors are meaningless");
    }
    Ok(RunStatus {
        seed: Some(seed),
        failure: None,
    })
}

#[derive(Serialize)]
pub struct ModelRow {
    pub model: &'static str,
    pub components: usize,
    pub parameter: &'static str,
    pub default: f64,
    pub integer: bool,
}

impl CsvRow for ModelRow {
    const HEADER: &'static [&'static str] = &["model", "components", "parameter", "default", "integer"];
}

fn list_models(out: &mut OutputDir) -> Result<RunStatus> {
    let mut rows = Vec::new();
    for name in MODEL_NAMES {
        let model = registry::lookup(name)?;
        let params = registry::parameters(name).unwrap_or_default();
        let list: Vec<String> = params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
        println!("{name:<8} {:>3} components  {}", model.n(), list.join(" "));
        for p in params {
            rows.push(ModelRow {
                model: name,
                components: model.n(),
                parameter: p.name,
                default: p.default,
                integer: p.integer,
            });
        }
    }
    out.write_csv("models.csv", rows)?;
    Ok(RunStatus::default())
}

fn export(a: &ExportArgs, out: &mut OutputDir) -> Result<RunStatus> {
    let model = parse::load_model(&a.model, &a.params)?;
    let stem = std::path::Path::new(&a.model)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    out.write_json(&format!("{stem}.model.json"), &model)?;
    report_written(out);
    Ok(RunStatus::default())
}
