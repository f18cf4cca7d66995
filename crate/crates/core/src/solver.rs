//! Characteristics solver for any [`TransportModel`].
//!
//! The grid spacing equals the time step, so each step moves the density
//! exactly one cell along its characteristic and only the source term needs
//! integrating. Node `k` carries the mass `dx·p(x_k)`. Along a cell the
//! diagonal decay is exact, and the decayed mass is handed to the in-line
//! targets and to the boundary node in proportion to the cell-averaged
//! rates, so columns without a balance gap conserve mass to rounding. The
//! injected delta travels as an atom vector on `x = t` and is updated the
//! same way; its boundary outflow lands in the first cell.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::convention::MassConvention;
use crate::error::{Error, Result};
use crate::model::{sample_points, validate_model, ColumnGap, TransportModel};
use crate::state::{Atom, Grid, MeasureState, NEGATIVITY_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Grid spacing and time step.
    pub dx: f64,
    pub t_final: f64,
    /// Far end of the age grid; defaults to `max(4·T, 20)`.
    pub x_max: Option<f64>,
    pub convention: MassConvention,
    /// Keep a snapshot every this many steps; 0 picks about 200 snapshots.
    /// The initial and final states are always kept.
    pub snapshot_every: usize,
}

impl SolverConfig {
    pub fn new(t_final: f64) -> Self {
        SolverConfig {
            dx: 1.0 / 256.0,
            t_final,
            x_max: None,
            convention: MassConvention::default(),
            snapshot_every: 0,
        }
    }

    pub fn with_dx(mut self, dx: f64) -> Self {
        self.dx = dx;
        self
    }

    pub fn with_convention(mut self, convention: MassConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn x_max(&self) -> f64 {
        self.x_max.unwrap_or_else(|| (4.0 * self.t_final).max(20.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::Config(format!("dx must be positive, got {}", self.dx)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!("T must be positive, got {}", self.t_final)));
        }
        if !(self.x_max() >= self.t_final) {
            return Err(Error::Config(format!(
                "x_max = {} must be at least T = {} so atoms stay in the domain",
                self.x_max(),
                self.t_final
            )));
        }
        Ok(())
    }
}

/// Diagnostics recorded after every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub total_mass: f64,
    /// Per column: `∫ gap_j(x) p_j(x) dx` plus the atom term. Positive values
    /// leave the system, negative values are created by the equations.
    pub absorbed_rate: Vec<f64>,
    /// Mass that has crossed `x_max` so far.
    pub cut_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTrajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `states[time][component]`.
    pub states: Vec<Vec<MeasureState>>,
    /// One record per step including `t = 0`; empty for trajectories built
    /// with [`SolutionTrajectory::from_states`].
    pub steps: Vec<StepRecord>,
    pub dx: f64,
}

impl SolutionTrajectory {
    /// Wraps externally computed states (for example an exact solution) so
    /// the diagnostics below can be applied to them.
    pub fn from_states(names: Vec<String>, times: Vec<f64>, states: Vec<Vec<MeasureState>>) -> Result<Self> {
        if times.len() != states.len() || states.iter().any(|s| s.len() != names.len()) {
            return Err(Error::Shape("times, states and names disagree in length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("times must be strictly increasing".into()));
        }
        Ok(SolutionTrajectory {
            names,
            times,
            states,
            steps: Vec::new(),
            dx: 0.0,
        })
    }

    pub fn final_states(&self) -> &[MeasureState] {
        self.states.last().map_or(&[], |s| s.as_slice())
    }

    /// Total mass of each component at snapshot `i`.
    pub fn component_masses(&self, i: usize) -> Vec<f64> {
        self.states[i].iter().map(MeasureState::total_mass).collect()
    }
}

struct Tables {
    // exp(∫ M_ii) over cell k = [x_{k-1}, x_k], k >= 1
    decay: Vec<Vec<f64>>,
    // (1 - decay) / (mean exit rate over the cell): the time a unit of mass
    // spends in the cell, weighted by its survival
    phi: Vec<Vec<f64>>,
    // cell averages of the in-line rates and of the boundary kernel
    offdiag: Vec<(usize, usize, Vec<f64>)>,
    kernel: Vec<(usize, usize, Vec<f64>)>,
    // column gaps at the nodes
    gap: Vec<Vec<f64>>,
}

impl Tables {
    fn new(model: &TransportModel, dx: f64, g: usize) -> Result<Self> {
        let n = model.n();
        let xs: Vec<f64> = (0..=g).map(|k| k as f64 * dx).collect();
        let cell_mean = |e: &crate::model::Entry| -> Vec<f64> {
            let integral: Vec<f64> = xs.iter().map(|&x| e.integral(x)).collect();
            let mut v = vec![0.0; g + 1];
            for k in 1..=g {
                v[k] = (integral[k] - integral[k - 1]) / dx;
            }
            v
        };
        let mut decay = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n);
        for i in 0..n {
            let rate = cell_mean(&model.generator()[i][i]);
            let mut d = vec![1.0; g + 1];
            let mut f = vec![dx; g + 1];
            for k in 1..=g {
                let lost = -rate[k] * dx;
                d[k] = (-lost).exp();
                f[k] = if lost.abs() > 1e-8 {
                    dx * -(-lost).exp_m1() / lost
                } else {
                    dx * (1.0 - 0.5 * lost)
                };
            }
            decay.push(d);
            phi.push(f);
        }
        let mut offdiag = Vec::new();
        let mut kernel = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && !model.generator()[i][j].is_zero() {
                    offdiag.push((i, j, cell_mean(&model.generator()[i][j])));
                }
                if !model.boundary_kernel()[i][j].is_zero() {
                    kernel.push((i, j, cell_mean(&model.boundary_kernel()[i][j])));
                }
            }
        }
        let gap = (0..n).map(|j| xs.iter().map(|&x| model.column_gap(j, x)).collect()).collect();
        let tables = Tables {
            decay,
            phi,
            offdiag,
            kernel,
            gap,
        };
        let finite = tables.decay.iter().chain(tables.gap.iter()).all(|v| v.iter().all(|x| x.is_finite()))
            && tables.offdiag.iter().chain(tables.kernel.iter()).all(|(_, _, v)| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::Config("model rates are not finite on the grid".into()));
        }
        Ok(tables)
    }
}

/// Integrates `model` from `t = 0` to `T` (rounded to a whole number of steps).
pub fn solve(model: &TransportModel, cfg: &SolverConfig) -> Result<SolutionTrajectory> {
    cfg.validate()?;
    let report = validate_model(model, &sample_points(32, cfg.x_max()));
    if let Some(f) = report.first_failure() {
        return Err(Error::InvalidModel { check: f.name.clone() });
    }
    let n = model.n();
    let dx = cfg.dx;
    let steps = ((cfg.t_final / dx).round() as usize).max(1);
    let g = (cfg.x_max() / dx).round() as usize;
    if g < steps {
        return Err(Error::DomainCut {
            x_max: g as f64 * dx,
            t: steps as f64 * dx,
        });
    }
    let tables = Tables::new(model, dx, g)?;
    let scale = cfg.convention.scale();

    let mut dens: Vec<Vec<f64>> = vec![vec![0.0; g + 1]; n];
    let mut active = 0usize;
    for (i, p) in model.smooth_initial().iter().enumerate() {
        if let Some(p) = p {
            for (k, d) in dens[i].iter_mut().enumerate() {
                let v = p.value(k as f64 * dx);
                *d = v;
                if v != 0.0 {
                    active = active.max(k);
                }
            }
        }
    }
    let mut atoms: Vec<f64> = (0..n)
        .map(|i| scale * (model.delta_boundary()[i] + model.delta_initial()[i]))
        .collect();

    let every = if cfg.snapshot_every == 0 {
        steps.div_ceil(200).max(1)
    } else {
        cfg.snapshot_every
    };
    let mut traj = SolutionTrajectory {
        names: model.names().to_vec(),
        times: Vec::new(),
        states: Vec::new(),
        steps: Vec::with_capacity(steps + 1),
        dx,
    };
    let mut cut_mass = 0.0;
    traj.steps.push(record(&tables, &dens, &atoms, 0, active, dx, 0.0, cut_mass));
    snapshot(&mut traj, &dens, &atoms, 0, active, dx)?;

    let mut next = vec![vec![0.0; g + 1]; n];
    let mut next_atoms = vec![0.0; n];
    for step in 0..steps {
        let hi = (active + 1).min(g);
        if active == g {
            for d in dens.iter() {
                cut_mass += dx * d[g];
            }
        }

        // each node moves one cell and loses mass to decay; the decayed
        // mass is handed to in-line targets and the boundary in proportion
        // to their cell-averaged rates
        for i in 0..n {
            let (src, dst) = (&dens[i], &mut next[i]);
            let dec = &tables.decay[i];
            dst[0] = 0.0;
            for k in 1..=hi {
                dst[k] = dec[k] * src[k - 1];
            }
            for v in dst[hi + 1..].iter_mut() {
                *v = 0.0;
            }
            next_atoms[i] = dec[step + 1] * atoms[i];
        }
        for (i, j, vals) in &tables.offdiag {
            let phi = &tables.phi[*j];
            let (src, dst) = (&dens[*j], &mut next[*i]);
            for k in 1..=hi {
                dst[k] += phi[k] * vals[k] * src[k - 1];
            }
            next_atoms[*i] += phi[step + 1] * vals[step + 1] * atoms[*j];
        }
        for (i, j, vals) in &tables.kernel {
            let phi = &tables.phi[*j];
            let src = &dens[*j];
            let mut acc = 0.0;
            for k in 1..=hi {
                acc += phi[k] * vals[k] * src[k - 1];
            }
            next[*i][0] += acc + phi[step + 1] * vals[step + 1] * atoms[*j] / dx;
        }

        let t = (step + 1) as f64 * dx;
        for i in 0..n {
            for (k, &v) in next[i][..=hi].iter().enumerate() {
                if !(v >= -NEGATIVITY_TOLERANCE) {
                    return Err(Error::Instability {
                        component: i,
                        x: k as f64 * dx,
                        t,
                        value: v,
                    });
                }
            }
            if !(next_atoms[i] >= -NEGATIVITY_TOLERANCE) {
                return Err(Error::Instability {
                    component: i,
                    x: t,
                    t,
                    value: next_atoms[i],
                });
            }
        }

        core::mem::swap(&mut dens, &mut next);
        core::mem::swap(&mut atoms, &mut next_atoms);
        active = hi;
        traj.steps.push(record(&tables, &dens, &atoms, step + 1, active, dx, t, cut_mass));
        if (step + 1) % every == 0 || step + 1 == steps {
            snapshot(&mut traj, &dens, &atoms, step + 1, active, dx)?;
        }
    }
    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
fn record(tables: &Tables, dens: &[Vec<f64>], atoms: &[f64], step: usize, active: usize, dx: f64, t: f64, cut_mass: f64) -> StepRecord {
    let mut total = 0.0;
    let mut absorbed = Vec::with_capacity(dens.len());
    for (j, d) in dens.iter().enumerate() {
        let gap = &tables.gap[j];
        let mut rate = gap[step] * atoms[j];
        total += atoms[j];
        for k in 0..=active {
            total += dx * d[k];
            rate += dx * gap[k] * d[k];
        }
        absorbed.push(rate);
    }
    StepRecord {
        t,
        total_mass: total,
        absorbed_rate: absorbed,
        cut_mass,
    }
}

fn snapshot(traj: &mut SolutionTrajectory, dens: &[Vec<f64>], atoms: &[f64], step: usize, active: usize, dx: f64) -> Result<()> {
    let t = step as f64 * dx;
    let len = active.max(step) + 1;
    let states = dens
        .iter()
        .zip(atoms)
        .map(|(d, &m)| {
            let atoms = if m > 0.0 { vec![Atom { location: t, mass: m }] } else { Vec::new() };
            // tiny negative rounding is clamped; anything larger was rejected above
            let density = d[..len].iter().map(|v| v.max(0.0)).collect();
            MeasureState::new(Grid::Uniform { dx, len }, density, atoms)
        })
        .collect::<Result<Vec<_>>>()?;
    traj.times.push(t);
    traj.states.push(states);
    Ok(())
}

/// Largest PDE residual `|∂ₜp + ∂ₓp − M(x)p|` over all components at the probes.
///
/// Each probe `(x, t)` needs snapshots at `t` and on both sides of it. The
/// derivatives are centered differences with the local grid and snapshot
/// spacings.
pub fn residual_check(traj: &SolutionTrajectory, model: &TransportModel, probes: &[(f64, f64)]) -> Result<f64> {
    let n = model.n();
    let mut worst: f64 = 0.0;
    for &(x, t) in probes {
        let Some(ti) = traj.times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0)) else {
            return Err(Error::InvalidParameter(format!("no snapshot at t = {t}")));
        };
        if ti == 0 || ti + 1 >= traj.times.len() {
            return Err(Error::InvalidParameter(format!("t = {t} needs snapshots on both sides")));
        }
        let (tm, tp) = (traj.times[ti - 1], traj.times[ti + 1]);
        let now = &traj.states[ti];
        let grid = now[0].grid();
        let k = grid
            .index_of(x)
            .ok_or_else(|| Error::InvalidParameter(format!("x = {x} is not a grid node at t = {t}")))?;
        if k == 0 || k + 1 >= grid.len() {
            return Err(Error::InvalidParameter(format!("x = {x} needs grid nodes on both sides")));
        }
        let (xm, xp) = (grid.x(k - 1), grid.x(k + 1));
        let h = (xp - xm).max(tp - tm);
        let fronts = now.iter().flat_map(|s| s.atoms().iter().map(|a| a.location)).chain(core::iter::once(t));
        for loc in fronts {
            if (x - loc).abs() < h {
                return Err(Error::Probe { x, t, min_distance: h });
            }
        }
        for i in 0..n {
            let dt = (traj.states[ti + 1][i].density_at(x) - traj.states[ti - 1][i].density_at(x)) / (tp - tm);
            let ddx = (now[i].density_at(xp) - now[i].density_at(xm)) / (xp - xm);
            let mut source = 0.0;
            for (entry, state) in model.generator()[i].iter().zip(now) {
                source += entry.value(x) * state.density_at(x);
            }
            worst = worst.max((dt + ddx - source).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub t: f64,
    pub total_mass: f64,
    /// Net rate at which mass leaves (negative: is created).
    pub absorbed_rate: f64,
    pub cumulative_absorbed: f64,
    pub cumulative_cut: f64,
    /// `total + absorbed + cut − injected`; zero for an exact ledger.
    pub closure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassLedger {
    pub injected: f64,
    pub entries: Vec<LedgerEntry>,
    /// Columns with a nonzero balance gap, as found by validation.
    pub channels: Vec<ColumnGap>,
    /// `max |closure| / max(injected, max total mass)`.
    pub relative_closure: f64,
}

/// Mass bookkeeping: total mass against the time integral of the absorption
/// channels. Uses the per-step records of a solver run, or the snapshots for
/// trajectories built from external states.
pub fn mass_balance(traj: &SolutionTrajectory, model: &TransportModel) -> MassLedger {
    let records: Vec<StepRecord> = if traj.steps.is_empty() {
        traj.states
            .iter()
            .zip(&traj.times)
            .map(|(states, &t)| snapshot_record(model, states, t))
            .collect()
    } else {
        traj.steps.clone()
    };
    let injected = records.first().map_or(0.0, |r| r.total_mass);
    let mut entries = Vec::with_capacity(records.len());
    let mut cumulative = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    let mut worst: f64 = 0.0;
    let mut peak = injected;
    for r in &records {
        let rate: f64 = r.absorbed_rate.iter().sum();
        if let Some((t0, r0)) = prev {
            cumulative += 0.5 * (rate + r0) * (r.t - t0);
        }
        prev = Some((r.t, rate));
        let closure = r.total_mass + cumulative + r.cut_mass - injected;
        worst = worst.max(closure.abs());
        peak = peak.max(r.total_mass);
        entries.push(LedgerEntry {
            t: r.t,
            total_mass: r.total_mass,
            absorbed_rate: rate,
            cumulative_absorbed: cumulative,
            cumulative_cut: r.cut_mass,
            closure,
        });
    }
    let channels = validate_model(model, &sample_points(32, traj.times.last().copied().unwrap_or(1.0).max(1.0)))
        .column_gaps
        .into_iter()
        .filter(|g| g.min_gap != 0.0 || g.max_gap != 0.0)
        .collect();
    MassLedger {
        injected,
        entries,
        channels,
        relative_closure: if peak > 0.0 { worst / peak } else { 0.0 },
    }
}

fn snapshot_record(model: &TransportModel, states: &[MeasureState], t: f64) -> StepRecord {
    let mut total = 0.0;
    let mut absorbed = Vec::with_capacity(states.len());
    for (j, s) in states.iter().enumerate() {
        total += s.total_mass();
        let g = s.grid();
        let mut rate: f64 = s.atoms().iter().map(|a| model.column_gap(j, a.location) * a.mass).sum();
        for (k, v) in s.density().iter().enumerate() {
            rate += g.weight(k) * model.column_gap(j, g.x(k)) * v;
        }
        absorbed.push(rate);
    }
    StepRecord {
        t,
        total_mass: total,
        absorbed_rate: absorbed,
        cut_mass: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LiCaoRates;
    use crate::registry::licao_model;

    #[test]
    fn config_checks() {
        assert!(SolverConfig::new(1.0).validate().is_ok());
        assert!(SolverConfig::new(0.0).validate().is_err());
        let mut c = SolverConfig::new(30.0);
        c.x_max = Some(10.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn atoms_advance_one_cell_per_step() {
        let m = licao_model(&LiCaoRates::constant(0.5, 0.5, 1.0).unwrap());
        let cfg = SolverConfig::new(1.0).with_dx(1.0 / 16.0).with_snapshot_every(1);
        let traj = solve(&m, &cfg).unwrap();
        assert_eq!(traj.times.len(), 17);
        for (t, states) in traj.times.iter().zip(&traj.states) {
            assert_eq!(states[0].atoms()[0].location, *t);
        }
    }

    #[test]
    fn zero_trajectory_has_zero_residual() {
        let m = licao_model(&LiCaoRates::constant(1.0, 1.0, 1.0).unwrap());
        let g = Grid::uniform(0.1, 30).unwrap();
        let z = || vec![MeasureState::zero(g.clone()), MeasureState::zero(g.clone())];
        let traj = SolutionTrajectory::from_states(m.names().to_vec(), vec![0.9, 1.0, 1.1], vec![z(), z(), z()]).unwrap();
        assert_eq!(residual_check(&traj, &m, &[(0.5, 1.0), (2.0, 1.0)]).unwrap(), 0.0);
        assert!(matches!(residual_check(&traj, &m, &[(1.0, 1.0)]), Err(Error::Probe { .. })));
    }
}
