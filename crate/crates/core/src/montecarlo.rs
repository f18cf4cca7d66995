//! Trajectory simulation of the processing/repair process.
//!
//! A job is processed from age 0. Breakdown (hazard `λ`) sends the machine to
//! repair; completion (hazard `μ`) ends the run. A repair lasts a time with
//! hazard `η` and the job then restarts from age 0. At each query time the
//! state and the age in that state are recorded.
//!
//! Trajectory `i` draws from the ChaCha8 stream `i` of the master seed, and
//! all accumulators are integer counts, so any partition of the trajectory
//! range merges to the same estimate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_form::SpectralData;
use crate::convention::MassConvention;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::rate::RateFunction;
use crate::report::{BinCheck, ComparisonReport, Metric, ReportEntry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_traj: u64,
    pub seed: u64,
    /// Histogram range `[0, horizon]`; query times may not exceed it.
    pub horizon: f64,
    pub bins: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj < 1 {
            return Err(Error::Config("n_traj must be at least 1".into()));
        }
        if self.bins < 1 {
            return Err(Error::Config("bins must be at least 1".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        self.horizon / self.bins as f64
    }
}

/// Uniform draw in `(0, 1]` from the top 53 bits.
pub fn uniform_open0(rng: &mut impl RngCore) -> f64 {
    1.0 - (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Age at which the cumulative hazard `R` first reaches `target`, searched in
/// `[0, limit]`. `None` if `R(limit) < target`.
fn invert_cumulative(cum: impl Fn(f64) -> f64, target: f64, limit: f64) -> Option<f64> {
    if cum(limit) < target {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0_f64.min(limit));
    while cum(hi) < target {
        lo = hi;
        hi = (2.0 * hi).min(limit);
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if cum(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

fn draw_single(rate: &RateFunction, target: f64, limit: f64) -> Option<f64> {
    let x = match rate {
        RateFunction::Constant(r) => {
            if *r <= 0.0 {
                return None;
            }
            target / r
        }
        RateFunction::Weibull { shape, scale } => scale * target.powf(1.0 / shape),
        RateFunction::PiecewiseLinear(_) => return invert_cumulative(|x| rate.cumulative_unchecked(x), target, limit),
    };
    (x <= limit).then_some(x)
}

fn draw_pair(a: &RateFunction, b: &RateFunction, target: f64, limit: f64) -> Option<f64> {
    match (a.as_constant(), b.as_constant()) {
        (Some(0.0), _) => draw_single(b, target, limit),
        (_, Some(0.0)) => draw_single(a, target, limit),
        (Some(x), Some(y)) => {
            let t = target / (x + y);
            (t <= limit).then_some(t)
        }
        _ => invert_cumulative(|x| a.cumulative_unchecked(x) + b.cumulative_unchecked(x), target, limit),
    }
}

/// Draws `X` with `P(X > x) = e^{-R(x)}`.
pub fn sample_event_time(rate: &RateFunction, rng: &mut impl RngCore) -> Result<f64> {
    let target = -uniform_open0(rng).ln();
    if let Some(x) = draw_single(rate, target, f64::MAX) {
        return Ok(x);
    }
    Err(Error::Sampling {
        bound: rate.cumulative_unchecked(f64::MAX),
        target,
    })
}

/// Integer accumulators over a set of trajectories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimCounts {
    pub n: u64,
    pub processing: Vec<u64>,
    pub repair: Vec<u64>,
    pub done: Vec<u64>,
    /// Processing without any event since time 0 (age equals `t`).
    pub never_interrupted: Vec<u64>,
    /// `[query][bin]` age counts of processing, excluding never-interrupted runs.
    pub hist_processing: Vec<Vec<u64>>,
    pub hist_repair: Vec<Vec<u64>>,
}

impl SimCounts {
    pub fn zeros(queries: usize, bins: usize) -> Self {
        SimCounts {
            n: 0,
            processing: vec![0; queries],
            repair: vec![0; queries],
            done: vec![0; queries],
            never_interrupted: vec![0; queries],
            hist_processing: vec![vec![0; bins]; queries],
            hist_repair: vec![vec![0; bins]; queries],
        }
    }

    pub fn merge(&mut self, other: &SimCounts) {
        fn add(a: &mut [u64], b: &[u64]) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.n += other.n;
        add(&mut self.processing, &other.processing);
        add(&mut self.repair, &other.repair);
        add(&mut self.done, &other.done);
        add(&mut self.never_interrupted, &other.never_interrupted);
        for (a, b) in self.hist_processing.iter_mut().zip(&other.hist_processing) {
            add(a, b);
        }
        for (a, b) in self.hist_repair.iter_mut().zip(&other.hist_repair) {
            add(a, b);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Processing,
    Repair,
    Done,
}

struct Rates<'a> {
    lambda: &'a RateFunction,
    mu: &'a RateFunction,
    eta: &'a RateFunction,
}

fn check_inputs(cfg: &SimConfig, times: &[f64]) -> Result<()> {
    cfg.validate()?;
    for &t in times {
        if !(t >= 0.0 && t <= cfg.horizon) {
            return Err(Error::Domain(format!("query time {t} outside [0, {}]", cfg.horizon)));
        }
    }
    Ok(())
}

/// Runs trajectories `range` and returns their counts.
pub fn simulate_counts(
    lambda: &RateFunction,
    mu: &RateFunction,
    eta: &RateFunction,
    cfg: &SimConfig,
    times: &[f64],
    range: Range<u64>,
) -> Result<SimCounts> {
    check_inputs(cfg, times)?;
    let rates = Rates { lambda, mu, eta };
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let width = cfg.bin_width();
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut counts = SimCounts::zeros(times.len(), cfg.bins);
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    for traj in range {
        let mut rng = base.clone();
        rng.set_stream(traj);
        run_one(&rates, &mut rng, times, &order, t_end, width, cfg.bins, &mut counts);
        counts.n += 1;
    }
    Ok(counts)
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    rates: &Rates,
    rng: &mut ChaCha8Rng,
    times: &[f64],
    order: &[usize],
    t_end: f64,
    width: f64,
    bins: usize,
    counts: &mut SimCounts,
) {
    let mut phase = Phase::Processing;
    let mut start = 0.0;
    let mut q = 0;
    while q < order.len() {
        // sojourn [start, end) in `phase`
        let (end, next) = match phase {
            Phase::Done => (f64::INFINITY, Phase::Done),
            Phase::Processing => {
                let target = -uniform_open0(rng).ln();
                match draw_pair(rates.lambda, rates.mu, target, t_end - start) {
                    None => (f64::INFINITY, Phase::Processing),
                    Some(age) => {
                        let l = rates.lambda.hazard_unchecked(age);
                        let m = rates.mu.hazard_unchecked(age);
                        let u = uniform_open0(rng);
                        let breakdown = if l + m > 0.0 { u <= l / (l + m) } else { l > 0.0 };
                        (start + age, if breakdown { Phase::Repair } else { Phase::Done })
                    }
                }
            }
            Phase::Repair => {
                let target = -uniform_open0(rng).ln();
                match draw_single(rates.eta, target, t_end - start) {
                    None => (f64::INFINITY, Phase::Repair),
                    Some(age) => (start + age, Phase::Processing),
                }
            }
        };
        while q < order.len() && times[order[q]] < end {
            let qi = order[q];
            let age = times[qi] - start;
            let bin = ((age / width) as usize).min(bins - 1);
            match phase {
                Phase::Processing => {
                    counts.processing[qi] += 1;
                    if start == 0.0 {
                        counts.never_interrupted[qi] += 1;
                    } else {
                        counts.hist_processing[qi][bin] += 1;
                    }
                }
                Phase::Repair => {
                    counts.repair[qi] += 1;
                    counts.hist_repair[qi][bin] += 1;
                }
                Phase::Done => counts.done[qi] += 1,
            }
            q += 1;
        }
        phase = next;
        start = end;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Binomial standard error `sqrt(p(1−p)/n)` (scaled by the bin width for densities).
    pub se: f64,
}

impl Estimate {
    fn proportion(count: u64, n: u64) -> Self {
        let p = count as f64 / n as f64;
        Estimate {
            value: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// Density estimate per bin; bin `k` covers `[k·w, (k+1)·w)`.
    pub density: Vec<Estimate>,
}

impl Histogram {
    fn from_counts(counts: &[u64], n: u64, width: f64) -> Self {
        let density = counts
            .iter()
            .map(|&c| {
                let e = Estimate::proportion(c, n);
                Estimate {
                    value: e.value / width,
                    se: e.se / width,
                }
            })
            .collect();
        Histogram { bin_width: width, density }
    }

    pub fn total(&self) -> f64 {
        self.density.iter().map(|e| e.value * self.bin_width).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub config: SimConfig,
    pub times: Vec<f64>,
    pub p0: Vec<Estimate>,
    pub p1: Vec<Estimate>,
    pub p_done: Vec<Estimate>,
    pub never_interrupted: Vec<Estimate>,
    pub hist_p0: Vec<Histogram>,
    pub hist_p1: Vec<Histogram>,
    pub counts: SimCounts,
    /// Fewer than two trajectories: standard errors are meaningless.
    pub insufficient_data: bool,
}

impl SimEstimate {
    pub fn from_counts(cfg: &SimConfig, times: &[f64], counts: SimCounts) -> Self {
        let n = counts.n.max(1);
        let w = cfg.bin_width();
        let prop = |v: &[u64]| v.iter().map(|&c| Estimate::proportion(c, n)).collect();
        SimEstimate {
            config: *cfg,
            times: times.to_vec(),
            p0: prop(&counts.processing),
            p1: prop(&counts.repair),
            p_done: prop(&counts.done),
            never_interrupted: prop(&counts.never_interrupted),
            hist_p0: counts.hist_processing.iter().map(|h| Histogram::from_counts(h, n, w)).collect(),
            hist_p1: counts.hist_repair.iter().map(|h| Histogram::from_counts(h, n, w)).collect(),
            insufficient_data: counts.n < 2,
            counts,
        }
    }
}

/// Serial simulation of all `cfg.n_traj` trajectories.
pub fn simulate(lambda: &RateFunction, mu: &RateFunction, eta: &RateFunction, cfg: &SimConfig, times: &[f64]) -> Result<SimEstimate> {
    let counts = simulate_counts(lambda, mu, eta, cfg, times, 0..cfg.n_traj)?;
    Ok(SimEstimate::from_counts(cfg, times, counts))
}

fn z_score(estimate: f64, expected: f64, se: f64) -> f64 {
    let d = (estimate - expected).abs();
    if d == 0.0 {
        0.0
    } else if se > 0.0 {
        d / se
    } else {
        f64::INFINITY
    }
}

/// z-scores of the simulated state probabilities, never-interrupted fraction
/// and age histograms at query time `t` against the probabilistic closed form.
///
/// Standard errors come from the expected probabilities, so bins the exact
/// solution leaves empty only fail when the simulation puts mass there.
pub fn compare_to_closed_form(estimate: &SimEstimate, sd: &SpectralData, t: f64) -> Result<ComparisonReport> {
    let qi = estimate
        .times
        .iter()
        .position(|&s| s == t)
        .ok_or_else(|| Error::InvalidParameter(format!("t = {t} is not a query time of the estimate")))?;
    let sd = sd.with_convention(MassConvention::Probabilistic);
    let n = estimate.counts.n as f64;
    let mut report = ComparisonReport::new(format!(
        "monte carlo (n = {}, seed = {}) vs closed form, lambda = {}, mu = {}, eta = {}, t = {t}",
        estimate.counts.n, estimate.config.seed, sd.lambda, sd.mu, sd.eta
    ));
    if estimate.insufficient_data {
        report.insufficient_data = true;
        report.flag("fewer than two trajectories; no z-scores computed");
        return Ok(report);
    }
    let se_of = |p: f64| (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / n).sqrt();
    let p0 = sd.boundary_transform_p0(t)?;
    let p1 = sd.boundary_transform_p1(t)?;
    let atom = sd.atom_mass(t);
    for (name, est, expected) in [
        ("P0", estimate.p0[qi].value, p0),
        ("P1", estimate.p1[qi].value, p1),
        ("Pdone", estimate.p_done[qi].value, 1.0 - p0 - p1),
        ("never_interrupted", estimate.never_interrupted[qi].value, atom),
    ] {
        let z = z_score(est, expected, se_of(expected));
        report.push(ReportEntry::with_error(name, est, expected, z, Metric::ZScore, 3.0));
    }

    let w = estimate.config.bin_width();
    let opts = QuadOptions::default();
    let mut within = 0usize;
    let mut total = 0usize;
    for (state, hist) in [("p0", &estimate.hist_p0[qi]), ("p1", &estimate.hist_p1[qi])] {
        for (k, e) in hist.density.iter().enumerate() {
            let (lo, hi) = (k as f64 * w, (k + 1) as f64 * w);
            let top = hi.min(t);
            let prob = if top > lo {
                integrate(
                    |x| {
                        if state == "p0" {
                            sd.eval_p0(x, t).map_or(0.0, |p| p.density)
                        } else {
                            sd.eval_p1(x, t).map_or(0.0, |p| p.density)
                        }
                    },
                    lo,
                    top,
                    &opts,
                )?
            } else {
                0.0
            };
            let z = z_score(e.value * w, prob, se_of(prob));
            total += 1;
            if z <= 3.0 {
                within += 1;
            }
            report.bins.push(BinCheck {
                state: state.into(),
                lower: lo,
                upper: hi,
                estimate: e.value,
                expected: prob / w,
                z,
            });
        }
    }
    let fraction = within as f64 / total as f64;
    report.push(ReportEntry::with_error("bins_within_3sigma", fraction, 0.99, fraction, Metric::MinFraction, 0.99));
    Ok(report)
}
