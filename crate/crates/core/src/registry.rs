//! Builders for the named systems.
//!
//! Component orders are fixed; CSV output lists components in this order.
//!
//! | name     | n      | components |
//! |----------|--------|------------|
//! | `licao`  | 2      | processing, repair |
//! | `linton` | 2k + m | q0_1..q0_k, q1_1..q1_k, q2_1..q2_m |
//! | `su`     | K + 11 | p00_0..p00_K, p010, p100, p011, p101, p020, p200, p110, p111, p120, p210 |
//! | `yue1`   | 5      | Q0..Q4 |
//! | `yue2`   | 7      | P0..P6 |
//!
//! Systems with two supplementary variables do not fit the one-age frame and
//! are not provided.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Entry, LiCaoRates, Sign, Term, TransportModel};
use crate::rate::RateFunction;

struct Builder {
    names: Vec<String>,
    generator: Vec<Vec<Vec<Term>>>,
    kernel: Vec<Vec<Vec<Term>>>,
}

impl Builder {
    fn new(names: Vec<String>) -> Self {
        let n = names.len();
        Builder {
            names,
            generator: vec![vec![Vec::new(); n]; n],
            kernel: vec![vec![Vec::new(); n]; n],
        }
    }

    /// Exit hazard of component `j`.
    fn decay(&mut self, j: usize, rate: &RateFunction) -> &mut Self {
        self.generator[j][j].push(Term {
            sign: Sign::Minus,
            rate: rate.clone(),
        });
        self
    }

    /// In-line transfer `j → i` (age is kept).
    fn flow(&mut self, from: usize, to: usize, rate: &RateFunction) -> &mut Self {
        self.generator[to][from].push(Term {
            sign: Sign::Plus,
            rate: rate.clone(),
        });
        self
    }

    /// Boundary transfer `j → i` (age restarts at 0).
    fn renew(&mut self, from: usize, to: usize, rate: &RateFunction) -> &mut Self {
        self.kernel[to][from].push(Term {
            sign: Sign::Plus,
            rate: rate.clone(),
        });
        self
    }

    fn build(self, start: usize) -> TransportModel {
        let n = self.names.len();
        let mut e0 = vec![0.0; n];
        e0[start] = 1.0;
        let entries = |m: Vec<Vec<Vec<Term>>>| -> Vec<Vec<Entry>> {
            m.into_iter().map(|row| row.into_iter().map(Entry::from_terms).collect()).collect()
        };
        TransportModel::new(self.names, entries(self.generator), entries(self.kernel), e0.clone(), e0)
            .expect("builders produce square models")
    }
}

fn constant(v: f64, name: &str) -> Result<RateFunction> {
    RateFunction::constant(v).map_err(|_| Error::Domain(format!("{name} must be finite and >= 0, got {v}")))
}

/// Processing/repair model: breakdown `λ`, completion `μ`, repair `η`.
pub fn licao_model(rates: &LiCaoRates) -> TransportModel {
    let mut b = Builder::new(vec!["processing".into(), "repair".into()]);
    b.decay(0, &rates.lambda).decay(0, &rates.mu).decay(1, &rates.eta);
    b.renew(0, 1, &rates.lambda).renew(1, 0, &rates.eta);
    b.build(0)
}

/// Two-unit parallel redundant system with Erlang-`k` unit lifetimes
/// (stage rate `λ`), Erlang-`m` repair of the second kind (stage rate `μ`) and
/// age-dependent switching hazards `f`, `g`.
///
/// Transcribed term for term from the published equations. As printed, the
/// system has no exit term on `q0_1` and `q1_1` and no `f`/`g` exit hazards, so
/// several column gaps are negative: the equations create mass.
pub fn linton_model(lambda: f64, mu: f64, k: usize, m: usize, f: &RateFunction, g: &RateFunction) -> Result<TransportModel> {
    if k < 1 || m < 1 {
        return Err(Error::Domain(format!("linton needs k, m >= 1, got k = {k}, m = {m}")));
    }
    let lam = constant(lambda, "lambda")?;
    let mu = constant(mu, "mu")?;
    let q0 = |i: usize| i;
    let q1 = |i: usize| k + i;
    let q2 = |j: usize| 2 * k + j;
    let mut names = Vec::with_capacity(2 * k + m);
    names.extend((1..=k).map(|i| format!("q0_{i}")));
    names.extend((1..=k).map(|i| format!("q1_{i}")));
    names.extend((1..=m).map(|j| format!("q2_{j}")));
    let mut b = Builder::new(names);

    b.flow(q2(m - 1), q0(0), &mu);
    for i in 1..k {
        b.decay(q0(i), &lam).flow(q0(i - 1), q0(i), &lam);
        b.decay(q1(i), &lam).flow(q1(i - 1), q1(i), &lam);
    }
    b.decay(q2(0), &mu).flow(q0(k - 1), q2(0), &lam);
    for j in 1..m {
        b.decay(q2(j), &mu).flow(q2(j - 1), q2(j), &mu);
    }
    for i in 0..k {
        b.renew(q1(i), q0(i), g);
        b.renew(q0(i), q1(i), f);
    }
    Ok(b.build(q0(0)))
}

/// How the check-count chain `p00_k` is closed at `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuClosure {
    /// `p00_K` stands for "K or more checks": its own check outflow renews
    /// into itself. Exact for total mass whenever the rates do not depend on
    /// the check count.
    #[default]
    Lumped,
    /// The check outflow of `p00_K` leaves the system and shows up as an
    /// absorption channel.
    Leaky,
}

/// Failure rates of the two units by mode, all constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuFailureRates {
    pub l01: f64,
    pub l10: f64,
    pub l02: f64,
    pub l20: f64,
}

/// Repair hazards of the seven repair states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuRepairRates {
    pub mu01: RateFunction,
    pub mu10: RateFunction,
    pub mu02: RateFunction,
    pub mu20: RateFunction,
    pub mu11: RateFunction,
    pub mu12: RateFunction,
    pub mu21: RateFunction,
}

impl SuRepairRates {
    pub fn uniform(rate: RateFunction) -> Self {
        SuRepairRates {
            mu01: rate.clone(),
            mu10: rate.clone(),
            mu02: rate.clone(),
            mu20: rate.clone(),
            mu11: rate.clone(),
            mu12: rate.clone(),
            mu21: rate,
        }
    }
}

/// Two-unit system with periodic checks (hazard `α`) and failure modes;
/// `p00_k` counts completed checks, truncated at `K`.
pub fn su_model(rates: &SuFailureRates, alpha: &RateFunction, mu: &SuRepairRates, k_max: usize, closure: SuClosure) -> Result<TransportModel> {
    if k_max < 1 {
        return Err(Error::Domain(format!("su needs K >= 1, got {k_max}")));
    }
    let l01 = constant(rates.l01, "l01")?;
    let l10 = constant(rates.l10, "l10")?;
    let l02 = constant(rates.l02, "l02")?;
    let l20 = constant(rates.l20, "l20")?;
    let mut names: Vec<String> = (0..=k_max).map(|k| format!("p00_{k}")).collect();
    let base = k_max + 1;
    for s in ["p010", "p100", "p011", "p101", "p020", "p200", "p110", "p111", "p120", "p210"] {
        names.push(s.to_string());
    }
    let (p010, p100, p011, p101, p020, p200, p110, p111, p120, p210) =
        (base, base + 1, base + 2, base + 3, base + 4, base + 5, base + 6, base + 7, base + 8, base + 9);
    let mut b = Builder::new(names);

    for k in 0..=k_max {
        b.decay(k, &l01).decay(k, &l10).decay(k, alpha);
        b.flow(k, p010, &l01).flow(k, p100, &l10);
        if k > 0 {
            b.renew(k - 1, k, alpha);
        }
    }
    if closure == SuClosure::Lumped {
        b.renew(k_max, k_max, alpha);
    }

    b.decay(p010, &l10).decay(p010, &l02).decay(p010, alpha);
    b.flow(p010, p110, &l10);
    b.renew(p010, p011, alpha).renew(p010, p020, &l02);

    b.decay(p100, &l01).decay(p100, &l20).decay(p100, alpha);
    b.flow(p100, p110, &l01);
    b.renew(p100, p101, alpha).renew(p100, p200, &l20);

    b.decay(p110, &l02).decay(p110, &l20).decay(p110, alpha);
    b.renew(p110, p111, alpha).renew(p110, p120, &l02).renew(p110, p210, &l20);

    for (state, rate) in [
        (p011, &mu.mu01),
        (p101, &mu.mu10),
        (p020, &mu.mu02),
        (p200, &mu.mu20),
        (p111, &mu.mu11),
        (p120, &mu.mu12),
        (p210, &mu.mu21),
    ] {
        b.decay(state, rate).renew(state, 0, rate);
    }
    Ok(b.build(0))
}

/// First two-unit system with inspection hazard `α`, unit failure rate `λ`
/// and repair hazard `μ`.
pub fn yue_model_1(lambda: f64, alpha: &RateFunction, mu: &RateFunction) -> Result<TransportModel> {
    let lam2 = constant(2.0 * lambda, "lambda")?;
    let lam = constant(lambda, "lambda")?;
    let mut b = Builder::new((0..5).map(|i| format!("Q{i}")).collect());
    for q in 0..3 {
        b.decay(q, &lam2).decay(q, alpha);
    }
    b.decay(3, &lam2).decay(3, mu);
    b.decay(4, &lam).decay(4, mu);
    b.flow(0, 1, &lam2).flow(1, 2, &lam2).flow(3, 4, &lam2);
    b.renew(0, 0, alpha).renew(3, 0, mu);
    b.renew(1, 3, alpha).renew(4, 3, mu);
    b.renew(2, 4, alpha);
    Ok(b.build(0))
}

/// Second two-unit system; as the first but with the states `P5`, `P6`
/// reached from `P2`, `P4`.
///
/// The published `P5` equation has an unbalanced parenthesis; it is read as
/// `-α(x)P5`.
pub fn yue_model_2(lambda: f64, alpha: &RateFunction, mu: &RateFunction) -> Result<TransportModel> {
    let lam2 = constant(2.0 * lambda, "lambda")?;
    let lam = constant(lambda, "lambda")?;
    let mut b = Builder::new((0..7).map(|i| format!("P{i}")).collect());
    b.decay(0, &lam2).decay(0, alpha);
    b.decay(1, &lam2).decay(1, alpha);
    b.decay(2, &lam).decay(2, alpha);
    b.decay(3, &lam2).decay(3, mu);
    b.decay(4, &lam).decay(4, mu);
    b.decay(5, alpha);
    b.decay(6, mu);
    b.flow(0, 1, &lam2).flow(1, 2, &lam2).flow(2, 5, &lam);
    b.flow(3, 4, &lam2).flow(4, 6, &lam);
    b.renew(0, 0, alpha).renew(3, 0, mu);
    b.renew(1, 3, alpha).renew(4, 3, mu);
    b.renew(2, 4, alpha).renew(6, 4, mu);
    b.renew(5, 6, alpha);
    Ok(b.build(0))
}

/// Registry names.
pub const MODEL_NAMES: [&str; 5] = ["licao", "linton", "su", "yue1", "yue2"];

/// A named parameter with its default value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub integer: bool,
}

const fn real(name: &'static str, default: f64) -> ParamSpec {
    ParamSpec {
        name,
        default,
        integer: false,
    }
}

const fn int(name: &'static str, default: f64) -> ParamSpec {
    ParamSpec {
        name,
        default,
        integer: true,
    }
}

/// Parameters a registry model accepts (all rates constant at this level;
/// build the model directly or use JSON for age-dependent hazards).
pub fn parameters(name: &str) -> Option<&'static [ParamSpec]> {
    const LICAO: [ParamSpec; 3] = [real("lambda", 1.0), real("mu", 1.0), real("eta", 1.0)];
    const LINTON: [ParamSpec; 6] = [
        real("lambda", 1.0),
        real("mu", 1.0),
        int("k", 2.0),
        int("m", 2.0),
        real("f", 1.0),
        real("g", 1.0),
    ];
    const SU: [ParamSpec; 14] = [
        real("l01", 1.0),
        real("l10", 1.0),
        real("l02", 1.0),
        real("l20", 1.0),
        real("alpha", 1.0),
        real("mu01", 1.0),
        real("mu10", 1.0),
        real("mu02", 1.0),
        real("mu20", 1.0),
        real("mu11", 1.0),
        real("mu12", 1.0),
        real("mu21", 1.0),
        int("K", 4.0),
        int("leaky", 0.0),
    ];
    const YUE: [ParamSpec; 3] = [real("lambda", 1.0), real("alpha", 1.0), real("mu", 1.0)];
    match name {
        "licao" => Some(&LICAO),
        "linton" => Some(&LINTON),
        "su" => Some(&SU),
        "yue1" | "yue2" => Some(&YUE),
        _ => None,
    }
}

/// Builds a registry model from parameter overrides; unspecified
/// parameters take their defaults.
pub fn build(name: &str, overrides: &BTreeMap<String, f64>) -> Result<TransportModel> {
    let specs = parameters(name).ok_or_else(|| {
        Error::InvalidParameter(format!("unknown model {name:?}; known models: {}", MODEL_NAMES.join(", ")))
    })?;
    for key in overrides.keys() {
        if !specs.iter().any(|s| s.name == key) {
            return Err(Error::InvalidParameter(format!("model {name} has no parameter {key:?}")));
        }
    }
    let get = |key: &str| -> f64 {
        let spec = specs.iter().find(|s| s.name == key).expect("known parameter");
        overrides.get(key).copied().unwrap_or(spec.default)
    };
    let get_int = |key: &str| -> Result<usize> {
        let v = get(key);
        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as usize)
        } else {
            Err(Error::Domain(format!("{key} must be a nonnegative integer, got {v}")))
        }
    };
    let rate = |key: &str| constant(get(key), key);
    match name {
        "licao" => Ok(licao_model(&LiCaoRates::new(rate("lambda")?, rate("mu")?, rate("eta")?))),
        "linton" => linton_model(get("lambda"), get("mu"), get_int("k")?, get_int("m")?, &rate("f")?, &rate("g")?),
        "su" => {
            let failures = SuFailureRates {
                l01: get("l01"),
                l10: get("l10"),
                l02: get("l02"),
                l20: get("l20"),
            };
            let repairs = SuRepairRates {
                mu01: rate("mu01")?,
                mu10: rate("mu10")?,
                mu02: rate("mu02")?,
                mu20: rate("mu20")?,
                mu11: rate("mu11")?,
                mu12: rate("mu12")?,
                mu21: rate("mu21")?,
            };
            let closure = match get_int("leaky")? {
                0 => SuClosure::Lumped,
                1 => SuClosure::Leaky,
                v => return Err(Error::Domain(format!("leaky must be 0 or 1, got {v}"))),
            };
            su_model(&failures, &rate("alpha")?, &repairs, get_int("K")?, closure)
        }
        "yue1" => yue_model_1(get("lambda"), &rate("alpha")?, &rate("mu")?),
        "yue2" => yue_model_2(get("lambda"), &rate("alpha")?, &rate("mu")?),
        _ => unreachable!("parameters() accepted the name"),
    }
}

/// Registry model with all defaults.
pub fn lookup(name: &str) -> Result<TransportModel> {
    build(name, &BTreeMap::new())
}
