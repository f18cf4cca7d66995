//! Hazard rates and their cumulative hazards.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A hazard rate `x ↦ r(x) ≥ 0` on the age axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateSpec", into = "RateSpec")]
pub enum RateFunction {
    Constant(f64),
    /// `r(x) = (k/c)(x/c)^(k-1)`.
    Weibull { shape: f64, scale: f64 },
    PiecewiseLinear(PiecewiseLinear),
}

/// Linear interpolation between knots, constant outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
    // cumulative hazard at each knot
    prefix: Vec<f64>,
}

/// Interchange form: `{"kind": "...", "params": [...]}`.
///
/// Piecewise-linear params are the flattened knots `x0, r0, x1, r1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

fn check_domain(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("age must be finite and nonnegative, got {x}")))
    }
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter("piecewise-linear rate needs at least one knot".into()));
        }
        for (i, &(x, r)) in knots.iter().enumerate() {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter(format!("knot {i}: position {x} must be finite and >= 0")));
            }
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("knot {i}: rate {r} must be finite and >= 0")));
            }
            if i > 0 && x <= knots[i - 1].0 {
                return Err(Error::InvalidParameter(format!("knot {i}: positions must be strictly increasing")));
            }
        }
        let mut prefix = Vec::with_capacity(knots.len());
        let mut acc = knots[0].1 * knots[0].0;
        prefix.push(acc);
        for w in knots.windows(2) {
            let ((x0, r0), (x1, r1)) = (w[0], w[1]);
            acc += 0.5 * (r0 + r1) * (x1 - x0);
            prefix.push(acc);
        }
        Ok(PiecewiseLinear { knots, prefix })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    // index of the last knot at or left of x, if any
    fn segment(&self, x: f64) -> Option<usize> {
        let p = self.knots.partition_point(|k| k.0 <= x);
        p.checked_sub(1)
    }

    fn hazard(&self, x: f64) -> f64 {
        match self.segment(x) {
            None => self.knots[0].1,
            Some(i) if i + 1 == self.knots.len() => self.knots[i].1,
            Some(i) => {
                let (x0, r0) = self.knots[i];
                let (x1, r1) = self.knots[i + 1];
                let u = (x - x0) / (x1 - x0);
                (1.0 - u) * r0 + u * r1
            }
        }
    }

    fn cumulative(&self, x: f64) -> f64 {
        match self.segment(x) {
            None => self.knots[0].1 * x,
            Some(i) if i + 1 == self.knots.len() => self.prefix[i] + self.knots[i].1 * (x - self.knots[i].0),
            Some(i) => {
                let (x0, r0) = self.knots[i];
                let (x1, r1) = self.knots[i + 1];
                let h = x - x0;
                self.prefix[i] + r0 * h + (r1 - r0) * h * h / (2.0 * (x1 - x0))
            }
        }
    }
}

impl RateFunction {
    pub fn constant(r: f64) -> Result<Self> {
        if r >= 0.0 && r.is_finite() {
            Ok(RateFunction::Constant(r))
        } else {
            Err(Error::InvalidParameter(format!("constant rate must be finite and >= 0, got {r}")))
        }
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weibull needs shape > 0 and scale > 0, got k = {shape}, c = {scale}"
            )));
        }
        Ok(RateFunction::Weibull { shape, scale })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        PiecewiseLinear::new(knots).map(RateFunction::PiecewiseLinear)
    }

    /// `r(x)`. Errors on negative or non-finite `x`.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.hazard_unchecked(x))
    }

    /// `R(x) = ∫₀ˣ r`.
    pub fn cumulative_hazard(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.cumulative_unchecked(x))
    }

    /// `exp(-R(x))`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        Ok((-self.cumulative_hazard(x)?).exp())
    }

    /// Hot-loop variant of [`hazard`](Self::hazard); the caller guarantees `x >= 0`.
    pub fn hazard_unchecked(&self, x: f64) -> f64 {
        match self {
            RateFunction::Constant(r) => *r,
            RateFunction::Weibull { shape, scale } => {
                if *shape == 1.0 {
                    1.0 / scale
                } else {
                    (shape / scale) * (x / scale).powf(shape - 1.0)
                }
            }
            RateFunction::PiecewiseLinear(p) => p.hazard(x),
        }
    }

    pub fn cumulative_unchecked(&self, x: f64) -> f64 {
        match self {
            RateFunction::Constant(r) => r * x,
            RateFunction::Weibull { shape, scale } => (x / scale).powf(*shape),
            RateFunction::PiecewiseLinear(p) => p.cumulative(x),
        }
    }

    /// `Some(r)` when the rate is constant in age.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            RateFunction::Constant(r) => Some(*r),
            RateFunction::Weibull { shape, scale } if *shape == 1.0 => Some(1.0 / scale),
            RateFunction::PiecewiseLinear(p) if p.knots.iter().all(|k| k.1 == p.knots[0].1) => Some(p.knots[0].1),
            _ => None,
        }
    }

    /// Whether `R(x) → ∞`, i.e. the event eventually happens with probability one.
    pub fn is_unbounded(&self) -> bool {
        match self {
            RateFunction::Constant(r) => *r > 0.0,
            RateFunction::Weibull { .. } => true,
            RateFunction::PiecewiseLinear(p) => p.knots[p.knots.len() - 1].1 > 0.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RateFunction::Constant(_) => "constant",
            RateFunction::Weibull { .. } => "weibull",
            RateFunction::PiecewiseLinear(_) => "piecewise_linear",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            RateFunction::Constant(r) => alloc::vec![*r],
            RateFunction::Weibull { shape, scale } => alloc::vec![*shape, *scale],
            RateFunction::PiecewiseLinear(p) => p.knots.iter().flat_map(|&(x, r)| [x, r]).collect(),
        }
    }

    /// Builds a rate from its kind name and flat parameter list.
    pub fn from_parts(kind: &str, params: &[f64]) -> Result<Self> {
        match kind {
            "constant" | "const" => match params {
                [r] => RateFunction::constant(*r),
                _ => Err(Error::InvalidParameter(format!("constant rate takes 1 parameter, got {}", params.len()))),
            },
            "weibull" => match params {
                [k, c] => RateFunction::weibull(*k, *c),
                _ => Err(Error::InvalidParameter(format!("weibull rate takes 2 parameters, got {}", params.len()))),
            },
            "piecewise_linear" | "piecewise-linear" | "pwl" => {
                if params.is_empty() || params.len() % 2 != 0 {
                    return Err(Error::InvalidParameter(
                        "piecewise-linear params must be a nonempty flat list of (x, r) pairs".into(),
                    ));
                }
                RateFunction::piecewise_linear(params.chunks(2).map(|c| (c[0], c[1])).collect())
            }
            other => Err(Error::InvalidParameter(format!("unknown rate kind {other:?}"))),
        }
    }
}

impl TryFrom<RateSpec> for RateFunction {
    type Error = Error;

    fn try_from(spec: RateSpec) -> Result<Self> {
        RateFunction::from_parts(&spec.kind, &spec.params)
    }
}

impl From<RateFunction> for RateSpec {
    fn from(rate: RateFunction) -> Self {
        RateSpec {
            kind: rate.kind().into(),
            params: rate.params(),
        }
    }
}

pub fn hazard_eval(rate: &RateFunction, x: f64) -> Result<f64> {
    rate.hazard(x)
}

pub fn cumulative_hazard(rate: &RateFunction, x: f64) -> Result<f64> {
    rate.cumulative_hazard(x)
}

pub fn survival(rate: &RateFunction, x: f64) -> Result<f64> {
    rate.survival(x)
}

/// Competing hazards acting on the same age clock.
#[derive(Debug, Clone, Copy)]
pub struct HazardSum<'a>(pub &'a [&'a RateFunction]);

impl HazardSum<'_> {
    pub fn hazard(&self, x: f64) -> f64 {
        self.0.iter().map(|r| r.hazard_unchecked(x)).sum()
    }

    pub fn cumulative(&self, x: f64) -> f64 {
        self.0.iter().map(|r| r.cumulative_unchecked(x)).sum()
    }

    pub fn survival(&self, x: f64) -> f64 {
        (-self.cumulative(x)).exp()
    }

    pub fn is_unbounded(&self) -> bool {
        self.0.iter().any(|r| r.is_unbounded())
    }
}
