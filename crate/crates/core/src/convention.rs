use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// How much mass the unit delta in the initial and boundary data injects.
///
/// Under `Paper` an endpoint delta counts fully in both the boundary integral
/// and the initial condition, so total injected mass is 2. `Probabilistic`
/// divides everything by two and gives state probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassConvention {
    Paper,
    #[default]
    Probabilistic,
}

impl MassConvention {
    pub fn scale(self) -> f64 {
        match self {
            MassConvention::Paper => 1.0,
            MassConvention::Probabilistic => 0.5,
        }
    }

    /// Value of `∫₀ˣ δ(y) f(y) dy / f(0)` for `x > 0`.
    pub fn kappa(self) -> f64 {
        match self {
            MassConvention::Paper => 1.0,
            MassConvention::Probabilistic => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MassConvention::Paper => "paper",
            MassConvention::Probabilistic => "probabilistic",
        }
    }
}

impl fmt::Display for MassConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MassConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "paper" => Ok(MassConvention::Paper),
            "probabilistic" => Ok(MassConvention::Probabilistic),
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown mass convention {other:?} (expected paper or probabilistic)"
            ))),
        }
    }
}
