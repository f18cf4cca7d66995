//! Pass/fail records for method-against-method comparisons.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `|estimate − reference|`.
    AbsError,
    /// `|estimate − reference| / max(1, |reference|)`.
    RelError,
    /// Largest pointwise absolute error over a shared grid.
    MaxAbsError,
    /// Mean pointwise absolute error over a shared grid.
    MeanAbsError,
    /// `|estimate − reference| / standard error`.
    ZScore,
    /// A fraction that must reach `tolerance` (for example bins within 3σ).
    MinFraction,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::AbsError => "abs_error",
            Metric::RelError => "rel_error",
            Metric::MaxAbsError => "max_abs_error",
            Metric::MeanAbsError => "mean_abs_error",
            Metric::ZScore => "z_score",
            Metric::MinFraction => "min_fraction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub estimate: f64,
    pub reference: f64,
    /// Value of the metric; compared against `tolerance`.
    pub error: f64,
    pub tolerance: f64,
    pub metric: Metric,
    pub pass: bool,
}

impl ReportEntry {
    /// Entry whose `error` is computed from `estimate` and `reference`.
    pub fn new(name: impl Into<String>, estimate: f64, reference: f64, metric: Metric, tolerance: f64) -> Self {
        let diff = (estimate - reference).abs();
        let error = match metric {
            Metric::RelError => diff / reference.abs().max(1.0),
            Metric::MinFraction => estimate,
            _ => diff,
        };
        Self::with_error(name, estimate, reference, error, metric, tolerance)
    }

    /// Entry with an externally computed error (z-scores, grid maxima).
    pub fn with_error(name: impl Into<String>, estimate: f64, reference: f64, error: f64, metric: Metric, tolerance: f64) -> Self {
        let pass = match metric {
            Metric::MinFraction => error >= tolerance,
            _ => error <= tolerance,
        };
        ReportEntry {
            name: name.into(),
            estimate,
            reference,
            error,
            tolerance,
            metric,
            pass,
        }
    }
}

/// Per-bin histogram comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinCheck {
    pub state: String,
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    pub expected: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub context: String,
    pub entries: Vec<ReportEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bins: Vec<BinCheck>,
    #[serde(default)]
    pub flags: Vec<String>,
    #[serde(default)]
    pub insufficient_data: bool,
}

impl ComparisonReport {
    pub fn new(context: impl Into<String>) -> Self {
        ComparisonReport {
            context: context.into(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, entry: ReportEntry) {
        self.entries.push(entry);
    }

    pub fn flag(&mut self, message: impl Into<String>) {
        self.flags.push(message.into());
    }

    /// All entries pass and the data were sufficient.
    pub fn all_pass(&self) -> bool {
        !self.insufficient_data && self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn merge(&mut self, other: ComparisonReport) {
        self.entries.extend(other.entries);
        self.bins.extend(other.bins);
        self.flags.extend(other.flags);
        self.insufficient_data |= other.insufficient_data;
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.context)?;
        for e in &self.entries {
            writeln!(
                f,
                "  {:<4} {:<28} est={:<14.8e} ref={:<14.8e} {}={:.3e} tol={:.3e}",
                if e.pass { "ok" } else { "FAIL" },
                e.name,
                e.estimate,
                e.reference,
                e.metric.name(),
                e.error,
                e.tolerance
            )?;
        }
        for flag in &self.flags {
            writeln!(f, "  note: {flag}")?;
        }
        Ok(())
    }
}
