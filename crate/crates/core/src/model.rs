//! Transport systems `∂p/∂t + ∂p/∂x = M(x) p` with an integral boundary kernel
//! and delta data, plus structural validation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rate::RateFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub sign: Sign,
    pub rate: RateFunction,
}

/// One entry of `M(x)` or `B(x)`: a signed sum of rate functions.
///
/// Entries keep their terms instead of an opaque closure so validation and
/// the solver can integrate diagonal entries exactly.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawEntry", into = "RawEntry")]
pub struct Entry {
    terms: Vec<Term>,
}

impl Entry {
    pub fn zero() -> Self {
        Entry::default()
    }

    pub fn plus(rate: RateFunction) -> Self {
        Entry {
            terms: vec![Term { sign: Sign::Plus, rate }],
        }
    }

    pub fn minus(rate: RateFunction) -> Self {
        Entry {
            terms: vec![Term { sign: Sign::Minus, rate }],
        }
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        Entry { terms }
    }

    /// Shorthand for `-(r₁ + r₂ + …)`, the usual diagonal.
    pub fn exit(rates: &[&RateFunction]) -> Self {
        Entry {
            terms: rates
                .iter()
                .map(|r| Term {
                    sign: Sign::Minus,
                    rate: (*r).clone(),
                })
                .collect(),
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.sign.factor() * t.rate.hazard_unchecked(x)).sum()
    }

    /// `∫₀ˣ entry`, exact for every rate kind.
    pub fn integral(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.sign.factor() * t.rate.cumulative_unchecked(x)).sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawEntry {
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sign: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    terms: Vec<RawEntry>,
}

impl TryFrom<RawEntry> for Entry {
    type Error = Error;

    fn try_from(raw: RawEntry) -> Result<Self> {
        match raw.kind.as_str() {
            "zero" => Ok(Entry::zero()),
            "sum" => {
                let mut terms = Vec::new();
                for t in raw.terms {
                    terms.extend(Entry::try_from(t)?.terms);
                }
                Ok(Entry { terms })
            }
            kind => {
                let sign = match raw.sign.unwrap_or(1.0) {
                    1.0 => Sign::Plus,
                    -1.0 => Sign::Minus,
                    s => return Err(Error::InvalidParameter(format!("entry sign must be +1 or -1, got {s}"))),
                };
                Ok(Entry {
                    terms: vec![Term {
                        sign,
                        rate: RateFunction::from_parts(kind, &raw.params)?,
                    }],
                })
            }
        }
    }
}

fn raw_term(t: &Term) -> RawEntry {
    RawEntry {
        kind: t.rate.kind().into(),
        params: t.rate.params(),
        sign: Some(t.sign.factor()),
        terms: Vec::new(),
    }
}

impl From<Entry> for RawEntry {
    fn from(e: Entry) -> Self {
        match e.terms.as_slice() {
            [] => RawEntry {
                kind: "zero".into(),
                params: Vec::new(),
                sign: None,
                terms: Vec::new(),
            },
            [t] => raw_term(t),
            ts => RawEntry {
                kind: "sum".into(),
                params: Vec::new(),
                sign: None,
                terms: ts.iter().map(raw_term).collect(),
            },
        }
    }
}

/// Piecewise-linear initial density, zero outside its knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialProfile {
    pub knots: Vec<(f64, f64)>,
}

impl InitialProfile {
    pub fn value(&self, x: f64) -> f64 {
        let k = &self.knots;
        if k.is_empty() || x < k[0].0 || x > k[k.len() - 1].0 {
            return 0.0;
        }
        let p = k.partition_point(|q| q.0 <= x);
        if p == k.len() {
            return k[p - 1].1;
        }
        let (x0, v0) = k[p - 1];
        let (x1, v1) = k[p];
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    pub fn support_end(&self) -> f64 {
        self.knots.last().map_or(0.0, |k| k.0)
    }
}

/// An `n`-component age-structured system.
///
/// - `generator[i][j]` is `M_ij(x)`: diagonal entries are minus the exit
///   hazard, off-diagonal entries are in-line transfers that keep the age.
/// - `boundary_kernel[i][j]` is `B_ij(x)`: flow from `j` at age `x` that
///   re-enters `i` at age 0.
/// - `delta_boundary` and `delta_initial` are the coefficients of `δ(t)` in
///   `p(0,t)` and of `δ(x)` in `p(x,0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct TransportModel {
    names: Vec<String>,
    generator: Vec<Vec<Entry>>,
    boundary_kernel: Vec<Vec<Entry>>,
    delta_boundary: Vec<f64>,
    delta_initial: Vec<f64>,
    smooth_initial: Vec<Option<InitialProfile>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawModel {
    n: usize,
    names: Vec<String>,
    generator: Vec<Vec<Entry>>,
    boundary_kernel: Vec<Vec<Entry>>,
    delta_boundary: Vec<f64>,
    delta_initial: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    smooth_initial: Vec<Option<InitialProfile>>,
}

impl TryFrom<RawModel> for TransportModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let m = TransportModel::new(
            raw.names,
            raw.generator,
            raw.boundary_kernel,
            raw.delta_boundary,
            raw.delta_initial,
        )?;
        if m.n() != raw.n {
            return Err(Error::Shape(format!("\"n\" is {} but the model has {} components", raw.n, m.n())));
        }
        if raw.smooth_initial.is_empty() {
            Ok(m)
        } else {
            m.with_smooth_initial(raw.smooth_initial)
        }
    }
}

impl From<TransportModel> for RawModel {
    fn from(m: TransportModel) -> Self {
        let smooth_initial = if m.smooth_initial.iter().all(Option::is_none) {
            Vec::new()
        } else {
            m.smooth_initial
        };
        RawModel {
            n: m.names.len(),
            names: m.names,
            generator: m.generator,
            boundary_kernel: m.boundary_kernel,
            delta_boundary: m.delta_boundary,
            delta_initial: m.delta_initial,
            smooth_initial,
        }
    }
}

fn check_square(what: &str, m: &[Vec<Entry>], n: usize) -> Result<()> {
    if m.len() != n {
        return Err(Error::Shape(format!("{what} has {} rows, expected {n}", m.len())));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Shape(format!("{what} row {i} has {} entries, expected {n}", row.len())));
        }
    }
    Ok(())
}

impl TransportModel {
    /// Checks shapes only; sign and balance conditions belong to [`validate_model`].
    pub fn new(
        names: Vec<String>,
        generator: Vec<Vec<Entry>>,
        boundary_kernel: Vec<Vec<Entry>>,
        delta_boundary: Vec<f64>,
        delta_initial: Vec<f64>,
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Shape("a model needs at least one component".into()));
        }
        check_square("generator", &generator, n)?;
        check_square("boundary_kernel", &boundary_kernel, n)?;
        if delta_boundary.len() != n || delta_initial.len() != n {
            return Err(Error::Shape(format!(
                "delta vectors have lengths {} and {}, expected {n}",
                delta_boundary.len(),
                delta_initial.len()
            )));
        }
        Ok(TransportModel {
            names,
            generator,
            boundary_kernel,
            delta_boundary,
            delta_initial,
            smooth_initial: vec![None; n],
        })
    }

    pub fn with_smooth_initial(mut self, profiles: Vec<Option<InitialProfile>>) -> Result<Self> {
        if profiles.len() != self.n() {
            return Err(Error::Shape(format!(
                "smooth_initial has {} entries, expected {}",
                profiles.len(),
                self.n()
            )));
        }
        for p in profiles.iter().flatten() {
            if p.knots.windows(2).any(|w| w[1].0 <= w[0].0) || p.knots.iter().any(|k| k.0 < 0.0) {
                return Err(Error::InvalidParameter("initial profile knots must be increasing and >= 0".into()));
            }
        }
        self.smooth_initial = profiles;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn generator(&self) -> &[Vec<Entry>] {
        &self.generator
    }

    pub fn boundary_kernel(&self) -> &[Vec<Entry>] {
        &self.boundary_kernel
    }

    pub fn delta_boundary(&self) -> &[f64] {
        &self.delta_boundary
    }

    pub fn delta_initial(&self) -> &[f64] {
        &self.delta_initial
    }

    pub fn smooth_initial(&self) -> &[Option<InitialProfile>] {
        &self.smooth_initial
    }

    /// Column gap `-M_jj - Σ_{i≠j} M_ij - Σ_i B_ij` at age `x`.
    ///
    /// Positive: mass leaves the system from component `j`. Negative: the
    /// equations create mass there.
    pub fn column_gap(&self, j: usize, x: f64) -> f64 {
        let n = self.n();
        let mut gap = -self.generator[j][j].value(x);
        for i in 0..n {
            if i != j {
                gap -= self.generator[i][j].value(x);
            }
            gap -= self.boundary_kernel[i][j].value(x);
        }
        gap
    }
}

/// The three hazards of the processing/repair model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiCaoRates {
    /// breakdown
    pub lambda: RateFunction,
    /// completion
    pub mu: RateFunction,
    /// repair
    pub eta: RateFunction,
}

impl LiCaoRates {
    pub fn new(lambda: RateFunction, mu: RateFunction, eta: RateFunction) -> Self {
        LiCaoRates { lambda, mu, eta }
    }

    pub fn constant(lambda: f64, mu: f64, eta: f64) -> Result<Self> {
        Ok(LiCaoRates {
            lambda: RateFunction::constant(lambda)?,
            mu: RateFunction::constant(mu)?,
            eta: RateFunction::constant(eta)?,
        })
    }

    pub fn as_constants(&self) -> Option<(f64, f64, f64)> {
        Some((self.lambda.as_constant()?, self.mu.as_constant()?, self.eta.as_constant()?))
    }

    /// Recovers the rates from a two-component model with the
    /// processing/repair structure.
    pub fn from_model(m: &TransportModel) -> Result<Self> {
        let shape = |msg: &str| Error::Shape(format!("not a processing/repair model: {msg}"));
        if m.n() != 2 {
            return Err(shape("needs exactly 2 components"));
        }
        let single = |e: &Entry, sign: Sign| -> Option<RateFunction> {
            match e.terms() {
                [t] if t.sign == sign => Some(t.rate.clone()),
                _ => None,
            }
        };
        let g = m.generator();
        let b = m.boundary_kernel();
        let lambda = single(&b[1][0], Sign::Plus).ok_or_else(|| shape("B[1][0] must be a single positive rate"))?;
        let eta = single(&b[0][1], Sign::Plus).ok_or_else(|| shape("B[0][1] must be a single positive rate"))?;
        if !b[0][0].is_zero() || !b[1][1].is_zero() || !g[0][1].is_zero() || !g[1][0].is_zero() {
            return Err(shape("unexpected nonzero coupling"));
        }
        if single(&g[1][1], Sign::Minus).as_ref() != Some(&eta) {
            return Err(shape("M[1][1] must be -eta"));
        }
        let mu = match g[0][0].terms() {
            [a, c] if a.sign == Sign::Minus && c.sign == Sign::Minus => {
                if a.rate == lambda {
                    c.rate.clone()
                } else if c.rate == lambda {
                    a.rate.clone()
                } else {
                    return Err(shape("M[0][0] must be -(lambda + mu)"));
                }
            }
            _ => return Err(shape("M[0][0] must be -(lambda + mu)")),
        };
        if m.delta_boundary() != [1.0, 0.0] || m.delta_initial() != [1.0, 0.0] {
            return Err(shape("delta data must be the unit vector e0"));
        }
        Ok(LiCaoRates { lambda, mu, eta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// The model cannot be solved meaningfully.
    Error,
    /// Reported for interpretation; does not fail validation.
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: Option<usize>,
    pub column: Option<usize>,
    pub x: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub severity: Severity,
    pub passed: bool,
    pub worst: Option<Violation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapKind {
    Balanced,
    Absorbing,
    Creating,
    Mixed,
}

/// Range of one column gap over the sampled ages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnGap {
    pub column: usize,
    pub name: String,
    pub min_gap: f64,
    pub max_gap: f64,
    pub kind: GapKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub column_gaps: Vec<ColumnGap>,
}

impl ValidationReport {
    /// True when no error-severity check failed.
    pub fn passed(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed && c.severity == Severity::Error)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Columns through which mass leaves the system.
    pub fn absorption_channels(&self) -> impl Iterator<Item = &ColumnGap> {
        self.column_gaps.iter().filter(|g| g.max_gap > 0.0)
    }

    /// Columns through which the equations create mass.
    pub fn creation_channels(&self) -> impl Iterator<Item = &ColumnGap> {
        self.column_gaps.iter().filter(|g| g.min_gap < 0.0)
    }
}

/// `count` evenly spaced ages on `[0, x_max]`.
pub fn sample_points(count: usize, x_max: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|k| x_max * k as f64 / (count - 1) as f64).collect(),
    }
}

// keeps the most negative value seen
struct Worst(Option<Violation>);

impl Worst {
    fn offer(&mut self, row: Option<usize>, column: Option<usize>, x: Option<f64>, value: f64) {
        let bad = value < 0.0 || value.is_nan();
        if bad && self.0.as_ref().map_or(true, |w| value < w.value || value.is_nan()) {
            self.0 = Some(Violation { row, column, x, value });
        }
    }

    fn into_check(self, name: &str, severity: Severity) -> CheckResult {
        CheckResult {
            name: name.into(),
            severity,
            passed: self.0.is_none(),
            worst: self.0,
        }
    }
}

/// Checks sign, finiteness and balance conditions at the given ages.
///
/// Failures are entries in the report, never errors. A negative column gap
/// is reported as a warning: some published systems create mass as printed
/// and must still be solvable.
pub fn validate_model(m: &TransportModel, sample_points: &[f64]) -> ValidationReport {
    let n = m.n();
    let mut checks = Vec::new();

    let mut samples = Worst(None);
    if sample_points.is_empty() {
        samples.0 = Some(Violation {
            row: None,
            column: None,
            x: None,
            value: -1.0,
        });
    }
    for &x in sample_points {
        if !(x >= 0.0 && x.is_finite()) {
            samples.offer(None, None, Some(x), -1.0);
        }
    }
    checks.push(samples.into_check("sample_points", Severity::Error));
    let xs: Vec<f64> = sample_points.iter().copied().filter(|x| *x >= 0.0 && x.is_finite()).collect();

    let mut finite = Worst(None);
    let mut offdiag = Worst(None);
    let mut kernel = Worst(None);
    for &x in &xs {
        for i in 0..n {
            for j in 0..n {
                let g = m.generator[i][j].value(x);
                let b = m.boundary_kernel[i][j].value(x);
                for v in [g, b] {
                    if !v.is_finite() {
                        finite.offer(Some(i), Some(j), Some(x), f64::NAN);
                    }
                }
                if i != j {
                    offdiag.offer(Some(i), Some(j), Some(x), g);
                }
                kernel.offer(Some(i), Some(j), Some(x), b);
            }
        }
    }
    checks.push(finite.into_check("finite_entries", Severity::Error));
    checks.push(offdiag.into_check("generator_offdiagonal_nonnegative", Severity::Error));
    checks.push(kernel.into_check("boundary_kernel_nonnegative", Severity::Error));

    let mut deltas = Worst(None);
    for (j, (&c, &d)) in m.delta_boundary.iter().zip(&m.delta_initial).enumerate() {
        for v in [c, d] {
            if !v.is_finite() {
                deltas.offer(None, Some(j), None, f64::NAN);
            } else {
                deltas.offer(None, Some(j), None, v);
            }
        }
    }
    checks.push(deltas.into_check("delta_vectors_nonnegative", Severity::Error));

    let mut initial = Worst(None);
    for (j, p) in m.smooth_initial.iter().enumerate() {
        if let Some(p) = p {
            for &(x, v) in &p.knots {
                initial.offer(None, Some(j), Some(x), v);
            }
        }
    }
    checks.push(initial.into_check("smooth_initial_nonnegative", Severity::Error));

    let mut balance = Worst(None);
    let mut column_gaps = Vec::with_capacity(n);
    for j in 0..n {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &xs {
            let gap = m.column_gap(j, x);
            // rounding in the signed sums should not count as creation
            let scale = column_scale(m, j, x);
            let gap = if gap.abs() <= 1e-12 * scale { 0.0 } else { gap };
            lo = lo.min(gap);
            hi = hi.max(gap);
            balance.offer(None, Some(j), Some(x), gap);
        }
        if xs.is_empty() {
            lo = 0.0;
            hi = 0.0;
        }
        let kind = match (lo < 0.0, hi > 0.0) {
            (false, false) => GapKind::Balanced,
            (false, true) => GapKind::Absorbing,
            (true, false) => GapKind::Creating,
            (true, true) => GapKind::Mixed,
        };
        column_gaps.push(ColumnGap {
            column: j,
            name: m.names[j].clone(),
            min_gap: lo,
            max_gap: hi,
            kind,
        });
    }
    checks.push(balance.into_check("column_balance", Severity::Warning));

    ValidationReport { checks, column_gaps }
}

fn column_scale(m: &TransportModel, j: usize, x: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..m.n() {
        s += m.generator[i][j].value(x).abs() + m.boundary_kernel[i][j].value(x).abs();
    }
    s.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    #[test]
    fn licao_validates_with_mu_gap() {
        let m = registry::licao_model(&LiCaoRates::constant(1.0, 1.0, 1.0).unwrap());
        let r = validate_model(&m, &sample_points(32, 10.0));
        assert!(r.passed());
        assert!(r.check("column_balance").unwrap().passed);
        assert_eq!(r.column_gaps[0].kind, GapKind::Absorbing);
        assert_eq!(r.column_gaps[0].min_gap, 1.0);
        assert_eq!(r.column_gaps[1].kind, GapKind::Balanced);
        assert_eq!(LiCaoRates::from_model(&m).unwrap(), LiCaoRates::constant(1.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn negative_kernel_fails() {
        let one = RateFunction::Constant(1.0);
        let m = TransportModel::new(
            vec!["a".into()],
            vec![vec![Entry::minus(one.clone())]],
            vec![vec![Entry::minus(one)]],
            vec![1.0],
            vec![0.0],
        )
        .unwrap();
        let r = validate_model(&m, &[0.0, 1.0]);
        assert!(!r.passed());
        let f = r.first_failure().unwrap();
        assert_eq!(f.name, "boundary_kernel_nonnegative");
        assert_eq!(f.worst.as_ref().unwrap().value, -1.0);
    }

    #[test]
    fn empty_samples_fail() {
        let m = registry::licao_model(&LiCaoRates::constant(1.0, 1.0, 1.0).unwrap());
        assert_eq!(validate_model(&m, &[]).first_failure().unwrap().name, "sample_points");
    }

    #[test]
    fn shape_errors() {
        assert!(TransportModel::new(vec!["a".into()], vec![], vec![vec![Entry::zero()]], vec![0.0], vec![0.0]).is_err());
        assert!(TransportModel::new(vec![], vec![], vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn profile_is_zero_outside_knots() {
        let p = InitialProfile {
            knots: vec![(0.0, 1.0), (1.0, 0.0)],
        };
        assert_eq!(p.value(0.5), 0.5);
        assert_eq!(p.value(1.5), 0.0);
    }
}
