use alloc::string::String;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model shape: {0}")]
    Shape(String),

    #[error("model failed validation check {check:?}")]
    InvalidModel { check: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate spectrum: |z1 - z2| = {gap:e} is below {threshold:e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("transform integral does not converge at s = {re}{im:+}i")]
    Divergent { re: f64, im: f64 },

    #[error("near-singular denominator at s = {re}{im:+}i (|D| = {modulus:e})")]
    NearSingular { re: f64, im: f64, modulus: f64 },

    #[error("non-finite transform value at s = {re}{im:+}i")]
    NonFinite { re: f64, im: f64 },

    #[error("t = {t} is within {gap} of the singular locus t = x = {x}")]
    Exclusion { x: f64, t: f64, gap: f64 },

    #[error("negative density {value:e} in component {component} at x = {x}, t = {t}")]
    Instability {
        component: usize,
        x: f64,
        t: f64,
        value: f64,
    },

    #[error("atom would leave the domain x_max = {x_max} at t = {t}")]
    DomainCut { x_max: f64, t: f64 },

    #[error("probe (x = {x}, t = {t}) is too close to an atom or jump (need {min_distance})")]
    Probe { x: f64, t: f64, min_distance: f64 },

    #[error("cumulative hazard is bounded ({bound}) and cannot reach {target}")]
    Sampling { bound: f64, target: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
