//! Parsers for command-line values.

use std::collections::BTreeMap;
use std::path::Path;

use svtk_core::model::{sample_points, validate_model};
use svtk_core::{registry, Complex64, LiCaoRates, RateFunction, TransportModel};

use crate::error::{CliError, Result};
use crate::io;

/// A real number, also accepting `a/b` (for example `1/512`).
pub fn number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (number(a)?, number(b)?);
            if b == 0.0 {
                return Err(format!("division by zero in {s:?}"));
            }
            a / b
        }
        None => s.parse::<f64>().map_err(|_| format!("not a number: {s:?}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not a finite number: {s:?}"))
    }
}

/// A count such as `1000000` or `1e6`.
pub fn count(s: &str) -> std::result::Result<u64, String> {
    let v = number(s)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("not a nonnegative integer: {s:?}"))
    }
}

pub fn complex(s: &str) -> std::result::Result<Complex64, String> {
    s.trim().parse::<Complex64>().map_err(|_| format!("not a complex number: {s:?} (use forms like 2, 1+3i, 0.5-2i)"))
}

/// `KEY=VALUE` with a numeric value.
pub fn key_value(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    Ok((k.trim().to_string(), number(v)?))
}

/// Points of `a:b:step` (endpoints included when hit) or a comma list.
pub fn grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let out = match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (number(a)?, number(b)?, number(step)?);
            if !(step > 0.0) || b < a {
                return Err(format!("grid {s:?} needs start <= stop and a positive step"));
            }
            // index-based so no rounding drift accumulates
            let n = ((b - a) / step * (1.0 + 1e-12)).floor() as usize;
            if n > 10_000_000 {
                return Err(format!("grid {s:?} has too many points"));
            }
            (0..=n).map(|k| a + k as f64 * step).collect()
        }
        [_] => s.split(',').map(number).collect::<std::result::Result<Vec<_>, _>>()?,
        _ => return Err(format!("grid {s:?} must be START:STOP:STEP or a comma list")),
    };
    if out.is_empty() {
        return Err("empty grid".into());
    }
    Ok(out)
}

/// A hazard: a bare number (constant), `KIND:P1,P2,...` or a JSON object
/// `{"kind": ..., "params": [...]}`.
pub fn rate(s: &str) -> std::result::Result<RateFunction, String> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| format!("rate {s:?}: {e}"));
    }
    if let Some((kind, params)) = s.split_once(':') {
        let params = params.split(',').map(number).collect::<std::result::Result<Vec<_>, _>>()?;
        return RateFunction::from_parts(kind.trim(), &params).map_err(|e| e.to_string());
    }
    RateFunction::constant(number(s)?).map_err(|e| e.to_string())
}

/// Three constants `LAMBDA,MU,ETA`.
pub fn constant_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(number).collect::<std::result::Result<_, _>>().map_err(|e| {
        format!("{e}; --rates takes three constants LAMBDA,MU,ETA (use --lambda/--mu/--eta for age-dependent hazards)")
    })?;
    match v.as_slice() {
        [l, m, e] => Ok([*l, *m, *e]),
        _ => Err(format!("--rates takes exactly three constants LAMBDA,MU,ETA, got {}", v.len())),
    }
}

/// Registry model name or path to a JSON model, with parameter overrides.
/// JSON models are validated and the first failing check is reported.
pub fn load_model(spec: &str, params: &[(String, f64)]) -> Result<TransportModel> {
    let overrides: BTreeMap<String, f64> = params.iter().cloned().collect();
    if registry::parameters(spec).is_some() {
        return Ok(registry::build(spec, &overrides)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "{spec:?} is neither a registry model ({}) nor an existing JSON file",
            registry::MODEL_NAMES.join(", ")
        )));
    }
    if !overrides.is_empty() {
        return Err(CliError::Usage("--param only applies to registry models".into()));
    }
    let text = io::read_to_string(path)?;
    let model: TransportModel =
        serde_json::from_str(&text).map_err(|e| CliError::Model(format!("{}: invalid model: {e}", path.display())))?;
    let report = validate_model(&model, &sample_points(64, 20.0));
    if let Some(f) = report.first_failure() {
        let worst = f
            .worst
            .as_ref()
            .map(|w| {
                let at = |label: &str, v: Option<usize>| v.map(|i| format!(" {label} {i}")).unwrap_or_default();
                let x = w.x.map(|x| format!(" x = {x}")).unwrap_or_default();
                format!(" (worst{}{}{x}: {})", at("row", w.row), at("column", w.column), w.value)
            })
            .unwrap_or_default();
        return Err(CliError::Model(format!(
            "{}: model failed validation check {}{worst}",
            path.display(),
            f.name
        )));
    }
    Ok(model)
}

/// Processing/repair hazards from either `--rates`, the three hazard flags,
/// or a model with that structure.
pub fn licao_rates(
    rates: Option<[f64; 3]>,
    hazards: [&Option<RateFunction>; 3],
    model: Option<&str>,
    params: &[(String, f64)],
) -> Result<LiCaoRates> {
    let flags = hazards.iter().filter(|h| h.is_some()).count();
    let sources = usize::from(rates.is_some()) + usize::from(flags > 0) + usize::from(model.is_some());
    if sources != 1 {
        return Err(CliError::Usage(
            "give the hazards exactly one way: --rates L,M,E, or all of --lambda/--mu/--eta, or --model".into(),
        ));
    }
    if let Some([l, m, e]) = rates {
        return Ok(LiCaoRates::constant(l, m, e)?);
    }
    if let Some(spec) = model {
        return Ok(LiCaoRates::from_model(&load_model(spec, params)?)?);
    }
    match hazards {
        [Some(l), Some(m), Some(e)] => Ok(LiCaoRates::new(l.clone(), m.clone(), e.clone())),
        _ => Err(CliError::Usage("--lambda, --mu and --eta must be given together".into())),
    }
}
