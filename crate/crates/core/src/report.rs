//! JSON renderings with numbers rounded to six significant digits.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::model::FitResult;

/// Round to six significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Round every floating-point number in a JSON tree; integers are untouched.
pub fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .map(sig6)
            .and_then(serde_json::Number::from_f64)
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => Value::Object(
            o.into_iter()
                .map(|(k, v)| (k, round_numbers(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other,
    }
}

/// Serialize then round.
pub fn to_value<T: Serialize>(x: &T) -> Value {
    round_numbers(serde_json::to_value(x).expect("plain data serializes"))
}

/// `{a1, a2, b, d, rho, sigma_un, kappa_un, se: {a1, a2, b, d}, loglik, n, warnings}`.
pub fn fit_json(fit: &FitResult) -> Value {
    round_numbers(json!({
        "a1": fit.a1(),
        "a2": fit.a2(),
        "b": fit.b(),
        "d": fit.d(),
        "rho": fit.rho,
        "sigma_un": fit.sigma_un,
        "kappa_un": fit.kappa_un,
        "se": {
            "a1": fit.se(0),
            "a2": fit.se(1),
            "b": fit.se(2),
            "d": fit.se(3),
        },
        "loglik": fit.loglik,
        "n": fit.n,
        "warnings": fit.warnings(),
    }))
}

/// Pretty JSON with a trailing newline.
pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}
