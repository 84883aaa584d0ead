//! Decimal rendering shared by every CLI output.

/// Rounds to 12 significant digits (ties to even) and renders the shortest
/// decimal that reads back as the rounded value, always with a fractional
/// part or exponent, e.g. `1.0`, `0.125`, `0.0173415299158`.
pub fn fmt12(x: f64) -> String {
    format!("{:?}", round12(x))
}

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Rounds every float inside a JSON document to 12 significant digits.
pub fn round_json(value: &mut serde_json::Value) {
    use serde_json::Value;
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round12).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}
