use num_complex::Complex64 as C64;
use serde_json::{json, Value};

/// 17 significant digits, positional unless the exponent is extreme.
pub fn sig17(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return format!("{:.16}", 0.0);
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-6..=20).contains(&exp) {
        format!("{:.*}", (16 - exp).max(0) as usize, v)
    } else {
        sci
    }
}

/// Drops the sign of a zero so that `-0.0` never reaches the output.
pub fn clean(v: f64) -> f64 {
    v + 0.0
}

pub fn value(z: C64) -> Value {
    json!({ "value_re": clean(z.re), "value_im": clean(z.im) })
}

pub fn complex(z: C64) -> Value {
    json!({ "re": clean(z.re), "im": clean(z.im) })
}

pub fn json_line(v: &Value) -> String {
    format!("{v}\n")
}

pub fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| sig17(clean(v))).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
