use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Deserialize;

use pointint_core::greenfn::PointInteractionConfig;
use pointint_core::Error;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn number(s: &str, what: &str) -> Result<f64, Error> {
    let v: f64 = s.trim().parse().map_err(|_| invalid(format!("{what}: cannot parse '{s}' as a number")))?;
    if !v.is_finite() {
        return Err(invalid(format!("{what}: '{s}' is not finite")));
    }
    Ok(v)
}

/// `1`, `-0.5`, `2i`, `1+0.3i`, `1e-2-4e-1i`.
pub fn complex(s: &str) -> Result<C64, Error> {
    let t = s.trim().replace(' ', "");
    let Some(body) = t.strip_suffix('i') else {
        return Ok(C64::new(number(&t, "complex value")?, 0.0));
    };
    // split at the last sign that is neither leading nor part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (number(&body[..k], "complex value")?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => number(other, "complex value")?,
    };
    Ok(C64::new(re, im))
}

/// Comma-separated `a:V` pairs.
pub fn points(s: &str) -> Result<Vec<(f64, f64)>, Error> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, v) = p.split_once(':').ok_or_else(|| invalid(format!("point '{p}' is not of the form a:V")))?;
            Ok((number(a, "position")?, number(v, "strength")?))
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointEntry {
    a: f64,
    #[serde(rename = "V")]
    v: f64,
}

/// JSON array of `{"a": .., "V": ..}`.
pub fn config_file(path: &Path) -> Result<Vec<(f64, f64)>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let entries: Vec<PointEntry> =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    Ok(entries.into_iter().map(|p| (p.a, p.v)).collect())
}

pub fn config(points_arg: Option<&str>, file: Option<&Path>) -> Result<PointInteractionConfig, Error> {
    let pairs = match (points_arg, file) {
        (Some(_), Some(_)) => return Err(invalid("give either --points or --config, not both")),
        (Some(p), None) => points(p)?,
        (None, Some(f)) => config_file(f)?,
        (None, None) => return Err(invalid("missing --points or --config")),
    };
    PointInteractionConfig::from_pairs(&pairs)
}

/// `x,y`.
pub fn at(s: &str) -> Result<(f64, f64), Error> {
    let (x, y) = s.split_once(',').ok_or_else(|| invalid(format!("--at '{s}' is not of the form x,y")))?;
    Ok((number(x, "x")?, number(y, "y")?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    /// `steps` equally spaced samples; a single step samples `min`.
    pub fn samples(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.max } else { self.min + h * i as f64 }).collect()
    }
}

/// `xmin:xmax:steps`.
pub fn axis(s: &str) -> Result<Axis, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(invalid(format!("--grid '{s}' is not of the form xmin:xmax:steps")));
    };
    let (min, max) = (number(lo, "grid min")?, number(hi, "grid max")?);
    let steps: usize = n.trim().parse().map_err(|_| invalid(format!("grid steps '{n}' is not a non-negative integer")))?;
    if steps < 1 {
        return Err(invalid("grid steps must be at least 1"));
    }
    if max < min {
        return Err(invalid(format!("grid max {max} is below grid min {min}")));
    }
    Ok(Axis { min, max, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(complex("1").unwrap(), C64::new(1.0, 0.0));
        assert_eq!(complex("1+0.3i").unwrap(), C64::new(1.0, 0.3));
        assert_eq!(complex("-2-i").unwrap(), C64::new(-2.0, -1.0));
        assert_eq!(complex("0.5i").unwrap(), C64::new(0.0, 0.5));
        assert_eq!(complex("1e-2+3E-1i").unwrap(), C64::new(0.01, 0.3));
        assert_eq!(complex("-1e+2").unwrap(), C64::new(-100.0, 0.0));
        assert!(complex("1+").is_err());
        assert!(complex("abc").is_err());
        assert!(complex("nan").is_err());
    }

    #[test]
    fn points_and_grid() {
        assert_eq!(points("0:2, 1.5:-0.3").unwrap(), vec![(0.0, 2.0), (1.5, -0.3)]);
        assert!(points("0-2").is_err());
        let ax = axis("-1:1:5").unwrap();
        assert_eq!(ax.samples(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(axis("2:3:1").unwrap().samples(), vec![2.0]);
        assert!(axis("0:1:0").is_err());
        assert!(axis("1:0:3").is_err());
        assert!(axis("0:1").is_err());
    }
}
