//! Residual records and the deterministic number formatting shared by the
//! CSV and JSON emitters.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// 17 significant digits in scientific form; round-trips every finite f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes an f64 with [`format_float`]; non-finite values become `null`.
pub fn fixed<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    let text = if x.is_finite() { format_float(*x) } else { "null".to_owned() };
    RawValue::from_string(text).map_err(S::Error::custom)?.serialize(serializer)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    #[serde(serialize_with = "fixed")]
    pub residual: f64,
    #[serde(serialize_with = "fixed")]
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `residual ≤ tolerance`; NaN never passes.
    pub fn new(check: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { check: check.into(), residual, tolerance, pass: residual <= tolerance }
    }

    /// Pass/fail condition with no meaningful magnitude.
    pub fn flag(check: impl Into<String>, holds: bool) -> Self {
        Self::new(check, if holds { 0.0 } else { f64::INFINITY }, 0.0)
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_fails() {
        assert!(!Check::new("nan", f64::NAN, 1.0).pass);
        assert!(Check::new("edge", 1.0, 1.0).pass);
        assert!(!Check::flag("flag", false).pass);
        assert!(!all_pass(&[Check::new("a", 0.0, 1.0), Check::new("b", 2.0, 1.0)]));
    }

    #[test]
    fn fixed_json_numbers() {
        let json = serde_json::to_string(&Check::new("c", 0.1, f64::INFINITY)).unwrap();
        assert_eq!(json, r#"{"check":"c","residual":1.0000000000000001e-1,"tolerance":null,"pass":true}"#);
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["residual"].as_f64(), Some(0.1));
    }

    #[test]
    fn float_round_trip() {
        for x in [0.0, -0.0, 1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
