//! JSON helpers. Reals are written with 17 significant digits so files round-trip exactly.

use serde::de::Deserializer;
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::domain::{Domain, Point};
use crate::error::{MzqError, Result};

/// A real number serialized in `{:.16e}` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("cannot write non-finite value {}", self.0)));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(S::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Real)
    }
}

pub fn reals(values: &[f64]) -> Vec<Real> {
    values.iter().copied().map(Real).collect()
}

pub fn unreal(values: &[Real]) -> Vec<f64> {
    values.iter().map(|r| r.0).collect()
}

/// Points as coordinate lists of the domain's ambient dimension.
pub fn points_to_json(domain: &Domain, points: &[Point]) -> Vec<Vec<Real>> {
    points.iter().map(|p| reals(&p[..domain.ambient_dim()])).collect()
}

pub fn points_from_json(domain: &Domain, points: &[Vec<Real>]) -> Result<Vec<Point>> {
    points.iter().map(|c| domain.point(&unreal(c))).collect()
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json_str<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(MzqError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        let values = [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0, -0.0];
        let text = serde_json::to_string(&reals(&values)).unwrap();
        assert!(text.contains("1.0000000000000001e-1"));
        let back: Vec<Real> = serde_json::from_str(&text).unwrap();
        for (a, b) in values.iter().zip(unreal(&back)) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(serde_json::to_string(&Real(f64::NAN)).is_err());
    }
}
