//! Exact rationals: parsing, decimal rendering and serde as strings.

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {0:?} as a rational (expected p/q or a decimal)")]
pub struct ParseRatioError(pub String);

/// Parses `p/q`, an integer, or a finite decimal such as `0.375`.
pub fn parse_ratio(s: &str) -> Result<Rational64, ParseRatioError> {
    let err = || ParseRatioError(s.to_string());
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| err())?;
        let q: i64 = q.trim().parse().map_err(|_| err())?;
        if q == 0 {
            return Err(err());
        }
        return Ok(Rational64::new(p, q));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 15 {
        return Err(err());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let den = 10i64.pow(frac.len() as u32);
    let int_v: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
    let frac_v: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| err())? };
    let num = int_v.checked_mul(den).and_then(|v| v.checked_add(frac_v)).ok_or_else(err)?;
    let r = Rational64::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Renders `r` with exactly `places` decimals, rounding half away from zero.
pub fn to_decimal(r: Rational64, places: u32) -> String {
    let neg = r.is_negative();
    let a = r.abs();
    let scale = 10i128.pow(places);
    let (n, d) = (*a.numer() as i128, *a.denom() as i128);
    let scaled = (2 * n * scale + d) / (2 * d);
    let int = scaled / scale;
    let frac = scaled % scale;
    let sign = if neg && !scaled.is_zero() { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0width$}", width = places as usize)
    }
}

pub fn to_fraction(r: Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Serde adapter storing a rational as a `"p/q"` string and accepting
/// decimals on input.
pub mod serde_ratio {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_fraction(*r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio(&s).map_err(de::Error::custom)
    }
}

/// As [`serde_ratio`] for optional fields.
pub mod serde_ratio_opt {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational64>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&to_fraction(*r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational64>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse_ratio(&s).map_err(de::Error::custom)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_ratio("1/2").unwrap(), Rational64::new(1, 2));
        assert_eq!(parse_ratio("0.3").unwrap(), Rational64::new(3, 10));
        assert_eq!(parse_ratio("1").unwrap(), Rational64::from_integer(1));
        assert_eq!(parse_ratio(".25").unwrap(), Rational64::new(1, 4));
        assert_eq!(parse_ratio("-0.5").unwrap(), Rational64::new(-1, 2));
        for bad in ["", "1/0", "a", "0.3.1", "1/x", "."] {
            assert!(parse_ratio(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn decimal_rounding() {
        assert_eq!(to_decimal(Rational64::new(1, 3), 6), "0.333333");
        assert_eq!(to_decimal(Rational64::new(2, 3), 6), "0.666667");
        assert_eq!(to_decimal(Rational64::new(1, 2_000_000), 6), "0.000001");
        assert_eq!(to_decimal(Rational64::new(7, 1), 6), "7.000000");
        assert_eq!(to_decimal(Rational64::new(-1, 8), 2), "-0.13");
    }
}
