//! Exact non-negative action costs.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{CheckedMul, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative rational cost.
///
/// Costs read from model files are decimals; averaging over observation
/// branches can produce arbitrary fractions, which print as `p/q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cost(Rational64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid cost `{0}`: expected a non-negative decimal or fraction")]
pub struct CostParseError(pub String);

impl Cost {
    pub const ZERO: Cost = Cost(Rational64::new_raw(0, 1));

    pub fn integer(n: i64) -> Cost {
        assert!(n >= 0, "costs are non-negative");
        Cost(Rational64::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Cost {
        let r = Rational64::new(num, den);
        assert!(r >= Rational64::zero(), "costs are non-negative");
        Cost(r)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn as_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Decimal rendering when the value has a terminating expansion.
    pub fn to_decimal(&self) -> Option<String> {
        let mut den = *self.0.denom();
        let mut twos = 0u32;
        let mut fives = 0u32;
        while den % 2 == 0 {
            den /= 2;
            twos += 1;
        }
        while den % 5 == 0 {
            den /= 5;
            fives += 1;
        }
        if den != 1 {
            return None;
        }
        let digits = twos.max(fives);
        let scale = 10i64.checked_pow(digits)?;
        let scaled = self
            .0
            .checked_mul(&Rational64::from_integer(scale))?
            .to_integer();
        if digits == 0 {
            return Some(scaled.to_string());
        }
        let int_part = scaled / scale;
        let frac_part = scaled % scale;
        Some(format!(
            "{int_part}.{frac_part:0width$}",
            width = digits as usize
        ))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_decimal() {
            Some(d) => f.write_str(&d),
            None => write!(f, "{}/{}", self.0.numer(), self.0.denom()),
        }
    }
}

impl FromStr for Cost {
    type Err = CostParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || CostParseError(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.parse().map_err(|_| err())?;
            let d: i64 = d.parse().map_err(|_| err())?;
            if n < 0 || d <= 0 {
                return Err(err());
            }
            return Ok(Cost(Rational64::new(n, d)));
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        let all_digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if int_part.is_empty() || !all_digits(int_part) || !all_digits(frac_part) {
            return Err(err());
        }
        if s.contains('.') && frac_part.is_empty() {
            return Err(err());
        }
        let scale = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(err)?;
        let joined: i64 = format!("{int_part}{frac_part}")
            .parse()
            .map_err(|_| err())?;
        Ok(Cost(Rational64::new(joined, scale)))
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl Div<usize> for Cost {
    type Output = Cost;
    fn div(self, rhs: usize) -> Cost {
        Cost(self.0 / Rational64::from_integer(rhs as i64))
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, Add::add)
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!("1".parse::<Cost>().unwrap(), Cost::integer(1));
        assert_eq!("0.5".parse::<Cost>().unwrap(), Cost::ratio(1, 2));
        assert_eq!("2.25".parse::<Cost>().unwrap(), Cost::ratio(9, 4));
        assert_eq!("7/3".parse::<Cost>().unwrap(), Cost::ratio(7, 3));
        for bad in ["", "-1", "1.", ".5", "abc", "1/0", "1e3"] {
            assert!(bad.parse::<Cost>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_prefers_decimal() {
        assert_eq!(Cost::integer(3).to_string(), "3");
        assert_eq!(Cost::ratio(1, 2).to_string(), "0.5");
        assert_eq!(Cost::ratio(1, 20).to_string(), "0.05");
        assert_eq!(Cost::ratio(7, 3).to_string(), "7/3");
        assert_eq!((Cost::integer(4) / 3).to_string(), "4/3");
    }
}
