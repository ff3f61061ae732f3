//! Scalar abstraction shared by every solver.
//!
//! The trusted solver paths run on [`Rational`](crate::Rational); the same
//! generic code also runs on `f64`, which is used to cross-check exact results
//! against approximate iterations.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

/// A field element usable as a probability or a value.
pub trait Scalar:
    Clone + PartialOrd + Num + Signed + Debug + Display + Send + Sync + 'static
{
    /// Whether arithmetic and comparisons are exact.
    const EXACT: bool;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Slack used by [`Scalar::strictly_less`]; zero for exact types.
    fn tolerance() -> Self;

    /// `self < other`, beyond the tolerance of the type.
    fn strictly_less(&self, other: &Self) -> bool {
        self.clone() + Self::tolerance() < *other
    }

    fn strictly_greater(&self, other: &Self) -> bool {
        other.strictly_less(self)
    }

    /// Neither strictly less nor strictly greater.
    fn same_value(&self, other: &Self) -> bool {
        !self.strictly_less(other) && !other.strictly_less(self)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tolerance() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn strictly_less(&self, other: &Self) -> bool {
        self < other
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tolerance() -> Self {
        1e-12
    }
}

/// Parses `"n/d"` or `"n"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d == BigInt::from(0) {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => text.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Canonical `"n/d"` text form; the denominator is always written.
pub fn format_rational(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Serde adapter writing rationals as `"n/d"` strings.
pub mod rational_text {
    use num_rational::BigRational;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<Ser: Serializer>(value: &BigRational, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        ser.serialize_str(&super::format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(de)?;
        super::parse_rational(&text).ok_or_else(|| D::Error::custom(format!("not a rational: {text:?}")))
    }
}
