//! Exact rational helpers shared by every module.
//!
//! All probabilities, weights and times in the core are `BigRational`. Floats
//! only appear in Monte Carlo summaries.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = BigRational;

/// `num / den` as an exact rational. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3"`, `"1/8"` or `"-2/5"`.
pub fn parse(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => text.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// JSON form of a rational: `{"num": "1", "den": "8"}`. Integers are kept as
/// strings so arbitrarily large values survive serialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRepr {
    pub num: String,
    pub den: String,
}

impl From<&Rational> for RationalRepr {
    fn from(r: &Rational) -> Self {
        RationalRepr {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }
}

impl RationalRepr {
    pub fn to_rational(&self) -> Option<Rational> {
        let n: BigInt = self.num.trim().parse().ok()?;
        let d: BigInt = self.den.trim().parse().ok()?;
        (!d.is_zero()).then(|| BigRational::new(n, d))
    }
}

/// serde adapter: writes `{"num","den"}`, reads that form, a bare integer, or
/// a `"p/q"` string.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        RationalRepr::from(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Any {
            Pair { num: NumOrStr, den: NumOrStr },
            Int(i64),
            Text(String),
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum NumOrStr {
            Num(i64),
            Str(String),
        }
        let text = |v: NumOrStr| match v {
            NumOrStr::Num(n) => n.to_string(),
            NumOrStr::Str(s) => s,
        };
        let bad = || serde::de::Error::custom("invalid rational");
        match Any::deserialize(d)? {
            Any::Pair { num, den } => RationalRepr {
                num: text(num),
                den: text(den),
            }
            .to_rational()
            .ok_or_else(bad),
            Any::Int(v) => Ok(int(v)),
            Any::Text(s) => parse(&s).ok_or_else(bad),
        }
    }
}

/// Rounds a float to six decimals for report output.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}
