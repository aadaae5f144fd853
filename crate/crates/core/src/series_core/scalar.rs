use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::Neg;

use crate::error::{Error, Result};

/// Exact coefficient field used by every symbolic module.
pub type Rational = BigRational;

/// Coefficient ring for the generic series and matrix containers.
///
/// Implemented for `f32`, `f64` and [`Rational`]. Zero tests are exact, so the
/// symbolic algorithms only give meaningful answers over `Rational`.
pub trait Scalar:
    Clone + PartialEq + Debug + Num + Neg<Output = Self> + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn magnitude(&self) -> f64 {
        self.to_f64().map(f64::abs).unwrap_or(f64::INFINITY)
    }
    fn from_int(k: i64) -> Self {
        Self::from_i64(k).expect("integer embeds in every scalar type")
    }
}

impl<T> Scalar for T where
    T: Clone + PartialEq + Debug + Num + Neg<Output = T> + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

/// `p/q` as a rational.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rint(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Renders a rational as `"p/q"`; integers are written `"p/1"`.
pub fn rat_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rat(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(p))
        }
    }
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    // Huge numerators or denominators: keep the top 60 bits of each.
    let a = r.numer().bits().saturating_sub(60);
    let b = r.denom().bits().saturating_sub(60);
    let num = (r.numer() >> a as usize).to_f64().unwrap_or(0.0);
    let den = (r.denom() >> b as usize).to_f64().unwrap_or(1.0);
    num / den * 2f64.powi(a as i32 - b as i32)
}

pub fn rat_floor(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

pub fn rat_ceil(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

pub fn is_positive(r: &Rational) -> bool {
    r.is_positive()
}

