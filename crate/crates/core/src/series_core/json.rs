//! JSON encoding of the exact containers.
//!
//! Rationals are strings `"p/q"` (a bare `"p"` is accepted on input).
//! A series is `{"trunc": K, "coeffs": [..]}`, a multi-series is
//! `{"n": n, "trunc": K, "terms": [{"alpha": [a0, .., an], "c": "p/q"}]}` and a
//! polynomial matrix is `{"n": n, "trunc": K, "coeffs": [M0, M1, ..]}` where
//! `Mk` is the row-major coefficient matrix of `x^k`.

use serde_json::{json, Value};

use super::blocks::BlockStructure;
use super::matrix::{Mat, PolyMatrix};
use super::multi::MultiSeries;
use super::scalar::{parse_rat, rat_to_string, Rational};
use super::series::Series;
use crate::error::{Error, Result};

pub trait Json: Sized {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| perr(format!("missing field {key:?}")))
}

pub fn as_usize(v: &Value) -> Result<usize> {
    v.as_u64().map(|k| k as usize).ok_or_else(|| perr(format!("expected a non-negative integer, got {v}")))
}

pub fn as_i64(v: &Value) -> Result<i64> {
    v.as_i64().ok_or_else(|| perr(format!("expected an integer, got {v}")))
}

pub fn as_array(v: &Value) -> Result<&Vec<Value>> {
    v.as_array().ok_or_else(|| perr(format!("expected an array, got {v}")))
}

impl Json for Rational {
    fn to_json(&self) -> Value {
        Value::String(rat_to_string(self))
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rat(s),
            Value::Number(k) if k.is_i64() => Ok(super::scalar::rint(k.as_i64().expect("checked"))),
            _ => Err(perr(format!("expected a rational string, got {v}"))),
        }
    }
}

impl<T: Json> Json for Vec<T> {
    fn to_json(&self) -> Value {
        Value::Array(self.iter().map(Json::to_json).collect())
    }
    fn from_json(v: &Value) -> Result<Self> {
        as_array(v)?.iter().map(T::from_json).collect()
    }
}

impl Json for Series<Rational> {
    fn to_json(&self) -> Value {
        json!({"trunc": self.trunc(), "coeffs": self.coeffs().to_vec().to_json()})
    }
    fn from_json(v: &Value) -> Result<Self> {
        let trunc = as_usize(field(v, "trunc")?)?;
        let coeffs = Vec::<Rational>::from_json(field(v, "coeffs")?)?;
        if coeffs.len() > trunc + 1 {
            return Err(perr("series has more coefficients than its truncation order allows"));
        }
        Ok(Series::new(coeffs, trunc))
    }
}

impl Json for MultiSeries<Rational> {
    fn to_json(&self) -> Value {
        let terms: Vec<Value> =
            self.terms().iter().map(|(a, c)| json!({"alpha": a, "c": rat_to_string(c)})).collect();
        json!({"n": self.n(), "trunc": self.trunc(), "terms": terms})
    }
    fn from_json(v: &Value) -> Result<Self> {
        let n = as_usize(field(v, "n")?)?;
        let trunc = as_usize(field(v, "trunc")?)?;
        let mut terms = Vec::new();
        for t in as_array(field(v, "terms")?)? {
            let alpha: Vec<u32> = as_array(field(t, "alpha")?)?
                .iter()
                .map(|e| as_usize(e).map(|k| k as u32))
                .collect::<Result<_>>()?;
            terms.push((alpha, Rational::from_json(field(t, "c")?)?));
        }
        MultiSeries::from_terms(n, trunc, terms).map_err(|e| perr(e.to_string()))
    }
}

impl Json for Mat<Rational> {
    fn to_json(&self) -> Value {
        self.to_rows().to_json()
    }
    fn from_json(v: &Value) -> Result<Self> {
        let rows = Vec::<Vec<Rational>>::from_json(v)?;
        Mat::from_rows(rows).map_err(|e| perr(e.to_string()))
    }
}

impl Json for PolyMatrix<Rational> {
    fn to_json(&self) -> Value {
        json!({"n": self.n(), "trunc": self.trunc(), "coeffs": self.coeffs().to_vec().to_json()})
    }
    fn from_json(v: &Value) -> Result<Self> {
        let n = as_usize(field(v, "n")?)?;
        let trunc = as_usize(field(v, "trunc")?)?;
        let coeffs = Vec::<Mat<Rational>>::from_json(field(v, "coeffs")?)?;
        if coeffs.iter().any(|m| m.rows() != n || m.cols() != n) {
            return Err(perr(format!("coefficient matrices must be {n}x{n}")));
        }
        if coeffs.len() > trunc + 1 {
            return Err(perr("matrix has more coefficients than its truncation order allows"));
        }
        let coeffs = if coeffs.is_empty() { vec![Mat::zeros(n, n)] } else { coeffs };
        PolyMatrix::from_coeffs(coeffs, trunc).map_err(|e| perr(e.to_string()))
    }
}

impl Json for BlockStructure {
    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("plain data")
    }
    fn from_json(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| perr(e.to_string()))
    }
}

pub fn to_string_pretty<T: Json>(x: &T) -> String {
    serde_json::to_string_pretty(&x.to_json()).expect("json values always serialize")
}

pub fn from_str<T: Json>(s: &str) -> Result<T> {
    let v: Value = serde_json::from_str(s).map_err(|e| perr(e.to_string()))?;
    T::from_json(&v)
}
