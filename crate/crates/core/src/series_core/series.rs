//! Univariate power series known through a finite order.
//!
//! A `Series` with truncation order `K` stores the coefficients of
//! `x^0 .. x^K`; everything above `K` is unknown rather than zero. Every
//! operation returns the largest truncation order it can justify.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::scalar::Scalar;
use crate::error::{need, Error, Result};

#[derive(Clone, PartialEq, Debug)]
pub struct Series<T> {
    coeffs: Vec<T>,
    trunc: usize,
}

/// Order of a truncated series: either the index of the first nonzero
/// coefficient, or "above K" when every known coefficient vanishes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Order {
    Finite(usize),
    Above(usize),
}

impl Order {
    pub fn finite(self) -> Option<usize> {
        match self {
            Order::Finite(k) => Some(k),
            Order::Above(_) => None,
        }
    }

    /// True when the order is known to be at least `k`.
    pub fn at_least(self, k: usize) -> bool {
        match self {
            Order::Finite(v) => v >= k,
            Order::Above(t) => t + 1 >= k,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(k) => write!(f, "{k}"),
            Order::Above(k) => write!(f, ">{k}"),
        }
    }
}

impl<T: Scalar> Series<T> {
    /// Builds a series from leading coefficients; missing ones up to `trunc`
    /// are zero and extra ones are dropped.
    pub fn new(mut coeffs: Vec<T>, trunc: usize) -> Self {
        coeffs.resize(trunc + 1, T::zero());
        Series { coeffs, trunc }
    }

    pub fn zero(trunc: usize) -> Self {
        Series { coeffs: vec![T::zero(); trunc + 1], trunc }
    }

    pub fn one(trunc: usize) -> Self {
        Self::constant(T::one(), trunc)
    }

    pub fn constant(c: T, trunc: usize) -> Self {
        Self::new(vec![c], trunc)
    }

    /// `c x^k`, known through `trunc` (zero if `k > trunc`).
    pub fn monomial(c: T, k: usize, trunc: usize) -> Self {
        let mut s = Self::zero(trunc);
        if k <= trunc {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `x^k`; panics when `k` is beyond the truncation order.
    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn get(&self, k: usize) -> Option<&T> {
        self.coeffs.get(k)
    }

    pub fn set(&mut self, k: usize, c: T) {
        self.coeffs[k] = c;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn order(&self) -> Order {
        match self.coeffs.iter().position(|c| !c.is_zero()) {
            Some(k) => Order::Finite(k),
            None => Order::Above(self.trunc),
        }
    }

    /// Keeps only degrees `<= k`, and lowers the truncation order to `k`.
    pub fn truncate(&self, k: usize) -> Self {
        let k = k.min(self.trunc);
        Series { coeffs: self.coeffs[..=k].to_vec(), trunc: k }
    }

    /// Jet `j_k f`: terms above `k` discarded, truncation order kept.
    pub fn jet(&self, k: usize) -> Self {
        let mut s = self.clone();
        for c in s.coeffs.iter_mut().skip(k + 1) {
            *c = T::zero();
        }
        s
    }

    /// Same coefficients, claimed known through a larger order. Only sound
    /// for data that really is polynomial.
    pub fn extend_exact(&self, trunc: usize) -> Self {
        Self::new(self.coeffs.clone(), trunc.max(self.trunc))
    }

    pub fn ord_jet(&self, k: usize) -> Result<(Order, Self)> {
        need(k, self.trunc)?;
        Ok((self.order(), self.jet(k)))
    }

    pub fn scale(&self, c: &T) -> Self {
        Series { coeffs: self.coeffs.iter().map(|a| a.clone() * c.clone()).collect(), trunc: self.trunc }
    }

    /// Multiplication by `x^k`; the truncation order grows by `k`.
    pub fn mul_xk(&self, k: usize) -> Self {
        let mut coeffs = vec![T::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Series { coeffs, trunc: self.trunc + k }
    }

    /// Division by `x^k`, failing on any nonzero coefficient below `x^k`.
    pub fn exact_divide(&self, k: usize) -> Result<Self> {
        if let Some(j) = self.coeffs.iter().take(k).position(|c| !c.is_zero()) {
            return Err(Error::NotDivisible { order: j });
        }
        if k > self.trunc {
            return Err(Error::EmptyPrecision);
        }
        Ok(Series { coeffs: self.coeffs[k..].to_vec(), trunc: self.trunc - k })
    }

    pub fn derivative(&self) -> Result<Self> {
        if self.trunc == 0 {
            return Err(Error::EmptyPrecision);
        }
        let coeffs = (1..=self.trunc).map(|k| self.coeffs[k].clone() * T::from_int(k as i64)).collect();
        Ok(Series { coeffs, trunc: self.trunc - 1 })
    }

    /// `1/f` for a unit `f`.
    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = &self.coeffs[0];
        if a0.is_zero() {
            return Err(Error::UnitRequired);
        }
        let inv0 = T::one() / a0.clone();
        let mut out: Vec<T> = Vec::with_capacity(self.trunc + 1);
        out.push(inv0.clone());
        for k in 1..=self.trunc {
            let mut acc = T::zero();
            for j in 1..=k {
                if !self.coeffs[j].is_zero() {
                    acc = acc + self.coeffs[j].clone() * out[k - j].clone();
                }
            }
            out.push(-(acc * inv0.clone()));
        }
        Ok(Series { coeffs: out, trunc: self.trunc })
    }

    /// `f(g(x))` for `g(0) = 0`.
    ///
    /// With `v = ord g`, unknown terms of `f` enter at degree `(K_f+1) v` and
    /// unknown terms of `g` at degree `K_g + 1`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeffs[0].is_zero() {
            return Err(Error::Precondition("inner series of a composition must vanish at 0".into()));
        }
        let v = inner.order().finite().unwrap_or(inner.trunc + 1);
        let trunc = ((self.trunc + 1) * v).saturating_sub(1).min(inner.trunc);
        let g = inner.truncate(trunc);
        let mut out = Series::constant(self.coeffs[0].clone(), trunc);
        let mut pow = Series::one(trunc);
        for k in 1..=self.trunc {
            if k * v > trunc {
                break;
            }
            pow = &pow * &g;
            if !self.coeffs[k].is_zero() {
                out = &out + &pow.scale(&self.coeffs[k]);
            }
        }
        Ok(out)
    }

    /// Substitutes `x -> x^r`.
    pub fn ramify(&self, r: usize) -> Self {
        assert!(r >= 1);
        let trunc = (self.trunc + 1) * r - 1;
        let mut s = Self::zero(trunc);
        for (k, c) in self.coeffs.iter().enumerate() {
            s.coeffs[k * r] = c.clone();
        }
        s
    }

    /// Highest degree with a nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn eval(&self, x: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Series<U> {
        Series { coeffs: self.coeffs.iter().map(f).collect(), trunc: self.trunc }
    }

    fn binary(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        let trunc = self.trunc.min(other.trunc);
        Series { coeffs: (0..=trunc).map(|k| f(&self.coeffs[k], &other.coeffs[k])).collect(), trunc }
    }
}

impl<T: Scalar> Add for &Series<T> {
    type Output = Series<T>;
    fn add(self, rhs: Self) -> Series<T> {
        self.binary(rhs, |a, b| a.clone() + b.clone())
    }
}

impl<T: Scalar> Sub for &Series<T> {
    type Output = Series<T>;
    fn sub(self, rhs: Self) -> Series<T> {
        self.binary(rhs, |a, b| a.clone() - b.clone())
    }
}

impl<T: Scalar> Neg for &Series<T> {
    type Output = Series<T>;
    fn neg(self) -> Series<T> {
        Series { coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(), trunc: self.trunc }
    }
}

impl<T: Scalar> Mul for &Series<T> {
    type Output = Series<T>;
    /// Truncation follows the factor orders: `min(K_a + ord b, K_b + ord a)`.
    fn mul(self, rhs: Self) -> Series<T> {
        let va = self.order().finite().unwrap_or(self.trunc + 1);
        let vb = rhs.order().finite().unwrap_or(rhs.trunc + 1);
        let trunc = (self.trunc + vb).min(rhs.trunc + va);
        let mut out = vec![T::zero(); trunc + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i > trunc {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j > trunc {
                    break;
                }
                if !b.is_zero() {
                    out[i + j] = out[i + j].clone() + a.clone() * b.clone();
                }
            }
        }
        Series { coeffs: out, trunc }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<T: Scalar> $tr for Series<T> {
            type Output = Series<T>;
            fn $m(self, rhs: Self) -> Series<T> {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
