//! Sparse power series in `(x, y_1, .., y_n)` with total-degree truncation.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::scalar::Scalar;
use super::series::{Order, Series};
use crate::error::{need, Error, Result};

/// Exponent vector `(a_0, a_1, .., a_n)` for `x^{a_0} y_1^{a_1} .. y_n^{a_n}`.
pub type Alpha = Vec<u32>;

fn degree(a: &[u32]) -> usize {
    a.iter().map(|&e| e as usize).sum()
}

#[derive(Clone, PartialEq, Debug)]
pub struct MultiSeries<T> {
    terms: BTreeMap<Alpha, T>,
    n: usize,
    trunc: usize,
}

impl<T: Scalar> MultiSeries<T> {
    pub fn zero(n: usize, trunc: usize) -> Self {
        MultiSeries { terms: BTreeMap::new(), n, trunc }
    }

    /// Collects terms, dropping zeros and anything of total degree above `trunc`.
    pub fn from_terms(n: usize, trunc: usize, terms: impl IntoIterator<Item = (Alpha, T)>) -> Result<Self> {
        let mut s = Self::zero(n, trunc);
        for (a, c) in terms {
            if a.len() != n + 1 {
                return Err(Error::ShapeError(format!("exponent {a:?} does not have length {}", n + 1)));
            }
            s.add_term(a, c);
        }
        Ok(s)
    }

    pub fn constant(n: usize, trunc: usize, c: T) -> Self {
        let mut s = Self::zero(n, trunc);
        s.add_term(vec![0; n + 1], c);
        s
    }

    /// The coordinate function: `i = 0` is `x`, `i >= 1` is `y_i`.
    pub fn var(n: usize, trunc: usize, i: usize) -> Self {
        let mut a = vec![0; n + 1];
        a[i] = 1;
        let mut s = Self::zero(n, trunc);
        s.add_term(a, T::one());
        s
    }

    pub fn monomial(n: usize, trunc: usize, a: Alpha, c: T) -> Self {
        let mut s = Self::zero(n, trunc);
        s.add_term(a, c);
        s
    }

    /// Embeds a series in `x`; coefficient `x^k` keeps degree `k`.
    pub fn from_x_series(n: usize, f: &Series<T>) -> Self {
        let mut s = Self::zero(n, f.trunc());
        for (k, c) in f.coeffs().iter().enumerate() {
            let mut a = vec![0; n + 1];
            a[0] = k as u32;
            s.add_term(a, c.clone());
        }
        s
    }

    /// Adds `c (x,y)^a` in place.
    pub fn add_term(&mut self, a: Alpha, c: T) {
        if c.is_zero() || degree(&a) > self.trunc {
            return;
        }
        let v = match self.terms.remove(&a) {
            Some(old) => old + c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(a, v);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn terms(&self) -> &BTreeMap<Alpha, T> {
        &self.terms
    }

    pub fn coeff(&self, a: &[u32]) -> T {
        self.terms.get(a).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest total degree present.
    pub fn order(&self) -> Order {
        match self.terms.keys().map(|a| degree(a)).min() {
            Some(d) => Order::Finite(d),
            None => Order::Above(self.trunc),
        }
    }

    /// Lowest power of `x` present among the stored terms.
    pub fn ord_x(&self) -> Order {
        match self.terms.keys().map(|a| a[0] as usize).min() {
            Some(d) => Order::Finite(d),
            None => Order::Above(self.trunc),
        }
    }

    /// Highest total degree in `y` among stored terms.
    pub fn degree_y(&self) -> usize {
        self.terms.keys().map(|a| degree(&a[1..])).max().unwrap_or(0)
    }

    pub fn truncate(&self, k: usize) -> Self {
        let k = k.min(self.trunc);
        let terms = self.terms.iter().filter(|(a, _)| degree(a) <= k).map(|(a, c)| (a.clone(), c.clone())).collect();
        MultiSeries { terms, n: self.n, trunc: k }
    }

    pub fn jet(&self, k: usize) -> Self {
        let terms = self.terms.iter().filter(|(a, _)| degree(a) <= k).map(|(a, c)| (a.clone(), c.clone())).collect();
        MultiSeries { terms, n: self.n, trunc: self.trunc }
    }

    pub fn ord_jet(&self, k: usize) -> Result<(Order, Self)> {
        need(k, self.trunc)?;
        Ok((self.order(), self.jet(k)))
    }

    /// Re-labels the truncation order of data that is known to be polynomial.
    pub fn with_trunc(&self, trunc: usize) -> Self {
        self.truncate(trunc).relabel(trunc)
    }

    fn relabel(mut self, trunc: usize) -> Self {
        self.trunc = trunc;
        self
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero(self.n, self.trunc);
        }
        let terms = self.terms.iter().map(|(a, v)| (a.clone(), v.clone() * c.clone())).collect();
        MultiSeries { terms, n: self.n, trunc: self.trunc }
    }

    /// Multiplication by the monomial `x^k`; the truncation order grows by `k`.
    pub fn mul_xk(&self, k: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(a, v)| {
                let mut b = a.clone();
                b[0] += k as u32;
                (b, v.clone())
            })
            .collect();
        MultiSeries { terms, n: self.n, trunc: self.trunc + k }
    }

    /// Division by `x^k`; every term must carry at least `x^k`.
    pub fn exact_divide_x(&self, k: usize) -> Result<Self> {
        if let Some(a) = self.terms.keys().find(|a| (a[0] as usize) < k) {
            return Err(Error::NotDivisible { order: a[0] as usize });
        }
        if k > self.trunc {
            return Err(Error::EmptyPrecision);
        }
        let terms = self
            .terms
            .iter()
            .map(|(a, v)| {
                let mut b = a.clone();
                b[0] -= k as u32;
                (b, v.clone())
            })
            .collect();
        Ok(MultiSeries { terms, n: self.n, trunc: self.trunc - k })
    }

    /// Partial derivative with respect to variable `i` (0 is `x`).
    pub fn partial(&self, i: usize) -> Result<Self> {
        if self.trunc == 0 {
            return Err(Error::EmptyPrecision);
        }
        let mut out = Self::zero(self.n, self.trunc - 1);
        for (a, c) in &self.terms {
            if a[i] > 0 {
                let mut b = a.clone();
                b[i] -= 1;
                out.add_term(b, c.clone() * T::from_int(a[i] as i64));
            }
        }
        Ok(out)
    }

    /// Coefficient of `y^beta` as a series in `x`, known through `K - |beta|`.
    pub fn y_coeff(&self, beta: &[u32]) -> Result<Series<T>> {
        let db = degree(beta);
        if db > self.trunc {
            return Err(Error::EmptyPrecision);
        }
        let t = self.trunc - db;
        let mut s = Series::zero(t);
        for (a, c) in &self.terms {
            if &a[1..] == beta {
                s.set(a[0] as usize, c.clone());
            }
        }
        Ok(s)
    }

    /// Terms of `y`-degree exactly `d`.
    pub fn y_homogeneous(&self, d: usize) -> Self {
        let terms = self.terms.iter().filter(|(a, _)| degree(&a[1..]) == d).map(|(a, c)| (a.clone(), c.clone())).collect();
        MultiSeries { terms, n: self.n, trunc: self.trunc }
    }

    /// Multiplicative inverse of a unit.
    pub fn reciprocal(&self) -> Result<Self> {
        let zero = vec![0; self.n + 1];
        let u0 = self.coeff(&zero);
        if u0.is_zero() {
            return Err(Error::UnitRequired);
        }
        let inv0 = T::one() / u0.clone();
        let mut w = self.scale(&inv0);
        w.add_term(zero.clone(), -T::one());
        if w.is_zero() {
            return Ok(Self::constant(self.n, self.trunc, inv0));
        }
        // 1/(1+w) = sum (-w)^k; w has order >= 1 so K terms suffice.
        let minus_w = -&w;
        let mut acc = Self::constant(self.n, self.trunc, T::one());
        let mut pow = acc.clone();
        for _ in 1..=self.trunc {
            pow = (&pow * &minus_w).truncate(self.trunc);
            if pow.is_zero() {
                break;
            }
            acc = &acc + &pow;
        }
        Ok(acc.scale(&inv0))
    }

    /// `f(s_0, s_1, .., s_n)` where every substitute vanishes at the origin.
    ///
    /// The substitutes may live in a different number of variables; the
    /// result is known through `min(K_f, K_s)`.
    pub fn compose(&self, subs: &[MultiSeries<T>]) -> Result<Self> {
        if subs.len() != self.n + 1 {
            return Err(Error::ShapeError(format!("composition needs {} substitutes, got {}", self.n + 1, subs.len())));
        }
        let m = subs[0].n;
        let zero = vec![0u32; m + 1];
        for s in subs {
            if s.n != m {
                return Err(Error::ShapeError("substitutes must share their variables".into()));
            }
            if !s.coeff(&zero).is_zero() {
                return Err(Error::Precondition("substitutes must vanish at the origin".into()));
            }
        }
        let trunc = subs.iter().map(|s| s.trunc).min().unwrap_or(self.trunc).min(self.trunc);
        let subs: Vec<Self> = subs.iter().map(|s| s.truncate(trunc)).collect();
        let mut powers: Vec<Vec<Self>> = subs.iter().map(|_| vec![Self::constant(m, trunc, T::one())]).collect();
        let mut out = Self::zero(m, trunc);
        for (a, c) in &self.terms {
            let mut term = Self::constant(m, trunc, c.clone());
            for (i, &e) in a.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = (powers[i].last().expect("nonempty") * &subs[i]).truncate(trunc);
                    powers[i].push(next);
                }
                term = (&term * &powers[i][e as usize]).truncate(trunc);
                if term.is_zero() {
                    break;
                }
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// `f(x, gamma(x))` for a curve with `gamma(0) = 0`.
    pub fn substitute_curve(&self, gamma: &[Series<T>]) -> Result<Series<T>> {
        if gamma.len() != self.n {
            return Err(Error::ShapeError("curve dimension mismatch".into()));
        }
        for g in gamma {
            if !g.coeff(0).is_zero() {
                return Err(Error::Precondition("curve must pass through the origin".into()));
            }
        }
        let trunc = gamma.iter().map(|g| g.trunc()).min().unwrap_or(self.trunc).min(self.trunc);
        let gamma: Vec<Series<T>> = gamma.iter().map(|g| g.truncate(trunc)).collect();
        let mut powers: Vec<Vec<Series<T>>> = gamma.iter().map(|_| vec![Series::one(trunc)]).collect();
        let mut out = Series::zero(trunc);
        for (a, c) in &self.terms {
            if a[0] as usize > trunc {
                continue;
            }
            let mut term = Series::monomial(c.clone(), a[0] as usize, trunc);
            for (i, &e) in a[1..].iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = (powers[i].last().expect("nonempty") * &gamma[i]).truncate(trunc);
                    powers[i].push(next);
                }
                term = (&term * &powers[i][e as usize]).truncate(trunc);
            }
            out = &out + &term;
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[T]) -> T {
        let mut acc = T::zero();
        for (a, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in a.iter().enumerate() {
                for _ in 0..e {
                    t = t * point[i].clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MultiSeries<U> {
        let terms = self.terms.iter().map(|(a, c)| (a.clone(), f(c))).filter(|(_, c)| !c.is_zero()).collect();
        MultiSeries { terms, n: self.n, trunc: self.trunc }
    }

    fn merge(&self, other: &Self, sign: bool) -> Self {
        assert_eq!(self.n, other.n, "multi-series variable count mismatch");
        let trunc = self.trunc.min(other.trunc);
        let mut out = self.truncate(trunc);
        for (a, c) in &other.terms {
            out.add_term(a.clone(), if sign { c.clone() } else { -c.clone() });
        }
        out
    }
}

impl<T: Scalar> Add for &MultiSeries<T> {
    type Output = MultiSeries<T>;
    fn add(self, rhs: Self) -> MultiSeries<T> {
        self.merge(rhs, true)
    }
}

impl<T: Scalar> Sub for &MultiSeries<T> {
    type Output = MultiSeries<T>;
    fn sub(self, rhs: Self) -> MultiSeries<T> {
        self.merge(rhs, false)
    }
}

impl<T: Scalar> Neg for &MultiSeries<T> {
    type Output = MultiSeries<T>;
    fn neg(self) -> MultiSeries<T> {
        self.scale(&-T::one())
    }
}

impl<T: Scalar> Mul for &MultiSeries<T> {
    type Output = MultiSeries<T>;
    /// Truncation: `min(K_a + ord b, K_b + ord a)` in total degree.
    fn mul(self, rhs: Self) -> MultiSeries<T> {
        assert_eq!(self.n, rhs.n, "multi-series variable count mismatch");
        let va = self.order().finite().unwrap_or(self.trunc + 1);
        let vb = rhs.order().finite().unwrap_or(rhs.trunc + 1);
        let trunc = (self.trunc + vb).min(rhs.trunc + va);
        let mut acc: BTreeMap<Alpha, T> = BTreeMap::new();
        for (a, c) in &self.terms {
            let da = degree(a);
            for (b, d) in &rhs.terms {
                if da + degree(b) > trunc {
                    continue;
                }
                let key: Alpha = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let e = acc.entry(key).or_insert_with(T::zero);
                *e = e.clone() + c.clone() * d.clone();
            }
        }
        acc.retain(|_, v| !v.is_zero());
        MultiSeries { terms: acc, n: self.n, trunc }
    }
}
