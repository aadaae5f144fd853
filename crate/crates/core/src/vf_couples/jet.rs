//! Vector field jets, formal curves and the invariance test.

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::series_core::json::{as_usize, field};
use crate::series_core::{Json, MultiSeries, Order, Series};
use crate::{RMultiSeries, RSeries};

/// `xi = xi_x d/dx + sum xi_{y_i} d/dy_i`, every component known through total degree `K`.
#[derive(Clone, PartialEq, Debug)]
pub struct VectorFieldJet {
    pub n: usize,
    pub xi_x: RMultiSeries,
    pub xi_y: Vec<RMultiSeries>,
}

impl VectorFieldJet {
    /// Brings all components to their common (smallest) truncation order.
    pub fn new(xi_x: RMultiSeries, xi_y: Vec<RMultiSeries>) -> Result<Self> {
        let n = xi_y.len();
        if xi_x.n() != n || xi_y.iter().any(|c| c.n() != n) {
            return Err(Error::ShapeError(format!("field components must all live in 1+{n} variables")));
        }
        let k = xi_y.iter().map(MultiSeries::trunc).fold(xi_x.trunc(), usize::min);
        Ok(VectorFieldJet { n, xi_x: xi_x.truncate(k), xi_y: xi_y.iter().map(|c| c.truncate(k)).collect() })
    }

    pub fn trunc(&self) -> usize {
        self.xi_x.trunc()
    }

    pub fn truncate(&self, k: usize) -> Self {
        VectorFieldJet { n: self.n, xi_x: self.xi_x.truncate(k), xi_y: self.xi_y.iter().map(|c| c.truncate(k)).collect() }
    }

    /// Components in the order `x, y_1, .., y_n`.
    pub fn components(&self) -> impl Iterator<Item = &RMultiSeries> {
        std::iter::once(&self.xi_x).chain(self.xi_y.iter())
    }

    /// Whether every component vanishes at the origin.
    pub fn vanishes_at_origin(&self) -> bool {
        let zero = vec![0u32; self.n + 1];
        self.components().all(|c| c.coeff(&zero).is_zero())
    }
}

/// The curve `y = gamma(x)`, with `gamma(0) = 0`.
#[derive(Clone, PartialEq, Debug)]
pub struct FormalCurve {
    pub gamma_y: Vec<RSeries>,
}

impl FormalCurve {
    pub fn new(gamma_y: Vec<RSeries>) -> Result<Self> {
        if let Some(i) = gamma_y.iter().position(|g| !g.coeff(0).is_zero()) {
            return Err(Error::Precondition(format!("curve component {i} does not pass through the origin")));
        }
        Ok(FormalCurve { gamma_y })
    }

    pub fn zero(n: usize, trunc: usize) -> Self {
        FormalCurve { gamma_y: vec![Series::zero(trunc); n] }
    }

    pub fn n(&self) -> usize {
        self.gamma_y.len()
    }

    pub fn trunc(&self) -> usize {
        self.gamma_y.iter().map(Series::trunc).min().unwrap_or(usize::MAX)
    }

    /// `ord_x(gamma_y)`.
    pub fn contact_order(&self) -> Order {
        let mut best: Option<usize> = None;
        for g in &self.gamma_y {
            if let Order::Finite(k) = g.order() {
                best = Some(best.map_or(k, |b: usize| b.min(k)));
            }
        }
        match best {
            Some(k) => Order::Finite(k),
            None => Order::Above(self.trunc()),
        }
    }

    /// `j_k gamma` as a polynomial.
    pub fn jet(&self, k: usize) -> Vec<RSeries> {
        self.gamma_y.iter().map(|g| g.truncate(k)).collect()
    }

    pub fn truncate(&self, k: usize) -> Self {
        FormalCurve { gamma_y: self.gamma_y.iter().map(|g| g.truncate(k)).collect() }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct InvariantCouple {
    pub vf: VectorFieldJet,
    pub curve: FormalCurve,
}

impl InvariantCouple {
    pub fn new(vf: VectorFieldJet, curve: FormalCurve) -> Result<Self> {
        if vf.n != curve.n() {
            return Err(Error::ShapeError(format!("field has n = {}, curve has n = {}", vf.n, curve.n())));
        }
        Ok(InvariantCouple { vf, curve })
    }

    pub fn n(&self) -> usize {
        self.vf.n
    }

    /// Common working truncation: the field to `k`, the curve to `k` as well.
    pub fn truncate(&self, k: usize) -> Self {
        InvariantCouple { vf: self.vf.truncate(k), curve: self.curve.truncate(k) }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Invariance {
    pub holds: bool,
    /// Order through which the identity was checked.
    pub verified_order: usize,
    /// First order at which the identity fails.
    pub failure: Option<usize>,
    /// `ord_x(xi_x o gamma)`.
    pub m: Option<usize>,
}

/// Tests `(xi_x o gamma) gamma' = xi_y o gamma` coefficientwise.
pub fn check_invariance(c: &InvariantCouple) -> Result<Invariance> {
    let gx = c.vf.xi_x.substitute_curve(&c.curve.gamma_y)?;
    let mut all_zero = gx.is_zero();
    let mut verified = usize::MAX;
    let mut failure: Option<usize> = None;
    for (xi, g) in c.vf.xi_y.iter().zip(&c.curve.gamma_y) {
        let gy = xi.substitute_curve(&c.curve.gamma_y)?;
        all_zero &= gy.is_zero();
        let w = &(&gx * &g.derivative()?) - &gy;
        verified = verified.min(w.trunc());
        if let Order::Finite(k) = w.order() {
            failure = Some(failure.map_or(k, |f| f.min(k)));
        }
    }
    if c.n() == 0 {
        verified = gx.trunc();
    }
    if all_zero {
        return Err(Error::DegenerateCurve);
    }
    Ok(Invariance { holds: failure.is_none(), verified_order: verified, failure, m: gx.order().finite() })
}

impl Json for VectorFieldJet {
    fn to_json(&self) -> Value {
        json!({"n": self.n, "K": self.trunc(), "xi_x": self.xi_x.to_json(), "xi_y": self.xi_y.to_json()})
    }
    fn from_json(v: &Value) -> Result<Self> {
        let xi_x = RMultiSeries::from_json(field(v, "xi_x")?)?;
        let xi_y = Vec::<RMultiSeries>::from_json(field(v, "xi_y")?)?;
        if let Some(n) = v.get("n") {
            if as_usize(n)? != xi_y.len() {
                return Err(Error::Parse("n disagrees with the number of y components".into()));
            }
        }
        let vf = VectorFieldJet::new(xi_x, xi_y).map_err(|e| Error::Parse(e.to_string()))?;
        match v.get("K") {
            Some(k) => Ok(vf.truncate(as_usize(k)?)),
            None => Ok(vf),
        }
    }
}

impl Json for FormalCurve {
    fn to_json(&self) -> Value {
        json!({"gamma_y": self.gamma_y.to_json()})
    }
    fn from_json(v: &Value) -> Result<Self> {
        FormalCurve::new(Vec::<RSeries>::from_json(field(v, "gamma_y")?)?).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl Json for InvariantCouple {
    fn to_json(&self) -> Value {
        json!({"vf": self.vf.to_json(), "curve": self.curve.to_json()})
    }
    fn from_json(v: &Value) -> Result<Self> {
        let vf = VectorFieldJet::from_json(field(v, "vf")?)?;
        let curve = match v.get("curve") {
            Some(c) => FormalCurve::from_json(c)?,
            None => FormalCurve::zero(vf.n, vf.trunc()),
        };
        InvariantCouple::new(vf, curve).map_err(|e| Error::Parse(e.to_string()))
    }
}
