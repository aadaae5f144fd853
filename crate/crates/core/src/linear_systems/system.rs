use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::series_core::json::{as_array, as_i64, as_usize, field};
use crate::series_core::{Json, Mat, Order, PolyMatrix, Rational, Series};
use crate::RPolyMatrix;

/// `x^{p+1} y' = A(x) y`.
#[derive(Clone, PartialEq, Debug)]
pub struct LinearSystem {
    pub n: usize,
    pub p: i64,
    pub a: RPolyMatrix,
}

impl LinearSystem {
    /// Checks `p >= -1` and, for a singular system, `A(0) != 0`.
    pub fn new(p: i64, a: RPolyMatrix) -> Result<Self> {
        if p < -1 {
            return Err(Error::Precondition(format!("Poincare rank {p} < -1")));
        }
        if p >= 0 && a.coeff(0).is_zero() {
            return Err(Error::Precondition("a singular system needs A(0) != 0".into()));
        }
        Ok(LinearSystem { n: a.n(), p, a })
    }

    /// Divides out the largest power of `x` allowed, lowering the rank (never below -1).
    pub fn normalized(p: i64, a: RPolyMatrix) -> Result<Self> {
        if p < 0 {
            return Ok(LinearSystem { n: a.n(), p, a });
        }
        let f = match a.order() {
            Order::Finite(v) => v.min(p as usize + 1),
            Order::Above(_) => p as usize + 1,
        };
        if f == 0 {
            return Ok(LinearSystem { n: a.n(), p, a });
        }
        let have = a.trunc();
        let a = a.exact_divide(f).map_err(|e| match e {
            Error::EmptyPrecision => Error::InsufficientPrecision { needed: f, have },
            e => e,
        })?;
        Ok(LinearSystem { n: a.n(), p: p - f as i64, a })
    }

    pub fn is_regular(&self) -> bool {
        self.p < 0
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum GaugeTransform {
    /// `y = P(x) z` with `P` polynomial and `P(0)` invertible.
    PolyRegular { p: RPolyMatrix },
    /// `y = diag(x^{k_1}, .., x^{k_n}) z`.
    DiagMonomial { k: Vec<u32> },
    /// `x = t^r`.
    Ramification { r: u32 },
}

impl GaugeTransform {
    pub fn name(&self) -> &'static str {
        match self {
            GaugeTransform::PolyRegular { .. } => "poly_regular",
            GaugeTransform::DiagMonomial { .. } => "diag_monomial",
            GaugeTransform::Ramification { .. } => "ramification",
        }
    }
}

/// Polynomial matrix coefficients of `P`, zero-padded to `trunc`.
fn as_polynomial(p: &RPolyMatrix, trunc: usize) -> RPolyMatrix {
    let k = p.trunc().min(trunc);
    PolyMatrix::from_coeffs(p.coeffs()[..=k].to_vec(), trunc).expect("square")
}

/// Whether `T` produces no pole when applied to `S`.
///
/// A diagonal monomial gauge is split into elementary steps
/// `diag(x I_S, I)` on the sets `S_t = {i : k_i >= t}`; step `t` needs every
/// entry coupling `S_t` to its complement to be divisible by `x` at that stage,
/// which amounts to `ord A_ij >= t - k_j` for `i in S_t`, `j` outside.
pub fn is_admissible(s: &LinearSystem, t: &GaugeTransform) -> Result<bool> {
    match t {
        GaugeTransform::PolyRegular { p } => {
            if p.n() != s.n {
                return Err(Error::ShapeError(format!("gauge is {}x{}, system is {}", p.n(), p.n(), s.n)));
            }
            Ok(true)
        }
        GaugeTransform::Ramification { r } => Ok(s.p >= 0 && *r >= 2),
        GaugeTransform::DiagMonomial { k } => {
            if k.len() != s.n {
                return Err(Error::ShapeError(format!("{} exponents for a system of size {}", k.len(), s.n)));
            }
            if k.iter().all(|&e| e == 0) {
                return Ok(false);
            }
            if s.p < 0 {
                return Ok(false);
            }
            let kmax = *k.iter().max().expect("nonempty");
            for step in 1..=kmax {
                for i in (0..s.n).filter(|&i| k[i] >= step) {
                    for j in (0..s.n).filter(|&j| k[j] < step) {
                        let need = (step - k[j]) as usize;
                        let e = s.a.entry(i, j);
                        match e.order() {
                            Order::Finite(v) if v < need => return Ok(false),
                            Order::Finite(_) => {}
                            Order::Above(tr) if tr + 1 < need => {
                                return Err(Error::InsufficientPrecision { needed: need - 1, have: tr })
                            }
                            Order::Above(_) => {}
                        }
                    }
                }
            }
            Ok(true)
        }
    }
}

/// Transformed system `x^{p~+1} z' = B z`, with the largest power of `x`
/// factored out of `B`.
pub fn apply_gauge(s: &LinearSystem, t: &GaugeTransform) -> Result<LinearSystem> {
    if !is_admissible(s, t)? {
        return Err(Error::Inadmissible(match t {
            GaugeTransform::Ramification { .. } => "ramification needs a singular system and r >= 2".into(),
            GaugeTransform::DiagMonomial { .. } => "diagonal monomial gauge creates a pole".into(),
            GaugeTransform::PolyRegular { .. } => unreachable!(),
        }));
    }
    match t {
        GaugeTransform::PolyRegular { p } => {
            let k = s.a.trunc();
            let pe = as_polynomial(p, k + 1);
            if pe.coeff(0).det() == Rational::from_integer(0.into()) {
                return Err(Error::NotRegular);
            }
            let pk = pe.truncate(k);
            let pinv = pk.inverse()?;
            let b1 = &(&pinv * &s.a) * &pk;
            let b2 = (&pinv * &pe.derivative()?).mul_xk((s.p + 1) as usize);
            LinearSystem::normalized(s.p, (&b1 - &b2).truncate(k))
        }
        GaugeTransform::DiagMonomial { k } => {
            let n = s.n;
            let mut entries: Vec<Vec<Series<Rational>>> = Vec::with_capacity(n);
            for i in 0..n {
                let mut row = Vec::with_capacity(n);
                for j in 0..n {
                    let e = s.a.entry(i, j);
                    let e = if k[j] >= k[i] {
                        e.mul_xk((k[j] - k[i]) as usize)
                    } else {
                        let have = e.trunc();
                        e.exact_divide((k[i] - k[j]) as usize).map_err(|err| match err {
                            Error::EmptyPrecision => {
                                Error::InsufficientPrecision { needed: (k[i] - k[j]) as usize, have }
                            }
                            err => err,
                        })?
                    };
                    row.push(e);
                }
                entries.push(row);
            }
            let mut b = PolyMatrix::from_entries(&entries)?;
            let p = s.p as usize;
            if p <= b.trunc() {
                let mut c = b.coeff(p).clone();
                for (i, &ki) in k.iter().enumerate() {
                    c[(i, i)] = c[(i, i)].clone() - Rational::from_integer(ki.into());
                }
                b.set_coeff(p, c);
            }
            LinearSystem::normalized(s.p, b)
        }
        GaugeTransform::Ramification { r } => {
            let r = *r as usize;
            let b = s.a.ramify(r).scale(&Rational::from_integer(r.into()));
            Ok(LinearSystem { n: s.n, p: s.p * r as i64, a: b })
        }
    }
}

/// Applies a chain of gauges in order.
pub fn replay(s: &LinearSystem, chain: &[GaugeTransform]) -> Result<LinearSystem> {
    chain.iter().try_fold(s.clone(), |acc, t| apply_gauge(&acc, t))
}

impl Json for LinearSystem {
    fn to_json(&self) -> Value {
        json!({"n": self.n, "p": self.p, "A": self.a.to_json()})
    }
    fn from_json(v: &Value) -> Result<Self> {
        let n = as_usize(field(v, "n")?)?;
        let p = as_i64(field(v, "p")?)?;
        let a = RPolyMatrix::from_json(field(v, "A")?)?;
        if a.n() != n {
            return Err(Error::Parse(format!("A is {}x{} but n = {n}", a.n(), a.n())));
        }
        LinearSystem::new(p, a)
    }
}

impl Json for GaugeTransform {
    fn to_json(&self) -> Value {
        match self {
            GaugeTransform::PolyRegular { p } => json!({"kind": self.name(), "P": p.to_json()}),
            GaugeTransform::DiagMonomial { k } => json!({"kind": self.name(), "k": k}),
            GaugeTransform::Ramification { r } => json!({"kind": self.name(), "r": r}),
        }
    }
    fn from_json(v: &Value) -> Result<Self> {
        let kind = field(v, "kind")?.as_str().ok_or_else(|| Error::Parse("kind must be a string".into()))?;
        match kind {
            "poly_regular" => Ok(GaugeTransform::PolyRegular { p: RPolyMatrix::from_json(field(v, "P")?)? }),
            "diag_monomial" => {
                let k = as_array(field(v, "k")?)?.iter().map(|e| as_usize(e).map(|x| x as u32)).collect::<Result<_>>()?;
                Ok(GaugeTransform::DiagMonomial { k })
            }
            "ramification" => Ok(GaugeTransform::Ramification { r: as_usize(field(v, "r")?)? as u32 }),
            other => Err(Error::Parse(format!("unknown gauge kind {other:?}"))),
        }
    }
}

/// Constant gauge `y = T z`.
pub fn constant_gauge(t: &Mat<Rational>) -> GaugeTransform {
    GaugeTransform::PolyRegular { p: PolyMatrix::constant(t.clone(), 0) }
}
