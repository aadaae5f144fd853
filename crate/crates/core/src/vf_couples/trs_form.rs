//! Reading a vector field jet as `x^e u [x^{q+1} d/dx + ((D + x^q C) y + x^{q+1+N} V(x, x^M y)) d/dy]`.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use super::jet::VectorFieldJet;
use crate::error::{Error, Result};
use crate::linear_systems::{exponential_matrix, recognize_trs, Exponent, LinearSystem, TRSLinearForm};
use crate::series_core::json::{as_usize, field};
use crate::series_core::{BlockStructure, Json, MultiSeries, Order, PolyMatrix, Rational};
use crate::{RMat, RMultiSeries, RPolyMatrix};

#[derive(Clone, PartialEq, Debug)]
pub struct TRSVFForm {
    pub e: usize,
    pub q: usize,
    pub n_order: usize,
    pub m_order: usize,
    pub bs: BlockStructure,
    pub exps: Vec<Exponent>,
    pub d: RPolyMatrix,
    pub c: RMat,
    /// Vestigial part `V(x, y)`, one component per coordinate.
    pub v: Vec<RMultiSeries>,
    /// Jet of the unit `u`.
    pub unit: RMultiSeries,
    /// False when `u = 1` to the known order.
    pub unit_present: bool,
}

impl TRSVFForm {
    pub fn n(&self) -> usize {
        self.c.rows()
    }

    /// The linear data as a linear TRS form with empty vestigial part.
    pub fn linear(&self) -> TRSLinearForm {
        let n = self.n();
        TRSLinearForm {
            q: self.q,
            bs: self.bs.clone(),
            exps: self.exps.clone(),
            d: self.d.clone(),
            c: self.c.clone(),
            v: PolyMatrix::zero(n, 0),
            perm: (0..n).collect(),
        }
    }

    /// Rebuilds the field the form describes, through total degree `k`.
    pub fn to_field(&self, k: usize) -> Result<VectorFieldJet> {
        let n = self.n();
        let (q, nn, m) = (self.q, self.n_order, self.m_order);
        let mut bracket: Vec<RMultiSeries> = Vec::with_capacity(n);
        let dc = self.d.extend_exact(q).truncate(q);
        for i in 0..n {
            let mut comp = MultiSeries::zero(n, k);
            for j in 0..n {
                for t in 0..=q {
                    let mut coef = if t < q { dc.coeff(t)[(i, j)].clone() } else { Rational::zero() };
                    if t == q {
                        coef += self.c[(i, j)].clone();
                    }
                    let mut a = vec![0u32; n + 1];
                    a[0] = t as u32;
                    a[j + 1] = 1;
                    comp.add_term(a, coef);
                }
            }
            for (a, cf) in self.v[i].terms() {
                let ylen: u32 = a[1..].iter().sum();
                let mut b = a.clone();
                b[0] += (q + 1 + nn) as u32 + m as u32 * ylen;
                comp.add_term(b, cf.clone());
            }
            bracket.push(comp);
        }
        let mut xq = vec![0u32; n + 1];
        xq[0] = (q + 1) as u32;
        let xpart = MultiSeries::monomial(n, k, xq, Rational::one());
        let mut lead = vec![0u32; n + 1];
        lead[0] = self.e as u32;
        let xe = MultiSeries::monomial(n, k, lead, Rational::one());
        let f = &xe * &self.unit.truncate(k);
        let xi_x = (&f * &xpart).truncate(k);
        let xi_y = bracket.iter().map(|b| (&f * b).truncate(k)).collect();
        VectorFieldJet::new(xi_x, xi_y)
    }
}

/// `x^e u` with `u` a unit, from the `x` component: `xi_x = x^{e+q+1} u`.
fn split_unit(vf: &VectorFieldJet, q: usize) -> Result<(usize, RMultiSeries)> {
    let Order::Finite(k) = vf.xi_x.ord_x() else {
        return Err(Error::HypothesisViolated("x component vanishes to the known order".into()));
    };
    if k < q + 1 {
        return Err(Error::HypothesisViolated(format!("x component has order {k} in x, below q + 1 = {}", q + 1)));
    }
    let u = vf.xi_x.exact_divide_x(k)?;
    if u.coeff(&vec![0; vf.n + 1]).is_zero() {
        return Err(Error::HypothesisViolated("x component is not a monomial times a unit".into()));
    }
    Ok((k - q - 1, u))
}

/// `eta_y = xi_y / (x^e u)` and the `x`-component data.
pub(crate) fn normalized_y(vf: &VectorFieldJet, q: usize) -> Result<(usize, RMultiSeries, Vec<RMultiSeries>)> {
    let (e, u) = split_unit(vf, q)?;
    let inv = u.reciprocal()?;
    let eta = vf
        .xi_y
        .iter()
        .map(|c| (c * &inv).exact_divide_x(e))
        .collect::<Result<Vec<_>>>()
        .map_err(|err| match err {
            Error::NotDivisible { order } => {
                Error::HypothesisViolated(format!("y component not divisible by x^{e} (term of order {order})"))
            }
            other => other,
        })?;
    Ok((e, u, eta))
}

/// Linear part `d eta_y / dy (x, 0)`, known through `K - 1`.
pub(crate) fn linear_part(eta: &[RMultiSeries]) -> Result<RPolyMatrix> {
    let n = eta.len();
    let mut rows = Vec::with_capacity(n);
    for c in eta {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let mut beta = vec![0u32; n];
            beta[j] = 1;
            row.push(c.y_coeff(&beta)?);
        }
        rows.push(row);
    }
    PolyMatrix::from_entries(&rows)
}

/// The permutation bringing the linear part into block order, if the field
/// is in TRS form of rank `q` up to a reordering of coordinates.
pub fn trs_permutation(vf: &VectorFieldJet, q: usize) -> Result<Vec<usize>> {
    let (_, _, eta) = normalized_y(vf, q)?;
    let lin = linear_part(&eta)?;
    let s = LinearSystem { n: vf.n, p: q as i64, a: lin };
    recognize_trs(&s)
        .map(|f| f.perm)
        .ok_or_else(|| Error::HypothesisViolated(format!("linear part is not in TRS shape of rank {q}")))
}

/// Reads `vf` as a TRS form of type `(q, N, M)` in the given coordinates.
pub fn recognize_trs_vf(vf: &VectorFieldJet, q: usize, n_order: usize, m_order: usize) -> Result<TRSVFForm> {
    let n = vf.n;
    let (e, u, eta) = normalized_y(vf, q)?;
    let lin = linear_part(&eta)?;
    let s = LinearSystem { n, p: q as i64, a: lin };
    let lf = recognize_trs(&s)
        .ok_or_else(|| Error::HypothesisViolated(format!("linear part is not in TRS shape of rank {q}")))?;
    if lf.perm.iter().enumerate().any(|(i, &p)| i != p) {
        return Err(Error::HypothesisViolated(format!("coordinates must be permuted by {:?} first", lf.perm)));
    }
    let mut v = Vec::with_capacity(n);
    let shift = q + 1 + n_order;
    let d = exponential_matrix(&lf.bs, &lf.exps, q, q);
    for (i, c) in eta.iter().enumerate() {
        let mut w = c.clone();
        for j in 0..n {
            for t in 0..=q {
                let mut coef = if t < q { d.coeff(t)[(i, j)].clone() } else { Rational::zero() };
                if t == q {
                    coef += lf.c[(i, j)].clone();
                }
                let mut a = vec![0u32; n + 1];
                a[0] = t as u32;
                a[j + 1] = 1;
                w.add_term(a, -coef);
            }
        }
        let w = w.exact_divide_x(shift).map_err(|err| match err {
            Error::NotDivisible { order } => Error::HypothesisViolated(format!(
                "component {i}: remainder has a term of x-order {order}, below q + 1 + N = {shift}"
            )),
            other => other,
        })?;
        let mut vi = MultiSeries::zero(n, w.trunc() / (m_order + 1));
        for (a, cf) in w.terms() {
            let ylen: u32 = a[1..].iter().sum();
            let need = m_order as u32 * ylen;
            if a[0] < need {
                return Err(Error::HypothesisViolated(format!(
                    "component {i}: term {a:?} is not of the form V(x, x^{m_order} y)"
                )));
            }
            let mut b = a.clone();
            b[0] -= need;
            vi.add_term(b, cf.clone());
        }
        v.push(vi);
    }
    let unit_present = u.terms().iter().any(|(a, c)| a.iter().any(|&x| x != 0) || !c.is_one());
    Ok(TRSVFForm {
        e,
        q,
        n_order,
        m_order,
        bs: lf.bs,
        exps: lf.exps,
        d,
        c: lf.c,
        v,
        unit: u,
        unit_present,
    })
}

/// Largest `N` such that the field reads as TRS of type `(q, N, 0)`, capped at `cap`.
pub fn vestigial_order(vf: &VectorFieldJet, q: usize, cap: usize) -> Result<usize> {
    recognize_trs_vf(vf, q, 0, 0)?;
    let mut best = 0;
    for nn in 1..=cap {
        match recognize_trs_vf(vf, q, nn, 0) {
            Ok(_) => best = nn,
            Err(Error::HypothesisViolated(_)) | Err(Error::EmptyPrecision) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

impl Json for TRSVFForm {
    fn to_json(&self) -> Value {
        json!({
            "e": self.e,
            "q": self.q,
            "N": self.n_order,
            "M": self.m_order,
            "bs": self.bs.to_json(),
            "exponents": self.exps.to_json(),
            "C": self.c.to_json(),
            "V": self.v.to_json(),
            "unit": self.unit.to_json(),
            "unit_present": self.unit_present,
        })
    }
    fn from_json(v: &Value) -> Result<Self> {
        let q = as_usize(field(v, "q")?)?;
        let bs = BlockStructure::from_json(field(v, "bs")?)?;
        let exps = Vec::<Exponent>::from_json(field(v, "exponents")?)?;
        let c = RMat::from_json(field(v, "C")?)?;
        let vv = Vec::<RMultiSeries>::from_json(field(v, "V")?)?;
        let n = c.rows();
        let n_order = as_usize(field(v, "N")?)?;
        let m_order = as_usize(field(v, "M")?)?;
        let unit = match v.get("unit") {
            Some(u) => RMultiSeries::from_json(u)?,
            None => {
                // Exact; known as far as the field it multiplies.
                let ydeg = vv.iter().map(MultiSeries::degree_y).max().unwrap_or(0).max(1);
                let k = vv.iter().map(MultiSeries::trunc).max().unwrap_or(0) + q + 1 + n_order + m_order * ydeg;
                MultiSeries::constant(n, k, Rational::one())
            }
        };
        if exps.len() != bs.blocks.len() || exps.iter().any(|x| x.len() != q) || bs.dim() != n || vv.len() != n {
            return Err(Error::Parse("form components disagree in size".into()));
        }
        let unit_present = unit.terms().iter().any(|(a, c)| a.iter().any(|&x| x != 0) || !c.is_one());
        Ok(TRSVFForm {
            e: as_usize(field(v, "e")?)?,
            q,
            n_order,
            m_order,
            d: exponential_matrix(&bs, &exps, q, q),
            bs,
            exps,
            c,
            v: vv,
            unit,
            unit_present,
        })
    }
}
