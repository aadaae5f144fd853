//! Formal center-manifold jets `w = h(x, z)` of a TRS field, where `z`
//! collects the blocks whose leading exponent vanishes at `x = 0` and `w`
//! the others.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{need, Error, Result};
use crate::series_core::{Json, MultiSeries, Rational};
use crate::vf_couples::TRSVFForm;
use crate::{RMat, RMultiSeries};

#[derive(Clone, Debug, PartialEq)]
pub struct CenterManifoldJet {
    pub z: Vec<usize>,
    pub w: Vec<usize>,
    /// `h_i(x, z)` for each `w_i`, variables `(x, z_1, ..)`, exact through `degree`.
    pub h: Vec<RMultiSeries>,
    pub degree: usize,
    /// Smallest power of `x` among the terms of `h`, `None` when `h = 0`.
    pub x_order: Option<usize>,
    /// Whether `x^{q+1+N}` divides `h` through `degree`.
    pub divisible: bool,
}

fn homogeneous(f: &RMultiSeries, d: usize) -> RMultiSeries {
    let mut out = MultiSeries::zero(f.n(), f.trunc());
    for (a, c) in f.terms() {
        if a.iter().map(|&e| e as usize).sum::<usize>() == d {
            out.add_term(a.clone(), c.clone());
        }
    }
    out
}

/// Solves the invariance equation degree by degree.
pub fn center_manifold_jet(form: &TRSVFForm, degree: usize) -> Result<CenterManifoldJet> {
    let n = form.n();
    let q = form.q;
    let lead = if q == 0 { RMat::zeros(n, n) } else { form.d.extend_exact(q).coeff(0).clone() };
    let mut z = Vec::new();
    let mut w = Vec::new();
    for r in form.bs.ranges() {
        let zero = r.clone().all(|i| r.clone().all(|j| lead[(i, j)].is_zero()));
        if zero { z.extend(r) } else { w.extend(r) }
    }
    let nz = z.len();
    let trunc = degree + 2;
    let mut h: Vec<RMultiSeries> = vec![MultiSeries::zero(nz, trunc); w.len()];
    let done = |h: Vec<RMultiSeries>| {
        let x_order = h.iter().flat_map(|c| c.terms().keys().map(|a| a[0] as usize)).min();
        let divisible = x_order.map_or(true, |o| o >= q + 1 + form.n_order);
        CenterManifoldJet { z: z.clone(), w: w.clone(), h, degree, x_order, divisible }
    };
    if w.is_empty() {
        return Ok(done(h));
    }
    let inv = lead.select(&w, &w).inverse()?;
    let mut bare = form.clone();
    bare.e = 0;
    bare.unit = MultiSeries::constant(n, trunc, Rational::one());
    bare.unit_present = false;
    let field = bare.to_field(trunc)?;
    let xvar = MultiSeries::var(nz, trunc, 0);
    for d in 1..=degree {
        let mut subs = vec![xvar.clone(); n + 1];
        for (k, &i) in z.iter().enumerate() {
            subs[i + 1] = MultiSeries::var(nz, trunc, k + 1);
        }
        for (k, &i) in w.iter().enumerate() {
            subs[i + 1] = h[k].clone();
        }
        let eta: Vec<RMultiSeries> = field.xi_y.iter().map(|c| c.compose(&subs)).collect::<Result<_>>()?;
        let xq = subs[0].clone();
        let xdx = |f: &RMultiSeries| -> Result<RMultiSeries> {
            let mut p = f.partial(0)?;
            for _ in 0..=q {
                p = &p * &xq;
            }
            Ok(p)
        };
        let mut rhs = Vec::with_capacity(w.len());
        for (k, &i) in w.iter().enumerate() {
            let mut r = &eta[i] - &xdx(&h[k])?;
            for (m, &j) in z.iter().enumerate() {
                r = &r - &(&h[k].partial(m + 1)? * &eta[j]);
            }
            need(d, r.trunc())?;
            rhs.push(homogeneous(&r, d));
        }
        for (k, hk) in h.iter_mut().enumerate() {
            let mut step = MultiSeries::zero(nz, trunc);
            for (m, rm) in rhs.iter().enumerate() {
                let c = -inv[(k, m)].clone();
                if !c.is_zero() {
                    step = &step + &rm.scale(&c).with_trunc(trunc);
                }
            }
            *hk = &*hk + &step;
        }
    }
    if h.iter().any(|c| c.trunc() < degree) {
        return Err(Error::InsufficientPrecision { needed: degree, have: h.iter().map(|c| c.trunc()).min().unwrap_or(0) });
    }
    Ok(done(h))
}

impl Json for CenterManifoldJet {
    fn to_json(&self) -> Value {
        json!({
            "z": self.z,
            "w": self.w,
            "degree": self.degree,
            "h": self.h.iter().map(|c| c.jet(self.degree).to_json()).collect::<Vec<_>>(),
            "x_order": self.x_order,
            "divisible": self.divisible,
        })
    }
    fn from_json(_: &Value) -> Result<Self> {
        Err(Error::Parse("reports are output only".into()))
    }
}
