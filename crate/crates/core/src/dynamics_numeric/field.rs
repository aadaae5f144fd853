//! Floating point right-hand sides `dy/dx = f(x, y)`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linear_systems::spectrum;
use crate::series_core::scalar::rat_to_f64;
use crate::series_core::BlockKind;
use crate::vf_couples::{TRSVFForm, VectorFieldJet};
use crate::RMultiSeries;

/// A non-autonomous system `dy/dx = f(x, y)` on `x > 0`.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;

    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]);

    /// `f(x, y + d) - f(x, y)`. Implementations should keep relative accuracy
    /// in `d` even when `d` is far below the rounding level of `y`.
    fn rhs_diff(&self, x: f64, y: &[f64], d: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let yd: Vec<f64> = y.iter().zip(d).map(|(a, b)| a + b).collect();
        let mut f0 = vec![0.0; n];
        self.rhs(x, &yd, out);
        self.rhs(x, y, &mut f0);
        for (o, a) in out.iter_mut().zip(&f0) {
            *o -= a;
        }
    }

    /// Per coordinate: `+1` where solutions decay as `x -> 0+`, `-1` where they
    /// grow. `None` when the split is not known or not coordinate aligned.
    fn decay_signs(&self) -> Option<Vec<i8>> {
        None
    }

    /// Infinity norm of `df/dy` at `(x, y)`, by forward differences.
    fn stiffness(&self, x: f64, y: &[f64]) -> f64 {
        let j = jacobian(self, x, y);
        (0..self.dim()).map(|i| (0..self.dim()).map(|k| j[i * self.dim() + k].abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Row-major `df/dy` by forward differences.
pub fn jacobian<F: Field + ?Sized>(f: &F, x: f64, y: &[f64]) -> Vec<f64> {
    let n = f.dim();
    let mut j = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    let mut d = vec![0.0; n];
    for k in 0..n {
        let h = 1e-7 * y[k].abs().max(1e-7);
        d[k] = h;
        f.rhs_diff(x, y, &d, &mut col);
        d[k] = 0.0;
        for i in 0..n {
            j[i * n + k] = col[i] / h;
        }
    }
    j
}

/// A polynomial in `(x, y_1, .., y_n)` with `f64` coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FPoly {
    pub n: usize,
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl FPoly {
    pub fn from_rational(p: &RMultiSeries) -> Self {
        FPoly { n: p.n(), terms: p.terms().iter().map(|(a, c)| (a.clone(), rat_to_f64(c))).collect() }
    }

    pub fn eval(&self, x: f64, y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (a, c) in &self.terms {
            let mut t = *c * x.powi(a[0] as i32);
            for (yi, &e) in y.iter().zip(&a[1..]) {
                if e > 0 {
                    t *= yi.powi(e as i32);
                }
            }
            s += t;
        }
        s
    }

    /// `p(x, y + d) - p(x, y)` by telescoping over the factors of each monomial.
    pub fn diff(&self, x: f64, y: &[f64], d: &[f64]) -> f64 {
        let mut s = 0.0;
        for (a, c) in &self.terms {
            if a[1..].iter().all(|&e| e == 0) {
                continue;
            }
            let xa = *c * x.powi(a[0] as i32);
            // prod_{j<i} (y_j + d_j)^{a_j} * ((y_i + d_i)^{a_i} - y_i^{a_i}) * prod_{j>i} y_j^{a_j}
            let mut acc = 0.0;
            for i in 0..self.n {
                let e = a[i + 1];
                if e == 0 {
                    continue;
                }
                let mut t = pow_diff(y[i], d[i], e);
                for j in 0..self.n {
                    let ej = a[j + 1] as i32;
                    if j < i {
                        t *= (y[j] + d[j]).powi(ej);
                    } else if j > i {
                        t *= y[j].powi(ej);
                    }
                }
                acc += t;
            }
            s += xa * acc;
        }
        s
    }
}

/// `(u + d)^k - u^k = d sum_{m<k} (u + d)^m u^{k-1-m}`.
fn pow_diff(u: f64, d: f64, k: u32) -> f64 {
    let v = u + d;
    let mut s = 0.0;
    for m in 0..k {
        s += v.powi(m as i32) * u.powi((k - 1 - m) as i32);
    }
    d * s
}

/// `dy/dx = xi_y / xi_x` for a polynomial vector field.
#[derive(Clone, Debug)]
pub struct PolyField {
    pub xi_x: FPoly,
    pub xi_y: Vec<FPoly>,
    pub signs: Option<Vec<i8>>,
}

impl PolyField {
    pub fn from_jet(vf: &VectorFieldJet) -> Self {
        PolyField {
            xi_x: FPoly::from_rational(&vf.xi_x),
            xi_y: vf.xi_y.iter().map(FPoly::from_rational).collect(),
            signs: None,
        }
    }

    pub fn with_signs(mut self, signs: Vec<i8>) -> Self {
        self.signs = Some(signs);
        self
    }
}

impl Field for PolyField {
    fn dim(&self) -> usize {
        self.xi_y.len()
    }

    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]) {
        let gx = self.xi_x.eval(x, y);
        for (o, p) in out.iter_mut().zip(&self.xi_y) {
            *o = p.eval(x, y) / gx;
        }
    }

    fn rhs_diff(&self, x: f64, y: &[f64], d: &[f64], out: &mut [f64]) {
        let gx = self.xi_x.eval(x, y);
        let dgx = self.xi_x.diff(x, y, d);
        let gx1 = gx + dgx;
        for (o, p) in out.iter_mut().zip(&self.xi_y) {
            let gy = p.eval(x, y);
            let dgy = p.diff(x, y, d);
            *o = (dgy * gx - gy * dgx) / (gx * gx1);
        }
    }

    fn decay_signs(&self) -> Option<Vec<i8>> {
        self.signs.clone()
    }
}

/// `dy/dx = [(D + x^q C) y + x^{q+1+N} V(x, x^M y)] / x^{q+1}`, the unit divided out.
#[derive(Clone, Debug)]
pub struct TrsField {
    pub q: usize,
    pub n_order: usize,
    pub m_order: usize,
    /// Coefficients `D_0 .. D_{q-1}`, row-major.
    pub d: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub v: Vec<FPoly>,
    signs: Option<Vec<i8>>,
}

impl TrsField {
    pub fn from_form(f: &TRSVFForm) -> Result<Self> {
        let n = f.n();
        let flat = |m: &crate::RMat| -> Vec<f64> {
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| rat_to_f64(&m[(i, j)])).collect()
        };
        let dext = f.d.extend_exact(f.q);
        let d = (0..f.q).map(|k| flat(dext.coeff(k))).collect();
        Ok(TrsField {
            q: f.q,
            n_order: f.n_order,
            m_order: f.m_order,
            d,
            c: flat(&f.c),
            v: f.v.iter().map(FPoly::from_rational).collect(),
            signs: trs_signs(f)?,
        })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    /// `(D(x) / x^{q+1} + C / x) y`.
    fn linear(&self, x: f64, y: &[f64], out: &mut [f64]) {
        let n = self.n();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, m) in self.d.iter().enumerate() {
            let s = x.powi(k as i32 - self.q as i32 - 1);
            for i in 0..n {
                out[i] += s * (0..n).map(|j| m[i * n + j] * y[j]).sum::<f64>();
            }
        }
        for i in 0..n {
            out[i] += (0..n).map(|j| self.c[i * n + j] * y[j]).sum::<f64>() / x;
        }
    }
}

/// Decay directions of a TRS form; `None` under dominant rotation or a
/// mixed-sign residual with `q = 0`.
fn trs_signs(f: &TRSVFForm) -> Result<Option<Vec<i8>>> {
    let n = f.n();
    if f.q == 0 {
        let sp = spectrum::spectrum(&f.c)?;
        let pos = sp.eigenvalues.iter().all(|(e, _)| e.re_f64() > 0.0);
        let neg = sp.eigenvalues.iter().all(|(e, _)| e.re_f64() < 0.0);
        return Ok(match (pos, neg) {
            (true, _) => Some(vec![1; n]),
            (_, true) => Some(vec![-1; n]),
            _ => None,
        });
    }
    let mut signs = Vec::with_capacity(n);
    for (b, e) in f.bs.blocks.iter().zip(&f.exps) {
        let dominant = b.kind == BlockKind::Complex && crate::linear_systems::dominant_rotation(e);
        let s = match e.re_sign() {
            _ if dominant => return Ok(None),
            Some(Ordering::Greater) => 1,
            Some(_) => -1,
            None => return Ok(None),
        };
        signs.extend(std::iter::repeat(s).take(b.dim()));
    }
    Ok(Some(signs))
}

impl Field for TrsField {
    fn dim(&self) -> usize {
        self.n()
    }

    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]) {
        self.linear(x, y, out);
        let xm = x.powi(self.m_order as i32);
        let ys: Vec<f64> = y.iter().map(|v| v * xm).collect();
        let s = x.powi(self.n_order as i32);
        for (o, p) in out.iter_mut().zip(&self.v) {
            *o += s * p.eval(x, &ys);
        }
    }

    fn rhs_diff(&self, x: f64, y: &[f64], d: &[f64], out: &mut [f64]) {
        self.linear(x, d, out);
        let xm = x.powi(self.m_order as i32);
        let ys: Vec<f64> = y.iter().map(|v| v * xm).collect();
        let ds: Vec<f64> = d.iter().map(|v| v * xm).collect();
        let s = x.powi(self.n_order as i32);
        for (o, p) in out.iter_mut().zip(&self.v) {
            *o += s * p.diff(x, &ys, &ds);
        }
    }

    fn decay_signs(&self) -> Option<Vec<i8>> {
        self.signs.clone()
    }
}

/// A field given by a closure; no decay information.
pub struct ClosureField<F> {
    pub n: usize,
    pub f: F,
    pub signs: Option<Vec<i8>>,
}

impl<F: Fn(f64, &[f64], &mut [f64]) + Send + Sync> Field for ClosureField<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]) {
        (self.f)(x, y, out)
    }
    fn decay_signs(&self) -> Option<Vec<i8>> {
        self.signs.clone()
    }
}

pub(crate) fn check_dim(f: &dyn Field, y: &[f64]) -> Result<()> {
    if y.len() != f.dim() {
        return Err(Error::ShapeError(format!("state has {} components, field has {}", y.len(), f.dim())));
    }
    Ok(())
}
