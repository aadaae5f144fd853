//! Order-by-order solution of `A P - P B = x^{p+1} P'` with `P = I + sum X_i x^i`.
//!
//! The matrix space is split into components adapted to a block layout.
//! Each component carries a leading order `nu`: the first order at which the
//! commutator with the principal part is invertible on it. Its coefficient
//! `X_i` is fixed by the equation at order `i + nu`.

use std::ops::Range;

use num_traits::{One, Zero};

use super::system::{apply_gauge, GaugeTransform, LinearSystem};
use super::trs::{Exponent, TRSLinearForm};
use crate::error::{need, Error, Result};
use crate::series_core::{BlockKind, Mat, Order, PolyMatrix, Rational};
use crate::{RMat, RPolyMatrix};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Part {
    Plain,
    Theta,
    Anti,
}

#[derive(Clone, Debug)]
pub(crate) struct BasisElement {
    pub mat: RMat,
    pub row_group: usize,
    pub col_group: usize,
    pub part: Part,
}

/// Basis of `M_n` adapted to contiguous groups; complex groups are split
/// into 2x2 blocks, each spanned by `I, J` (commuting with `J`) and
/// `K = diag(1, -1), L = antidiag(1, 1)` (anticommuting).
pub(crate) fn adapted_basis(groups: &[(Range<usize>, bool)], n: usize) -> Vec<BasisElement> {
    let one = Rational::one;
    let mut out = Vec::with_capacity(n * n);
    for (g, (rg, cg)) in groups.iter().enumerate() {
        for (h, (rh, ch)) in groups.iter().enumerate() {
            if *cg && *ch {
                for r in rg.clone().step_by(2) {
                    for c in rh.clone().step_by(2) {
                        let mk = |e: [(usize, usize, i64); 2], part| {
                            let mut m = Mat::zeros(n, n);
                            for (i, j, v) in e {
                                m[(r + i, c + j)] = Rational::from_integer(v.into());
                            }
                            BasisElement { mat: m, row_group: g, col_group: h, part }
                        };
                        out.push(mk([(0, 0, 1), (1, 1, 1)], Part::Theta));
                        out.push(mk([(0, 1, -1), (1, 0, 1)], Part::Theta));
                        out.push(mk([(0, 0, 1), (1, 1, -1)], Part::Anti));
                        out.push(mk([(0, 1, 1), (1, 0, 1)], Part::Anti));
                    }
                }
            } else {
                for i in rg.clone() {
                    for j in rh.clone() {
                        let mut m = Mat::zeros(n, n);
                        m[(i, j)] = one();
                        out.push(BasisElement { mat: m, row_group: g, col_group: h, part: Part::Plain });
                    }
                }
            }
        }
    }
    out
}

pub(crate) struct Homological<'a> {
    pub a: &'a RPolyMatrix,
    pub p: usize,
    pub basis: Vec<RMat>,
    /// `Some(nu)`: component solved through `P`; `None`: absorbed into `B`.
    pub nu: Vec<Option<usize>>,
}

fn flatten(m: &RMat) -> Vec<Rational> {
    m.to_rows().into_iter().flatten().collect()
}

impl Homological<'_> {
    /// Solves orders `0..=jmax`. `fixed(j)` prescribes `B_j` completely;
    /// otherwise `B_j` vanishes on solved components and is free elsewhere.
    pub fn solve(&self, jmax: usize, fixed: impl Fn(usize) -> Option<RMat>) -> Result<(RPolyMatrix, Vec<RMat>)> {
        let n = self.a.n();
        need(jmax, self.a.trunc())?;
        if let Some(bad) = self.nu.iter().flatten().find(|&&v| v > self.p) {
            return Err(Error::Precondition(format!("component of leading order {bad} above the rank {}", self.p)));
        }
        let mut x: Vec<RMat> = vec![Mat::identity(n)];
        let mut b: Vec<RMat> = Vec::with_capacity(jmax + 1);
        let neg = |m: &RMat| -m;
        for j in 0..=jmax {
            x.push(Mat::zeros(n, n));
            let fixed_b = fixed(j);
            let bj = fixed_b.clone().unwrap_or_else(|| Mat::zeros(n, n));
            // Residual with every unknown of this order set to zero.
            let mut r = Mat::zeros(n, n);
            for t in 0..=j {
                r = &r + &(self.a.coeff(t) * &x[j - t]);
            }
            for bb in 0..j {
                r = &r - &(&x[j - bb] * &b[bb]);
            }
            r = &r - &bj;
            if j > self.p {
                r = &r - &x[j - self.p].scale(&Rational::from_integer(((j - self.p) as i64).into()));
            }
            let mut cols: Vec<RMat> = Vec::new();
            let mut slots: Vec<(usize, bool)> = Vec::new();
            for (u, e) in self.basis.iter().enumerate() {
                match self.nu[u] {
                    Some(nu) if j > nu => {
                        let mut col = &(self.a.coeff(nu) * e) - &(e * &b[nu]);
                        if nu == self.p {
                            col = &col - &e.scale(&Rational::from_integer(((j - nu) as i64).into()));
                        }
                        cols.push(col);
                        slots.push((u, true));
                    }
                    None if fixed_b.is_none() => {
                        cols.push(neg(e));
                        slots.push((u, false));
                    }
                    _ => {}
                }
            }
            let rhs = Mat::from_fn(n * n, 1, |i, _| -flatten(&r)[i].clone());
            let sol = if cols.is_empty() {
                if !r.is_zero() {
                    return Err(Error::Obstruction(j));
                }
                Mat::zeros(0, 1)
            } else {
                let flat: Vec<Vec<Rational>> = cols.iter().map(flatten).collect();
                let m = Mat::from_fn(n * n, cols.len(), |i, k| flat[k][i].clone());
                m.solve(&rhs).ok_or(Error::Obstruction(j))?
            };
            let mut bnew = bj;
            for (k, &(u, is_x)) in slots.iter().enumerate() {
                let z = &sol[(k, 0)];
                if z.is_zero() {
                    continue;
                }
                let term = self.basis[u].scale(z);
                if is_x {
                    let i = j - self.nu[u].expect("solved component");
                    x[i] = &x[i] + &term;
                } else {
                    bnew = &bnew + &term;
                }
            }
            b.push(bnew);
        }
        x.truncate(jmax + 1);
        Ok((PolyMatrix::from_coeffs(x, jmax)?, b))
    }
}

fn exponent_nu(a: &Exponent, b: &Exponent, cap: usize) -> usize {
    a.diff_order(b).map_or(cap, |k| k.min(cap))
}

/// Leading orders for a TRS layout: differences of exponents, capped at `q`.
pub(crate) fn trs_components(f: &TRSLinearForm) -> (Vec<RMat>, Vec<Option<usize>>) {
    let groups: Vec<(Range<usize>, bool)> =
        f.bs.ranges().into_iter().zip(&f.bs.blocks).map(|(r, b)| (r, b.kind == BlockKind::Complex)).collect();
    let basis = adapted_basis(&groups, f.n());
    let nu = basis
        .iter()
        .map(|e| {
            let (cg, ch) = (&f.exps[e.row_group], &f.exps[e.col_group]);
            Some(match e.part {
                Part::Plain | Part::Theta => exponent_nu(cg, ch, f.q),
                Part::Anti => exponent_nu(&cg.conj(), ch, f.q),
            })
        })
        .collect();
    (basis.into_iter().map(|e| e.mat).collect(), nu)
}

/// Gauge `P = I + P_1 x + ..` removing the vestigial part up to `O(x^N)`.
///
/// `P` acts in the form's own (permuted) coordinates. The returned form has
/// the same `D` and `C`; the result is checked by exact re-substitution.
pub fn kill_vestigial(f: &TRSLinearForm, n_order: usize) -> Result<(GaugeTransform, TRSLinearForm)> {
    let s = f.system();
    let q = f.q;
    need(q + n_order, s.a.trunc())?;
    if f.v.order().at_least(n_order) || n_order == 0 {
        return Ok((GaugeTransform::PolyRegular { p: PolyMatrix::identity(f.n(), 0) }, f.clone()));
    }
    let (basis, nu) = trs_components(f);
    let engine = Homological { a: &s.a, p: q, basis, nu };
    let n = f.n();
    let (p, _) = engine.solve(q + n_order, |j| Some(if j <= q { s.a.coeff(j).clone() } else { Mat::zeros(n, n) }))?;
    let t = GaugeTransform::PolyRegular { p };
    let out = apply_gauge(&s, &t)?;
    let form = same_principal_part(f, &out, n_order)?;
    Ok((t, form))
}

/// Re-reads `out` with the layout of `f`, insisting on identical `D`, `C`
/// and a vestigial part of order at least `n_order`.
pub(crate) fn same_principal_part(f: &TRSLinearForm, out: &LinearSystem, n_order: usize) -> Result<TRSLinearForm> {
    let q = f.q;
    if out.p != q as i64 {
        return Err(Error::Obstruction(0));
    }
    for t in 0..=q {
        let expect = if t < q { f.d.coeff(t).clone() } else { f.c.clone() };
        if *out.a.coeff(t) != expect {
            return Err(Error::Obstruction(t));
        }
    }
    let mut rest = out.a.clone();
    for t in 0..=q {
        rest.set_coeff(t, Mat::zeros(f.n(), f.n()));
    }
    let v = rest.exact_divide(q + 1)?;
    if let Order::Finite(k) = v.order() {
        if k < n_order {
            return Err(Error::Obstruction(q + 1 + k));
        }
    }
    Ok(TRSLinearForm { v, ..f.clone() })
}
