//! Full reduction of a singular system to a regular system or a TRS form.
//!
//! The system is kept block diagonal over a list of groups. Group `g` owns a
//! contiguous range of coordinates and a known exponential prefix `δ_g` of
//! length `s_g`: its diagonal block is `δ_g(x) + x^{s_g} R_g(x)` with `δ_g`
//! scalar (real groups) or `Θ(δ_g) ⊗ I` (complex groups). Each step looks at
//! `L = R_g(0)` for a group below the Poincaré rank and either splits the
//! group, peels a scalar into `δ_g`, shears a nilpotent part, or ramifies.

use std::ops::Range;

use num_traits::{One, ToPrimitive, Zero};

use super::homological::{adapted_basis, Homological, Part};
use super::poly::{self, Poly};
use super::spectrum::{
    complex_structure_basis, factor_char_poly, generalized_eigenspace, has_good_spectrum, hstack, integer_resonances,
    nilpotent_jordan_basis, FactorKind,
};
use super::system::{apply_gauge, constant_gauge, is_admissible, GaugeTransform, LinearSystem};
use super::trs::{recognize_trs, TRSLinearForm};
use crate::error::{need, Error, Result};
use crate::series_core::blocks::theta;
use crate::series_core::{Mat, Order, PolyMatrix, Rational, Series};
use crate::{RMat, RPolyMatrix};

#[derive(Clone, Copy, Debug)]
pub struct ReduceOptions {
    /// Cap on the truncation order used; the input is cut to it.
    pub working_order: usize,
    pub max_ramifications: usize,
    pub max_rank_reductions: usize,
}

impl ReduceOptions {
    pub fn new(working_order: usize) -> Self {
        ReduceOptions { working_order, max_ramifications: 16, max_rank_reductions: 16 }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum Reduced {
    Regular(LinearSystem),
    Trs(TRSLinearForm),
}

#[derive(Clone, PartialEq, Debug)]
pub struct Reduction {
    pub chain: Vec<GaugeTransform>,
    /// The input transformed by `chain`.
    pub system: LinearSystem,
    pub result: Reduced,
}

#[derive(Clone, Debug)]
struct Group {
    start: usize,
    len: usize,
    complex: bool,
    re: Vec<Rational>,
    im: Vec<Rational>,
}

impl Group {
    fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }

    fn level(&self) -> usize {
        self.re.len()
    }

    fn idx(&self) -> Vec<usize> {
        self.range().collect()
    }
}

const MAX_SHIFTS: usize = 4096;

struct State {
    s: LinearSystem,
    chain: Vec<GaugeTransform>,
    groups: Vec<Group>,
    ramifications: usize,
    rank_reductions: usize,
    opts: ReduceOptions,
}

fn rint(v: i64) -> Rational {
    Rational::from_integer(v.into())
}

/// Identity with `block` placed at `(start, start)`.
fn embed(n: usize, start: usize, block: &RMat) -> RMat {
    let mut m = Mat::identity(n);
    m.set_block(start, start, block);
    m
}

fn block_at(m: &RMat, r: &Range<usize>) -> RMat {
    let idx: Vec<usize> = r.clone().collect();
    m.select(&idx, &idx)
}

/// Columns `w, J w, ..` spanning the `J`-invariant column space of `w`.
fn pair_basis(w: &RMat, j: &RMat) -> RMat {
    let mut cols: Vec<RMat> = Vec::new();
    for c in 0..w.cols() {
        let v = Mat::from_fn(w.rows(), 1, |i, _| w[(i, c)].clone());
        let rank = if cols.is_empty() { 0 } else { hstack(&cols).rank() };
        let mut with = cols.clone();
        with.push(v.clone());
        if hstack(&with).rank() > rank {
            let jv = j * &v;
            cols.push(v);
            cols.push(jv);
        }
    }
    if cols.is_empty() {
        Mat::zeros(w.rows(), 0)
    } else {
        hstack(&cols)
    }
}

fn complex_unit(m: usize) -> RMat {
    let mut j = Mat::zeros(m, m);
    for i in (0..m).step_by(2) {
        j.set_block(i, i, &theta(Rational::zero(), Rational::one()));
    }
    j
}

/// `Θ(a + ib) ⊗ I`, if `l` has that shape.
fn scalar_theta(l: &RMat) -> Option<(Rational, Rational)> {
    let (a, b) = (l[(0, 0)].clone(), l[(1, 0)].clone());
    let mut expect = Mat::zeros(l.rows(), l.rows());
    for i in (0..l.rows()).step_by(2) {
        expect.set_block(i, i, &theta(a.clone(), b.clone()));
    }
    (expect == *l).then_some((a, b))
}

fn is_scalar(l: &RMat) -> bool {
    let c = &l[(0, 0)];
    *l == Mat::diag(&vec![c.clone(); l.rows()])
}

/// Coefficients `a_1..a_m` of `det(μ - E) = μ^m + a_1 μ^{m-1} + ..`.
fn series_char_poly(e: &RPolyMatrix) -> Vec<Series<Rational>> {
    let m = e.n();
    let k = e.trunc();
    let trace = |p: &RPolyMatrix| Series::new(p.coeffs().iter().map(Mat::trace).collect(), p.trunc());
    let mut out = Vec::with_capacity(m);
    let mut mk = PolyMatrix::zero(m, k);
    let mut prev = Series::one(k);
    for i in 1..=m {
        let mut next = e * &mk;
        let shift = PolyMatrix::from_coeffs(
            prev.coeffs().iter().map(|c: &Rational| Mat::diag(&vec![c.clone(); m])).collect(),
            prev.trunc(),
        )
        .expect("square");
        next = &next + &shift;
        let a = trace(&(e * &next)).scale(&-Rational::new(1.into(), (i as i64).into()));
        out.push(a.clone());
        mk = next;
        prev = a;
    }
    out
}

/// Lower bound for the smallest valuation of an eigenvalue of `E`, together
/// with whether it is attained by a term known exactly.
fn newton_slope(e: &RPolyMatrix) -> (Rational, bool) {
    let mut best: Option<(Rational, bool)> = None;
    for (k, a) in series_char_poly(e).iter().enumerate() {
        let (v, exact) = match a.order() {
            Order::Finite(v) => (v, true),
            Order::Above(t) => (t + 1, false),
        };
        let r = Rational::new((v as i64).into(), ((k + 1) as i64).into());
        let replace = match &best {
            None => true,
            Some((b, bx)) => r < *b || (r == *b && exact && !bx),
        };
        if replace {
            best = Some((r, exact));
        }
    }
    best.unwrap_or((Rational::zero(), false))
}

fn entry_order(e: &RPolyMatrix, i: usize, j: usize) -> usize {
    match e.entry(i, j).order() {
        Order::Finite(v) => v,
        Order::Above(t) => t + 1,
    }
}

/// Shifts `k >= 0` with `k_i - k_j <= ord E_ij - mu`, by Bellman-Ford.
fn shear_shifts(e: &RPolyMatrix, mu: usize) -> Option<Vec<u32>> {
    let m = e.n();
    let w: Vec<Vec<i64>> =
        (0..m).map(|i| (0..m).map(|j| entry_order(e, i, j) as i64 - mu as i64).collect()).collect();
    if (0..m).any(|i| w[i][i] < 0) {
        return None;
    }
    let mut d = vec![0i64; m];
    for round in 0..=m {
        let mut changed = false;
        for i in 0..m {
            for j in 0..m {
                if i != j && d[j] + w[i][j] < d[i] {
                    d[i] = d[j] + w[i][j];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        if round == m {
            return None;
        }
    }
    let lo = *d.iter().min().expect("nonempty");
    Some(d.iter().map(|v| (v - lo) as u32).collect())
}

impl State {
    fn n(&self) -> usize {
        self.s.n
    }

    fn p(&self) -> usize {
        self.s.p as usize
    }

    fn gauge(&mut self, t: GaugeTransform) -> Result<()> {
        if !is_admissible(&self.s, &t)? {
            return Err(Error::Inadmissible(format!("{} step during reduction", t.name())));
        }
        let next = apply_gauge(&self.s, &t)?;
        if let GaugeTransform::Ramification { r } = t {
            let r = r as usize;
            for g in &mut self.groups {
                let spread = |v: &[Rational]| {
                    let mut out = vec![Rational::zero(); v.len() * r];
                    for (t, c) in v.iter().enumerate() {
                        out[t * r] = c * rint(r as i64);
                    }
                    out
                };
                g.re = spread(&g.re);
                g.im = spread(&g.im);
            }
        } else {
            let f = (self.s.p - next.p) as usize;
            for g in &mut self.groups {
                if g.level() < f {
                    g.re.resize(f, Rational::zero());
                    g.im.resize(f, Rational::zero());
                }
                if g.re[..f].iter().chain(&g.im[..f]).any(|c| !c.is_zero()) {
                    return Err(Error::Obstruction(0));
                }
                g.re.drain(..f);
                g.im.drain(..f);
            }
        }
        self.s = next;
        self.chain.push(t);
        Ok(())
    }

    /// Whether the stored layout describes the current matrix.
    fn check_layout(&self) -> Result<()> {
        let k = self.s.a.trunc();
        for t in 0..=k {
            let m = self.s.a.coeff(t);
            for (gi, g) in self.groups.iter().enumerate() {
                for (hi, h) in self.groups.iter().enumerate() {
                    if gi == hi {
                        continue;
                    }
                    for i in g.range() {
                        for j in h.range() {
                            if !m[(i, j)].is_zero() {
                                return Err(Error::Obstruction(t));
                            }
                        }
                    }
                }
                if t < g.level() {
                    let blk = block_at(m, &g.range());
                    let expect = if g.complex {
                        let mut e = Mat::zeros(g.len, g.len);
                        for i in (0..g.len).step_by(2) {
                            e.set_block(i, i, &theta(g.re[t].clone(), g.im[t].clone()));
                        }
                        e
                    } else {
                        Mat::diag(&vec![g.re[t].clone(); g.len])
                    };
                    if blk != expect {
                        return Err(Error::Obstruction(t));
                    }
                }
            }
        }
        Ok(())
    }

    fn leading(&self, g: &Group) -> Result<RMat> {
        let s = g.level();
        if s > self.s.a.trunc() {
            return Err(Error::InsufficientPrecision { needed: s, have: self.s.a.trunc() });
        }
        Ok(block_at(self.s.a.coeff(s), &g.range()))
    }

    /// One reduction step on group `gi`, whose level is below the rank.
    fn step(&mut self, gi: usize) -> Result<()> {
        let g = self.groups[gi].clone();
        let l = self.leading(&g)?;
        if g.complex {
            return match scalar_theta(&l) {
                Some((a, b)) => {
                    self.groups[gi].re.push(a);
                    self.groups[gi].im.push(b);
                    Ok(())
                }
                None => Err(Error::Undecidable(
                    "complex block of multiplicity > 1 with a non-scalar leading part".into(),
                )),
            };
        }
        if is_scalar(&l) {
            self.groups[gi].re.push(l[(0, 0)].clone());
            self.groups[gi].im.push(Rational::zero());
            return Ok(());
        }
        let (factors, exact) = factor_char_poly(&l)?;
        if !exact || factors.iter().any(|f| matches!(f.kind, FactorKind::Quadratic { .. }) && f.gaussian().is_none()) {
            return Err(Error::Undecidable("leading part has eigenvalues outside Q(i)".into()));
        }
        if factors.len() >= 2 || factors.iter().any(|f| f.gaussian().is_some()) {
            return self.split(gi, &l, &factors);
        }
        let FactorKind::Linear(lambda) = factors[0].kind.clone() else { unreachable!() };
        self.nilpotent(gi, &l, lambda)
    }

    /// Splits a group along the generalized eigenspaces of its leading part;
    /// complex eigenvalues produce complex groups.
    fn split(&mut self, gi: usize, l: &RMat, factors: &[super::spectrum::Factor]) -> Result<()> {
        let g = self.groups[gi].clone();
        let mut cols = Vec::new();
        let mut parts: Vec<(usize, bool)> = Vec::new();
        // Eigenspaces in order of their first coordinate, so that an already
        // split leading part needs no permutation.
        let mut spaces: Vec<(RMat, &super::spectrum::Factor)> =
            factors.iter().map(|f| (generalized_eigenspace(l, &f.poly), f)).collect();
        spaces.sort_by_key(|(w, _)| (0..w.rows()).find(|&i| (0..w.cols()).any(|j| !w[(i, j)].is_zero())));
        for (w, f) in spaces {
            match f.gaussian() {
                Some((a, b)) => {
                    // Coordinates of L on W, then a complex structure there.
                    let wl = w.transpose();
                    let gram = (&wl * &w).inverse()?;
                    let lw = &(&gram * &wl) * &(l * &w);
                    let sb = complex_structure_basis(&lw, &a, &b)
                        .ok_or_else(|| Error::Undecidable("non-semisimple complex eigenvalue".into()))?;
                    cols.push(&w * &sb);
                    parts.push((w.cols(), true));
                }
                None => {
                    cols.push(w.clone());
                    parts.push((w.cols(), false));
                }
            }
        }
        let t = hstack(&cols);
        let n = self.n();
        if t != Mat::identity(g.len) {
            self.gauge(constant_gauge(&embed(n, g.start, &t)))?;
        }

        let mut subgroups = Vec::new();
        let mut at = g.start;
        for &(len, complex) in &parts {
            subgroups.push(Group { start: at, len, complex, re: g.re.clone(), im: g.im.clone() });
            at += len;
        }
        let local: Vec<(Range<usize>, bool)> =
            subgroups.iter().map(|h| (h.start - g.start..h.start - g.start + h.len, h.complex)).collect();
        let basis = adapted_basis(&local, g.len);
        let s = g.level();
        let nu: Vec<Option<usize>> = basis
            .iter()
            .map(|e| (e.row_group != e.col_group || e.part == Part::Anti).then_some(s))
            .collect();
        let idx = g.idx();
        let k = self.s.a.trunc();
        let sub = PolyMatrix::from_coeffs(self.s.a.coeffs().iter().map(|m| m.select(&idx, &idx)).collect(), k)?;
        let engine =
            Homological { a: &sub, p: self.p(), basis: basis.into_iter().map(|e| e.mat).collect(), nu };
        let (pg, _) = engine.solve(k, |_| None)?;
        let full: Vec<RMat> = pg.coeffs().iter().enumerate().map(|(t, m)| {
            if t == 0 {
                embed(n, g.start, m)
            } else {
                let mut z = Mat::zeros(n, n);
                z.set_block(g.start, g.start, m);
                z
            }
        }).collect();
        let p = PolyMatrix::from_coeffs(full, k)?;
        if p != PolyMatrix::identity(n, k) {
            self.gauge(GaugeTransform::PolyRegular { p })?;
        }
        self.groups.splice(gi..=gi, subgroups);
        self.check_layout()
    }

    /// `L = λ + N` with `N != 0` nilpotent: shear or ramify.
    fn nilpotent(&mut self, gi: usize, l: &RMat, lambda: Rational) -> Result<()> {
        let g = self.groups[gi].clone();
        let n = self.n();
        let mut nm = l.clone();
        for i in 0..g.len {
            nm[(i, i)] = &nm[(i, i)] - &lambda;
        }
        let (t, _) = nilpotent_jordan_basis(&nm);
        if t != Mat::identity(g.len) {
            self.gauge(constant_gauge(&embed(n, g.start, &t)))?;
        }
        let s = g.level();
        let rho = self.p() - s;
        let idx = g.idx();
        let k = self.s.a.trunc();
        let mut coeffs: Vec<RMat> = self.s.a.coeffs()[s..].iter().map(|m| m.select(&idx, &idx)).collect();
        for i in 0..g.len {
            coeffs[0][(i, i)] = &coeffs[0][(i, i)] - &lambda;
        }
        let e = PolyMatrix::from_coeffs(coeffs, k - s)?;
        let (v, v_exact) = newton_slope(&e);
        let cap = v.floor().to_integer().to_usize().unwrap_or(usize::MAX).min(rho);
        for mu in (1..=cap).rev() {
            if let Some(shift) = shear_shifts(&e, mu) {
                self.rank_reductions += 1;
                if self.rank_reductions > self.opts.max_rank_reductions {
                    return Err(Error::Fuel(format!("more than {} rank reductions", self.opts.max_rank_reductions)));
                }
                let mut kfull = vec![0u32; n];
                kfull[g.start..g.start + g.len].copy_from_slice(&shift);
                let grp = &mut self.groups[gi];
                grp.re.push(lambda.clone());
                grp.im.push(Rational::zero());
                grp.re.resize(s + mu, Rational::zero());
                grp.im.resize(s + mu, Rational::zero());
                if kfull.iter().any(|&x| x > 0) {
                    self.gauge(GaugeTransform::DiagMonomial { k: kfull })?;
                }
                return self.check_layout();
            }
        }
        let den = v.denom().to_usize().unwrap_or(0);
        if v_exact && den > 1 && v < rint(rho as i64) {
            self.ramifications += 1;
            if self.ramifications > self.opts.max_ramifications {
                return Err(Error::Fuel(format!("more than {} ramifications", self.opts.max_ramifications)));
            }
            self.gauge(GaugeTransform::Ramification { r: den as u32 })?;
            return self.check_layout();
        }
        if !v_exact && v < Rational::one() {
            return Err(Error::InsufficientPrecision { needed: k + 1, have: k });
        }
        Err(Error::Fuel("rank reduction stalled: no diagonal shear lowers the leading nilpotent part".into()))
    }

    /// Lowers resonant eigenvalues of the residual part by integer shifts.
    fn fix_spectrum(&mut self) -> Result<()> {
        let n = self.n();
        for _ in 0..MAX_SHIFTS {
            let p = self.p();
            need(p, self.s.a.trunc())?;
            let c = self.s.a.coeff(p).clone();
            let chi = poly::square_free_part(&c.char_poly());
            let Some((_, h)) = integer_resonances(&chi).into_iter().max_by_key(|(k, _)| *k) else {
                return Ok(());
            };
            let mut t = Mat::identity(n);
            let mut kfull = vec![0u32; n];
            for g in &self.groups {
                let cg = block_at(&c, &g.range());
                let sg = poly::square_free_part(&cg.char_poly());
                let hg = poly::gcd(&sg, &h);
                if poly::is_constant(&hg) {
                    continue;
                }
                let rest: Poly = poly::divrem(&sg, &hg).0;
                let mut w = generalized_eigenspace(&cg, &hg);
                let mut comp = generalized_eigenspace(&cg, &rest);
                if g.complex {
                    let j = complex_unit(g.len);
                    w = pair_basis(&w, &j);
                    comp = pair_basis(&comp, &j);
                }
                // Columns (or Θ pairs) sorted by leading row to avoid needless permutations.
                let width = if g.complex { 2 } else { 1 };
                let mut units: Vec<(RMat, bool)> = Vec::new();
                for (space, upper) in [(&w, true), (&comp, false)] {
                    for c in (0..space.cols()).step_by(width) {
                        let idx: Vec<usize> = (0..g.len).collect();
                        units.push((space.select(&idx, &(c..c + width).collect::<Vec<_>>()), upper));
                    }
                }
                units.sort_by_key(|(u, _)| (0..u.rows()).find(|&i| !u[(i, 0)].is_zero()));
                let tg = hstack(&units.iter().map(|(u, _)| u.clone()).collect::<Vec<_>>());
                t.set_block(g.start, g.start, &tg);
                let mut at = g.start;
                for (u, upper) in &units {
                    if *upper {
                        kfull[at..at + u.cols()].fill(1);
                    }
                    at += u.cols();
                }
            }
            if t != Mat::identity(n) {
                self.gauge(constant_gauge(&t))?;
            }
            self.gauge(GaugeTransform::DiagMonomial { k: kfull })?;
            if self.s.p < 0 {
                return Ok(());
            }
        }
        Err(Error::Fuel(format!("residual spectrum not good after {MAX_SHIFTS} shifts")))
    }
}

/// Reduces `S` by an admissible chain of gauges to a regular system or to a
/// TRS form whose residual part has good spectrum.
pub fn reduce_linear_full(s: &LinearSystem, opts: ReduceOptions) -> Result<Reduction> {
    if s.p < 0 {
        return Err(Error::Precondition("system is already regular".into()));
    }
    if s.a.coeff(0).is_zero() {
        return Err(Error::Precondition("a singular system needs A(0) != 0".into()));
    }
    let k = s.a.trunc().min(opts.working_order);
    let start = LinearSystem { n: s.n, p: s.p, a: s.a.truncate(k) };
    let mut st = State {
        s: start,
        chain: Vec::new(),
        groups: vec![Group { start: 0, len: s.n, complex: false, re: Vec::new(), im: Vec::new() }],
        ramifications: 0,
        rank_reductions: 0,
        opts,
    };
    loop {
        if st.s.p < 0 {
            break;
        }
        let p = st.p();
        match st.groups.iter().position(|g| g.level() < p) {
            Some(gi) => st.step(gi)?,
            None => {
                st.fix_spectrum()?;
                break;
            }
        }
    }
    let result = if st.s.p < 0 {
        Reduced::Regular(st.s.clone())
    } else {
        let form = recognize_trs(&st.s)
            .ok_or_else(|| Error::Undecidable("reduced system does not read as a TRS form".into()))?;
        if !has_good_spectrum(&form.c)? {
            return Err(Error::Undecidable("residual part keeps a resonance".into()));
        }
        Reduced::Trs(form)
    };
    Ok(Reduction { chain: st.chain, system: st.s, result })
}
