//! Exact spectral data of constant rational matrices.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::{self, Poly};
use crate::error::{Error, Result};
use crate::series_core::{rat_to_f64, Mat, Rational};
use crate::RMat;

#[derive(Clone, PartialEq, Debug)]
pub enum Eigenvalue {
    Rational(Rational),
    /// `a + b sqrt(d)` with `d` not the square of a rational.
    Quadratic { a: Rational, b: Rational, d: Rational },
    Float { re: f64, im: f64 },
}

impl Eigenvalue {
    pub fn re_f64(&self) -> f64 {
        match self {
            Eigenvalue::Rational(r) => rat_to_f64(r),
            Eigenvalue::Quadratic { a, b, d } => {
                if d.is_negative() {
                    rat_to_f64(a)
                } else {
                    rat_to_f64(a) + rat_to_f64(b) * rat_to_f64(d).sqrt()
                }
            }
            Eigenvalue::Float { re, .. } => *re,
        }
    }

    pub fn im_f64(&self) -> f64 {
        match self {
            Eigenvalue::Rational(_) => 0.0,
            Eigenvalue::Quadratic { b, d, .. } => {
                if d.is_negative() {
                    rat_to_f64(b) * (-rat_to_f64(d)).sqrt()
                } else {
                    0.0
                }
            }
            Eigenvalue::Float { im, .. } => *im,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<(Eigenvalue, usize)>,
    pub exact: bool,
}

impl Spectrum {
    pub fn max_re(&self) -> f64 {
        self.eigenvalues.iter().map(|(e, _)| e.re_f64()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.iter().map(|(_, m)| m).sum()
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum FactorKind {
    Linear(Rational),
    /// Roots `a ± sqrt(d)`; `d` is not a rational square.
    Quadratic { a: Rational, d: Rational },
    /// No exact split found; roots only known in floating point.
    Other,
}

/// A monic factor of the characteristic polynomial with its multiplicity.
#[derive(Clone, PartialEq, Debug)]
pub struct Factor {
    pub poly: Poly,
    pub mult: usize,
    pub kind: FactorKind,
}

impl Factor {
    /// `(re, im)` of the root with positive imaginary part, when both are rational.
    pub fn gaussian(&self) -> Option<(Rational, Rational)> {
        match &self.kind {
            FactorKind::Quadratic { a, d } if d.is_negative() => rational_sqrt(&-d).map(|s| (a.clone(), s)),
            _ => None,
        }
    }
}

fn isqrt_exact(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    Some(Rational::new(isqrt_exact(r.numer())?, isqrt_exact(r.denom())?))
}

fn linear(l: &Rational) -> Poly {
    vec![-l.clone(), Rational::one()]
}

/// Splits a monic square-free polynomial into rational roots, quadratics
/// and a leftover that resisted exact splitting.
fn split_square_free(s: &Poly) -> (Vec<FactorKind>, Vec<Poly>, Poly) {
    let mut kinds = Vec::new();
    let mut polys = Vec::new();
    let mut rem = s.clone();
    let try_root = |rem: &mut Poly, kinds: &mut Vec<FactorKind>, polys: &mut Vec<Poly>, cand: &Rational| -> bool {
        if poly::degree(rem).unwrap_or(0) >= 1 && poly::eval(rem, cand).is_zero() {
            *rem = poly::divrem(rem, &linear(cand)).0;
            kinds.push(FactorKind::Linear(cand.clone()));
            polys.push(linear(cand));
            true
        } else {
            false
        }
    };
    for z in poly::roots_f64(s) {
        if z.im.abs() > 1e-7 * (1.0 + z.norm()) {
            continue;
        }
        for cand in poly::convergents(z.re, 100_000_000).iter().rev() {
            if try_root(&mut rem, &mut kinds, &mut polys, cand) {
                break;
            }
        }
    }
    loop {
        match poly::degree(&rem).unwrap_or(0) {
            0 => break,
            1 => {
                let r = -rem[0].clone() / rem[1].clone();
                try_root(&mut rem, &mut kinds, &mut polys, &r);
            }
            2 => {
                let m = poly::monic(&rem);
                let a = -m[1].clone() / Rational::from_integer(2.into());
                let d = &a * &a - m[0].clone();
                match rational_sqrt(&d) {
                    Some(sq) => {
                        let r1 = &a + &sq;
                        let r2 = &a - &sq;
                        try_root(&mut rem, &mut kinds, &mut polys, &r1);
                        try_root(&mut rem, &mut kinds, &mut polys, &r2);
                    }
                    None => {
                        kinds.push(FactorKind::Quadratic { a, d });
                        polys.push(m);
                        rem = vec![Rational::one()];
                    }
                }
            }
            _ => {
                if !split_quadratic(&mut rem, &mut kinds, &mut polys) {
                    break;
                }
            }
        }
    }
    (kinds, polys, rem)
}

/// Looks for a rational quadratic factor among pairs of float roots.
fn split_quadratic(rem: &mut Poly, kinds: &mut Vec<FactorKind>, polys: &mut Vec<Poly>) -> bool {
    let z = poly::roots_f64(rem);
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let (s, p) = (z[i] + z[j], z[i] * z[j]);
            if s.im.abs() > 1e-7 * (1.0 + s.norm()) || p.im.abs() > 1e-7 * (1.0 + p.norm()) {
                continue;
            }
            for cs in poly::convergents(s.re, 1_000_000).iter().rev().take(3) {
                for cp in poly::convergents(p.re, 1_000_000).iter().rev().take(3) {
                    let q: Poly = vec![cp.clone(), -cs.clone(), Rational::one()];
                    let (quo, r) = poly::divrem(rem, &q);
                    if r.is_empty() {
                        let a = cs.clone() / Rational::from_integer(2.into());
                        let d = &a * &a - cp.clone();
                        *rem = quo;
                        match rational_sqrt(&d) {
                            Some(sq) => {
                                for root in [&a + &sq, &a - &sq] {
                                    kinds.push(FactorKind::Linear(root.clone()));
                                    polys.push(linear(&root));
                                }
                            }
                            None => {
                                kinds.push(FactorKind::Quadratic { a, d });
                                polys.push(q);
                            }
                        }
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Factors `det(tI - C)` into pieces over the rationals.
pub fn factor_char_poly(c: &RMat) -> Result<(Vec<Factor>, bool)> {
    if !c.is_square() {
        return Err(Error::ShapeError("spectrum of a non-square matrix".into()));
    }
    let chi = c.char_poly();
    let mut out = Vec::new();
    let mut exact = true;
    for (s, mult) in poly::square_free(&chi) {
        let (kinds, polys, rem) = split_square_free(&s);
        for (kind, p) in kinds.into_iter().zip(polys) {
            out.push(Factor { poly: p, mult, kind });
        }
        if !poly::is_constant(&rem) {
            exact = false;
            out.push(Factor { poly: poly::monic(&rem), mult, kind: FactorKind::Other });
        }
    }
    Ok((out, exact))
}

pub fn spectrum(c: &RMat) -> Result<Spectrum> {
    let (factors, exact) = factor_char_poly(c)?;
    let mut eigenvalues = Vec::new();
    for f in factors {
        match f.kind {
            FactorKind::Linear(l) => eigenvalues.push((Eigenvalue::Rational(l), f.mult)),
            FactorKind::Quadratic { a, d } => {
                for b in [Rational::one(), -Rational::one()] {
                    eigenvalues.push((Eigenvalue::Quadratic { a: a.clone(), b, d: d.clone() }, f.mult));
                }
            }
            FactorKind::Other => {
                for z in poly::roots_f64(&f.poly) {
                    eigenvalues.push((Eigenvalue::Float { re: z.re, im: z.im }, f.mult));
                }
            }
        }
    }
    Ok(Spectrum { eigenvalues, exact })
}

/// Integers `k >= 1` such that two roots of the square-free `s` differ by
/// `k`, each with the monic polynomial whose roots are the upper members
/// `λ` of such pairs (`λ - k` also a root).
pub fn integer_resonances(s: &Poly) -> Vec<(u64, Poly)> {
    let bound = 2.0 * poly::cauchy_bound(s);
    let candidates: Vec<u64> = if bound <= 4096.0 {
        (1..=bound.floor() as u64).collect()
    } else {
        let z = poly::roots_f64(s);
        let mut ks: Vec<u64> = Vec::new();
        for a in &z {
            for b in &z {
                let d: Complex64 = a - b;
                let k = d.re.round();
                let tol = 1e-3 * (1.0 + d.norm());
                if k >= 1.0 && (d.re - k).abs() < tol && d.im.abs() < tol {
                    ks.push(k as u64);
                }
            }
        }
        ks.sort_unstable();
        ks.dedup();
        ks
    };
    let mut out = Vec::new();
    for k in candidates {
        let shifted = poly::shift(s, &-Rational::from_integer(k.into()));
        let h = poly::gcd(s, &shifted);
        if !poly::is_constant(&h) {
            out.push((k, h));
        }
    }
    out
}

/// No two eigenvalues of `C` differ by a nonzero integer.
///
/// Decided exactly: `gcd(χ(t), χ(t + k))` is tested for every admissible `k`.
pub fn has_good_spectrum(c: &RMat) -> Result<bool> {
    if !c.is_square() {
        return Err(Error::ShapeError("spectrum of a non-square matrix".into()));
    }
    let s = poly::square_free_part(&c.char_poly());
    Ok(integer_resonances(&s).is_empty())
}

/// Columns spanning `ker f(C)^n`.
pub fn generalized_eigenspace(c: &RMat, f: &Poly) -> RMat {
    let fc = poly::eval_mat(f, c);
    let mut m = fc.clone();
    for _ in 1..c.rows() {
        m = &m * &fc;
    }
    m.nullspace()
}

/// Columns of `a` and `b` side by side.
pub fn hstack(parts: &[RMat]) -> RMat {
    let rows = parts.iter().map(Mat::rows).next().unwrap_or(0);
    let cols: usize = parts.iter().map(Mat::cols).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.set_block(0, at, p);
        at += p.cols();
    }
    out
}

fn column(m: &RMat, j: usize) -> RMat {
    Mat::from_fn(m.rows(), 1, |i, _| m[(i, j)].clone())
}

fn in_span(basis: &[RMat], v: &RMat, n: usize) -> bool {
    if basis.is_empty() {
        return v.is_zero();
    }
    let b = hstack(basis);
    let r = b.rank();
    let with = hstack(&[b, v.clone()]);
    let _ = n;
    with.rank() == r
}

/// Basis in which a nilpotent `N` becomes a direct sum of Jordan blocks
/// with ones on the superdiagonal, longest chains first.
pub fn nilpotent_jordan_basis(nm: &RMat) -> (RMat, Vec<usize>) {
    let m = nm.rows();
    let mut powers = vec![Mat::identity(m)];
    while !powers.last().expect("nonempty").is_zero() {
        let next = &powers[powers.len() - 1] * nm;
        powers.push(next);
        if powers.len() > m + 1 {
            break;
        }
    }
    let index = powers.len() - 1;
    let kernels: Vec<RMat> = powers.iter().map(Mat::nullspace).collect();
    let mut chains: Vec<Vec<RMat>> = Vec::new();
    for level in (1..=index).rev() {
        let mut span: Vec<RMat> = (0..kernels[level - 1].cols()).map(|j| column(&kernels[level - 1], j)).collect();
        for ch in &chains {
            let len = ch.len();
            span.push(ch[len - level].clone());
        }
        for j in 0..kernels[level].cols() {
            let v = column(&kernels[level], j);
            if !in_span(&span, &v, m) {
                let mut chain = vec![v.clone()];
                for _ in 1..level {
                    let next = nm * chain.last().expect("nonempty");
                    chain.push(next);
                }
                span.push(v);
                chains.push(chain);
            }
        }
    }
    let mut cols = Vec::new();
    let mut sizes = Vec::new();
    for ch in &chains {
        sizes.push(ch.len());
        for v in ch.iter().rev() {
            cols.push(v.clone());
        }
    }
    (hstack(&cols), sizes)
}

/// For `L` with `(L - a)^2 = -b^2` on its whole space, a basis
/// `v_1, S v_1, v_2, S v_2, ..` with `S = (L - a)/b`, in which `L` reads
/// `Θ(a + ib) ⊗ I`. `None` if `L` is not of that form.
pub fn complex_structure_basis(l: &RMat, a: &Rational, b: &Rational) -> Option<RMat> {
    let m = l.rows();
    if m % 2 != 0 {
        return None;
    }
    let mut s = l.clone();
    for i in 0..m {
        s[(i, i)] = s[(i, i)].clone() - a.clone();
    }
    let s = s.scale(&(Rational::one() / b.clone()));
    let mut sq = &s * &s;
    for i in 0..m {
        sq[(i, i)] = sq[(i, i)].clone() + Rational::one();
    }
    if !sq.is_zero() {
        return None;
    }
    let mut cols: Vec<RMat> = Vec::new();
    for j in 0..m {
        if cols.len() == m {
            break;
        }
        let mut e = Mat::zeros(m, 1);
        e[(j, 0)] = Rational::one();
        if !in_span(&cols, &e, m) {
            let se = &s * &e;
            cols.push(e);
            cols.push(se);
        }
    }
    Some(hstack(&cols))
}

/// Converts an integer-valued rational to `i64` when it fits.
pub fn as_small_int(r: &Rational) -> Option<i64> {
    r.is_integer().then(|| r.to_integer().to_i64()).flatten()
}
