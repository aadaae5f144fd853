//! Dense univariate polynomials over the rationals, lowest degree first.

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use crate::series_core::{rat_to_f64, Mat, Rational};

pub type Poly = Vec<Rational>;

pub fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

pub fn degree(p: &[Rational]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

pub fn is_constant(p: &[Rational]) -> bool {
    degree(p).unwrap_or(0) == 0
}

pub fn monic(p: &[Rational]) -> Poly {
    let p = trim(p.to_vec());
    match p.last() {
        Some(l) => {
            let l = l.clone();
            p.into_iter().map(|c| c / l.clone()).collect()
        }
        None => p,
    }
}

pub fn sub(a: &[Rational], b: &[Rational]) -> Poly {
    let n = a.len().max(b.len());
    let z = Rational::zero();
    trim((0..n).map(|i| a.get(i).unwrap_or(&z).clone() - b.get(i).unwrap_or(&z).clone()).collect())
}

pub fn mul(a: &[Rational], b: &[Rational]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

/// Quotient and remainder; `b` must be nonzero.
pub fn divrem(a: &[Rational], b: &[Rational]) -> (Poly, Poly) {
    let b = trim(b.to_vec());
    let db = degree(&b).expect("division by the zero polynomial");
    let mut r = trim(a.to_vec());
    let lead = b[db].clone();
    let mut q = vec![Rational::zero(); r.len().saturating_sub(db).max(1)];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = r[dr].clone() / lead.clone();
        for (i, bi) in b.iter().enumerate() {
            r[dr - db + i] -= &c * bi;
        }
        q[dr - db] = c;
        r = trim(r);
    }
    (trim(q), r)
}

/// Monic greatest common divisor (empty for `gcd(0, 0)`).
pub fn gcd(a: &[Rational], b: &[Rational]) -> Poly {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let (_, r) = divrem(&a, &b);
        a = b;
        b = r;
    }
    monic(&a)
}

pub fn derivative(p: &[Rational]) -> Poly {
    trim(p.iter().enumerate().skip(1).map(|(k, c)| c * Rational::from_integer(k.into())).collect())
}

/// `p(t + k)`.
pub fn shift(p: &[Rational], k: &Rational) -> Poly {
    // Horner with the linear factor (t + k).
    let mut out: Poly = Vec::new();
    for c in p.iter().rev() {
        out = mul(&out, &[k.clone(), Rational::one()]);
        if out.is_empty() {
            out.push(Rational::zero());
        }
        out[0] += c;
        out = trim(out);
    }
    out
}

pub fn eval(p: &[Rational], t: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * t + c)
}

pub fn eval_mat(p: &[Rational], m: &Mat<Rational>) -> Mat<Rational> {
    let n = m.rows();
    let mut acc = Mat::zeros(n, n);
    for c in p.iter().rev() {
        acc = &acc * m;
        for i in 0..n {
            acc[(i, i)] = acc[(i, i)].clone() + c.clone();
        }
    }
    acc
}

/// Yun's square-free decomposition: `p = lead * prod f_i^i`.
pub fn square_free(p: &[Rational]) -> Vec<(Poly, usize)> {
    let p = monic(p);
    if is_constant(&p) {
        return Vec::new();
    }
    let dp = derivative(&p);
    let mut a = gcd(&p, &dp);
    let mut b = divrem(&p, &a).0;
    let mut c = sub(&divrem(&dp, &a).0, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while !is_constant(&b) {
        let d = gcd(&b, &c);
        let bi = divrem(&b, &d).0;
        if !is_constant(&bi) {
            out.push((monic(&bi), i));
        }
        a = divrem(&a, &d).0;
        b = d;
        c = sub(&divrem(&c, &b).0, &derivative(&b));
        i += 1;
    }
    let _ = a;
    out
}

pub fn square_free_part(p: &[Rational]) -> Poly {
    square_free(p).into_iter().fold(vec![Rational::one()], |acc, (f, _)| mul(&acc, &f))
}

/// `1 + max |a_i / a_d|`, bounding the moduli of all roots.
pub fn cauchy_bound(p: &[Rational]) -> f64 {
    let p = monic(p);
    let d = degree(&p).unwrap_or(0);
    1.0 + p[..d].iter().map(|c| rat_to_f64(&c.abs())).fold(0.0, f64::max)
}

/// All complex roots by the Aberth iteration.
pub fn roots_f64(p: &[Rational]) -> Vec<Complex64> {
    let p = monic(p);
    let Some(d) = degree(&p) else { return Vec::new() };
    let c: Vec<Complex64> = p.iter().map(|x| Complex64::new(rat_to_f64(x), 0.0)).collect();
    let dc: Vec<Complex64> = (1..=d).map(|k| c[k] * k as f64).collect();
    let horner = |cs: &[Complex64], z: Complex64| cs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a);
    let r = cauchy_bound(&p);
    let mut z: Vec<Complex64> =
        (0..d).map(|k| Complex64::from_polar(0.5 * r, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / d as f64)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let f = horner(&c, z[i]);
            if f.norm() == 0.0 {
                continue;
            }
            let ratio = f / horner(&dc, z[i]);
            let s: Complex64 = (0..d).filter(|&j| j != i).map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j])).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Continued-fraction convergents of `x` with denominators up to `qmax`.
pub fn convergents(x: f64, qmax: i64) -> Vec<Rational> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > qmax as i128 {
            break;
        }
        out.push(Rational::new((h2 as i64).into(), (k2 as i64).into()));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac.abs() < 1e-14 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}
