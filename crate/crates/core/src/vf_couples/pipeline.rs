//! Reduction of an invariant couple to TRS form and its refinement.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::jet::{check_invariance, InvariantCouple, VectorFieldJet};
use super::transform::{
    apply_coord_transform, determinacy_shift, lift_gauge, permutation_transform, CoordTransform, TransformChain,
};
use super::trs_form::{linear_part, normalized_y, recognize_trs_vf, trs_permutation, TRSVFForm};
use crate::error::{need, Error, Result};
use crate::linear_systems::{
    has_good_spectrum, kill_vestigial, recognize_trs, reduce_linear_full, spectrum, Eigenvalue, GaugeTransform,
    LinearSystem, ReduceOptions, Reduced,
};
use crate::series_core::scalar::rat_floor;
use crate::series_core::{MultiSeries, Order, PolyMatrix, Rational};
use crate::{RMultiSeries, RPolyMatrix};

/// `4 (n + 1) (q + N + M + 2)`.
pub fn default_working_order(n: usize, q: usize, n_order: usize, m_order: usize) -> usize {
    4 * (n + 1) * (q + n_order + m_order + 2)
}

#[derive(Clone, PartialEq, Debug)]
pub struct Normalized {
    pub chain: TransformChain,
    /// The couple after the preparation steps of `chain`.
    pub couple: InvariantCouple,
    pub e: usize,
    pub p: i64,
    pub unit: RMultiSeries,
    /// `xi = x^e u eta` with `eta_x = x^{p+1}`.
    pub eta: VectorFieldJet,
}

/// Translation by `j_{m+1} gamma` followed by `m` full blow-ups, after which
/// `xi_x = x^m u`; then the largest `x^e` (`e <= m`) is factored out.
pub fn normalize_x_component(c: &InvariantCouple) -> Result<Normalized> {
    if !c.vf.vanishes_at_origin() {
        return Err(Error::Precondition("the field must vanish at the origin".into()));
    }
    let inv = check_invariance(c)?;
    let m = inv.m.ok_or(Error::DegenerateCurve)?;
    let mut chain = TransformChain::new();
    let mut cur = c.clone();
    need(m + 1, c.curve.trunc())?;
    let t = translation_to(&cur, m + 1);
    step(&mut cur, &mut chain, t)?;
    for _ in 0..m {
        step(&mut cur, &mut chain, Some(CoordTransform::blow_up(c.n())))?;
    }
    let n = c.n();
    match cur.vf.xi_x.ord_x() {
        Order::Finite(k) if k == m => {}
        other => {
            return Err(Error::HypothesisViolated(format!("after preparation xi_x has x-order {other}, expected {m}")))
        }
    }
    let u = cur.vf.xi_x.exact_divide_x(m)?;
    if u.coeff(&vec![0; n + 1]).is_zero() {
        return Err(Error::HypothesisViolated("after preparation xi_x is not x^m times a unit".into()));
    }
    let e = cur
        .vf
        .xi_y
        .iter()
        .filter_map(|y| y.ord_x().finite())
        .fold(m, usize::min);
    let inv_u = u.reciprocal()?;
    let k = cur.vf.trunc();
    let mut xp = vec![0u32; n + 1];
    xp[0] = (m - e) as u32;
    let eta_x = MultiSeries::monomial(n, k - e, xp, Rational::one());
    let eta_y = cur.vf.xi_y.iter().map(|y| (y * &inv_u).exact_divide_x(e)).collect::<Result<Vec<_>>>()?;
    let eta = VectorFieldJet::new(eta_x, eta_y)?;
    Ok(Normalized { chain, couple: cur, e, p: m as i64 - e as i64 - 1, unit: u, eta })
}

fn translation_to(c: &InvariantCouple, k: usize) -> Option<CoordTransform> {
    let beta = c.curve.jet(k);
    if beta.iter().all(|b| b.is_zero()) {
        None
    } else {
        Some(CoordTransform::PolyTranslation { beta })
    }
}

fn step(cur: &mut InvariantCouple, chain: &mut TransformChain, t: Option<CoordTransform>) -> Result<()> {
    if let Some(t) = t {
        *cur = apply_coord_transform(cur, &t)?;
        chain.push(t);
    }
    Ok(())
}

/// `A(x) = d eta_y / dy (x, gamma(x))` as the system `x^{p+1} y' = A y`.
pub fn associated_linear_system(eta: &VectorFieldJet, curve: &super::jet::FormalCurve) -> Result<LinearSystem> {
    let n = eta.n;
    let a0 = match eta.xi_x.terms().iter().next() {
        Some((a, c)) if eta.xi_x.terms().len() == 1 && a[1..].iter().all(|&b| b == 0) && c.is_one() => a[0],
        _ => return Err(Error::Precondition("eta_x must be exactly a power of x".into())),
    };
    if a0 == 0 {
        return Err(Error::Precondition("eta is not singular (p = -1)".into()));
    }
    let mut rows = Vec::with_capacity(n);
    for comp in &eta.xi_y {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(comp.partial(j + 1)?.substitute_curve(&curve.gamma_y)?);
        }
        rows.push(row);
    }
    let a = PolyMatrix::from_entries(&rows)?;
    Ok(LinearSystem { n, p: a0 as i64 - 1, a })
}

#[derive(Clone, Copy, Debug)]
pub struct VfOptions {
    pub working_order: usize,
    pub max_ramifications: usize,
    pub max_rank_reductions: usize,
}

impl VfOptions {
    pub fn new(working_order: usize) -> Self {
        VfOptions { working_order, max_ramifications: 16, max_rank_reductions: 16 }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct VfReduction {
    pub chain: TransformChain,
    /// The input couple transformed by `chain`.
    pub couple: InvariantCouple,
    pub form: TRSVFForm,
}

/// Reads the couple as TRS of type `(q, 0, 0)` with good spectrum, with `q`
/// taken from the orders of the `x` component and of the linear part.
fn already_trs(c: &InvariantCouple) -> Option<TRSVFForm> {
    let kx = c.vf.xi_x.ord_x().finite()?;
    // The linear part of xi_y / u carries the factor x^e exactly.
    let u = c.vf.xi_x.exact_divide_x(kx).ok()?;
    let inv = u.reciprocal().ok()?;
    let eta: Vec<RMultiSeries> = c.vf.xi_y.iter().map(|y| y * &inv).collect();
    let e = linear_part(&eta).ok()?.order().finite()?;
    let q = kx.checked_sub(e + 1)?;
    let f = recognize_trs_vf(&c.vf, q, 0, 0).ok()?;
    has_good_spectrum(&f.c).ok()?.then_some(f)
}

/// Finite chain of admissible transformations bringing the couple to TRS
/// form of type `(q, 0, 0)` with a good-spectrum residual part.
pub fn reduce_vf_trs(c: &InvariantCouple, opts: VfOptions) -> Result<VfReduction> {
    let c = c.truncate(opts.working_order);
    if let Some(form) = already_trs(&c) {
        return Ok(VfReduction { chain: TransformChain::new(), couple: c, form });
    }
    let norm = normalize_x_component(&c)?;
    let mut chain = norm.chain.clone();
    let mut cur = norm.couple.clone();
    if norm.p < 0 {
        step(&mut cur, &mut chain, Some(CoordTransform::blow_up(c.n())))?;
        let form = recognize_trs_vf(&cur.vf, 0, 0, 0)?;
        return Ok(VfReduction { chain, couple: cur, form });
    }
    if let Some(form) = already_trs(&cur) {
        return Ok(VfReduction { chain, couple: cur, form });
    }
    let theta = associated_linear_system(&norm.eta, &cur.curve)?;
    if theta.a.coeff(0).is_zero() {
        return Err(Error::Precondition("associated linear system has A(0) = 0".into()));
    }
    let lin = reduce_linear_full(
        &theta,
        ReduceOptions {
            working_order: opts.working_order,
            max_ramifications: opts.max_ramifications,
            max_rank_reductions: opts.max_rank_reductions,
        },
    )?;
    let lifted = TransformChain { steps: lin.chain.iter().flat_map(lift_gauge).collect() };
    let q_lin = match &lin.result {
        Reduced::Trs(f) => Some(f.q),
        Reduced::Regular(_) => None,
    };
    let m = determinacy_shift(&lifted, q_lin.map_or(1, |q| q + 1));
    need(2 * m, cur.curve.trunc())?;
    let t = translation_to(&cur, 2 * m);
    step(&mut cur, &mut chain, t)?;
    for _ in 0..m {
        step(&mut cur, &mut chain, Some(CoordTransform::blow_up(c.n())))?;
    }
    for t in lifted.steps {
        step(&mut cur, &mut chain, Some(t))?;
    }
    let Some(q) = q_lin else {
        step(&mut cur, &mut chain, Some(CoordTransform::blow_up(c.n())))?;
        let form = recognize_trs_vf(&cur.vf, 0, 0, 0)?;
        return Ok(VfReduction { chain, couple: cur, form });
    };
    let perm = trs_permutation(&cur.vf, q)?;
    if perm.iter().enumerate().any(|(i, &p)| i != p) {
        step(&mut cur, &mut chain, Some(permutation_transform(&perm)))?;
    }
    let form = recognize_trs_vf(&cur.vf, q, 0, 0)?;
    if !has_good_spectrum(&form.c)? {
        return Err(Error::HypothesisViolated("residual part of the lifted form lacks a good spectrum".into()));
    }
    Ok(VfReduction { chain, couple: cur, form })
}

/// `floor(max Re spec C)`.
fn floor_max_re(c: &crate::RMat) -> Result<BigInt> {
    let sp = spectrum(c)?;
    let mut best: Option<BigInt> = None;
    for (ev, _) in &sp.eigenvalues {
        let f = match ev {
            Eigenvalue::Rational(r) => rat_floor(r),
            Eigenvalue::Quadratic { a, d, .. } if d.is_negative() => rat_floor(a),
            Eigenvalue::Quadratic { a, b, d } => floor_quadratic(a, b, d),
            Eigenvalue::Float { re, .. } => {
                let k = re.floor();
                if (re - k).abs() < 1e-9 || (re - k - 1.0).abs() < 1e-9 {
                    return Err(Error::Undecidable(format!("real part {re} too close to an integer")));
                }
                BigInt::from(k as i64)
            }
        };
        best = Some(match best {
            Some(b) if b >= f => b,
            _ => f,
        });
    }
    best.ok_or_else(|| Error::Precondition("empty residual matrix".into()))
}

/// `floor(a + b sqrt(d))` for `d > 0` not a square.
fn floor_quadratic(a: &Rational, b: &Rational, d: &Rational) -> BigInt {
    // a + b sqrt(d) >= k  <=>  b sqrt(d) >= k - a.
    let ge = |k: &BigInt| {
        let t = Rational::from_integer(k.clone()) - a.clone();
        let lhs = b.clone() * b.clone() * d.clone();
        let rhs = t.clone() * t.clone();
        if b.is_negative() {
            !t.is_positive() && lhs <= rhs
        } else {
            !t.is_positive() || lhs >= rhs
        }
    };
    let approx = crate::series_core::rat_to_f64(a) + crate::series_core::rat_to_f64(b) * crate::series_core::rat_to_f64(d).sqrt();
    let mut k = BigInt::from(approx.floor() as i64);
    while !ge(&k) {
        k -= 1;
    }
    while ge(&(k.clone() + 1)) {
        k += 1;
    }
    k
}

/// Refinement parameters `(m, l, l')`.
pub fn refine_parameters(form: &TRSVFForm, n_order: usize, m_order: usize) -> Result<(usize, usize, usize)> {
    let q = form.q;
    let m = q + 1 + n_order + m_order;
    let spec_bound: BigInt = floor_max_re(&form.c)? - BigInt::from(m_order as i64) + 1;
    let mut l = m - q;
    if spec_bound > BigInt::from(l as i64) {
        l = usize::try_from(spec_bound).map_err(|_| Error::Precondition("spectrum bound out of range".into()))?;
    }
    let lp = (l + m).max(l + m_order + 1);
    Ok((m, l, lp))
}

/// Brings a couple in TRS form `(q, 0, 0)` to type `(q, N, M)`: translation
/// by `j_{l'} gamma`, `l` blow-ups, the gauge killing the vestigial part to
/// height `N + M`, then `M` blow-ups.
pub fn refine_trs(c: &InvariantCouple, n_order: usize, m_order: usize) -> Result<VfReduction> {
    let form0 = already_trs(c)
        .ok_or_else(|| Error::Precondition("couple is not in TRS form of type (q, 0, 0) with good spectrum".into()))?;
    let q = form0.q;
    let (_, _, eta) = normalized_y(&c.vf, q)?;
    let mut xq = vec![0u32; c.n() + 1];
    xq[0] = (q + 1) as u32;
    let eta = VectorFieldJet::new(MultiSeries::monomial(c.n(), c.vf.trunc(), xq, Rational::one()), eta)?;
    let theta = associated_linear_system(&eta, &c.curve)?;
    let lf = recognize_trs(&theta)
        .filter(|f| f.perm.iter().enumerate().all(|(i, &p)| i == p))
        .ok_or_else(|| Error::HypothesisViolated("associated system lost its TRS shape".into()))?;
    let (gauge, _) = kill_vestigial(&lf, n_order + m_order)?;
    let GaugeTransform::PolyRegular { p } = gauge else { unreachable!("kill_vestigial returns a regular gauge") };
    let (_, l, lp) = refine_parameters(&form0, n_order, m_order)?;
    let mut chain = TransformChain::new();
    let mut cur = c.clone();
    need(lp, cur.curve.trunc())?;
    let t = translation_to(&cur, lp);
    step(&mut cur, &mut chain, t)?;
    for _ in 0..l {
        step(&mut cur, &mut chain, Some(CoordTransform::blow_up(c.n())))?;
    }
    if !is_identity(&p) {
        step(&mut cur, &mut chain, Some(CoordTransform::PolyRegular { p }))?;
    }
    for _ in 0..m_order {
        step(&mut cur, &mut chain, Some(CoordTransform::blow_up(c.n())))?;
    }
    let form = recognize_trs_vf(&cur.vf, q, n_order, m_order)?;
    Ok(VfReduction { chain, couple: cur, form })
}

fn is_identity(p: &RPolyMatrix) -> bool {
    let n = p.n();
    p.coeffs().iter().enumerate().all(|(k, m)| {
        (0..n).all(|i| (0..n).all(|j| m[(i, j)] == if k == 0 && i == j { Rational::one() } else { Rational::zero() }))
    })
}
