//! Rotational matrices `R(x)`, the orthogonal matrices `Omega_R(x)` solving
//! `x^{d+2} Omega' = -R Omega` (`d = deg R`), and the straightening of TRS
//! fields whose exponential part has dominant rotation.
//!
//! `Omega_R` is the direct sum of `cos a_j I + sin a_j J` over the rotated
//! pairs and the identity elsewhere, with
//! `a_j(x) = sum_k b_j^k / ((d + 1 - k) x^{d+1-k})`.
//! The straightening substitution is `z = Omega_R(x) y`; it replaces the
//! exponential part `D` by `D - R`.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::dynamics_numeric::field::{FPoly, Field};
use crate::error::{Error, Result};
use crate::linear_systems::{dominant_rotation, exponential_matrix, no_dominant_rotation, Exponent};
use crate::series_core::json::{as_array, as_usize, field};
use crate::series_core::scalar::rat_to_f64;
use crate::series_core::{BlockKind, BlockStructure, Json, Mat, PolyMatrix, Rational};
use crate::vf_couples::TRSVFForm;
use crate::{FMat, RMat, RPolyMatrix};

const PI_DIGITS: &str = "314159265358979323846264338327950288419716939937510582097494459230781640628620899862803482534211706798";

fn two_pi() -> Rational {
    let num: BigInt = PI_DIGITS.parse().expect("digits");
    let den = num_traits::pow(BigInt::from(10), PI_DIGITS.len() - 1);
    Rational::new(num * 2, den)
}

/// `R(x) = sum_j Theta(0, b_j(x))` on the listed pairs, zero elsewhere.
#[derive(Clone, PartialEq, Debug)]
pub struct RotationalMatrix {
    pub n: usize,
    pub degree: usize,
    /// First row of each rotated pair and `b_j^0 .. b_j^degree`.
    pub pairs: Vec<(usize, Vec<Rational>)>,
}

impl RotationalMatrix {
    pub fn new(n: usize, degree: usize, pairs: Vec<(usize, Vec<Rational>)>) -> Result<Self> {
        let mut used = vec![false; n];
        let mut out = Vec::with_capacity(pairs.len());
        for (p, mut b) in pairs {
            if p + 1 >= n || used[p] || used[p + 1] {
                return Err(Error::ShapeError(format!("pair at row {p} overlaps or leaves the {n}x{n} frame")));
            }
            if b.len() > degree + 1 {
                return Err(Error::ShapeError(format!("pair at row {p} has {} coefficients, degree is {degree}", b.len())));
            }
            if b.iter().all(Zero::is_zero) {
                return Err(Error::ShapeError(format!("pair at row {p} has b = 0")));
            }
            b.resize(degree + 1, Rational::zero());
            used[p] = true;
            used[p + 1] = true;
            out.push((p, b));
        }
        out.sort_by_key(|(p, _)| *p);
        Ok(RotationalMatrix { n, degree, pairs: out })
    }

    /// Dimension of the unrotated part.
    pub fn axis_dim(&self) -> usize {
        self.n - 2 * self.pairs.len()
    }

    pub fn neg(&self) -> Self {
        RotationalMatrix {
            n: self.n,
            degree: self.degree,
            pairs: self.pairs.iter().map(|(p, b)| (*p, b.iter().map(|c| -c.clone()).collect())).collect(),
        }
    }

    /// `self + other`; both must rotate the same pairs with the same degree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let same = self.n == other.n
            && self.degree == other.degree
            && self.pairs.len() == other.pairs.len()
            && self.pairs.iter().zip(&other.pairs).all(|(a, b)| a.0 == b.0);
        if !same {
            return Err(Error::ShapeError("rotational matrices have different layouts".into()));
        }
        let pairs = self
            .pairs
            .iter()
            .zip(&other.pairs)
            .map(|((p, a), (_, b))| (*p, a.iter().zip(b).map(|(u, v)| u + v).collect()))
            .collect();
        Ok(RotationalMatrix { n: self.n, degree: self.degree, pairs })
    }

    /// Coefficient matrices `R_0 .. R_degree`.
    pub fn matrix(&self) -> RPolyMatrix {
        let coeffs = (0..=self.degree)
            .map(|k| {
                let mut m = Mat::zeros(self.n, self.n);
                for (p, b) in &self.pairs {
                    m[(*p, p + 1)] = -b[k].clone();
                    m[(p + 1, *p)] = b[k].clone();
                }
                m
            })
            .collect();
        PolyMatrix::from_coeffs(coeffs, self.degree + 1).expect("square")
    }

    /// The exact angle `a_j(x)` of pair `j`.
    pub fn angle(&self, j: usize, x: &Rational) -> Rational {
        let d = self.degree;
        let inv = x.recip();
        let mut s = Rational::zero();
        for (k, b) in self.pairs[j].1.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            let m = d + 1 - k;
            s += b * num_traits::pow(inv.clone(), m) / Rational::from_integer(BigInt::from(m));
        }
        s
    }

    /// `a_j(x) mod 2 pi` as a float, exact up to the final rounding.
    pub fn reduced_angle(&self, j: usize, x: f64) -> f64 {
        let xr = Rational::from_float(x).expect("finite");
        reduce_mod_2pi(&self.angle(j, &xr))
    }
}

fn reduce_mod_2pi(a: &Rational) -> f64 {
    if a.abs() < Rational::from_integer(BigInt::from(8)) {
        return rat_to_f64(a);
    }
    let tp = two_pi();
    let k = (a / &tp).floor();
    rat_to_f64(&(a - k * tp))
}

/// `Omega_R(x)` for `x > 0`.
pub fn omega_eval(r: &RotationalMatrix, x: f64) -> Result<FMat> {
    let xr = positive(x)?;
    Ok(omega_at(r, &xr))
}

fn positive(x: f64) -> Result<Rational> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::DomainError(format!("Omega is defined for x > 0, got {x}")));
    }
    Ok(Rational::from_float(x).expect("finite"))
}

fn omega_at(r: &RotationalMatrix, x: &Rational) -> FMat {
    let mut m = Mat::identity(r.n);
    for (j, (p, _)) in r.pairs.iter().enumerate() {
        let a = reduce_mod_2pi(&r.angle(j, x));
        let (s, c) = a.sin_cos();
        m[(*p, *p)] = c;
        m[(*p, p + 1)] = -s;
        m[(p + 1, *p)] = s;
        m[(p + 1, p + 1)] = c;
    }
    m
}

/// Applies `Omega_R(x)` (or its inverse) to vectors without forming matrices.
#[derive(Clone, Debug)]
pub struct StraightenerEval {
    pub r: RotationalMatrix,
}

impl StraightenerEval {
    pub fn new(r: RotationalMatrix) -> Self {
        StraightenerEval { r }
    }

    pub fn omega(&self, x: f64) -> Result<FMat> {
        omega_eval(&self.r, x)
    }

    /// `Omega(x) y`, or `Omega(x)^{-1} y` when `inverse`.
    pub fn apply(&self, x: f64, y: &[f64], inverse: bool) -> Vec<f64> {
        let mut out = y.to_vec();
        for j in 0..self.r.pairs.len() {
            let p = self.r.pairs[j].0;
            let a = self.r.reduced_angle(j, x);
            let (s, c) = a.sin_cos();
            let s = if inverse { -s } else { s };
            out[p] = c * y[p] - s * y[p + 1];
            out[p + 1] = s * y[p] + c * y[p + 1];
        }
        out
    }
}

/// Rotational part of an exponential part with dominant rotation: for each
/// such complex block, `b = j_{v-1} c` with `v = ord Re c`.
pub fn extract_rotational(bs: &BlockStructure, exps: &[Exponent], q: usize) -> Option<RotationalMatrix> {
    if q == 0 {
        return None;
    }
    let mut pairs = Vec::new();
    for (b, (range, e)) in bs.blocks.iter().zip(bs.ranges().into_iter().zip(exps)) {
        if b.kind != BlockKind::Complex || !dominant_rotation(e) {
            continue;
        }
        let v = e.ord_re().unwrap_or(q);
        let coeffs: Vec<Rational> = (0..q).map(|k| if k < v { e.im[k].clone() } else { Rational::zero() }).collect();
        for p in range.step_by(2) {
            pairs.push((p, coeffs.clone()));
        }
    }
    if pairs.is_empty() {
        return None;
    }
    RotationalMatrix::new(bs.dim(), q - 1, pairs).ok()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OmegaSign {
    /// `x^{d+2} Omega' = -R Omega`.
    Integral,
    /// `x^{d+2} Omega' = R Omega`.
    Direct,
    Neither,
}

#[derive(Clone, PartialEq, Debug)]
pub struct OmegaReport {
    pub samples: usize,
    /// `max |Omega^T Omega - I|`.
    pub orthogonality: f64,
    /// `max |Omega_{R1+R2} - Omega_{R1} Omega_{R2}|`.
    pub group_law: f64,
    /// Relative residual of `x^{d+2} Omega' + R Omega`.
    pub ode_integral: f64,
    /// Relative residual of `x^{d+2} Omega' - R Omega`.
    pub ode_direct: f64,
    pub supported: OmegaSign,
    /// `max |C Omega - Omega C|` when a matrix `C` was given.
    pub commutator: Option<f64>,
}

fn max_abs(m: &FMat) -> f64 {
    (0..m.rows()).flat_map(|i| (0..m.cols()).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].abs()).fold(0.0, f64::max)
}

/// Numeric checks of `Omega_R` at the sample abscissae, the group law taken
/// against `partner`. The derivative is a five-point central difference over
/// exact rational abscissae with an angle increment of `1e-4`.
pub fn verify_omega_properties(
    r: &RotationalMatrix,
    partner: &RotationalMatrix,
    c: Option<&RMat>,
    xs: &[f64],
) -> Result<OmegaReport> {
    let sum = r.add(partner)?;
    let rm = r.matrix().map(rat_to_f64);
    let cf = c.map(|c| c.map(rat_to_f64));
    let n = r.n;
    let id: FMat = Mat::identity(n);
    let mut rep = OmegaReport {
        samples: xs.len(),
        orthogonality: 0.0,
        group_law: 0.0,
        ode_integral: 0.0,
        ode_direct: 0.0,
        supported: OmegaSign::Neither,
        commutator: None,
    };
    for &x in xs {
        let xr = positive(x)?;
        let om = omega_at(r, &xr);
        rep.orthogonality = rep.orthogonality.max(max_abs(&(&(&om.transpose() * &om) - &id)));
        let g = &omega_at(&sum, &xr) - &(&om * &omega_at(partner, &xr));
        rep.group_law = rep.group_law.max(max_abs(&g));

        // |a'| = |b(x)| / x^{d+2}; pick h with |a'| h = 1e-4.
        let rx = rm.eval(&x);
        let speed = max_abs(&rx) / x.powi(r.degree as i32 + 2);
        if speed > 0.0 {
            let h = (1e-4 / speed).min(1e-3 * x);
            let hr = Rational::from_float(h).expect("finite");
            let at = |k: i64| omega_at(r, &(&xr + &hr * Rational::from_integer(BigInt::from(k))));
            let mut fd = &(&at(-2) - &at(2)) + &(&at(1) - &at(-1)).scale(&8.0);
            let scale = x.powi(r.degree as i32 + 2) / (12.0 * h);
            fd = fd.scale(&scale);
            let ro = &rx * &om;
            let norm = max_abs(&ro).max(f64::MIN_POSITIVE);
            rep.ode_integral = rep.ode_integral.max(max_abs(&(&fd + &ro)) / norm);
            rep.ode_direct = rep.ode_direct.max(max_abs(&(&fd - &ro)) / norm);
        }
        if let Some(cf) = &cf {
            let k = &(cf * &om) - &(&om * cf);
            rep.commutator = Some(rep.commutator.unwrap_or(0.0).max(max_abs(&k)));
        }
    }
    rep.supported = if rep.ode_integral < 1e-6 {
        OmegaSign::Integral
    } else if rep.ode_direct < 1e-6 {
        OmegaSign::Direct
    } else {
        OmegaSign::Neither
    };
    Ok(rep)
}

/// A TRS field after `z = Omega_R(x) y`:
/// `x^{q+1} z' = (D - R + x^q C) z + x^{q+1+N} Omega V(x, x^M Omega^{-1} z)`.
#[derive(Clone, Debug)]
pub struct StraightenedField {
    pub q: usize,
    pub n_order: usize,
    pub m_order: usize,
    pub straightener: StraightenerEval,
    /// `ord_x (D - R + x^q C)`, capped at `q`.
    pub s: usize,
    pub bs: BlockStructure,
    /// Exponents of `D - R` (length `q`).
    pub exps: Vec<Exponent>,
    /// Exponents of `x^{-s} (D - R)` (length `q - s`).
    pub reduced_exps: Vec<Exponent>,
    pub c: RMat,
    d_minus_r: Vec<Vec<f64>>,
    cf: Vec<f64>,
    v: Vec<FPoly>,
    signs: Option<Vec<i8>>,
}

impl StraightenedField {
    pub fn n(&self) -> usize {
        self.c.rows()
    }

    /// Type `(q - s, N - M, 0)` of the reduced field.
    pub fn reduced_type(&self) -> (usize, usize, usize) {
        (self.q - self.s, self.n_order - self.m_order, 0)
    }

    pub fn reduced_has_no_dominant_rotation(&self) -> bool {
        no_dominant_rotation(&self.bs, &self.reduced_exps)
    }

    pub fn to_z(&self, x: f64, y: &[f64]) -> Vec<f64> {
        self.straightener.apply(x, y, false)
    }

    pub fn to_y(&self, x: f64, z: &[f64]) -> Vec<f64> {
        self.straightener.apply(x, z, true)
    }

    /// `x^M Omega V(x, x^M Omega^{-1} z)`.
    pub fn vestigial(&self, x: f64, z: &[f64]) -> Vec<f64> {
        let xm = x.powi(self.m_order as i32);
        let y: Vec<f64> = self.to_y(x, z).iter().map(|v| v * xm).collect();
        let w: Vec<f64> = self.v.iter().map(|p| p.eval(x, &y) * xm).collect();
        self.to_z(x, &w)
    }

    fn linear(&self, x: f64, z: &[f64], out: &mut [f64]) {
        let n = self.n();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, m) in self.d_minus_r.iter().enumerate() {
            let s = x.powi(k as i32 - self.q as i32 - 1);
            for i in 0..n {
                out[i] += s * (0..n).map(|j| m[i * n + j] * z[j]).sum::<f64>();
            }
        }
        for i in 0..n {
            out[i] += (0..n).map(|j| self.cf[i * n + j] * z[j]).sum::<f64>() / x;
        }
    }
}

impl Field for StraightenedField {
    fn dim(&self) -> usize {
        self.n()
    }

    fn rhs(&self, x: f64, z: &[f64], out: &mut [f64]) {
        self.linear(x, z, out);
        let g = self.vestigial(x, z);
        let s = x.powi((self.n_order - self.m_order) as i32);
        for (o, gi) in out.iter_mut().zip(g) {
            *o += s * gi;
        }
    }

    fn decay_signs(&self) -> Option<Vec<i8>> {
        self.signs.clone()
    }
}

/// Straightens a TRS form of type `(q, N + M, M)` along `R`. Requires
/// `floor(M / (q + 1)) >= n (q + 1 + N) + 1`, `deg R = q - 1`, and `D`, `C`
/// commuting with every coefficient of `R`.
pub fn straighten_field(form: &TRSVFForm, r: &RotationalMatrix) -> Result<StraightenedField> {
    let (q, n) = (form.q, form.n());
    if q == 0 || r.degree + 1 != q || r.n != n {
        return Err(Error::ShapeError(format!(
            "rotational matrix of degree {} in dimension {} does not fit rank {q}, n = {n}",
            r.degree, r.n
        )));
    }
    if form.n_order < form.m_order {
        return Err(Error::HypothesisViolated(format!("N = {} is below M = {}", form.n_order, form.m_order)));
    }
    let nn = form.n_order - form.m_order;
    let need = n * (q + 1 + nn) + 1;
    if form.m_order / (q + 1) < need {
        return Err(Error::HypothesisViolated(format!(
            "floor(M / (q + 1)) = {} is below n (q + 1 + N) + 1 = {need}",
            form.m_order / (q + 1)
        )));
    }
    let rmat = r.matrix();
    let dext = form.d.extend_exact(q);
    for k in 0..q {
        let rk = rmat.coeff(k);
        let dk = dext.coeff(k);
        if !rk.commutator(&form.c).is_zero() || !rk.commutator(dk).is_zero() {
            return Err(Error::ShapeError(format!("D or C does not commute with the coefficient of x^{k} of R")));
        }
    }
    // Subtract b from the imaginary parts, block by block.
    let mut exps = form.exps.clone();
    for (bi, (b, range)) in form.bs.blocks.iter().zip(form.bs.ranges()).enumerate() {
        let mine: Vec<&Vec<Rational>> =
            r.pairs.iter().filter(|(p, _)| range.contains(p)).map(|(_, c)| c).collect();
        if mine.is_empty() {
            continue;
        }
        let aligned = b.kind == BlockKind::Complex
            && mine.len() == b.size
            && r.pairs.iter().filter(|(p, _)| range.contains(p)).all(|(p, _)| (p - range.start) % 2 == 0)
            && mine.iter().all(|c| *c == mine[0]);
        if !aligned {
            return Err(Error::ShapeError(format!("rotated pairs do not match complex block {bi}")));
        }
        for k in 0..q {
            exps[bi].im[k] = &exps[bi].im[k] - &mine[0][k];
        }
    }
    let first = (0..q).find(|&k| exps.iter().any(|e| !e.re[k].is_zero() || !e.im[k].is_zero()));
    let s = first.unwrap_or(q);
    let reduced_exps: Vec<Exponent> = exps
        .iter()
        .map(|e| Exponent { re: e.re[s..].to_vec(), im: e.im[s..].to_vec() })
        .collect();
    let dmr = exponential_matrix(&form.bs, &exps, q, q);
    let flat = |m: &Mat<Rational>| -> Vec<f64> {
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| rat_to_f64(&m[(i, j)])).collect()
    };
    let dmr_ext = dmr.extend_exact(q);
    let signs = straightened_signs(&form.bs, &reduced_exps);
    Ok(StraightenedField {
        q,
        n_order: form.n_order,
        m_order: form.m_order,
        straightener: StraightenerEval::new(r.clone()),
        s,
        bs: form.bs.clone(),
        d_minus_r: (0..q).map(|k| flat(dmr_ext.coeff(k))).collect(),
        cf: flat(&form.c),
        v: form.v.iter().map(FPoly::from_rational).collect(),
        exps,
        reduced_exps,
        c: form.c.clone(),
        signs,
    })
}

fn straightened_signs(bs: &BlockStructure, exps: &[Exponent]) -> Option<Vec<i8>> {
    let mut out = Vec::new();
    for (b, e) in bs.blocks.iter().zip(exps) {
        let s = match e.re_sign()? {
            std::cmp::Ordering::Greater => 1,
            _ => -1,
        };
        out.extend(std::iter::repeat(s).take(b.dim()));
    }
    Some(out)
}

impl Json for RotationalMatrix {
    fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "degree": self.degree,
            "pairs": self.pairs.iter().map(|(p, b)| json!({"row": p, "b": b.to_json()})).collect::<Vec<_>>(),
        })
    }
    fn from_json(v: &Value) -> Result<Self> {
        let n = as_usize(field(v, "n")?)?;
        let degree = as_usize(field(v, "degree")?)?;
        let mut pairs = Vec::new();
        for p in as_array(field(v, "pairs")?)? {
            pairs.push((as_usize(field(p, "row")?)?, Vec::<Rational>::from_json(field(p, "b")?)?));
        }
        RotationalMatrix::new(n, degree, pairs).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl Json for OmegaReport {
    fn to_json(&self) -> Value {
        json!({
            "samples": self.samples,
            "orthogonality": self.orthogonality,
            "group_law": self.group_law,
            "ode_residual_integral_sign": self.ode_integral,
            "ode_residual_direct_sign": self.ode_direct,
            "supported_sign": match self.supported {
                OmegaSign::Integral => "integral",
                OmegaSign::Direct => "direct",
                OmegaSign::Neither => "neither",
            },
            "commutator": self.commutator,
        })
    }
    fn from_json(_: &Value) -> Result<Self> {
        Err(Error::Parse("reports are output only".into()))
    }
}
