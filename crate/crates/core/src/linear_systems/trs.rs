//! Recognition of the Turrittin-Ramis-Sibuya shape and the spectral predicates on exponential parts.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use super::system::LinearSystem;
use crate::error::{Error, Result};
use crate::series_core::blocks::{compatible, theta};
use crate::series_core::json::{as_array, as_usize, field};
use crate::series_core::{Block, BlockKind, BlockStructure, Json, Mat, PolyMatrix, Rational};
use crate::{RMat, RPolyMatrix};

/// `c(x) = sum_k (re_k + i im_k) x^k` for `k < q`; real blocks have `im = 0`.
#[derive(Clone, PartialEq, Debug)]
pub struct Exponent {
    pub re: Vec<Rational>,
    pub im: Vec<Rational>,
}

impl Exponent {
    pub fn real(re: Vec<Rational>) -> Self {
        let im = vec![Rational::zero(); re.len()];
        Exponent { re, im }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn conj(&self) -> Self {
        Exponent { re: self.re.clone(), im: self.im.iter().map(|c| -c.clone()).collect() }
    }

    /// Order of `self - other` over the stored coefficients, `None` if equal.
    pub fn diff_order(&self, other: &Self) -> Option<usize> {
        (0..self.len().max(other.len())).find(|&k| {
            let z = Rational::zero();
            self.re.get(k).unwrap_or(&z) != other.re.get(k).unwrap_or(&z)
                || self.im.get(k).unwrap_or(&z) != other.im.get(k).unwrap_or(&z)
        })
    }

    pub fn ord_re(&self) -> Option<usize> {
        self.re.iter().position(|c| !c.is_zero())
    }

    pub fn ord_im(&self) -> Option<usize> {
        self.im.iter().position(|c| !c.is_zero())
    }

    /// Sign of the real part near `0+`.
    pub fn re_sign(&self) -> Option<Ordering> {
        self.ord_re().map(|k| if self.re[k].is_positive() { Ordering::Greater } else { Ordering::Less })
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct TRSLinearForm {
    pub q: usize,
    pub bs: BlockStructure,
    /// One exponent per block of `bs`.
    pub exps: Vec<Exponent>,
    pub d: RPolyMatrix,
    pub c: RMat,
    pub v: RPolyMatrix,
    /// Form coordinate `i` is original coordinate `perm[i]`.
    pub perm: Vec<usize>,
}

/// `D(x)` assembled from exponents, known through `trunc`.
pub fn exponential_matrix(bs: &BlockStructure, exps: &[Exponent], q: usize, trunc: usize) -> RPolyMatrix {
    let n = bs.dim();
    let ranges = bs.ranges();
    let mut coeffs = Vec::with_capacity(q);
    for k in 0..q {
        let mut m = Mat::zeros(n, n);
        for ((b, r), e) in bs.blocks.iter().zip(&ranges).zip(exps) {
            match b.kind {
                BlockKind::Real => {
                    for i in r.clone() {
                        m[(i, i)] = e.re[k].clone();
                    }
                }
                BlockKind::Complex => {
                    for i in r.clone().step_by(2) {
                        m.set_block(i, i, &theta(e.re[k].clone(), e.im[k].clone()));
                    }
                }
            }
        }
        coeffs.push(m);
    }
    if coeffs.is_empty() {
        coeffs.push(Mat::zeros(n, n));
    }
    PolyMatrix::from_coeffs(coeffs, trunc).expect("square")
}

impl TRSLinearForm {
    /// The system in form coordinates: `x^{q+1} y' = (D + x^q C + x^{q+1} V) y`.
    pub fn system(&self) -> LinearSystem {
        let trunc = self.v.trunc() + self.q + 1;
        let mut a = self.d.extend_exact(trunc).truncate(trunc);
        let mut cq = a.coeff(self.q).clone();
        cq = &cq + &self.c;
        a.set_coeff(self.q, cq);
        let a = &a + &self.v.mul_xk(self.q + 1);
        LinearSystem { n: a.n(), p: self.q as i64, a }
    }

    pub fn n(&self) -> usize {
        self.c.rows()
    }
}

struct Pair {
    idx: Vec<usize>,
    exp: Exponent,
    complex: bool,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

/// Reads `S` as a TRS form of rank `q = p`, if possible.
///
/// Coordinate pairs are detected from the off-diagonal pattern of the first
/// `q` coefficients; a pair whose 2x2 blocks all lie in the image of `Θ`
/// becomes a complex exponent, oriented so that its first nonzero imaginary
/// coefficient is positive. Only linked coordinates are paired, so `n_1` is
/// minimal.
pub fn recognize_trs(s: &LinearSystem) -> Option<TRSLinearForm> {
    if s.p < 0 {
        return None;
    }
    let q = s.p as usize;
    let n = s.n;
    let a = &s.a;
    if a.trunc() < q + 1 {
        return None;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for k in 0..q {
        let m = a.coeff(k);
        for i in 0..n {
            for j in 0..n {
                if i != j && !m[(i, j)].is_zero() {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match comps.iter_mut().find(|c| c[0] == r) {
            Some(c) => c.push(i),
            None => comps.push(vec![i]),
        }
    }
    let mut pairs = Vec::new();
    for comp in comps {
        match comp.len() {
            1 => {
                let i = comp[0];
                pairs.push(Pair { idx: comp, exp: Exponent::real((0..q).map(|k| a.coeff(k)[(i, i)].clone()).collect()), complex: false });
            }
            2 => {
                let (i, j) = (comp[0], comp[1]);
                let mut re = Vec::with_capacity(q);
                let mut im = Vec::with_capacity(q);
                for k in 0..q {
                    let m = a.coeff(k);
                    if m[(i, i)] != m[(j, j)] || m[(j, i)] != -m[(i, j)].clone() {
                        return None;
                    }
                    re.push(m[(i, i)].clone());
                    im.push(m[(j, i)].clone());
                }
                let mut exp = Exponent { re, im };
                let lead_positive = exp.ord_im().map(|k| exp.im[k].is_positive()).unwrap_or(true);
                let idx = if lead_positive {
                    vec![i, j]
                } else {
                    exp = exp.conj();
                    vec![j, i]
                };
                pairs.push(Pair { idx, exp, complex: true });
            }
            _ => return None,
        }
    }
    // Group equal exponents; complex groups first, each in order of first index.
    let mut groups: Vec<(bool, Exponent, Vec<usize>)> = Vec::new();
    for complex in [true, false] {
        for pr in pairs.iter().filter(|p| p.complex == complex) {
            match groups.iter_mut().find(|g| g.0 == complex && g.1 == pr.exp) {
                Some(g) => g.2.extend(&pr.idx),
                None => groups.push((complex, pr.exp.clone(), pr.idx.clone())),
            }
        }
    }
    let perm: Vec<usize> = groups.iter().flat_map(|g| g.2.clone()).collect();
    let bs = BlockStructure::new(
        groups
            .iter()
            .map(|g| if g.0 { Block::complex(g.2.len() / 2) } else { Block::real(g.2.len()) })
            .collect(),
    );
    let exps: Vec<Exponent> = groups.iter().map(|g| g.1.clone()).collect();
    form_from_permuted(s, q, bs, exps, perm)
}

/// Builds the form once the block layout is known, checking conditions (2) and (3).
pub(crate) fn form_from_permuted(
    s: &LinearSystem,
    q: usize,
    bs: BlockStructure,
    exps: Vec<Exponent>,
    perm: Vec<usize>,
) -> Option<TRSLinearForm> {
    let ap = s.a.permute(&perm);
    let k = ap.trunc();
    let d = exponential_matrix(&bs, &exps, q, k);
    if (0..q).any(|t| d.coeff(t) != ap.coeff(t)) {
        return None;
    }
    let c = ap.coeff(q).clone();
    let cpoly = PolyMatrix::constant(c.clone(), k);
    if !compatible(&cpoly, &d, &bs).unwrap_or(false) {
        return None;
    }
    let principal_nonzero = if q >= 1 { !d.coeff(0).is_zero() } else { !c.is_zero() };
    if !principal_nonzero {
        return None;
    }
    let mut rest = ap.clone();
    for t in 0..=q {
        rest.set_coeff(t, Mat::zeros(s.n, s.n));
    }
    let v = rest.exact_divide(q + 1).ok()?;
    Some(TRSLinearForm { q, bs, exps, d, c, v, perm })
}

/// `ord Re c > ord Im c`, with `Im c` not identically zero.
pub fn dominant_rotation(e: &Exponent) -> bool {
    match (e.ord_re(), e.ord_im()) {
        (Some(r), Some(i)) => r > i,
        (None, Some(_)) => true,
        _ => false,
    }
}

/// Every complex block satisfies `ord Re c <= ord Im c`.
pub fn no_dominant_rotation(bs: &BlockStructure, exps: &[Exponent]) -> bool {
    bs.blocks.iter().zip(exps).filter(|(b, _)| b.kind == BlockKind::Complex).all(|(_, e)| {
        match (e.ord_re(), e.ord_im()) {
            (Some(r), Some(i)) => r <= i,
            (Some(_), None) => true,
            (None, _) => false,
        }
    })
}

/// `2 #{complex blocks with Re c > 0} + #{real blocks with d > 0}`, counted with multiplicity.
pub fn unstability_index(bs: &BlockStructure, exps: &[Exponent]) -> Result<usize> {
    let mut u = 0;
    for (b, e) in bs.blocks.iter().zip(exps) {
        match e.re_sign() {
            None => {
                return Err(Error::Undecidable("real part of an exponent vanishes to the known order".into()))
            }
            Some(Ordering::Greater) => u += b.dim(),
            Some(_) => {}
        }
    }
    Ok(u)
}

impl Json for Exponent {
    fn to_json(&self) -> Value {
        json!({"re": self.re.to_json(), "im": self.im.to_json()})
    }
    fn from_json(v: &Value) -> Result<Self> {
        let re = Vec::<Rational>::from_json(field(v, "re")?)?;
        let im = match v.get("im") {
            Some(im) => Vec::<Rational>::from_json(im)?,
            None => vec![Rational::zero(); re.len()],
        };
        if re.len() != im.len() {
            return Err(Error::Parse("exponent re and im lengths differ".into()));
        }
        Ok(Exponent { re, im })
    }
}

impl Json for TRSLinearForm {
    fn to_json(&self) -> Value {
        json!({
            "q": self.q,
            "bs": self.bs.to_json(),
            "exponents": self.exps.to_json(),
            "C": self.c.to_json(),
            "V": self.v.to_json(),
            "perm": self.perm,
        })
    }
    fn from_json(v: &Value) -> Result<Self> {
        let q = as_usize(field(v, "q")?)?;
        let bs = BlockStructure::from_json(field(v, "bs")?)?;
        let exps = Vec::<Exponent>::from_json(field(v, "exponents")?)?;
        let c = RMat::from_json(field(v, "C")?)?;
        let vv = RPolyMatrix::from_json(field(v, "V")?)?;
        let perm: Vec<usize> = match v.get("perm") {
            Some(p) => as_array(p)?.iter().map(as_usize).collect::<Result<_>>()?,
            None => (0..c.rows()).collect(),
        };
        if exps.len() != bs.blocks.len() || exps.iter().any(|e| e.len() != q) {
            return Err(Error::Parse(format!("need one exponent of length {q} per block")));
        }
        if bs.dim() != c.rows() || vv.n() != c.rows() || perm.len() != c.rows() {
            return Err(Error::Parse("form components disagree in size".into()));
        }
        let d = exponential_matrix(&bs, &exps, q, vv.trunc() + q + 1);
        Ok(TRSLinearForm { q, bs, exps, d, c, v: vv, perm })
    }
}
