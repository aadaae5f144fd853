//! Admissible coordinate transformations of invariant couples and their chains.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use super::jet::{FormalCurve, InvariantCouple, VectorFieldJet};
use crate::error::{Error, Result};
use crate::linear_systems::GaugeTransform;
use crate::series_core::json::{as_array, as_usize, field};
use crate::series_core::{Json, Mat, MultiSeries, Order, PolyMatrix, Rational, Series};
use crate::{RMultiSeries, RPolyMatrix, RSeries};

#[derive(Clone, PartialEq, Debug)]
pub enum CoordTransform {
    /// `y = beta(x) + y~`, `beta` a polynomial vanishing at 0.
    PolyTranslation { beta: Vec<RSeries> },
    /// `y = P(x) y~`, `P` a polynomial matrix with `P(0)` invertible.
    PolyRegular { p: RPolyMatrix },
    /// `y_i = x y~_i` for `i` in `set`, the other coordinates unchanged.
    DiagMonomial { set: Vec<usize> },
    /// `x = x~^r`.
    Ramification { r: u32 },
}

impl CoordTransform {
    /// Full diagonal monomial transformation in dimension `n`.
    pub fn blow_up(n: usize) -> Self {
        CoordTransform::DiagMonomial { set: (0..n).collect() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CoordTransform::PolyTranslation { .. } => "translation",
            CoordTransform::PolyRegular { .. } => "poly_regular",
            CoordTransform::DiagMonomial { .. } => "diag_monomial",
            CoordTransform::Ramification { .. } => "ramification",
        }
    }

    /// Increment of the determinacy order carried by this step.
    pub fn shift(&self) -> usize {
        match self {
            CoordTransform::DiagMonomial { .. } => 1,
            _ => 0,
        }
    }
}

/// Steps in the order they are applied.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct TransformChain {
    pub steps: Vec<CoordTransform>,
}

impl TransformChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: CoordTransform) {
        self.steps.push(t);
    }

    pub fn extend(&mut self, other: TransformChain) {
        self.steps.extend(other.steps);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// `h(s)` for the chain: every step maps `s` to `s + shift`, composed right to left.
pub fn determinacy_shift(chain: &TransformChain, s: usize) -> usize {
    chain.steps.iter().rev().fold(s, |acc, t| acc + t.shift())
}

/// Re-expresses a gauge transformation of a linear system as coordinate
/// transformations; a diagonal monomial gauge becomes one partial blow-up per
/// level `t`, on `{i : k_i >= t}`.
pub fn lift_gauge(g: &GaugeTransform) -> Vec<CoordTransform> {
    match g {
        GaugeTransform::PolyRegular { p } => vec![CoordTransform::PolyRegular { p: p.clone() }],
        GaugeTransform::Ramification { r } => vec![CoordTransform::Ramification { r: *r }],
        GaugeTransform::DiagMonomial { k } => {
            let kmax = k.iter().copied().max().unwrap_or(0);
            (1..=kmax)
                .map(|t| CoordTransform::DiagMonomial { set: (0..k.len()).filter(|&i| k[i] >= t).collect() })
                .collect()
        }
    }
}

fn mx(n: usize, trunc: usize, s: &RSeries) -> RMultiSeries {
    MultiSeries::from_x_series(n, &s.extend_exact(trunc).truncate(trunc))
}

fn lift_vector(pm: &RPolyMatrix, v: &[RMultiSeries], trunc: usize) -> Vec<RMultiSeries> {
    let n = pm.n();
    (0..n)
        .map(|i| {
            let mut acc = MultiSeries::zero(n, trunc);
            for (j, vj) in v.iter().enumerate() {
                let e = pm.entry(i, j);
                if !e.is_zero() {
                    acc = &acc + &(&mx(n, trunc, &e) * vj);
                }
            }
            acc.truncate(trunc)
        })
        .collect()
}

fn curve_times(pm: &RPolyMatrix, g: &[RSeries]) -> Vec<RSeries> {
    let n = pm.n();
    (0..n)
        .map(|i| {
            let mut acc = Series::zero(g.iter().map(Series::trunc).min().unwrap_or(0));
            for (j, gj) in g.iter().enumerate() {
                let e = pm.entry(i, j).extend_exact(acc.trunc());
                acc = &acc + &(&e * gj);
            }
            acc
        })
        .collect()
}

fn compose_all(vf: &VectorFieldJet, subs: &[RMultiSeries]) -> Result<(RMultiSeries, Vec<RMultiSeries>)> {
    let x = vf.xi_x.compose(subs)?;
    let y = vf.xi_y.iter().map(|c| c.compose(subs)).collect::<Result<Vec<_>>>()?;
    Ok((x, y))
}

/// Whether `{x = 0, y_S = 0}` is invariant: no term of `xi_x` or `xi_{y_i}`,
/// `i in S`, survives on it.
pub fn center_invariant(vf: &VectorFieldJet, set: &[usize]) -> bool {
    let on_center = |a: &Vec<u32>| a[0] == 0 && set.iter().all(|&i| a[i + 1] == 0);
    let comps = std::iter::once(&vf.xi_x).chain(set.iter().map(|&i| &vf.xi_y[i]));
    comps.into_iter().all(|c| !c.terms().keys().any(on_center))
}

/// The transformed couple `phi^*(xi, gamma)`.
pub fn apply_coord_transform(c: &InvariantCouple, t: &CoordTransform) -> Result<InvariantCouple> {
    let n = c.n();
    let k = c.vf.trunc();
    let vars: Vec<RMultiSeries> = (0..=n).map(|i| MultiSeries::var(n, k, i)).collect();
    match t {
        CoordTransform::PolyTranslation { beta } => {
            if beta.len() != n {
                return Err(Error::ShapeError(format!("translation has {} components, n = {n}", beta.len())));
            }
            if let Some(i) = beta.iter().position(|b| !b.coeff(0).is_zero()) {
                return Err(Error::Inadmissible(format!("translation component {i} does not vanish at 0")));
            }
            let mut subs = vars.clone();
            for (i, b) in beta.iter().enumerate() {
                subs[i + 1] = &vars[i + 1] + &mx(n, k, b);
            }
            let (fx, fy) = compose_all(&c.vf, &subs)?;
            let mut ny = Vec::with_capacity(n);
            for (fi, b) in fy.iter().zip(beta) {
                let db = b.extend_exact(k + 1).derivative()?;
                ny.push(fi - &(&fx * &mx(n, k, &db)));
            }
            let gamma = c
                .curve
                .gamma_y
                .iter()
                .zip(beta)
                .map(|(g, b)| g - &b.extend_exact(g.trunc()))
                .collect();
            Ok(InvariantCouple { vf: VectorFieldJet::new(fx, ny)?, curve: FormalCurve { gamma_y: gamma } })
        }
        CoordTransform::PolyRegular { p } => {
            if p.n() != n {
                return Err(Error::ShapeError(format!("gauge is {}x{}, n = {n}", p.n(), p.n())));
            }
            if p.coeff(0).rank() < n {
                return Err(Error::NotRegular);
            }
            let pk = p.extend_exact(k + 1);
            let pinv = pk.inverse()?;
            let ytil: Vec<RMultiSeries> = vars[1..].to_vec();
            let mut subs = vec![vars[0].clone()];
            subs.extend(lift_vector(&pk, &ytil, k));
            let (fx, fy) = compose_all(&c.vf, &subs)?;
            let dp = lift_vector(&pk.derivative()?, &ytil, k);
            let inner: Vec<RMultiSeries> = fy.iter().zip(&dp).map(|(f, d)| f - &(&fx * d)).collect();
            let ny = lift_vector(&pinv, &inner, k);
            let g = c.curve.trunc();
            let gamma = curve_times(&p.extend_exact(g).inverse()?, &c.curve.gamma_y);
            Ok(InvariantCouple { vf: VectorFieldJet::new(fx, ny)?, curve: FormalCurve { gamma_y: gamma } })
        }
        CoordTransform::DiagMonomial { set } => {
            if set.is_empty() || set.iter().any(|&i| i >= n) {
                return Err(Error::ShapeError(format!("blow-up index set {set:?} invalid for n = {n}")));
            }
            match c.curve.contact_order() {
                Order::Finite(m) if m < 2 => {
                    return Err(Error::Inadmissible(format!("contact order {m} with the curve is below 2")))
                }
                _ => {}
            }
            if !center_invariant(&c.vf, set) {
                return Err(Error::Inadmissible(format!("center {{x = 0, y_i = 0 for i in {set:?}}} is not invariant")));
            }
            let mut subs = vars.clone();
            for &i in set {
                subs[i + 1] = &vars[0] * &vars[i + 1];
            }
            let (fx, mut fy) = compose_all(&c.vf, &subs)?;
            for &i in set {
                let num = &fy[i] - &(&fx * &vars[i + 1]);
                fy[i] = num.exact_divide_x(1)?;
            }
            let mut gamma = c.curve.gamma_y.clone();
            for &i in set {
                gamma[i] = gamma[i].exact_divide(1)?;
            }
            Ok(InvariantCouple { vf: VectorFieldJet::new(fx, fy)?, curve: FormalCurve { gamma_y: gamma } })
        }
        CoordTransform::Ramification { r } => {
            let r = *r as usize;
            if r == 0 {
                return Err(Error::Inadmissible("ramification index must be positive".into()));
            }
            if let Order::Finite(0) = c.vf.xi_x.ord_x() {
                return Err(Error::Inadmissible("{x = 0} is not invariant".into()));
            }
            let mut subs = vars.clone();
            let mut xr = vec![0; n + 1];
            xr[0] = r as u32;
            subs[0] = MultiSeries::monomial(n, k, xr, Rational::one());
            let (fx, fy) = compose_all(&c.vf, &subs)?;
            let fx = fx.exact_divide_x(r - 1)?.scale(&Rational::new(1.into(), (r as i64).into()));
            let gamma = c.curve.gamma_y.iter().map(|g| g.ramify(r)).collect();
            Ok(InvariantCouple { vf: VectorFieldJet::new(fx, fy)?, curve: FormalCurve { gamma_y: gamma } })
        }
    }
}

/// Applies the steps in order.
pub fn replay_chain(c: &InvariantCouple, chain: &TransformChain) -> Result<InvariantCouple> {
    chain.steps.iter().try_fold(c.clone(), |acc, t| apply_coord_transform(&acc, t))
}

/// `y = P y~` for a permutation: `y~_i = y_{perm[i]}`.
pub fn permutation_transform(perm: &[usize]) -> CoordTransform {
    let n = perm.len();
    let mut m = Mat::zeros(n, n);
    for (i, &pi) in perm.iter().enumerate() {
        m[(pi, i)] = Rational::one();
    }
    CoordTransform::PolyRegular { p: PolyMatrix::constant(m, 0) }
}

impl Json for CoordTransform {
    fn to_json(&self) -> Value {
        let mut v = match self {
            CoordTransform::PolyTranslation { beta } => json!({"kind": "translation", "beta": beta.to_json()}),
            CoordTransform::PolyRegular { p } => json!({"kind": "poly_regular", "P": p.to_json()}),
            CoordTransform::DiagMonomial { set } => json!({"kind": "diag_monomial", "set": set}),
            CoordTransform::Ramification { r } => json!({"kind": "ramification", "r": r}),
        };
        v["shift"] = json!(self.shift());
        v
    }
    fn from_json(v: &Value) -> Result<Self> {
        let kind = field(v, "kind")?.as_str().ok_or_else(|| Error::Parse("kind must be a string".into()))?;
        match kind {
            "translation" => Ok(CoordTransform::PolyTranslation { beta: Vec::<RSeries>::from_json(field(v, "beta")?)? }),
            "poly_regular" => Ok(CoordTransform::PolyRegular { p: RPolyMatrix::from_json(field(v, "P")?)? }),
            "diag_monomial" => Ok(CoordTransform::DiagMonomial {
                set: as_array(field(v, "set")?)?.iter().map(as_usize).collect::<Result<_>>()?,
            }),
            "ramification" => Ok(CoordTransform::Ramification { r: as_usize(field(v, "r")?)? as u32 }),
            other => Err(Error::Parse(format!("unknown transformation kind {other:?}"))),
        }
    }
}

impl Json for TransformChain {
    fn to_json(&self) -> Value {
        json!({"steps": self.steps.to_json(), "shift": determinacy_shift(self, 0)})
    }
    fn from_json(v: &Value) -> Result<Self> {
        Ok(TransformChain { steps: Vec::<CoordTransform>::from_json(field(v, "steps")?)? })
    }
}
