//! Iterated tangents: the tangent directions of a curve after `k` blow-ups
//! `y = x y~` centred on the curve. For `y = sum a_j x^j` the level-`k`
//! direction is `(1, a_{k+1})` normalized.

use nalgebra::{DMatrix, DVector};

use super::integrate::NumericTrajectory;
use crate::error::{Error, Result};
use crate::series_core::scalar::rat_to_f64;
use crate::vf_couples::FormalCurve;

fn direction(a: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = std::iter::once(1.0).chain(a).collect();
    let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    v.iter_mut().for_each(|t| *t /= norm);
    v
}

/// Levels `0..=depth` of the formal curve, in `R^{1+n}`.
pub fn formal_iterated_tangents(gamma: &FormalCurve, depth: usize) -> Result<Vec<Vec<f64>>> {
    (0..=depth)
        .map(|k| {
            if gamma.gamma_y.iter().any(|g| g.trunc() <= k + 1) {
                return Err(Error::InsufficientPrecision { needed: k + 2, have: gamma.gamma_y[0].trunc() });
            }
            Ok(direction(gamma.gamma_y.iter().map(|g| rat_to_f64(g.coeff(k + 1)))))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TangentOptions {
    pub depth: usize,
    /// Samples used for the extrapolation.
    pub window: (f64, f64),
    /// Fit degrees tried, inclusive.
    pub degrees: (usize, usize),
    /// Largest allowed spread between neighbouring fits, per unit direction.
    pub tol: f64,
}

impl TangentOptions {
    pub fn new(depth: usize, window: (f64, f64)) -> Self {
        TangentOptions { depth, window, degrees: (depth + 3, depth + 14), tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentReport {
    /// Level-`k` unit direction in `(x, y)` space.
    pub directions: Vec<Vec<f64>>,
    /// Extrapolated Taylor coefficient `a_{k+1}` per level, per component.
    pub coeffs: Vec<Vec<f64>>,
    /// Spread between the chosen fit and its neighbours, per level.
    pub spread: Vec<f64>,
    /// Fit degree chosen per level.
    pub degree: Vec<usize>,
    pub samples: usize,
}

/// Fits `y_i(x) = sum_{j=1}^{d} c_j x^j` in least squares over the window,
/// with `x` rescaled to `[0, 1]`.
fn fit(xs: &[f64], ys: &[Vec<f64>], d: usize, scale: f64) -> Option<Vec<Vec<f64>>> {
    let m = xs.len();
    let a = DMatrix::from_fn(m, d, |r, c| (xs[r] / scale).powi(c as i32 + 1));
    let svd = a.svd(true, true);
    let n = ys[0].len();
    (0..n)
        .map(|i| {
            let b = DVector::from_iterator(m, ys.iter().map(|y| y[i]));
            let c = svd.solve(&b, 1e-15).ok()?;
            Some(c.iter().enumerate().map(|(j, v)| v / scale.powi(j as i32 + 1)).collect())
        })
        .collect()
}

fn dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Extrapolates the Taylor coefficients of a trajectory at `x = 0` by
/// polynomial least squares on the window, over a range of fit degrees.
/// Per level, the degree whose direction moves least against both
/// neighbouring degrees is kept. `TangentUndefined(k)` when even that
/// spread exceeds the tolerance.
pub fn iterated_tangents(t: &NumericTrajectory, opts: &TangentOptions) -> Result<TangentReport> {
    let (a, b) = opts.window;
    let (xs, ys): (Vec<f64>, Vec<Vec<f64>>) = t.window(a, b).map(|(x, y)| (x, y.to_vec())).unzip();
    let lo = opts.degrees.0.max(opts.depth + 2);
    let hi = opts.degrees.1.min(xs.len() / 2);
    if hi < lo + 2 {
        return Err(Error::InsufficientWindow);
    }
    let fits: Vec<Vec<Vec<f64>>> =
        (lo..=hi).map(|d| fit(&xs, &ys, d, b).ok_or(Error::TangentUndefined(0))).collect::<Result<_>>()?;
    let mut report = TangentReport { directions: vec![], coeffs: vec![], spread: vec![], degree: vec![], samples: xs.len() };
    for k in 0..=opts.depth {
        let us: Vec<Vec<f64>> = fits.iter().map(|f| direction(f.iter().map(|c| c[k]))).collect();
        let best = (1..us.len() - 1)
            .map(|j| (j, dist(&us[j], &us[j - 1]).max(dist(&us[j], &us[j + 1]))))
            .filter(|(_, s)| s.is_finite())
            .min_by(|p, q| p.1.total_cmp(&q.1));
        match best {
            Some((j, s)) if s <= opts.tol => {
                report.directions.push(us[j].clone());
                report.coeffs.push(fits[j].iter().map(|c| c[k]).collect());
                report.spread.push(s);
                report.degree.push(lo + j);
            }
            _ => return Err(Error::TangentUndefined(k)),
        }
    }
    Ok(report)
}
