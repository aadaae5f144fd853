//! Empirical dimension of the set of trajectories staying in a horn around the curve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::field::Field;
use super::integrate::{integrate_until, IntegratorOptions, Stop};
use super::shoot::CurveJet;
use crate::error::{Error, Result};
use crate::series_core::Json;
use crate::vf_couples::FormalCurve;

/// `{0 < x < eps, |y - j_k gamma(x)| < C x^k}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Horn {
    pub c: f64,
    pub eps: f64,
    pub k: usize,
}

#[derive(Clone, Debug)]
pub struct BasinOptions {
    pub seeds: usize,
    pub rng_seed: u64,
    /// Seed slice abscissa; `eps / 2` when absent.
    pub x_start: Option<f64>,
    /// Integrate down to `x_min_factor * eps`.
    pub x_min_factor: f64,
    /// A trajectory stays when its deviation at `x_min` is below `delta_factor C x_min^k`.
    pub delta_factor: f64,
    pub bisection_tol: f64,
    /// Number of escaped seeds whose boundary is located by bisection.
    pub bisections: usize,
    pub integrator: IntegratorOptions,
}

impl Default for BasinOptions {
    fn default() -> Self {
        BasinOptions {
            seeds: 64,
            rng_seed: 7,
            x_start: None,
            x_min_factor: 1e-4,
            delta_factor: 1e-3,
            bisection_tol: 1e-6,
            bisections: 8,
            integrator: IntegratorOptions { rtol: 1e-8, atol: 1e-30, record_steps: false, ..Default::default() },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fate {
    Stay,
    /// Left the horn through coordinate `axis` on side `sign`.
    Escape { axis: usize, sign: i8, x: f64 },
    Ambiguous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Boundary {
    pub seed: usize,
    pub axis: usize,
    /// Offset from the slice center along `axis`.
    pub offset: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasinReport {
    pub n: usize,
    pub x_start: f64,
    pub x_min: f64,
    pub seeds: usize,
    pub stayed: usize,
    pub escaped: usize,
    pub ambiguous: usize,
    /// Coordinates through which some seed escaped.
    pub escape_axes: Vec<usize>,
    /// Coordinates along which no staying boundary was located.
    pub free_axes: Vec<usize>,
    /// `1 + #free_axes`.
    pub dimension: usize,
    pub ambiguous_fraction: f64,
    pub boundaries: Vec<Boundary>,
    pub bisection_failures: usize,
}

struct Probe<'a> {
    f: &'a dyn Field,
    jet: CurveJet,
    horn: Horn,
    x0: f64,
    x_min: f64,
    delta: f64,
    opts: &'a IntegratorOptions,
}

impl Probe<'_> {
    fn fate(&self, y0: &[f64]) -> Fate {
        let (c, k) = (self.horn.c, self.horn.k);
        let outside = |x: f64, y: &[f64]| {
            let g = self.jet.eval(k, x);
            y.iter().zip(&g).any(|(a, b)| (a - b).abs() >= c * x.powi(k as i32))
        };
        match integrate_until(self.f, self.x0, y0, self.x_min, self.opts, &outside) {
            Ok((t, Stop::Predicate(x))) | Ok((t, Stop::Escaped(x))) => {
                let y = &t.ys[0];
                let g = self.jet.eval(k, x);
                let (axis, dev) = y
                    .iter()
                    .zip(&g)
                    .map(|(a, b)| a - b)
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .unwrap_or((0, 0.0));
                Fate::Escape { axis, sign: if dev >= 0.0 { 1 } else { -1 }, x }
            }
            Ok((t, Stop::Reached)) => {
                let y = &t.ys[0];
                let g = self.jet.eval(k, self.x_min);
                let dev = y.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if dev <= self.delta {
                    Fate::Stay
                } else {
                    Fate::Ambiguous
                }
            }
            Err(_) => Fate::Ambiguous,
        }
    }

    /// Locates the fate change along `axis` on the chord through `y`,
    /// `center[axis] +- radius`, to width `tol`. The first split is at `y`
    /// itself. A staying point also ends the search.
    fn bisect(&self, center: &[f64], y: &[f64], axis: usize, radius: f64, tol: f64) -> Option<(f64, f64)> {
        let at = |t: f64| {
            let mut v = y.to_vec();
            v[axis] = center[axis] + t;
            self.fate(&v)
        };
        let side = |f: Fate| match f {
            Fate::Escape { axis: a, sign, .. } if a == axis => Some(sign),
            _ => None,
        };
        let (mut lo, mut hi) = (-radius, radius);
        let (slo, shi) = (side(at(lo))?, side(at(hi))?);
        if slo == shi {
            return None;
        }
        let mut mid = y[axis] - center[axis];
        while hi - lo > tol {
            match at(mid) {
                Fate::Stay => return Some((mid, hi - lo)),
                f => match side(f) {
                    Some(s) if s == slo => lo = mid,
                    Some(_) => hi = mid,
                    None => return None,
                },
            }
            mid = 0.5 * (lo + hi);
        }
        Some((0.5 * (lo + hi), hi - lo))
    }
}

/// Seeds uniformly in the slice `x = x_start` of the horn (90% of its
/// radius) and classifies each. For the first few escaped seeds, bisects
/// along the escape coordinate; every coordinate where this locates a
/// boundary counts as one codimension of the stay-set. Seeds run in
/// parallel; results are merged in seed order.
pub fn basin_probe(f: &dyn Field, gamma: &FormalCurve, horn: &Horn, opts: &BasinOptions) -> Result<BasinReport> {
    let n = f.dim();
    if gamma.n() != n {
        return Err(Error::ShapeError(format!("curve has n = {}, field has n = {n}", gamma.n())));
    }
    if !(horn.c > 0.0 && horn.eps > 0.0) {
        return Err(Error::DomainError("horn needs C > 0 and eps > 0".into()));
    }
    let x0 = opts.x_start.unwrap_or(horn.eps / 2.0);
    if !(x0 > 0.0 && x0 < horn.eps) {
        return Err(Error::DomainError(format!("seed slice x = {x0} is outside (0, eps)")));
    }
    let x_min = opts.x_min_factor * horn.eps;
    let jet = CurveJet::new(gamma);
    let radius = 0.9 * horn.c * x0.powi(horn.k as i32);
    let probe = Probe {
        f,
        jet: jet.clone(),
        horn: *horn,
        x0,
        x_min,
        delta: opts.delta_factor * horn.c * x_min.powi(horn.k as i32),
        opts: &opts.integrator,
    };
    let center = jet.eval(horn.k, x0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let seeds: Vec<Vec<f64>> = (0..opts.seeds)
        .map(|_| center.iter().map(|c| c + radius * rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let fates: Vec<Fate> = seeds.par_iter().map(|y| probe.fate(y)).collect();

    let escaped_ix: Vec<(usize, usize)> = fates
        .iter()
        .enumerate()
        .filter_map(|(i, f)| match f {
            Fate::Escape { axis, .. } => Some((i, *axis)),
            _ => None,
        })
        .take(opts.bisections)
        .collect();
    let found: Vec<Option<Boundary>> = escaped_ix
        .par_iter()
        .map(|&(i, axis)| {
            probe
                .bisect(&center, &seeds[i], axis, radius, opts.bisection_tol)
                .map(|(offset, width)| Boundary { seed: i, axis, offset, width })
        })
        .collect();
    let bisection_failures = found.iter().filter(|b| b.is_none()).count();
    let boundaries: Vec<Boundary> = found.into_iter().flatten().collect();

    let mut escape_axes: Vec<usize> = fates
        .iter()
        .filter_map(|f| match f {
            Fate::Escape { axis, .. } => Some(*axis),
            _ => None,
        })
        .collect();
    escape_axes.sort_unstable();
    escape_axes.dedup();
    let mut constrained: Vec<usize> = boundaries.iter().map(|b| b.axis).collect();
    constrained.sort_unstable();
    constrained.dedup();
    let free_axes: Vec<usize> = (0..n).filter(|i| !constrained.contains(i)).collect();

    let count = |p: fn(&Fate) -> bool| fates.iter().filter(|f| p(f)).count();
    let ambiguous = count(|f| matches!(f, Fate::Ambiguous));
    Ok(BasinReport {
        n,
        x_start: x0,
        x_min,
        seeds: opts.seeds,
        stayed: count(|f| matches!(f, Fate::Stay)),
        escaped: count(|f| matches!(f, Fate::Escape { .. })),
        ambiguous,
        dimension: 1 + free_axes.len(),
        escape_axes,
        free_axes,
        ambiguous_fraction: ambiguous as f64 / opts.seeds.max(1) as f64,
        boundaries,
        bisection_failures,
    })
}

impl Json for BasinReport {
    fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "x_start": self.x_start,
            "x_min": self.x_min,
            "seeds": self.seeds,
            "stayed": self.stayed,
            "escaped": self.escaped,
            "ambiguous": self.ambiguous,
            "escape_axes": self.escape_axes,
            "free_axes": self.free_axes,
            "dimension": self.dimension,
            "ambiguous_fraction": self.ambiguous_fraction,
            "boundaries": self.boundaries.iter().map(|b| json!({
                "seed": b.seed, "axis": b.axis, "offset": b.offset, "width": b.width,
            })).collect::<Vec<_>>(),
            "bisection_failures": self.bisection_failures,
        })
    }
    fn from_json(_: &Value) -> Result<Self> {
        Err(Error::Parse("reports are output only".into()))
    }
}
