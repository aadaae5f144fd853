//! Trajectories asymptotic to a formal invariant curve, and contact reports.

use serde_json::{json, Value};

use super::chart::ChartMap;
use super::field::Field;
use super::integrate::{integrate, IntegratorOptions, NumericTrajectory};
use crate::error::{Error, Result};
use crate::series_core::scalar::rat_to_f64;
use crate::series_core::Json;
use crate::vf_couples::FormalCurve;

/// `f64` coefficients of a formal curve, `coeffs[i][k]` of `x^k` in component `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveJet {
    pub coeffs: Vec<Vec<f64>>,
}

impl CurveJet {
    pub fn new(gamma: &FormalCurve) -> Self {
        CurveJet { coeffs: gamma.gamma_y.iter().map(|g| g.coeffs().iter().map(rat_to_f64).collect()).collect() }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    /// `j_k gamma(x)`.
    pub fn eval(&self, k: usize, x: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.iter().take(k + 1).rev().fold(0.0, |acc, a| acc * x + a))
            .collect()
    }

    /// The order `k' <= k` just below the smallest term `|gamma_j| x^j`, `j >= 1`.
    pub fn optimal_order(&self, k: usize, x: f64) -> usize {
        let term = |j: usize| {
            self.coeffs.iter().map(|c| c.get(j).map_or(0.0, |a| a.abs())).fold(0.0, f64::max) * x.powi(j as i32)
        };
        let best = (1..=k).filter(|&j| term(j) > 0.0).min_by(|&a, &b| term(a).total_cmp(&term(b)));
        match best {
            Some(j) if j < k => (j - 1).max(1),
            _ => k,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactReport {
    pub n_contact: usize,
    pub window: (f64, f64),
    pub samples: usize,
    /// `sup |gamma_num - j_N gamma| / x^{N+1}` over the window.
    pub sup_ratio: f64,
    /// Least-squares slope of `ln |gamma_num - j_N gamma|` against `ln x`.
    pub slope: f64,
    /// The ratio does not grow toward the small end of the window.
    pub bounded: bool,
    pub certified: bool,
}

/// Slope of the least-squares line through `(ln x, ln r)`.
pub fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - mx) * (y - my), d + (x - mx).powi(2)));
    num / den
}

fn check_window(window: (f64, f64)) -> Result<()> {
    if !(window.0 > 0.0 && window.1 >= 10.0 * window.0) {
        return Err(Error::InsufficientWindow);
    }
    Ok(())
}

/// Certifies `|gamma_num - j_N gamma| = O(x^{N+1})` on the window: slope at
/// least `N + 1 - 0.1`, and the ratio over the lowest quarter (in `ln x`) at
/// most ten times its value over the highest quarter. Residuals at rounding
/// level are skipped.
pub fn contact_report(t: &NumericTrajectory, gamma: &FormalCurve, n_contact: usize, window: (f64, f64)) -> Result<ContactReport> {
    check_window(window)?;
    let jet = CurveJet::new(gamma);
    let mut pts = Vec::new();
    let mut ratios = Vec::new();
    let mut samples = 0;
    for (x, y) in t.window(window.0, window.1) {
        samples += 1;
        let g = jet.eval(n_contact, x);
        let r = y.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = y.iter().chain(&g).map(|v| v.abs()).fold(0.0, f64::max);
        if r <= 64.0 * f64::EPSILON * scale || r == 0.0 {
            continue;
        }
        pts.push((x.ln(), r.ln()));
        ratios.push((x.ln(), r / x.powi(n_contact as i32 + 1)));
    }
    if samples < 4 {
        return Err(Error::InsufficientWindow);
    }
    let sup_ratio = ratios.iter().map(|p| p.1).fold(0.0, f64::max);
    let slope = if pts.len() < 2 { f64::INFINITY } else { ls_slope(&pts) };
    let (la, lb) = (window.0.ln(), window.1.ln());
    let q = (lb - la) / 4.0;
    let low = ratios.iter().filter(|p| p.0 <= la + q).map(|p| p.1).fold(0.0, f64::max);
    let high = ratios.iter().filter(|p| p.0 >= lb - q).map(|p| p.1).fold(0.0, f64::max);
    let bounded = low <= 10.0 * high || low == 0.0;
    let certified = slope >= n_contact as f64 + 1.0 - 0.1 && bounded;
    Ok(ContactReport { n_contact, window, samples, sup_ratio, slope, bounded, certified })
}

#[derive(Clone, Debug)]
pub struct ShootOptions {
    /// Contact order to certify.
    pub n_contact: usize,
    /// Seed jet order `K`.
    pub k_seed: usize,
    /// Seed abscissa `x_s` for the growing directions.
    pub x_seed: f64,
    pub window: (f64, f64),
    pub integrator: IntegratorOptions,
    pub max_sweeps: usize,
    /// Number of log-spaced output abscissae across the window.
    pub grid: usize,
}

impl ShootOptions {
    pub fn new(n_contact: usize, k_seed: usize, window: (f64, f64)) -> Self {
        ShootOptions {
            n_contact,
            k_seed,
            x_seed: window.0,
            window,
            integrator: IntegratorOptions { rtol: 1e-12, atol: 1e-30, ..IntegratorOptions::default() },
            max_sweeps: 8,
            grid: 240,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Shot {
    /// In the final chart.
    pub chart_trajectory: NumericTrajectory,
    /// In the original chart.
    pub trajectory: NumericTrajectory,
    pub report: ContactReport,
    pub sweeps: usize,
    pub signs: Vec<i8>,
}

/// Runs only the listed components, the others read from `frozen`.
struct Frozen<'a> {
    f: &'a dyn Field,
    active: &'a [usize],
    frozen: &'a NumericTrajectory,
}

impl Field for Frozen<'_> {
    fn dim(&self) -> usize {
        self.active.len()
    }

    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]) {
        let mut full = self.frozen.interpolate(x).unwrap_or_else(|| {
            if x <= self.frozen.xs[0] {
                self.frozen.ys[0].clone()
            } else {
                self.frozen.ys[self.frozen.len() - 1].clone()
            }
        });
        for (k, &i) in self.active.iter().enumerate() {
            full[i] = y[k];
        }
        let mut o = vec![0.0; full.len()];
        self.f.rhs(x, &full, &mut o);
        for (k, &i) in self.active.iter().enumerate() {
            out[k] = o[i];
        }
    }
}

fn log_grid(a: f64, b: f64, m: usize) -> Vec<f64> {
    let m = m.max(2);
    let (la, lb) = (a.ln(), b.ln());
    let mut g: Vec<f64> = (0..m).map(|i| (la + (lb - la) * i as f64 / (m - 1) as f64).exp()).collect();
    g[0] = a;
    g[m - 1] = b;
    g
}

fn escape_to_seed(e: Error, chart: &ChartMap) -> Error {
    match e {
        Error::Escape { x } => Error::SeedTooCoarse { x: chart.x_to_original(x) },
        other => other,
    }
}

/// Integrates the field `f` (living in the final chart of `chart`) along the
/// curve `gamma` (in the original chart). Directions that grow as `x -> 0+`
/// are seeded with `j_K gamma` at `min(x_s, a)` and integrated upward;
/// decaying directions are seeded at `b` with `gamma` truncated near its
/// smallest term and integrated downward. Coupled groups are alternated
/// until the grid values settle. The report is taken in the original chart.
pub fn shoot_asymptotic(f: &dyn Field, chart: &ChartMap, gamma: &FormalCurve, opts: &ShootOptions) -> Result<Shot> {
    check_window(opts.window)?;
    if !(opts.x_seed > 0.0) {
        return Err(Error::DomainError(format!("seed abscissa must be positive, got {}", opts.x_seed)));
    }
    let n = f.dim();
    if gamma.n() != n {
        return Err(Error::ShapeError(format!("curve has n = {}, field has n = {n}", gamma.n())));
    }
    let jet = CurveJet::new(gamma);
    let xa = opts.x_seed.min(opts.window.0);
    let xb = opts.window.1;
    let (fa, seed_lo) = chart.to_final(xa, &jet.eval(opts.k_seed, xa))?;
    let k_hi = jet.optimal_order(opts.k_seed, xb);
    let (fb, seed_hi) = chart.to_final(xb, &jet.eval(k_hi, xb))?;
    let signs = f.decay_signs().unwrap_or_else(|| vec![-1; n]);
    let plus: Vec<usize> = (0..n).filter(|&i| signs[i] > 0).collect();
    let minus: Vec<usize> = (0..n).filter(|&i| signs[i] <= 0).collect();
    let mut iopts = opts.integrator.clone();
    iopts.outputs = log_grid(fa, fb, opts.grid);
    let scale = seed_lo.iter().chain(&seed_hi).map(|v| v.abs()).fold(1.0, f64::max);
    iopts.bound = iopts.bound.max(1e8 * scale);

    let mut sweeps = 1;
    let chart_traj = if plus.is_empty() {
        integrate(f, fa, &seed_lo, fb, &iopts).map_err(|e| escape_to_seed(e, chart))?
    } else if minus.is_empty() {
        integrate(f, fb, &seed_hi, fa, &iopts).map_err(|e| escape_to_seed(e, chart))?
    } else {
        // Initial guess: the truncated curve, mapped into the final chart.
        let mut guess = NumericTrajectory::default();
        for &x in &iopts.outputs {
            let xo = chart.x_to_original(x);
            let (_, y) = chart.to_final(xo, &jet.eval(jet.optimal_order(opts.k_seed, xo), xo))?;
            guess.xs.push(x);
            guess.ys.push(y);
        }
        let mut cur = guess;
        loop {
            let fm = Frozen { f, active: &minus, frozen: &cur };
            let s_lo: Vec<f64> = minus.iter().map(|&i| seed_lo[i]).collect();
            let tm = integrate(&fm, fa, &s_lo, fb, &iopts).map_err(|e| escape_to_seed(e, chart))?;
            let mut mid = cur.clone();
            merge(&mut mid, &tm, &minus);
            let fp = Frozen { f, active: &plus, frozen: &mid };
            let s_hi: Vec<f64> = plus.iter().map(|&i| seed_hi[i]).collect();
            let tp = integrate(&fp, fb, &s_hi, fa, &iopts).map_err(|e| escape_to_seed(e, chart))?;
            let mut next = mid.clone();
            merge(&mut next, &tp, &plus);
            let change = next
                .ys
                .iter()
                .zip(&cur.ys)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs() / u.abs().max(1e-300)))
                .fold(0.0, f64::max);
            cur = next;
            if change < 1e-13 || sweeps >= opts.max_sweeps {
                break;
            }
            sweeps += 1;
        }
        cur
    };
    let mut traj = NumericTrajectory { stats: chart_traj.stats.clone(), ..Default::default() };
    for (x, y) in chart_traj.xs.iter().zip(&chart_traj.ys) {
        if !iopts.outputs.contains(x) {
            continue;
        }
        let (xo, yo) = chart.to_original(*x, y);
        traj.xs.push(xo);
        traj.ys.push(yo);
    }
    if traj.xs.len() > 1 && traj.xs[0] > traj.xs[1] {
        traj.xs.reverse();
        traj.ys.reverse();
    }
    let report = contact_report(&traj, gamma, opts.n_contact, opts.window)?;
    Ok(Shot { chart_trajectory: chart_traj, trajectory: traj, report, sweeps, signs })
}

/// Overwrites the `idx` components of `dst` at its abscissae with those of `src`.
fn merge(dst: &mut NumericTrajectory, src: &NumericTrajectory, idx: &[usize]) {
    for (x, y) in dst.xs.iter().zip(dst.ys.iter_mut()) {
        if let Some(v) = src.at(*x).map(<[f64]>::to_vec).or_else(|| src.interpolate(*x)) {
            for (k, &i) in idx.iter().enumerate() {
                y[i] = v[k];
            }
        }
    }
}

/// A trajectory and the difference to a second one, integrated together.
#[derive(Clone, Debug)]
pub struct PairTrajectory {
    pub base: NumericTrajectory,
    /// `y_2 - y_1` at the abscissae of `base`.
    pub diff: NumericTrajectory,
}

struct Paired<'a> {
    f: &'a dyn Field,
}

impl Field for Paired<'_> {
    fn dim(&self) -> usize {
        2 * self.f.dim()
    }
    fn rhs(&self, x: f64, y: &[f64], out: &mut [f64]) {
        let n = self.f.dim();
        let (o1, o2) = out.split_at_mut(n);
        self.f.rhs(x, &y[..n], o1);
        self.f.rhs_diff(x, &y[..n], &y[n..], o2);
    }
}

/// Integrates `y_1` from `y0` and `y_2` from `y0 + d0`, carrying `d = y_2 - y_1`
/// as its own unknown so it keeps relative accuracy when far below `|y_1|`.
pub fn integrate_pair(
    f: &dyn Field,
    x0: f64,
    y0: &[f64],
    d0: &[f64],
    x1: f64,
    opts: &IntegratorOptions,
) -> Result<PairTrajectory> {
    let n = f.dim();
    if y0.len() != n || d0.len() != n {
        return Err(Error::ShapeError("pair seeds must match the field dimension".into()));
    }
    let mut o = opts.clone();
    let mut atol = vec![opts.atol; n];
    atol.extend(std::iter::repeat(1e-300).take(n));
    o.atol_vec = Some(atol);
    let y: Vec<f64> = y0.iter().chain(d0).copied().collect();
    let t = integrate(&Paired { f }, x0, &y, x1, &o)?;
    let base = NumericTrajectory {
        xs: t.xs.clone(),
        ys: t.ys.iter().map(|v| v[..n].to_vec()).collect(),
        stats: t.stats.clone(),
    };
    let diff = NumericTrajectory { xs: t.xs, ys: t.ys.iter().map(|v| v[n..].to_vec()).collect(), stats: t.stats };
    Ok(PairTrajectory { base, diff })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatContactReport {
    pub window: (f64, f64),
    pub samples: usize,
    /// Smallest least-squares slope of `ln |y_2 - y_1|` over the window and its two halves.
    pub slope: f64,
    pub k_max: usize,
    /// Largest `K <= k_max` with `slope >= K`.
    pub certified_order: usize,
    pub certified: bool,
}

/// Flat contact from the sampled difference `d(x)` of two trajectories.
pub fn flat_contact_from_diff(diff: &NumericTrajectory, k_max: usize, window: (f64, f64)) -> Result<FlatContactReport> {
    check_window_loose(window)?;
    let pts: Vec<(f64, f64)> = diff
        .window(window.0, window.1)
        .map(|(x, d)| (x.ln(), d.iter().map(|v| v.abs()).fold(0.0, f64::max)))
        .filter(|p| p.1 > 0.0)
        .map(|(lx, r)| (lx, r.ln()))
        .collect();
    let samples = diff.window(window.0, window.1).count();
    if samples < 4 {
        return Err(Error::InsufficientWindow);
    }
    let slope = if pts.len() < 2 {
        f64::INFINITY
    } else {
        let mid = (window.0.ln() + window.1.ln()) / 2.0;
        let lo: Vec<_> = pts.iter().copied().filter(|p| p.0 <= mid).collect();
        let hi: Vec<_> = pts.iter().copied().filter(|p| p.0 >= mid).collect();
        [ls_slope(&pts), ls_slope(&lo), ls_slope(&hi)].into_iter().filter(|s| s.is_finite()).fold(f64::INFINITY, f64::min)
    };
    let certified_order = if slope.is_infinite() { k_max } else { (slope.floor().max(0.0) as usize).min(k_max) };
    Ok(FlatContactReport {
        window,
        samples,
        slope,
        k_max,
        certified_order,
        certified: certified_order >= k_max,
    })
}

fn check_window_loose(window: (f64, f64)) -> Result<()> {
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::InsufficientWindow);
    }
    Ok(())
}

/// Flat contact of two trajectories sampled at common abscissae.
pub fn flat_contact_check(
    t1: &NumericTrajectory,
    t2: &NumericTrajectory,
    k_max: usize,
    window: (f64, f64),
) -> Result<FlatContactReport> {
    let mut diff = NumericTrajectory::default();
    for (x, y) in t1.xs.iter().zip(&t1.ys) {
        if let Some(z) = t2.at(*x) {
            diff.xs.push(*x);
            diff.ys.push(z.iter().zip(y).map(|(a, b)| a - b).collect());
        }
    }
    flat_contact_from_diff(&diff, k_max, window)
}

/// `0 < x < eps` and `|y - j_k gamma(x)| < C x^k`.
pub fn horn_membership(x: f64, y: &[f64], jet: &CurveJet, k: usize, c: f64, eps: f64) -> bool {
    if !(x > 0.0 && x < eps) {
        return false;
    }
    let g = jet.eval(k, x);
    y.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < c * x.powi(k as i32)
}

impl Json for ContactReport {
    fn to_json(&self) -> Value {
        json!({
            "N": self.n_contact,
            "window": [self.window.0, self.window.1],
            "samples": self.samples,
            "sup_ratio": self.sup_ratio,
            "slope": self.slope,
            "bounded": self.bounded,
            "certified": self.certified,
        })
    }
    fn from_json(_: &Value) -> Result<Self> {
        Err(Error::Parse("reports are output only".into()))
    }
}

impl Json for FlatContactReport {
    fn to_json(&self) -> Value {
        json!({
            "window": [self.window.0, self.window.1],
            "samples": self.samples,
            "slope": self.slope,
            "K_max": self.k_max,
            "certified_order": self.certified_order,
            "certified": self.certified,
        })
    }
    fn from_json(_: &Value) -> Result<Self> {
        Err(Error::Parse("reports are output only".into()))
    }
}
