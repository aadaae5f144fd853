//! Adaptive integration in `t = ln x`: Dormand-Prince 5(4), with a
//! two-stage L-stable Rosenbrock step where the problem is stiff.

use nalgebra::{DMatrix, DVector};

use super::field::{check_dim, jacobian, Field};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Per-component absolute tolerances, overriding `atol`.
    pub atol_vec: Option<Vec<f64>>,
    pub max_steps: usize,
    /// Initial step in `ln x`.
    pub h0: Option<f64>,
    /// Allow the implicit step when `x |df/dy| h > 3`.
    pub stiff: bool,
    /// Escape bound on the sup norm of `y`.
    pub bound: f64,
    /// Abscissae hit exactly and recorded.
    pub outputs: Vec<f64>,
    /// Record every accepted step, not only the outputs and endpoints.
    pub record_steps: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-14,
            atol_vec: None,
            max_steps: 2_000_000,
            h0: None,
            stiff: true,
            bound: 1e6,
            outputs: Vec::new(),
            record_steps: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub implicit: usize,
    pub evals: usize,
}

/// Samples sorted by increasing `x`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NumericTrajectory {
    pub xs: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub stats: StepStats,
}

impl NumericTrajectory {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ys.first().map_or(0, Vec::len)
    }

    /// Samples with `a <= x <= b`.
    pub fn window(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, &[f64])> {
        self.xs.iter().zip(&self.ys).filter(move |(x, _)| **x >= a && **x <= b).map(|(x, y)| (*x, y.as_slice()))
    }

    /// Value at a recorded abscissa.
    pub fn at(&self, x: f64) -> Option<&[f64]> {
        self.xs.iter().position(|&v| v == x).map(|i| self.ys[i].as_slice())
    }

    /// Linear interpolation in `ln x`; for plotting and coarse lookups only.
    pub fn interpolate(&self, x: f64) -> Option<Vec<f64>> {
        let i = self.xs.partition_point(|&v| v < x);
        if i < self.xs.len() && self.xs[i] == x {
            return Some(self.ys[i].clone());
        }
        if i == 0 || i == self.xs.len() {
            return None;
        }
        let (a, b) = (self.xs[i - 1].ln(), self.xs[i].ln());
        let w = (x.ln() - a) / (b - a);
        Some(self.ys[i - 1].iter().zip(&self.ys[i]).map(|(u, v)| u + w * (v - u)).collect())
    }

    fn sort(&mut self) {
        if self.xs.len() > 1 && self.xs[0] > self.xs[self.xs.len() - 1] {
            self.xs.reverse();
            self.ys.reverse();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    Reached,
    /// Sup norm exceeded the bound at this abscissa.
    Escaped(f64),
    /// The caller's predicate fired at this abscissa.
    Predicate(f64),
}

/// Integrates from `(x0, y0)` to `x1`; `Escape` if the bound is exceeded first.
pub fn integrate(f: &dyn Field, x0: f64, y0: &[f64], x1: f64, opts: &IntegratorOptions) -> Result<NumericTrajectory> {
    let (t, stop) = integrate_until(f, x0, y0, x1, opts, &|_, _| false)?;
    match stop {
        Stop::Escaped(x) | Stop::Predicate(x) => Err(Error::Escape { x }),
        Stop::Reached => Ok(t),
    }
}

// Dormand-Prince tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct LogField<'a> {
    f: &'a dyn Field,
    evals: usize,
}

impl LogField<'_> {
    /// `dy/dt = x f(x, y)` with `x = e^t`; `xv` overrides `e^t` at output points.
    fn eval(&mut self, t: f64, xv: Option<f64>, y: &[f64], out: &mut [f64]) {
        let x = xv.unwrap_or_else(|| t.exp());
        self.evals += 1;
        self.f.rhs(x, y, out);
        out.iter_mut().for_each(|o| *o *= x);
    }
}

/// As [`integrate`], also stopping when `stop(x, y)` holds after an accepted step.
pub fn integrate_until(
    f: &dyn Field,
    x0: f64,
    y0: &[f64],
    x1: f64,
    opts: &IntegratorOptions,
    stop: &dyn Fn(f64, &[f64]) -> bool,
) -> Result<(NumericTrajectory, Stop)> {
    check_dim(f, y0)?;
    if !(x0 > 0.0 && x1 > 0.0) {
        return Err(Error::DomainError(format!("integration needs x > 0, got {x0} -> {x1}")));
    }
    let n = f.dim();
    let mut lf = LogField { f, evals: 0 };
    let mut traj = NumericTrajectory::default();
    traj.xs.push(x0);
    traj.ys.push(y0.to_vec());
    let (t0, t1) = (x0.ln(), x1.ln());
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut outs: Vec<f64> =
        opts.outputs.iter().copied().filter(|&x| (x.ln() - t0) * dir > 0.0 && (t1 - x.ln()) * dir >= 0.0).collect();
    outs.sort_by(|a, b| if dir > 0.0 { a.total_cmp(b) } else { b.total_cmp(a) });
    outs.dedup();
    if outs.last() != Some(&x1) && x1 != x0 {
        outs.push(x1);
    }
    let atol: Vec<f64> = opts.atol_vec.clone().unwrap_or_else(|| vec![opts.atol; n]);
    let scale = |y: &[f64], z: &[f64], i: usize| atol[i] + opts.rtol * y[i].abs().max(z[i].abs());

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    lf.eval(t, Some(x0), &y, &mut k[0]);
    let mut fsal = true;
    let mut h = opts.h0.unwrap_or_else(|| {
        let d0 = y.iter().enumerate().map(|(i, v)| (v / scale(&y, &y, i)).powi(2)).sum::<f64>().sqrt();
        let d1 = k[0].iter().enumerate().map(|(i, v)| (v / scale(&y, &y, i)).powi(2)).sum::<f64>().sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min((t1 - t0).abs()).max(1e-12)
    }) * dir;
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err_v = vec![0.0; n];
    let mut kbuf = vec![0.0; n];
    let mut next_out = 0;
    let mut steps = 0;
    let mut status = Stop::Reached;

    while next_out < outs.len() {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Fuel(format!("step budget {} exhausted at x = {:e}", opts.max_steps, t.exp())));
        }
        let target = outs[next_out];
        let tt = target.ln();
        let mut hit = false;
        let h_free = h;
        if (t + h - tt) * dir >= 0.0 {
            h = tt - t;
            hit = true;
        }
        if h.abs() < 1e-15 * t.abs().max(1.0) {
            if hit {
                // Already at the output to rounding.
                t = tt;
                record(&mut traj, target, &y);
                next_out += 1;
                h = dir * 1e-6;
                continue;
            }
            return Err(Error::Fuel(format!("step size underflow at x = {:e}", t.exp())));
        }
        if !fsal {
            lf.eval(t, None, &y, &mut k[0]);
        }
        let x = t.exp();
        let sigma = x * f.stiffness(x, &y);
        let xnew = if hit { Some(target) } else { None };
        let implicit = opts.stiff && sigma * h.abs() > 3.0;
        if implicit {
            ros2_step(&mut lf, t, h, xnew, &y, &k[0], &mut ynew, &mut err_v);
        } else {
            for s in 1..7 {
                for i in 0..n {
                    ytmp[i] = y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                lf.eval(t + C[s] * h, if s >= 5 { xnew } else { None }, &ytmp, &mut kbuf);
                k[s].copy_from_slice(&kbuf);
            }
            ynew.copy_from_slice(&ytmp);
            for i in 0..n {
                err_v[i] = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
            }
        }
        let en = (err_v.iter().enumerate().map(|(i, e)| (e / scale(&y, &ynew, i)).powi(2)).sum::<f64>() / n.max(1) as f64)
            .sqrt();
        let finite = ynew.iter().all(|v| v.is_finite()) && en.is_finite();
        if finite && en <= 1.0 {
            traj.stats.accepted += 1;
            if implicit {
                traj.stats.implicit += 1;
                fsal = false;
            } else {
                k.swap(0, 6);
                fsal = true;
            }
            t = if hit { tt } else { t + h };
            y.copy_from_slice(&ynew);
            let xv = if hit { target } else { t.exp() };
            if hit {
                next_out += 1;
            }
            if hit || opts.record_steps {
                record(&mut traj, xv, &y);
            }
            let halt = if y.iter().any(|v| v.abs() > opts.bound) {
                Some(Stop::Escaped(xv))
            } else if stop(xv, &y) {
                Some(Stop::Predicate(xv))
            } else {
                None
            };
            if let Some(st) = halt {
                if !(hit || opts.record_steps) {
                    record(&mut traj, xv, &y);
                }
                status = st;
                break;
            }
            let p = if implicit { 0.5 } else { 0.2 };
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-p)).clamp(0.2, 5.0) };
            h *= fac;
            if hit && h.abs() < h_free.abs() {
                h = h_free;
            }
        } else {
            traj.stats.rejected += 1;
            let p = if implicit { 0.5 } else { 0.2 };
            let fac = if finite { (0.9 * en.powf(-p)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
            // The output abscissa is re-targeted next round.
            if !implicit {
                fsal = true;
            }
        }
    }
    traj.stats.evals = lf.evals;
    traj.sort();
    Ok((traj, status))
}

fn record(traj: &mut NumericTrajectory, x: f64, y: &[f64]) {
    if traj.xs.last() != Some(&x) {
        traj.xs.push(x);
        traj.ys.push(y.to_vec());
    }
}

/// One Rosenbrock step of order 2 with `gamma = 1 + 1/sqrt 2`; the error is
/// the difference to the embedded first order solution.
#[allow(clippy::too_many_arguments)]
fn ros2_step(
    lf: &mut LogField,
    t: f64,
    h: f64,
    xnew: Option<f64>,
    y: &[f64],
    g0: &[f64],
    ynew: &mut [f64],
    err: &mut [f64],
) {
    let n = y.len();
    let gamma = 1.0 + std::f64::consts::FRAC_1_SQRT_2;
    let x = t.exp();
    let jf = jacobian(lf.f, x, y);
    lf.evals += n;
    // dg/dt = x f + x^2 f_x, by a forward difference in t.
    let dt = 1e-7 * h.abs().max(1e-9);
    let mut g1 = vec![0.0; n];
    lf.eval(t + dt, None, y, &mut g1);
    let gt: Vec<f64> = g1.iter().zip(g0).map(|(a, b)| (a - b) / dt).collect();
    let w = DMatrix::from_fn(n, n, |i, k| (if i == k { 1.0 } else { 0.0 }) - h * gamma * x * jf[i * n + k]);
    let Some(lu) = Some(w.lu()).filter(|l| l.is_invertible()) else {
        err.iter_mut().for_each(|e| *e = f64::INFINITY);
        return;
    };
    let rhs1 = DVector::from_fn(n, |i, _| h * g0[i] + gamma * h * h * gt[i]);
    let k1 = lu.solve(&rhs1).unwrap_or_else(|| DVector::from_element(n, f64::NAN));
    let y1: Vec<f64> = (0..n).map(|i| y[i] + k1[i]).collect();
    let mut g2 = vec![0.0; n];
    lf.eval(t + h, xnew, &y1, &mut g2);
    // h J gamma_21 k1 with gamma_21 = -2 gamma; stage time derivative weight -gamma.
    let jk1: Vec<f64> = (0..n).map(|i| x * (0..n).map(|k| jf[i * n + k] * k1[k]).sum::<f64>()).collect();
    let rhs2 = DVector::from_fn(n, |i, _| h * g2[i] - gamma * h * h * gt[i] - 2.0 * gamma * h * jk1[i]);
    let k2 = lu.solve(&rhs2).unwrap_or_else(|| DVector::from_element(n, f64::NAN));
    for i in 0..n {
        ynew[i] = y[i] + 0.5 * (k1[i] + k2[i]);
        err[i] = 0.5 * (k2[i] - k1[i]);
    }
}
