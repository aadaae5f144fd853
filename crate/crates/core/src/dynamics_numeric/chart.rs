//! Pointwise action of a transformation chain on `(x, y)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::series_core::scalar::rat_to_f64;
use crate::straightener::StraightenerEval;
use crate::vf_couples::{CoordTransform, TransformChain};

#[derive(Clone, Debug)]
enum Step {
    /// `y = beta(x) + y~`.
    Translation(Vec<Vec<f64>>),
    /// `y = P(x) y~`, coefficients row-major.
    Regular(Vec<Vec<f64>>, usize),
    /// `y_i = x y~_i` for `i` in the set.
    Monomial(Vec<usize>),
    /// `x = x~^r`.
    Ramification(u32),
    /// `y = Omega(x)^{-1} z`.
    Rotation(StraightenerEval),
}

/// Maps points of the final chart of a chain to the original chart and back.
#[derive(Clone, Debug, Default)]
pub struct ChartMap {
    steps: Vec<Step>,
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

impl ChartMap {
    pub fn identity() -> Self {
        ChartMap::default()
    }

    pub fn from_chain(chain: &TransformChain) -> Self {
        let steps = chain
            .steps
            .iter()
            .map(|t| match t {
                CoordTransform::PolyTranslation { beta } => {
                    Step::Translation(beta.iter().map(|b| b.coeffs().iter().map(rat_to_f64).collect()).collect())
                }
                CoordTransform::PolyRegular { p } => {
                    let n = p.n();
                    let cs = p
                        .coeffs()
                        .iter()
                        .map(|m| (0..n * n).map(|k| rat_to_f64(&m[(k / n, k % n)])).collect())
                        .collect();
                    Step::Regular(cs, n)
                }
                CoordTransform::DiagMonomial { set } => Step::Monomial(set.clone()),
                CoordTransform::Ramification { r } => Step::Ramification(*r),
            })
            .collect();
        ChartMap { steps }
    }

    /// Appends the straightening `z = Omega(x) y`.
    pub fn then_straighten(mut self, se: StraightenerEval) -> Self {
        self.steps.push(Step::Rotation(se));
        self
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    /// Original abscissa of a final-chart abscissa.
    pub fn x_to_original(&self, x: f64) -> f64 {
        self.steps.iter().rev().fold(x, |x, s| match s {
            Step::Ramification(r) => x.powi(*r as i32),
            _ => x,
        })
    }

    pub fn x_to_final(&self, x: f64) -> f64 {
        self.steps.iter().fold(x, |x, s| match s {
            Step::Ramification(r) => x.powf(1.0 / *r as f64),
            _ => x,
        })
    }

    /// Final chart point to the original chart.
    pub fn to_original(&self, x: f64, y: &[f64]) -> (f64, Vec<f64>) {
        let mut x = x;
        let mut y = y.to_vec();
        for s in self.steps.iter().rev() {
            match s {
                Step::Translation(beta) => {
                    for (yi, b) in y.iter_mut().zip(beta) {
                        *yi += horner(b, x);
                    }
                }
                Step::Regular(cs, n) => {
                    let p = eval_mat(cs, *n, x);
                    y = (&p * DVector::from_column_slice(&y)).iter().copied().collect();
                }
                Step::Monomial(set) => {
                    for &i in set {
                        y[i] *= x;
                    }
                }
                Step::Ramification(r) => x = x.powi(*r as i32),
                Step::Rotation(se) => y = se.apply(x, &y, true),
            }
        }
        (x, y)
    }

    /// Original chart point to the final chart; `x > 0`.
    pub fn to_final(&self, x: f64, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        if !(x > 0.0) {
            return Err(Error::DomainError(format!("chart maps need x > 0, got {x}")));
        }
        let mut x = x;
        let mut y = y.to_vec();
        for s in &self.steps {
            match s {
                Step::Translation(beta) => {
                    for (yi, b) in y.iter_mut().zip(beta) {
                        *yi -= horner(b, x);
                    }
                }
                Step::Regular(cs, n) => {
                    let p = eval_mat(cs, *n, x);
                    let sol = p
                        .lu()
                        .solve(&DVector::from_column_slice(&y))
                        .ok_or_else(|| Error::DomainError(format!("gauge matrix singular at x = {x}")))?;
                    y = sol.iter().copied().collect();
                }
                Step::Monomial(set) => {
                    for &i in set {
                        y[i] /= x;
                    }
                }
                Step::Ramification(r) => x = x.powf(1.0 / *r as f64),
                Step::Rotation(se) => y = se.apply(x, &y, false),
            }
        }
        Ok((x, y))
    }
}

fn eval_mat(cs: &[Vec<f64>], n: usize, x: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for c in cs.iter().rev() {
        m *= x;
        m += DMatrix::from_row_slice(n, n, c);
    }
    m
}
