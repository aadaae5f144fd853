//! Block structures, the embedding `Θ` of complex matrices and direct sums.

use serde::{Deserialize, Serialize};

use super::complex::ComplexSeries;
use super::matrix::{Mat, PolyMatrix};
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Complex,
    Real,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    /// Multiplicity; a complex block spans `2 * size` real rows.
    pub size: usize,
}

impl Block {
    pub fn real(size: usize) -> Self {
        Block { kind: BlockKind::Real, size }
    }

    pub fn complex(size: usize) -> Self {
        Block { kind: BlockKind::Complex, size }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            BlockKind::Complex => 2 * self.size,
            BlockKind::Real => self.size,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct BlockStructure {
    pub blocks: Vec<Block>,
}

impl BlockStructure {
    pub fn new(blocks: Vec<Block>) -> Self {
        BlockStructure { blocks }
    }

    /// Real dimension.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    /// Row ranges occupied by each block.
    pub fn ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|b| {
                let r = start..start + b.dim();
                start = r.end;
                r
            })
            .collect()
    }

    pub fn n_complex(&self) -> usize {
        self.blocks.iter().filter(|b| b.kind == BlockKind::Complex).map(|b| b.size).sum()
    }
}

/// `a I_2 + b J_2`.
pub fn theta<T: Scalar>(a: T, b: T) -> Mat<T> {
    Mat::from_rows(vec![vec![a.clone(), -b.clone()], vec![b, a]]).expect("2x2")
}

/// Replaces each complex entry `a + ib` by the block `a I_2 + b J_2`.
pub fn theta_embed<T: Scalar>(m: &[Vec<ComplexSeries<T>>]) -> Result<PolyMatrix<T>> {
    let k = m.len();
    if m.iter().any(|r| r.len() != k) {
        return Err(Error::ShapeError("theta_embed needs a square matrix".into()));
    }
    let trunc = m.iter().flatten().map(ComplexSeries::trunc).min().unwrap_or(0);
    let mut coeffs = Vec::with_capacity(trunc + 1);
    for d in 0..=trunc {
        let mut c = Mat::zeros(2 * k, 2 * k);
        for (i, row) in m.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                c.set_block(2 * i, 2 * j, &theta(z.re.coeff(d).clone(), z.im.coeff(d).clone()));
            }
        }
        coeffs.push(c);
    }
    PolyMatrix::from_coeffs(coeffs, trunc)
}

/// Inverse of `Θ` on a 2x2 block, if the block lies in its image.
pub fn theta_inverse<T: Scalar>(m: &Mat<T>, r: usize, c: usize) -> Option<(T, T)> {
    let (a, b) = (m[(r, c)].clone(), m[(r + 1, c)].clone());
    (m[(r + 1, c + 1)] == a && m[(r, c + 1)] == -b.clone()).then_some((a, b))
}

/// Block-diagonal `M ⊕ N`, known through the smaller truncation order.
pub fn direct_sum<T: Scalar>(m: &PolyMatrix<T>, n: &PolyMatrix<T>) -> PolyMatrix<T> {
    let trunc = m.trunc().min(n.trunc());
    let size = m.n() + n.n();
    let coeffs = (0..=trunc)
        .map(|k| {
            let mut c = Mat::zeros(size, size);
            c.set_block(0, 0, m.coeff(k));
            c.set_block(m.n(), m.n(), n.coeff(k));
            c
        })
        .collect();
    PolyMatrix::from_coeffs(coeffs, trunc).expect("square blocks")
}

/// Constant version of [`direct_sum`] for any number of blocks.
pub fn direct_sum_mats<T: Scalar>(blocks: &[Mat<T>]) -> Mat<T> {
    let size = blocks.iter().map(Mat::rows).sum();
    let mut out = Mat::zeros(size, size);
    let mut at = 0;
    for b in blocks {
        out.set_block(at, at, b);
        at += b.rows();
    }
    out
}

/// Whether `C` has the block shape `Θ(C_1 ⊕ ..) ⊕ E_1 ⊕ ..` dictated by `bs`.
///
/// A positive answer is cross-checked against `[D, C] = 0`; a failure of that
/// check means `D` does not follow `bs` and is reported as a shape error.
pub fn compatible<T: Scalar>(c: &PolyMatrix<T>, d: &PolyMatrix<T>, bs: &BlockStructure) -> Result<bool> {
    if c.n() != d.n() || bs.dim() != c.n() {
        return Err(Error::ShapeError(format!(
            "sizes differ: C is {}, D is {}, block structure spans {}",
            c.n(),
            d.n(),
            bs.dim()
        )));
    }
    let ranges = bs.ranges();
    for m in c.coeffs() {
        if !mat_compatible(m, bs, &ranges) {
            return Ok(false);
        }
    }
    let t = c.trunc().min(d.trunc());
    let (c, d) = (c.truncate(t), d.truncate(t));
    let comm = &(&d * &c) - &(&c * &d);
    if !comm.truncate(t).is_zero() {
        return Err(Error::ShapeError("C has the block shape but does not commute with D".into()));
    }
    Ok(true)
}

pub(crate) fn mat_compatible<T: Scalar>(m: &Mat<T>, bs: &BlockStructure, ranges: &[std::ops::Range<usize>]) -> bool {
    for (bi, rb) in ranges.iter().enumerate() {
        for (bj, cb) in ranges.iter().enumerate() {
            for i in rb.clone() {
                for j in cb.clone() {
                    if bi != bj && !m[(i, j)].is_zero() {
                        return false;
                    }
                }
            }
        }
        if bs.blocks[bi].kind == BlockKind::Complex {
            for i in (rb.start..rb.end).step_by(2) {
                for j in (rb.start..rb.end).step_by(2) {
                    if theta_inverse(m, i, j).is_none() {
                        return false;
                    }
                }
            }
        }
    }
    true
}
