//! Dense constant matrices and polynomial matrices `A(x) = sum A_k x^k`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use super::scalar::Scalar;
use super::series::{Order, Series};
use crate::error::{need, Error, Result};

#[derive(Clone, PartialEq, Debug)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeError("ragged matrix rows".into()));
        }
        Ok(Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn scale(&self, c: &T) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v.clone() * c.clone()).collect() }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Mat<U> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Rows `rs` and columns `cs` in the given order.
    pub fn select(&self, rs: &[usize], cs: &[usize]) -> Self {
        Self::from_fn(rs.len(), cs.len(), |i, j| self[(rs[i], cs[j])].clone())
    }

    /// Writes `block` with its top-left corner at `(r, c)`.
    pub fn set_block(&mut self, r: usize, c: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r + i, c + j)] = block[(i, j)].clone();
            }
        }
    }

    /// `P^T M P` for the permutation matrix sending `e_k` to `e_{perm[k]}`,
    /// i.e. entry `(i, j)` of the result is `M[perm[i], perm[j]]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        self.select(perm, perm)
    }

    /// Permutation matrix with `P e_k = e_{perm[k]}`.
    pub fn permutation(perm: &[usize]) -> Self {
        let mut m = Self::zeros(perm.len(), perm.len());
        for (k, &p) in perm.iter().enumerate() {
            m[(p, k)] = T::one();
        }
        m
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let best = (r..m.rows)
                .filter(|&i| !m[(i, c)].is_zero())
                .max_by(|&a, &b| m[(a, c)].magnitude().total_cmp(&m[(b, c)].magnitude()));
            let Some(p) = best else { continue };
            m.swap_rows(r, p);
            let inv = T::one() / m[(r, c)].clone();
            for j in 0..m.cols {
                m[(r, j)] = m[(r, j)].clone() * inv.clone();
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in 0..m.cols {
                        let v = m[(r, j)].clone() * f.clone();
                        m[(i, j)] = m[(i, j)].clone() - v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{v : M v = 0}` as columns.
    pub fn nullspace(&self) -> Self {
        let (r, piv) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !piv.contains(c)).collect();
        let mut out = Self::zeros(self.cols, free.len());
        for (k, &f) in free.iter().enumerate() {
            out[(f, k)] = T::one();
            for (i, &p) in piv.iter().enumerate() {
                out[(p, k)] = -r[(i, f)].clone();
            }
        }
        out
    }

    /// Solves `M X = B`, returning one solution or `None` when inconsistent.
    pub fn solve(&self, b: &Self) -> Option<Self> {
        let aug = self.hcat(b);
        let (r, piv) = aug.rref();
        if piv.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = Self::zeros(self.cols, b.cols);
        for (i, &p) in piv.iter().enumerate() {
            for j in 0..b.cols {
                x[(p, j)] = r[(i, self.cols + j)].clone();
            }
        }
        Some(x)
    }

    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::ShapeError("inverse of a non-square matrix".into()));
        }
        self.solve(&Self::identity(self.rows)).filter(|_| self.rank() == self.rows).ok_or(Error::NotRegular)
    }

    pub fn det(&self) -> T {
        assert!(self.is_square());
        let mut m = self.clone();
        let mut det = T::one();
        for c in 0..m.cols {
            let best = (c..m.rows)
                .filter(|&i| !m[(i, c)].is_zero())
                .max_by(|&a, &b| m[(a, c)].magnitude().total_cmp(&m[(b, c)].magnitude()));
            let Some(p) = best else { return T::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det = det * piv.clone();
            for i in c + 1..m.rows {
                if !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone() / piv.clone();
                    for j in c..m.cols {
                        let v = m[(c, j)].clone() * f.clone();
                        m[(i, j)] = m[(i, j)].clone() - v;
                    }
                }
            }
        }
        det
    }

    /// Characteristic polynomial `det(tI - M)`, coefficients from `t^0` up.
    pub fn char_poly(&self) -> Vec<T> {
        // Faddeev-LeVerrier.
        let n = self.rows;
        let mut c = vec![T::zero(); n + 1];
        c[n] = T::one();
        let mut mk = Self::zeros(n, n);
        for k in 1..=n {
            let mut next = self * &mk;
            for i in 0..n {
                next[(i, i)] = next[(i, i)].clone() + c[n - k + 1].clone();
            }
            mk = next;
            let am = self * &mk;
            c[n - k] = -(am.trace() / T::from_int(k as i64));
        }
        c
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: Self) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }
}

impl<T: Scalar> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: Self) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }
}

impl<T: Scalar> Neg for &Mat<T> {
    type Output = Mat<T>;
    fn neg(self) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a.clone()).collect() }
    }
}

impl<T: Scalar> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: Self) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out: Mat<T> = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = out[(i, j)].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }
}

/// Square matrix of power series with a common truncation order, stored by
/// coefficient: `coeffs[k]` is the matrix multiplying `x^k`.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyMatrix<T> {
    n: usize,
    coeffs: Vec<Mat<T>>,
}

impl<T: Scalar> PolyMatrix<T> {
    pub fn zero(n: usize, trunc: usize) -> Self {
        PolyMatrix { n, coeffs: vec![Mat::zeros(n, n); trunc + 1] }
    }

    pub fn identity(n: usize, trunc: usize) -> Self {
        Self::constant(Mat::identity(n), trunc)
    }

    pub fn constant(m: Mat<T>, trunc: usize) -> Self {
        Self::from_coeffs(vec![m], trunc).expect("square constant")
    }

    /// `sum_k coeffs[k] x^k`, padded with zeros or cut to `trunc`.
    pub fn from_coeffs(mut coeffs: Vec<Mat<T>>, trunc: usize) -> Result<Self> {
        let n = coeffs.first().map_or(0, Mat::rows);
        if coeffs.iter().any(|m| m.rows() != n || m.cols() != n) {
            return Err(Error::ShapeError("polynomial matrix coefficients must be square and equal-sized".into()));
        }
        coeffs.resize(trunc + 1, Mat::zeros(n, n));
        Ok(PolyMatrix { n, coeffs })
    }

    /// Builds from entry series; the truncation order is the smallest one present.
    pub fn from_entries(entries: &[Vec<Series<T>>]) -> Result<Self> {
        let n = entries.len();
        if entries.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeError("polynomial matrix must be square".into()));
        }
        let trunc = entries.iter().flatten().map(Series::trunc).min().unwrap_or(0);
        let coeffs = (0..=trunc).map(|k| Mat::from_fn(n, n, |i, j| entries[i][j].coeff(k).clone())).collect();
        Ok(PolyMatrix { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Mat<T>] {
        &self.coeffs
    }

    /// Coefficient matrix of `x^k`; zero beyond the stored range is not
    /// meaningful and panics.
    pub fn coeff(&self, k: usize) -> &Mat<T> {
        &self.coeffs[k]
    }

    pub fn set_coeff(&mut self, k: usize, m: Mat<T>) {
        assert_eq!(m.rows(), self.n);
        self.coeffs[k] = m;
    }

    pub fn entry(&self, i: usize, j: usize) -> Series<T> {
        Series::new(self.coeffs.iter().map(|m| m[(i, j)].clone()).collect(), self.trunc())
    }

    pub fn set_entry(&mut self, i: usize, j: usize, s: &Series<T>) {
        for (k, m) in self.coeffs.iter_mut().enumerate() {
            m[(i, j)] = s.get(k).cloned().unwrap_or_else(T::zero);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Mat::is_zero)
    }

    pub fn order(&self) -> Order {
        match self.coeffs.iter().position(|m| !m.is_zero()) {
            Some(k) => Order::Finite(k),
            None => Order::Above(self.trunc()),
        }
    }

    /// Highest power with a nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|m| !m.is_zero())
    }

    pub fn truncate(&self, k: usize) -> Self {
        let k = k.min(self.trunc());
        PolyMatrix { n: self.n, coeffs: self.coeffs[..=k].to_vec() }
    }

    pub fn jet(&self, k: usize) -> Self {
        let mut out = self.clone();
        for m in out.coeffs.iter_mut().skip(k + 1) {
            *m = Mat::zeros(self.n, self.n);
        }
        out
    }

    pub fn ord_jet(&self, k: usize) -> Result<(Order, Self)> {
        need(k, self.trunc())?;
        Ok((self.order(), self.jet(k)))
    }

    /// Same data claimed known through `trunc`; only for genuine polynomials.
    pub fn extend_exact(&self, trunc: usize) -> Self {
        Self::from_coeffs(self.coeffs.clone(), trunc.max(self.trunc())).expect("shape preserved")
    }

    pub fn scale(&self, c: &T) -> Self {
        PolyMatrix { n: self.n, coeffs: self.coeffs.iter().map(|m| m.scale(c)).collect() }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U + Copy) -> PolyMatrix<U> {
        PolyMatrix { n: self.n, coeffs: self.coeffs.iter().map(|m| m.map(f)).collect() }
    }

    pub fn mul_xk(&self, k: usize) -> Self {
        let mut coeffs = vec![Mat::zeros(self.n, self.n); k];
        coeffs.extend(self.coeffs.iter().cloned());
        PolyMatrix { n: self.n, coeffs }
    }

    pub fn exact_divide(&self, k: usize) -> Result<Self> {
        if let Some(j) = self.coeffs.iter().take(k).position(|m| !m.is_zero()) {
            return Err(Error::NotDivisible { order: j });
        }
        if k > self.trunc() {
            return Err(Error::EmptyPrecision);
        }
        Ok(PolyMatrix { n: self.n, coeffs: self.coeffs[k..].to_vec() })
    }

    pub fn derivative(&self) -> Result<Self> {
        if self.trunc() == 0 {
            return Err(Error::EmptyPrecision);
        }
        let coeffs = (1..=self.trunc()).map(|k| self.coeffs[k].scale(&T::from_int(k as i64))).collect();
        Ok(PolyMatrix { n: self.n, coeffs })
    }

    /// `A(x^r)`.
    pub fn ramify(&self, r: usize) -> Self {
        let trunc = (self.trunc() + 1) * r - 1;
        let mut out = Self::zero(self.n, trunc);
        for (k, m) in self.coeffs.iter().enumerate() {
            out.coeffs[k * r] = m.clone();
        }
        out
    }

    /// Inverse of a matrix with `A(0)` invertible.
    pub fn inverse(&self) -> Result<Self> {
        let inv0 = self.coeffs[0].inverse()?;
        let mut out: Vec<Mat<T>> = vec![inv0.clone()];
        for k in 1..=self.trunc() {
            let mut acc = Mat::zeros(self.n, self.n);
            for j in 1..=k {
                if !self.coeffs[j].is_zero() {
                    acc = &acc + &(&self.coeffs[j] * &out[k - j]);
                }
            }
            out.push(-&(&inv0 * &acc));
        }
        Ok(PolyMatrix { n: self.n, coeffs: out })
    }

    pub fn transpose(&self) -> Self {
        PolyMatrix { n: self.n, coeffs: self.coeffs.iter().map(Mat::transpose).collect() }
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        PolyMatrix { n: perm.len(), coeffs: self.coeffs.iter().map(|m| m.permute(perm)).collect() }
    }

    /// Principal sub-block on the index set `idx`.
    pub fn select(&self, rs: &[usize], cs: &[usize]) -> PolyBlock<T> {
        PolyBlock { coeffs: self.coeffs.iter().map(|m| m.select(rs, cs)).collect() }
    }

    pub fn eval(&self, x: &T) -> Mat<T> {
        let mut acc = Mat::zeros(self.n, self.n);
        for m in self.coeffs.iter().rev() {
            acc = &acc.scale(x) + m;
        }
        acc
    }

    fn binary(&self, other: &Self, f: impl Fn(&Mat<T>, &Mat<T>) -> Mat<T>) -> Self {
        assert_eq!(self.n, other.n, "polynomial matrix size mismatch");
        let t = self.trunc().min(other.trunc());
        PolyMatrix { n: self.n, coeffs: (0..=t).map(|k| f(&self.coeffs[k], &other.coeffs[k])).collect() }
    }
}

/// Rectangular block of a polynomial matrix, by coefficient.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyBlock<T> {
    pub coeffs: Vec<Mat<T>>,
}

impl<T: Scalar> PolyBlock<T> {
    pub fn order(&self) -> Option<usize> {
        self.coeffs.iter().position(|m| !m.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.order().is_none()
    }
}

impl<T: Scalar> Add for &PolyMatrix<T> {
    type Output = PolyMatrix<T>;
    fn add(self, rhs: Self) -> PolyMatrix<T> {
        self.binary(rhs, |a, b| a + b)
    }
}

impl<T: Scalar> Sub for &PolyMatrix<T> {
    type Output = PolyMatrix<T>;
    fn sub(self, rhs: Self) -> PolyMatrix<T> {
        self.binary(rhs, |a, b| a - b)
    }
}

impl<T: Scalar> Neg for &PolyMatrix<T> {
    type Output = PolyMatrix<T>;
    fn neg(self) -> PolyMatrix<T> {
        PolyMatrix { n: self.n, coeffs: self.coeffs.iter().map(|m| -m).collect() }
    }
}

impl<T: Scalar> Mul for &PolyMatrix<T> {
    type Output = PolyMatrix<T>;
    fn mul(self, rhs: Self) -> PolyMatrix<T> {
        assert_eq!(self.n, rhs.n, "polynomial matrix size mismatch");
        let va = self.order().finite().unwrap_or(self.trunc() + 1);
        let vb = rhs.order().finite().unwrap_or(rhs.trunc() + 1);
        let trunc = (self.trunc() + vb).min(rhs.trunc() + va);
        let mut out = PolyMatrix::zero(self.n, trunc);
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > trunc || a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j > trunc {
                    break;
                }
                if !b.is_zero() {
                    out.coeffs[i + j] = &out.coeffs[i + j] + &(a * b);
                }
            }
        }
        out
    }
}
