//! Dense matrix kernels shared by the solvers.
//!
//! Everything here is column-major and sequential. Columns are samples, so
//! the hot loops (products against `X`, column scaling, triangular solves) walk
//! contiguous memory.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::Error;

/// Dense real matrix stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Wraps column-major storage. Fails if the length does not match, or if a
    /// dimension is zero.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, Error> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; handy for literals in tests.
    ///
    /// Panics if the rows are ragged or empty.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        assert!(r > 0, "no rows");
        let c = rows[0].len();
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for (i, &v) in self.col(j).iter().enumerate() {
                t.data[i * self.cols + j] = v;
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &Matrix) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        libm::sqrt(self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        self.map(|v| alpha * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Elementwise `self + alpha * other`, in place.
    pub fn add_scaled(&mut self, alpha: f64, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        axpy(alpha, &other.data, &mut self.data);
    }

    /// Squared ℓ2 norm of each row.
    pub fn row_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for j in 0..self.cols {
            for (o, &v) in out.iter_mut().zip(self.col(j)) {
                *o += v * v;
            }
        }
        out
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix, Error> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: rhs.rows });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            gemv_cols(self, rhs.col(j), out.col_mut(j));
        }
        Ok(out)
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        gemv_cols(self, v, &mut out);
        out
    }

    /// `selfᵀ · rhs`.
    pub fn t_matmul(&self, rhs: &Matrix) -> Result<Matrix, Error> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, found: rhs.rows });
        }
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for j in 0..rhs.cols {
            let r = rhs.col(j);
            for i in 0..self.cols {
                out.data[j * self.cols + i] = dot(self.col(i), r);
            }
        }
        Ok(out)
    }

    /// `self · rhsᵀ`.
    pub fn matmul_t(&self, rhs: &Matrix) -> Result<Matrix, Error> {
        if self.cols != rhs.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: rhs.cols });
        }
        let mut out = Matrix::zeros(self.rows, rhs.rows);
        for k in 0..self.cols {
            let a = self.col(k);
            let b = rhs.col(k);
            for (j, &bj) in b.iter().enumerate() {
                if bj != 0.0 {
                    axpy(bj, a, out.col_mut(j));
                }
            }
        }
        Ok(out)
    }

    /// Symmetric Gram matrix `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for j in 0..n {
            let cj = self.col(j);
            for i in j..n {
                let v = dot(self.col(i), cj);
                g.data[j * n + i] = v;
                g.data[i * n + j] = v;
            }
        }
        g
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// Strictly positive diagonal weights, stored as a vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalWeights(Vec<f64>);

impl DiagonalWeights {
    /// Fails with [`Error::NonPositiveWeight`] unless every value is finite and > 0.
    pub fn new(values: Vec<f64>) -> Result<Self, Error> {
        if let Some(index) = values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositiveWeight { index });
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn reciprocal(&self) -> DiagonalWeights {
        DiagonalWeights(self.0.iter().map(|v| 1.0 / v).collect())
    }
}

/// Cholesky factor `L` of a symmetric positive definite matrix, `M = L·Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    // Lower triangle holds L; the strict upper triangle is garbage.
    factor: Vec<f64>,
}

const BLOCK: usize = 64;

impl Cholesky {
    /// Factors `m` after symmetrizing it as `(M + Mᵀ)/2`.
    pub fn factor(m: &Matrix) -> Result<Self, Error> {
        let n = m.rows;
        if m.cols != n {
            return Err(Error::DimensionMismatch { expected: n, found: m.cols });
        }
        let mut a = m.data.clone();
        for j in 0..n {
            for i in j + 1..n {
                let s = 0.5 * (a[j * n + i] + a[i * n + j]);
                a[j * n + i] = s;
            }
        }
        factor_blocked(&mut a, n)?;
        Ok(Self { n, factor: a })
    }

    /// Factors a matrix whose lower triangle is already symmetric-correct; the
    /// upper triangle is ignored. Consumes the storage.
    pub fn factor_lower(m: Matrix) -> Result<Self, Error> {
        let n = m.rows;
        if m.cols != n {
            return Err(Error::DimensionMismatch { expected: n, found: m.cols });
        }
        let mut a = m.data;
        factor_blocked(&mut a, n)?;
        Ok(Self { n, factor: a })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L·Lᵀ·y = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let f = &self.factor;
        // forward: L z = b, column oriented
        for j in 0..n {
            let col = &f[j * n..(j + 1) * n];
            b[j] /= col[j];
            let bj = b[j];
            if bj != 0.0 {
                axpy(-bj, &col[j + 1..], &mut b[j + 1..]);
            }
        }
        // backward: Lᵀ y = z, row-of-Lᵀ is column of L
        for j in (0..n).rev() {
            let col = &f[j * n..(j + 1) * n];
            let s = dot(&col[j + 1..], &b[j + 1..]);
            b[j] = (b[j] - s) / col[j];
        }
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix, Error> {
        if b.rows != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: b.rows });
        }
        let mut out = b.clone();
        for j in 0..out.cols {
            self.solve_in_place(out.col_mut(j));
        }
        Ok(out)
    }
}

/// Solves `M·Y = B` for symmetric positive definite `M` by Cholesky factorization.
///
/// `M` is symmetrized as `(M + Mᵀ)/2` first. A failed factorization (a
/// non-positive pivot) is reported as [`Error::SingularSystem`].
pub fn spd_solve(m: &Matrix, b: &Matrix) -> Result<Matrix, Error> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch { expected: m.rows, found: m.cols });
    }
    Cholesky::factor(m)?.solve(b)
}

/// Returns `X · diag(d)⁻¹`: column `j` of `x` divided by `d_j`.
pub fn scale_cols_inv(x: &Matrix, d: &DiagonalWeights) -> Result<Matrix, Error> {
    if d.len() != x.cols {
        return Err(Error::DimensionMismatch { expected: x.cols, found: d.len() });
    }
    let mut out = x.clone();
    for (j, &dj) in d.values().iter().enumerate() {
        let inv = 1.0 / dj;
        for v in out.col_mut(j) {
            *v *= inv;
        }
    }
    Ok(out)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators so the compiler can vectorize without reassociating
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out += a · v` where `a` is column-major, accumulated column by column.
fn gemv_cols(a: &Matrix, v: &[f64], out: &mut [f64]) {
    for (k, &vk) in v.iter().enumerate() {
        if vk != 0.0 {
            axpy(vk, a.col(k), out);
        }
    }
}

/// In-place lower Cholesky of the column-major `n×n` buffer `a`.
///
/// Right-looking and blocked: factor a diagonal block, solve the panel below
/// it, then apply the rank-`BLOCK` update to the trailing lower triangle.
fn factor_blocked(a: &mut [f64], n: usize) -> Result<(), Error> {
    let mut kb = 0;
    while kb < n {
        let b = BLOCK.min(n - kb);
        factor_diag_block(a, n, kb, b)?;
        let below = kb + b;
        if below < n {
            solve_panel(a, n, kb, b);
            update_trailing(a, n, kb, b);
        }
        kb += b;
    }
    Ok(())
}

fn factor_diag_block(a: &mut [f64], n: usize, kb: usize, b: usize) -> Result<(), Error> {
    for j in kb..kb + b {
        for k in kb..j {
            let ljk = a[k * n + j];
            if ljk != 0.0 {
                let (head, tail) = a.split_at_mut(j * n);
                let src = &head[k * n + j..k * n + kb + b];
                let dst = &mut tail[j..kb + b];
                axpy(-ljk, src, dst);
            }
        }
        let d = a[j * n + j];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularSystem { pivot: j });
        }
        let d = libm::sqrt(d);
        a[j * n + j] = d;
        let inv = 1.0 / d;
        for v in &mut a[j * n + j + 1..j * n + kb + b] {
            *v *= inv;
        }
    }
    Ok(())
}

/// Panel rows `kb+b..n` of block columns `kb..kb+b`: `P ← P · L_kkᵀ⁻¹`.
fn solve_panel(a: &mut [f64], n: usize, kb: usize, b: usize) {
    let lo = kb + b;
    for j in kb..kb + b {
        for k in kb..j {
            let ljk = a[k * n + j];
            if ljk != 0.0 {
                let (head, tail) = a.split_at_mut(j * n);
                axpy(-ljk, &head[k * n + lo..(k + 1) * n], &mut tail[lo..n]);
            }
        }
        let inv = 1.0 / a[j * n + j];
        for v in &mut a[j * n + lo..(j + 1) * n] {
            *v *= inv;
        }
    }
}

/// Trailing lower triangle `A22 ← A22 − P·Pᵀ`, four panel columns per sweep.
fn update_trailing(a: &mut [f64], n: usize, kb: usize, b: usize) {
    let lo = kb + b;
    let (head, tail) = a.split_at_mut(lo * n);
    for j in lo..n {
        let dst = &mut tail[(j - lo) * n + j..(j - lo + 1) * n];
        let mut k = kb;
        while k + 4 <= kb + b {
            let c0 = &head[k * n + j..(k + 1) * n];
            let c1 = &head[(k + 1) * n + j..(k + 2) * n];
            let c2 = &head[(k + 2) * n + j..(k + 3) * n];
            let c3 = &head[(k + 3) * n + j..(k + 4) * n];
            let (s0, s1, s2, s3) = (c0[0], c1[0], c2[0], c3[0]);
            for i in 0..dst.len() {
                dst[i] -= s0 * c0[i] + s1 * c1[i] + s2 * c2[i] + s3 * c3[i];
            }
            k += 4;
        }
        while k < kb + b {
            let c = &head[k * n + j..(k + 1) * n];
            let s = c[0];
            axpy(-s, c, dst);
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let g = random_matrix(rng, n, n);
        let mut m = g.gram();
        m.add_scaled(1.0, &Matrix::identity(n));
        m
    }

    fn rel_residual(m: &Matrix, y: &Matrix, b: &Matrix) -> f64 {
        let my = m.matmul(y).unwrap();
        my.distance(b) / b.frobenius_norm().max(1.0)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = Matrix::from_rows(&[&[1.5, -2.0], &[0.25, 3.0], &[7.0, 0.0]]);
        let y = spd_solve(&Matrix::identity(3), &b).unwrap();
        assert_eq!(y, b);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let m = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let b = Matrix::from_rows(&[&[3.0], &[3.0]]);
        let y = spd_solve(&m, &b).unwrap();
        assert!((y[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((y[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_spd(&mut rng, 8);
        let b = random_matrix(&mut rng, 8, 3);
        let y = spd_solve(&m, &b).unwrap();
        assert!(rel_residual(&m, &y, &b) <= 1e-10);
    }

    #[test]
    fn hundred_seeded_spd_cases_including_blocked_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for case in 0..100 {
            // a few sizes straddle the block boundary
            let n = match case % 5 {
                0 => 1,
                1 => 7,
                2 => 64,
                3 => 65,
                _ => 130,
            };
            let m = random_spd(&mut rng, n);
            let b = random_matrix(&mut rng, n, 2);
            let y = spd_solve(&m, &b).unwrap();
            assert!(rel_residual(&m, &y, &b) <= 1e-10, "case {case} n={n}");
        }
    }

    #[test]
    fn indefinite_matrix_is_singular() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let b = Matrix::from_rows(&[&[1.0], &[1.0]]);
        assert!(matches!(spd_solve(&m, &b), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn symmetrizes_before_factoring() {
        let m = Matrix::from_rows(&[&[2.0, 1.0 + 1e-12], &[1.0 - 1e-12, 2.0]]);
        let b = Matrix::from_rows(&[&[3.0], &[3.0]]);
        let y = spd_solve(&m, &b).unwrap();
        assert!((y[(0, 0)] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn scale_cols_inv_cases() {
        let x = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(scale_cols_inv(&x, &DiagonalWeights::ones(2)).unwrap(), x);
        let d = DiagonalWeights::new(vec![1.0, 2.0]).unwrap();
        let expect = Matrix::from_rows(&[&[1.0, 1.0], &[3.0, 2.0]]);
        assert_eq!(scale_cols_inv(&x, &d).unwrap(), expect);
        let bad = DiagonalWeights::ones(3);
        assert!(matches!(scale_cols_inv(&x, &bad), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn scale_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 5, 9);
        let d = DiagonalWeights::new((0..9).map(|_| rng.random_range(0.1..10.0)).collect()).unwrap();
        let back = scale_cols_inv(&scale_cols_inv(&x, &d).unwrap(), &d.reciprocal()).unwrap();
        assert!(back.distance(&x) <= 1e-12);
    }

    #[test]
    fn weights_reject_non_positive() {
        assert!(DiagonalWeights::new(vec![1.0, 0.0]).is_err());
        assert!(DiagonalWeights::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn products_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 4, 6);
        let b = random_matrix(&mut rng, 4, 3);
        let c = random_matrix(&mut rng, 5, 6);
        let at = a.transpose();
        assert!(a.t_matmul(&b).unwrap().distance(&at.matmul(&b).unwrap()) < 1e-14);
        assert!(a.matmul_t(&c).unwrap().distance(&a.matmul(&c.transpose()).unwrap()) < 1e-14);
        assert!(a.gram().distance(&at.matmul(&a).unwrap()) < 1e-14);
        assert!(a.matmul(&b).is_err());
    }
}
