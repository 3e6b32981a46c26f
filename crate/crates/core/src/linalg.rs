//! Dense linear algebra: a row-major matrix, Cholesky factorization of SPD
//! matrices, power iteration for `‖AᵀA‖`, and H-weighted quadratic forms.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`; the small helpers in [`vecops`]
//! cover the handful of BLAS-1 operations the solvers need.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by [`cholesky_factor`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Pivots at or below this value mean the matrix is not positive definite.
pub const PIVOT_TOL: f64 = 1e-14;
/// Relative stopping tolerance of the power iteration.
pub const POWER_TOL: f64 = 1e-8;
/// Default iteration cap of the power iteration.
pub const POWER_MAX_ITERS: usize = 10_000;

const POWER_SEED: u64 = 0x5_eed0_fa11;

pub mod vecops {
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn norm_inf(a: &[f64]) -> f64 {
        a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    pub fn scale(alpha: f64, a: &[f64]) -> Vec<f64> {
        a.iter().map(|x| alpha * x).collect()
    }

    /// `y += alpha * x`
    pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    pub fn all_finite(a: &[f64]) -> bool {
        a.iter().all(|v| v.is_finite())
    }
}

/// Dense matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("matrix data length", rows * cols, data.len()));
        }
        if !vecops::all_finite(&data) {
            return Err(Error::InvalidData("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, value: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = value;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    ///
    /// # Panics
    /// Panics if the rows have different lengths.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `A·v`
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dims("matvec", self.cols, v.len()));
        }
        Ok((0..self.rows).map(|i| vecops::dot(self.row(i), v)).collect())
    }

    /// `Aᵀ·v`
    pub fn matvec_t(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::dims("transposed matvec", self.rows, v.len()));
        }
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                vecops::axpy(*vi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::dims("matmul", self.cols, other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                vecops::axpy(a, other.row(k), dst);
            }
        }
        Ok(out)
    }

    /// `A·Aᵀ`, filled symmetrically so the result is exactly symmetric.
    pub fn gram_rows(&self) -> DenseMatrix {
        let m = self.rows;
        let mut out = Self::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = vecops::dot(self.row(i), self.row(j));
                out.data[i * m + j] = v;
                out.data[j * m + i] = v;
            }
        }
        out
    }

    /// `Aᵀ·A`
    pub fn gram_cols(&self) -> DenseMatrix {
        self.transpose().gram_rows()
    }

    pub fn scaled(&self, alpha: f64) -> DenseMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: vecops::scale(alpha, &self.data),
        }
    }

    pub fn add_assign_scaled(&mut self, alpha: f64, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dims("matrix add", self.data.len(), other.data.len()));
        }
        vecops::axpy(alpha, &other.data, &mut self.data);
        Ok(())
    }

    pub fn add_diagonal(&mut self, value: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += value;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        vecops::norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        vecops::norm_inf(&self.data)
    }

    /// First asymmetric entry beyond the relative tolerance, if any.
    fn symmetry_violation(&self, tol: f64) -> Option<(usize, usize, f64)> {
        for i in 0..self.rows {
            for j in 0..i {
                let (a, b) = (self.get(i, j), self.get(j, i));
                let diff = (a - b).abs();
                if diff > tol * 1f64.max(a.abs()).max(b.abs()) {
                    return Some((i, j, diff));
                }
            }
        }
        None
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && self.symmetry_violation(tol).is_none()
    }

    /// `true` when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// Horizontal concatenation `[A₁ A₂ …]`.
    pub fn hstack(blocks: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut offset = 0;
        for b in blocks {
            if b.rows != rows {
                return Err(Error::dims("hstack rows", rows, b.rows));
            }
            out.set_block(0, offset, b);
            offset += b.cols;
        }
        Ok(out)
    }

    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[&DenseMatrix]) -> DenseMatrix {
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            out.set_block(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at `(row, col)`.
    ///
    /// # Panics
    /// Panics if the block does not fit.
    pub fn set_block(&mut self, row: usize, col: usize, block: &DenseMatrix) {
        assert!(row + block.rows <= self.rows && col + block.cols <= self.cols);
        for i in 0..block.rows {
            let dst = (row + i) * self.cols + col;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(i));
        }
    }
}

/// Wire form: explicit shape plus row-major entries.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    shape: [usize; 2],
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for DenseMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        DenseMatrix::new(repr.shape[0], repr.shape[1], repr.data)
    }
}

impl From<DenseMatrix> for MatrixRepr {
    fn from(m: DenseMatrix) -> Self {
        MatrixRepr {
            shape: [m.rows, m.cols],
            data: m.data,
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    lower: DenseMatrix,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    /// Rebuilds `L·Lᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.lower.matmul(&self.lower.transpose()).expect("square factor")
    }

    /// Solves `M·v = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::dims("spd solve", n, rhs.len()));
        }
        let l = &self.lower;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let s = vecops::dot(&l.row(i)[..i], &y[..i]);
            y[i] = (y[i] - s) / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for (k, yk) in y.iter().enumerate().skip(i + 1) {
                s -= l.get(k, i) * yk;
            }
            y[i] = s / l.get(i, i);
        }
        Ok(y)
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub fn cholesky_factor(m: &DenseMatrix) -> Result<SpdFactor> {
    if !m.is_square() {
        return Err(Error::dims("cholesky (square)", m.rows, m.cols));
    }
    if let Some((row, col, diff)) = m.symmetry_violation(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric { row, col, diff });
    }
    let n = m.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let lj = &l.data[j * n..j * n + j];
        let pivot = m.get(j, j) - vecops::dot(lj, lj);
        if pivot.is_nan() || pivot <= PIVOT_TOL {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l.data[j * n + j] = d;
        for i in j + 1..n {
            let s = vecops::dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
            l.data[i * n + j] = (m.get(i, j) - s) / d;
        }
    }
    Ok(SpdFactor { lower: l })
}

pub fn solve_spd(factor: &SpdFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    factor.solve(rhs)
}

/// Largest eigenvalue of `AᵀA` by power iteration.
pub fn spectral_norm_sq(a: &DenseMatrix) -> Result<f64> {
    spectral_norm_sq_with(a, POWER_TOL, POWER_MAX_ITERS)
}

pub fn spectral_norm_sq_with(a: &DenseMatrix, tol: f64, max_iters: usize) -> Result<f64> {
    if a.is_zero() || a.rows == 0 || a.cols == 0 {
        return Ok(0.0);
    }
    // Iterate on whichever Gram matrix is smaller; both share the top eigenvalue.
    let use_rows = a.rows < a.cols;
    let dim = if use_rows { a.rows } else { a.cols };
    let apply = |v: &[f64]| -> Vec<f64> {
        if use_rows {
            a.matvec(&a.matvec_t(v).expect("dims")).expect("dims")
        } else {
            a.matvec_t(&a.matvec(v).expect("dims")).expect("dims")
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = vecops::norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut estimate = 0.0;
    for _ in 0..max_iters {
        let w = apply(&v);
        let rayleigh = vecops::dot(&v, &w);
        let nw = vecops::norm(&w);
        if nw == 0.0 {
            // Start vector landed in the null space; the spectrum is not empty
            // because `a` is nonzero, so perturb deterministically.
            v = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nv = vecops::norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            continue;
        }
        v = vecops::scale(1.0 / nw, &w);
        if (rayleigh - estimate).abs() <= tol * rayleigh.abs() {
            return Ok(rayleigh.max(nw));
        }
        estimate = rayleigh;
    }
    Err(Error::NoConvergence {
        what: "power iteration",
        iterations: max_iters,
    })
}

/// `vᵀHv`
pub fn h_quadratic(h: &DenseMatrix, v: &[f64]) -> Result<f64> {
    if !h.is_square() {
        return Err(Error::dims("h_quadratic (square)", h.rows, h.cols));
    }
    if v.len() != h.rows {
        return Err(Error::dims("h_quadratic", h.rows, v.len()));
    }
    Ok((0..h.rows).map(|i| v[i] * vecops::dot(h.row(i), v)).sum())
}
