//! Dense symmetric linear algebra: Jacobi eigendecomposition, Cholesky
//! solves, and the symmetric matrix exponential applied to a vector.
//!
//! Deliberately minimal — no LU, no SVD, no sparse storage. The Jacobi
//! rotation method is used for the eigenproblem: it is unconditionally
//! orthogonal and entirely adequate for the desk-scale matrices
//! (n up to a few thousand) this crate works with.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense rectangular matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Dense symmetric matrix. `set_sym` writes both mirror entries, so the
/// storage is exactly symmetric at all times.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "symmetric matrix needs n >= 1");
        SymmetricMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from an upper-triangle generator; `f` is evaluated once per
    /// unordered pair and mirrored.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.len() });
        }
        Ok((0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect())
    }
}

/// Full spectrum of a symmetric matrix.
///
/// Eigenvalues are sorted ascending; `eigenvectors` is row-major with the
/// k-th eigenvector in column k, orthonormal to ~1e-15 per entry.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    eigenvectors: Vec<f64>,
    n: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Component `i` of eigenvector `k`.
    #[inline]
    pub fn vector_component(&self, i: usize, k: usize) -> f64 {
        self.eigenvectors[i * self.n + k]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.n - 1]
    }

    /// `Q^T v`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.len() });
        }
        Ok((0..self.n)
            .map(|k| (0..self.n).map(|i| self.vector_component(i, k) * v[i]).sum())
            .collect())
    }

    /// `Q w` for coefficients `w` in the eigenbasis.
    pub fn unproject(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: w.len() });
        }
        Ok((0..self.n)
            .map(|i| (0..self.n).map(|k| self.vector_component(i, k) * w[k]).sum())
            .collect())
    }

    /// Applies `Q diag(f(lambda)) Q^T` to `v`.
    pub fn apply_spectral_fn(&self, v: &[f64], mut f: impl FnMut(f64) -> f64) -> Result<Vec<f64>> {
        let mut w = self.project(v)?;
        for (wk, lambda) in w.iter_mut().zip(&self.eigenvalues) {
            *wk *= f(*lambda);
        }
        self.unproject(&w)
    }
}

const MAX_SWEEPS: usize = 48;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Classic rotation scheme after Numerical Recipes section 11.1: each
/// sweep annihilates every off-diagonal entry above a shrinking threshold;
/// convergence is quadratic, so the fixed sweep budget is generous. On
/// exhaustion the remaining off-diagonal mass is reported in the error.
pub fn eigh(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    let scale = a.max_abs_entry();
    let mut m = a.data.clone();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    if scale == 0.0 || n == 1 {
        return Ok(EigenDecomposition { eigenvalues: diag_sorted(&m, &mut q, n), eigenvectors: q, n });
    }

    // Stop once the summed off-diagonal mass is negligible relative to the
    // input scale.
    let tol = 1e-15 * scale * (n * n) as f64;

    let mut d: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n - 1 {
            for r in p + 1..n {
                off += m[p * n + r].abs();
            }
        }
        if off <= tol {
            for i in 0..n {
                m[i * n + i] = d[i];
            }
            return Ok(EigenDecomposition {
                eigenvalues: diag_sorted(&m, &mut q, n),
                eigenvectors: q,
                n,
            });
        }

        let thresh = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };

        for p in 0..n - 1 {
            for r in p + 1..n {
                let apq = m[p * n + r];
                let g = 100.0 * apq.abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[r].abs() + g == d[r].abs() {
                    m[p * n + r] = 0.0;
                    m[r * n + p] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }

                let h = d[r] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let mut t = 1.0 / (theta.abs() + libm::sqrt(1.0 + theta * theta));
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };

                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;

                z[p] -= h;
                z[r] += h;
                d[p] -= h;
                d[r] += h;
                m[p * n + r] = 0.0;
                m[r * n + p] = 0.0;

                let rotate = |m: &mut [f64], i1: usize, j1: usize, i2: usize, j2: usize| {
                    let g = m[i1 * n + j1];
                    let h = m[i2 * n + j2];
                    m[i1 * n + j1] = g - s * (h + g * tau);
                    m[i2 * n + j2] = h + s * (g - h * tau);
                };

                for j in 0..p {
                    rotate(&mut m, j, p, j, r);
                    m[p * n + j] = m[j * n + p];
                    m[r * n + j] = m[j * n + r];
                }
                for j in p + 1..r {
                    rotate(&mut m, p, j, j, r);
                    m[j * n + p] = m[p * n + j];
                    m[r * n + j] = m[j * n + r];
                }
                for j in r + 1..n {
                    rotate(&mut m, p, j, r, j);
                    m[j * n + p] = m[p * n + j];
                    m[j * n + r] = m[r * n + j];
                }
                for i in 0..n {
                    let gq = q[i * n + p];
                    let hq = q[i * n + r];
                    q[i * n + p] = gq - s * (hq + gq * tau);
                    q[i * n + r] = hq + s * (gq - hq * tau);
                }
            }
        }

        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }

    let mut off = 0.0;
    for p in 0..n - 1 {
        for r in p + 1..n {
            off += m[p * n + r].abs();
        }
    }
    Err(Error::EighDidNotConverge { off_diagonal: off })
}

/// Sorts the diagonal of `m` ascending, permuting the columns of `q` to
/// match, and returns the sorted eigenvalues.
fn diag_sorted(m: &[f64], q: &mut [f64], n: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[a * n + a].partial_cmp(&m[b * n + b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[k * n + k]).collect();
    let old = q.to_vec();
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            q[i * n + new_col] = old[i * n + old_col];
        }
    }
    eigenvalues
}

/// Solves `(A + jitter I) x = b` for symmetric positive semi-definite `A`
/// by Cholesky factorization. A non-positive pivot after the jitter is
/// reported with its index.
pub fn cholesky_solve(a: &SymmetricMatrix, b: &[f64], jitter: f64) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    if jitter < 0.0 {
        return Err(Error::InvalidArgument("jitter must be non-negative"));
    }

    // Lower factor, row-major.
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        for i in j..n {
            let mut sum = a.get(i, j) + if i == j { jitter } else { 0.0 };
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::NotPositiveDefinite { pivot: j });
                }
                l[j * n + j] = libm::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }

    // L y = b
    let mut x = b.to_vec();
    for i in 0..n {
        let mut sum = x[i];
        for k in 0..i {
            sum -= l[i * n + k] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    // L^T x = y
    for i in (0..n).rev() {
        let mut sum = x[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Ok(x)
}

/// Applies `exp(scale * A)` to `v` through the eigendecomposition:
/// `Q diag(exp(scale * lambda)) Q^T v`.
pub fn sym_matrix_exp_apply(a: &SymmetricMatrix, scale: f64, v: &[f64]) -> Result<Vec<f64>> {
    let eig = eigh(a)?;
    eig.apply_spectral_fn(v, |lambda| libm::exp(scale * lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_diagonal_matrix() {
        let mut a = SymmetricMatrix::zeros(2);
        a.set_sym(0, 0, 3.0);
        a.set_sym(1, 1, 1.0);
        let eig = eigh(&a).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_textbook_two_by_two() {
        // [[2,1],[1,2]] has eigenpairs (1, (1,-1)/sqrt 2) and (3, (1,1)/sqrt 2).
        let mut a = SymmetricMatrix::zeros(2);
        a.set_sym(0, 0, 2.0);
        a.set_sym(1, 1, 2.0);
        a.set_sym(0, 1, 1.0);
        let eig = eigh(&a).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-14);
        let inv_sqrt2 = 1.0 / libm::sqrt(2.0);
        // Eigenvectors are defined up to sign.
        let v0 = (eig.vector_component(0, 0), eig.vector_component(1, 0));
        let v1 = (eig.vector_component(0, 1), eig.vector_component(1, 1));
        assert!((v0.0.abs() - inv_sqrt2).abs() < 1e-14 && (v0.1.abs() - inv_sqrt2).abs() < 1e-14);
        assert!((v0.0 * v0.1) < 0.0, "lambda=1 eigenvector is (1,-1) direction");
        assert!((v1.0 * v1.1) > 0.0, "lambda=3 eigenvector is (1,1) direction");
    }

    #[test]
    fn eigh_trace_is_preserved() {
        let mut rng = crate::rng::CounterRng::new(11);
        for n in [2, 5, 20] {
            let a = SymmetricMatrix::from_upper_fn(n, |_, _| rng.next_gaussian());
            let eig = eigh(&a).unwrap();
            let sum: f64 = eig.eigenvalues.iter().sum();
            let bound = 1e-9 * n as f64 * a.max_abs_entry();
            assert!((sum - a.trace()).abs() <= bound, "n={n}");
        }
    }

    #[test]
    fn eigh_orthonormal_and_reconstructs() {
        let mut rng = crate::rng::CounterRng::new(5);
        let n = 30;
        let a = SymmetricMatrix::from_upper_fn(n, |_, _| rng.next_gaussian());
        let eig = eigh(&a).unwrap();
        // Q^T Q = I
        for k in 0..n {
            for l in 0..n {
                let dot: f64 = (0..n)
                    .map(|i| eig.vector_component(i, k) * eig.vector_component(i, l))
                    .sum();
                let target = if k == l { 1.0 } else { 0.0 };
                assert!((dot - target).abs() < 1e-10, "Q^T Q [{k},{l}] = {dot}");
            }
        }
        // Q diag(lambda) Q^T = A
        let bound = 1e-9 * n as f64 * a.max_abs_entry();
        for i in 0..n {
            for j in 0..n {
                let rebuilt: f64 = (0..n)
                    .map(|k| {
                        eig.vector_component(i, k) * eig.eigenvalues[k] * eig.vector_component(j, k)
                    })
                    .sum();
                assert!((rebuilt - a.get(i, j)).abs() <= bound);
            }
        }
    }

    #[test]
    fn cholesky_identity_returns_rhs() {
        let a = SymmetricMatrix::identity(4);
        let b = [1.0, -2.0, 3.5, 0.25];
        let x = cholesky_solve(&a, &b, 0.0).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-15);
        }
    }

    #[test]
    fn cholesky_diagonal_solve() {
        let mut a = SymmetricMatrix::zeros(2);
        a.set_sym(0, 0, 4.0);
        a.set_sym(1, 1, 9.0);
        let x = cholesky_solve(&a, &[8.0, 27.0], 0.0).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let mut a = SymmetricMatrix::zeros(2);
        a.set_sym(0, 0, 1.0);
        a.set_sym(1, 1, -5.0);
        match cholesky_solve(&a, &[1.0, 1.0], 1e-8) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }

    #[test]
    fn matrix_exp_scale_zero_is_identity() {
        let mut rng = crate::rng::CounterRng::new(2);
        let a = SymmetricMatrix::from_upper_fn(6, |_, _| rng.next_gaussian());
        let v = rng.gaussian_vec(6);
        let out = sym_matrix_exp_apply(&a, 0.0, &v).unwrap();
        for (o, vi) in out.iter().zip(&v) {
            assert!((o - vi).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_exp_diagonal_case() {
        let mut a = SymmetricMatrix::zeros(2);
        a.set_sym(0, 0, 1.0);
        a.set_sym(1, 1, 2.0);
        let out = sym_matrix_exp_apply(&a, -1.0, &[1.0, 1.0]).unwrap();
        assert!((out[0] - libm::exp(-1.0)).abs() < 1e-14);
        assert!((out[1] - libm::exp(-2.0)).abs() < 1e-14);
    }

    #[test]
    fn mul_vec_dimension_check() {
        let a = SymmetricMatrix::identity(3);
        assert!(matches!(a.mul_vec(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }
}
