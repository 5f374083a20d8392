//! Small dense complex vectors and matrices.
//!
//! Problem sizes in this crate are at most a few tens in each dimension, so
//! everything is stored row-major in a flat `Vec` and the kernels are plain
//! loops.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Symmetry tolerance used by the Hermitian constructors.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CVector(Vec<C64>);

impl CVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); len])
    }

    pub fn from_vec(data: Vec<C64>) -> Self {
        Self(data)
    }

    pub fn from_real(data: &[f64]) -> Self {
        Self(data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `self^H other`.
    pub fn dot(&self, other: &CVector) -> Result<C64> {
        check_len(self.len(), other.len(), "dot")?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scale(&self, s: C64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    pub fn add(&self, other: &CVector) -> Result<CVector> {
        check_len(self.len(), other.len(), "add")?;
        Ok(CVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &CVector) -> Result<CVector> {
        check_len(self.len(), other.len(), "sub")?;
        Ok(CVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("{what}: lengths {a} and {b}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag_real(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_columns(columns: &[CVector]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, CVector::len);
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            check_len(rows, c.len(), "from_columns")?;
            for i in 0..rows {
                m[(i, j)] = c[i];
            }
        }
        Ok(m)
    }

    /// Builds a Hermitian matrix, rejecting inputs whose asymmetry exceeds
    /// [`HERMITIAN_TOL`] (scaled by the largest entry when that is above one)
    /// and then symmetrizing exactly.
    pub fn hermitian(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        let mut m = Self::from_row_major(rows, cols, data)?;
        m.make_hermitian()?;
        Ok(m)
    }

    pub fn make_hermitian(&mut self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "Hermitian matrix must be square, got {}x{}",
                self.rows, self.cols
            )));
        }
        let scale = self.max_abs().max(1.0);
        let asym = self.hermitian_defect();
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(asym));
        }
        let n = self.rows;
        for i in 0..n {
            self[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
        Ok(())
    }

    pub fn hermitian_defect(&self) -> f64 {
        let n = self.rows.min(self.cols);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn trace(&self) -> C64 {
        self.diag().into_iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Permutes columns: column `j` of the result is column `order[j]` of `self`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<CMatrix> {
        check_len(order.len(), self.cols, "permute_columns")?;
        let mut out = CMatrix::zeros(self.rows, self.cols);
        for (j, &src) in order.iter().enumerate() {
            for i in 0..self.rows {
                out[(i, j)] = self[(i, src)];
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &CVector) -> Result<CVector> {
        check_len(self.cols, v.len(), "mul_vec")?;
        let mut out = CVector::zeros(self.rows);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    /// `self^H v` without forming the adjoint.
    pub fn adjoint_mul_vec(&self, v: &CVector) -> Result<CVector> {
        check_len(self.rows, v.len(), "adjoint_mul_vec")?;
        let mut out = CVector::zeros(self.cols);
        for i in 0..self.rows {
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += self[(i, j)].conj() * vi;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// Gram matrix `self^H self`, exactly Hermitian.
    pub fn gram(&self) -> CMatrix {
        let n = self.cols;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = C64::new(0.0, 0.0);
                for r in 0..self.rows {
                    s += self[(r, i)].conj() * self[(r, j)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s.conj();
            }
            out[(i, i)].im = 0.0;
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &CMatrix, f: impl Fn(C64, C64) -> C64) -> Result<CMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `Re Tr(self * other)`; for Hermitian operands this is the Frobenius
    /// inner product.
    pub fn trace_product_re(&self, other: &CMatrix) -> Result<f64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::Dimension("trace_product: shapes".into()));
        }
        let mut s = 0.0;
        for i in 0..self.rows {
            for k in 0..self.cols {
                s += (self[(i, k)] * other[(k, i)]).re;
            }
        }
        Ok(s)
    }

    /// Rank-one outer product `u v^H`.
    pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
        let mut out = CMatrix::zeros(u.len(), v.len());
        for i in 0..u.len() {
            for j in 0..v.len() {
                out[(i, j)] = u[i] * v[j].conj();
            }
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `M = L L^H`.
pub fn cholesky(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("cholesky of non-square matrix".into()));
    }
    let n = m.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Factorization(format!(
                "matrix not positive definite (pivot {j} = {d:e})"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L L^H x = rhs` given the Cholesky factor.
pub fn cholesky_solve(l: &CMatrix, rhs: &CVector) -> Result<CVector> {
    let n = l.rows();
    check_len(n, rhs.len(), "cholesky_solve")?;
    let mut y = rhs.clone();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)].conj() * y[k];
        }
        y[i] = s / l[(i, i)].re;
    }
    Ok(y)
}

/// Solves `M x = rhs` for Hermitian positive-definite `M`.
pub fn solve_hpd(m: &CMatrix, rhs: &CVector) -> Result<CVector> {
    let l = cholesky(m)?;
    cholesky_solve(&l, rhs)
}

/// Householder least squares `min ‖A x − b‖` for a real `rows x cols`
/// matrix stored column by column, `rows ≥ cols`. Returns `x` and overwrites
/// `b` with the residual `b − A x`, which is formed from the reflectors
/// rather than by subtraction.
pub fn real_lstsq(a: &mut [f64], rows: usize, cols: usize, b: &mut [f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(b.len(), rows);
    if rows < cols {
        return Err(Error::Dimension(format!(
            "least squares needs rows >= cols, got {rows} x {cols}"
        )));
    }
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let apply = |v: &[f64], x: &mut [f64]| {
        let vv: f64 = v.iter().map(|t| t * t).sum();
        if vv == 0.0 {
            return;
        }
        let f = 2.0 * v.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() / vv;
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi -= f * vi;
        }
    };
    for j in 0..cols {
        let col = &a[j * rows + j..(j + 1) * rows];
        let norm = col.iter().map(|t| t * t).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Factorization(format!(
                "least-squares matrix is rank deficient at column {j}"
            )));
        }
        let mut v = col.to_vec();
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        for c in j..cols {
            apply(&v, &mut a[c * rows + j..(c + 1) * rows]);
        }
        apply(&v, &mut b[j..]);
        reflectors.push(v);
    }
    let mut x = vec![0.0; cols];
    for i in (0..cols).rev() {
        let mut t = b[i];
        for c in (i + 1)..cols {
            t -= a[c * rows + i] * x[c];
        }
        x[i] = t / a[i * rows + i];
    }
    b[..cols].iter_mut().for_each(|t| *t = 0.0);
    for (j, v) in reflectors.iter().enumerate().rev() {
        apply(v, &mut b[j..]);
    }
    Ok(x)
}
