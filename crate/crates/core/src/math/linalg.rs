//! Small dense complex vectors and matrices.
//!
//! Dimensions here are at most a few dozen, so everything is plain row-major
//! storage with cubic algorithms. Matrices with zero columns are allowed: the
//! empty interference set of a lone user is one.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative residual below which a column is declared linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// A complex column vector of positive length.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    entries: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension("vector must have at least one entry".into()));
        }
        Ok(Self { entries })
    }

    /// Standard basis vector `e_index` of length `len`.
    pub fn basis(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::Dimension(format!("basis index {index} out of range for length {len}")));
        }
        let mut entries = vec![Complex64::new(0.0, 0.0); len];
        entries[index] = Complex64::new(1.0, 0.0);
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.entries
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.entries)
    }

    /// Inner product `⟨self, other⟩ = self† other`.
    pub fn inner(&self, other: &ComplexVector) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!("inner product of lengths {} and {}", self.len(), other.len())));
        }
        Ok(inner(&self.entries, &other.entries))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { entries: self.entries.iter().map(|&z| z * c).collect() }
    }
}

impl core::ops::Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.entries[i]
    }
}

pub(crate) fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Stacks `columns` side by side into a `rows × columns.len()` matrix.
    pub fn from_columns(rows: usize, columns: &[&ComplexVector]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::Dimension(format!("column {j} has length {}, expected {rows}", c.len())));
            }
            for i in 0..rows {
                m.data[i * m.cols + j] = c[i];
            }
        }
        Ok(m)
    }

    /// Matrix whose rows are the given vectors.
    pub fn from_rows(cols: usize, rows: &[ComplexVector]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(format!("row {i} has length {}, expected {cols}", r.len())));
            }
            data.extend_from_slice(r.as_slice());
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for t in 0..self.cols {
                let a = self.get(i, t);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(t, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.len() {
            return Err(Error::Dimension(format!("cannot apply {}x{} to length {}", self.rows, self.cols, v.len())));
        }
        let entries = (0..self.rows).map(|i| inner_plain(self.row(i), v.as_slice())).collect();
        ComplexVector::new(entries)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm_sq(&self.data).sqrt()
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// True when square and `‖A − A†‖_max ≤ tol · max(1, ‖A‖_max)`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.data.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

fn inner_plain(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Incrementally built orthonormal set, used for null-space chains.
#[derive(Debug, Clone)]
pub struct Orthonormal {
    dim: usize,
    vectors: Vec<Vec<Complex64>>,
}

impl Orthonormal {
    pub fn new(dim: usize) -> Self {
        Self { dim, vectors: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Component of `v` orthogonal to the current span, using two passes of
    /// modified Gram–Schmidt.
    pub fn residual(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for q in &self.vectors {
                let c = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        w
    }

    /// `‖v‖²` after projection onto the orthogonal complement of the span.
    pub fn residual_norm_sq(&self, v: &[Complex64]) -> f64 {
        norm_sq(&self.residual(v))
    }

    /// Adds the normalized residual of `v`. Fails when `v` is (numerically)
    /// in the current span; `column` is reported in the error.
    pub fn push(&mut self, v: &[Complex64], column: usize) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Dimension(format!("vector of length {} in dimension {}", v.len(), self.dim)));
        }
        if self.vectors.len() == self.dim {
            return Err(Error::RankDeficient { column });
        }
        let scale = norm_sq(v).sqrt();
        let w = self.residual(v);
        let n = norm_sq(&w).sqrt();
        if !(n > RANK_TOL * scale) || n == 0.0 {
            return Err(Error::RankDeficient { column });
        }
        self.vectors.push(w.into_iter().map(|z| z / n).collect());
        Ok(())
    }
}

/// Orthonormal basis of the orthogonal complement of the column span of `m`.
///
/// Returns a `(r − m) × r` matrix `V` with `V·M = 0` and `V·V† = I`. The
/// completion adds, at each step, the standard basis vector with the largest
/// residual (lowest index on ties), so an empty `m` yields the identity.
pub fn nullspace_basis(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let r = m.rows();
    if m.cols() >= r {
        return Err(Error::Dimension(format!("need fewer columns than rows, got {}x{}", r, m.cols())));
    }
    let mut span = Orthonormal::new(r);
    for j in 0..m.cols() {
        span.push(&m.column(j), j)?;
    }
    let mut complement = Orthonormal::new(r);
    let mut unit = vec![Complex64::new(0.0, 0.0); r];
    while span.len() < r {
        let mut best = (0, -1.0);
        for t in 0..r {
            unit.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            unit[t] = Complex64::new(1.0, 0.0);
            let res = span.residual_norm_sq(&unit);
            if res > best.1 + 1e-12 {
                best = (t, res);
            }
        }
        unit.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        unit[best.0] = Complex64::new(1.0, 0.0);
        span.push(&unit, m.cols() + best.0)?;
        let q = span.vectors().last().cloned().unwrap_or_default();
        complement.vectors.push(q);
    }
    let mut out = ComplexMatrix::zeros(r - m.cols(), r);
    for (i, q) in complement.vectors.iter().enumerate() {
        for (t, z) in q.iter().enumerate() {
            out.set(i, t, z.conj());
        }
    }
    Ok(out)
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn hermitian_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.rows() != a.cols() {
        return Err(Error::Contract(format!("{}x{} matrix is not square", a.rows(), a.cols())));
    }
    if !a.is_hermitian(1e-12) {
        return Err(Error::Contract("matrix is not Hermitian".into()));
    }
    let n = a.rows();
    // A = L L†, L lower triangular with real positive diagonal.
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for t in 0..j {
            d -= l.get(j, t).norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::Contract("matrix is not positive definite".into()));
        }
        let d = d.sqrt();
        l.set(j, j, Complex64::new(d, 0.0));
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for t in 0..j {
                s -= l.get(i, t) * l.get(j, t).conj();
            }
            l.set(i, j, s / d);
        }
    }
    // L⁻¹ by forward substitution, then A⁻¹ = L⁻† L⁻¹.
    let mut linv = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        for i in c..n {
            let mut s = if i == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            for t in c..i {
                s -= l.get(i, t) * linv.get(t, c);
            }
            linv.set(i, c, s / l.get(i, i));
        }
    }
    let mut inv = linv.adjoint().matmul(&linv)?;
    for i in 0..n {
        let d = inv.get(i, i).re;
        inv.set(i, i, Complex64::new(d, 0.0));
        for j in i + 1..n {
            let z = 0.5 * (inv.get(i, j) + inv.get(j, i).conj());
            inv.set(i, j, z);
            inv.set(j, i, z.conj());
        }
    }
    Ok(inv)
}

/// `h† R h` for Hermitian `R`; the imaginary part is rounding noise and is dropped.
pub fn quad_form(h: &ComplexVector, r: &ComplexMatrix) -> Result<f64> {
    if r.rows() != r.cols() || r.rows() != h.len() {
        return Err(Error::Contract(format!(
            "quadratic form of length {} with {}x{} matrix",
            h.len(),
            r.rows(),
            r.cols()
        )));
    }
    let h = h.as_slice();
    let mut acc = 0.0;
    for (i, hi) in h.iter().enumerate() {
        acc += (hi.conj() * inner_plain(r.row(i), h)).re;
    }
    Ok(acc)
}
