use std::ops::{Index, IndexMut};
use std::sync::OnceLock;

use num_complex::Complex64;

use super::vector::{sgn, ComplexVector};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Dense row-major real matrix. Used for edge weights and magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self::from_fn(n, m, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| Complex64::new(self[(i, j)], 0.0))
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self::from_fn(n, m, |i, j| rows[i][j]))
    }

    /// `u v*`
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    fn check_same_shape(&self, other_shape: (usize, usize), what: &str) -> Result<()> {
        if self.shape() != other_shape {
            return Err(Error::Dimension(format!(
                "{what}: {:?} vs {:?}",
                self.shape(),
                other_shape
            )));
        }
        Ok(())
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &ComplexMatrix) -> Result<Self> {
        self.check_same_shape(other.shape(), "hadamard product")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    /// Entrywise product with a real matrix, e.g. `W o X`.
    pub fn hadamard_real(&self, other: &RealMatrix) -> Result<Self> {
        self.check_same_shape(other.shape(), "hadamard product")?;
        let data = self.data.iter().zip(other.as_slice()).map(|(a, &b)| a * b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<Self> {
        self.check_same_shape(other.shape(), "difference")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn entrywise_sgn(&self) -> Self {
        self.map(sgn)
    }

    pub fn entrywise_abs(&self) -> RealMatrix {
        RealMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].norm())
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn offdiag_frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    /// Largest `|A_ij - conj(A_ji)|`; zero for a Hermitian matrix.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn matvec(&self, x: &[Complex64]) -> Result<ComplexVector> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matrix with {} columns times vector of length {}",
                self.cols,
                x.len()
            )));
        }
        ComplexVector::new(
            (0..self.rows)
                .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Hermitian matrix in compressed row form.
///
/// Storage is exactly Hermitian: the strictly lower triangle is the
/// conjugate of the upper one and the diagonal is real. Only nonzero entries
/// are stored, so products cost `O(nnz)` on the sparse measurement graphs; a
/// dense copy is materialized on first request.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    dense: OnceLock<ComplexMatrix>,
}

static ZERO_ENTRY: Complex64 = ZERO;

impl HermitianMatrix {
    /// Builds from the upper triangle (including the diagonal) given by `f`;
    /// the lower triangle is filled by conjugation and the diagonal is made real.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Self::from_upper_entries(n, entries)
    }

    /// Builds from upper-triangle triplets `(i, j, v)` with `i <= j`.
    /// Repeated positions are summed; the imaginary part of diagonal entries
    /// is dropped.
    pub fn from_upper_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix must be at least 1x1".into()));
        }
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        for (i, j, v) in entries {
            if i > j || j >= n {
                return Err(Error::InvalidArgument(format!("entry ({i},{j}) is not in the upper triangle of a {n}x{n} matrix")));
            }
            if i == j {
                rows[i].push((i, Complex64::new(v.re, 0.0)));
            } else {
                rows[i].push((j, v));
                rows[j].push((i, v.conj()));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = ZERO;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if v != ZERO {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n, row_ptr, col_idx, values, dense: OnceLock::new() })
    }

    /// Accepts a matrix that is Hermitian up to `1e-12` relative to its
    /// largest entry, then rebuilds it exactly from its upper triangle.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Dimension(format!("Hermitian matrix must be square, got {:?}", m.shape())));
        }
        let scale = m.as_slice().iter().fold(0.0_f64, |s, z| s.max(z.norm()));
        let defect = m.hermitian_defect();
        if defect > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidArgument(format!("matrix is not Hermitian (defect {defect:.3e})")));
        }
        Self::from_upper(m.rows(), |i, j| m[(i, j)])
    }

    pub fn from_real_symmetric(m: &RealMatrix) -> Result<Self> {
        Self::new(m.to_complex())
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n]).expect("n >= 1")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_upper_entries(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, Complex64::new(v, 0.0))))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices of the stored entries of row `i`, ascending.
    pub fn row_indices(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Stored entries of row `i`, aligned with [`HermitianMatrix::row_indices`].
    pub fn row_values(&self, i: usize) -> &[Complex64] {
        &self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        self.dense.get_or_init(|| {
            let mut m = ComplexMatrix::zeros(self.n, self.n);
            for i in 0..self.n {
                for (&j, &v) in self.row_indices(i).iter().zip(self.row_values(i)) {
                    m[(i, j)] = v;
                }
            }
            m
        })
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.as_matrix();
        self.dense.into_inner().expect("initialized above")
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, i)].re).collect()
    }

    /// `y <- A x`, no allocation.
    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<ComplexVector> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix times vector of length {}",
                self.dim(),
                self.dim(),
                x.len()
            )));
        }
        let mut y = vec![ZERO; x.len()];
        self.apply_into(x, &mut y);
        ComplexVector::new(y)
    }

    /// `Y <- A X` for a row-major `n x p` block `X`.
    pub fn apply_block_into(&self, x: &[Complex64], p: usize, y: &mut [Complex64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n * p);
        debug_assert_eq!(y.len(), n * p);
        for i in 0..n {
            let yrow = &mut y[i * p..(i + 1) * p];
            yrow.fill(ZERO);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[k];
                let xrow = &x[self.col_idx[k] * p..(self.col_idx[k] + 1) * p];
                for (yv, xv) in yrow.iter_mut().zip(xrow) {
                    *yv += a * xv;
                }
            }
        }
    }

    /// `x* A x` (real for Hermitian `A`).
    pub fn quadratic_form(&self, x: &[Complex64]) -> Result<f64> {
        let ax = self.apply(x)?;
        Ok(x.iter().zip(ax.iter()).map(|(u, v)| (u.conj() * v).re).sum())
    }

    /// `Re tr(A B)`.
    pub fn trace_product(&self, b: &ComplexMatrix) -> Result<f64> {
        if b.shape() != (self.dim(), self.dim()) {
            return Err(Error::Dimension("trace product of differently sized matrices".into()));
        }
        let mut acc = 0.0;
        for i in 0..self.dim() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += (self.values[k] * b[(self.col_idx[k], i)]).re;
            }
        }
        Ok(acc)
    }

    /// Gershgorin upper bound on the largest eigenvalue.
    pub fn gershgorin_upper(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let mut s = 0.0;
                let mut diag = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    if self.col_idx[k] == i {
                        diag = self.values[k].re;
                    } else {
                        s += self.values[k].norm();
                    }
                }
                diag + s
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row_values(i).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `D A D` for a real diagonal `D` given by its entries.
    pub fn congruence_diag(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.dim() {
            return Err(Error::Dimension("diagonal scaling of wrong length".into()));
        }
        let mut out = self.clone();
        out.dense = OnceLock::new();
        for i in 0..self.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                out.values[k] *= d[i] * d[out.col_idx[k]];
            }
        }
        Ok(out)
    }
}

impl PartialEq for HermitianMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx && self.values == other.values
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.n && j < self.n, "index ({i},{j}) out of bounds for {0}x{0}", self.n);
        match self.row_indices(i).binary_search(&j) {
            Ok(k) => &self.row_values(i)[k],
            Err(_) => &ZERO_ENTRY,
        }
    }
}

/// Entrywise product `A o B`.
pub fn hadamard(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.hadamard(b)
}

/// Entrywise `sgn` of a matrix.
pub fn entrywise_sgn(a: &ComplexMatrix) -> ComplexMatrix {
    a.entrywise_sgn()
}
