//! Envelope Cholesky factorization of sparse Hermitian positive definite
//! matrices under a reverse Cuthill-McKee ordering.
//!
//! Fill-in of a Cholesky factor stays inside the row envelope, so on banded
//! measurement graphs the factorization costs `O(d b^2)` and a solve
//! `O(d b)` for envelope width `b`.

use std::collections::VecDeque;

use num_complex::Complex64;

use super::matrix::HermitianMatrix;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `P A P^T = L L*` with `L` lower triangular, stored row by row from the
/// first nonzero column of each row.
#[derive(Debug, Clone)]
pub(crate) struct EnvelopeCholesky {
    /// `perm[new] = old`
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<Complex64>,
}

/// Reverse Cuthill-McKee ordering of the sparsity graph of `a`.
fn rcm_order(a: &HermitianMatrix) -> Vec<usize> {
    let n = a.dim();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| a.row_indices(i).iter().copied().filter(|&j| j != i).collect()).collect();
    let degree = |i: usize| adj[i].len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    while order.len() < n {
        let root = (0..n).filter(|&i| !seen[i]).min_by_key(|&i| degree(i)).expect("unvisited vertex");
        let root = pseudo_peripheral(&adj, root);
        seen[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| (degree(w), w));
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Endpoint of a few rounds of "jump to the farthest vertex" within the
/// component of `start`.
fn pseudo_peripheral(adj: &[Vec<usize>], start: usize) -> usize {
    let mut v = start;
    let mut ecc = 0;
    for _ in 0..4 {
        let (far, e) = farthest(adj, v);
        if e <= ecc {
            break;
        }
        v = far;
        ecc = e;
    }
    v
}

fn farthest(adj: &[Vec<usize>], start: usize) -> (usize, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = (start, 0);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v];
        if dv > best.1 || (dv == best.1 && adj[v].len() < adj[best.0].len()) {
            best = (v, dv);
        }
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dv + 1;
                queue.push_back(w);
            }
        }
    }
    best
}

impl EnvelopeCholesky {
    /// Factors `a + shift I`. Fails with [`Error::InvalidArgument`] when a
    /// pivot is not positive.
    pub(crate) fn new(a: &HermitianMatrix, shift: f64) -> Result<Self> {
        let n = a.dim();
        let perm = rcm_order(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (old, &i) in inv.iter().enumerate() {
            for &j in a.row_indices(old) {
                let j = inv[j];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut data = vec![ZERO; offset[n]];
        for (old, &i) in inv.iter().enumerate() {
            for (&j, &v) in a.row_indices(old).iter().zip(a.row_values(old)) {
                let j = inv[j];
                if j <= i {
                    data[offset[i] + j - first[i]] = v;
                }
            }
            data[offset[i] + i - first[i]] += shift;
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = offset[i];
            for j in fi..i {
                let fj = first[j];
                let row_j = offset[j];
                let k0 = fi.max(fj);
                let mut s = data[row_i + j - fi];
                for k in k0..j {
                    s -= data[row_i + k - fi] * data[row_j + k - fj].conj();
                }
                data[row_i + j - fi] = s / data[row_j + j - fj].re;
            }
            let mut pivot = data[row_i + i - fi].re;
            for k in fi..i {
                pivot -= data[row_i + k - fi].norm_sqr();
            }
            if pivot.is_nan() || pivot <= 0.0 {
                return Err(Error::InvalidArgument(format!("matrix is not positive definite (pivot {pivot:.3e} at {i})")));
            }
            data[row_i + i - fi] = Complex64::new(pivot.sqrt(), 0.0);
        }
        Ok(Self { perm, first, offset, data })
    }

    /// Stored entries of the factor.
    #[cfg(test)]
    pub(crate) fn envelope_size(&self) -> usize {
        self.data.len()
    }

    /// `x <- (A + shift I)^{-1} b`.
    pub(crate) fn solve_into(&self, b: &[Complex64], x: &mut [Complex64], work: &mut Vec<Complex64>) {
        let n = self.perm.len();
        work.clear();
        work.extend(self.perm.iter().map(|&old| b[old]));
        let y = work;
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let mut s = y[i];
            for (k, l) in (fi..i).zip(row) {
                s -= l * y[k];
            }
            y[i] = s / row[i - fi].re;
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let xi = y[i] / row[i - fi].re;
            y[i] = xi;
            for (k, l) in (fi..i).zip(row) {
                y[k] -= l.conj() * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::ComplexMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_small_hermitian_system() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(4.0, 0.0), c(1.0, 1.0), c(0.0, 0.0), c(0.5, -0.5)],
            vec![c(1.0, -1.0), c(5.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, 0.0), c(6.0, 0.0), c(0.0, 1.0)],
            vec![c(0.5, 0.5), c(0.0, 0.0), c(0.0, -1.0), c(3.0, 0.0)],
        ])
        .unwrap();
        let a = HermitianMatrix::new(m).unwrap();
        let f = EnvelopeCholesky::new(&a, 0.5).unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0), c(0.3, 0.0)];
        let mut x = vec![ZERO; 4];
        f.solve_into(&b, &mut x, &mut Vec::new());
        let mut ax = a.apply(&x).unwrap().into_inner();
        for (y, xi) in ax.iter_mut().zip(&x) {
            *y += xi * 0.5;
        }
        for (y, bi) in ax.iter().zip(&b) {
            assert!((y - bi).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = HermitianMatrix::diagonal(&[1.0, -1.0, 2.0]).unwrap();
        assert!(EnvelopeCholesky::new(&a, 0.0).is_err());
    }

    #[test]
    fn cyclic_band_envelope_is_linear() {
        let n = 200;
        let a = HermitianMatrix::from_upper(n, |i, j| {
            let gap = j - i;
            if i == j {
                c(8.0, 0.0)
            } else if gap < 3 || gap > n - 3 {
                c(-1.0, 0.0)
            } else {
                ZERO
            }
        })
        .unwrap();
        let f = EnvelopeCholesky::new(&a, 0.0).unwrap();
        assert!(f.envelope_size() < 12 * n, "envelope {}", f.envelope_size());
    }
}
