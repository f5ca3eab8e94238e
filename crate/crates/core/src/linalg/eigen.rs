//! Extremal eigenpairs of Hermitian matrices.
//!
//! The solver is a thick-restart Rayleigh-Ritz iteration on a Krylov basis
//! (mathematically the restarted Lanczos method): every step adds the
//! current Ritz residual to an orthonormal basis, solves the small projected
//! eigenproblem and, once the basis is full, restarts from the best Ritz
//! vectors. Orthogonality is kept by full reorthogonalization, which also
//! handles deflation against known eigenvectors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::factor::EnvelopeCholesky;
use super::matrix::HermitianMatrix;
use super::vector::{axpy_neg, dot, norm, ComplexVector};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// An eigenvalue with a unit-norm eigenvector.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: ComplexVector,
    /// `||A v - value v||_2` measured on return.
    pub residual: f64,
    /// Matrix-vector products spent.
    pub iterations: usize,
}

/// Knobs for the iterative eigensolver.
#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Residual tolerance relative to the spectral scale of the matrix.
    pub tol: f64,
    /// Cap on matrix-vector products, as a multiple of the dimension.
    pub max_iters_per_dim: usize,
    /// Largest Krylov basis kept before a restart.
    pub max_basis: usize,
    /// Ritz vectors retained across a restart.
    pub keep: usize,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters_per_dim: 100, max_basis: 40, keep: 12, seed: 0x5eed_0fe1 }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum End {
    Lowest,
    Highest,
}

struct Ritz {
    values: Vec<f64>,
    /// column-major coefficients, one column per Ritz value, ordered toward the target end
    vectors: DMatrix<Complex64>,
}

fn projected_eigen(h: &[Vec<Complex64>], end: End) -> Ritz {
    let m = h.len();
    let mat = DMatrix::from_fn(m, m, |i, j| if i <= j { h[i][j] } else { h[j][i].conj() });
    let eig = mat.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if end == End::Highest {
        order.reverse();
    }
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);
    Ritz { values, vectors }
}

/// Orthogonalizes `w` against `deflate` and `basis` (two Gram-Schmidt passes).
/// Returns the remaining norm.
fn orthogonalize(w: &mut [Complex64], deflate: &[Vec<Complex64>], basis: &[Vec<Complex64>]) -> f64 {
    for _ in 0..2 {
        for q in deflate.iter().chain(basis) {
            let c = dot(q, w);
            axpy_neg(c, q, w);
        }
    }
    norm(w)
}

fn combine(basis: &[Vec<Complex64>], coeffs: &DMatrix<Complex64>, col: usize, out: &mut [Complex64]) {
    out.fill(ZERO);
    for (k, b) in basis.iter().enumerate() {
        let c = coeffs[(k, col)];
        for (o, x) in out.iter_mut().zip(b) {
            *o += c * x;
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

/// Ritz vector (not normalized) for the extremal eigenvalue of the operator
/// `op` on `C^n`, and the number of operator applications spent.
fn extremal(
    n: usize,
    op: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    end: End,
    deflate: &[Vec<Complex64>],
    scale_hint: f64,
    upper_check: Option<f64>,
    opts: &EigenOptions,
) -> Result<(Vec<Complex64>, usize)> {
    let free_dim = n.saturating_sub(deflate.len());
    if free_dim == 0 {
        return Err(Error::InvalidArgument("deflation leaves no subspace to search".into()));
    }
    let max_basis = opts.max_basis.max(2).min(free_dim);
    let keep = opts.keep.clamp(1, max_basis.saturating_sub(1).max(1));
    let max_matvecs = opts.max_iters_per_dim.max(1) * n;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_basis);
    let mut images: Vec<Vec<Complex64>> = Vec::with_capacity(max_basis);
    // upper triangle of the projected matrix, h[i][j] = <v_i, A v_j> for i <= j
    let mut h: Vec<Vec<Complex64>> = Vec::with_capacity(max_basis);
    let mut matvecs = 0usize;

    let mut push = |w: Vec<Complex64>,
                    basis: &mut Vec<Vec<Complex64>>,
                    images: &mut Vec<Vec<Complex64>>,
                    h: &mut Vec<Vec<Complex64>>,
                    matvecs: &mut usize| {
        let mut aw = vec![ZERO; n];
        op(&w, &mut aw);
        *matvecs += 1;
        let m = basis.len();
        for (i, b) in basis.iter().enumerate() {
            let hij = dot(b, &aw);
            h[i].push(hij);
        }
        let hjj = dot(&w, &aw).re;
        let mut row = vec![ZERO; m];
        row.push(Complex64::new(hjj, 0.0));
        h.push(row);
        basis.push(w);
        images.push(aw);
    };

    let start = loop {
        let mut v = random_vector(&mut rng, n);
        let nv = orthogonalize(&mut v, deflate, &[]);
        if nv > 1e-8 {
            v.iter_mut().for_each(|z| *z /= nv);
            break v;
        }
    };
    push(start, &mut basis, &mut images, &mut h, &mut matvecs);

    let mut u = vec![ZERO; n];
    let mut au = vec![ZERO; n];
    let mut r = vec![ZERO; n];
    loop {
        let ritz = projected_eigen(&h, end);
        let theta = ritz.values[0];
        combine(&basis, &ritz.vectors, 0, &mut u);
        combine(&images, &ritz.vectors, 0, &mut au);
        for i in 0..n {
            r[i] = au[i] - u[i] * theta;
        }
        let res = norm(&r);
        let ritz_scale = ritz.values.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let scale = scale_hint.abs().max(ritz_scale);
        if let Some(upper) = upper_check {
            let top = ritz.values.iter().fold(f64::NEG_INFINITY, |s, &v| s.max(v));
            if top > upper + 1e-8 * scale.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "known upper bound {upper} is below a Ritz value {top}"
                )));
            }
        }
        let exhausted = basis.len() == free_dim;
        if res <= opts.tol * scale || (exhausted && res <= 1e-8 * scale.max(1.0)) {
            return Ok((u, matvecs));
        }
        if matvecs >= max_matvecs || exhausted {
            return Err(Error::NoConvergence { iterations: matvecs, residual: res });
        }

        if basis.len() == max_basis {
            // thick restart on the `keep` best Ritz vectors
            let mut new_basis = Vec::with_capacity(max_basis);
            let mut new_images = Vec::with_capacity(max_basis);
            for col in 0..keep {
                let mut b = vec![ZERO; n];
                let mut ab = vec![ZERO; n];
                combine(&basis, &ritz.vectors, col, &mut b);
                combine(&images, &ritz.vectors, col, &mut ab);
                new_basis.push(b);
                new_images.push(ab);
            }
            basis = new_basis;
            images = new_images;
            h = (0..keep)
                .map(|i| {
                    let mut row = vec![ZERO; i];
                    row.push(Complex64::new(ritz.values[i], 0.0));
                    row.extend((i + 1..keep).map(|j| dot(&basis[i], &images[j])));
                    row
                })
                .collect();
        }

        let mut w = r.clone();
        let before = norm(&w);
        let after = orthogonalize(&mut w, deflate, &basis);
        if after.is_nan() || after <= 1e-10 * before.max(f64::MIN_POSITIVE) {
            // residual collapsed numerically; continue from a fresh direction
            w = random_vector(&mut rng, n);
            let nw = orthogonalize(&mut w, deflate, &basis);
            if nw <= 1e-10 {
                return Ok((u, matvecs));
            }
            w.iter_mut().for_each(|z| *z /= nw);
        } else {
            w.iter_mut().for_each(|z| *z /= after);
        }
        push(w, &mut basis, &mut images, &mut h, &mut matvecs);
    }
}

fn finish(a: &HermitianMatrix, mut u: Vec<Complex64>, matvecs: usize) -> Result<EigenPair> {
    let nu = norm(&u);
    u.iter_mut().for_each(|z| *z /= nu);
    let mut au = vec![ZERO; u.len()];
    a.apply_into(&u, &mut au);
    let value = dot(&u, &au).re;
    let residual = norm(&au.iter().zip(&u).map(|(x, y)| x - y * value).collect::<Vec<_>>());
    Ok(EigenPair { value, vector: ComplexVector::new(u)?, residual, iterations: matvecs + 1 })
}

/// Smallest eigenvalue of `a` with a unit eigenvector.
///
/// `known_upper` must bound the largest eigenvalue from above (for a graph
/// Laplacian, twice the largest degree). It fixes the spectral scale the
/// residual tolerance is measured against.
pub fn smallest_eigenpair(a: &HermitianMatrix, known_upper: f64) -> Result<EigenPair> {
    smallest_eigenpair_with(a, known_upper, &EigenOptions::default())
}

pub fn smallest_eigenpair_with(a: &HermitianMatrix, known_upper: f64, opts: &EigenOptions) -> Result<EigenPair> {
    if !known_upper.is_finite() {
        return Err(Error::InvalidArgument("known upper bound must be finite".into()));
    }
    if let Some(top) = a.diag().into_iter().reduce(f64::max) {
        if top > known_upper * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::InvalidArgument(format!("known upper bound {known_upper} is below a diagonal entry {top}")));
        }
    }
    if let Some(pair) = lowest_shift_invert(a, &[], known_upper, opts) {
        return Ok(pair);
    }
    lowest_krylov(a, &[], known_upper, Some(known_upper), opts)
}

fn lowest_krylov(
    a: &HermitianMatrix,
    deflate: &[Vec<Complex64>],
    scale_hint: f64,
    upper_check: Option<f64>,
    opts: &EigenOptions,
) -> Result<EigenPair> {
    let (u, matvecs) = extremal(a.dim(), &mut |x, y| a.apply_into(x, y), End::Lowest, deflate, scale_hint, upper_check, opts)?;
    finish(a, u, matvecs)
}

/// Fraction of the spectral scale added to the diagonal before factoring.
const SHIFT_FRACTION: f64 = 1e-7;

/// Lowest eigenpair by the Krylov iteration on `(a + sigma I)^{-1}`, whose
/// largest eigenvalues are well separated when `a` has a small gap. Returns
/// `None` when `a + sigma I` is not positive definite or the result misses
/// the residual target, leaving the caller to fall back on plain iteration.
fn lowest_shift_invert(a: &HermitianMatrix, deflate: &[Vec<Complex64>], scale: f64, opts: &EigenOptions) -> Option<EigenPair> {
    let scale = scale.abs().max(f64::MIN_POSITIVE);
    let factor = EnvelopeCholesky::new(a, SHIFT_FRACTION * scale).ok()?;
    let mut work = Vec::with_capacity(a.dim());
    // the inverse blows up whatever null-space component survives rounding by
    // 1/sigma, so project it out of every image as well
    let mut op = |x: &[Complex64], y: &mut [Complex64]| {
        factor.solve_into(x, y, &mut work);
        for q in deflate {
            let c = dot(q, y);
            y.iter_mut().zip(q).for_each(|(yi, qi)| *yi -= qi * c);
        }
    };
    let (u, solves) = extremal(a.dim(), &mut op, End::Highest, deflate, 0.0, None, opts).ok()?;
    let pair = finish(a, u, solves).ok()?;
    (pair.residual <= 1e-8 * scale.max(1.0)).then_some(pair)
}

/// Largest eigenvalue of `a` with a unit eigenvector.
pub fn leading_eigenpair(a: &HermitianMatrix) -> Result<EigenPair> {
    leading_eigenpair_with(a, &EigenOptions::default())
}

pub fn leading_eigenpair_with(a: &HermitianMatrix, opts: &EigenOptions) -> Result<EigenPair> {
    let (u, matvecs) = extremal(a.dim(), &mut |x, y| a.apply_into(x, y), End::Highest, &[], 0.0, None, opts)?;
    finish(a, u, matvecs)
}

/// Second-smallest eigenvalue of a positive semidefinite `a`, given a vector
/// spanning (part of) its null space. The search runs on the orthogonal
/// complement of `null_vector`.
pub fn second_smallest_eigenvalue(a: &HermitianMatrix, null_vector: &ComplexVector) -> Result<f64> {
    second_smallest_eigenvalue_with(a, null_vector, &EigenOptions::default())
}

pub fn second_smallest_eigenvalue_with(
    a: &HermitianMatrix,
    null_vector: &ComplexVector,
    opts: &EigenOptions,
) -> Result<f64> {
    if null_vector.len() != a.dim() {
        return Err(Error::Dimension(format!(
            "null vector of length {} for a {}x{} matrix",
            null_vector.len(),
            a.dim(),
            a.dim()
        )));
    }
    let nv = null_vector.norm2();
    if nv == 0.0 {
        return Err(Error::InvalidArgument("null vector is zero".into()));
    }
    let scale = a.max_row_sum();
    let residual = a.apply(null_vector)?.norm2() / nv;
    if residual > 1e-8 * scale.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "supplied vector is not in the null space (residual {residual:.3e})"
        )));
    }
    if a.dim() == 1 {
        return Err(Error::InvalidArgument("a 1x1 matrix has no second eigenvalue".into()));
    }
    let q: Vec<Complex64> = null_vector.iter().map(|z| z / nv).collect();
    let deflate = [q];
    if let Some(pair) = lowest_shift_invert(a, &deflate, scale, opts) {
        return Ok(pair.value);
    }
    Ok(lowest_krylov(a, &deflate, scale, None, opts)?.value)
}

/// Spectral norm `max |lambda|` of a Hermitian matrix.
pub fn spectral_norm(a: &HermitianMatrix) -> Result<f64> {
    if a.nnz() == 0 {
        return Ok(0.0);
    }
    let top = leading_eigenpair(a)?.value;
    let bottom = lowest_krylov(a, &[], top.abs(), None, &EigenOptions::default())?.value;
    Ok(top.abs().max(bottom.abs()))
}
