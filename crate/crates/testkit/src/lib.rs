//! Brute-force reference computations for the phasesync test suites.
//!
//! Everything here is deliberately naive and shares no code with the
//! library: dense cyclic Jacobi for eigenproblems, exhaustive grids for the
//! gauge-aligned distance and for the torus least-squares problem.

use num_complex::Complex64;

pub type Dense = Vec<Vec<Complex64>>;

/// Cyclic Jacobi eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors
/// (as rows of the returned vector).
pub fn real_symmetric_jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let akp = row[p];
                    let akq = row[q];
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                for (apk, aqk) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (x, y) = (*apk, *aqk);
                    *apk = c * x - s * y;
                    *aqk = s * x + c * y;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Eigendecomposition of a complex Hermitian matrix through its real
/// symmetric embedding `[[Re, -Im], [Im, Re]]`.
///
/// Every eigenvalue of the embedding appears twice; one representative per
/// pair is returned. Eigenvectors are unit-norm; for repeated eigenvalues
/// the returned vectors are not guaranteed to be linearly independent.
pub fn hermitian_eigh(a: &Dense) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = a.len();
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = a[i][j];
            big[i][j] = z.re;
            big[i + n][j + n] = z.re;
            big[i][j + n] = -z.im;
            big[i + n][j] = z.im;
        }
    }
    let (vals, vecs) = real_symmetric_jacobi(big);
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in (0..2 * n).step_by(2) {
        values.push(0.5 * (vals[k] + vals[k + 1]));
        let w = &vecs[k];
        let mut c: Vec<Complex64> = (0..n).map(|i| Complex64::new(w[i], w[i + n])).collect();
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in c.iter_mut() {
            *z /= norm;
        }
        vectors.push(c);
    }
    (values, vectors)
}

pub fn eigenvalues(a: &Dense) -> Vec<f64> {
    hermitian_eigh(a).0
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm(a: &Dense) -> f64 {
    eigenvalues(a).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn matvec(a: &Dense, x: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn quadratic_form(a: &Dense, x: &[Complex64]) -> f64 {
    let ax = matvec(a, x);
    x.iter().zip(&ax).map(|(u, v)| (u.conj() * v).re).sum()
}

/// `min_theta ||a - e^{i theta} b||_2` by scanning theta on a uniform grid.
pub fn grid_phase_distance(a: &[Complex64], b: &[Complex64], step_deg: f64) -> f64 {
    let steps = (360.0 / step_deg).round() as usize;
    (0..steps)
        .map(|k| {
            let theta = (k as f64 * step_deg).to_radians();
            let rot = Complex64::from_polar(1.0, theta);
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - rot * y).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exhaustive minimum of `u* L u` over the torus, fixing `u_0 = 1` and
/// scanning every other phase on a grid of `step_deg` degrees.
///
/// Cost is `(360/step)^(d-1)` quadratic forms; intended for `d <= 4`.
pub fn grid_torus_minimum(l: &Dense, step_deg: f64) -> (f64, Vec<Complex64>) {
    let d = l.len();
    let steps = (360.0 / step_deg).round() as usize;
    let phases: Vec<Complex64> = (0..steps)
        .map(|k| Complex64::from_polar(1.0, (k as f64 * step_deg).to_radians()))
        .collect();
    let mut idx = vec![0usize; d.saturating_sub(1)];
    let mut u = vec![Complex64::new(1.0, 0.0); d];
    let mut best = (f64::INFINITY, u.clone());
    loop {
        for (k, &i) in idx.iter().enumerate() {
            u[k + 1] = phases[i];
        }
        let f = quadratic_form(l, &u);
        if f < best.0 {
            best = (f, u.clone());
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < steps {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Lower bound on `min tr(L Z)` over unit-diagonal PSD `Z`, from the dual
/// point `y_i = Re (L Z)_ii` shifted into feasibility.
pub fn sdp_dual_lower_bound(l: &Dense, z: &Dense) -> f64 {
    let d = l.len();
    let y: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|k| l[i][k] * z[k][i]).sum::<Complex64>().re)
        .collect();
    let mut slack = l.clone();
    for i in 0..d {
        slack[i][i] -= y[i];
    }
    let shift = eigenvalues(&slack)[0];
    y.iter().sum::<f64>() + d as f64 * shift
}
