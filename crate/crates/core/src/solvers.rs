//! Estimators for the phase vector: eigenvector relaxation, torus least
//! squares by the generalized power method, and the semidefinite relaxation
//! solved through a low-rank (Burer-Monteiro) factorization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{data_laplacian, spectral_gap, WeightedGraph};
use crate::linalg::{
    dot, sgn, smallest_eigenpair, spectral_norm, ComplexMatrix, ComplexVector, HermitianMatrix,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Output of the vector-valued estimators.
#[derive(Debug, Clone)]
pub struct SolverResult {
    /// Raw estimate (`||z||_2^2 = d` for the relaxations, unimodular for the torus solver).
    pub z: ComplexVector,
    /// `sgn(z)`, rotated so its first nonzero entry is real and positive.
    pub x_round: ComplexVector,
    /// Value of the quadratic objective at `z`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `||z||_inf`
    pub sup_norm_z: f64,
    /// `sqrt(2 + 2 ||z||_inf^2)`
    pub c_z: f64,
    /// Objective after every iteration (torus solver only).
    pub objective_trace: Vec<f64>,
}

impl SolverResult {
    fn from_estimate(z: ComplexVector, objective: f64, iterations: usize, converged: bool) -> Self {
        let rot = z.iter().find(|w| w.norm() > 0.0).map_or(Complex64::new(1.0, 0.0), |&w| sgn(w).conj());
        let z = z.scaled(rot);
        let x_round = z.sgn();
        let sup_norm_z = z.norm_inf();
        Self {
            z,
            x_round,
            objective,
            iterations,
            converged,
            sup_norm_z,
            c_z: (2.0 + 2.0 * sup_norm_z * sup_norm_z).sqrt(),
            objective_trace: Vec::new(),
        }
    }
}

fn gershgorin_shift(g: &WeightedGraph) -> f64 {
    2.0 * g.max_degree()
}

/// Eigenvector relaxation: `z = sqrt(d) v` for the unit eigenvector `v` of
/// the smallest eigenvalue of `Lhat = D - W o Xhat`.
pub fn solve_er(g: &WeightedGraph, xhat: &ComplexMatrix) -> Result<SolverResult> {
    let l_hat = data_laplacian(g, xhat)?;
    solve_er_laplacian(&l_hat, gershgorin_shift(g))
}

fn solve_er_laplacian(l_hat: &HermitianMatrix, upper: f64) -> Result<SolverResult> {
    let d = l_hat.dim() as f64;
    let pair = smallest_eigenpair(l_hat, upper)?;
    let z = pair.vector.scaled(Complex64::new(d.sqrt(), 0.0));
    let objective = l_hat.quadratic_form(&z)?;
    Ok(SolverResult::from_estimate(z, objective, pair.iterations, true))
}

/// Eigenvector relaxation of the degree-normalized problem
/// `min z* D^{-1/2} Lhat D^{-1/2} z` subject to `||z||_2^2 = d`.
pub fn solve_er_normalized(g: &WeightedGraph, xhat: &ComplexMatrix) -> Result<SolverResult> {
    let deg = g.degrees();
    if let Some(vertex) = deg.iter().position(|&x| x <= 0.0) {
        return Err(Error::DegenerateGraph { vertex });
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|x| 1.0 / x.sqrt()).collect();
    let normalized = data_laplacian(g, xhat)?.congruence_diag(&inv_sqrt)?;
    solve_er_laplacian(&normalized, 2.0)
}

/// Stopping rule for the generalized power method.
#[derive(Debug, Clone, Copy)]
pub struct GpmOptions {
    pub max_iters: usize,
    /// Stop once an iteration lowers the objective by less than this fraction.
    pub rel_tol: f64,
}

impl Default for GpmOptions {
    fn default() -> Self {
        Self { max_iters: 10_000, rel_tol: 1e-12 }
    }
}

/// Torus least squares `min_{|z_l| = 1} z* Lhat z` by the generalized power
/// method `u <- sgn((mu I - Lhat) u)` with `mu = 2 max deg >= lambda_max(Lhat)`.
///
/// Starts from `init` or, by default, from the rounded eigenvector
/// relaxation. The returned objective never exceeds the starting one.
pub fn solve_lsp(g: &WeightedGraph, xhat: &ComplexMatrix, init: Option<&ComplexVector>) -> Result<SolverResult> {
    solve_lsp_with(g, xhat, init, &GpmOptions::default())
}

pub fn solve_lsp_with(
    g: &WeightedGraph,
    xhat: &ComplexMatrix,
    init: Option<&ComplexVector>,
    opts: &GpmOptions,
) -> Result<SolverResult> {
    let l_hat = data_laplacian(g, xhat)?;
    let d = l_hat.dim();
    let mu = gershgorin_shift(g);
    let u: Vec<Complex64> = match init {
        Some(v) if v.len() != d => {
            return Err(Error::Dimension(format!("initial point of length {} for d = {d}", v.len())))
        }
        Some(v) => v.iter().map(|&w| if w.norm() > 0.0 { sgn(w) } else { Complex64::new(1.0, 0.0) }).collect(),
        None => solve_er_laplacian(&l_hat, mu)?.x_round.into_inner(),
    };

    let run = power_method(&l_hat, mu, u, opts);
    let mut result = SolverResult::from_estimate(ComplexVector::new(run.point)?, run.objective, run.iterations, run.converged);
    result.objective_trace = run.trace;
    Ok(result)
}

struct PowerRun {
    point: Vec<Complex64>,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn power_method(l_hat: &HermitianMatrix, mu: f64, mut u: Vec<Complex64>, opts: &GpmOptions) -> PowerRun {
    let d = l_hat.dim();
    let mut lu = vec![ZERO; d];
    l_hat.apply_into(&u, &mut lu);
    let mut f = dot(&u, &lu).re;
    let mut trace = vec![f];
    let floor = f64::EPSILON * mu * d as f64;
    let mut converged = false;
    let mut iterations = 0;
    let mut next = vec![ZERO; d];
    let mut l_next = vec![ZERO; d];
    while iterations < opts.max_iters {
        iterations += 1;
        for i in 0..d {
            let w = u[i] * mu - lu[i];
            next[i] = if w.norm() > 0.0 { sgn(w) } else { u[i] };
        }
        l_hat.apply_into(&next, &mut l_next);
        let f_next = dot(&next, &l_next).re;
        let decrease = f - f_next;
        if decrease < 0.0 {
            // ascent can only come from rounding; keep the better iterate
            converged = true;
            break;
        }
        std::mem::swap(&mut u, &mut next);
        std::mem::swap(&mut lu, &mut l_next);
        f = f_next;
        trace.push(f);
        if decrease <= opts.rel_tol * f.max(floor) {
            converged = true;
            break;
        }
    }
    PowerRun { point: u, objective: f, iterations, converged, trace }
}

/// Output of the semidefinite relaxation.
#[derive(Debug, Clone)]
pub struct SdpResult {
    /// `Z = V V*`, unit diagonal and positive semidefinite.
    pub z: HermitianMatrix,
    /// The low-rank factor `V`, `d x p`.
    pub factor: ComplexMatrix,
    /// `sgn` of the leading eigenvector of `Z`, canonical gauge.
    pub x_round: ComplexVector,
    /// `tr(Lhat Z)`
    pub objective: f64,
    /// Eigenvalues of `Z` above `1e-6 lambda_max(Z)`.
    pub numerical_rank: usize,
    /// Nonzero spectrum of `Z`, descending.
    pub spectrum: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Frobenius norm of the Riemannian gradient at return.
    pub gradient_norm: f64,
    /// Smallest eigenvalue of the dual slack `Lhat - Diag(Re diag(Lhat Z))`.
    /// Nonnegative (up to rounding) iff `Z` is a global minimizer.
    pub dual_min_eigenvalue: f64,
    /// Lower bound on the optimal value from the dual slack.
    pub dual_bound: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Factorization rank; `None` selects `ceil(sqrt(2d)) + 1`.
    pub rank: Option<usize>,
    /// First-order tolerance on the Riemannian gradient, relative to `mu sqrt(d)`.
    pub tol: f64,
    pub max_iters: usize,
    /// Relative eigenvalue cutoff for the numerical rank.
    pub rank_tol: f64,
    /// Negative curvature of the dual slack, relative to `mu`, below which the
    /// factor is grown by a column and the descent restarted.
    pub dual_tol: f64,
    pub seed: u64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { rank: None, tol: 1e-9, max_iters: 50_000, rank_tol: 1e-6, dual_tol: 1e-8, seed: 0x5d9 }
    }
}

pub fn default_sdp_rank(d: usize) -> usize {
    (((2 * d) as f64).sqrt().ceil() as usize + 1).min(d)
}

/// Semidefinite relaxation `min tr(Lhat Z)` over `Z >= 0` with unit
/// diagonal, rounded through the leading eigenvector of `Z`.
pub fn solve_sdp(g: &WeightedGraph, xhat: &ComplexMatrix) -> Result<SdpResult> {
    solve_sdp_with(g, xhat, &SdpOptions::default())
}

/// Row-normalized factor, Riemannian gradient descent with Barzilai-Borwein
/// trial steps and nonmonotone Armijo backtracking.
pub fn solve_sdp_with(g: &WeightedGraph, xhat: &ComplexMatrix, opts: &SdpOptions) -> Result<SdpResult> {
    let l_hat = data_laplacian(g, xhat)?;
    let d = l_hat.dim();
    let mut p = opts.rank.unwrap_or_else(|| default_sdp_rank(d)).clamp(1, d);
    let mu = gershgorin_shift(g).max(f64::MIN_POSITIVE);
    let gtol = opts.tol * mu * (d as f64).sqrt();

    // warm start: rounded eigenvector relaxation in the first column plus a
    // random perturbation spread over all columns
    let er = solve_er_laplacian(&l_hat, mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ d as u64);
    let mut v = vec![ZERO; d * p];
    for i in 0..d {
        for k in 0..p {
            let noise = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * 0.1;
            v[i * p + k] = noise + if k == 0 { er.x_round[i] } else { ZERO };
        }
    }
    normalize_rows(&mut v, p);

    let mut iterations = 0;
    let mut escapes = 0;
    let (f, gnorm, converged, dual_min_eigenvalue, dual_bound) = loop {
        let budget = opts.max_iters.saturating_sub(iterations);
        let run = descend(&l_hat, &mut v, p, mu, gtol, budget);
        iterations += run.iterations;
        let (lambda, s) = dual_slack(&l_hat, &v, p)?;
        let pair = smallest_eigenpair(&s, s.gershgorin_upper().max(0.0))?;
        let bound = lambda.iter().sum::<f64>() + d as f64 * pair.value.min(0.0);
        let escape = pair.value < -opts.dual_tol * mu && p < d && escapes < MAX_ESCAPES && iterations < opts.max_iters;
        if !escape {
            break (run.objective, run.gradient_norm, run.converged, pair.value, bound);
        }
        // saddle point of the factored problem: open a new column along the
        // negative curvature direction of the dual slack
        escapes += 1;
        let q = p + 1;
        let step = 0.3 * (d as f64).sqrt();
        let mut grown = vec![ZERO; d * q];
        for i in 0..d {
            grown[i * q..i * q + p].copy_from_slice(&v[i * p..(i + 1) * p]);
            grown[i * q + p] = pair.vector[i] * step;
        }
        normalize_rows(&mut grown, q);
        v = grown;
        p = q;
    };

    let factor = ComplexMatrix::from_fn(d, p, |i, k| v[i * p + k]);
    let (spectrum, lead) = factor_spectrum(&factor);

    // On badly conditioned instances the first-order iterate stalls well
    // before the rounding is accurate. A rank-one point whose dual slack is
    // positive semidefinite is a global minimizer, so polish the two
    // available roundings on the torus and keep a certified one.
    let floor = f64::EPSILON * mu * d as f64;
    let mut polished: Option<(Vec<Complex64>, f64, f64, f64)> = None;
    for start in [lead.sgn().into_inner(), er.x_round.clone().into_inner()] {
        let run = power_method(&l_hat, mu, start, &GpmOptions::default());
        let best = polished.as_ref().map_or(f + 16.0 * floor, |c| c.1);
        if run.objective > best {
            continue;
        }
        let (lambda, s) = dual_slack(&l_hat, &run.point, 1)?;
        let pair = smallest_eigenpair(&s, s.gershgorin_upper().max(0.0))?;
        if pair.value >= -opts.dual_tol * mu {
            let bound = lambda.iter().sum::<f64>() + d as f64 * pair.value.min(0.0);
            polished = Some((run.point, run.objective, pair.value, bound));
        }
    }
    if let Some((x, objective, min_eig, bound)) = polished {
        let factor = ComplexMatrix::from_fn(d, 1, |i, _| x[i]);
        let mut lx = vec![ZERO; d];
        l_hat.apply_into(&x, &mut lx);
        let mut grad = vec![ZERO; d];
        riemannian_gradient(&x, &lx, 1, &mut grad);
        let z = HermitianMatrix::from_upper(d, |i, j| x[i] * x[j].conj())?;
        return Ok(SdpResult {
            z,
            factor,
            x_round: ComplexVector::new(x)?.canonical_gauge(),
            objective,
            numerical_rank: 1,
            spectrum: vec![d as f64],
            iterations,
            converged: true,
            gradient_norm: norm(&grad),
            dual_min_eigenvalue: min_eig,
            dual_bound: bound,
        });
    }

    let top = spectrum[0];
    let numerical_rank = spectrum.iter().filter(|&&s| s > opts.rank_tol * top).count();
    let x_round = lead.sgn().canonical_gauge();
    let z = HermitianMatrix::from_upper(d, |i, j| dot(factor.row(j), factor.row(i)))?;
    Ok(SdpResult { z, factor, x_round, objective: f, numerical_rank, spectrum, iterations, converged, gradient_norm: gnorm, dual_min_eigenvalue, dual_bound })
}

const MAX_ESCAPES: usize = 8;

struct Descent {
    objective: f64,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
}

/// Riemannian gradient descent on the row-normalized factor `v` (`d x p`,
/// row major), in place.
fn descend(l_hat: &HermitianMatrix, v: &mut Vec<Complex64>, p: usize, mu: f64, gtol: f64, max_iters: usize) -> Descent {
    let d = l_hat.dim();
    let mut lv = vec![ZERO; d * p];
    l_hat.apply_block_into(v, p, &mut lv);
    let mut f = objective(v, &lv);
    let mut grad = vec![ZERO; d * p];
    riemannian_gradient(v, &lv, p, &mut grad);
    let mut gnorm = norm(&grad);

    const MEMORY: usize = 10;
    let mut recent = vec![f; 1];
    let mut step = 1.0 / (2.0 * mu);
    let mut trial = vec![ZERO; d * p];
    let mut l_trial = vec![ZERO; d * p];
    let mut g_trial = vec![ZERO; d * p];
    let mut iterations = 0;
    let mut converged = gnorm <= gtol;
    let mut stalled = 0;
    while !converged && iterations < max_iters {
        iterations += 1;
        let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let g2 = gnorm * gnorm;
        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            for ((x, y), gr) in trial.iter_mut().zip(v.iter()).zip(&grad) {
                *x = y - gr * t;
            }
            normalize_rows(&mut trial, p);
            l_hat.apply_block_into(&trial, p, &mut l_trial);
            let f_trial = objective(&trial, &l_trial);
            if f_trial <= reference - 1e-4 * t * g2 {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        riemannian_gradient(&trial, &l_trial, p, &mut g_trial);
        // Barzilai-Borwein step from the ambient differences
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..d * p {
            let s = trial[i] - v[i];
            let y = g_trial[i] - grad[i];
            ss += s.norm_sqr();
            sy += (s.conj() * y).re;
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-6 / mu, 1e6 / mu) } else { 1.0 / mu };

        let f_new = objective(&trial, &l_trial);
        if (f - f_new).abs() <= 1e-15 * (1.0 + f.abs()) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        std::mem::swap(v, &mut trial);
        std::mem::swap(&mut lv, &mut l_trial);
        std::mem::swap(&mut grad, &mut g_trial);
        f = f_new;
        gnorm = norm(&grad);
        recent.push(f);
        if recent.len() > MEMORY {
            recent.remove(0);
        }
        converged = gnorm <= gtol;
        if stalled >= 50 {
            break;
        }
    }

    Descent { objective: f, gradient_norm: gnorm, iterations, converged }
}

/// Multipliers `lambda_i = Re (Lhat Z)_ii` and the slack `Lhat - Diag(lambda)`
/// at `Z = V V*`.
fn dual_slack(l_hat: &HermitianMatrix, v: &[Complex64], p: usize) -> Result<(Vec<f64>, HermitianMatrix)> {
    let d = l_hat.dim();
    let mut lv = vec![ZERO; d * p];
    l_hat.apply_block_into(v, p, &mut lv);
    let lambda: Vec<f64> = v.chunks(p).zip(lv.chunks(p)).map(|(a, b)| objective(a, b)).collect();
    let entries = (0..d).flat_map(|i| {
        l_hat.row_indices(i).iter().zip(l_hat.row_values(i)).filter(move |(&j, _)| j >= i).map(move |(&j, &w)| (i, j, w))
    });
    let diag = lambda.iter().enumerate().map(|(i, &l)| (i, i, Complex64::new(-l, 0.0)));
    let s = HermitianMatrix::from_upper_entries(d, entries.chain(diag))?;
    Ok((lambda, s))
}

/// Nonzero eigenvalues of `V V*` (descending) and the leading eigenvector,
/// obtained from the small Gram matrix `V* V`.
fn factor_spectrum(v: &ComplexMatrix) -> (Vec<f64>, ComplexVector) {
    let (d, p) = v.shape();
    let gram = DMatrix::from_fn(p, p, |a, b| (0..d).map(|i| v[(i, a)].conj() * v[(i, b)]).sum::<Complex64>());
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let spectrum: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let s = eig.eigenvectors.column(order[0]);
    let lead: Vec<Complex64> = (0..d).map(|i| (0..p).map(|k| v[(i, k)] * s[k]).sum()).collect();
    let n = lead.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let lead = ComplexVector::new(lead.into_iter().map(|z| z / n).collect()).expect("d >= 1");
    (spectrum, lead)
}

fn normalize_rows(v: &mut [Complex64], p: usize) {
    for row in v.chunks_mut(p) {
        let n = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|z| *z /= n);
        } else {
            row[0] = Complex64::new(1.0, 0.0);
        }
    }
}

fn objective(v: &[Complex64], lv: &[Complex64]) -> f64 {
    v.iter().zip(lv).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Euclidean gradient `2 Lhat V` projected onto the tangent space of the
/// product of unit spheres.
fn riemannian_gradient(v: &[Complex64], lv: &[Complex64], p: usize, out: &mut [Complex64]) {
    for ((vr, lr), or) in v.chunks(p).zip(lv.chunks(p)).zip(out.chunks_mut(p)) {
        let radial: f64 = vr.iter().zip(lr).map(|(a, b)| (a.conj() * b).re).sum();
        for ((o, a), b) in or.iter_mut().zip(vr).zip(lr) {
            *o = (b - a * radial) * 2.0;
        }
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outcome of the sufficient condition for `x x*` to solve the SDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessCertificate {
    pub holds: bool,
    /// `threshold - noise_norm`
    pub margin: f64,
    /// `||W o (Xhat - x x*)||_inf`
    pub noise_norm: f64,
    /// `tau_G / (1 + sqrt(d))`
    pub threshold: f64,
}

/// Checks `||W o (Xhat - x x*)||_inf < tau_G / (1 + sqrt(d))` for a candidate
/// torus point `x`.
pub fn tightness_certificate(g: &WeightedGraph, xhat: &ComplexMatrix, x_cand: &ComplexVector) -> Result<TightnessCertificate> {
    tightness_certificate_with_gap(g, xhat, x_cand, spectral_gap(g)?)
}

pub fn tightness_certificate_with_gap(
    g: &WeightedGraph,
    xhat: &ComplexMatrix,
    x_cand: &ComplexVector,
    tau: f64,
) -> Result<TightnessCertificate> {
    let d = g.dim();
    if x_cand.len() != d || xhat.shape() != (d, d) {
        return Err(Error::Dimension("candidate or measurements do not match the graph".into()));
    }
    if x_cand.iter().any(|z| (z.norm() - 1.0).abs() > 1e-10) {
        return Err(Error::InvalidArgument("candidate must have unit-modulus entries".into()));
    }
    let m = HermitianMatrix::new(ComplexMatrix::from_fn(d, d, |l, j| {
        let w = g.weight(l, j);
        if w > 0.0 {
            (xhat[(l, j)] - x_cand[l] * x_cand[j].conj()) * w
        } else {
            ZERO
        }
    }))?;
    let noise_norm = spectral_norm(&m)?;
    let threshold = tau / (1.0 + (d as f64).sqrt());
    Ok(TightnessCertificate { holds: noise_norm < threshold, margin: threshold - noise_norm, noise_norm, threshold })
}
