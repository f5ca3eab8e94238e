//! Gauge-invariant error metric and the a-priori error bounds for each
//! estimator, plus direct evaluation of the intermediate inequalities the
//! bounds are assembled from.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{laplacians, WeightedGraph};
use crate::linalg::{spectral_norm, ComplexVector, HermitianMatrix};
use crate::solvers::{tightness_certificate_with_gap, SdpResult, SolverResult, TightnessCertificate};
use crate::synth::{MeasurementSet, WeightScheme};

/// `min_theta ||a - e^{i theta} b||_2`, in closed form
/// `sqrt(||a||^2 + ||b||^2 - 2 |b* a|)`.
pub fn phase_distance(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    let mut na = 0.0;
    let mut nb = 0.0;
    let mut cross = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        na += x.norm_sqr();
        nb += y.norm_sqr();
        cross += y.conj() * x;
    }
    Ok((na + nb - 2.0 * cross.norm()).max(0.0).sqrt())
}

/// Which estimator a bound controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Lsp,
    /// `sgn(z)` of the eigenvector relaxation.
    Er,
    /// `sgn` of the degree-normalized eigenvector relaxation.
    ErNormalized,
    /// Every estimator.
    Any,
    /// Not a distance bound.
    Noise,
}

/// The individual right-hand sides reported per instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    /// `19 ||Xhat - X||_F / (tau_N sqrt(min deg))`, Cheeger-based, unweighted only.
    CheegerEr,
    /// `2 ||Xhat - X||_F / sqrt(tau_G)`, unweighted only.
    UnweightedLsp,
    /// `2 sqrt(d ||W o (Xhat - X)||_inf / tau_G)`
    SpectralSqrt,
    /// `4 sqrt(d) ||W o (Xhat - X)||_inf / tau_G`
    SpectralLinear,
    /// `2 ||R o (Xhat - X)||_F / sqrt(tau_G)` with `R = W^{1/2}`.
    WeightedLsp,
    /// `c_z` times [`Bound::WeightedLsp`].
    WeightedEr,
    /// `2 c_z ||Xhat - X||_F / sqrt(tau_G)`, unweighted only.
    UnweightedEr,
    /// `2 sqrt(2) sqrt(||Yhat - Y||_F ||Xhat - X||_F) / sqrt(tau_G)`, amplitude weights.
    AmplitudeLsp,
    AmplitudeEr,
    /// `4 ||Yhat - Y||_F / sqrt(tau_G)`, squared amplitude weights.
    SquaredLsp,
    SquaredEr,
    /// `2 sqrt(d)`, the diameter of the torus.
    Naive,
    /// `sqrt(||W o (Xhat - X)||_F ||Xhat - X||_F)`, an upper estimate of `||R o (Xhat - X)||_F`.
    RemarkRhs,
}

impl Bound {
    pub const ALL: [Bound; 13] = [
        Bound::CheegerEr,
        Bound::UnweightedLsp,
        Bound::SpectralSqrt,
        Bound::SpectralLinear,
        Bound::WeightedLsp,
        Bound::WeightedEr,
        Bound::UnweightedEr,
        Bound::AmplitudeLsp,
        Bound::AmplitudeEr,
        Bound::SquaredLsp,
        Bound::SquaredEr,
        Bound::Naive,
        Bound::RemarkRhs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Bound::CheegerEr => "cheeger_er",
            Bound::UnweightedLsp => "unweighted_lsp",
            Bound::SpectralSqrt => "spectral_sqrt",
            Bound::SpectralLinear => "spectral_linear",
            Bound::WeightedLsp => "weighted_lsp",
            Bound::WeightedEr => "weighted_er",
            Bound::UnweightedEr => "unweighted_er",
            Bound::AmplitudeLsp => "amplitude_lsp",
            Bound::AmplitudeEr => "amplitude_er",
            Bound::SquaredLsp => "squared_lsp",
            Bound::SquaredEr => "squared_er",
            Bound::Naive => "naive",
            Bound::RemarkRhs => "remark_rhs",
        }
    }

    pub fn applies_to(self, scheme: WeightScheme) -> bool {
        match self {
            Bound::CheegerEr | Bound::UnweightedLsp | Bound::UnweightedEr => scheme == WeightScheme::Unit,
            Bound::AmplitudeLsp | Bound::AmplitudeEr => scheme == WeightScheme::Amplitude,
            Bound::SquaredLsp | Bound::SquaredEr => scheme == WeightScheme::SquaredAmplitude,
            _ => true,
        }
    }

    pub fn target(self) -> Target {
        match self {
            Bound::CheegerEr => Target::ErNormalized,
            Bound::UnweightedLsp
            | Bound::SpectralSqrt
            | Bound::SpectralLinear
            | Bound::WeightedLsp
            | Bound::AmplitudeLsp
            | Bound::SquaredLsp => Target::Lsp,
            Bound::WeightedEr | Bound::UnweightedEr | Bound::AmplitudeEr | Bound::SquaredEr => Target::Er,
            Bound::Naive => Target::Any,
            Bound::RemarkRhs => Target::Noise,
        }
    }

    /// Bounds reported under `scheme`, in [`Bound::ALL`] order.
    pub fn applicable(scheme: WeightScheme) -> Vec<Bound> {
        Bound::ALL.into_iter().filter(|b| b.applies_to(scheme)).collect()
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Norms of the measurement error `Delta = Xhat - X`, taken over the full
/// matrix so both orientations of every edge count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseNorms {
    /// `||Delta||_F`
    pub phase: f64,
    /// `||W o Delta||_F`
    pub weighted: f64,
    /// `||W o Delta||_inf` (spectral norm)
    pub weighted_spectral: f64,
    /// `||R o Delta||_F`
    pub root_weighted: f64,
    /// `||Yhat - Y||_F`, off the diagonal
    pub measurement: f64,
}

impl NoiseNorms {
    pub fn compute(g: &WeightedGraph, ms: &MeasurementSet) -> Result<Self> {
        let d = g.dim();
        if ms.dim() != d {
            return Err(Error::Dimension(format!("measurements for d = {} on a graph with d = {d}", ms.dim())));
        }
        let delta = ms.noisy.sub(&ms.clean)?;
        let weighted = delta.hadamard_real(g.weights())?;
        let root = delta.hadamard_real(&g.sqrt_weights())?;
        let weighted_spectral = spectral_norm(&HermitianMatrix::new(weighted.clone())?)?;
        Ok(Self {
            phase: delta.frobenius_norm(),
            weighted: weighted.frobenius_norm(),
            weighted_spectral,
            root_weighted: root.frobenius_norm(),
            measurement: ms.weighted_noise_norm(),
        })
    }
}

/// Solver outputs for one instance.
#[derive(Debug, Clone, Copy)]
pub struct InstanceResults<'a> {
    pub er: &'a SolverResult,
    pub lsp: Option<&'a SolverResult>,
    pub sdp: Option<&'a SdpResult>,
    pub er_normalized: Option<&'a SolverResult>,
}

/// Distances, bounds and noise norms for one instance.
///
/// Bounds that do not apply to the weight scheme are `None`.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub scheme: WeightScheme,
    pub dist_er: f64,
    pub dist_lsp: Option<f64>,
    pub dist_sdp: Option<f64>,
    pub dist_er_normalized: Option<f64>,
    values: [Option<f64>; Bound::ALL.len()],
    pub noise: NoiseNorms,
    pub spectral_gap: f64,
    pub normalized_gap: f64,
    /// `c_z` of the eigenvector relaxation.
    pub c_z: f64,
    /// Tightness check at the LSP estimate, when one is available.
    pub certificate: Option<TightnessCertificate>,
}

impl BoundReport {
    pub fn get(&self, bound: Bound) -> Option<f64> {
        self.values[bound as usize]
    }

    pub fn tight_sdp(&self) -> Option<bool> {
        self.certificate.map(|c| c.holds)
    }

    /// Distance of the estimator a bound controls, if it was computed.
    pub fn distance_for(&self, target: Target) -> Option<f64> {
        match target {
            Target::Lsp => self.dist_lsp,
            Target::Er => Some(self.dist_er),
            Target::ErNormalized => self.dist_er_normalized,
            Target::Any => [Some(self.dist_er), self.dist_lsp, self.dist_sdp, self.dist_er_normalized]
                .into_iter()
                .flatten()
                .reduce(f64::max),
            Target::Noise => None,
        }
    }

    /// Applicable bounds whose controlled distance exceeds them, as
    /// `(bound, distance, value)`.
    pub fn violations(&self) -> Vec<(Bound, f64, f64)> {
        let mut out = Vec::new();
        for b in Bound::ALL {
            if let (Some(v), Some(dist)) = (self.get(b), self.distance_for(b.target())) {
                if dist > v * (1.0 + 1e-9) + 1e-9 {
                    out.push((b, dist, v));
                }
            }
        }
        out
    }
}

/// Evaluates every bound applicable to `scheme` on one instance.
///
/// `g` must be the weighted graph the solvers ran on and `ms` the
/// measurements it was built from.
pub fn eval_bounds(g: &WeightedGraph, scheme: WeightScheme, ms: &MeasurementSet, results: InstanceResults<'_>) -> Result<BoundReport> {
    let d = g.dim();
    let lap = laplacians(g)?;
    let tau = lap.spectral_gap;
    let noise = NoiseNorms::compute(g, ms)?;
    let x = &ms.truth.phases;
    let c_z = results.er.c_z;
    let sqrt_tau = tau.sqrt();
    let sqrt_d = (d as f64).sqrt();

    let mut values = [None; Bound::ALL.len()];
    for b in Bound::applicable(scheme) {
        let v = match b {
            Bound::CheegerEr => 19.0 * noise.phase / (lap.normalized_gap * lap.min_degree.sqrt()),
            Bound::UnweightedLsp => 2.0 * noise.phase / sqrt_tau,
            Bound::SpectralSqrt => 2.0 * (d as f64 * noise.weighted_spectral / tau).sqrt(),
            Bound::SpectralLinear => 4.0 * sqrt_d * noise.weighted_spectral / tau,
            Bound::WeightedLsp => 2.0 * noise.root_weighted / sqrt_tau,
            Bound::WeightedEr => 2.0 * c_z * noise.root_weighted / sqrt_tau,
            Bound::UnweightedEr => 2.0 * c_z * noise.phase / sqrt_tau,
            Bound::AmplitudeLsp => 2.0 * 2f64.sqrt() * (noise.measurement * noise.phase).sqrt() / sqrt_tau,
            Bound::AmplitudeEr => 2.0 * 2f64.sqrt() * c_z * (noise.measurement * noise.phase).sqrt() / sqrt_tau,
            Bound::SquaredLsp => 4.0 * noise.measurement / sqrt_tau,
            Bound::SquaredEr => 4.0 * c_z * noise.measurement / sqrt_tau,
            Bound::Naive => 2.0 * sqrt_d,
            Bound::RemarkRhs => (noise.weighted * noise.phase).sqrt(),
        };
        values[b as usize] = Some(v);
    }

    let dist = |v: &ComplexVector| phase_distance(v, x);
    let certificate = match results.lsp {
        Some(lsp) => Some(tightness_certificate_with_gap(g, &ms.noisy, &lsp.x_round, tau)?),
        None => None,
    };
    Ok(BoundReport {
        scheme,
        dist_er: dist(&results.er.x_round)?,
        dist_lsp: results.lsp.map(|r| dist(&r.x_round)).transpose()?,
        dist_sdp: results.sdp.map(|r| dist(&r.x_round)).transpose()?,
        dist_er_normalized: results.er_normalized.map(|r| dist(&r.x_round)).transpose()?,
        values,
        noise,
        spectral_gap: tau,
        normalized_gap: lap.normalized_gap,
        c_z,
        certificate,
    })
}

/// One intermediate inequality `lhs <= rhs`, evaluated on an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `sum over ordered edges (l, j) of w_lj |v_l - v_j|^2`.
fn edge_variation(g: &WeightedGraph, v: &[Complex64]) -> f64 {
    2.0 * g.edges().map(|(l, j, w)| w * (v[l] - v[j]).norm_sqr()).sum::<f64>()
}

/// Evaluates the intermediate inequalities that combine into the weighted
/// LSP and ER bounds, with `g_l = conj(x_l) xt_l` for the LSP estimate `xt`
/// and `h_l = conj(x_l) z_l` for the eigenvector `z`:
///
/// - `dist(xt, x)^2 <= (1/tau) sum w |g_l - g_j|^2`
/// - `dist(sgn z, x)^2 <= (4/tau) sum w |h_l - h_j|^2`
/// - `sum w |h_l - h_j|^2 <= c_z^2 ||R o Delta||_F^2`
/// - `sum w |g_l - g_j|^2 <= 4 ||R o Delta||_F^2`
/// - `||R o Delta||_F^2 <= ||W o Delta||_F ||Delta||_F`
///
/// Sums run over ordered edge pairs. The first two hold for any torus point
/// and any `z` with `||z||^2 = d`; the middle two use that `xt` and `z`
/// minimize their objectives.
pub fn check_proof_inequalities(
    g: &WeightedGraph,
    ms: &MeasurementSet,
    er: &SolverResult,
    lsp: &SolverResult,
) -> Result<Vec<InequalityCheck>> {
    let d = g.dim();
    let x = &ms.truth.phases;
    if er.z.len() != d || lsp.x_round.len() != d || x.len() != d {
        return Err(Error::Dimension("solver results do not match the graph".into()));
    }
    let tau = laplacians(g)?.spectral_gap;
    let noise = NoiseNorms::compute(g, ms)?;
    let r2 = noise.root_weighted * noise.root_weighted;

    let gvec: Vec<Complex64> = x.iter().zip(lsp.x_round.iter()).map(|(a, b)| a.conj() * b).collect();
    let hvec: Vec<Complex64> = x.iter().zip(er.z.iter()).map(|(a, b)| a.conj() * b).collect();
    let g_var = edge_variation(g, &gvec);
    let h_var = edge_variation(g, &hvec);
    let d_lsp = phase_distance(&lsp.x_round, x)?;
    let d_er = phase_distance(&er.x_round, x)?;

    let slack = 1e-12 * d as f64;
    let check = |name, lhs: f64, rhs: f64| InequalityCheck { name, lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-9) + slack };
    Ok(vec![
        check("lsp_distance_by_edge_variation", d_lsp * d_lsp, g_var / tau),
        check("er_distance_by_edge_variation", d_er * d_er, 4.0 * h_var / tau),
        check("er_edge_variation_by_noise", h_var, er.c_z * er.c_z * r2),
        check("lsp_edge_variation_by_noise", g_var, 4.0 * r2),
        check("root_weighted_noise_by_geometric_mean", r2, noise.weighted * noise.phase),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::banded_graph;
    use crate::solvers::{solve_er, solve_er_normalized, solve_lsp, solve_sdp};
    use crate::synth::{apply_angular_noise, build_weights, random_signal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn distance_examples() {
        let a = [c(1.0, 0.0), c(1.0, 0.0)];
        let b = [c(1.0, 0.0), c(-1.0, 0.0)];
        assert!((phase_distance(&a, &b).unwrap() - 2.0).abs() < 1e-15);
        let x = [c(0.6, 0.8), c(0.0, 1.0), c(-1.0, 0.0)];
        let ix: Vec<_> = x.iter().map(|z| z * c(0.0, 1.0)).collect();
        assert!(phase_distance(&x, &ix).unwrap() < 1e-7);
        assert!(matches!(phase_distance(&a, &x), Err(Error::Dimension(_))));
    }

    fn report(d: usize, delta: usize, alpha: f64, scheme: WeightScheme, seed: u64) -> BoundReport {
        let band = banded_graph(d, delta, None).unwrap();
        let gt = random_signal(d, seed).unwrap();
        let ms = apply_angular_noise(&gt, &band, alpha, seed + 1).unwrap();
        let g = build_weights(&ms, scheme).unwrap();
        let er = solve_er(&g, &ms.noisy).unwrap();
        let lsp = solve_lsp(&g, &ms.noisy, None).unwrap();
        let sdp = solve_sdp(&g, &ms.noisy).unwrap();
        let ern = if scheme == WeightScheme::Unit { Some(solve_er_normalized(&g, &ms.noisy).unwrap()) } else { None };
        let results = InstanceResults { er: &er, lsp: Some(&lsp), sdp: Some(&sdp), er_normalized: ern.as_ref() };
        eval_bounds(&g, scheme, &ms, results).unwrap()
    }

    #[test]
    fn zero_noise_zeroes_everything_but_naive() {
        for scheme in WeightScheme::ALL {
            let r = report(16, 4, 0.0, scheme, 3);
            for b in Bound::applicable(scheme) {
                let v = r.get(b).unwrap();
                if b == Bound::Naive {
                    assert_eq!(v, 8.0);
                } else {
                    assert!(v.abs() < 1e-12, "{b} = {v}");
                }
            }
            assert!(r.dist_er < 1e-6 && r.dist_lsp.unwrap() < 1e-6 && r.dist_sdp.unwrap() < 1e-6);
            assert_eq!(r.tight_sdp(), Some(true));
        }
    }

    #[test]
    fn inapplicable_bounds_are_absent() {
        let r = report(12, 3, 5.0, WeightScheme::Amplitude, 1);
        assert!(r.get(Bound::UnweightedLsp).is_none());
        assert!(r.get(Bound::SquaredEr).is_none());
        assert!(r.get(Bound::AmplitudeEr).is_some());
        assert!(r.dist_er_normalized.is_none());
    }

    #[test]
    fn naive_at_64() {
        let r = report(64, 16, 1.0, WeightScheme::Unit, 5);
        assert_eq!(r.get(Bound::Naive), Some(16.0));
    }

    #[test]
    fn unweighted_reduction() {
        let r = report(8, 2, 20.0, WeightScheme::Unit, 9);
        assert_eq!(r.get(Bound::WeightedLsp), r.get(Bound::UnweightedLsp));
        assert_eq!(r.get(Bound::WeightedEr), r.get(Bound::UnweightedEr));
    }
}
