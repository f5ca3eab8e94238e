//! Synthetic ground truth and noisy pairwise measurements.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{ComplexMatrix, ComplexVector, RealMatrix};

/// Salt separating the magnitude-noise stream from the phase-noise stream.
const MAGNITUDE_STREAM: u64 = 0x6d61_676e_6974_7564;

/// A complex signal `y` and its phase factors `x = sgn(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub signal: ComplexVector,
    pub phases: ComplexVector,
}

impl GroundTruth {
    /// Unit-magnitude ground truth with the given phase factors.
    pub fn from_phases(phases: ComplexVector) -> Result<Self> {
        if phases.iter().any(|z| (z.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidArgument("phase factors must have unit modulus".into()));
        }
        Ok(Self { signal: phases.clone(), phases })
    }

    pub fn from_signal(signal: ComplexVector) -> Result<Self> {
        if signal.iter().any(|z| z.norm() == 0.0) {
            return Err(Error::InvalidArgument("signal has a zero entry".into()));
        }
        let phases = signal.sgn();
        Ok(Self { signal, phases })
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// Same signal rotated by the global phase `e^{i theta}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = Complex64::from_polar(1.0, theta);
        Self { signal: self.signal.scaled(r), phases: self.phases.scaled(r) }
    }
}

/// Signal with i.i.d. standard normal real and imaginary parts.
pub fn random_signal(d: usize, seed: u64) -> Result<GroundTruth> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("signal dimension must be at least 2, got {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..d)
        .map(|_| loop {
            let y = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            if y.norm() > 0.0 {
                break y;
            }
        })
        .collect();
    GroundTruth::from_signal(ComplexVector::new(entries)?)
}

/// How edge weights are derived from the measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightScheme {
    /// `w_lj = 1` on the edge set.
    Unit,
    /// `w_lj = |Yhat_lj|`.
    Amplitude,
    /// `w_lj = |Yhat_lj|^2`.
    SquaredAmplitude,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 3] = [WeightScheme::Unit, WeightScheme::Amplitude, WeightScheme::SquaredAmplitude];

    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::Unit => "unit",
            WeightScheme::Amplitude => "amplitude",
            WeightScheme::SquaredAmplitude => "squared",
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" | "unweighted" => Ok(WeightScheme::Unit),
            "amplitude" | "amp" => Ok(WeightScheme::Amplitude),
            "squared" | "squared-amplitude" | "squared_amplitude" => Ok(WeightScheme::SquaredAmplitude),
            other => Err(Error::InvalidArgument(format!("unknown weight scheme {other:?}"))),
        }
    }
}

/// Clean and noisy pairwise data for one instance.
///
/// Every matrix is `d x d` and vanishes off the edge set (the diagonal of
/// `clean_weighted` excepted, which holds `|y_l|^2`).
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    /// Unweighted graph carrying the edge set.
    pub graph: WeightedGraph,
    pub truth: GroundTruth,
    /// `X = A_G o (x x*)`
    pub clean: ComplexMatrix,
    /// `Xhat = X o N`
    pub noisy: ComplexMatrix,
    /// `N`, unit modulus on the edge set
    pub noise: ComplexMatrix,
    /// `Y = (I + A_G) o (y y*)`
    pub clean_weighted: ComplexMatrix,
    /// `Yhat = M o Xhat`
    pub noisy_weighted: ComplexMatrix,
    /// `M`, measured magnitudes on the edge set
    pub magnitudes: RealMatrix,
    /// Noise half-width in radians.
    pub alpha: f64,
}

impl MeasurementSet {
    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    /// `||Yhat - Y||_F` over off-diagonal entries.
    pub fn weighted_noise_norm(&self) -> f64 {
        self.noisy_weighted
            .sub(&self.clean_weighted)
            .expect("same shape")
            .offdiag_frobenius_norm()
    }
}

/// Phase noise uniform on `[-alpha, alpha]`, one draw per unordered edge,
/// with exact magnitudes.
pub fn apply_angular_noise(gt: &GroundTruth, edges: &WeightedGraph, alpha_deg: f64, seed: u64) -> Result<MeasurementSet> {
    apply_noise(gt, edges, alpha_deg, 0.0, seed)
}

/// As [`apply_angular_noise`], additionally scaling each measured magnitude
/// by an independent factor uniform on `[1 - magnitude_eps, 1 + magnitude_eps]`.
pub fn apply_noise(
    gt: &GroundTruth,
    edges: &WeightedGraph,
    alpha_deg: f64,
    magnitude_eps: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    let d = gt.dim();
    if edges.dim() != d {
        return Err(Error::Dimension(format!("graph on {} vertices for a signal of length {d}", edges.dim())));
    }
    if !(alpha_deg.is_finite() && alpha_deg >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise level {alpha_deg} must be finite and nonnegative")));
    }
    if !(0.0..1.0).contains(&magnitude_eps) {
        return Err(Error::InvalidArgument(format!("magnitude noise {magnitude_eps} must lie in [0, 1)")));
    }
    let alpha = alpha_deg.to_radians();
    let graph = WeightedGraph::new(edges.adjacency())?;
    let x = &gt.phases;
    let amp: Vec<f64> = gt.signal.iter().map(|z| z.norm()).collect();

    let mut phase_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mag_rng = ChaCha8Rng::seed_from_u64(seed ^ MAGNITUDE_STREAM);

    let zero = Complex64::new(0.0, 0.0);
    let mut clean = ComplexMatrix::zeros(d, d);
    let mut noisy = ComplexMatrix::zeros(d, d);
    let mut noise = ComplexMatrix::zeros(d, d);
    let mut clean_weighted = ComplexMatrix::zeros(d, d);
    let mut noisy_weighted = ComplexMatrix::zeros(d, d);
    let mut magnitudes = RealMatrix::zeros(d, d);
    for l in 0..d {
        clean_weighted[(l, l)] = Complex64::new(amp[l] * amp[l], 0.0);
        for j in 0..l {
            if !graph.has_edge(l, j) {
                continue;
            }
            let eta = alpha * (2.0 * phase_rng.random::<f64>() - 1.0);
            let n = Complex64::from_polar(1.0, eta);
            let xlj = x[l] * x[j].conj();
            let xhat = xlj * n;
            let clean_mag = amp[l] * amp[j];
            let m = if magnitude_eps > 0.0 {
                clean_mag * (1.0 + magnitude_eps * (2.0 * mag_rng.random::<f64>() - 1.0))
            } else {
                clean_mag
            };
            // y_l conj(y_j) = |y_l||y_j| x_l conj(x_j)
            let ylj = xlj * clean_mag;
            for (a, b, flip) in [(l, j, false), (j, l, true)] {
                let c = |z: Complex64| if flip { z.conj() } else { z };
                clean[(a, b)] = c(xlj);
                noise[(a, b)] = c(n);
                noisy[(a, b)] = c(xhat);
                clean_weighted[(a, b)] = c(ylj);
                noisy_weighted[(a, b)] = c(xhat * m);
                magnitudes[(a, b)] = m;
            }
        }
    }
    debug_assert!(noisy.as_slice().iter().all(|z| z.is_finite()) && noisy[(0, 0)] == zero);
    Ok(MeasurementSet { graph, truth: gt.clone(), clean, noisy, noise, clean_weighted, noisy_weighted, magnitudes, alpha })
}

/// Weight matrix for `scheme` on the measurement edge set.
///
/// Edges whose measured magnitude is zero drop out of the graph under the
/// amplitude schemes; if that disconnects it, [`Error::Disconnected`] is returned.
pub fn build_weights(ms: &MeasurementSet, scheme: WeightScheme) -> Result<WeightedGraph> {
    let d = ms.dim();
    let w = match scheme {
        WeightScheme::Unit => ms.graph.adjacency(),
        WeightScheme::Amplitude | WeightScheme::SquaredAmplitude => RealMatrix::from_fn(d, d, |l, j| {
            if l == j || !ms.graph.has_edge(l, j) {
                return 0.0;
            }
            let a = ms.noisy_weighted[(l, j)].norm();
            if scheme == WeightScheme::Amplitude {
                a
            } else {
                a * a
            }
        }),
    };
    let g = WeightedGraph::new(w)?;
    if !g.is_connected() {
        return Err(Error::Disconnected { spectral_gap: 0.0 });
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::banded_graph;

    #[test]
    fn signal_is_deterministic() {
        assert_eq!(random_signal(4, 7).unwrap(), random_signal(4, 7).unwrap());
        assert_ne!(random_signal(4, 7).unwrap(), random_signal(4, 8).unwrap());
    }

    #[test]
    fn signal_phases_unit_modulus() {
        let gt = random_signal(50, 1).unwrap();
        assert!(gt.phases.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        assert!(random_signal(1, 0).is_err());
    }

    #[test]
    fn second_moment_of_signal() {
        for seed in 0..10 {
            let gt = random_signal(10_000, seed).unwrap();
            let mean = gt.signal.norm2_sqr() / 10_000.0;
            assert!((1.9..2.1).contains(&mean), "seed {seed}: mean |y|^2 = {mean}");
        }
    }

    #[test]
    fn zero_noise_reproduces_clean_data() {
        let g = banded_graph(9, 3, None).unwrap();
        let gt = random_signal(9, 3).unwrap();
        let ms = apply_angular_noise(&gt, &g, 0.0, 11).unwrap();
        assert_eq!(ms.noisy, ms.clean);
        for l in 0..9 {
            for j in 0..9 {
                if l != j {
                    assert_eq!(ms.noisy_weighted[(l, j)], ms.clean_weighted[(l, j)]);
                }
            }
        }
        assert_eq!(ms.weighted_noise_norm(), 0.0);
    }

    #[test]
    fn noisy_matrix_is_exactly_hermitian_and_multiplicative() {
        let g = banded_graph(12, 4, None).unwrap();
        let gt = random_signal(12, 5).unwrap();
        let ms = apply_angular_noise(&gt, &g, 30.0, 2).unwrap();
        assert_eq!(ms.noisy.hermitian_defect(), 0.0);
        assert_eq!(ms.noisy, ms.clean.hadamard(&ms.noise).unwrap());
        let adj = g.adjacency();
        for l in 0..12 {
            for j in 0..12 {
                assert!((ms.noisy[(l, j)].norm() - adj[(l, j)]).abs() < 1e-15);
                let yhat = ms.magnitudes[(l, j)] * ms.noisy[(l, j)];
                assert_eq!(ms.noisy_weighted[(l, j)], yhat);
            }
        }
    }

    #[test]
    fn noise_stays_within_half_width() {
        let g = banded_graph(16, 8, None).unwrap();
        let gt = random_signal(16, 5).unwrap();
        let ms = apply_angular_noise(&gt, &g, 10.0, 9).unwrap();
        for (l, j, _) in g.edges() {
            assert!(ms.noise[(l, j)].arg().abs() <= 10f64.to_radians() + 1e-15);
        }
    }

    #[test]
    fn noise_seed_does_not_touch_clean_data() {
        let g = banded_graph(10, 3, None).unwrap();
        let gt = random_signal(10, 4).unwrap();
        let a = apply_angular_noise(&gt, &g, 20.0, 1).unwrap();
        let b = apply_angular_noise(&gt, &g, 20.0, 2).unwrap();
        assert_eq!(a.clean, b.clean);
        assert_ne!(a.noisy, b.noisy);
    }

    #[test]
    fn magnitude_noise_only_moves_magnitudes() {
        let g = banded_graph(10, 3, None).unwrap();
        let gt = random_signal(10, 4).unwrap();
        let a = apply_noise(&gt, &g, 5.0, 0.0, 1).unwrap();
        let b = apply_noise(&gt, &g, 5.0, 0.2, 1).unwrap();
        assert_eq!(a.noisy, b.noisy);
        assert_ne!(a.magnitudes, b.magnitudes);
        for (l, j, _) in g.edges() {
            let ratio = b.magnitudes[(l, j)] / a.magnitudes[(l, j)];
            assert!((0.8..=1.2).contains(&ratio));
        }
        assert!(apply_noise(&gt, &g, 5.0, 1.5, 1).is_err());
    }

    #[test]
    fn weight_schemes() {
        let g = banded_graph(64, 16, None).unwrap();
        let gt = random_signal(64, 1).unwrap();
        let ms = apply_angular_noise(&gt, &g, 3.0, 1).unwrap();
        let unit = build_weights(&ms, WeightScheme::Unit).unwrap();
        assert!(unit.degrees().iter().all(|&x| x == 30.0));
        let amp = build_weights(&ms, WeightScheme::Amplitude).unwrap();
        let sq = build_weights(&ms, WeightScheme::SquaredAmplitude).unwrap();
        for l in 0..64 {
            for j in 0..64 {
                assert_eq!(sq.weight(l, j), amp.weight(l, j) * amp.weight(l, j));
            }
        }
        for w in [&unit, &amp, &sq] {
            let r = w.sqrt_weights();
            for l in 0..64 {
                for j in 0..64 {
                    assert!((r[(l, j)] * r[(l, j)] - w.weight(l, j)).abs() <= 1e-14 * w.weight(l, j).max(1.0));
                }
            }
        }
    }

    #[test]
    fn zero_amplitude_edge_is_dropped() {
        let g = banded_graph(3, 2, None).unwrap();
        let y = ComplexVector::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(-1.0, 1.0),
        ])
        .unwrap();
        let gt = GroundTruth::from_signal(y).unwrap();
        let mut ms = apply_angular_noise(&gt, &g, 1.0, 1).unwrap();
        ms.noisy_weighted[(0, 1)] = Complex64::new(0.0, 0.0);
        ms.noisy_weighted[(1, 0)] = Complex64::new(0.0, 0.0);
        let w = build_weights(&ms, WeightScheme::Amplitude).unwrap();
        assert!(!w.has_edge(0, 1));
        ms.noisy_weighted[(0, 2)] = Complex64::new(0.0, 0.0);
        ms.noisy_weighted[(2, 0)] = Complex64::new(0.0, 0.0);
        assert!(matches!(build_weights(&ms, WeightScheme::Amplitude), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn scheme_parsing() {
        for s in WeightScheme::ALL {
            assert_eq!(s.name().parse::<WeightScheme>().unwrap(), s);
        }
        assert!("bogus".parse::<WeightScheme>().is_err());
    }
}
