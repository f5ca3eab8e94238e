//! Weighted measurement graphs and their Laplacians.
//!
//! Vertices are `0..d`. An edge `(l, j)` exists exactly when the weight
//! `w_lj` is positive; weights are symmetric with a zero diagonal.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{second_smallest_eigenvalue, ComplexMatrix, ComplexVector, HermitianMatrix, RealMatrix};

/// Tolerance used when validating unit-modulus and Hermitian phase data.
const PHASE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: RealMatrix,
    /// `(j, w_lj)` for every neighbour `j` of `l`, ascending in `j`
    neighbors: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(weights: RealMatrix) -> Result<Self> {
        let (n, m) = weights.shape();
        if n != m {
            return Err(Error::Dimension(format!("weight matrix must be square, got {n}x{m}")));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
        }
        for l in 0..n {
            if weights[(l, l)] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero self-weight at vertex {l}")));
            }
            for j in (l + 1)..n {
                let (a, b) = (weights[(l, j)], weights[(j, l)]);
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::InvalidArgument(format!("weight ({l},{j}) = {a} is not a finite nonnegative number")));
                }
                if a != b {
                    return Err(Error::InvalidArgument(format!("weights ({l},{j}) and ({j},{l}) differ")));
                }
            }
        }
        let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|l| (0..n).filter_map(|j| (weights[(l, j)] > 0.0).then_some((j, weights[(l, j)]))).collect())
            .collect();
        let degrees = neighbors.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect();
        Ok(Self { weights, neighbors, degrees })
    }

    /// Unit weights on the given undirected edges.
    pub fn unweighted(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut w = RealMatrix::zeros(d, d);
        for &(l, j) in edges {
            if l >= d || j >= d || l == j {
                return Err(Error::InvalidArgument(format!("bad edge ({l},{j}) for {d} vertices")));
            }
            w[(l, j)] = 1.0;
            w[(j, l)] = 1.0;
        }
        Self::new(w)
    }

    pub fn dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &RealMatrix {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, l: usize, j: usize) -> f64 {
        self.weights[(l, j)]
    }

    #[inline]
    pub fn has_edge(&self, l: usize, j: usize) -> bool {
        self.weights[(l, j)] > 0.0
    }

    /// Indicator matrix of the edge set.
    pub fn adjacency(&self) -> RealMatrix {
        self.weights.map(|w| if w > 0.0 { 1.0 } else { 0.0 })
    }

    /// Entrywise square root of the weights.
    pub fn sqrt_weights(&self) -> RealMatrix {
        self.weights.map(f64::sqrt)
    }

    /// Neighbours of `l` with their weights, ascending.
    pub fn neighbors(&self, l: usize) -> &[(usize, f64)] {
        &self.neighbors[l]
    }

    /// Undirected edges `(l, j, w)` with `l < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(l, row)| row.iter().filter(move |&&(j, _)| j > l).map(move |&(j, w)| (l, j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Weighted degrees `deg(l) = sum_j w_lj`.
    pub fn degrees(&self) -> Vec<f64> {
        self.degrees.clone()
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// True when every edge has weight one.
    pub fn is_unweighted(&self) -> bool {
        self.weights.as_slice().iter().all(|&w| w == 0.0 || w == 1.0)
    }

    /// Same vertex set, weights replaced by `weights` restricted to this edge set.
    pub fn masked(&self, weights: &RealMatrix) -> Result<Self> {
        if weights.shape() != self.weights.shape() {
            return Err(Error::Dimension("weight matrix does not match the graph".into()));
        }
        let d = self.dim();
        Self::new(RealMatrix::from_fn(d, d, |l, j| if self.has_edge(l, j) { weights[(l, j)] } else { 0.0 }))
    }

    /// Breadth-first connectivity test on the edge set.
    pub fn is_connected(&self) -> bool {
        let d = self.dim();
        let mut seen = vec![false; d];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(l) = queue.pop_front() {
            for &(j, _) in &self.neighbors[l] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == d
    }
}

/// The cyclic band graph: `l != j` and `|l - j| < delta` or `|l - j| > d - delta`.
///
/// Without `weights` every edge has weight one; otherwise the supplied
/// weights are restricted to the band (entries outside it are ignored).
pub fn banded_graph(d: usize, delta: usize, weights: Option<&RealMatrix>) -> Result<WeightedGraph> {
    if delta < 1 || delta > d.div_ceil(2) {
        return Err(Error::InvalidArgument(format!(
            "band parameter {delta} outside 1..={} for d = {d}",
            d.div_ceil(2)
        )));
    }
    if let Some(w) = weights {
        if w.shape() != (d, d) {
            return Err(Error::Dimension(format!("weights {:?} for a graph on {d} vertices", w.shape())));
        }
    }
    let in_band = |l: usize, j: usize| {
        let gap = l.abs_diff(j);
        l != j && (gap < delta || gap > d - delta)
    };
    let w = RealMatrix::from_fn(d, d, |l, j| match (in_band(l, j), weights) {
        (false, _) => 0.0,
        (true, None) => 1.0,
        (true, Some(w)) => w[(l, j)],
    });
    WeightedGraph::new(w)
}

/// `L_G = D - W`.
pub fn combinatorial_laplacian(g: &WeightedGraph) -> HermitianMatrix {
    let deg = g.degrees();
    let diag = deg.iter().enumerate().map(|(l, &x)| (l, l, Complex64::new(x, 0.0)));
    let off = g.edges().map(|(l, j, w)| (l, j, Complex64::new(-w, 0.0)));
    HermitianMatrix::from_upper_entries(g.dim(), diag.chain(off)).expect("graph has at least one vertex")
}

/// Combinatorial and normalized Laplacians of a connected graph together
/// with their spectral gaps.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    /// `L_G = D - W`
    pub combinatorial: HermitianMatrix,
    /// `L_N = D^{-1/2} L_G D^{-1/2}`
    pub normalized: HermitianMatrix,
    pub degrees: Vec<f64>,
    /// `tau_G`, second-smallest eigenvalue of `L_G`
    pub spectral_gap: f64,
    /// `tau_N`, second-smallest eigenvalue of `L_N`
    pub normalized_gap: f64,
    pub min_degree: f64,
}

fn check_degrees(g: &WeightedGraph) -> Result<Vec<f64>> {
    let deg = g.degrees();
    if let Some(vertex) = deg.iter().position(|&x| x <= 0.0) {
        return Err(Error::DegenerateGraph { vertex });
    }
    Ok(deg)
}

fn connectivity_threshold(deg: &[f64]) -> f64 {
    1e-10 * deg.iter().copied().fold(0.0, f64::max)
}

/// `tau_G` alone, for callers that do not need the normalized Laplacian.
pub fn spectral_gap(g: &WeightedGraph) -> Result<f64> {
    let deg = check_degrees(g)?;
    if g.dim() == 1 {
        return Err(Error::InvalidArgument("a single vertex has no spectral gap".into()));
    }
    let tau = second_smallest_eigenvalue(&combinatorial_laplacian(g), &ComplexVector::ones(g.dim()))?;
    if tau <= connectivity_threshold(&deg) {
        return Err(Error::Disconnected { spectral_gap: tau });
    }
    Ok(tau)
}

pub fn laplacians(g: &WeightedGraph) -> Result<LaplacianBundle> {
    let deg = check_degrees(g)?;
    let combinatorial = combinatorial_laplacian(g);
    let inv_sqrt: Vec<f64> = deg.iter().map(|x| 1.0 / x.sqrt()).collect();
    let normalized = combinatorial.congruence_diag(&inv_sqrt)?;
    let spectral_gap = spectral_gap(g)?;
    let sqrt_deg = ComplexVector::new(deg.iter().map(|x| Complex64::new(x.sqrt(), 0.0)).collect())?;
    let normalized_gap = second_smallest_eigenvalue(&normalized, &sqrt_deg)?;
    if normalized_gap <= 1e-10 {
        return Err(Error::Disconnected { spectral_gap: normalized_gap });
    }
    let min_degree = deg.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LaplacianBundle { combinatorial, normalized, degrees: deg, spectral_gap, normalized_gap, min_degree })
}

/// Data-dependent Laplacian `D - W o phases`.
///
/// `phases` must be unit-modulus and conjugate-symmetric on the edge set;
/// entries off the edge set are ignored.
pub fn data_laplacian(g: &WeightedGraph, phases: &ComplexMatrix) -> Result<HermitianMatrix> {
    let d = g.dim();
    if phases.shape() != (d, d) {
        return Err(Error::Dimension(format!("phase matrix {:?} for a graph on {d} vertices", phases.shape())));
    }
    for (l, j, _) in g.edges() {
        let (a, b) = (phases[(l, j)], phases[(j, l)]);
        if (a.norm() - 1.0).abs() > PHASE_TOL || (b.norm() - 1.0).abs() > PHASE_TOL {
            return Err(Error::InvalidArgument(format!("phase data at ({l},{j}) is not unit-modulus")));
        }
        if (a - b.conj()).norm() > PHASE_TOL {
            return Err(Error::InvalidArgument(format!("phase data at ({l},{j}) is not Hermitian")));
        }
    }
    let diag = g.degrees.iter().enumerate().map(|(l, &x)| (l, l, Complex64::new(x, 0.0)));
    let off = g.edges().map(|(l, j, w)| (l, j, -phases[(l, j)] * w));
    HermitianMatrix::from_upper_entries(d, diag.chain(off))
}
