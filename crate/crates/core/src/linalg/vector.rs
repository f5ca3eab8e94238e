use std::ops::{Deref, DerefMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `alpha / |alpha|` for nonzero `alpha`, and `0` otherwise.
#[inline]
pub fn sgn(alpha: Complex64) -> Complex64 {
    let r = alpha.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        alpha / r
    }
}

/// A nonempty dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("vector must have at least one entry".into()));
        }
        Ok(Self(entries))
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d > 0, "vector must have at least one entry");
        Self(vec![Complex64::new(0.0, 0.0); d])
    }

    pub fn ones(d: usize) -> Self {
        assert!(d > 0, "vector must have at least one entry");
        Self(vec![Complex64::new(1.0, 0.0); d])
    }

    /// Unit-modulus vector `e^{i phi_l}`.
    pub fn from_phases(phases: &[f64]) -> Result<Self> {
        Self::new(phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect())
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm2_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_sqr().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Inner product `self* other` (conjugate-linear in `self`).
    pub fn dot(&self, other: &ComplexVector) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "inner product of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(dot(&self.0, &other.0))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    /// Entrywise `sgn`.
    pub fn sgn(&self) -> Self {
        Self(self.0.iter().map(|&z| sgn(z)).collect())
    }

    /// Phases `arg(v_l)` in `(-pi, pi]`.
    pub fn phases(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.arg()).collect()
    }

    /// Rotate by a global phase so the first nonzero entry is real and positive.
    pub fn canonical_gauge(&self) -> Self {
        match self.0.iter().find(|z| z.norm() > 0.0) {
            Some(&first) => self.scaled(sgn(first).conj()),
            None => self.clone(),
        }
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl TryFrom<Vec<Complex64>> for ComplexVector {
    type Error = Error;

    fn try_from(v: Vec<Complex64>) -> Result<Self> {
        Self::new(v)
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y <- y - alpha x`
pub(crate) fn axpy_neg(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sgn_examples() {
        let s = sgn(c(3.0, 4.0));
        assert!((s - c(0.6, 0.8)).norm() < 1e-15);
        assert_eq!(sgn(c(0.0, 0.0)), c(0.0, 0.0));
        for k in 0..32 {
            let z = Complex64::from_polar(1.0, 0.2 * k as f64);
            assert!((sgn(z) - z).norm() < 1e-15);
        }
    }

    #[test]
    fn empty_vector_rejected() {
        assert!(ComplexVector::new(vec![]).is_err());
    }

    #[test]
    fn norms() {
        let v = ComplexVector::new(vec![c(3.0, 4.0), c(0.0, -1.0)]).unwrap();
        assert!((v.norm2() - 26f64.sqrt()).abs() < 1e-14);
        assert_eq!(v.norm_inf(), 5.0);
        assert_eq!(ComplexVector::zeros(3).norm2(), 0.0);
    }

    #[test]
    fn dot_length_mismatch() {
        let a = ComplexVector::ones(2);
        let b = ComplexVector::ones(3);
        assert!(matches!(a.dot(&b), Err(Error::Dimension(_))));
    }

    #[test]
    fn canonical_gauge_makes_first_entry_positive() {
        let v = ComplexVector::from_phases(&[1.3, -0.4, 2.0]).unwrap();
        let g = v.canonical_gauge();
        assert!(g[0].im.abs() < 1e-15 && g[0].re > 0.0);
        let z = ComplexVector::new(vec![c(0.0, 0.0), c(0.0, 2.0)]).unwrap();
        let gz = z.canonical_gauge();
        assert!((gz[1] - c(2.0, 0.0)).norm() < 1e-15);
    }
}
