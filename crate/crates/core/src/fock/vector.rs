use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

use super::FockOperator;

/// Amplitude vector on `span{|0>, ..., |N>}`.
///
/// Sub-normalized vectors are allowed, since truncated states lose the tail
/// mass beyond the cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amps: Vec<C64>,
}

impl FockVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Dimension("a Fock vector needs at least one amplitude".into()));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::param("non-finite amplitude"));
        }
        let v = FockVector { amps };
        let norm = v.norm_sqr();
        if norm > 1.0 + 1e-9 {
            return Err(Error::param(format!("squared norm {norm} exceeds 1")));
        }
        Ok(v)
    }

    /// Skips the norm check. Used for intermediate (unnormalized) vectors.
    pub(crate) fn from_raw(amps: Vec<C64>) -> Self {
        FockVector { amps }
    }

    /// Number state `|n>` truncated at `cutoff`.
    pub fn basis(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::Dimension(format!("|{n}> lies above cutoff {cutoff}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); cutoff + 1];
        amps[n] = C64::new(1.0, 0.0);
        Ok(FockVector { amps })
    }

    pub fn cutoff(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "inner product of cutoffs {} and {}",
                self.cutoff(),
                other.cutoff()
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scaled(&self, factor: C64) -> FockVector {
        FockVector { amps: self.amps.iter().map(|a| a * factor).collect() }
    }

    /// Unit-norm copy. Fails on the zero vector.
    pub fn normalized(&self) -> Result<FockVector> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::param("cannot normalize the zero vector"));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    /// `|self><self|`.
    pub fn projector(&self) -> FockOperator {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj());
        FockOperator::from_matrix_unchecked(m)
    }
}

/// Truncated coherent state: `amps[n] = e^{-|alpha|^2/2} alpha^n / sqrt(n!)`.
pub fn coherent_vector(alpha: C64, cutoff: usize) -> FockVector {
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut a = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(a);
    for n in 1..=cutoff {
        a = a * alpha / (n as f64).sqrt();
        amps.push(a);
    }
    FockVector { amps }
}

/// `|<alpha|beta>|^2 = e^{-|alpha - beta|^2}`.
pub fn overlap_prob(alpha: C64, beta: C64) -> f64 {
    (-(alpha - beta).norm_sqr()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::cutoff_for_energy;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum() {
        let v = coherent_vector(c(0.0, 0.0), 5);
        assert_eq!(v.amps()[0], c(1.0, 0.0));
        assert!(v.amps()[1..].iter().all(|a| *a == c(0.0, 0.0)));
    }

    #[test]
    fn normalization_converges() {
        let v = coherent_vector(c(1.0, 0.0), 40);
        assert!((v.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_product_matches_closed_form() {
        let (a, b) = (c(1.0, 0.0), c(0.0, 1.0));
        let n = cutoff_for_energy(1.0, 1e-14).unwrap() + 10;
        let got = coherent_vector(a, n).inner(&coherent_vector(b, n)).unwrap();
        let want = (-(a.norm_sqr() + b.norm_sqr()) / 2.0 + a.conj() * b).exp();
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn overlap_probabilities() {
        assert_eq!(overlap_prob(c(0.3, -0.2), c(0.3, -0.2)), 1.0);
        assert!((overlap_prob(c(0.0, 0.0), c(1.0, 0.0)) - 0.36787944117144233).abs() < 1e-15);
        let n = cutoff_for_energy(1.0, 1e-14).unwrap();
        let trunc = coherent_vector(c(1.0, 0.0), n).inner(&coherent_vector(c(-1.0, 0.0), n)).unwrap();
        let exact = overlap_prob(c(1.0, 0.0), c(-1.0, 0.0));
        assert!((exact - (-4.0f64).exp()).abs() < 1e-16);
        assert!((trunc.norm_sqr() - exact).abs() < 1e-12);
    }

    #[test]
    fn rejects_overnormalized() {
        assert!(FockVector::new(vec![c(1.0, 0.0), c(0.1, 0.0)]).is_err());
        assert!(FockVector::new(vec![]).is_err());
        assert!(FockVector::basis(3, 2).is_err());
    }
}
