use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::C64;

use super::{FockVector, EIGEN_FLOOR, HERMITIAN_TOL, TRACE_TOL};

/// Dense operator on `span{|0>, ..., |N>}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    matrix: DMatrix<C64>,
}

impl FockOperator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "operator matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(FockOperator { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Self {
        debug_assert!(matrix.is_square());
        FockOperator { matrix }
    }

    pub fn zeros(cutoff: usize) -> Self {
        FockOperator { matrix: DMatrix::zeros(cutoff + 1, cutoff + 1) }
    }

    pub fn identity(cutoff: usize) -> Self {
        FockOperator { matrix: DMatrix::identity(cutoff + 1, cutoff + 1) }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension("empty diagonal".into()));
        }
        let d = entries.len();
        Ok(FockOperator {
            matrix: DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(entries[i], 0.0) } else { C64::new(0.0, 0.0) }),
        })
    }

    pub fn cutoff(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator { matrix: self.matrix.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `max |A - A^dagger|` over all entries.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(())
    }

    /// Eigenvalues (ascending) and eigenvectors (columns) of a hermitian
    /// operator.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, DMatrix<C64>)> {
        self.ensure_hermitian()?;
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok((values, vectors))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.ensure_hermitian()?;
        let mut v: Vec<f64> = self.matrix.symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }

    /// Checks that the operator is a density operator of trace `mass`:
    /// hermitian, eigenvalues above the floor, trace within tolerance.
    pub fn check_density(&self, mass: f64) -> Result<()> {
        let eig = self.eigenvalues()?;
        if let Some(min) = eig.first().filter(|&&m| m < EIGEN_FLOOR) {
            return Err(Error::NotDensity(format!("eigenvalue {min:e} is negative")));
        }
        let tr = self.trace();
        if (tr.re - mass).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotDensity(format!("trace {tr} differs from mass {mass}")));
        }
        if mass > 1.0 + TRACE_TOL {
            return Err(Error::NotDensity(format!("mass {mass} exceeds 1")));
        }
        Ok(())
    }

    /// Density check against the operator's own (real) trace.
    pub fn ensure_density(&self) -> Result<()> {
        self.check_density(self.trace().re)
    }

    fn same_dim(&self, other: &FockOperator, what: &str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "{what}: cutoffs {} and {}",
                self.cutoff(),
                other.cutoff()
            )));
        }
        Ok(())
    }

    pub fn try_sub(&self, other: &FockOperator) -> Result<FockOperator> {
        self.same_dim(other, "difference")?;
        Ok(FockOperator { matrix: &self.matrix - &other.matrix })
    }

    pub fn try_add(&self, other: &FockOperator) -> Result<FockOperator> {
        self.same_dim(other, "sum")?;
        Ok(FockOperator { matrix: &self.matrix + &other.matrix })
    }

    pub fn try_mul(&self, other: &FockOperator) -> Result<FockOperator> {
        self.same_dim(other, "product")?;
        Ok(FockOperator { matrix: &self.matrix * &other.matrix })
    }

    pub fn scaled(&self, factor: C64) -> FockOperator {
        FockOperator { matrix: &self.matrix * factor }
    }

    /// `U A U^dagger`.
    pub fn conjugated_by(&self, unitary: &FockOperator) -> Result<FockOperator> {
        self.same_dim(unitary, "conjugation")?;
        Ok(FockOperator { matrix: &unitary.matrix * &self.matrix * unitary.matrix.adjoint() })
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "operator of cutoff {} applied to vector of cutoff {}",
                self.cutoff(),
                v.cutoff()
            )));
        }
        let out = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.matrix[(i, j)] * v.amps()[j]).sum())
            .collect();
        Ok(FockVector::from_raw(out))
    }

    /// `<v|A|v>`.
    pub fn expectation(&self, v: &FockVector) -> Result<C64> {
        v.inner(&self.apply(v)?)
    }

    /// Projector onto the span of eigenvectors with strictly positive
    /// eigenvalue.
    pub fn positive_part_projector(&self) -> Result<FockOperator> {
        let (values, vectors) = self.hermitian_eigen()?;
        let d = self.dim();
        let mut p = DMatrix::zeros(d, d);
        for (c, &lambda) in values.iter().enumerate() {
            if lambda > 0.0 {
                let col = vectors.column(c);
                p += col * col.adjoint();
            }
        }
        Ok(FockOperator { matrix: p })
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;

    fn add(self, rhs: &FockOperator) -> FockOperator {
        self.try_add(rhs).expect("operator cutoffs must agree")
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;

    fn sub(self, rhs: &FockOperator) -> FockOperator {
        self.try_sub(rhs).expect("operator cutoffs must agree")
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;

    fn mul(self, rhs: &FockOperator) -> FockOperator {
        self.try_mul(rhs).expect("operator cutoffs must agree")
    }
}

/// Trace norm `sum |lambda_i|` of a hermitian operator.
pub fn trace_norm(op: &FockOperator) -> Result<f64> {
    Ok(op.eigenvalues()?.iter().map(|l| l.abs()).sum())
}

/// Optimal equal-prior success probability for telling `rho0` from `rho1`:
/// `1/2 + ||rho0 - rho1||_1 / 4`.
pub fn helstrom_success(rho0: &FockOperator, rho1: &FockOperator) -> Result<f64> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::Dimension(format!(
            "helstrom: cutoffs {} and {}",
            rho0.cutoff(),
            rho1.cutoff()
        )));
    }
    rho0.ensure_density()?;
    rho1.ensure_density()?;
    Ok(0.5 + trace_norm(&rho0.try_sub(rho1)?)? / 4.0)
}

/// Truncated displacement `D(beta) = exp(beta a^dagger - conj(beta) a)`.
///
/// The exponential of the truncated generator is accurate on the low part of
/// the truncated space; callers should keep the states they displace well
/// below the cutoff.
pub fn displacement_matrix(beta: C64, cutoff: usize) -> FockOperator {
    let d = cutoff + 1;
    let mut gen = DMatrix::<C64>::zeros(d, d);
    for n in 0..cutoff {
        let s = ((n + 1) as f64).sqrt();
        gen[(n + 1, n)] = beta * s;
        gen[(n, n + 1)] = -beta.conj() * s;
    }
    FockOperator { matrix: gen.exp() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_vector, cutoff_for_energy};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn trace_norm_basics() {
        assert_eq!(trace_norm(&FockOperator::zeros(4)).unwrap(), 0.0);
        let rho = coherent_vector(c(0.7, 0.2), 12).projector();
        assert!(trace_norm(&(&rho - &rho)).unwrap() < 1e-15);
        let d = FockOperator::diagonal(&[0.5, -0.5]).unwrap();
        assert!((trace_norm(&d).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_norm_rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let op = FockOperator::from_matrix(m).unwrap();
        assert!(matches!(trace_norm(&op), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn helstrom_cases() {
        let rho = coherent_vector(c(0.4, 0.0), 10).projector();
        assert!((helstrom_success(&rho, &rho).unwrap() - 0.5).abs() < 1e-15);

        let zero = FockVector::basis(0, 3).unwrap().projector();
        let one = FockVector::basis(1, 3).unwrap().projector();
        assert!((helstrom_success(&zero, &one).unwrap() - 1.0).abs() < 1e-15);

        let n = cutoff_for_energy(1.0, 1e-14).unwrap() + 10;
        let vac = FockVector::basis(0, n).unwrap().projector();
        let coh = coherent_vector(c(1.0, 0.0), n).projector();
        // pure-state Helstrom: 1/2 + sqrt(1 - |<0|1>|^2) / 2
        let want = 0.5 + (1.0 - (-1.0f64).exp()).sqrt() / 2.0;
        assert!((helstrom_success(&vac, &coh).unwrap() - want).abs() < 1e-12);

        assert!(helstrom_success(&zero, &vac).is_err());
    }

    #[test]
    fn displacement_identity_at_zero() {
        let d = displacement_matrix(c(0.0, 0.0), 6);
        assert!((d.matrix() - DMatrix::identity(7, 7)).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn displacing_vacuum_gives_coherent_state() {
        let tol = 1e-12;
        let n = cutoff_for_energy(1.0, tol).unwrap();
        let beta = C64::from_polar(1.0, 0.9);
        let moved = displacement_matrix(beta, n).apply(&FockVector::basis(0, n).unwrap()).unwrap();
        let ov = moved.inner(&coherent_vector(beta, n)).unwrap().norm();
        assert!(ov >= 1.0 - 10.0 * tol, "overlap {ov}");
    }

    #[test]
    fn displacement_is_unitary_on_low_subspace() {
        let n = 40;
        let d = displacement_matrix(C64::from_polar(1.0, -0.4), n);
        let prod = d.adjoint().matrix() * d.matrix();
        let low = n / 2;
        for i in 0..=low {
            for j in 0..=low {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).norm() <= 1e-8, "({i},{j}) {}", prod[(i, j)]);
            }
        }
    }

    #[test]
    fn displacement_shifts_coherent_states() {
        let n = 60;
        let (alpha, beta) = (c(0.6, -0.3), c(-0.2, 0.8));
        let moved = displacement_matrix(beta, n).apply(&coherent_vector(alpha, n)).unwrap();
        let ov = moved.inner(&coherent_vector(alpha + beta, n)).unwrap().norm();
        assert!((ov - 1.0).abs() < 1e-10);
    }

    #[test]
    fn displacement_composition() {
        let n = 44;
        let beta = C64::from_polar(1.0, 1.3);
        let prod = displacement_matrix(beta, n).matrix() * displacement_matrix(-beta, n).matrix();
        for i in 0..=n / 2 {
            for j in 0..=n / 2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).norm() <= 1e-8);
            }
        }
    }

    fn random_hermitian(seed: &[f64], d: usize) -> FockOperator {
        let mut k = 0;
        let mut next = || {
            k += 1;
            seed[k % seed.len()] * ((k * 7919) % 13) as f64 / 13.0
        };
        let mut m = DMatrix::<C64>::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = c(next(), 0.0);
            for j in i + 1..d {
                let z = c(next(), next());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        FockOperator::from_matrix(m).unwrap()
    }

    proptest! {
        #[test]
        fn trace_norm_is_a_norm(
            a in prop::collection::vec(-1.0f64..1.0, 16),
            b in prop::collection::vec(-1.0f64..1.0, 16),
        ) {
            let x = random_hermitian(&a, 4);
            let y = random_hermitian(&b, 4);
            let nx = trace_norm(&x).unwrap();
            let ny = trace_norm(&y).unwrap();
            let nxy = trace_norm(&(&x + &y)).unwrap();
            prop_assert!(nx >= 0.0);
            prop_assert!(nxy <= nx + ny + 1e-12);
            prop_assert!((trace_norm(&x.scaled(c(-2.0, 0.0))).unwrap() - 2.0 * nx).abs() < 1e-10);
            if x.max_abs() > 1e-12 {
                prop_assert!(nx > 0.0);
            }
        }

        #[test]
        fn helstrom_in_range(r in 0.0f64..1.5, phi in 0.0f64..6.3, s in 0.0f64..1.5) {
            let rho0 = coherent_vector(C64::from_polar(r, phi), 30).projector();
            let rho1 = coherent_vector(C64::from_polar(s, 0.0), 30).projector();
            let p = helstrom_success(&rho0, &rho1).unwrap();
            prop_assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&p));
        }
    }
}
