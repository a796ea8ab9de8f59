use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

use super::{FockOperator, FockVector};

/// State vector on a tensor product of truncated modes. The first factor is
/// the most significant index.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeVector {
    dims: Vec<usize>,
    amps: DVector<C64>,
}

/// Operator on a tensor product of truncated modes.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeOperator {
    dims: Vec<usize>,
    matrix: DMatrix<C64>,
}

pub fn tensor_vectors(factors: &[&FockVector]) -> Result<CompositeVector> {
    if factors.is_empty() {
        return Err(Error::Dimension("tensor product of zero factors".into()));
    }
    let mut amps = DVector::from_element(1, C64::new(1.0, 0.0));
    for f in factors {
        let next = DVector::from_column_slice(f.amps());
        amps = amps.kronecker(&next);
    }
    Ok(CompositeVector { dims: factors.iter().map(|f| f.dim()).collect(), amps })
}

pub fn tensor_operators(factors: &[&FockOperator]) -> Result<CompositeOperator> {
    if factors.is_empty() {
        return Err(Error::Dimension("tensor product of zero factors".into()));
    }
    let mut matrix = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for f in factors {
        matrix = matrix.kronecker(f.matrix());
    }
    Ok(CompositeOperator { dims: factors.iter().map(|f| f.dim()).collect(), matrix })
}

/// Traces out factor `traced`.
pub fn partial_trace(op: &CompositeOperator, traced: usize) -> Result<CompositeOperator> {
    op.partial_trace(traced)
}

impl CompositeVector {
    /// Bipartite vector from its coefficient matrix `C[i][j]` (amplitude of
    /// `|i> (x) |j>`).
    pub fn from_coefficients(coeffs: &DMatrix<C64>) -> Self {
        let (r, c) = coeffs.shape();
        // row-major flattening: index = i * c + j
        let amps = DVector::from_iterator(r * c, (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| coeffs[(i, j)]));
        CompositeVector { dims: vec![r, c], amps }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn inner(&self, other: &CompositeVector) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!("inner product of {:?} and {:?}", self.dims, other.dims)));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    fn require_bipartite(&self) -> Result<(usize, usize)> {
        match self.dims[..] {
            [a, b] => Ok((a, b)),
            _ => Err(Error::Dimension(format!("expected two factors, got {:?}", self.dims))),
        }
    }

    /// Coefficient matrix of a bipartite vector.
    pub fn coefficients(&self) -> Result<DMatrix<C64>> {
        let (a, b) = self.require_bipartite()?;
        Ok(DMatrix::from_fn(a, b, |i, j| self.amps[i * b + j]))
    }

    /// Reduced density operator on factor `keep` of a bipartite vector.
    pub fn reduced(&self, keep: usize) -> Result<FockOperator> {
        let c = self.coefficients()?;
        let m = match keep {
            0 => &c * c.adjoint(),
            1 => c.transpose() * c.conjugate(),
            _ => return Err(Error::Dimension(format!("no factor {keep} in a bipartite state"))),
        };
        FockOperator::from_matrix(m)
    }

    /// Applies `op` to factor `factor` of a bipartite vector.
    pub fn apply_local(&self, op: &FockOperator, factor: usize) -> Result<CompositeVector> {
        let (a, b) = self.require_bipartite()?;
        let c = self.coefficients()?;
        let out = match factor {
            0 if op.dim() == a => op.matrix() * c,
            1 if op.dim() == b => c * op.matrix().transpose(),
            _ => return Err(Error::Dimension(format!("cannot apply dim {} operator to factor {factor} of {:?}", op.dim(), self.dims))),
        };
        Ok(CompositeVector::from_coefficients(&out))
    }

    /// `|self><self|`. Memory grows as the square of the total dimension.
    pub fn projector(&self) -> CompositeOperator {
        CompositeOperator { dims: self.dims.clone(), matrix: &self.amps * self.amps.adjoint() }
    }
}

impl CompositeOperator {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn try_sub(&self, other: &CompositeOperator) -> Result<CompositeOperator> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!("difference of {:?} and {:?}", self.dims, other.dims)));
        }
        Ok(CompositeOperator { dims: self.dims.clone(), matrix: &self.matrix - &other.matrix })
    }

    /// Views the operator on the full product space as a single-mode-style
    /// operator (dimension = product of factor dimensions).
    pub fn flattened(&self) -> FockOperator {
        FockOperator::from_matrix_unchecked(self.matrix.clone())
    }

    /// Converts a one-factor composite back to a [`FockOperator`].
    pub fn into_single(self) -> Result<FockOperator> {
        if self.dims.len() != 1 {
            return Err(Error::Dimension(format!("{} factors remain", self.dims.len())));
        }
        FockOperator::from_matrix(self.matrix)
    }

    pub fn partial_trace(&self, traced: usize) -> Result<CompositeOperator> {
        if traced >= self.dims.len() {
            return Err(Error::Dimension(format!("no factor {traced} in {:?}", self.dims)));
        }
        if self.dims.len() == 1 {
            return Err(Error::Dimension("cannot trace out the only factor".into()));
        }
        let inner = self.dims[traced];
        let left: usize = self.dims[..traced].iter().product();
        let right: usize = self.dims[traced + 1..].iter().product();
        let d = left * right;
        let idx = |l: usize, a: usize, r: usize| (l * inner + a) * right + r;
        let out = DMatrix::from_fn(d, d, |row, col| {
            let (l, r) = (row / right, row % right);
            let (l2, r2) = (col / right, col % right);
            (0..inner).map(|a| self.matrix[(idx(l, a, r), idx(l2, a, r2))]).sum()
        });
        let mut dims = self.dims.clone();
        dims.remove(traced);
        Ok(CompositeOperator { dims, matrix: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_vector;

    #[test]
    fn trace_out_second_factor() {
        let zero = FockVector::basis(0, 2).unwrap().projector();
        let one = FockVector::basis(1, 2).unwrap().projector();
        let joint = tensor_operators(&[&zero, &one]).unwrap();
        let red = partial_trace(&joint, 1).unwrap().into_single().unwrap();
        assert_eq!(red, zero);
        let other = partial_trace(&joint, 0).unwrap().into_single().unwrap();
        assert_eq!(other, one);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let a = coherent_vector(C64::new(0.3, 0.4), 5).projector();
        let b = coherent_vector(C64::new(-0.5, 0.1), 3).projector();
        let c = FockOperator::diagonal(&[0.5, 0.3, 0.2]).unwrap();
        let joint = tensor_operators(&[&a, &b, &c]).unwrap();
        for k in 0..3 {
            let red = partial_trace(&joint, k).unwrap();
            assert!((red.trace() - joint.trace()).norm() < 1e-14);
        }
        // tr_B (A (x) B) = A tr(B)
        let ab = tensor_operators(&[&a, &c]).unwrap();
        let red = partial_trace(&ab, 1).unwrap().into_single().unwrap();
        let want = a.scaled(c.trace());
        assert!((red.matrix() - want.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn vector_reduction_matches_operator_route() {
        let u = coherent_vector(C64::new(0.3, 0.0), 4);
        let v = coherent_vector(C64::new(0.0, 0.5), 4);
        let w = coherent_vector(C64::new(-0.2, 0.1), 4);
        // entangled combination
        let c = DMatrix::from_fn(5, 5, |i, j| {
            (u.amps()[i] * v.amps()[j] + w.amps()[i] * u.amps()[j]) * 0.6
        });
        let psi = CompositeVector::from_coefficients(&c);
        let proj = psi.projector();
        for keep in 0..2 {
            let via_vec = psi.reduced(keep).unwrap();
            let via_op = partial_trace(&proj, 1 - keep).unwrap().into_single().unwrap();
            assert!((via_vec.matrix() - via_op.matrix()).iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn tensor_vector_layout() {
        let a = FockVector::basis(1, 2).unwrap();
        let b = FockVector::basis(2, 3).unwrap();
        let ab = tensor_vectors(&[&a, &b]).unwrap();
        assert_eq!(ab.dims(), &[3, 4]);
        assert_eq!(ab.amps()[4 + 2], C64::new(1.0, 0.0));
        assert_eq!(ab.coefficients().unwrap()[(1, 2)], C64::new(1.0, 0.0));
    }

    #[test]
    fn local_application() {
        let a = coherent_vector(C64::new(0.3, 0.0), 6);
        let b = coherent_vector(C64::new(0.0, 0.2), 6);
        let ab = tensor_vectors(&[&a, &b]).unwrap();
        let op = crate::fock::displacement_matrix(C64::new(0.1, 0.1), 6);
        let left = ab.apply_local(&op, 0).unwrap();
        let want = tensor_vectors(&[&op.apply(&a).unwrap(), &b]).unwrap();
        assert!((left.amps() - want.amps()).norm() < 1e-14);
        let right = ab.apply_local(&op, 1).unwrap();
        let want = tensor_vectors(&[&a, &op.apply(&b).unwrap()]).unwrap();
        assert!((right.amps() - want.amps()).norm() < 1e-14);
    }

    #[test]
    fn dimension_errors() {
        let a = FockOperator::identity(1);
        let joint = tensor_operators(&[&a, &a]).unwrap();
        assert!(partial_trace(&joint, 2).is_err());
        assert!(tensor_operators(&[]).is_err());
        let single = tensor_operators(&[&a]).unwrap();
        assert!(single.partial_trace(0).is_err());
    }
}
