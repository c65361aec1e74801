//! The two-sided Dirichlet-to-Neumann operator restricted to the discrete
//! subspace S, shared by all backends.

use nalgebra::{DMatrix, DVector};

use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct DtnOperator {
    /// Symmetric matrix in the coordinates of `basis`.
    pub matrix: DMatrix<f64>,
    /// Node values of an S basis, orthonormal in the quadrature pairing.
    pub basis: DMatrix<f64>,
    pub weights: DVector<f64>,
    /// Relative Frobenius asymmetry before symmetrization.
    pub asymmetry: f64,
}

impl DtnOperator {
    /// Symmetrizes `raw` and records its asymmetry.
    pub fn from_raw(raw: DMatrix<f64>, basis: DMatrix<f64>, weights: DVector<f64>) -> Self {
        let asymmetry = linalg::frobenius_asymmetry(&raw);
        let matrix = 0.5 * (&raw + raw.transpose());
        Self {
            matrix,
            basis,
            weights,
            asymmetry,
        }
    }

    pub fn empty(nodes: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(0, 0),
            basis: DMatrix::zeros(nodes, 0),
            weights: DVector::from_element(nodes, 1.0),
            asymmetry: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn coordinates(&self, f: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * f.component_mul(&self.weights)
    }

    /// `Lambda f` for node data `f`, after projecting `f` onto S.
    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.basis * (&self.matrix * self.coordinates(f))
    }

    /// `<Lambda f, f>` in the quadrature pairing.
    pub fn quadratic_form(&self, f: &DVector<f64>) -> f64 {
        let c = self.coordinates(f);
        c.dot(&(&self.matrix * &c))
    }

    /// Ascending eigenvalues and the matching node-space eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let (values, coords) = linalg::sym_eigen_sorted(&self.matrix);
        (values, &self.basis * coords)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigen_sorted(&self.matrix).0
    }
}

/// Counts of eigenvalues below `-tau` and within `[-tau, tau]`.
pub fn count_signs(values: &[f64], tau: f64) -> (usize, usize) {
    let negative = values.iter().filter(|&&s| s < -tau).count();
    let zero = values.iter().filter(|&&s| s.abs() <= tau).count();
    (negative, zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_matches_matrix_on_basis() {
        let basis = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let raw = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -3.0]);
        let op = DtnOperator::from_raw(raw, basis, DVector::from_element(3, 1.0));
        assert_eq!(op.asymmetry, 0.0);
        let f = DVector::from_vec(vec![1.0, 1.0, 5.0]);
        assert_eq!(op.apply(&f), DVector::from_vec(vec![3.0, -1.0, 0.0]));
        assert_eq!(op.quadratic_form(&f), 2.0);
        assert_eq!(count_signs(&op.eigenvalues(), 1e-9), (1, 0));
    }
}
