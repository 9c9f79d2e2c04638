//! Regularized least-squares solvers over template dictionaries.
//!
//! Three estimators share the [`LinearOperator`] abstraction:
//! ordinary least squares, ridge regression (closed form through a Cholesky
//! factorization of the regularized normal equations) and an
//! ℓ1-penalized solve by accelerated proximal gradient. The conditioning
//! diagnostics in [`spectrum`] compare the total coefficient variance of the
//! first two.

mod apg;
mod least_squares;
pub mod spectrum;

pub use apg::{lipschitz_constant, soft_threshold, solve_l1_apg, ApgOptions, ApgSolver, Penalty};
pub use least_squares::{
    residual_lower_bound, solve_ols, solve_ols_unchecked, solve_ridge, LeastSquaresBound,
    RidgeSolver,
};
pub use spectrum::{total_variance, SpectrumReport};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Eigenvalues of the Gram matrix below this fraction of the largest one count as zero.
pub const SINGULARITY_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("normal equations are singular (min eigenvalue {min_eigenvalue:e}, max {max_eigenvalue:e})")]
    SingularSystem {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Matrix-free access to a dictionary `D`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `D x`
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `Dᵀ r`
    fn apply_transpose(&self, r: &DVector<f64>) -> DVector<f64>;

    /// Number of leading columns that are target atoms; the remainder are
    /// occlusion atoms.
    fn target_columns(&self) -> usize {
        self.ncols()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows(), self.ncols());
        let mut unit = DVector::zeros(self.ncols());
        for j in 0..self.ncols() {
            unit[j] = 1.0;
            out.set_column(j, &self.apply(&unit));
            unit[j] = 0.0;
        }
        out
    }
}

/// A `d × m` dictionary whose columns are atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    columns: DMatrix<f64>,
}

impl Dictionary {
    pub fn new(columns: DMatrix<f64>) -> Result<Self, SolverError> {
        if columns.nrows() == 0 || columns.ncols() == 0 {
            return Err(SolverError::InvalidDictionary(format!(
                "shape {}x{} is empty",
                columns.nrows(),
                columns.ncols()
            )));
        }
        if columns.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::InvalidDictionary("non-finite entry".into()));
        }
        Ok(Self { columns })
    }

    /// Builds a dictionary with every column scaled to unit Euclidean norm.
    pub fn normalized(mut columns: DMatrix<f64>) -> Result<Self, SolverError> {
        for (j, mut col) in columns.column_iter_mut().enumerate() {
            let norm = col.norm();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(SolverError::InvalidDictionary(format!(
                    "column {j} cannot be normalized"
                )));
            }
            col /= norm;
        }
        Self::new(columns)
    }

    pub fn from_columns(cols: &[DVector<f64>]) -> Result<Self, SolverError> {
        if cols.is_empty() {
            return Err(SolverError::InvalidDictionary("no columns".into()));
        }
        Self::new(DMatrix::from_columns(cols))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.columns
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn atoms(&self) -> usize {
        self.columns.ncols()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.columns.tr_mul(&self.columns)
    }

    pub(crate) fn check_observation(&self, y: &DVector<f64>) -> Result<(), SolverError> {
        if y.len() != self.dim() {
            return Err(SolverError::DimensionMismatch(format!(
                "observation has length {}, dictionary has {} rows",
                y.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

impl LinearOperator for Dictionary {
    fn nrows(&self) -> usize {
        self.columns.nrows()
    }

    fn ncols(&self) -> usize {
        self.columns.ncols()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.columns * x
    }

    fn apply_transpose(&self, r: &DVector<f64>) -> DVector<f64> {
        self.columns.tr_mul(r)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.columns.clone()
    }
}

/// The concatenation `[T, I]` of target atoms with one occlusion atom per
/// pixel. The identity block is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDictionary {
    targets: Dictionary,
}

impl AugmentedDictionary {
    pub fn new(targets: Dictionary) -> Self {
        Self { targets }
    }

    pub fn targets(&self) -> &Dictionary {
        &self.targets
    }
}

impl LinearOperator for AugmentedDictionary {
    fn nrows(&self) -> usize {
        self.targets.dim()
    }

    fn ncols(&self) -> usize {
        self.targets.atoms() + self.targets.dim()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.targets.atoms();
        let alpha = x.rows(0, n);
        let e = x.rows(n, self.targets.dim());
        self.targets.matrix() * alpha + e
    }

    fn apply_transpose(&self, r: &DVector<f64>) -> DVector<f64> {
        let n = self.targets.atoms();
        let d = self.targets.dim();
        let mut out = DVector::zeros(n + d);
        out.rows_mut(0, n).copy_from(&self.targets.matrix().tr_mul(r));
        out.rows_mut(n, d).copy_from(r);
        out
    }

    fn target_columns(&self) -> usize {
        self.targets.atoms()
    }
}

/// Solution of a regularized least-squares problem split into target
/// coefficients `alpha` and occlusion coefficients `e` (empty for
/// non-augmented dictionaries).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub alpha: DVector<f64>,
    pub e: DVector<f64>,
}

impl CoefficientVector {
    pub fn target_only(alpha: DVector<f64>) -> Self {
        Self {
            alpha,
            e: DVector::zeros(0),
        }
    }

    /// Splits a joint vector `c = [alpha; e]` after its first `n_target` entries.
    pub fn split(c: &DVector<f64>, n_target: usize) -> Self {
        Self {
            alpha: c.rows(0, n_target).into_owned(),
            e: c.rows(n_target, c.len() - n_target).into_owned(),
        }
    }

    pub fn joint(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.alpha.len() + self.e.len());
        out.rows_mut(0, self.alpha.len()).copy_from(&self.alpha);
        out.rows_mut(self.alpha.len(), self.e.len()).copy_from(&self.e);
        out
    }

    pub fn is_augmented(&self) -> bool {
        !self.e.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.alpha
            .iter()
            .chain(self.e.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.iter().chain(self.e.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub final_objective: f64,
    /// `‖y − Dc‖²`
    pub residual_norm_sq: f64,
    pub converged: bool,
}

impl SolveDiagnostics {
    pub(crate) fn direct(residual_norm_sq: f64, penalty: f64) -> Self {
        Self {
            iterations: 1,
            final_objective: residual_norm_sq + penalty,
            residual_norm_sq,
            converged: true,
        }
    }
}

/// `‖y − T alpha‖²`, the reconstruction error in the target subspace.
pub fn target_residual(t: &Dictionary, y: &DVector<f64>, alpha: &DVector<f64>) -> f64 {
    (y - t.matrix() * alpha).norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_columns_have_unit_norm() {
        let m = DMatrix::from_row_slice(3, 2, &[3.0, 1.0, 4.0, 1.0, 0.0, 1.0]);
        let d = Dictionary::normalized(m).unwrap();
        for col in d.matrix().column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_zero_column_and_nan() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!(Dictionary::normalized(m).is_err());
        let m = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(Dictionary::new(m).is_err());
    }

    #[test]
    fn augmented_operator_matches_dense_concatenation() {
        let t = Dictionary::new(DMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.1 - 0.4)).unwrap();
        let aug = AugmentedDictionary::new(t.clone());
        let dense = aug.to_dense();
        assert_eq!(dense.ncols(), 7);
        for i in 0..4 {
            for k in 0..4 {
                assert_eq!(dense[(k, 3 + i)], if k == i { 1.0 } else { 0.0 });
            }
        }
        let x = DVector::from_fn(7, |i, _| i as f64 - 2.5);
        assert_eq!(aug.apply(&x), &dense * &x);
        let r = DVector::from_fn(4, |i, _| 1.0 / (i as f64 + 1.0));
        let lhs = aug.apply_transpose(&r);
        let rhs = dense.tr_mul(&r);
        assert!((lhs - rhs).amax() < 1e-15);
    }

    #[test]
    fn split_and_join_coefficients() {
        let c = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let cv = CoefficientVector::split(&c, 2);
        assert_eq!(cv.alpha.as_slice(), &[1.0, 2.0]);
        assert_eq!(cv.e.as_slice(), &[3.0, 4.0, 5.0]);
        assert_eq!(cv.joint(), c);
        assert_eq!(cv.max_abs(), 5.0);
    }
}
