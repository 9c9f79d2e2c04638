use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::{target_residual, CoefficientVector, Dictionary, SolveDiagnostics, SolverError, SINGULARITY_CUTOFF};

/// Ridge fallback used when the OLS bound hits an exactly colinear dictionary.
const BOUND_FALLBACK_LAMBDA: f64 = 1e-8;

#[derive(Debug, Clone)]
enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    /// Spectral fallback: `G⁻¹ = V diag(inv) Vᵀ`.
    Spectral {
        vectors: DMatrix<f64>,
        inv: DVector<f64>,
    },
    /// Thin QR of `T` itself, `T = QR`.
    Qr { q: DMatrix<f64>, r: DMatrix<f64> },
}

/// A factorization of `TᵀT + λI` that can be reused across many observations
/// against the same dictionary.
#[derive(Debug, Clone)]
pub struct RidgeSolver<'a> {
    t: &'a Dictionary,
    lambda: f64,
    factor: Factor,
}

/// Returns `Err(SingularSystem)` when the smallest eigenvalue of `gram`
/// falls below the singularity cutoff relative to the largest.
fn check_rank(gram: &DMatrix<f64>) -> Result<(), SolverError> {
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min < SINGULARITY_CUTOFF * max {
        return Err(SolverError::SingularSystem {
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    Ok(())
}

impl<'a> RidgeSolver<'a> {
    pub fn new(t: &'a Dictionary, lambda: f64) -> Result<Self, SolverError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(SolverError::InvalidParameter(format!(
                "lambda_ridge must be finite and >= 0, got {lambda}"
            )));
        }
        let mut gram = t.gram();
        if lambda == 0.0 {
            check_rank(&gram)?;
        }
        for i in 0..gram.nrows() {
            gram[(i, i)] += lambda;
        }
        let factor = match Cholesky::new(gram.clone()) {
            Some(chol) => Factor::Cholesky(chol),
            None => {
                let eig = SymmetricEigen::new(gram);
                let max = eig.eigenvalues.max();
                let inv = eig.eigenvalues.map(|v| {
                    if v > SINGULARITY_CUTOFF * max {
                        1.0 / v
                    } else {
                        0.0
                    }
                });
                Factor::Spectral {
                    vectors: eig.eigenvectors,
                    inv,
                }
            }
        };
        Ok(Self { t, lambda, factor })
    }

    /// Least squares through a thin QR of `T`, without the rank check.
    /// Near-colinear dictionaries yield arbitrarily large coefficients; only
    /// an exactly zero diagonal of `R` is reported as singular. Working on `T`
    /// rather than `TᵀT` keeps rounding-level differences between templates
    /// that forming the Gram matrix would erase.
    pub fn unchecked_ols(t: &'a Dictionary) -> Result<Self, SolverError> {
        if t.dim() < t.atoms() {
            return Err(SolverError::SingularSystem {
                min_eigenvalue: 0.0,
                max_eigenvalue: f64::NAN,
            });
        }
        let qr = t.matrix().clone().qr();
        let (q, r) = (qr.q(), qr.r());
        let diag = r.diagonal().map(|v| v * v);
        if diag.iter().any(|&v| v == 0.0) {
            return Err(SolverError::SingularSystem {
                min_eigenvalue: 0.0,
                max_eigenvalue: diag.max(),
            });
        }
        Ok(Self {
            t,
            lambda: 0.0,
            factor: Factor::Qr { q, r },
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coefficients(&self, y: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        self.t.check_observation(y)?;
        if let Factor::Qr { q, r } = &self.factor {
            return r.solve_upper_triangular(&q.tr_mul(y)).ok_or(SolverError::SingularSystem {
                min_eigenvalue: 0.0,
                max_eigenvalue: f64::NAN,
            });
        }
        let rhs = self.t.matrix().tr_mul(y);
        let alpha = match &self.factor {
            Factor::Cholesky(chol) => chol.solve(&rhs),
            Factor::Spectral { vectors, inv } => {
                let proj = vectors.tr_mul(&rhs).component_mul(inv);
                vectors * proj
            }
            Factor::Qr { .. } => unreachable!("handled above"),
        };
        Ok(alpha)
    }

    pub fn solve(&self, y: &DVector<f64>) -> Result<(CoefficientVector, SolveDiagnostics), SolverError> {
        let alpha = self.coefficients(y)?;
        let residual = target_residual(self.t, y, &alpha);
        let penalty = self.lambda * alpha.norm_squared();
        Ok((CoefficientVector::target_only(alpha), SolveDiagnostics::direct(residual, penalty)))
    }
}

/// Ordinary least squares through the Cholesky-factored normal equations.
pub fn solve_ols(t: &Dictionary, y: &DVector<f64>) -> Result<(CoefficientVector, SolveDiagnostics), SolverError> {
    t.check_observation(y)?;
    RidgeSolver::new(t, 0.0)?.solve(y)
}

/// OLS without the rank check; see [`RidgeSolver::unchecked_ols`].
pub fn solve_ols_unchecked(
    t: &Dictionary,
    y: &DVector<f64>,
) -> Result<(CoefficientVector, SolveDiagnostics), SolverError> {
    t.check_observation(y)?;
    RidgeSolver::unchecked_ols(t)?.solve(y)
}

/// Closed-form ridge regression `(TᵀT + λI)⁻¹ Tᵀ y`.
pub fn solve_ridge(
    t: &Dictionary,
    y: &DVector<f64>,
    lambda_ridge: f64,
) -> Result<(CoefficientVector, SolveDiagnostics), SolverError> {
    t.check_observation(y)?;
    RidgeSolver::new(t, lambda_ridge)?.solve(y)
}

/// Least-squares residual of observations against a fixed dictionary: a
/// lower bound on `‖y − Tα‖²` for every `α`.
#[derive(Debug, Clone)]
pub struct LeastSquaresBound<'a> {
    solver: RidgeSolver<'a>,
}

impl<'a> LeastSquaresBound<'a> {
    pub fn new(t: &'a Dictionary) -> Self {
        let solver = RidgeSolver::new(t, 0.0)
            .or_else(|_| RidgeSolver::new(t, BOUND_FALLBACK_LAMBDA))
            .expect("positive ridge penalty always factors");
        Self { solver }
    }

    pub fn bound(&self, y: &DVector<f64>) -> Result<f64, SolverError> {
        let alpha = self.solver.coefficients(y)?;
        Ok(target_residual(self.solver.t, y, &alpha))
    }
}

/// `‖y − Tα_OLS‖²`, falling back to a tiny ridge penalty on singular dictionaries.
pub fn residual_lower_bound(t: &Dictionary, y: &DVector<f64>) -> Result<f64, SolverError> {
    LeastSquaresBound::new(t).bound(y)
}
