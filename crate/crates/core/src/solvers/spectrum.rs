//! Total coefficient variance of the OLS and ridge estimators.
//!
//! With `μⱼ` the eigenvalues of `TᵀT`, the OLS estimator has total variance
//! `σ² Σ 1/μⱼ` and the ridge estimator `σ² Σ μⱼ/(μⱼ + λ)²`.

use nalgebra::SymmetricEigen;

use super::{Dictionary, SINGULARITY_CUTOFF};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Eigenvalues of `TᵀT`, descending, negatives clamped to zero.
    pub eigenvalues: Vec<f64>,
    pub sigma_sq: f64,
    /// `f64::INFINITY` when the Gram matrix is numerically singular.
    pub tv_ols: f64,
    pub tv_ridge: f64,
    pub lambda_ridge: f64,
}

impl SpectrumReport {
    pub fn ols_is_finite(&self) -> bool {
        self.tv_ols.is_finite()
    }

    /// Ridge total variance at another penalty, reusing the eigenvalues.
    pub fn tv_ridge_at(&self, lambda_ridge: f64) -> f64 {
        tv_ridge(&self.eigenvalues, self.sigma_sq, lambda_ridge, self.tv_ols)
    }
}

/// Eigenvalues of `TᵀT` in descending order.
pub fn gram_eigenvalues(t: &Dictionary) -> Vec<f64> {
    let eig = SymmetricEigen::new(t.gram());
    let mut values: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

fn tv_ols(eigenvalues: &[f64], sigma_sq: f64) -> f64 {
    let max = eigenvalues.first().copied().unwrap_or(0.0);
    if !(max > 0.0) || eigenvalues.iter().any(|&v| v < SINGULARITY_CUTOFF * max) {
        return f64::INFINITY;
    }
    sigma_sq * eigenvalues.iter().map(|&v| 1.0 / v).sum::<f64>()
}

fn tv_ridge(eigenvalues: &[f64], sigma_sq: f64, lambda: f64, ols: f64) -> f64 {
    if lambda == 0.0 {
        return ols;
    }
    sigma_sq * eigenvalues.iter().map(|&v| v / (v + lambda).powi(2)).sum::<f64>()
}

pub fn total_variance(t: &Dictionary, sigma_sq: f64, lambda_ridge: f64) -> SpectrumReport {
    let eigenvalues = gram_eigenvalues(t);
    let ols = tv_ols(&eigenvalues, sigma_sq);
    let ridge = tv_ridge(&eigenvalues, sigma_sq, lambda_ridge, ols);
    SpectrumReport {
        eigenvalues,
        sigma_sq,
        tv_ols: ols,
        tv_ridge: ridge,
        lambda_ridge,
    }
}
