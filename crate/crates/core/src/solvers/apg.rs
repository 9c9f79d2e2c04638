//! ℓ1-penalized least squares by accelerated proximal gradient.
//!
//! Minimizes `‖y − Dc‖² + Σ λᵢ|cᵢ|`. The smooth term has no ½ factor, so with
//! `L = λ_max(DᵀD)` the gradient step is `c − Dᵀ(Dc − y)/L` and the
//! proximal threshold is `λᵢ / (2L)`.

use nalgebra::DVector;

use super::{CoefficientVector, LinearOperator, SolveDiagnostics, SolverError};

const POWER_MAX_ITER: usize = 100;
const POWER_REL_TOL: f64 = 1e-10;

/// Elementwise `sign(x)·max(|x| − t, 0)`.
pub fn soft_threshold(x: &[f64], t: f64) -> Vec<f64> {
    x.iter().map(|&v| shrink(v, t)).collect()
}

#[inline]
fn shrink(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Per-atom ℓ1 weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    Uniform(f64),
    PerAtom(Vec<f64>),
}

impl Penalty {
    #[inline]
    fn weight(&self, i: usize) -> f64 {
        match self {
            Penalty::Uniform(l) => *l,
            Penalty::PerAtom(w) => w[i],
        }
    }

    fn validate(&self, m: usize) -> Result<(), SolverError> {
        let ok = |l: f64| l.is_finite() && l >= 0.0;
        match self {
            Penalty::Uniform(l) if !ok(*l) => Err(SolverError::InvalidParameter(format!("lambda {l}"))),
            Penalty::PerAtom(w) if w.len() != m => Err(SolverError::DimensionMismatch(format!(
                "penalty has {} weights for {m} atoms",
                w.len()
            ))),
            Penalty::PerAtom(w) if !w.iter().all(|&l| ok(l)) => {
                Err(SolverError::InvalidParameter("penalty weights must be finite and >= 0".into()))
            }
            _ => Ok(()),
        }
    }

    fn value(&self, c: &DVector<f64>) -> f64 {
        c.iter().enumerate().map(|(i, v)| self.weight(i) * v.abs()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApgOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ApgOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

/// Largest eigenvalue of `DᵀD` by power iteration.
pub fn lipschitz_constant<D: LinearOperator + ?Sized>(op: &D) -> f64 {
    let m = op.ncols();
    // Uneven start avoids being orthogonal to the dominant direction of symmetric problems.
    let mut v = DVector::from_fn(m, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = op.apply_transpose(&op.apply(&v));
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / next;
        let done = (next - estimate).abs() <= POWER_REL_TOL * next;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// An APG solve prepared for one dictionary: the Lipschitz constant is
/// computed once and reused across observations.
#[derive(Debug, Clone)]
pub struct ApgSolver<'a, D: LinearOperator + ?Sized> {
    op: &'a D,
    penalty: Penalty,
    options: ApgOptions,
    lipschitz: f64,
}

impl<'a, D: LinearOperator + ?Sized> ApgSolver<'a, D> {
    pub fn new(op: &'a D, penalty: Penalty, options: ApgOptions) -> Result<Self, SolverError> {
        penalty.validate(op.ncols())?;
        if !(options.tol >= 0.0) {
            return Err(SolverError::InvalidParameter(format!("tol {}", options.tol)));
        }
        let lipschitz = lipschitz_constant(op);
        Ok(Self {
            op,
            penalty,
            options,
            lipschitz,
        })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn objective(&self, y: &DVector<f64>, c: &DVector<f64>) -> (f64, f64) {
        let residual = (y - self.op.apply(c)).norm_squared();
        (residual + self.penalty.value(c), residual)
    }

    fn prox_step(&self, y: &DVector<f64>, from: &DVector<f64>, lip: f64) -> DVector<f64> {
        let grad = self.op.apply_transpose(&(self.op.apply(from) - y));
        let mut out = from - grad / lip;
        for (i, v) in out.iter_mut().enumerate() {
            *v = shrink(*v, self.penalty.weight(i) / (2.0 * lip));
        }
        out
    }

    pub fn solve(&self, y: &DVector<f64>) -> Result<(CoefficientVector, SolveDiagnostics), SolverError> {
        if y.len() != self.op.nrows() {
            return Err(SolverError::DimensionMismatch(format!(
                "observation has length {}, dictionary has {} rows",
                y.len(),
                self.op.nrows()
            )));
        }
        let m = self.op.ncols();
        let n_target = self.op.target_columns();
        if self.lipschitz == 0.0 {
            let c = DVector::zeros(m);
            let residual = y.norm_squared();
            return Ok((
                CoefficientVector::split(&c, n_target),
                SolveDiagnostics::direct(residual, 0.0),
            ));
        }

        let mut lip = self.lipschitz;
        let mut x = DVector::zeros(m);
        let mut z = x.clone();
        let mut t = 1.0_f64;
        let (mut obj, mut residual) = self.objective(y, &x);
        let mut converged = false;
        let mut iterations = 0;

        while iterations < self.options.max_iter {
            iterations += 1;
            let mut next = self.prox_step(y, &z, lip);
            let (mut next_obj, mut next_res) = self.objective(y, &next);
            if next_obj > obj {
                // Momentum restart: fall back to a plain proximal step from x,
                // backtracking on L if the power-iteration estimate was short.
                t = 1.0;
                loop {
                    next = self.prox_step(y, &x, lip);
                    (next_obj, next_res) = self.objective(y, &next);
                    if next_obj <= obj * (1.0 + 1e-15) || lip > 1e300 {
                        break;
                    }
                    lip *= 2.0;
                }
            }
            let delta = (&next - &x).amax();
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = &next + (&next - &x) * ((t - 1.0) / t_next);
            x = next;
            t = t_next;
            obj = next_obj;
            residual = next_res;
            if delta < self.options.tol {
                converged = true;
                break;
            }
        }

        Ok((
            CoefficientVector::split(&x, n_target),
            SolveDiagnostics {
                iterations,
                final_objective: obj,
                residual_norm_sq: residual,
                converged,
            },
        ))
    }
}

/// One-shot ℓ1 solve; see [`ApgSolver`] for reuse across observations.
pub fn solve_l1_apg<D: LinearOperator + ?Sized>(
    op: &D,
    y: &DVector<f64>,
    penalty: Penalty,
    options: ApgOptions,
) -> Result<(CoefficientVector, SolveDiagnostics), SolverError> {
    ApgSolver::new(op, penalty, options)?.solve(y)
}
