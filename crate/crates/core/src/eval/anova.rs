use serde::{Deserialize, Serialize};

use super::EvalError;

/// Mean, sample standard deviation (divisor `n − 1`) and size of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl GroupSummary {
    pub fn new(label: impl Into<String>, mean: f64, std: f64, n: usize) -> Self {
        Self {
            label: label.into(),
            mean,
            std,
            n,
        }
    }

    pub fn from_samples(label: impl Into<String>, samples: &[f64]) -> Result<Self, EvalError> {
        let label = label.into();
        if samples.len() < 2 {
            return Err(EvalError::TooFewSamples { label, n: samples.len() });
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
        Ok(Self {
            label,
            mean,
            std: (ss / (n - 1.0)).sqrt(),
            n: samples.len(),
        })
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |reason: String| {
            Err(EvalError::InvalidSummary {
                label: self.label.clone(),
                reason,
            })
        };
        if self.n < 2 {
            return Err(EvalError::TooFewSamples {
                label: self.label.clone(),
                n: self.n,
            });
        }
        if !self.mean.is_finite() {
            return bad(format!("mean {}", self.mean));
        }
        if !(self.std >= 0.0 && self.std.is_finite()) {
            return bad(format!("std {}", self.std));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    /// `MSB / MSW`; `+∞` when the within-group variance vanishes but the
    /// means differ, `0` when every value is identical.
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub msb: f64,
    pub msw: f64,
    pub grand_mean: f64,
    /// Set when `MSW = 0`; `f` then carries the conventional value above.
    pub degenerate_variance: bool,
}

impl AnovaResult {
    pub fn triple(&self) -> (f64, usize, usize) {
        (self.f, self.df_between, self.df_within)
    }
}

/// Shared core: per-group `(n, mean, within sum of squares)`.
fn decompose(groups: &[(usize, f64, f64)], scale: f64) -> AnovaResult {
    let total: usize = groups.iter().map(|g| g.0).sum();
    let grand_mean = groups.iter().map(|&(n, m, _)| n as f64 * m).sum::<f64>() / total as f64;
    let ssb: f64 = groups.iter().map(|&(n, m, _)| n as f64 * (m - grand_mean).powi(2)).sum();
    let ssw: f64 = groups.iter().map(|g| g.2).sum();
    let df_between = groups.len() - 1;
    let df_within = total - groups.len();
    let msb = ssb / df_between as f64;
    let msw = ssw / df_within as f64;
    // Rounding noise far below the data scale counts as exactly zero.
    let tiny = 1e-28 * scale.max(f64::MIN_POSITIVE);
    let degenerate_variance = ssw <= tiny;
    let f = if degenerate_variance {
        if ssb <= tiny {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        msb / msw
    };
    AnovaResult {
        f,
        df_between,
        df_within,
        msb,
        msw: if degenerate_variance { 0.0 } else { msw },
        grand_mean,
        degenerate_variance,
    }
}

/// One-way ANOVA on raw samples.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult, EvalError> {
    if groups.len() < 2 {
        return Err(EvalError::TooFewGroups(groups.len()));
    }
    let mut parts = Vec::with_capacity(groups.len());
    let mut scale = 0.0;
    for (i, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(EvalError::TooFewSamples {
                label: format!("group {i}"),
                n: g.len(),
            });
        }
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        parts.push((g.len(), mean, g.iter().map(|x| (x - mean).powi(2)).sum::<f64>()));
        scale += g.iter().map(|x| x * x).sum::<f64>();
    }
    Ok(decompose(&parts, scale))
}

/// One-way ANOVA from per-group mean, std and size.
pub fn anova_from_summary(groups: &[GroupSummary]) -> Result<AnovaResult, EvalError> {
    if groups.len() < 2 {
        return Err(EvalError::TooFewGroups(groups.len()));
    }
    for g in groups {
        g.validate()?;
    }
    let parts: Vec<_> = groups
        .iter()
        .map(|g| (g.n, g.mean, (g.n - 1) as f64 * g.std * g.std))
        .collect();
    let scale = groups.iter().map(|g| g.n as f64 * (g.mean * g.mean + g.std * g.std)).sum();
    Ok(decompose(&parts, scale))
}
