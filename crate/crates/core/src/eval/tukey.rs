use super::anova::{anova_from_summary, GroupSummary};
use super::qtable::studentized_range_quantile;
use super::EvalError;

#[derive(Debug, Clone, PartialEq)]
pub struct TukeyResult {
    /// `significant[i][j]`: groups `i` and `j` differ at the chosen level.
    pub significant: Vec<Vec<bool>>,
    /// Critical mean difference per pair.
    pub critical: Vec<Vec<f64>>,
    pub q: f64,
    pub msw: f64,
    pub df_within: usize,
}

/// Tukey HSD. With equal group sizes the critical difference is
/// `q·sqrt(MSW/n)`; unequal sizes use the Tukey–Kramer harmonic form,
/// which reduces to the same value when sizes agree.
pub fn tukey_hsd(groups: &[GroupSummary], alpha: f64) -> Result<TukeyResult, EvalError> {
    if groups.len() == 1 {
        groups[0].validate()?;
        return Ok(TukeyResult {
            significant: vec![vec![false]],
            critical: vec![vec![0.0]],
            q: 0.0,
            msw: groups[0].std * groups[0].std,
            df_within: groups[0].n - 1,
        });
    }
    let anova = anova_from_summary(groups)?;
    let q = studentized_range_quantile(groups.len(), anova.df_within, alpha)?;
    let k = groups.len();
    let mut significant = vec![vec![false; k]; k];
    let mut critical = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let harmonic = 0.5 * (1.0 / groups[i].n as f64 + 1.0 / groups[j].n as f64);
            let crit = q * (anova.msw * harmonic).sqrt();
            critical[i][j] = crit;
            significant[i][j] = (groups[i].mean - groups[j].mean).abs() > crit;
        }
    }
    Ok(TukeyResult {
        significant,
        critical,
        q,
        msw: anova.msw,
        df_within: anova.df_within,
    })
}

pub fn pairwise_significant(groups: &[GroupSummary], alpha: f64) -> Result<Vec<Vec<bool>>, EvalError> {
    tukey_hsd(groups, alpha).map(|t| t.significant)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(means: [f64; 4], stds: [f64; 4]) -> Vec<GroupSummary> {
        ["RR", "L1_APG", "L1_WMB", "L1_ORIGINAL"]
            .iter()
            .zip(means.iter().zip(stds))
            .map(|(l, (&m, s))| GroupSummary::new(*l, m, s, 10))
            .collect()
    }

    #[test]
    fn deer_row_pairs() {
        let g = row([6.56, 35.99, 100.37, 85.84], [0.75, 36.68, 42.5, 29.04]);
        let t = tukey_hsd(&g, 0.05).unwrap();
        assert_eq!(t.df_within, 36);
        assert_eq!(t.q, 3.8088);
        assert!((t.critical[0][1] - 38.07).abs() < 0.01);
        assert!(!t.significant[0][1]);
        assert!(t.significant[0][2]);
        assert!(t.significant[0][3]);
    }

    #[test]
    fn dollar_row_pairs() {
        let g = row([2.29, 13.42, 14.41, 13.56], [0.65, 0.25, 3.4, 0.24]);
        let s = pairwise_significant(&g, 0.05).unwrap();
        assert!(s[0][1] && s[0][2] && s[0][3]);
        assert!(!s[1][2] && !s[1][3] && !s[2][3]);
    }

    #[test]
    fn identical_groups_not_significant() {
        let g = vec![GroupSummary::new("a", 1.0, 0.5, 10), GroupSummary::new("b", 1.0, 0.5, 10)];
        assert_eq!(pairwise_significant(&g, 0.05).unwrap(), vec![vec![false; 2]; 2]);
        assert!(matches!(pairwise_significant(&g, 0.1), Err(EvalError::UnsupportedAlpha(_))));
    }

    #[test]
    fn matrix_is_symmetric_and_kramer_reduces_to_hsd() {
        let g = vec![
            GroupSummary::new("a", 1.0, 0.5, 10),
            GroupSummary::new("b", 1.6, 0.7, 10),
            GroupSummary::new("c", 3.0, 0.2, 10),
        ];
        let t = tukey_hsd(&g, 0.05).unwrap();
        let hsd = t.q * (t.msw / 10.0).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.significant[i][j], t.significant[j][i]);
                if i != j {
                    assert!((t.critical[i][j] - hsd).abs() < 1e-12);
                }
            }
        }
    }
}
