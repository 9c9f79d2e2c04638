use proptest::prelude::*;
use statrs::statistics::Statistics;

use trackbench::eval::{
    anova_from_summary, anova_oneway, assign_ranks, studentized_range_quantile, tukey_hsd, Direction, GroupSummary,
};

fn summaries(groups: &[Vec<f64>]) -> Vec<GroupSummary> {
    groups
        .iter()
        .enumerate()
        .map(|(i, g)| GroupSummary::from_samples(format!("g{i}"), g).unwrap())
        .collect()
}

fn groups() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 2..12), 2..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summaries_match_sample_statistics(xs in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let s = GroupSummary::from_samples("x", &xs).unwrap();
        let mean = xs.iter().mean();
        let std = xs.iter().std_dev();
        prop_assert!((s.mean - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
        prop_assert!((s.std - std).abs() <= 1e-9 * (1.0 + std));
        prop_assert_eq!(s.n, xs.len());
    }

    #[test]
    fn raw_and_summary_anova_agree(gs in groups()) {
        let raw = anova_oneway(&gs).unwrap();
        let sum = anova_from_summary(&summaries(&gs)).unwrap();
        prop_assert_eq!((raw.df_between, raw.df_within), (sum.df_between, sum.df_within));
        prop_assert!((raw.f - sum.f).abs() <= 1e-9 * (1.0 + raw.f.abs()), "{} vs {}", raw.f, sum.f);
    }

    #[test]
    fn f_is_invariant_under_affine_rescaling(gs in groups(), a in 0.01f64..100.0, b in -100.0f64..100.0) {
        let scaled: Vec<Vec<f64>> = gs.iter().map(|g| g.iter().map(|v| a * v + b).collect()).collect();
        let f0 = anova_oneway(&gs).unwrap().f;
        let f1 = anova_oneway(&scaled).unwrap().f;
        prop_assert!((f0 - f1).abs() <= 1e-7 * (1.0 + f0.abs()));
    }

    #[test]
    fn ranks_start_at_one_and_are_contiguous(gs in groups(), higher in any::<bool>()) {
        let s = summaries(&gs);
        let dir = if higher { Direction::HigherBetter } else { Direction::LowerBetter };
        let table = assign_ranks(&s, &tukey_hsd(&s, 0.05).unwrap().significant, dir).unwrap();
        let mut ranks = table.ranks();
        ranks.sort_unstable();
        prop_assert_eq!(ranks[0], 1);
        prop_assert!(ranks.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
    }
}

#[test]
fn tukey_critical_values_are_symmetric_and_scale_with_sizes() {
    let s = vec![
        GroupSummary::new("a", 1.0, 0.5, 10),
        GroupSummary::new("b", 1.2, 0.5, 10),
        GroupSummary::new("c", 3.0, 0.5, 40),
    ];
    let t = tukey_hsd(&s, 0.05).unwrap();
    for i in 0..3 {
        assert!(!t.significant[i][i]);
        for j in 0..3 {
            assert_eq!(t.significant[i][j], t.significant[j][i]);
            assert_eq!(t.critical[i][j], t.critical[j][i]);
        }
    }
    assert!(t.critical[0][2] < t.critical[0][1]);
    assert!(!t.significant[0][1]);
    assert!(t.significant[0][2] && t.significant[1][2]);
    assert_eq!(t.df_within, 57);
}

#[test]
fn quantile_table_is_monotone() {
    for k in 2..=10 {
        let mut prev = f64::INFINITY;
        for df in [2, 5, 10, 17, 30, 50, 120, 1000] {
            let q = studentized_range_quantile(k, df, 0.05).unwrap();
            assert!(q < prev, "k {k} df {df}");
            prev = q;
        }
    }
    for df in [3, 20, 200] {
        let qs: Vec<f64> = (2..=10).map(|k| studentized_range_quantile(k, df, 0.05).unwrap()).collect();
        assert!(qs.windows(2).all(|w| w[1] > w[0]));
    }
    assert!(studentized_range_quantile(11, 20, 0.05).is_err());
    assert!(studentized_range_quantile(3, 20, 0.01).is_err());
}

#[test]
fn identical_groups_are_degenerate_and_share_rank() {
    let gs = vec![vec![2.0; 5], vec![2.0; 5], vec![2.0; 5]];
    let a = anova_oneway(&gs).unwrap();
    assert!(a.degenerate_variance);
    assert_eq!(a.f, 0.0);
    let s = summaries(&gs);
    let t = assign_ranks(&s, &tukey_hsd(&s, 0.05).unwrap().significant, Direction::LowerBetter).unwrap();
    assert_eq!(t.ranks(), vec![1, 1, 1]);
}
