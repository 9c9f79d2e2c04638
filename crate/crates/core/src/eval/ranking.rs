use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::anova::GroupSummary;
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Smaller is better (CLE).
    LowerBetter,
    /// Larger is better (TSR).
    HigherBetter,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lower" | "lower_better" | "lower-better" => Ok(Direction::LowerBetter),
            "higher" | "higher_better" | "higher-better" => Ok(Direction::HigherBetter),
            _ => Err(format!("unknown direction '{s}' (expected lower or higher)")),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::LowerBetter => "lower",
            Direction::HigherBetter => "higher",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedGroup {
    pub summary: GroupSummary,
    pub rank: usize,
    /// Significantly different from the overall best group.
    pub differs_from_best: bool,
}

/// Entries keep the input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub direction: Direction,
    pub entries: Vec<RankedGroup>,
}

impl RankTable {
    pub fn ranks(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.rank).collect()
    }

    pub fn rank_of(&self, label: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.summary.label == label).map(|e| e.rank)
    }
}

/// Sorts best-first (stable, so ties keep input order). The first group gets
/// rank 1; each later group joins the current rank unless it differs
/// significantly from that rank's best member, in which case it opens the
/// next rank.
pub fn assign_ranks(groups: &[GroupSummary], significance: &[Vec<bool>], direction: Direction) -> Result<RankTable, EvalError> {
    let k = groups.len();
    let shape_ok = significance.len() == k && significance.iter().all(|r| r.len() == k);
    let symmetric = shape_ok && (0..k).all(|i| (0..k).all(|j| significance[i][j] == significance[j][i]));
    if !symmetric {
        return Err(EvalError::BadSignificanceMatrix {
            got: significance.len(),
            expected: k,
        });
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (groups[a].mean, groups[b].mean);
        match direction {
            Direction::LowerBetter => x.total_cmp(&y),
            Direction::HigherBetter => y.total_cmp(&x),
        }
    });
    let mut ranks = vec![0; k];
    if let Some(&first) = order.first() {
        let mut rank = 1;
        let mut leader = first;
        ranks[first] = 1;
        for &i in &order[1..] {
            if significance[leader][i] {
                rank += 1;
                leader = i;
            }
            ranks[i] = rank;
        }
    }
    let best = order.first().copied();
    Ok(RankTable {
        direction,
        entries: groups
            .iter()
            .enumerate()
            .map(|(i, g)| RankedGroup {
                summary: g.clone(),
                rank: ranks[i],
                differs_from_best: best.is_some_and(|b| significance[b][i]),
            })
            .collect(),
    })
}
