use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// How the executed action is picked from the twin actors' candidates.
///
/// Each candidate `a_i` is scored by an inner aggregate over the two
/// critics, `g(a_i) = inner_j Q_j(s, a_i)`; the outer operator then picks
/// the candidate with the smallest (or largest) score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStrategy {
    MinMin,
    MinMax,
    MaxMin,
    MaxMax,
    MinAvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Min,
    Max,
    Avg,
}

impl Aggregate {
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            Aggregate::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregate::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregate::Avg => values.iter().sum::<f64>() / values.len() as f64,
        }
    }
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 5] = [
        SelectionStrategy::MinMin,
        SelectionStrategy::MinMax,
        SelectionStrategy::MaxMin,
        SelectionStrategy::MaxMax,
        SelectionStrategy::MinAvg,
    ];

    /// `(outer over actors, inner over critics)`.
    pub fn operators(self) -> (Aggregate, Aggregate) {
        use Aggregate::*;
        match self {
            SelectionStrategy::MinMin => (Min, Min),
            SelectionStrategy::MinMax => (Min, Max),
            SelectionStrategy::MaxMin => (Max, Min),
            SelectionStrategy::MaxMax => (Max, Max),
            SelectionStrategy::MinAvg => (Min, Avg),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SelectionStrategy::MinMin => "min-min",
            SelectionStrategy::MinMax => "min-max",
            SelectionStrategy::MaxMin => "max-min",
            SelectionStrategy::MaxMax => "max-max",
            SelectionStrategy::MinAvg => "min-avg",
        }
    }

    /// Per-candidate scores for a `q[actor][critic]` table.
    pub fn scores(self, q: &[[f64; 2]]) -> Vec<f64> {
        let (_, inner) = self.operators();
        q.iter().map(|row| inner.apply(row)).collect()
    }

    /// Index of the selected candidate. Ties go to the lower index. With
    /// `greedy` the outer operator is forced to max.
    pub fn select(self, q: &[[f64; 2]], greedy: bool) -> usize {
        let (outer, _) = self.operators();
        let prefer_max = greedy || outer == Aggregate::Max;
        let scores = self.scores(q);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            let better = if prefer_max {
                s > scores[best]
            } else {
                s < scores[best]
            };
            if better {
                best = i;
            }
        }
        best
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SelectionStrategy::ALL
            .into_iter()
            .find(|st| st.name() == s || st.name().replace('-', "_") == s)
            .ok_or_else(|| Error::config(format!("unknown strategy '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Q1(s,a1)=1, Q2(s,a1)=2, Q1(s,a2)=3, Q2(s,a2)=0
    const TABLE: [[f64; 2]; 2] = [[1.0, 2.0], [3.0, 0.0]];

    #[test]
    fn hand_table() {
        assert_eq!(SelectionStrategy::MinMin.select(&TABLE, false), 1);
        assert_eq!(SelectionStrategy::MaxMin.select(&TABLE, false), 0);
        // max aggregates 2 vs 3
        assert_eq!(SelectionStrategy::MinMax.select(&TABLE, false), 0);
        assert_eq!(SelectionStrategy::MaxMax.select(&TABLE, false), 1);
        // averages 1.5 vs 1.5: tie to actor 1
        assert_eq!(SelectionStrategy::MinAvg.select(&TABLE, false), 0);
    }

    #[test]
    fn greedy_flips_outer() {
        assert_eq!(SelectionStrategy::MinMin.select(&TABLE, true), 0);
    }

    #[test]
    fn identical_candidates_pick_first() {
        for st in SelectionStrategy::ALL {
            assert_eq!(st.select(&[[0.3, -0.2], [0.3, -0.2]], false), 0);
        }
    }

    #[test]
    fn names_round_trip() {
        for st in SelectionStrategy::ALL {
            assert_eq!(st.name().parse::<SelectionStrategy>().unwrap(), st);
        }
        assert!("min-median".parse::<SelectionStrategy>().is_err());
    }
}
