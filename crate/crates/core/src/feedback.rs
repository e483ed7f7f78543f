//! Pertinence feedback: goal weights from judged-pertinent objects, query
//! expansion, and re-ranking with the feedback weights.
//!
//! Two goal weights are available, both over the counts `N` (objects),
//! `n` (objects containing the goal), `R` (pertinent objects fed back) and
//! `r` (fed-back objects containing the goal):
//!
//! - PRF: `log[ r(N − n − R + r) / ((R − r)(n − r)) ]`, falling back to the
//!   0.5-smoothed ratio when any of the four factors is zero;
//! - PPF: `r · log[ (r + .5)(N − n − R + r + .5) / ((R − r + .5)(n − r + .5)) ]`.
//!
//! An expanded query scores objects with `Σ pw(g) · π_gf(g, o)` over its
//! original and added goals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::{weighted_scores, Index, LogBase, ScoredList};

/// Number of goals added to a query unless told otherwise.
pub const DEFAULT_EXPANSION_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeedbackError {
    #[error("invalid feedback counts N={total}, n={containing}, R={pertinent}, r={pertinent_containing}")]
    InvalidCounts {
        total: usize,
        containing: usize,
        pertinent: usize,
        pertinent_containing: usize,
    },
    #[error("no pertinent objects given")]
    EmptyPertinentSet,
    #[error("object {0:?} is not indexed")]
    UnknownObject(String),
    #[error("unknown feedback method {0:?} (expected prf or ppf)")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMethod {
    /// Probabilistic relevance feedback.
    Prf,
    /// Possibilistic pertinence feedback.
    Ppf,
}

impl FeedbackMethod {
    pub fn weight(self, counts: &FeedbackCounts, base: LogBase) -> f64 {
        match self {
            FeedbackMethod::Prf => prf_weight_in(counts, base),
            FeedbackMethod::Ppf => ppf_weight_in(counts, base),
        }
    }
}

impl fmt::Display for FeedbackMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackMethod::Prf => "prf",
            FeedbackMethod::Ppf => "ppf",
        })
    }
}

impl FromStr for FeedbackMethod {
    type Err = FeedbackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "prf" => Ok(FeedbackMethod::Prf),
            "ppf" => Ok(FeedbackMethod::Ppf),
            _ => Err(FeedbackError::UnknownMethod(s.to_string())),
        }
    }
}

/// Contingency counts for one goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackCounts {
    total: usize,
    containing: usize,
    pertinent: usize,
    pertinent_containing: usize,
}

impl FeedbackCounts {
    /// Requires `1 ≤ n ≤ N`, `R ≤ N`, `r ≤ min(R, n)` and `N − n − R + r ≥ 0`
    /// (the last one counts objects that are neither pertinent nor contain
    /// the goal).
    pub fn new(
        total: usize,
        containing: usize,
        pertinent: usize,
        pertinent_containing: usize,
    ) -> Result<Self, FeedbackError> {
        let valid = containing >= 1
            && containing <= total
            && pertinent <= total
            && pertinent_containing <= pertinent.min(containing)
            && total + pertinent_containing >= containing + pertinent;
        if !valid {
            return Err(FeedbackError::InvalidCounts {
                total,
                containing,
                pertinent,
                pertinent_containing,
            });
        }
        Ok(Self {
            total,
            containing,
            pertinent,
            pertinent_containing,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn containing(&self) -> usize {
        self.containing
    }

    pub fn pertinent(&self) -> usize {
        self.pertinent
    }

    pub fn pertinent_containing(&self) -> usize {
        self.pertinent_containing
    }

    /// `(r, N − n − R + r, R − r, n − r)`
    fn cells(&self) -> [f64; 4] {
        let r = self.pertinent_containing;
        [
            r as f64,
            (self.total + r - self.containing - self.pertinent) as f64,
            (self.pertinent - r) as f64,
            (self.containing - r) as f64,
        ]
    }

    fn smoothed_log_odds(&self, base: LogBase) -> f64 {
        let [a, b, c, d] = self.cells();
        base.log((a + 0.5) * (b + 0.5) / ((c + 0.5) * (d + 0.5)))
    }
}

pub fn prf_weight(counts: &FeedbackCounts) -> f64 {
    prf_weight_in(counts, LogBase::Natural)
}

pub fn prf_weight_in(counts: &FeedbackCounts, base: LogBase) -> f64 {
    let [a, b, c, d] = counts.cells();
    if a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0 {
        base.log(a * b / (c * d))
    } else {
        counts.smoothed_log_odds(base)
    }
}

pub fn ppf_weight(counts: &FeedbackCounts) -> f64 {
    ppf_weight_in(counts, LogBase::Natural)
}

pub fn ppf_weight_in(counts: &FeedbackCounts, base: LogBase) -> f64 {
    if counts.pertinent_containing == 0 {
        return 0.0;
    }
    counts.pertinent_containing as f64 * counts.smoothed_log_odds(base)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGoal {
    pub goal: String,
    pub weight: f64,
    pub method: FeedbackMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpansionStrategy {
    /// Add the first `k` candidates.
    TopK(usize),
    /// Add every candidate whose weight exceeds the threshold.
    Threshold(f64),
}

impl Default for ExpansionStrategy {
    fn default() -> Self {
        ExpansionStrategy::TopK(DEFAULT_EXPANSION_SIZE)
    }
}

/// A query after feedback: original goals, added goals, and one weight per
/// goal from the same method and judgments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedQuery {
    pub method: FeedbackMethod,
    pub original: Vec<String>,
    pub added: Vec<WeightedGoal>,
    pub weights: BTreeMap<String, f64>,
}

impl ExpandedQuery {
    /// Original goals followed by added goals.
    pub fn goals(&self) -> impl Iterator<Item = &str> {
        self.original
            .iter()
            .map(String::as_str)
            .chain(self.added.iter().map(|w| w.goal.as_str()))
    }

    pub fn weight(&self, goal: &str) -> f64 {
        self.weights.get(goal).copied().unwrap_or(0.0)
    }

    pub fn added_goals(&self) -> impl Iterator<Item = &str> {
        self.added.iter().map(|w| w.goal.as_str())
    }
}

/// Feedback state for one set of pertinent objects over an index.
#[derive(Debug, Clone)]
pub struct PertinenceFeedback<'a> {
    index: &'a Index,
    pertinent: BTreeSet<String>,
    method: FeedbackMethod,
    base: LogBase,
}

impl<'a> PertinenceFeedback<'a> {
    pub fn new<I, S>(
        index: &'a Index,
        pertinent: I,
        method: FeedbackMethod,
    ) -> Result<Self, FeedbackError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let pertinent: BTreeSet<String> = pertinent.into_iter().map(Into::into).collect();
        if pertinent.is_empty() {
            return Err(FeedbackError::EmptyPertinentSet);
        }
        if let Some(unknown) = pertinent.iter().find(|o| !index.contains_object(o)) {
            return Err(FeedbackError::UnknownObject(unknown.clone()));
        }
        Ok(Self {
            index,
            pertinent,
            method,
            base: LogBase::Natural,
        })
    }

    pub fn with_log_base(mut self, base: LogBase) -> Self {
        self.base = base;
        self
    }

    pub fn method(&self) -> FeedbackMethod {
        self.method
    }

    pub fn pertinent(&self) -> &BTreeSet<String> {
        &self.pertinent
    }

    /// Counts for a goal, or `None` when the goal is not indexed.
    pub fn counts(&self, goal: &str) -> Option<FeedbackCounts> {
        let posting = self.index.posting(goal)?;
        let r = self
            .pertinent
            .iter()
            .filter(|o| posting.occurrences().contains_key(o.as_str()))
            .count();
        let counts = FeedbackCounts::new(
            self.index.object_count(),
            posting.object_count(),
            self.pertinent.len(),
            r,
        )
        .expect("counts taken from the index are consistent");
        Some(counts)
    }

    /// Weight of a goal under the configured method; 0 for unindexed goals.
    pub fn weight(&self, goal: &str) -> f64 {
        self.counts(goal)
            .map(|c| self.method.weight(&c, self.base))
            .unwrap_or(0.0)
    }

    /// Goals present in at least one pertinent object, minus the original
    /// query goals, by weight descending then goal id ascending.
    pub fn rank_candidates<S: AsRef<str>>(&self, original: &[S]) -> Vec<WeightedGoal> {
        let original: BTreeSet<&str> = original.iter().map(AsRef::as_ref).collect();
        let pool: BTreeSet<&str> = self
            .pertinent
            .iter()
            .filter_map(|o| self.index.object_goals(o))
            .flat_map(|goals| goals.keys().map(String::as_str))
            .filter(|g| !original.contains(g))
            .collect();
        let mut ranked: Vec<WeightedGoal> = pool
            .into_iter()
            .map(|goal| WeightedGoal {
                goal: goal.to_string(),
                weight: self.weight(goal),
                method: self.method,
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.weight
                .total_cmp(&a.weight)
                .then_with(|| a.goal.cmp(&b.goal))
        });
        ranked
    }

    /// Expands `original` with a selection from `candidates` (already
    /// ordered). Originals are re-weighted with the same method.
    pub fn expand<S: AsRef<str>>(
        &self,
        original: &[S],
        candidates: &[WeightedGoal],
        strategy: ExpansionStrategy,
    ) -> ExpandedQuery {
        let mut original_goals: Vec<String> = Vec::with_capacity(original.len());
        for g in original {
            if !original_goals.iter().any(|o| o == g.as_ref()) {
                original_goals.push(g.as_ref().to_string());
            }
        }
        let fresh = candidates
            .iter()
            .filter(|c| !original_goals.contains(&c.goal));
        let added: Vec<WeightedGoal> = match strategy {
            ExpansionStrategy::TopK(k) => fresh.take(k).cloned().collect(),
            ExpansionStrategy::Threshold(t) => fresh.filter(|c| c.weight > t).cloned().collect(),
        };
        let mut weights: BTreeMap<String, f64> = original_goals
            .iter()
            .map(|g| (g.clone(), self.weight(g)))
            .collect();
        weights.extend(added.iter().map(|w| (w.goal.clone(), w.weight)));
        ExpandedQuery {
            method: self.method,
            original: original_goals,
            added,
            weights,
        }
    }

    /// Ranks candidates and expands in one step.
    pub fn expand_query<S: AsRef<str>>(
        &self,
        original: &[S],
        strategy: ExpansionStrategy,
    ) -> ExpandedQuery {
        let candidates = self.rank_candidates(original);
        self.expand(original, &candidates, strategy)
    }

    /// Re-ranks with the feedback weights, using this feedback's log base.
    pub fn score(&self, query: &ExpandedQuery) -> ScoredList {
        score_expanded_in(self.index, query, self.base)
    }
}

pub fn rank_candidate_goals<S: AsRef<str>>(
    index: &Index,
    pertinent: &BTreeSet<String>,
    original: &[S],
    method: FeedbackMethod,
) -> Result<Vec<WeightedGoal>, FeedbackError> {
    Ok(
        PertinenceFeedback::new(index, pertinent.iter().cloned(), method)?
            .rank_candidates(original),
    )
}

/// `Σ pw(g) · π_gf(g, o)` over all goals of the expanded query. Goals with zero
/// weight contribute nothing; objects containing no contributing goal are
/// omitted. Negative weights are kept.
pub fn score_expanded(index: &Index, query: &ExpandedQuery) -> ScoredList {
    score_expanded_in(index, query, LogBase::Natural)
}

pub fn score_expanded_in(index: &Index, query: &ExpandedQuery, base: LogBase) -> ScoredList {
    let weighted = query
        .goals()
        .map(|g| (g, query.weight(g)))
        .filter(|&(_, w)| w != 0.0);
    weighted_scores(index, weighted, base)
}
