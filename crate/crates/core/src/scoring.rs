//! Inverted index over a collection and the baseline possibilistic ranking.
//!
//! For goal `g` and object `o`:
//!
//! - `π_iof(g) = log(N / n_g)`, where `N` is the object count and `n_g` the
//!   number of objects containing `g`;
//! - `π_gf(g, o) = log(f + 1) / log(max(L_o, 2))`, where `f` is the frequency of
//!   `g` in `o` and `L_o` the number of distinct goals of `o`;
//! - `π_s(o, q) = Σ_{g ∈ q} π_iof(g) · π_gf(g, o)`.
//!
//! Logarithms are natural unless a [`LogBase`] is passed explicitly; the
//! induced ranking does not depend on the base.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Collection;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("goal {0:?} is not indexed")]
    UnknownGoal(String),
    #[error("object {0:?} is not indexed")]
    UnknownObject(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Posting {
    occurrences: BTreeMap<String, u32>,
}

impl Posting {
    /// Number of objects containing the goal (n_i).
    pub fn object_count(&self) -> usize {
        self.occurrences.len()
    }

    /// Object id → frequency.
    pub fn occurrences(&self) -> &BTreeMap<String, u32> {
        &self.occurrences
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Index {
    object_count: usize,
    postings: BTreeMap<String, Posting>,
    objects: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Index {
    pub fn build(collection: &Collection) -> Self {
        let mut postings: BTreeMap<String, Posting> = BTreeMap::new();
        let mut objects = BTreeMap::new();
        for object in collection.objects() {
            for (goal, &f) in &object.occurrences {
                postings
                    .entry(goal.clone())
                    .or_default()
                    .occurrences
                    .insert(object.id.clone(), f);
            }
            objects.insert(object.id.clone(), object.occurrences.clone());
        }
        Self {
            object_count: collection.objects().len(),
            postings,
            objects,
        }
    }

    /// Total number of objects (N).
    pub fn object_count(&self) -> usize {
        self.object_count
    }

    pub fn posting(&self, goal: &str) -> Option<&Posting> {
        self.postings.get(goal)
    }

    pub fn postings(&self) -> impl Iterator<Item = (&String, &Posting)> {
        self.postings.iter()
    }

    /// Goal → frequency map of an object.
    pub fn object_goals(&self, object: &str) -> Option<&BTreeMap<String, u32>> {
        self.objects.get(object)
    }

    pub fn contains_object(&self, object: &str) -> bool {
        self.objects.contains_key(object)
    }

    pub fn object_ids(&self) -> impl Iterator<Item = &String> {
        self.objects.keys()
    }

    /// Number of distinct goals in an object (L_j).
    pub fn unique_goals(&self, object: &str) -> Option<usize> {
        self.objects.get(object).map(BTreeMap::len)
    }

    pub fn frequency(&self, goal: &str, object: &str) -> u32 {
        self.objects
            .get(object)
            .and_then(|goals| goals.get(goal))
            .copied()
            .unwrap_or(0)
    }

    pub fn pi_iof(&self, goal: &str) -> Result<f64, ScoringError> {
        self.pi_iof_in(goal, LogBase::Natural)
    }

    pub fn pi_iof_in(&self, goal: &str, base: LogBase) -> Result<f64, ScoringError> {
        let posting = self
            .postings
            .get(goal)
            .ok_or_else(|| ScoringError::UnknownGoal(goal.to_string()))?;
        Ok(iof(self.object_count, posting.object_count(), base))
    }

    /// Goals missing from the object have frequency 0 and score 0.
    pub fn pi_gf(&self, goal: &str, object: &str) -> Result<f64, ScoringError> {
        self.pi_gf_in(goal, object, LogBase::Natural)
    }

    pub fn pi_gf_in(&self, goal: &str, object: &str, base: LogBase) -> Result<f64, ScoringError> {
        let goals = self
            .objects
            .get(object)
            .ok_or_else(|| ScoringError::UnknownObject(object.to_string()))?;
        let f = goals.get(goal).copied().unwrap_or(0);
        Ok(gf(f, goals.len(), base))
    }
}

pub(crate) fn iof(object_count: usize, containing: usize, base: LogBase) -> f64 {
    // written as a ratio ≥ 1 so n_i = N yields exactly +0.0
    base.log(object_count as f64 / containing as f64)
}

pub(crate) fn gf(frequency: u32, unique_goals: usize, base: LogBase) -> f64 {
    if frequency == 0 {
        return 0.0;
    }
    base.log(frequency as f64 + 1.0) / base.log(unique_goals.max(2) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredObject {
    pub object_id: String,
    pub score: f64,
}

/// Objects in descending score order; equal scores by ascending object id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoredList(Vec<ScoredObject>);

impl ScoredList {
    pub fn from_scores<I: IntoIterator<Item = (String, f64)>>(scores: I) -> Self {
        let mut entries: Vec<ScoredObject> = scores
            .into_iter()
            .map(|(object_id, score)| ScoredObject { object_id, score })
            .collect();
        entries.sort_by(ranking_order);
        entries.dedup_by(|b, a| a.object_id == b.object_id);
        Self(entries)
    }

    pub fn entries(&self) -> &[ScoredObject] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ScoredObject> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|e| e.object_id.as_str())
    }

    pub fn score_of(&self, object: &str) -> Option<f64> {
        self.0
            .iter()
            .find(|e| e.object_id == object)
            .map(|e| e.score)
    }

    /// Drops the given objects, keeping the order of the rest.
    pub fn without(&self, excluded: &BTreeSet<String>) -> Self {
        Self(
            self.0
                .iter()
                .filter(|e| !excluded.contains(&e.object_id))
                .cloned()
                .collect(),
        )
    }
}

impl<'a> IntoIterator for &'a ScoredList {
    type Item = &'a ScoredObject;
    type IntoIter = std::slice::Iter<'a, ScoredObject>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn ranking_order(a: &ScoredObject, b: &ScoredObject) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.object_id.cmp(&b.object_id))
}

/// Weighted sum `Σ weight(g) · π_gf(g, o)` over the goals, in order. Objects
/// that contain none of the contributing goals are omitted.
pub(crate) fn weighted_scores<'g, I>(index: &Index, goals: I, base: LogBase) -> ScoredList
where
    I: IntoIterator<Item = (&'g str, f64)>,
{
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (goal, weight) in goals {
        if !seen.insert(goal) {
            continue;
        }
        let Some(posting) = index.postings.get(goal) else {
            continue;
        };
        for (object, &f) in &posting.occurrences {
            let unique = index.objects[object].len();
            *scores.entry(object.as_str()).or_insert(0.0) += weight * gf(f, unique, base);
        }
    }
    ScoredList::from_scores(scores.into_iter().map(|(o, s)| (o.to_string(), s)))
}

/// Baseline ranking of every object sharing at least one goal with the query.
/// Goals absent from the index contribute nothing.
pub fn score_query<S: AsRef<str>>(index: &Index, goals: &[S]) -> ScoredList {
    score_query_in(index, goals, LogBase::Natural)
}

pub fn score_query_in<S: AsRef<str>>(index: &Index, goals: &[S], base: LogBase) -> ScoredList {
    let weighted = goals.iter().filter_map(|g| {
        let g = g.as_ref();
        index
            .postings
            .get(g)
            .map(|p| (g, iof(index.object_count, p.object_count(), base)))
    });
    weighted_scores(index, weighted, base)
}
