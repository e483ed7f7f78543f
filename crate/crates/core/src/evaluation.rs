//! Effectiveness measures and feedback experiments.
//!
//! Feedback runs simulate a user who marks the first `R` pertinent objects of
//! the baseline ranking. Every arm (baseline, PRF, PPF) is then evaluated on
//! the residual collection: the fed-back objects are removed from both the
//! ranking and the relevant set. Queries left with no relevant objects are
//! skipped and counted.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Collection, Judgments, QueryRecord};
use crate::feedback::{ExpansionStrategy, FeedbackMethod, PertinenceFeedback};
use crate::scoring::{score_query, Index, ScoredList};

/// Number of interpolated recall levels (0.0, 0.1, …, 1.0).
pub const RECALL_LEVELS: usize = 11;

/// Query id used for averaged rows in CSV output.
pub const MEAN_ROW: &str = "__mean__";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no feedback sizes given")]
    EmptyFeedbackSizes,
    #[error("feedback size must be at least 1")]
    ZeroFeedbackSize,
    #[error("unknown arm {0:?} (expected baseline, prf or ppf)")]
    UnknownArm(String),
}

fn hits<S: AsRef<str>>(extracted: &[S], relevant: &BTreeSet<String>) -> usize {
    let distinct: BTreeSet<&str> = extracted.iter().map(AsRef::as_ref).collect();
    distinct.iter().filter(|o| relevant.contains(**o)).count()
}

/// Fraction of the relevant objects that were extracted; 0 when `relevant` is
/// empty.
pub fn recall<S: AsRef<str>>(extracted: &[S], relevant: &BTreeSet<String>) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    hits(extracted, relevant) as f64 / relevant.len() as f64
}

/// Fraction of the extracted objects that are relevant; 0 when nothing was
/// extracted.
pub fn precision<S: AsRef<str>>(extracted: &[S], relevant: &BTreeSet<String>) -> f64 {
    let distinct: BTreeSet<&str> = extracted.iter().map(AsRef::as_ref).collect();
    if distinct.is_empty() {
        return 0.0;
    }
    hits(extracted, relevant) as f64 / distinct.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall_level: f64,
    pub precision: f64,
}

fn level(i: usize) -> f64 {
    i as f64 / (RECALL_LEVELS - 1) as f64
}

/// 11-point interpolated precision: at level `l`, the best precision at any
/// cutoff whose recall is at least `l` (0 if no cutoff reaches `l`).
pub fn pr_curve(ranked: &ScoredList, relevant: &BTreeSet<String>) -> Vec<PrPoint> {
    let ids: Vec<&str> = ranked.ids().collect();
    pr_curve_for_ids(&ids, relevant)
}

pub fn pr_curve_for_ids<S: AsRef<str>>(ranked: &[S], relevant: &BTreeSet<String>) -> Vec<PrPoint> {
    let steps = RECALL_LEVELS - 1;
    let mut best = [0.0f64; RECALL_LEVELS];
    let mut found = 0usize;
    for (rank, id) in ranked.iter().enumerate() {
        if !relevant.contains(id.as_ref()) {
            continue;
        }
        // precision only peaks at relevant positions
        found += 1;
        let p = found as f64 / (rank + 1) as f64;
        for (i, slot) in best.iter_mut().enumerate() {
            // recall ≥ i/10, in integers
            if found * steps >= i * relevant.len() && p > *slot {
                *slot = p;
            }
        }
    }
    best.iter()
        .enumerate()
        .map(|(i, &precision)| PrPoint {
            recall_level: level(i),
            precision,
        })
        .collect()
}

/// Per-level arithmetic mean of several curves.
pub fn mean_curve(curves: &[Vec<PrPoint>]) -> Vec<PrPoint> {
    (0..RECALL_LEVELS)
        .map(|i| {
            let precision = if curves.is_empty() {
                0.0
            } else {
                curves.iter().map(|c| c[i].precision).sum::<f64>() / curves.len() as f64
            };
            PrPoint {
                recall_level: level(i),
                precision,
            }
        })
        .collect()
}

/// Mean over relevant objects of the precision at their rank; relevant objects
/// never retrieved contribute 0.
pub fn average_precision<S: AsRef<str>>(ranked: &[S], relevant: &BTreeSet<String>) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut found = 0usize;
    let mut total = 0.0;
    for (rank, id) in ranked.iter().enumerate() {
        if relevant.contains(id.as_ref()) {
            found += 1;
            total += found as f64 / (rank + 1) as f64;
        }
    }
    total / relevant.len() as f64
}

/// Experimental arm: the control ranking or one of the feedback methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Baseline,
    Prf,
    Ppf,
}

impl Arm {
    pub fn method(self) -> Option<FeedbackMethod> {
        match self {
            Arm::Baseline => None,
            Arm::Prf => Some(FeedbackMethod::Prf),
            Arm::Ppf => Some(FeedbackMethod::Ppf),
        }
    }
}

impl From<FeedbackMethod> for Arm {
    fn from(m: FeedbackMethod) -> Self {
        match m {
            FeedbackMethod::Prf => Arm::Prf,
            FeedbackMethod::Ppf => Arm::Ppf,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Baseline => "baseline",
            Arm::Prf => "prf",
            Arm::Ppf => "ppf",
        })
    }
}

impl FromStr for Arm {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Arm::Baseline),
            "prf" => Ok(Arm::Prf),
            "ppf" => Ok(Arm::Ppf),
            _ => Err(EvalError::UnknownArm(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub r_fed: usize,
    pub mean_avg_precision: f64,
    pub queries_evaluated: usize,
    pub queries_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackCurve {
    pub arm: Arm,
    pub points: Vec<CurvePoint>,
}

/// Residual ranking and relevant set of one query after simulated feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRun {
    pub query_id: String,
    pub fed_back: BTreeSet<String>,
    pub ranking: ScoredList,
    pub relevant: BTreeSet<String>,
}

impl ResidualRun {
    pub fn average_precision(&self) -> f64 {
        let ids: Vec<&str> = self.ranking.ids().collect();
        average_precision(&ids, &self.relevant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOverlap {
    pub query_id: String,
    pub set_difference_pct: f64,
    /// `None` when no shared goal has a non-zero weight in either arm.
    pub weight_difference_pct: Option<f64>,
    pub shared_goals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub r_fed: usize,
    pub k: usize,
    pub mean_set_difference_pct: f64,
    pub mean_weight_difference_pct: f64,
    pub per_query: Vec<QueryOverlap>,
    pub queries_skipped: usize,
}

/// Queries, judgments and an index built once for repeated experiments.
#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    index: Index,
    queries: &'a [QueryRecord],
    judgments: &'a Judgments,
}

impl<'a> Experiment<'a> {
    pub fn new(collection: &'a Collection, judgments: &'a Judgments) -> Self {
        Self {
            index: Index::build(collection),
            queries: collection.queries(),
            judgments,
        }
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    /// Queries that have a judgment entry, in collection order.
    fn judged(&self) -> impl Iterator<Item = (&'a QueryRecord, &'a BTreeSet<String>)> + '_ {
        self.queries
            .iter()
            .filter_map(|q| self.judgments.pertinent(&q.id).map(|rel| (q, rel)))
    }

    /// The first `r` pertinent objects met in the baseline ranking.
    fn simulated_feedback(
        baseline: &ScoredList,
        relevant: &BTreeSet<String>,
        r: usize,
    ) -> BTreeSet<String> {
        baseline
            .ids()
            .filter(|o| relevant.contains(*o))
            .take(r)
            .map(str::to_string)
            .collect()
    }

    /// Runs one query; `None` when the query is skipped (nothing pertinent
    /// retrieved to feed back, or nothing relevant left afterwards).
    pub fn residual_run(
        &self,
        query: &QueryRecord,
        relevant: &BTreeSet<String>,
        arm: Arm,
        r: usize,
        k: usize,
    ) -> Option<ResidualRun> {
        let baseline = score_query(&self.index, &query.goals);
        let fed = Self::simulated_feedback(&baseline, relevant, r);
        if fed.is_empty() {
            return None;
        }
        let residual: BTreeSet<String> = relevant.difference(&fed).cloned().collect();
        if residual.is_empty() {
            return None;
        }
        let ranking = match arm.method() {
            None => baseline,
            Some(method) => {
                let fb = PertinenceFeedback::new(&self.index, fed.iter().cloned(), method)
                    .expect("fed-back objects come from the index");
                let expanded = fb.expand_query(&query.goals, ExpansionStrategy::TopK(k));
                fb.score(&expanded)
            }
        };
        Some(ResidualRun {
            query_id: query.id.clone(),
            ranking: ranking.without(&fed),
            fed_back: fed,
            relevant: residual,
        })
    }

    /// Average precision per judged query (`None` = skipped).
    pub fn query_average_precisions(
        &self,
        arm: Arm,
        r: usize,
        k: usize,
    ) -> Vec<(String, Option<f64>)> {
        self.judged()
            .map(|(q, rel)| {
                let ap = self
                    .residual_run(q, rel, arm, r, k)
                    .map(|run| run.average_precision());
                (q.id.clone(), ap)
            })
            .collect()
    }

    pub fn feedback_curve(
        &self,
        arm: Arm,
        r_values: &[usize],
        k: usize,
    ) -> Result<FeedbackCurve, EvalError> {
        if r_values.is_empty() {
            return Err(EvalError::EmptyFeedbackSizes);
        }
        if r_values.contains(&0) {
            return Err(EvalError::ZeroFeedbackSize);
        }
        let mut sizes = r_values.to_vec();
        sizes.sort_unstable();
        sizes.dedup();
        let points = sizes
            .into_iter()
            .map(|r| {
                let aps = self.query_average_precisions(arm, r, k);
                let evaluated: Vec<f64> = aps.iter().filter_map(|(_, ap)| *ap).collect();
                let map = if evaluated.is_empty() {
                    0.0
                } else {
                    evaluated.iter().sum::<f64>() / evaluated.len() as f64
                };
                CurvePoint {
                    r_fed: r,
                    mean_avg_precision: map,
                    queries_evaluated: evaluated.len(),
                    queries_skipped: aps.len() - evaluated.len(),
                }
            })
            .collect();
        Ok(FeedbackCurve { arm, points })
    }

    /// Interpolated curves per judged, non-skipped query. With
    /// `Arm::Baseline` and `r = 0` the full (non-residual) baseline is used.
    pub fn pr_curves(&self, arm: Arm, r: usize, k: usize) -> Vec<(String, Vec<PrPoint>)> {
        self.judged()
            .filter(|(_, rel)| !rel.is_empty())
            .filter_map(|(q, rel)| {
                if r == 0 {
                    let ranked = score_query(&self.index, &q.goals);
                    return Some((q.id.clone(), pr_curve(&ranked, rel)));
                }
                self.residual_run(q, rel, arm, r, k)
                    .map(|run| (q.id.clone(), pr_curve(&run.ranking, &run.relevant)))
            })
            .collect()
    }

    /// Compares the top-`k` expansion sets of two methods fed identical
    /// judgments.
    pub fn overlap_between(
        &self,
        r: usize,
        k: usize,
        first: FeedbackMethod,
        second: FeedbackMethod,
    ) -> Result<OverlapReport, EvalError> {
        if r == 0 {
            return Err(EvalError::ZeroFeedbackSize);
        }
        let mut per_query = Vec::new();
        let mut skipped = 0;
        for (q, rel) in self.judged() {
            let baseline = score_query(&self.index, &q.goals);
            let fed = Self::simulated_feedback(&baseline, rel, r);
            if fed.is_empty() {
                skipped += 1;
                continue;
            }
            let expand = |method| {
                let fb = PertinenceFeedback::new(&self.index, fed.iter().cloned(), method)
                    .expect("fed-back objects come from the index");
                fb.expand_query(&q.goals, ExpansionStrategy::TopK(k)).added
            };
            let (a, b) = (expand(first), expand(second));
            // both arms draw from the same candidate pool, so |a| = |b|
            let size = a.len().max(b.len());
            if size == 0 {
                skipped += 1;
                continue;
            }
            let mut shared = 0;
            let mut ratios = Vec::new();
            for wa in &a {
                if let Some(wb) = b.iter().find(|wb| wb.goal == wa.goal) {
                    shared += 1;
                    let scale = wa.weight.abs().max(wb.weight.abs());
                    if scale > 0.0 {
                        ratios.push((wa.weight - wb.weight).abs() / scale);
                    }
                }
            }
            per_query.push(QueryOverlap {
                query_id: q.id.clone(),
                set_difference_pct: 100.0 * (1.0 - shared as f64 / size as f64),
                weight_difference_pct: (!ratios.is_empty())
                    .then(|| 100.0 * ratios.iter().sum::<f64>() / ratios.len() as f64),
                shared_goals: shared,
            });
        }
        let mean = |values: Vec<f64>| {
            if values.is_empty() {
                0.0
            } else {
                values.iter().sum::<f64>() / values.len() as f64
            }
        };
        Ok(OverlapReport {
            r_fed: r,
            k,
            mean_set_difference_pct: mean(per_query.iter().map(|q| q.set_difference_pct).collect()),
            mean_weight_difference_pct: mean(
                per_query
                    .iter()
                    .filter_map(|q| q.weight_difference_pct)
                    .collect(),
            ),
            per_query,
            queries_skipped: skipped,
        })
    }
}

pub fn feedback_experiment(
    collection: &Collection,
    judgments: &Judgments,
    arm: Arm,
    r_values: &[usize],
    k: usize,
) -> Result<FeedbackCurve, EvalError> {
    Experiment::new(collection, judgments).feedback_curve(arm, r_values, k)
}

/// PRF versus PPF expansion sets from the same simulated feedback.
pub fn overlap_report(
    collection: &Collection,
    judgments: &Judgments,
    r: usize,
    k: usize,
) -> Result<OverlapReport, EvalError> {
    Experiment::new(collection, judgments).overlap_between(
        r,
        k,
        FeedbackMethod::Prf,
        FeedbackMethod::Ppf,
    )
}

fn num(x: f64) -> String {
    // avoid "-0.000000"
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.6}")
}

/// `query_id,recall_level,precision`; the averaged curve uses `__mean__`.
pub fn pr_curve_csv(curves: &[(String, Vec<PrPoint>)]) -> String {
    let mut sorted: Vec<&(String, Vec<PrPoint>)> = curves.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::from("query_id,recall_level,precision\n");
    for (id, curve) in &sorted {
        for p in curve {
            let _ = writeln!(out, "{id},{},{}", num(p.recall_level), num(p.precision));
        }
    }
    let mean = mean_curve(&sorted.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>());
    for p in mean {
        let _ = writeln!(
            out,
            "{MEAN_ROW},{},{}",
            num(p.recall_level),
            num(p.precision)
        );
    }
    out
}

/// `method,R,mean_avg_precision,queries_evaluated,queries_skipped`
pub fn feedback_curve_csv(curves: &[FeedbackCurve]) -> String {
    let mut rows: Vec<(Arm, &CurvePoint)> = curves
        .iter()
        .flat_map(|c| c.points.iter().map(move |p| (c.arm, p)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.r_fed.cmp(&b.1.r_fed)));
    let mut out = String::from("method,R,mean_avg_precision,queries_evaluated,queries_skipped\n");
    for (arm, p) in rows {
        let _ = writeln!(
            out,
            "{arm},{},{},{},{}",
            p.r_fed,
            num(p.mean_avg_precision),
            p.queries_evaluated,
            p.queries_skipped
        );
    }
    out
}

/// `query_id,set_difference_pct,weight_difference_pct,shared_goals`; an
/// undefined weight difference is left empty.
pub fn overlap_csv(report: &OverlapReport) -> String {
    let mut rows: Vec<&QueryOverlap> = report.per_query.iter().collect();
    rows.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    let mut out = String::from("query_id,set_difference_pct,weight_difference_pct,shared_goals\n");
    for q in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            q.query_id,
            num(q.set_difference_pct),
            q.weight_difference_pct.map(num).unwrap_or_default(),
            q.shared_goals
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn recall_examples() {
        let rel = set(&["o1", "o2", "o3", "o4"]);
        assert_eq!(recall(&["o1", "o2", "o3", "o4"], &rel), 1.0);
        assert_eq!(recall(&["o1", "o2", "o5"], &rel), 0.5);
        assert_eq!(recall::<&str>(&[], &rel), 0.0);
    }

    #[test]
    fn precision_examples() {
        let rel = set(&["o1", "o2", "o3", "o4"]);
        assert_eq!(precision(&["o4", "o3", "o2", "o1"], &rel), 1.0);
        assert_eq!(precision(&["o1", "o2", "o5"], &rel), 2.0 / 3.0);
        assert_eq!(precision::<&str>(&[], &rel), 0.0);
    }

    #[test]
    fn curve_examples() {
        let perfect = pr_curve_for_ids(&["a", "b", "x"], &set(&["a", "b"]));
        assert!(perfect.iter().all(|p| p.precision == 1.0));

        let second = pr_curve_for_ids(&["x", "a"], &set(&["a"]));
        assert_eq!(second.len(), 11);
        assert!(second.iter().all(|p| p.precision == 0.5));

        let missed = pr_curve_for_ids(&["x", "y"], &set(&["a"]));
        assert!(missed.iter().all(|p| p.precision == 0.0));
    }

    #[test]
    fn levels_are_exact_tenths() {
        let c = pr_curve_for_ids(&["a"], &set(&["a"]));
        let levels: Vec<f64> = c.iter().map(|p| p.recall_level).collect();
        assert_eq!(levels[3], 0.3);
        assert_eq!(levels[10], 1.0);
    }

    #[test]
    fn average_precision_counts_missing_as_zero() {
        assert_eq!(
            average_precision(&["a", "x", "b"], &set(&["a", "b"])),
            (1.0 + 2.0 / 3.0) / 2.0
        );
        assert_eq!(average_precision(&["a"], &set(&["a", "b"])), 0.5);
    }

    #[test]
    fn arms_parse() {
        assert_eq!("PPF".parse::<Arm>().unwrap(), Arm::Ppf);
        assert!("x".parse::<Arm>().is_err());
    }

    #[test]
    fn csv_numbers() {
        assert_eq!(num(-0.0), "0.000000");
        assert_eq!(num(2.0 / 3.0), "0.666667");
        let report = OverlapReport {
            r_fed: 1,
            k: 10,
            mean_set_difference_pct: 30.0,
            mean_weight_difference_pct: 0.0,
            per_query: vec![QueryOverlap {
                query_id: "q1".into(),
                set_difference_pct: 30.0,
                weight_difference_pct: None,
                shared_goals: 7,
            }],
            queries_skipped: 0,
        };
        assert_eq!(
            overlap_csv(&report),
            "query_id,set_difference_pct,weight_difference_pct,shared_goals\nq1,30.000000,,7\n"
        );
    }
}
