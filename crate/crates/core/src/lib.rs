//! Goal-indexed knowledge extraction with pertinence feedback.
//!
//! Objects are described by weighted goal occurrences. A query is a list of
//! goals; objects are ranked with a possibilistic inverse-object-frequency /
//! goal-frequency score, and the query can then be refined from objects the
//! user marks as pertinent, using either a probabilistic (PRF) or a
//! possibilistic (PPF) goal weight.
//!
//! Modules:
//! - [`corpus`]: collections, judgments, file format, synthetic generator.
//! - [`possibility`]: mass functions, belief/plausibility, possibility distributions.
//! - [`scoring`]: inverted index and baseline ranking.
//! - [`feedback`]: PRF/PPF weights, query expansion, feedback re-ranking.
//! - [`evaluation`]: precision/recall, PR curves, feedback experiments, overlap statistics.

#![forbid(unsafe_code)]

pub mod corpus;
pub mod evaluation;
pub mod feedback;
pub mod possibility;
pub mod scoring;

pub use corpus::{
    generate_synthetic, load_collection, Collection, CollectionStats, CorpusError, Judgments,
    ObjectRecord, QueryRecord, SynthParams,
};
pub use evaluation::{
    feedback_experiment, overlap_report, pr_curve, precision, recall, Arm, FeedbackCurve,
    OverlapReport, PrPoint,
};
pub use feedback::{
    ExpandedQuery, ExpansionStrategy, FeedbackCounts, FeedbackError, FeedbackMethod,
    PertinenceFeedback, WeightedGoal, DEFAULT_EXPANSION_SIZE,
};
pub use possibility::{Frame, MassFunction, PossibilityDistribution, PossibilityError, Subset};
pub use scoring::{score_query, Index, LogBase, ScoredList, ScoredObject};
