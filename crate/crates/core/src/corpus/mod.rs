//! Goal-indexed object collections: data model, validation, file I/O and
//! summary statistics.
//!
//! A collection file is a single UTF-8 JSON document tagged with
//! `"format": "pertinex-v1"`:
//!
//! ```json
//! {
//!   "format": "pertinex-v1",
//!   "vocabulary": ["g1", "g2"],
//!   "objects": [{"id": "o1", "occurrences": {"g1": 2, "g2": 1}}],
//!   "queries": [{"id": "q1", "goals": ["g1"]}],
//!   "judgments": {"q1": ["o1"]}
//! }
//! ```

mod synth;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synth::{generate_synthetic, SynthParams};

/// Format tag written to and required from every collection file.
pub const FORMAT_TAG: &str = "pertinex-v1";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read or write {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid collection: {0}")]
    Validation(#[from] ValidationError),
    #[error("infeasible synthetic parameters: {0}")]
    InfeasibleParams(String),
}

/// The first violated collection invariant, naming the offending id.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("unsupported format tag {0:?} (expected {FORMAT_TAG:?})")]
    UnsupportedFormat(String),
    #[error("goal id {0:?} is empty or contains whitespace")]
    InvalidGoalId(String),
    #[error("duplicate goal {0:?} in vocabulary")]
    DuplicateGoal(String),
    #[error("object id {0:?} is empty")]
    InvalidObjectId(String),
    #[error("duplicate object id {0:?}")]
    DuplicateObject(String),
    #[error("object {0:?} has no goal occurrences")]
    EmptyObject(String),
    #[error("object {object:?} references goal {goal:?} absent from the vocabulary")]
    UnknownObjectGoal { object: String, goal: String },
    #[error("object {object:?} has zero frequency for goal {goal:?}")]
    ZeroFrequency { object: String, goal: String },
    #[error("query id {0:?} is empty")]
    InvalidQueryId(String),
    #[error("duplicate query id {0:?}")]
    DuplicateQuery(String),
    #[error("query {0:?} has no goals")]
    EmptyQuery(String),
    #[error("query {query:?} lists goal {goal:?} more than once")]
    DuplicateQueryGoal { query: String, goal: String },
    #[error("query {query:?} references goal {goal:?} absent from the vocabulary")]
    UnknownQueryGoal { query: String, goal: String },
    #[error("judgments reference unknown query {0:?}")]
    UnknownJudgedQuery(String),
    #[error("judgments for query {query:?} reference unknown object {object:?}")]
    UnknownJudgedObject { query: String, object: String },
}

/// An indexed object: goal id → occurrence frequency (≥ 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: String,
    pub occurrences: BTreeMap<String, u32>,
}

impl ObjectRecord {
    pub fn new<I, G>(id: impl Into<String>, occurrences: I) -> Self
    where
        I: IntoIterator<Item = (G, u32)>,
        G: Into<String>,
    {
        Self {
            id: id.into(),
            occurrences: occurrences
                .into_iter()
                .map(|(g, f)| (g.into(), f))
                .collect(),
        }
    }

    /// Number of distinct goals in the object (L_j).
    pub fn unique_goals(&self) -> usize {
        self.occurrences.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub goals: Vec<String>,
}

impl QueryRecord {
    pub fn new<I, G>(id: impl Into<String>, goals: I) -> Self
    where
        I: IntoIterator<Item = G>,
        G: Into<String>,
    {
        Self {
            id: id.into(),
            goals: goals.into_iter().map(Into::into).collect(),
        }
    }
}

/// Query id → set of pertinent object ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Judgments(BTreeMap<String, BTreeSet<String>>);

impl Judgments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: impl Into<String>, object: impl Into<String>) {
        self.0
            .entry(query.into())
            .or_default()
            .insert(object.into());
    }

    pub fn pertinent(&self, query: &str) -> Option<&BTreeSet<String>> {
        self.0.get(query)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses `query-id<TAB>object-id` lines. Blank lines are ignored.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut judgments = Self::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: PathBuf::from("<judgments>"),
                source,
            })?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(q), Some(o), None) if !q.is_empty() && !o.is_empty() => {
                    judgments.insert(q, o)
                }
                _ => {
                    return Err(CorpusError::Parse {
                        line: n + 1,
                        column: 1,
                        message: "expected `query-id<TAB>object-id`".into(),
                    })
                }
            }
        }
        Ok(judgments)
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_tsv(std::io::BufReader::new(file))
    }
}

impl FromIterator<(String, String)> for Judgments {
    fn from_iter<T: IntoIterator<Item = (String, String)>>(iter: T) -> Self {
        let mut j = Self::new();
        for (q, o) in iter {
            j.insert(q, o);
        }
        j
    }
}

/// A validated collection. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collection {
    vocabulary: Vec<String>,
    objects: Vec<ObjectRecord>,
    queries: Vec<QueryRecord>,
    judgments: Judgments,
}

#[derive(Serialize, Deserialize)]
struct CollectionFile {
    format: String,
    vocabulary: Vec<String>,
    objects: Vec<ObjectRecord>,
    #[serde(default)]
    queries: Vec<QueryRecord>,
    #[serde(default)]
    judgments: Judgments,
}

impl Collection {
    pub fn new(
        vocabulary: Vec<String>,
        objects: Vec<ObjectRecord>,
        queries: Vec<QueryRecord>,
        judgments: Judgments,
    ) -> Result<Self, ValidationError> {
        let collection = Self {
            vocabulary,
            objects,
            queries,
            judgments,
        };
        collection.validate()?;
        Ok(collection)
    }

    fn validate(&self) -> Result<(), ValidationError> {
        let mut vocab = HashSet::with_capacity(self.vocabulary.len());
        for goal in &self.vocabulary {
            if goal.is_empty() || goal.chars().any(char::is_whitespace) {
                return Err(ValidationError::InvalidGoalId(goal.clone()));
            }
            if !vocab.insert(goal.as_str()) {
                return Err(ValidationError::DuplicateGoal(goal.clone()));
            }
        }

        let mut object_ids = HashSet::with_capacity(self.objects.len());
        for object in &self.objects {
            if object.id.is_empty() {
                return Err(ValidationError::InvalidObjectId(object.id.clone()));
            }
            if !object_ids.insert(object.id.as_str()) {
                return Err(ValidationError::DuplicateObject(object.id.clone()));
            }
            if object.occurrences.is_empty() {
                return Err(ValidationError::EmptyObject(object.id.clone()));
            }
            for (goal, &f) in &object.occurrences {
                if !vocab.contains(goal.as_str()) {
                    return Err(ValidationError::UnknownObjectGoal {
                        object: object.id.clone(),
                        goal: goal.clone(),
                    });
                }
                if f == 0 {
                    return Err(ValidationError::ZeroFrequency {
                        object: object.id.clone(),
                        goal: goal.clone(),
                    });
                }
            }
        }

        let mut query_ids = HashSet::with_capacity(self.queries.len());
        for query in &self.queries {
            if query.id.is_empty() {
                return Err(ValidationError::InvalidQueryId(query.id.clone()));
            }
            if !query_ids.insert(query.id.as_str()) {
                return Err(ValidationError::DuplicateQuery(query.id.clone()));
            }
            if query.goals.is_empty() {
                return Err(ValidationError::EmptyQuery(query.id.clone()));
            }
            let mut seen = HashSet::new();
            for goal in &query.goals {
                if !vocab.contains(goal.as_str()) {
                    return Err(ValidationError::UnknownQueryGoal {
                        query: query.id.clone(),
                        goal: goal.clone(),
                    });
                }
                if !seen.insert(goal.as_str()) {
                    return Err(ValidationError::DuplicateQueryGoal {
                        query: query.id.clone(),
                        goal: goal.clone(),
                    });
                }
            }
        }

        validate_judgments(&self.judgments, &query_ids, &object_ids)
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn objects(&self) -> &[ObjectRecord] {
        &self.objects
    }

    pub fn queries(&self) -> &[QueryRecord] {
        &self.queries
    }

    pub fn query(&self, id: &str) -> Option<&QueryRecord> {
        self.queries.iter().find(|q| q.id == id)
    }

    pub fn judgments(&self) -> &Judgments {
        &self.judgments
    }

    /// Replaces the embedded judgments, re-checking that every id exists.
    pub fn with_judgments(mut self, judgments: Judgments) -> Result<Self, ValidationError> {
        let query_ids: HashSet<&str> = self.queries.iter().map(|q| q.id.as_str()).collect();
        let object_ids: HashSet<&str> = self.objects.iter().map(|o| o.id.as_str()).collect();
        validate_judgments(&judgments, &query_ids, &object_ids)?;
        self.judgments = judgments;
        Ok(self)
    }

    pub fn stats(&self) -> CollectionStats {
        stats(self)
    }

    pub fn from_json_str(text: &str) -> Result<Self, CorpusError> {
        let file: CollectionFile = serde_json::from_str(text).map_err(|e| {
            let mut message = e.to_string();
            // serde_json appends the position, which is reported separately
            if let Some(at) = message.rfind(" at line ") {
                message.truncate(at);
            }
            CorpusError::Parse {
                line: e.line(),
                column: e.column(),
                message,
            }
        })?;
        if file.format != FORMAT_TAG {
            return Err(ValidationError::UnsupportedFormat(file.format).into());
        }
        Ok(Self::new(
            file.vocabulary,
            file.objects,
            file.queries,
            file.judgments,
        )?)
    }

    /// Canonical serialization: pretty-printed JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let file = CollectionFile {
            format: FORMAT_TAG.to_string(),
            vocabulary: self.vocabulary.clone(),
            objects: self.objects.clone(),
            queries: self.queries.clone(),
            judgments: self.judgments.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("collection serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn validate_judgments(
    judgments: &Judgments,
    query_ids: &HashSet<&str>,
    object_ids: &HashSet<&str>,
) -> Result<(), ValidationError> {
    for (query, objects) in judgments.iter() {
        if !query_ids.contains(query.as_str()) {
            return Err(ValidationError::UnknownJudgedQuery(query.clone()));
        }
        if let Some(object) = objects.iter().find(|o| !object_ids.contains(o.as_str())) {
            return Err(ValidationError::UnknownJudgedObject {
                query: query.clone(),
                object: object.clone(),
            });
        }
    }
    Ok(())
}

pub fn load_collection(path: impl AsRef<Path>) -> Result<Collection, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Collection::from_json_str(&text)
}

/// Summary counts in the shape of a test-collection data table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub object_count: usize,
    pub query_count: usize,
    pub vocabulary_size: usize,
    pub avg_goals_per_query: f64,
    pub avg_goals_per_object: f64,
}

pub fn stats(collection: &Collection) -> CollectionStats {
    let ratio = |total: usize, count: usize| {
        if count == 0 {
            0.0
        } else {
            total as f64 / count as f64
        }
    };
    let object_goals: usize = collection
        .objects
        .iter()
        .map(ObjectRecord::unique_goals)
        .sum();
    let query_goals: usize = collection.queries.iter().map(|q| q.goals.len()).sum();
    CollectionStats {
        object_count: collection.objects.len(),
        query_count: collection.queries.len(),
        vocabulary_size: collection.vocabulary.len(),
        avg_goals_per_query: ratio(query_goals, collection.queries.len()),
        avg_goals_per_object: ratio(object_goals, collection.objects.len()),
    }
}
