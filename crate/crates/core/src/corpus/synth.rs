//! Deterministic synthetic collections shaped like a small goal-indexed test
//! collection (140 objects, 25 queries, 50 goals by default).
//!
//! Each query gets a set of related "topic" goals disjoint from its own goals.
//! Pertinent objects are spread over the least-loaded objects and built by
//! planting at least one query goal plus a random share of the remaining query
//! and topic goals; the rest of every object is filled with background goals
//! drawn from a Zipf-like popularity distribution over the vocabulary.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Collection, CorpusError, Judgments, ObjectRecord, QueryRecord};

/// Probability that a non-required query goal is planted in a pertinent object.
const QUERY_GOAL_PLANT_RATE: f64 = 0.5;
/// Probability that a topic goal is planted in a pertinent object.
const TOPIC_GOAL_PLANT_RATE: f64 = 0.7;
/// Topic size as a fraction of the mean object length.
const TOPIC_SHARE: f64 = 0.7;
/// Exponent of the background goal popularity distribution.
const BACKGROUND_ZIPF_EXPONENT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub object_count: usize,
    pub query_count: usize,
    pub vocabulary_size: usize,
    pub avg_goals_per_object: f64,
    pub avg_goals_per_query: f64,
    pub max_frequency: u32,
    pub pertinent_per_query: usize,
}

impl Default for SynthParams {
    /// 140 objects, 25 queries, 50 goals,
    /// 6 goals per object, 3 goals per query.
    fn default() -> Self {
        Self {
            object_count: 140,
            query_count: 25,
            vocabulary_size: 50,
            avg_goals_per_object: 6.0,
            avg_goals_per_query: 3.0,
            max_frequency: 5,
            pertinent_per_query: 10,
        }
    }
}

impl SynthParams {
    fn check(&self) -> Result<(), CorpusError> {
        let infeasible = |msg: String| Err(CorpusError::InfeasibleParams(msg));
        let counts = [
            ("object_count", self.object_count),
            ("query_count", self.query_count),
            ("vocabulary_size", self.vocabulary_size),
            ("max_frequency", self.max_frequency as usize),
            ("pertinent_per_query", self.pertinent_per_query),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v < 1) {
            return infeasible(format!("{name} must be at least 1"));
        }
        for (name, avg) in [
            ("avg_goals_per_object", self.avg_goals_per_object),
            ("avg_goals_per_query", self.avg_goals_per_query),
        ] {
            if !avg.is_finite() || avg < 1.0 {
                return infeasible(format!("{name} must be at least 1"));
            }
            if avg > self.vocabulary_size as f64 {
                return infeasible(format!(
                    "{name} = {avg} exceeds vocabulary_size = {}",
                    self.vocabulary_size
                ));
            }
        }
        if self.pertinent_per_query > self.object_count {
            return infeasible(format!(
                "pertinent_per_query = {} exceeds object_count = {}",
                self.pertinent_per_query, self.object_count
            ));
        }
        Ok(())
    }
}

/// Generates a validated collection and its judgments. The judgments are also
/// embedded in the returned collection.
pub fn generate_synthetic(
    params: &SynthParams,
    seed: u64,
) -> Result<(Collection, Judgments), CorpusError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let vocabulary = ids("g", params.vocabulary_size);
    let object_ids = ids("o", params.object_count);
    let query_ids = ids("q", params.query_count);

    let query_lengths = draw_lengths(
        &mut rng,
        params.query_count,
        params.avg_goals_per_query,
        params.vocabulary_size,
    );
    let topic_size = ((params.avg_goals_per_object * TOPIC_SHARE).round().max(1.0)) as usize;

    let mut queries = Vec::with_capacity(params.query_count);
    let mut topics = Vec::with_capacity(params.query_count);
    for (id, &len) in query_ids.iter().zip(&query_lengths) {
        let picks = sample(&mut rng, params.vocabulary_size, params.vocabulary_size);
        let picks: Vec<usize> = picks.into_iter().collect();
        let goals: Vec<usize> = picks[..len].to_vec();
        let topic_end = (len + topic_size).min(picks.len());
        topics.push(picks[len..topic_end].to_vec());
        queries.push(QueryRecord::new(
            id.clone(),
            goals.iter().map(|&g| vocabulary[g].clone()),
        ));
    }
    let query_goals: Vec<Vec<usize>> = queries
        .iter()
        .map(|q| {
            q.goals
                .iter()
                .map(|g| {
                    vocabulary
                        .iter()
                        .position(|v| v == g)
                        .expect("goal in vocabulary")
                })
                .collect()
        })
        .collect();

    // object index → queries it is pertinent to
    let mut assignments: Vec<Vec<usize>> = vec![Vec::new(); params.object_count];
    let mut judgments = Judgments::new();
    for (q, query) in queries.iter().enumerate() {
        let mut chosen: Vec<usize> = (0..params.object_count).collect();
        chosen.shuffle(&mut rng);
        chosen.sort_by_key(|&o| assignments[o].len());
        chosen.truncate(params.pertinent_per_query);
        chosen.sort_unstable();
        for o in chosen {
            assignments[o].push(q);
            judgments.insert(query.id.clone(), object_ids[o].clone());
        }
    }

    let object_lengths = draw_lengths(
        &mut rng,
        params.object_count,
        params.avg_goals_per_object,
        params.vocabulary_size,
    );
    let mut popularity: Vec<usize> = (0..params.vocabulary_size).collect();
    popularity.shuffle(&mut rng);
    let background = WeightedIndex::new(
        popularity
            .iter()
            .map(|&rank| 1.0 / ((rank + 1) as f64).powf(BACKGROUND_ZIPF_EXPONENT)),
    )
    .expect("positive weights");
    let mut objects = Vec::with_capacity(params.object_count);
    for (o, id) in object_ids.iter().enumerate() {
        let mut required = Vec::new();
        let mut optional = Vec::new();
        for &q in &assignments[o] {
            let goals = &query_goals[q];
            let keep = rng.gen_range(0..goals.len());
            push_unique(&mut required, goals[keep]);
            for (i, &g) in goals.iter().enumerate() {
                if i != keep && rng.gen_bool(QUERY_GOAL_PLANT_RATE) {
                    optional.push(g);
                }
            }
            for &g in &topics[q] {
                if rng.gen_bool(TOPIC_GOAL_PLANT_RATE) {
                    optional.push(g);
                }
            }
        }
        optional.shuffle(&mut rng);

        let target = object_lengths[o].max(required.len());
        let mut planted = required;
        for g in optional {
            if planted.len() >= target {
                break;
            }
            push_unique(&mut planted, g);
        }

        let mut occurrences = BTreeMap::new();
        for &g in &planted {
            occurrences.insert(
                vocabulary[g].clone(),
                rng.gen_range(1..=params.max_frequency),
            );
        }
        while occurrences.len() < target {
            let g = background.sample(&mut rng);
            if occurrences.contains_key(&vocabulary[g]) {
                continue;
            }
            // background goals skew towards low frequencies
            let f = rng
                .gen_range(1..=params.max_frequency)
                .min(rng.gen_range(1..=params.max_frequency));
            occurrences.insert(vocabulary[g].clone(), f);
        }
        objects.push(ObjectRecord {
            id: id.clone(),
            occurrences,
        });
    }

    let collection = Collection::new(vocabulary, objects, queries, judgments.clone())?;
    Ok((collection, judgments))
}

fn push_unique(list: &mut Vec<usize>, value: usize) {
    if !list.contains(&value) {
        list.push(value);
    }
}

fn ids(prefix: &str, count: usize) -> Vec<String> {
    let width = count.to_string().len();
    (1..=count)
        .map(|i| format!("{prefix}{i:0width$}"))
        .collect()
}

/// Draws `count` lengths in `1..=max` from a geometric distribution shifted to
/// start at half the requested mean, then nudges random entries until the total equals
/// `round(mean * count)` so the sample mean matches the request.
fn draw_lengths(rng: &mut ChaCha8Rng, count: usize, mean: f64, max: usize) -> Vec<usize> {
    let mut lengths: Vec<usize> = (0..count)
        .map(|_| {
            let lo = ((mean / 2.0).round() as usize).clamp(1, max);
            let m = mean - lo as f64 + 1.0;
            if m <= 1.0 {
                return lo;
            }
            let p = 1.0 / m;
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let extra = (u.ln() / (1.0 - p).ln()).floor() as usize;
            (lo + extra).clamp(1, max)
        })
        .collect();

    let target = ((mean * count as f64).round() as usize).clamp(count, count * max);
    let mut total: usize = lengths.iter().sum();
    while total != target {
        let grow = total < target;
        let eligible: Vec<usize> = (0..count)
            .filter(|&i| {
                if grow {
                    lengths[i] < max
                } else {
                    lengths[i] > 1
                }
            })
            .collect();
        let i = *eligible.choose(rng).expect("target within bounds");
        if grow {
            lengths[i] += 1;
            total += 1;
        } else {
            lengths[i] -= 1;
            total -= 1;
        }
    }
    lengths
}
