//! Evidence over a finite frame: mass functions, belief and plausibility
//! bounds, nestedness, and the possibility distribution induced by a nested
//! (consonant) mass function.
//!
//! Naming follows the usual convention: belief is the subset-sum
//! `Σ_{E ⊆ A} m(E)` and plausibility is the intersection-sum
//! `Σ_{E ∩ A ≠ ∅} m(E)`. For nested focal elements the plausibility of a
//! singleton is the possibility `π(w)`, and plausibility is max-decomposable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Tolerance on `Σ m(E) = 1`.
pub const MASS_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PossibilityError {
    #[error("frame must contain at least one element")]
    EmptyFrame,
    #[error("duplicate frame element {0:?}")]
    DuplicateElement(String),
    #[error("{0:?} is not an element of the frame")]
    UnknownElement(String),
    #[error("subset {0} is not contained in the frame")]
    NotASubset(Subset),
    #[error("focal element must be non-empty")]
    EmptyFocal,
    #[error("focal element {0} listed more than once")]
    DuplicateFocal(Subset),
    #[error("focal element {subset} has non-positive mass {mass}")]
    NonPositiveMass { subset: Subset, mass: f64 },
    #[error("masses sum to {sum}, deviating from 1 by {deviation:e}")]
    SumNotOne { sum: f64, deviation: f64 },
    #[error("focal elements are not nested")]
    NotNested,
}

/// Finite ordered set of distinct labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    elements: Vec<String>,
    positions: BTreeMap<String, usize>,
}

impl Frame {
    pub fn new<I, S>(elements: I) -> Result<Self, PossibilityError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if elements.is_empty() {
            return Err(PossibilityError::EmptyFrame);
        }
        let mut positions = BTreeMap::new();
        for (i, e) in elements.iter().enumerate() {
            if positions.insert(e.clone(), i).is_some() {
                return Err(PossibilityError::DuplicateElement(e.clone()));
            }
        }
        Ok(Self {
            elements,
            positions,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    /// Builds a subset from element labels.
    pub fn subset<I, S>(&self, labels: I) -> Result<Subset, PossibilityError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        labels
            .into_iter()
            .map(|l| {
                self.positions
                    .get(l.as_ref())
                    .copied()
                    .ok_or_else(|| PossibilityError::UnknownElement(l.as_ref().to_string()))
            })
            .collect::<Result<BTreeSet<_>, _>>()
            .map(Subset)
    }

    pub fn full(&self) -> Subset {
        Subset((0..self.len()).collect())
    }

    pub fn complement(&self, subset: &Subset) -> Subset {
        Subset((0..self.len()).filter(|i| !subset.0.contains(i)).collect())
    }

    fn check(&self, subset: &Subset) -> Result<(), PossibilityError> {
        match subset.0.last() {
            Some(&max) if max >= self.len() => Err(PossibilityError::NotASubset(subset.clone())),
            _ => Ok(()),
        }
    }
}

/// A set of frame positions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(BTreeSet<usize>);

impl Subset {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Self(indices.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.contains(&index)
    }

    pub fn is_subset(&self, other: &Subset) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn intersects(&self, other: &Subset) -> bool {
        !self.0.is_disjoint(&other.0)
    }

    pub fn union(&self, other: &Subset) -> Subset {
        Subset(self.0.union(&other.0).copied().collect())
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// Focal elements with strictly positive masses summing to one.
///
/// Focal elements are stored in canonical order: ascending cardinality, then
/// ascending element positions. For a nested mass function this is the
/// inclusion chain `E_1 ⊂ E_2 ⊂ … ⊂ E_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    frame: Frame,
    focal: Vec<(Subset, f64)>,
}

impl MassFunction {
    /// Validates a raw focal list against the frame.
    pub fn new(frame: Frame, candidate: Vec<(Subset, f64)>) -> Result<Self, PossibilityError> {
        let mut seen = BTreeSet::new();
        for (subset, mass) in &candidate {
            if subset.is_empty() {
                return Err(PossibilityError::EmptyFocal);
            }
            frame.check(subset)?;
            if !seen.insert(subset) {
                return Err(PossibilityError::DuplicateFocal(subset.clone()));
            }
            // NaN fails this comparison too
            if mass.is_nan() || *mass <= 0.0 {
                return Err(PossibilityError::NonPositiveMass {
                    subset: subset.clone(),
                    mass: *mass,
                });
            }
        }
        let sum: f64 = candidate.iter().map(|(_, m)| m).sum();
        let deviation = (sum - 1.0).abs();
        if deviation.is_nan() || deviation > MASS_SUM_TOLERANCE {
            return Err(PossibilityError::SumNotOne { sum, deviation });
        }
        let mut focal = candidate;
        focal.sort_by(|(a, _), (b, _)| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(Self { frame, focal })
    }

    /// Convenience constructor from element labels.
    pub fn from_labels<S: AsRef<str>>(
        frame: Frame,
        candidate: &[(&[S], f64)],
    ) -> Result<Self, PossibilityError> {
        let focal = candidate
            .iter()
            .map(|(labels, m)| Ok((frame.subset(labels.iter())?, *m)))
            .collect::<Result<Vec<_>, PossibilityError>>()?;
        Self::new(frame, focal)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Focal elements in canonical order.
    pub fn focal_elements(&self) -> &[(Subset, f64)] {
        &self.focal
    }

    /// Lower bound: total mass of focal elements contained in `a`.
    pub fn belief(&self, a: &Subset) -> Result<f64, PossibilityError> {
        self.frame.check(a)?;
        Ok(self
            .focal
            .iter()
            .filter(|(e, _)| e.is_subset(a))
            .map(|(_, m)| m)
            .sum())
    }

    /// Upper bound: total mass of focal elements intersecting `a`.
    pub fn plausibility(&self, a: &Subset) -> Result<f64, PossibilityError> {
        self.frame.check(a)?;
        Ok(self
            .focal
            .iter()
            .filter(|(e, _)| e.intersects(a))
            .map(|(_, m)| m)
            .sum())
    }

    /// True iff the focal elements form a chain under strict inclusion.
    pub fn is_nested(&self) -> bool {
        // canonical order sorts by cardinality, so equal cardinalities are adjacent
        self.focal
            .windows(2)
            .all(|w| w[0].0.len() < w[1].0.len() && w[0].0.is_subset(&w[1].0))
    }

    /// Possibility distribution of a nested mass function: an element that
    /// first appears in `E_i` gets `Σ_{j ≥ i} m(E_j)`; elements outside the
    /// largest focal element get 0.
    pub fn to_possibility_distribution(&self) -> Result<PossibilityDistribution, PossibilityError> {
        if !self.is_nested() {
            return Err(PossibilityError::NotNested);
        }
        let mut pi = vec![0.0; self.frame.len()];
        let mut assigned = Subset::empty();
        for (i, (focal, _)) in self.focal.iter().enumerate() {
            let tail: f64 = self.focal[i..].iter().map(|(_, m)| m).sum();
            for w in focal.indices().filter(|w| !assigned.contains(*w)) {
                pi[w] = tail;
            }
            assigned = focal.clone();
        }
        Ok(PossibilityDistribution {
            frame: self.frame.clone(),
            pi,
        })
    }
}

/// Element → possibility degree in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PossibilityDistribution {
    frame: Frame,
    pi: Vec<f64>,
}

impl PossibilityDistribution {
    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Degree of the element at `index`.
    pub fn degree(&self, index: usize) -> f64 {
        self.pi[index]
    }

    pub fn degree_of(&self, label: &str) -> Option<f64> {
        self.frame.positions.get(label).map(|&i| self.pi[i])
    }

    pub fn degrees(&self) -> &[f64] {
        &self.pi
    }

    /// `max_{w ∈ A} π(w)`, 0 for the empty set.
    pub fn possibility_of(&self, a: &Subset) -> Result<f64, PossibilityError> {
        self.frame.check(a)?;
        Ok(a.indices().map(|w| self.pi[w]).fold(0.0, f64::max))
    }

    /// `1 − possibility(Ω ∖ A)`.
    pub fn necessity_of(&self, a: &Subset) -> Result<f64, PossibilityError> {
        self.frame.check(a)?;
        Ok(1.0 - self.possibility_of(&self.frame.complement(a))?)
    }
}
