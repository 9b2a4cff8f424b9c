//! Cosine similarity, score standardisation and mated / non-mated pair sampling.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, EmbeddingRecord};
use crate::rng::{sample_indices, SplitMix64};

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("vectors have different dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero-norm vector")]
    ZeroNormVector,
    #[error("vector has a non-finite component")]
    NonFiniteComponent,
    #[error("raw score {0} is outside [-1, 1]")]
    OutOfRange(f64),
    #[error("unknown identity {0}")]
    UnknownIdentity(String),
    #[error("identity {identity_id} has {available} variations, {requested} requested")]
    InsufficientVariations {
        identity_id: String,
        available: usize,
        requested: usize,
    },
    #[error("{requested} pairs requested but only {available} distinct pairs exist")]
    TooManyPairs { requested: usize, available: u64 },
    #[error("non-mated pairs need at least two identities")]
    SingleIdentityDataset,
    #[error("pair references unknown record ({identity_id}, {variation_id})")]
    UnknownReference {
        identity_id: String,
        variation_id: u32,
    },
}

/// `a·b / (‖a‖‖b‖)` evaluated in f64 and clamped to `[-1, 1]`.
///
/// The denominator is `sqrt(‖a‖² · ‖b‖²)`, which is symmetric in its operands
/// and gives exactly `1.0` for identical inputs.
pub fn cosine_similarity<T: Copy + Into<f64>>(a: &[T], b: &[T]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.into(), y.into());
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    if !(dot.is_finite() && aa.is_finite() && bb.is_finite()) {
        return Err(SimilarityError::NonFiniteComponent);
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(SimilarityError::ZeroNormVector);
    }
    Ok((dot / (aa * bb).sqrt()).clamp(-1.0, 1.0))
}

/// Maps a raw cosine similarity from `[-1, 1]` onto `[0, 1]` via `(raw + 1) / 2`.
pub fn standardize(raw: f64) -> Result<f64, SimilarityError> {
    if !(-1.0..=1.0).contains(&raw) {
        return Err(SimilarityError::OutOfRange(raw));
    }
    Ok((raw + 1.0) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    Mated,
    NonMated,
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairKind::Mated => "mated",
            PairKind::NonMated => "non_mated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VariationRef {
    pub identity_id: String,
    pub variation_id: u32,
}

impl From<&EmbeddingRecord> for VariationRef {
    fn from(r: &EmbeddingRecord) -> Self {
        Self {
            identity_id: r.identity_id.clone(),
            variation_id: r.variation_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairSample {
    pub kind: PairKind,
    pub left: VariationRef,
    pub right: VariationRef,
}

impl PairSample {
    /// The unordered pair as an ordered key.
    pub fn unordered_key(&self) -> (&VariationRef, &VariationRef) {
        if self.left <= self.right {
            (&self.left, &self.right)
        } else {
            (&self.right, &self.left)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub raw: f64,
    pub standardized: f64,
}

impl SimilarityScore {
    pub fn from_raw(raw: f64) -> Result<Self, SimilarityError> {
        Ok(Self {
            raw,
            standardized: standardize(raw)?,
        })
    }
}

/// How non-mated pairs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonMatedMode {
    /// Each identity anchors its own set of non-mated comparisons.
    #[default]
    PerIdentity,
    /// One pool drawn uniformly from all cross-identity pairs in the dataset.
    Global,
}

fn pairs_in(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Decodes index `k` of the lexicographic enumeration of `{(i, j) : i < j < n}`.
fn combination_at(n: u64, mut k: u64) -> (u64, u64) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

fn identity_records<'a>(
    dataset: &'a Dataset,
    identity_id: &str,
) -> Result<(usize, &'a [EmbeddingRecord]), SimilarityError> {
    let index = dataset
        .identity_index(identity_id)
        .ok_or_else(|| SimilarityError::UnknownIdentity(identity_id.to_string()))?;
    Ok((index, dataset.records_at(index)))
}

/// Mated pairs for one identity: `n_variations` variations are drawn without
/// replacement from the identity's canonical variation list, then `n_pairs`
/// distinct unordered pairs are drawn without replacement from their
/// `C(n_variations, 2)` combinations.
///
/// Within a pair, `left` has the smaller variation id. Pairs are in draw order.
pub fn sample_mated_pairs(
    dataset: &Dataset,
    identity_id: &str,
    n_variations: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<PairSample>, SimilarityError> {
    let (_, records) = identity_records(dataset, identity_id)?;
    if records.len() < n_variations {
        return Err(SimilarityError::InsufficientVariations {
            identity_id: identity_id.to_string(),
            available: records.len(),
            requested: n_variations,
        });
    }
    let combinations = pairs_in(n_variations as u64);
    if n_pairs as u64 > combinations {
        return Err(SimilarityError::TooManyPairs {
            requested: n_pairs,
            available: combinations,
        });
    }

    let mut rng = SplitMix64::from_stream(seed, "mated", identity_id);
    let mut chosen = sample_indices(&mut rng, records.len() as u64, n_variations);
    chosen.sort_unstable();
    let pairs = sample_indices(&mut rng, combinations, n_pairs)
        .into_iter()
        .map(|k| {
            let (i, j) = combination_at(n_variations as u64, k);
            PairSample {
                kind: PairKind::Mated,
                left: (&records[chosen[i as usize] as usize]).into(),
                right: (&records[chosen[j as usize] as usize]).into(),
            }
        })
        .collect();
    Ok(pairs)
}

/// Non-mated pairs anchored on one identity. The pair space is every
/// (anchor variation, variation of another identity) combination; `n_pairs`
/// are drawn from it uniformly without replacement. With equal variation
/// counts per identity this picks the other identity uniformly.
pub fn sample_non_mated_pairs(
    dataset: &Dataset,
    identity_id: &str,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<PairSample>, SimilarityError> {
    if dataset.identities().len() < 2 {
        return Err(SimilarityError::SingleIdentityDataset);
    }
    let (index, anchor) = identity_records(dataset, identity_id)?;
    let all = dataset.records();
    let anchor_start = dataset.span_at(index).start;
    let others = (all.len() - anchor.len()) as u64;
    let space = anchor.len() as u64 * others;
    if n_pairs as u64 > space {
        return Err(SimilarityError::TooManyPairs {
            requested: n_pairs,
            available: space,
        });
    }

    let mut rng = SplitMix64::from_stream(seed, "non-mated", identity_id);
    let pairs = sample_indices(&mut rng, space, n_pairs)
        .into_iter()
        .map(|k| {
            let a = (k / others) as usize;
            let mut o = (k % others) as usize;
            if o >= anchor_start {
                o += anchor.len();
            }
            PairSample {
                kind: PairKind::NonMated,
                left: (&anchor[a]).into(),
                right: (&all[o]).into(),
            }
        })
        .collect();
    Ok(pairs)
}

/// Non-mated pairs drawn uniformly from every cross-identity unordered pair
/// in the dataset. `left` precedes `right` in canonical record order.
pub fn sample_non_mated_global(
    dataset: &Dataset,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<PairSample>, SimilarityError> {
    if dataset.identities().len() < 2 {
        return Err(SimilarityError::SingleIdentityDataset);
    }
    let all = dataset.records();
    // partners[r] = records after r's identity block; prefix[r] = pairs before record r.
    let mut block_end = vec![0usize; all.len()];
    let mut start = 0;
    while start < all.len() {
        let end = start
            + all[start..]
                .iter()
                .take_while(|r| r.identity_id == all[start].identity_id)
                .count();
        block_end[start..end].fill(end);
        start = end;
    }
    let mut prefix = Vec::with_capacity(all.len() + 1);
    prefix.push(0u64);
    for &end in &block_end {
        prefix.push(prefix.last().unwrap() + (all.len() - end) as u64);
    }
    let space = *prefix.last().unwrap();
    if n_pairs as u64 > space {
        return Err(SimilarityError::TooManyPairs {
            requested: n_pairs,
            available: space,
        });
    }
    let mut rng = SplitMix64::from_stream(seed, "non-mated-global", dataset.name());
    let pairs = sample_indices(&mut rng, space, n_pairs)
        .into_iter()
        .map(|k| {
            let r = prefix.partition_point(|&p| p <= k) - 1;
            let s = block_end[r] + (k - prefix[r]) as usize;
            PairSample {
                kind: PairKind::NonMated,
                left: (&all[r]).into(),
                right: (&all[s]).into(),
            }
        })
        .collect();
    Ok(pairs)
}

fn lookup<'a>(
    dataset: &'a Dataset,
    v: &VariationRef,
) -> Result<&'a EmbeddingRecord, SimilarityError> {
    dataset
        .record(&v.identity_id, v.variation_id)
        .ok_or_else(|| SimilarityError::UnknownReference {
            identity_id: v.identity_id.clone(),
            variation_id: v.variation_id,
        })
}

/// Scores every pair, in order.
pub fn score_pairs(
    dataset: &Dataset,
    pairs: &[PairSample],
) -> Result<Vec<SimilarityScore>, SimilarityError> {
    pairs
        .iter()
        .map(|p| {
            let a = lookup(dataset, &p.left)?;
            let b = lookup(dataset, &p.right)?;
            SimilarityScore::from_raw(cosine_similarity(&a.vector, &b.vector)?)
        })
        .collect()
}
