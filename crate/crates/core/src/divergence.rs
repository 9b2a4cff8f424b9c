//! Histogram KL divergence between a reference and a candidate score distribution.
//!
//! Both histograms are smoothed by adding [`KL_EPSILON`] to every bin and are
//! *not* re-normalised afterwards, so the reported value can differ from the
//! exact divergence of the smoothed, re-normalised pair by at most about
//! `B · ε` (5e-9 at 50 bins).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::similarity::{standardize, SimilarityError};
use crate::stats::{build_histogram, normalize_histogram, Histogram, StatsError};

/// Per-bin smoothing constant.
pub const KL_EPSILON: f64 = 1e-10;

/// Allowed deviation of an input histogram's total from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DivergenceError {
    #[error("histograms differ in binning ({p} vs {q} bins)")]
    BinCountMismatch { p: usize, q: usize },
    #[error("histogram is not a probability distribution (total mass {total})")]
    UnnormalizedInput { total: f64 },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Which quantity the histogram axis measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramAxis {
    /// `(raw + 1) / 2`.
    #[default]
    StandardizedSimilarity,
    /// `1 − (raw + 1) / 2`, the reflected axis.
    StandardizedDistance,
}

impl HistogramAxis {
    /// Maps a raw cosine similarity onto this axis.
    pub fn project(self, raw: f64) -> Result<f64, SimilarityError> {
        let s = standardize(raw)?;
        Ok(match self {
            HistogramAxis::StandardizedSimilarity => s,
            HistogramAxis::StandardizedDistance => 1.0 - s,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction {
    /// Reference distribution.
    pub p: String,
    /// Candidate distribution.
    pub q: String,
}

impl Default for Direction {
    fn default() -> Self {
        Self {
            p: "reference".into(),
            q: "candidate".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlResult {
    /// Divergence in nats.
    pub value: f64,
    pub bin_count: usize,
    pub epsilon: f64,
    pub direction: Direction,
    pub axis: HistogramAxis,
}

fn check_normalized(h: &Histogram) -> Result<(), DivergenceError> {
    let total = h.total();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE
        || h.masses.iter().any(|&m| m.is_nan() || m < 0.0)
    {
        return Err(DivergenceError::UnnormalizedInput { total });
    }
    Ok(())
}

/// `KL(P ‖ Q) = Σ (P+ε) ln((P+ε)/(Q+ε))` over bins, in nats.
pub fn kl_divergence(p: &Histogram, q: &Histogram) -> Result<KlResult, DivergenceError> {
    if p.bin_count != q.bin_count
        || p.masses.len() != q.masses.len()
        || p.lower != q.lower
        || p.upper != q.upper
    {
        return Err(DivergenceError::BinCountMismatch {
            p: p.bin_count,
            q: q.bin_count,
        });
    }
    check_normalized(p)?;
    check_normalized(q)?;
    let mut acc = CompensatedSum::new();
    for (&pm, &qm) in p.masses.iter().zip(&q.masses) {
        let (ps, qs) = (pm + KL_EPSILON, qm + KL_EPSILON);
        acc.add(ps * libm::log(ps / qs));
    }
    Ok(KlResult {
        value: acc.value(),
        bin_count: p.bin_count,
        epsilon: KL_EPSILON,
        direction: Direction::default(),
        axis: HistogramAxis::default(),
    })
}

/// Normalised histogram of raw scores projected onto `axis`.
pub fn score_histogram(
    raw_scores: &[f64],
    bin_count: usize,
    axis: HistogramAxis,
) -> Result<Histogram, DivergenceError> {
    let projected = raw_scores
        .iter()
        .map(|&r| axis.project(r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(normalize_histogram(&build_histogram(
        &projected, bin_count,
    )?)?)
}

/// KL divergence of a candidate score set from a reference one, with the
/// reference as `P` and the candidate as `Q`.
pub fn compare_datasets(
    candidate: &[f64],
    reference: &[f64],
    bin_count: usize,
    axis: HistogramAxis,
) -> Result<KlResult, DivergenceError> {
    let p = score_histogram(reference, bin_count, axis)?;
    let q = score_histogram(candidate, bin_count, axis)?;
    let mut result = kl_divergence(&p, &q)?;
    result.axis = axis;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(m: &[f64]) -> Histogram {
        Histogram {
            bin_count: m.len(),
            lower: 0.0,
            upper: 1.0,
            masses: m.to_vec(),
        }
    }

    #[test]
    fn identical_is_exactly_zero() {
        let p = hist(&[0.1, 0.0, 0.6, 0.3]);
        assert_eq!(kl_divergence(&p, &p).unwrap().value, 0.0);
    }

    #[test]
    fn two_bin_hand_value() {
        // 0.5·ln 2 + 0.5·ln(2/3) evaluated by hand with ε: terms
        // (0.5+ε)·ln((0.5+ε)/(0.25+ε)) + (0.5+ε)·ln((0.5+ε)/(0.75+ε)).
        let expected = 0.143_841_036_187_992;
        let got = kl_divergence(&hist(&[0.5, 0.5]), &hist(&[0.25, 0.75]))
            .unwrap()
            .value;
        assert!((got - expected).abs() < 1e-12, "{got}");
    }

    #[test]
    fn disjoint_support_is_finite() {
        // (1+ε)·ln((1+ε)/ε) + ε·ln(ε/(1+ε)) ≈ ln(1e10) = 23.02585...
        let expected = 23.025_850_930_040_457;
        let got = kl_divergence(&hist(&[1.0, 0.0]), &hist(&[0.0, 1.0]))
            .unwrap()
            .value;
        assert!(got.is_finite());
        assert!((got - expected).abs() < 1e-12, "{got}");
    }

    #[test]
    fn asymmetric() {
        let p = hist(&[0.9, 0.1]);
        let q = hist(&[0.5, 0.5]);
        let pq = kl_divergence(&p, &q).unwrap().value;
        let qp = kl_divergence(&q, &p).unwrap().value;
        assert!((pq - qp).abs() > 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            kl_divergence(&hist(&[1.0]), &hist(&[0.5, 0.5])),
            Err(DivergenceError::BinCountMismatch { p: 1, q: 2 })
        );
        assert!(matches!(
            kl_divergence(&hist(&[3.0, 1.0]), &hist(&[0.5, 0.5])),
            Err(DivergenceError::UnnormalizedInput { .. })
        ));
    }

    #[test]
    fn compare_identical_sets() {
        let scores = [0.1, 0.4, -0.3, 0.9, 0.9];
        let r = compare_datasets(&scores, &scores, 50, HistogramAxis::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.direction.p, "reference");
    }

    #[test]
    fn distance_axis_reflects() {
        let h = score_histogram(&[-1.0, -0.9], 2, HistogramAxis::StandardizedDistance).unwrap();
        assert_eq!(h.masses, vec![0.0, 1.0]);
    }
}
