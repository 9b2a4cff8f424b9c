//! Score distributions, their summaries, and histograms over `[0, 1]`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::compensated_sum;
use crate::similarity::{PairKind, SimilarityScore};

/// Default histogram resolution over the standardised axis.
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("cannot summarise an empty distribution")]
    EmptyDistribution,
    #[error("cannot build a histogram from no scores")]
    EmptyScores,
    #[error("histogram needs at least one bin")]
    ZeroBins,
    #[error("score {0} lies outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("histogram has zero total mass")]
    ZeroTotalMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub kind: PairKind,
    pub scores: Vec<SimilarityScore>,
}

impl ScoreDistribution {
    pub fn new(kind: PairKind, scores: Vec<SimilarityScore>) -> Self {
        Self { kind, scores }
    }

    pub fn count(&self) -> usize {
        self.scores.len()
    }

    pub fn values(&self, axis: ScoreAxis) -> Vec<f64> {
        self.scores
            .iter()
            .map(|s| match axis {
                ScoreAxis::Raw => s.raw,
                ScoreAxis::Standardized => s.standardized,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreAxis {
    Raw,
    Standardized,
}

/// Normalisation of the variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdConvention {
    /// Divide by `N`.
    #[default]
    Population,
    /// Divide by `N - 1`; a single score has std 0.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl fmt::Display for DistributionSummary {
    /// Two-decimal `mean ± std`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Adding 0.0 turns a rounded -0.0 into 0.0.
        let round = |x: f64| (x * 100.0).round() / 100.0 + 0.0;
        write!(f, "{:.2} ± {:.2}", round(self.mean), round(self.std))
    }
}

pub fn summarize(
    dist: &ScoreDistribution,
    axis: ScoreAxis,
) -> Result<DistributionSummary, StatsError> {
    summarize_values(&dist.values(axis), StdConvention::Population)
}

/// Two-pass mean and standard deviation with compensated sums. The mean is
/// clamped into `[min, max]` of the input to absorb rounding.
pub fn summarize_values(
    values: &[f64],
    convention: StdConvention,
) -> Result<DistributionSummary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyDistribution);
    }
    let n = values.len() as f64;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let mean = (compensated_sum(values.iter().copied()) / n).clamp(lo, hi);
    let squares = compensated_sum(values.iter().map(|&x| (x - mean) * (x - mean)));
    let divisor = match convention {
        StdConvention::Population => n,
        StdConvention::Sample if values.len() > 1 => n - 1.0,
        StdConvention::Sample => 1.0,
    };
    Ok(DistributionSummary {
        mean,
        std: (squares / divisor).sqrt(),
        count: values.len(),
    })
}

/// Uniform bins over `[0, 1]`. Before normalisation `masses` holds counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_count: usize,
    pub lower: f64,
    pub upper: f64,
    pub masses: Vec<f64>,
}

impl Histogram {
    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let width = (self.upper - self.lower) / self.bin_count as f64;
        let lo = self.lower + width * bin as f64;
        let hi = if bin + 1 == self.bin_count {
            self.upper
        } else {
            self.lower + width * (bin + 1) as f64
        };
        (lo, hi)
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    /// The same histogram with bin order reversed (the axis reflected `x → 1 − x`).
    pub fn reversed(&self) -> Histogram {
        let mut masses = self.masses.clone();
        masses.reverse();
        Histogram {
            masses,
            ..self.clone()
        }
    }
}

/// Counts scores into `bin_count` uniform bins over `[0, 1]`: bin
/// `floor(s · B)`, with `s == 1.0` going to the last bin.
pub fn build_histogram(scores: &[f64], bin_count: usize) -> Result<Histogram, StatsError> {
    if bin_count == 0 {
        return Err(StatsError::ZeroBins);
    }
    if scores.is_empty() {
        return Err(StatsError::EmptyScores);
    }
    let mut masses = vec![0.0; bin_count];
    for &s in scores {
        if !(0.0..=1.0).contains(&s) {
            return Err(StatsError::ScoreOutOfRange(s));
        }
        let bin = ((s * bin_count as f64) as usize).min(bin_count - 1);
        masses[bin] += 1.0;
    }
    Ok(Histogram {
        bin_count,
        lower: 0.0,
        upper: 1.0,
        masses,
    })
}

pub fn normalize_histogram(h: &Histogram) -> Result<Histogram, StatsError> {
    let total = h.total();
    if total.is_nan() || total <= 0.0 {
        return Err(StatsError::ZeroTotalMass);
    }
    Ok(Histogram {
        masses: h.masses.iter().map(|m| m / total).collect(),
        ..h.clone()
    })
}
