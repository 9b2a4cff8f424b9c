//! ROC curve and equal error rate over genuine (mated) and impostor
//! (non-mated) similarity scores.
//!
//! A comparison is accepted when its score is `>= τ`. Candidate thresholds
//! are the distinct observed scores in descending order, preceded by a
//! sentinel above the maximum at which nothing is accepted.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{ScoreAxis, ScoreDistribution};

/// Added to FAR / FRR before any ratio of rates is formed.
pub const RATE_EPSILON: f64 = 1e-10;

/// Offset of the sentinel threshold above the largest observed score.
pub const SENTINEL_OFFSET: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum VerificationError {
    #[error("{0} score set is empty")]
    EmptyScoreSet(&'static str),
    #[error("{0} score set contains a non-finite score")]
    NonFiniteScore(&'static str),
    #[error("malformed ROC curve: {0}")]
    MalformedCurve(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Strictly descending.
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    /// False positive rate, the same as FAR.
    pub fpr: Vec<f64>,
    /// `1 − tpr`.
    pub frr: Vec<f64>,
    /// Genuine scores `>= threshold`.
    pub genuine_accepts: Vec<u64>,
    /// Impostor scores `>= threshold`.
    pub impostor_accepts: Vec<u64>,
    pub genuine_total: u64,
    pub impostor_total: u64,
}

impl RocCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// `(FAR + ε, FRR + ε)` at point `i`.
    pub fn smoothed_rates(&self, i: usize) -> (f64, f64) {
        (self.fpr[i] + RATE_EPSILON, self.frr[i] + RATE_EPSILON)
    }

    fn validate(&self) -> Result<(), VerificationError> {
        let n = self.thresholds.len();
        if n == 0 {
            return Err(VerificationError::MalformedCurve("no points"));
        }
        if [self.tpr.len(), self.fpr.len(), self.frr.len()]
            .iter()
            .chain([self.genuine_accepts.len(), self.impostor_accepts.len()].iter())
            .any(|&l| l != n)
        {
            return Err(VerificationError::MalformedCurve("column lengths differ"));
        }
        if self.genuine_total == 0 || self.impostor_total == 0 {
            return Err(VerificationError::MalformedCurve("empty class"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerResult {
    /// Midpoint of FAR and FRR at the chosen threshold, as a fraction.
    pub eer: f64,
    pub threshold: f64,
    pub tpr_at_eer: f64,
    pub far_at_eer: f64,
    pub frr_at_eer: f64,
}

impl EerResult {
    pub fn eer_percent(&self) -> f64 {
        self.eer * 100.0
    }
}

fn sorted_desc(scores: &[f64], which: &'static str) -> Result<Vec<f64>, VerificationError> {
    if scores.is_empty() {
        return Err(VerificationError::EmptyScoreSet(which));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(VerificationError::NonFiniteScore(which));
    }
    let mut v = scores.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// Empirical ROC from genuine and impostor scores.
pub fn compute_roc(genuine: &[f64], impostor: &[f64]) -> Result<RocCurve, VerificationError> {
    let g = sorted_desc(genuine, "genuine")?;
    let i = sorted_desc(impostor, "impostor")?;
    let (gn, im) = (g.len() as u64, i.len() as u64);

    let top = g[0].max(i[0]);
    let mut curve = RocCurve {
        thresholds: vec![top + SENTINEL_OFFSET],
        tpr: vec![0.0],
        fpr: vec![0.0],
        frr: vec![1.0],
        genuine_accepts: vec![0],
        impostor_accepts: vec![0],
        genuine_total: gn,
        impostor_total: im,
    };

    let (mut gi, mut ii) = (0usize, 0usize);
    while gi < g.len() || ii < i.len() {
        let next = match (g.get(gi), i.get(ii)) {
            (Some(&a), Some(&b)) => a.max(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while gi < g.len() && g[gi] >= next {
            gi += 1;
        }
        while ii < i.len() && i[ii] >= next {
            ii += 1;
        }
        let tpr = gi as f64 / gn as f64;
        curve.thresholds.push(next);
        curve.tpr.push(tpr);
        curve.fpr.push(ii as f64 / im as f64);
        curve.frr.push((gn - gi as u64) as f64 / gn as f64);
        curve.genuine_accepts.push(gi as u64);
        curve.impostor_accepts.push(ii as u64);
    }
    Ok(curve)
}

/// Picks the curve point minimising `|FAR − FRR|`, preferring the lower
/// threshold on ties. The comparison is done on exact integer counts.
pub fn compute_eer(roc: &RocCurve) -> Result<EerResult, VerificationError> {
    roc.validate()?;
    let (gn, im) = (roc.genuine_total as u128, roc.impostor_total as u128);
    // |fa/im − fr/gn| scaled by gn·im.
    let gap = |k: usize| {
        let fa = roc.impostor_accepts[k] as u128 * gn;
        let fr = (roc.genuine_total - roc.genuine_accepts[k]) as u128 * im;
        fa.abs_diff(fr)
    };
    let mut best = 0;
    for k in 1..roc.len() {
        if gap(k).cmp(&gap(best)) != Ordering::Greater {
            best = k;
        }
    }
    let (far, frr) = (roc.fpr[best], roc.frr[best]);
    Ok(EerResult {
        eer: (far + frr) / 2.0,
        threshold: roc.thresholds[best],
        tpr_at_eer: roc.tpr[best],
        far_at_eer: far,
        frr_at_eer: frr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub eer: EerResult,
    pub roc: RocCurve,
}

/// Mated scores as genuine, non-mated as impostor, on the raw axis.
pub fn verification_report(
    mated: &ScoreDistribution,
    non_mated: &ScoreDistribution,
) -> Result<VerificationReport, VerificationError> {
    let roc = compute_roc(
        &mated.values(ScoreAxis::Raw),
        &non_mated.values(ScoreAxis::Raw),
    )?;
    let eer = compute_eer(&roc)?;
    Ok(VerificationReport { eer, roc })
}
