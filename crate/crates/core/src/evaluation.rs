//! End-to-end dataset evaluation: pairing, scoring, summaries, ROC / EER and
//! optional per-group breakdowns, plus the reference-vs-candidate comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{stratify, Dataset, GroupKey};
use crate::divergence::{
    compare_datasets, score_histogram, Direction, DivergenceError, HistogramAxis, KlResult,
    KL_EPSILON,
};
use crate::similarity::{
    sample_mated_pairs, sample_non_mated_global, sample_non_mated_pairs, score_pairs, NonMatedMode,
    PairKind, PairSample, SimilarityError, SimilarityScore,
};
use crate::stats::{
    summarize_values, DistributionSummary, Histogram, ScoreAxis, ScoreDistribution, StatsError,
    StdConvention, DEFAULT_BINS,
};
use crate::verification::{
    verification_report, EerResult, RocCurve, VerificationError, RATE_EPSILON,
};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("dataset {dataset}, identity {identity_id}: {source}")]
    Pairing {
        dataset: String,
        identity_id: String,
        #[source]
        source: SimilarityError,
    },
    #[error("dataset {dataset}: {source}")]
    Similarity {
        dataset: String,
        #[source]
        source: SimilarityError,
    },
    #[error("dataset {dataset}: {source}")]
    Stats {
        dataset: String,
        #[source]
        source: StatsError,
    },
    #[error("dataset {dataset}: {source}")]
    Verification {
        dataset: String,
        #[source]
        source: VerificationError,
    },
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

impl EvaluationError {
    /// True for errors caused by the input data or parameters rather than a
    /// broken internal invariant.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            EvaluationError::Verification {
                source: VerificationError::MalformedCurve(_),
                ..
            }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationParams {
    pub seed: u64,
    /// Variations drawn per identity before mated pairing.
    pub n_variations: usize,
    pub n_mated: usize,
    pub n_non_mated: usize,
    pub bins: usize,
    pub group_by: Option<GroupKey>,
    pub axis: HistogramAxis,
    pub non_mated_mode: NonMatedMode,
    pub std_convention: StdConvention,
}

impl Default for EvaluationParams {
    fn default() -> Self {
        Self {
            seed: 0,
            n_variations: 10,
            n_mated: 20,
            n_non_mated: 20,
            bins: DEFAULT_BINS,
            group_by: None,
            axis: HistogramAxis::StandardizedSimilarity,
            non_mated_mode: NonMatedMode::PerIdentity,
            std_convention: StdConvention::Population,
        }
    }
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub seed: u64,
    pub n_variations: usize,
    pub mated_pairs_per_identity: usize,
    pub non_mated_pairs_per_identity: usize,
    pub non_mated_mode: NonMatedMode,
    pub bins: usize,
    pub axis: HistogramAxis,
    pub group_by: Option<GroupKey>,
    pub std_convention: StdConvention,
    pub kl_epsilon: f64,
    pub rate_epsilon: f64,
    pub identity_count: usize,
    pub mated_count: usize,
    pub non_mated_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub identity_count: usize,
    pub mated_summary: DistributionSummary,
    pub non_mated_summary: DistributionSummary,
    pub eer: EerResult,
    pub kl_mated: Option<KlResult>,
    pub kl_non_mated: Option<KlResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub identity_id: String,
    pub mated_summary: DistributionSummary,
    pub non_mated_summary: DistributionSummary,
    pub eer: EerResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset_name: String,
    pub mated_summary: DistributionSummary,
    pub non_mated_summary: DistributionSummary,
    pub eer: EerResult,
    pub kl_mated: Option<KlResult>,
    pub kl_non_mated: Option<KlResult>,
    pub per_group: Option<BTreeMap<String, GroupReport>>,
    pub per_identity: Vec<IdentityRow>,
    pub parameters: ReportParameters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub pair: PairSample,
    pub score: SimilarityScore,
}

#[derive(Debug, Clone, PartialEq)]
struct IdentityScores {
    identity_id: String,
    mated: Vec<ScoredPair>,
    non_mated: Vec<ScoredPair>,
}

/// A report together with the data behind its plots.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub mated: Vec<ScoredPair>,
    pub non_mated: Vec<ScoredPair>,
    /// Normalised, on `params.axis`.
    pub mated_histogram: Histogram,
    pub non_mated_histogram: Histogram,
    pub roc: RocCurve,
    params: EvaluationParams,
    /// identity id → group label, when grouping was requested.
    group_labels: BTreeMap<String, String>,
}

impl Evaluation {
    pub fn params(&self) -> &EvaluationParams {
        &self.params
    }

    pub fn mated_raw(&self) -> Vec<f64> {
        self.mated.iter().map(|p| p.score.raw).collect()
    }

    pub fn non_mated_raw(&self) -> Vec<f64> {
        self.non_mated.iter().map(|p| p.score.raw).collect()
    }

    /// Raw scores of pairs anchored on identities in `label`'s group.
    fn group_raw(&self, pairs: &[ScoredPair], label: &str) -> Vec<f64> {
        pairs
            .iter()
            .filter(|p| {
                self.group_labels
                    .get(&p.pair.left.identity_id)
                    .map(String::as_str)
                    == Some(label)
            })
            .map(|p| p.score.raw)
            .collect()
    }
}

fn scored(dataset: &Dataset, pairs: Vec<PairSample>) -> Result<Vec<ScoredPair>, SimilarityError> {
    let scores = score_pairs(dataset, &pairs)?;
    Ok(pairs
        .into_iter()
        .zip(scores)
        .map(|(pair, score)| ScoredPair { pair, score })
        .collect())
}

fn identity_scores(
    dataset: &Dataset,
    identity_id: &str,
    params: &EvaluationParams,
) -> Result<IdentityScores, EvaluationError> {
    let context = |source| EvaluationError::Pairing {
        dataset: dataset.name().to_string(),
        identity_id: identity_id.to_string(),
        source,
    };
    let mated = sample_mated_pairs(
        dataset,
        identity_id,
        params.n_variations,
        params.n_mated,
        params.seed,
    )
    .and_then(|p| scored(dataset, p))
    .map_err(context)?;
    let non_mated = match params.non_mated_mode {
        NonMatedMode::PerIdentity => {
            sample_non_mated_pairs(dataset, identity_id, params.n_non_mated, params.seed)
                .and_then(|p| scored(dataset, p))
                .map_err(context)?
        }
        NonMatedMode::Global => Vec::new(),
    };
    Ok(IdentityScores {
        identity_id: identity_id.to_string(),
        mated,
        non_mated,
    })
}

fn distribution(kind: PairKind, pairs: &[ScoredPair]) -> ScoreDistribution {
    ScoreDistribution::new(kind, pairs.iter().map(|p| p.score).collect())
}

struct Bundle {
    mated_summary: DistributionSummary,
    non_mated_summary: DistributionSummary,
    eer: EerResult,
    roc: RocCurve,
}

fn bundle(
    dataset: &str,
    mated: &[ScoredPair],
    non_mated: &[ScoredPair],
    convention: StdConvention,
) -> Result<Bundle, EvaluationError> {
    let stats_err = |source| EvaluationError::Stats {
        dataset: dataset.to_string(),
        source,
    };
    let m = distribution(PairKind::Mated, mated);
    let n = distribution(PairKind::NonMated, non_mated);
    let mated_summary =
        summarize_values(&m.values(ScoreAxis::Raw), convention).map_err(stats_err)?;
    let non_mated_summary =
        summarize_values(&n.values(ScoreAxis::Raw), convention).map_err(stats_err)?;
    let v = verification_report(&m, &n).map_err(|source| EvaluationError::Verification {
        dataset: dataset.to_string(),
        source,
    })?;
    Ok(Bundle {
        mated_summary,
        non_mated_summary,
        eer: v.eer,
        roc: v.roc,
    })
}

#[cfg(feature = "parallel")]
fn per_identity_scores(
    dataset: &Dataset,
    params: &EvaluationParams,
) -> Result<Vec<IdentityScores>, EvaluationError> {
    use rayon::prelude::*;
    dataset
        .identities()
        .par_iter()
        .map(|i| identity_scores(dataset, &i.identity_id, params))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn per_identity_scores(
    dataset: &Dataset,
    params: &EvaluationParams,
) -> Result<Vec<IdentityScores>, EvaluationError> {
    dataset
        .identities()
        .iter()
        .map(|i| identity_scores(dataset, &i.identity_id, params))
        .collect()
}

/// Runs the full evaluation over the pooled scores of all identities.
pub fn evaluate(
    dataset: &Dataset,
    params: &EvaluationParams,
) -> Result<Evaluation, EvaluationError> {
    let name = dataset.name().to_string();
    let mut per_identity = per_identity_scores(dataset, params)?;

    if params.non_mated_mode == NonMatedMode::Global {
        let total = params.n_non_mated * dataset.identities().len();
        let pairs = sample_non_mated_global(dataset, total, params.seed)
            .and_then(|p| scored(dataset, p))
            .map_err(|source| EvaluationError::Similarity {
                dataset: name.clone(),
                source,
            })?;
        for p in pairs {
            let i = dataset
                .identity_index(&p.pair.left.identity_id)
                .expect("sampled identity exists");
            per_identity[i].non_mated.push(p);
        }
    }

    let mated: Vec<ScoredPair> = per_identity.iter().flat_map(|s| s.mated.clone()).collect();
    let non_mated: Vec<ScoredPair> = per_identity
        .iter()
        .flat_map(|s| s.non_mated.clone())
        .collect();
    let global = bundle(&name, &mated, &non_mated, params.std_convention)?;

    let identity_rows = per_identity
        .iter()
        .filter(|s| !s.mated.is_empty() && !s.non_mated.is_empty())
        .map(|s| {
            bundle(&name, &s.mated, &s.non_mated, params.std_convention).map(|b| IdentityRow {
                identity_id: s.identity_id.clone(),
                mated_summary: b.mated_summary,
                non_mated_summary: b.non_mated_summary,
                eer: b.eer,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut group_labels = BTreeMap::new();
    let per_group = match params.group_by {
        None => None,
        Some(key) => {
            let mut groups = BTreeMap::new();
            for (label, members) in stratify(dataset, key) {
                for id in &members {
                    group_labels.insert(id.clone(), label.clone());
                }
                let member_scores: Vec<&IdentityScores> = members
                    .iter()
                    .map(|id| &per_identity[dataset.identity_index(id).expect("member exists")])
                    .collect();
                let m: Vec<ScoredPair> =
                    member_scores.iter().flat_map(|s| s.mated.clone()).collect();
                let n: Vec<ScoredPair> = member_scores
                    .iter()
                    .flat_map(|s| s.non_mated.clone())
                    .collect();
                if m.is_empty() || n.is_empty() {
                    continue;
                }
                let b = bundle(&name, &m, &n, params.std_convention)?;
                groups.insert(
                    label,
                    GroupReport {
                        identity_count: members.len(),
                        mated_summary: b.mated_summary,
                        non_mated_summary: b.non_mated_summary,
                        eer: b.eer,
                        kl_mated: None,
                        kl_non_mated: None,
                    },
                );
            }
            Some(groups)
        }
    };

    let raw = |pairs: &[ScoredPair]| pairs.iter().map(|p| p.score.raw).collect::<Vec<_>>();
    let mated_histogram = score_histogram(&raw(&mated), params.bins, params.axis)?;
    let non_mated_histogram = score_histogram(&raw(&non_mated), params.bins, params.axis)?;

    let report = EvaluationReport {
        dataset_name: name,
        mated_summary: global.mated_summary,
        non_mated_summary: global.non_mated_summary,
        eer: global.eer,
        kl_mated: None,
        kl_non_mated: None,
        per_group,
        per_identity: identity_rows,
        parameters: ReportParameters {
            seed: params.seed,
            n_variations: params.n_variations,
            mated_pairs_per_identity: params.n_mated,
            non_mated_pairs_per_identity: params.n_non_mated,
            non_mated_mode: params.non_mated_mode,
            bins: params.bins,
            axis: params.axis,
            group_by: params.group_by,
            std_convention: params.std_convention,
            kl_epsilon: KL_EPSILON,
            rate_epsilon: RATE_EPSILON,
            identity_count: dataset.identities().len(),
            mated_count: mated.len(),
            non_mated_count: non_mated.len(),
        },
    };

    Ok(Evaluation {
        report,
        mated,
        non_mated,
        mated_histogram,
        non_mated_histogram,
        roc: global.roc,
        params: *params,
        group_labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub reference: EvaluationReport,
    pub candidate: EvaluationReport,
    pub kl_mated: KlResult,
    pub kl_non_mated: KlResult,
}

fn named_kl(
    candidate: &[f64],
    reference: &[f64],
    bins: usize,
    axis: HistogramAxis,
    direction: &Direction,
) -> Result<KlResult, DivergenceError> {
    let mut r = compare_datasets(candidate, reference, bins, axis)?;
    r.direction = direction.clone();
    Ok(r)
}

/// KL of the candidate's score distributions from the reference's, with the
/// reference as `P`. Both evaluations should share parameters; the
/// candidate's are used for binning. Groups present in both get their own KL.
pub fn compare(
    candidate: &Evaluation,
    reference: &Evaluation,
) -> Result<CompareReport, EvaluationError> {
    let params = candidate.params;
    let direction = Direction {
        p: reference.report.dataset_name.clone(),
        q: candidate.report.dataset_name.clone(),
    };
    let kl_mated = named_kl(
        &candidate.mated_raw(),
        &reference.mated_raw(),
        params.bins,
        params.axis,
        &direction,
    )?;
    let kl_non_mated = named_kl(
        &candidate.non_mated_raw(),
        &reference.non_mated_raw(),
        params.bins,
        params.axis,
        &direction,
    )?;

    let mut candidate_report = candidate.report.clone();
    candidate_report.kl_mated = Some(kl_mated.clone());
    candidate_report.kl_non_mated = Some(kl_non_mated.clone());

    if let Some(groups) = candidate_report.per_group.as_mut() {
        for (label, group) in groups.iter_mut() {
            let cm = candidate.group_raw(&candidate.mated, label);
            let rm = reference.group_raw(&reference.mated, label);
            let cn = candidate.group_raw(&candidate.non_mated, label);
            let rn = reference.group_raw(&reference.non_mated, label);
            if !rm.is_empty() && !cm.is_empty() {
                group.kl_mated = Some(named_kl(&cm, &rm, params.bins, params.axis, &direction)?);
            }
            if !rn.is_empty() && !cn.is_empty() {
                group.kl_non_mated =
                    Some(named_kl(&cn, &rn, params.bins, params.axis, &direction)?);
            }
        }
    }

    Ok(CompareReport {
        reference: reference.report.clone(),
        candidate: candidate_report,
        kl_mated,
        kl_non_mated,
    })
}
