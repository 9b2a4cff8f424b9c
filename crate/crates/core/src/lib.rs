//! Quality metrics for identity-labelled embedding datasets.
//!
//! The pipeline pairs embeddings of the same identity (mated) and of
//! different identities (non-mated), scores them by cosine similarity, and
//! reports:
//!
//! * mean ± std of mated and non-mated scores ([`stats`]),
//! * histogram KL divergence of a candidate dataset's score distributions
//!   from a reference dataset's ([`divergence`]),
//! * ROC, equal error rate, threshold and TPR at the EER ([`verification`]).
//!
//! [`simulator`] produces deterministic synthetic datasets and score sets with
//! controllable statistics, and [`dataset`] defines the on-disk format.

pub mod dataset;
pub mod divergence;
pub mod evaluation;
pub mod export;
pub mod numeric;
pub mod rng;
pub mod similarity;
pub mod simulator;
pub mod stats;
pub mod verification;

pub use dataset::{load_dataset, stratify, Dataset, DatasetError, GroupKey};
pub use divergence::{compare_datasets, kl_divergence, HistogramAxis, KlResult, KL_EPSILON};
pub use evaluation::{
    compare, evaluate, CompareReport, Evaluation, EvaluationParams, EvaluationReport,
};
pub use similarity::{cosine_similarity, standardize, PairKind, PairSample, SimilarityScore};
pub use simulator::{simulate_dataset, simulate_scores, SimulationConfig};
pub use stats::{build_histogram, normalize_histogram, summarize, Histogram, ScoreDistribution};
pub use verification::{compute_eer, compute_roc, verification_report, EerResult, RocCurve};
