//! Deterministic synthetic datasets and score sets.
//!
//! Datasets follow a unit-sphere cluster model: each identity has a mean
//! direction drawn uniformly on the sphere (a normalised standard Gaussian
//! vector), and each variation is `mean + intra_spread · z` with `z`
//! standard Gaussian, normalised back to unit length. Identity `i` draws from
//! its own stream keyed by its id, so generation order does not matter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    Dataset, DatasetError, DatasetManifest, DemographicAttributes, EmbeddingRecord, Ethnicity,
    Gender, IdentityRecord,
};
use crate::rng::SplitMix64;

/// Below this acceptance probability truncated-normal sampling is refused.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("demographic plan covers {planned} identities, config asks for {expected}")]
    InvalidPlan { planned: usize, expected: usize },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("normal({mean}, {std}) has acceptance probability {acceptance:e} on [-1, 1]")]
    ImpossibleTruncation {
        mean: f64,
        std: f64,
        acceptance: f64,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub ethnicity: Ethnicity,
    pub gender: Gender,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub identity_count: usize,
    pub variations_per_identity: usize,
    pub dimension: usize,
    pub intra_spread: f64,
    pub seed: u64,
    #[serde(default)]
    pub demographic_plan: Option<Vec<PlanEntry>>,
}

fn default_name() -> String {
    "simulated".into()
}

/// Six ethnicities, each with `per_gender` male and `per_gender` female identities.
pub fn balanced_demographic_plan(per_gender: usize) -> Vec<PlanEntry> {
    Ethnicity::ALL
        .into_iter()
        .filter(|&e| e != Ethnicity::Unknown)
        .flat_map(|ethnicity| {
            [Gender::Male, Gender::Female].map(|gender| PlanEntry {
                ethnicity,
                gender,
                count: per_gender,
            })
        })
        .collect()
}

impl SimulationConfig {
    /// 36 identities (6 ethnicities × 3 male + 3 female), 70 variations each.
    pub fn balanced_36(dimension: usize, intra_spread: f64, seed: u64) -> Self {
        Self {
            name: default_name(),
            identity_count: 36,
            variations_per_identity: 70,
            dimension,
            intra_spread,
            seed,
            demographic_plan: Some(balanced_demographic_plan(3)),
        }
    }

    fn validate(&self) -> Result<(), SimulationError> {
        if self.identity_count == 0 || self.variations_per_identity == 0 || self.dimension == 0 {
            return Err(SimulationError::InvalidConfig(
                "identity_count, variations_per_identity and dimension must be positive".into(),
            ));
        }
        if !(self.intra_spread >= 0.0 && self.intra_spread.is_finite()) {
            return Err(SimulationError::InvalidConfig(format!(
                "intra_spread must be a finite non-negative number, got {}",
                self.intra_spread
            )));
        }
        if let Some(plan) = &self.demographic_plan {
            let planned: usize = plan.iter().map(|e| e.count).sum();
            if planned != self.identity_count {
                return Err(SimulationError::InvalidPlan {
                    planned,
                    expected: self.identity_count,
                });
            }
        }
        Ok(())
    }

    fn attributes(&self) -> Vec<DemographicAttributes> {
        match &self.demographic_plan {
            Some(plan) => plan
                .iter()
                .flat_map(|e| {
                    std::iter::repeat_n(
                        DemographicAttributes {
                            ethnicity: e.ethnicity,
                            gender: e.gender,
                        },
                        e.count,
                    )
                })
                .collect(),
            None => vec![DemographicAttributes::default(); self.identity_count],
        }
    }

    fn identity_id(&self, index: usize) -> String {
        let width = (self.identity_count.saturating_sub(1))
            .to_string()
            .len()
            .max(4);
        format!("id{index:0width$}")
    }
}

fn gaussian_direction(rng: &mut SplitMix64, base: Option<(&[f64], f64)>, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = match base {
            Some((mean, spread)) => mean
                .iter()
                .map(|&m| m + spread * rng.next_gaussian())
                .collect(),
            None => (0..dim).map(|_| rng.next_gaussian()).collect(),
        };
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

/// Unit-norm f64 embeddings for one identity: its mean direction followed by
/// its variations.
pub(crate) fn identity_vectors(
    seed: u64,
    identity_id: &str,
    dim: usize,
    variations: usize,
    spread: f64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut rng = SplitMix64::from_stream(seed, "identity", identity_id);
    let mean = gaussian_direction(&mut rng, None, dim);
    let vars = (0..variations)
        .map(|_| {
            if spread == 0.0 {
                mean.clone()
            } else {
                gaussian_direction(&mut rng, Some((&mean, spread)), dim)
            }
        })
        .collect();
    (mean, vars)
}

/// Builds a validated dataset from `config`. Vectors are stored as f32.
pub fn simulate_dataset(config: &SimulationConfig) -> Result<Dataset, SimulationError> {
    config.validate()?;
    let attributes = config.attributes();
    let ids: Vec<String> = (0..config.identity_count)
        .map(|i| config.identity_id(i))
        .collect();

    let generate = |id: &String| -> Vec<EmbeddingRecord> {
        let (_, vectors) = identity_vectors(
            config.seed,
            id,
            config.dimension,
            config.variations_per_identity,
            config.intra_spread,
        );
        vectors
            .into_iter()
            .enumerate()
            .map(|(v, vec)| EmbeddingRecord {
                identity_id: id.clone(),
                variation_id: v as u32,
                vector: vec.into_iter().map(|x| x as f32).collect(),
            })
            .collect()
    };

    #[cfg(feature = "parallel")]
    let per_identity: Vec<Vec<EmbeddingRecord>> = {
        use rayon::prelude::*;
        ids.par_iter().map(generate).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_identity: Vec<Vec<EmbeddingRecord>> = ids.iter().map(generate).collect();

    let identities = ids
        .iter()
        .zip(attributes)
        .map(|(id, attributes)| IdentityRecord {
            identity_id: id.clone(),
            attributes,
            variation_count: config.variations_per_identity,
        })
        .collect();
    let manifest = DatasetManifest {
        name: config.name.clone(),
        embedding_dimension: config.dimension,
        identities,
    };
    Ok(Dataset::new(
        manifest,
        per_identity.into_iter().flatten().collect(),
    )?)
}

fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability that `normal(mean, std)` lands in `[-1, 1]`.
pub fn truncation_acceptance(mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return if (-1.0..=1.0).contains(&mean) {
            1.0
        } else {
            0.0
        };
    }
    let hi = standard_normal_cdf((1.0 - mean) / std);
    let lo = standard_normal_cdf((-1.0 - mean) / std);
    (hi - lo).max(0.0)
}

/// `count` draws from `normal(mean, std)` restricted to `[-1, 1]` by rejection.
pub fn simulate_scores(
    mean: f64,
    std: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>, SimulationError> {
    if !(mean.is_finite() && std.is_finite() && std >= 0.0) {
        return Err(SimulationError::InvalidConfig(format!(
            "score generator needs finite mean and non-negative std, got ({mean}, {std})"
        )));
    }
    let acceptance = truncation_acceptance(mean, std);
    if acceptance < MIN_ACCEPTANCE {
        return Err(SimulationError::ImpossibleTruncation {
            mean,
            std,
            acceptance,
        });
    }
    if std == 0.0 {
        return Ok(vec![mean; count]);
    }
    let mut rng = SplitMix64::from_stream(seed, "scores", "");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = mean + std * rng.next_gaussian();
        if (-1.0..=1.0).contains(&x) {
            out.push(x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{stratify, GroupKey};

    fn small(spread: f64) -> SimulationConfig {
        SimulationConfig {
            name: "small".into(),
            identity_count: 4,
            variations_per_identity: 5,
            dimension: 16,
            intra_spread: spread,
            seed: 17,
            demographic_plan: None,
        }
    }

    #[test]
    fn unit_norm_vectors() {
        for spread in [0.0, 0.05, 0.5, 3.0] {
            let (mean, vars) = identity_vectors(5, "id0001", 64, 10, spread);
            for v in std::iter::once(&mean).chain(&vars) {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12, "{norm}");
            }
        }
    }

    #[test]
    fn zero_spread_collapses_variations() {
        let ds = simulate_dataset(&small(0.0)).unwrap();
        for identity in ds.identities() {
            let recs = ds.records_of(&identity.identity_id).unwrap();
            assert!(recs.iter().all(|r| r.vector == recs[0].vector));
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = simulate_dataset(&small(0.3)).unwrap();
        let b = simulate_dataset(&small(0.3)).unwrap();
        assert_eq!(a.embedding_bytes(), b.embedding_bytes());
        let mut other = small(0.3);
        other.seed += 1;
        assert_ne!(
            a.embedding_bytes(),
            simulate_dataset(&other).unwrap().embedding_bytes()
        );
    }

    #[test]
    fn balanced_layout() {
        let ds = simulate_dataset(&SimulationConfig::balanced_36(8, 0.1, 1)).unwrap();
        assert_eq!(ds.identities().len(), 36);
        assert_eq!(ds.records().len(), 36 * 70);
        let groups = stratify(&ds, GroupKey::Ethnicity);
        assert_eq!(groups.len(), 6);
        assert!(groups.values().all(|g| g.len() == 6));
    }

    #[test]
    fn plan_must_cover_identities() {
        let mut c = small(0.1);
        c.demographic_plan = Some(balanced_demographic_plan(1));
        assert!(matches!(
            simulate_dataset(&c),
            Err(SimulationError::InvalidPlan {
                planned: 12,
                expected: 4
            })
        ));
    }

    #[test]
    fn invalid_configs() {
        let mut c = small(-0.1);
        assert!(matches!(
            simulate_dataset(&c),
            Err(SimulationError::InvalidConfig(_))
        ));
        c.intra_spread = 0.1;
        c.dimension = 0;
        assert!(matches!(
            simulate_dataset(&c),
            Err(SimulationError::InvalidConfig(_))
        ));
    }

    #[test]
    fn degenerate_scores() {
        assert_eq!(
            simulate_scores(0.5, 0.0, 3, 1).unwrap(),
            vec![0.5, 0.5, 0.5]
        );
        assert!(matches!(
            simulate_scores(1.5, 0.0, 3, 1),
            Err(SimulationError::ImpossibleTruncation { .. })
        ));
        assert!(matches!(
            simulate_scores(-9.0, 0.5, 3, 1),
            Err(SimulationError::ImpossibleTruncation { .. })
        ));
    }

    #[test]
    fn scores_stay_in_range() {
        let s = simulate_scores(0.01, 0.07, 10_000, 4).unwrap();
        assert_eq!(s.len(), 10_000);
        assert!(s.iter().all(|x| (-1.0..=1.0).contains(x)));
        let wide = simulate_scores(0.9, 0.8, 5_000, 4).unwrap();
        assert!(wide.iter().all(|x| (-1.0..=1.0).contains(x)));
    }
}
