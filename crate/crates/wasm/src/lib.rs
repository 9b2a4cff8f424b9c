//! Browser bindings for the interactive demo in `www/`.
//!
//! Each exported function draws synthetic mated / non-mated scores from
//! truncated normals, runs one part of the pipeline and returns JSON for the
//! page to plot. The `*_json` functions hold the logic and are what the
//! native tests call.

use biomeval::divergence::{compare_datasets, score_histogram, HistogramAxis};
use biomeval::simulator::simulate_scores;
use biomeval::stats::{summarize_values, DistributionSummary, StdConvention};
use biomeval::verification::{compute_eer, compute_roc, EerResult};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Upper bound on ROC points sent to the page.
pub const MAX_CURVE_POINTS: usize = 400;

/// Mean and standard deviation of one score generator, on the raw cosine axis.
#[derive(Debug, Clone, Copy)]
pub struct Generator {
    pub mean: f64,
    pub std: f64,
}

fn draw(g: Generator, count: usize, seed: u64) -> Result<Vec<f64>, String> {
    simulate_scores(g.mean, g.std, count, seed).map_err(|e| e.to_string())
}

/// Mated scores use `seed`, non-mated `seed + 1`.
fn draw_pair(
    mated: Generator,
    non_mated: Generator,
    count: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), String> {
    if count == 0 {
        return Err("count must be positive".into());
    }
    Ok((
        draw(mated, count, seed)?,
        draw(non_mated, count, seed.wrapping_add(1))?,
    ))
}

#[derive(Serialize)]
struct Side {
    summary: DistributionSummary,
    /// Normalised masses over `[0, 1]` on the standardised axis.
    histogram: Vec<f64>,
}

#[derive(Serialize)]
struct Distributions {
    mated: Side,
    non_mated: Side,
}

fn side(scores: &[f64], bins: usize) -> Result<Side, String> {
    Ok(Side {
        summary: summarize_values(scores, StdConvention::Population).map_err(|e| e.to_string())?,
        histogram: score_histogram(scores, bins, HistogramAxis::StandardizedSimilarity)
            .map_err(|e| e.to_string())?
            .masses,
    })
}

pub fn score_distribution_json(
    mated: Generator,
    non_mated: Generator,
    count: usize,
    bins: usize,
    seed: u64,
) -> Result<String, String> {
    let (m, n) = draw_pair(mated, non_mated, count, seed)?;
    let out = Distributions {
        mated: side(&m, bins)?,
        non_mated: side(&n, bins)?,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    eer: EerResult,
    /// `(fpr, tpr)` pairs, thinned to at most [`MAX_CURVE_POINTS`].
    points: Vec<(f64, f64)>,
}

pub fn verification_curve_json(
    mated: Generator,
    non_mated: Generator,
    count: usize,
    seed: u64,
) -> Result<String, String> {
    let (m, n) = draw_pair(mated, non_mated, count, seed)?;
    let roc = compute_roc(&m, &n).map_err(|e| e.to_string())?;
    let eer = compute_eer(&roc).map_err(|e| e.to_string())?;
    let stride = roc.len().div_ceil(MAX_CURVE_POINTS).max(1);
    let mut points: Vec<(f64, f64)> = (0..roc.len())
        .step_by(stride)
        .map(|k| (roc.fpr[k], roc.tpr[k]))
        .collect();
    let last = roc.len() - 1;
    if (roc.len() - 1) % stride != 0 {
        points.push((roc.fpr[last], roc.tpr[last]));
    }
    serde_json::to_string(&Curve { eer, points }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Divergence {
    kl_mated: f64,
    kl_non_mated: f64,
}

/// KL of a candidate generator pair from a reference pair, reference as `P`.
pub fn kl_compare_json(
    reference: (Generator, Generator),
    candidate: (Generator, Generator),
    count: usize,
    bins: usize,
    seed: u64,
) -> Result<String, String> {
    let (rm, rn) = draw_pair(reference.0, reference.1, count, seed)?;
    let (cm, cn) = draw_pair(candidate.0, candidate.1, count, seed.wrapping_add(2))?;
    let axis = HistogramAxis::StandardizedSimilarity;
    let kl = |c: &[f64], r: &[f64]| {
        compare_datasets(c, r, bins, axis)
            .map(|k| k.value)
            .map_err(|e| e.to_string())
    };
    let out = Divergence {
        kl_mated: kl(&cm, &rm)?,
        kl_non_mated: kl(&cn, &rn)?,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn gen(mean: f64, std: f64) -> Generator {
    Generator { mean, std }
}

#[wasm_bindgen]
pub fn score_distribution(
    mated_mean: f64,
    mated_std: f64,
    non_mated_mean: f64,
    non_mated_std: f64,
    count: usize,
    bins: usize,
    seed: u32,
) -> Result<String, JsError> {
    score_distribution_json(
        gen(mated_mean, mated_std),
        gen(non_mated_mean, non_mated_std),
        count,
        bins,
        seed.into(),
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn verification_curve(
    mated_mean: f64,
    mated_std: f64,
    non_mated_mean: f64,
    non_mated_std: f64,
    count: usize,
    seed: u32,
) -> Result<String, JsError> {
    verification_curve_json(
        gen(mated_mean, mated_std),
        gen(non_mated_mean, non_mated_std),
        count,
        seed.into(),
    )
    .map_err(|e| JsError::new(&e))
}

/// `params` is `[ref_mated_mean, ref_mated_std, ref_non_mean, ref_non_std,
/// cand_mated_mean, cand_mated_std, cand_non_mean, cand_non_std]`.
#[wasm_bindgen]
pub fn kl_compare(params: &[f64], count: usize, bins: usize, seed: u32) -> Result<String, JsError> {
    let [a, b, c, d, e, f, g, h] = <[f64; 8]>::try_from(params)
        .map_err(|_| JsError::new("kl_compare expects 8 parameters"))?;
    kl_compare_json(
        (gen(a, b), gen(c, d)),
        (gen(e, f), gen(g, h)),
        count,
        bins,
        seed.into(),
    )
    .map_err(|e| JsError::new(&e))
}
