//! Plain-text tables, rounded to two decimals.

use std::fmt::Write;

use biomeval::evaluation::{CompareReport, EvaluationReport};
use biomeval::stats::DistributionSummary;
use biomeval::verification::EerResult;

fn header(r: &EvaluationReport) -> String {
    let p = &r.parameters;
    format!(
        "dataset {}: {} identities, {} mated / {} non-mated pairs, seed {}\n",
        r.dataset_name, p.identity_count, p.mated_count, p.non_mated_count, p.seed
    )
}

fn row(
    out: &mut String,
    label: &str,
    mated: &DistributionSummary,
    non_mated: &DistributionSummary,
    eer: &EerResult,
) {
    let _ = writeln!(
        out,
        "{label:<24} {:>13} {:>13} {:>8.2} {:>10.2} {:>8.2}",
        mated.to_string(),
        non_mated.to_string(),
        eer.eer_percent(),
        eer.threshold,
        eer.tpr_at_eer
    );
}

pub fn evaluation_table(r: &EvaluationReport) -> String {
    let mut out = header(r);
    let _ = writeln!(
        out,
        "{:<24} {:>13} {:>13} {:>8} {:>10} {:>8}",
        "group", "mated", "non-mated", "EER (%)", "threshold", "TPR@EER"
    );
    row(
        &mut out,
        "all",
        &r.mated_summary,
        &r.non_mated_summary,
        &r.eer,
    );
    for (label, g) in r.per_group.iter().flatten() {
        row(
            &mut out,
            label,
            &g.mated_summary,
            &g.non_mated_summary,
            &g.eer,
        );
    }
    out
}

pub fn eer_table(r: &EvaluationReport) -> String {
    let e = &r.eer;
    let mut out = header(r);
    let _ = writeln!(out, "{:>8} {:>10} {:>8}", "EER (%)", "threshold", "TPR@EER");
    let _ = writeln!(
        out,
        "{:>8.2} {:>10.2} {:>8.2}",
        e.eer_percent(),
        e.threshold,
        e.tpr_at_eer
    );
    out
}

fn kl_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

pub fn compare_table(c: &CompareReport) -> String {
    let mut out = format!(
        "KL(P || Q) with P = {}, Q = {}, {} bins\n",
        c.kl_mated.direction.p, c.kl_mated.direction.q, c.kl_mated.bin_count
    );
    let _ = writeln!(
        out,
        "{:<24} {:>13} {:>13} {:>9} {:>12} {:>8}",
        "dataset", "mated", "non-mated", "KL mated", "KL non-mated", "EER (%)"
    );
    for r in [&c.reference, &c.candidate] {
        let _ = writeln!(
            out,
            "{:<24} {:>13} {:>13} {:>9} {:>12} {:>8.2}",
            r.dataset_name,
            r.mated_summary.to_string(),
            r.non_mated_summary.to_string(),
            kl_cell(r.kl_mated.as_ref().map(|k| k.value)),
            kl_cell(r.kl_non_mated.as_ref().map(|k| k.value)),
            r.eer.eer_percent()
        );
    }
    for (label, g) in c.candidate.per_group.iter().flatten() {
        let _ = writeln!(
            out,
            "  {:<22} {:>13} {:>13} {:>9} {:>12} {:>8.2}",
            label,
            g.mated_summary.to_string(),
            g.non_mated_summary.to_string(),
            kl_cell(g.kl_mated.as_ref().map(|k| k.value)),
            kl_cell(g.kl_non_mated.as_ref().map(|k| k.value)),
            g.eer.eer_percent()
        );
    }
    out
}
