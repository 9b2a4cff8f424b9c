//! Plot-ready CSV exports.

use std::io::Write;

use crate::evaluation::ScoredPair;
use crate::stats::Histogram;
use crate::verification::RocCurve;

/// `bin_lower,bin_upper,mass`, one row per bin.
pub fn write_histogram_csv<W: Write>(w: W, h: &Histogram) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin_lower", "bin_upper", "mass"])?;
    for (bin, mass) in h.masses.iter().enumerate() {
        let (lo, hi) = h.bin_edges(bin);
        out.serialize((lo, hi, mass))?;
    }
    out.flush()?;
    Ok(())
}

/// `threshold,tpr,fpr,frr`, thresholds descending.
pub fn write_roc_csv<W: Write>(w: W, roc: &RocCurve) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["threshold", "tpr", "fpr", "frr"])?;
    for k in 0..roc.len() {
        out.serialize((roc.thresholds[k], roc.tpr[k], roc.fpr[k], roc.frr[k]))?;
    }
    out.flush()?;
    Ok(())
}

/// Audit trail of every scored pair.
pub fn write_pairs_csv<'a, W, I>(w: W, pairs: I) -> csv::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a ScoredPair>,
{
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "kind",
        "left_identity",
        "left_variation",
        "right_identity",
        "right_variation",
        "raw_score",
        "standardized_score",
    ])?;
    for p in pairs {
        out.serialize((
            p.pair.kind.to_string(),
            &p.pair.left.identity_id,
            p.pair.left.variation_id,
            &p.pair.right.identity_id,
            p.pair.right.variation_id,
            p.score.raw,
            p.score.standardized,
        ))?;
    }
    out.flush()?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline. Floats use the shortest
/// representation that round-trips, so the output is lossless and stable.
pub fn to_json<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
