//! Scale-invariant SDR, permutation alignment and improvement reports.

use std::io::{self, Write};

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};

/// Upper bound reported when the residual is negligible.
pub const SDR_CAP_DB: f64 = 80.0;

/// Scale-invariant signal-to-distortion ratio in dB.
pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    if estimate.len() != reference.len() || estimate.is_empty() {
        return Err(Error::LengthMismatch(format!(
            "estimate has {} samples, reference {}",
            estimate.len(),
            reference.len()
        )));
    }
    let ref_energy: f64 = reference.iter().map(|r| r * r).sum();
    if ref_energy == 0.0 {
        return Err(Error::ZeroReference);
    }
    let alpha = estimate.iter().zip(reference).map(|(e, r)| e * r).sum::<f64>() / ref_energy;
    let target = alpha * alpha * ref_energy;
    let residual: f64 = estimate.iter().zip(reference).map(|(e, r)| (e - alpha * r).powi(2)).sum();
    if residual <= 1e-8 * target {
        return Ok(SDR_CAP_DB);
    }
    Ok((10.0 * (target / residual).log10()).min(SDR_CAP_DB))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `perm[n]` is the estimate matched to reference `n`.
    pub perm: Vec<usize>,
    /// SI-SDR of each reference against its matched estimate.
    pub sdr_db: Vec<f64>,
}

impl Alignment {
    pub fn total(&self) -> f64 {
        self.sdr_db.iter().sum()
    }
}

/// Exhaustive search for the estimate-to-reference assignment with the largest
/// total SI-SDR. Ties keep the lexicographically first permutation.
pub fn align_permutation(estimates: &[Vec<f64>], references: &[Vec<f64>]) -> Result<Alignment> {
    let n = references.len();
    if estimates.len() != n {
        return Err(Error::LengthMismatch(format!("{} estimates for {n} references", estimates.len())));
    }
    if n > 6 {
        return Err(Error::TooManySources(n));
    }
    let mut table = vec![vec![0.0; n]; n];
    for (r, reference) in references.iter().enumerate() {
        for (e, estimate) in estimates.iter().enumerate() {
            table[r][e] = si_sdr(estimate, reference)?;
        }
    }
    let mut best: Option<Alignment> = None;
    for perm in (0..n).permutations(n) {
        let sdr_db: Vec<f64> = perm.iter().enumerate().map(|(r, e)| table[r][*e]).collect();
        let candidate = Alignment { perm, sdr_db };
        if best.as_ref().is_none_or(|b| candidate.total() > b.total()) {
            best = Some(candidate);
        }
    }
    Ok(best.unwrap_or(Alignment { perm: Vec::new(), sdr_db: Vec::new() }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceScore {
    /// 1-based reference index.
    pub source: usize,
    pub sdr_db: f64,
    pub sdr_improvement_db: f64,
    pub perm: Vec<usize>,
}

/// Aligns the estimates, then subtracts the SI-SDR of the unprocessed
/// reference-channel mixture from each source's SI-SDR.
pub fn sdr_improvement(estimates: &[Vec<f64>], references: &[Vec<f64>], mixture: &[f64]) -> Result<Vec<SourceScore>> {
    let alignment = align_permutation(estimates, references)?;
    references
        .iter()
        .enumerate()
        .map(|(n, reference)| {
            let baseline = si_sdr(mixture, reference)?;
            Ok(SourceScore {
                source: n + 1,
                sdr_db: alignment.sdr_db[n],
                sdr_improvement_db: alignment.sdr_db[n] - baseline,
                perm: alignment.perm.clone(),
            })
        })
        .collect()
}

pub fn mean_improvement(scores: &[SourceScore]) -> f64 {
    scores.iter().map(|s| s.sdr_improvement_db).sum::<f64>() / scores.len().max(1) as f64
}

pub fn write_table<W: Write>(mut out: W, scores: &[SourceScore]) -> io::Result<()> {
    writeln!(out, "{:>6}  {:>10}  {:>14}", "source", "SI-SDR dB", "improvement dB")?;
    for s in scores {
        writeln!(out, "{:>6}  {:>10.2}  {:>14.2}", s.source, s.sdr_db, s.sdr_improvement_db)?;
    }
    let mean_sdr = scores.iter().map(|s| s.sdr_db).sum::<f64>() / scores.len().max(1) as f64;
    writeln!(out, "{:>6}  {:>10.2}  {:>14.2}", "mean", mean_sdr, mean_improvement(scores))
}

pub fn write_jsonl<W: Write>(mut out: W, scores: &[SourceScore]) -> io::Result<()> {
    for s in scores {
        serde_json::to_writer(&mut out, s)?;
        writeln!(out)?;
    }
    Ok(())
}
