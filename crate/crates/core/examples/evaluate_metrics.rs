//! Scores estimates of different quality against known references: the
//! permutation is recovered and SI-SDR ignores gain.

use ilrma::audio::{synth_source, SourceKind};
use ilrma::metrics::{sdr_improvement, write_table};

fn main() -> ilrma::Result<()> {
    let refs: Vec<Vec<f64>> = (0..2).map(|n| synth_source(SourceKind::Gaussian, 1, 16_000, 16_000, n)).collect();
    let mixture: Vec<f64> = refs[0].iter().zip(&refs[1]).map(|(a, b)| a + 0.6 * b).collect();
    // estimates in swapped order, rescaled, with 10 % leakage from the other source
    let estimates = vec![
        refs[1].iter().zip(&refs[0]).map(|(b, a)| -2.0 * b + 0.1 * a).collect(),
        refs[0].iter().zip(&refs[1]).map(|(a, b)| 0.5 * a + 0.05 * b).collect(),
    ];
    let scores = sdr_improvement(&estimates, &refs, &mixture)?;
    write_table(std::io::stdout(), &scores)?;
    println!("estimate order matched to references: {:?}", scores[0].perm);
    Ok(())
}
