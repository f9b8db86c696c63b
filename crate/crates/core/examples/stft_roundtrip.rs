//! Analyzes a synthetic tonal signal with the two window protocols and reports
//! the reconstruction error of the inverse transform.

use ilrma::audio::{synth_source, SourceKind};
use ilrma::stft::{istft, stft, StftPlan};

fn main() -> ilrma::Result<()> {
    let sample_rate = 16_000;
    let signal = vec![synth_source(SourceKind::LowRankTonal, 3, 3 * sample_rate as usize, sample_rate, 7)];
    for (window_ms, hop_ms) in [(128.0, 64.0), (256.0, 128.0)] {
        let plan = StftPlan::hamming_ms(window_ms, hop_ms, sample_rate)?;
        let spec = stft(&signal, &plan)?;
        let back = istft(&spec.data, &plan, signal[0].len())?;
        let err = signal[0].iter().zip(&back[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "{window_ms}/{hop_ms} ms: {} bins x {} frames, max reconstruction error {err:.2e}",
            spec.freqs(),
            spec.frames()
        );
    }
    Ok(())
}
