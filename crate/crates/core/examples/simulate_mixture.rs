//! Synthesizes one source of each kind, reports its excess kurtosis, and
//! writes an instantaneous three-channel mixture to the temp directory.

use ilrma::audio::{excess_kurtosis, mix, synth_source, write_wav, MixingSpec, SourceKind};

fn main() -> ilrma::Result<()> {
    let sample_rate = 16_000;
    let kinds = [SourceKind::Subgaussian, SourceKind::Gaussian, SourceKind::Supergaussian];
    let sources: Vec<Vec<f64>> =
        kinds.iter().enumerate().map(|(n, k)| synth_source(*k, 2, 2 * sample_rate as usize, sample_rate, n as u64)).collect();
    for (kind, s) in kinds.iter().zip(&sources) {
        println!("{kind:?}: excess kurtosis {:+.2}", excess_kurtosis(s));
    }
    let spec = MixingSpec::parse_matrix("1, 0.5, 0.2; 0.4, 1, 0.3; 0.2, 0.6, 1")?;
    let mixture = mix(&sources, &spec)?;
    let path = std::env::temp_dir().join("ilrma_example_mix.wav");
    write_wav(&path, &mixture, sample_rate)?;
    println!("wrote {} channels to {}", mixture.len(), path.display());
    Ok(())
}
