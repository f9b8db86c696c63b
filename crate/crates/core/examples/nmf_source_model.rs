//! Fits the low-rank scale model to a fixed spectrogram and prints the
//! source-model cost as the multiplicative updates proceed.

use ilrma::cost_eval::source_model_cost;
use ilrma::pipeline::initialize;
use ilrma::source_model::{compute_scale_field, update_activations, update_bases};
use ilrma::suite::random_mixture;
use ilrma::types::{validate_problem, GgdConfig, SourceSpectrogram};

fn main() -> ilrma::Result<()> {
    let x = random_mixture(3, 64, 100, 1);
    let y = SourceSpectrogram { data: x.data.clone() };
    for beta in [1.0, 2.0, 4.0] {
        let cfg = GgdConfig::new(beta).with_rank(4);
        let (_, mut model) = initialize(&cfg, validate_problem(&x, &cfg)?, 0);
        print!("beta {beta}:");
        for it in 0..=40 {
            if it % 10 == 0 {
                print!(" {:.1}", source_model_cost(&y, &compute_scale_field(&model), &cfg));
            }
            update_bases(&mut model, &y, &cfg);
            update_activations(&mut model, &y, &cfg);
        }
        println!();
    }
    Ok(())
}
