//! Checks the quartic majorizer used by the β = 4 update on random draws:
//! it must lie above the objective everywhere and touch it at the expansion point.

use ilrma::suite::majorizer_draws;

fn main() -> ilrma::Result<()> {
    let draws: usize = std::env::args().nth(1).map_or(5_000, |s| s.parse().expect("draw count"));
    let stats = majorizer_draws(1, draws)?;
    println!("{} draws", stats.draws);
    println!("smallest g(w) - f(w), relative: {:.3e}", stats.min_gap);
    println!("largest |g - f| at the expansion point, relative: {:.3e}", stats.max_contact_error);
    Ok(())
}
