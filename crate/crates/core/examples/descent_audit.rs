//! Runs short separations on random problems and audits that the cost never
//! increases, for each update scheme.

use ilrma::suite::descent_trial;

fn main() -> ilrma::Result<()> {
    for beta in [0.5, 1.0, 1.99, 2.0, 4.0] {
        let mut steps = 0;
        let mut increases = 0;
        for seed in 0..20 {
            let report = descent_trial(beta, seed, 40)?;
            steps += report.checked;
            increases += report.violations.len();
        }
        println!("beta {beta:>4}: {steps} steps audited, {increases} cost increases");
    }
    Ok(())
}
