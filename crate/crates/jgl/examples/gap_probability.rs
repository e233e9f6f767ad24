//! Gap probabilities two ways: the Hankel-determinant route `D_n / C_n`
//! against Monte Carlo frequencies from sampled GUE spectra.
//!
//! ```bash
//! cargo run --release -p jgl --example gap_probability
//! ```

use jgl::montecarlo::{gap_probability_det, gap_probability_mc, GapMode, MCConfig};
use jgl::numerics::PrecisionContext;

fn main() -> jgl::Result<()> {
    let ctx = PrecisionContext::with_bits(192)?;
    let (s1, s2) = (-0.5, 0.5);
    let samples = 200_000u64;

    println!("interval ({s1}, {s2}), {samples} samples per dimension\n");
    println!(
        "{:>2} {:>18} {:>12} {:>12} {:>10} {:>8}",
        "n", "mode", "p_hat", "p_det", "stderr", "sigmas"
    );
    for n in 1..=4usize {
        let cfg = MCConfig {
            n,
            samples,
            seed: 42,
            s1,
            s2,
        };
        for mode in [GapMode::NoneInInterval, GapMode::AllInInterval] {
            let est = gap_probability_mc(&cfg, mode);
            let det = gap_probability_det(n, s1, s2, mode, &ctx)?.to_f64();
            // Rare events need the exact-probability binomial scale: with an
            // expected hit count below one, the empirical stderr is zero.
            let stderr = est
                .stderr
                .max((det * (1.0 - det) / samples as f64).sqrt());
            let sigmas = (est.p_hat - det).abs() / stderr.max(1e-12);
            println!(
                "{:>2} {:>18} {:>12.6} {:>12.6} {:>10.2e} {:>8.2}",
                n,
                mode.as_str(),
                est.p_hat,
                det,
                est.stderr,
                sigmas
            );
            assert!(sigmas <= 4.0, "MC and determinant routes disagree");
        }
    }
    println!("\nn = 1 closed form: P(none) = 1 - erf(1/2) = 0.4795001...");
    println!("all comparisons within 4 binomial standard errors");
    Ok(())
}
