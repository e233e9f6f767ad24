//! Orthogonal-polynomial recurrence ledger by two independent routes:
//! Hankel-matrix factorization against the Stieltjes quadrature procedure.
//!
//! ```bash
//! cargo run --release -p jgl --example recurrence
//! ```

use jgl::numerics::{rel_residual, PrecisionContext};
use jgl::ortho::{build_ortho_system, stieltjes_oracle};
use jgl::weight::WeightParams;

fn main() -> jgl::Result<()> {
    let params = WeightParams::strict(1.0, -0.5, 0.3, -0.7, 0.9)?;
    let n_max = 12usize;
    let ctx = PrecisionContext::with_bits(384)?;

    let sys = build_ortho_system(&params, n_max, &ctx)?;
    let oracle = stieltjes_oracle(&params, n_max, &ctx)?;

    println!("(A, B1, B2, s1, s2) = (1, -0.5, 0.3, -0.7, 0.9), {} bits\n", ctx.bits());
    println!(
        "{:>3} {:>22} {:>22} {:>22} {:>12}",
        "n", "alpha_n", "beta_n", "ln h_n", "route dev"
    );
    let mut worst = 0.0f64;
    for n in 0..=n_max {
        let dev_alpha = rel_residual(sys.alpha(n), oracle.alpha(n)).to_f64();
        let dev_h = rel_residual(sys.h(n), oracle.h(n)).to_f64();
        let dev = dev_alpha.max(dev_h);
        worst = worst.max(dev);
        println!(
            "{:>3} {:>22.15e} {:>22.15e} {:>22.15e} {:>12.2e}",
            n,
            sys.alpha(n).to_f64(),
            sys.beta(n).to_f64(),
            sys.h(n).clone().ln().to_f64(),
            dev
        );
    }
    println!("\nworst factorization-vs-Stieltjes deviation: {worst:.2e}");
    println!(
        "Hankel determinant: ln D_{} = {:.15e}",
        n_max,
        sys.log_d(n_max).to_f64()
    );
    assert!(worst < 1e-20, "routes disagree");
    println!("routes agree to better than 1e-20");
    Ok(())
}
