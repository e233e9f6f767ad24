//! Finite-n identity suite: the difference system, the three sigma routes,
//! differential relations, Riccati analogs, and the second-order PDEs, each
//! with both sides computed from independent primitives.
//!
//! ```bash
//! cargo run --release -p jgl --example verify_identities
//! ```

use jgl::identities::{
    check_coupled_pde_r, check_derivative_relations, check_difference_system,
    check_ladder_compatibility, check_riccati, check_sigma_pde, observed_fd_order,
};
use jgl::numerics::PrecisionContext;
use jgl::ortho::build_ortho_system;
use jgl::weight::WeightParams;

fn main() -> jgl::Result<()> {
    let params = WeightParams::strict(1.0, -0.5, 0.3, -0.7, 0.9)?;
    let ctx = PrecisionContext::with_bits(512)?;
    let ctx_hi = PrecisionContext::with_bits(768)?;
    let mut failures = 0usize;
    let mut total = 0usize;
    let mut tally = |name: &str, rel: f64, thr: f64| {
        total += 1;
        let ok = rel < thr;
        if !ok {
            failures += 1;
        }
        println!("  [{}] {:<42} residual {:>10.2e} (< {:.0e})", if ok { "ok" } else { "!!" }, name, rel, thr);
    };

    println!("difference system, n in [1, 12]:");
    let sys = build_ortho_system(&params, 12, &ctx)?;
    let mut worst = 0.0f64;
    for rep in check_difference_system(&sys, 1..=12)? {
        worst = worst.max(rep.rel_f64());
    }
    tally("difference system + sigma routes (worst)", worst, 1e-28);

    println!("ladder compatibility (S1), (S2') at z in {{-2, 0.1, 3}}:");
    for rep in check_ladder_compatibility(&params, 6, &[-2.0, 0.1, 3.0], &ctx)? {
        tally(&rep.label, rep.rel_f64(), 1e-25);
    }

    println!("derivative relations at n = 8, step 1e-10:");
    for rep in check_derivative_relations(&params, 8, Some(1e-10), &ctx)? {
        tally(&rep.label, rep.rel_f64(), 1e-18);
    }
    let order = observed_fd_order(&params, 8, 1e-4, &ctx)?;
    tally("raw central-difference order vs 2", (order - 2.0).abs(), 0.2);

    println!("Riccati analogs at n = 8:");
    for rep in check_riccati(&params, 8, Some(1e-10), &ctx)? {
        tally(&rep.label, rep.rel_f64(), 1e-18);
    }

    println!("second-order PDEs at n = 8, 768 bits:");
    for rep in check_coupled_pde_r(&params, 8, None, &ctx_hi)? {
        tally(&rep.label, rep.rel_f64(), 1e-12);
    }
    let rep = check_sigma_pde(&params, 8, None, &ctx_hi)?;
    tally(&rep.label, rep.rel_f64(), 1e-12);

    println!("\n{} checks, {} failures", total, failures);
    assert_eq!(failures, 0);
    Ok(())
}
