//! The coupled Painleve IV system at finite n: phase-space variables from
//! the auxiliary residues, Hamilton equations against finite differences,
//! and the recurrence-coefficient maps.
//!
//! ```bash
//! cargo run --release -p jgl --example painleve_iv
//! ```

use jgl::numerics::{rel_residual, PrecisionContext};
use jgl::ortho::{build_ortho_system, SigmaRoute};
use jgl::painleve4::{check_hamilton_equations, check_recurrence_maps, to_piv_state};
use jgl::weight::WeightParams;
use rug::Float;

fn main() -> jgl::Result<()> {
    let params = WeightParams::strict(1.0, -0.5, 0.3, -0.7, 0.9)?;
    let n = 6usize;
    let ctx = PrecisionContext::with_bits(512)?;

    let sys = build_ortho_system(&params, n + 1, &ctx)?;
    let state = to_piv_state(&sys.aux_quantities(n), &sys, n)?;
    println!("PIV state at n = {n}:");
    println!("  x  = {:+.12}", state.x.to_f64());
    println!("  s  = {:+.12}", state.s.to_f64());
    for i in [1usize, 2] {
        println!(
            "  a{i} = {:+.12e}   b{i} = {:+.12e}",
            state.a(i).to_f64(),
            state.b(i).to_f64()
        );
    }
    println!("  H  = {:+.12e}", state.h.to_f64());

    // H_IV equals sigma_n + n (s1 + s2), both sides independent.
    let wp = sys.prec();
    let sigma = sys.sigma_n(n, SigmaRoute::TwoP)?;
    let rhs =
        sigma + Float::with_val(wp, n as f64) * Float::with_val(wp, params.s(1) + params.s(2).clone());
    println!(
        "\nH_IV vs sigma_n + n(s1+s2): residual {:.2e}",
        rel_residual(&state.h, &rhs).to_f64()
    );

    println!("\nHamilton equations (lhs by directional finite difference):");
    for rep in check_hamilton_equations(&params, n, Some(1e-10), &ctx)? {
        println!("  {:<10} residual {:.2e}", rep.label, rep.rel_f64());
        assert!(rep.rel_f64() < 1e-15);
    }

    println!("\nRecurrence-coefficient maps:");
    for rep in check_recurrence_maps(&params, n, Some(1e-10), &ctx)? {
        println!("  {:<32} residual {:.2e}", rep.label, rep.rel_f64());
    }
    println!("\nall Painleve IV checks passed");
    Ok(())
}
