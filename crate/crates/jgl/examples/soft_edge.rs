//! Soft-edge double scaling: sweep `s_i = sqrt(2n) + t_i/(sqrt(2) n^{1/6})`
//! over doubling `n`, extract the Painleve II limit data, and examine the
//! observed convergence rates and limit-PDE residuals.
//!
//! The sweep here tops out at n = 64 to stay quick; the acceptance suite
//! runs the full n = 256 version.
//!
//! ```bash
//! cargo run --release -p jgl --example soft_edge
//! ```

use jgl::softedge::{
    check_mu_nu_pde, check_pii_residual, check_sigma_and_recurrence_asymptotics,
    extract_from_grid, pii_residual_per_n, square_offsets, EdgeGrid, EdgeTemplate,
};

fn main() -> jgl::Result<()> {
    let template = EdgeTemplate::new(1.0, -0.5, 0.3);
    let (t1, t2) = (-1.0, -0.5);
    let n_list = [8usize, 16, 32, 64];
    println!("sweep n in {n_list:?} at t = ({t1}, {t2}), amplitudes (1, -0.5, 0.3)");

    let grid = EdgeGrid::build(&template, t1, t2, 1e-3, &square_offsets(2), &n_list, None)?;
    let extract = extract_from_grid(&grid)?;

    println!("\nper-n rescaled data at the base point:");
    println!(
        "{:>4} {:>16} {:>16} {:>16} {:>12} {:>12}",
        "n", "n^1/6 R_n1", "n^1/6 R_n2", "sigma_hat", "alpha_n", "beta_n/n"
    );
    for p in &extract.base_sweep {
        println!(
            "{:>4} {:>16.10} {:>16.10} {:>16.10} {:>12.3e} {:>12.8}",
            p.n,
            p.mu1_hat.to_f64(),
            p.nu1_hat.to_f64(),
            p.sigma_hat.to_f64(),
            p.alpha_n.to_f64(),
            p.beta_n.to_f64() / p.n as f64
        );
    }

    println!("\nextrapolated limits (two-term fit in n^-1/3):");
    println!("  mu1 = {:+.8}   nu1 = {:+.8}", extract.mu1.to_f64(), extract.nu1.to_f64());
    println!("  v1  = {:+.8}   v2  = {:+.8}", extract.v[0].to_f64(), extract.v[1].to_f64());
    println!("  w1  = {:+.8}   w2  = {:+.8}", extract.w[0].to_f64(), extract.w[1].to_f64());
    println!("  H2  = {:+.8}", extract.h2.to_f64());

    println!("\nobserved convergence (doubling contraction ~ 2^-1/3 = 0.794):");
    for rate in &extract.rates {
        println!(
            "  {:<8} factors {:?} -> exponent {:+.3}",
            rate.label,
            rate.contraction_factors
                .iter()
                .map(|f| (f * 1e3).round() / 1e3)
                .collect::<Vec<_>>(),
            rate.observed_exponent
        );
    }

    println!("\nlimit-PDE residuals (decay like the n^-1/3 correction):");
    for rep in check_mu_nu_pde(&grid)? {
        println!("  {:<34} {:>10.2e}", rep.label, rep.rel_f64());
    }
    for rep in check_pii_residual(&grid)? {
        println!("  {:<34} {:>10.2e}", rep.label, rep.rel_f64());
    }
    println!("\nper-n coupled-PII residual along the sweep:");
    for (n, r) in pii_residual_per_n(&grid)? {
        println!("  n = {n:>3}: {r:.3e}");
    }

    let asym = check_sigma_and_recurrence_asymptotics(&extract);
    println!("\n|sigma_hat(n) - H2| and doubling factors: {:?}", asym.sigma_factors);
    println!("alpha decay factors (expect ~ 2^-1/2 = 0.707): {:?}", asym.alpha_factors);
    Ok(())
}
