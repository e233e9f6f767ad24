//! Integrate the coupled Painleve II flow from finite-n extracted data and
//! match the trajectory against fresh extractions at shifted xi.
//!
//! ```bash
//! cargo run --release -p jgl --example integrate_pii
//! ```

use jgl::numerics::PrecisionContext;
use jgl::painleve2::{integrate_pii, match_finite_n, PIIState};
use jgl::softedge::{extract_edge_ungated, EdgeTemplate};
use rug::Float;

fn main() -> jgl::Result<()> {
    let template = EdgeTemplate::new(1.0, -0.5, 0.3);
    let (t1, t2) = (-1.0, -0.5);
    let n_list = [8usize, 16, 32, 64];
    let tol = 1e-12;
    let ctx = PrecisionContext::with_bits(192)?;

    println!("extracting (v, w, H2) at t = ({t1}, {t2}) from n in {n_list:?} ...");
    let extract = extract_edge_ungated(&template, t1, t2, &n_list, 1e-3, None)?;
    println!(
        "  v = ({:+.8}, {:+.8}), w = ({:+.8}, {:+.8}), H2 = {:+.8}",
        extract.v[0].to_f64(),
        extract.v[1].to_f64(),
        extract.w[0].to_f64(),
        extract.w[1].to_f64(),
        extract.h2.to_f64()
    );

    let initial = PIIState::from_extract(&extract);
    let wp = ctx.working();
    let end = Float::with_val(wp, t1 + 0.4);
    let traj = integrate_pii(&initial, &end, tol, &ctx, &[])?;
    println!(
        "\nintegrated {} accepted steps to xi = {:.2}; flow-identity defect {:.2e} (tol {tol:e})",
        traj.states.len(),
        end.to_f64(),
        traj.flow_defect
    );
    assert!(traj.flow_defect < 10.0 * tol);

    println!("\ntrajectory samples:");
    println!("{:>8} {:>14} {:>14} {:>14}", "xi", "v1", "v2", "H2");
    for st in traj.states.iter().step_by(traj.states.len() / 8 + 1) {
        println!(
            "{:>8.4} {:>14.9} {:>14.9} {:>14.9}",
            st.xi.to_f64(),
            st.v[0].to_f64(),
            st.v[1].to_f64(),
            st.h2.to_f64()
        );
    }

    println!("\nmatching the flow against fresh extractions over xi0 +- 0.2 ...");
    let report = match_finite_n(&extract, 0.2, tol, &ctx)?;
    for (xi, dv1, dv2, dh) in &report.deviations {
        println!(
            "  xi = {:+.2}: |dv1| {:.2e}  |dv2| {:.2e}  |dH2| {:.2e}",
            xi, dv1, dv2, dh
        );
    }
    println!(
        "max deviation {:.3e} vs fitted O(n^-1/3) envelope {:.3e} -> {}",
        report.max_deviation,
        report.envelope,
        if report.pass { "inside" } else { "OUTSIDE" }
    );
    Ok(())
}
