//! Closed-form Hankel moments of the Gaussian weight with two jumps.
//!
//! ```bash
//! cargo run --release -p jgl --example moments
//! ```

use jgl::numerics::PrecisionContext;
use jgl::report::dec40;
use jgl::weight::{gaussian_moment, incomplete_moment, moment, partition_constant, WeightParams};

fn main() -> jgl::Result<()> {
    let ctx = PrecisionContext::with_bits(192)?;

    println!("Incomplete Gaussian moments I_k(s) = \\int_s^inf x^k e^{{-x^2}} dx");
    for (k, s) in [(0usize, 0.0f64), (1, 0.0), (2, 0.7), (6, -0.3)] {
        let v = incomplete_moment(k, &ctx.real(s), &ctx);
        println!("  I_{k}({s:+.1}) = {}", dec40(&v));
    }

    println!("\nFull Gaussian moments G_k (odd ones vanish)");
    for k in [0usize, 2, 4, 6] {
        println!("  G_{k} = {}", dec40(&gaussian_moment(k, 192)));
    }

    let params = WeightParams::strict(1.0, -0.5, 0.3, -0.7, 0.9)?;
    println!("\nWeight moments m_k for (A, B1, B2, s1, s2) = (1, -0.5, 0.3, -0.7, 0.9)");
    for k in 0..=6usize {
        println!("  m_{k} = {}", dec40(&moment(k, &params, &ctx)));
    }

    // The "no eigenvalues in (s1,s2)" weight integrates to sqrt(pi) erfc(1/2)
    // on a symmetric interval.
    let gap = WeightParams::gap_none(-0.5, 0.5)?;
    let m0 = moment(0, &gap, &ctx);
    println!("\nGap weight mass m_0 on (-1/2, 1/2): {}", dec40(&m0));

    println!("\nPartition constants C_n = (2 pi)^{{n/2}} 2^{{-n^2/2}} prod k!");
    for n in 1..=6usize {
        println!("  C_{n} = {}", dec40(&partition_constant(n, &ctx)));
    }
    Ok(())
}
