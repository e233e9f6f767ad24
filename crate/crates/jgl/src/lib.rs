//! High-precision engine for Hankel determinants generated by the Gaussian
//! weight with two jump discontinuities,
//!
//! ```text
//! w(x; s1, s2) = e^{-x^2} (A + B1*theta(x - s1) + B2*theta(x - s2)),   s1 < s2,
//! ```
//!
//! together with a verification harness for the identity web that the
//! associated monic orthogonal polynomials satisfy: the ladder-operator
//! difference system, differential relations in the jump locations, the
//! coupled Painleve IV system at finite matrix size, and the coupled
//! Painleve II system that emerges under soft-edge double scaling
//! `s_i = sqrt(2n) + t_i / (sqrt(2) n^{1/6})`.
//!
//! Everything is computed with arbitrary-precision arithmetic (MPFR via
//! [`rug`]); Hankel matrices are notoriously ill-conditioned and the default
//! precision policy scales with the polynomial degree. Identities are always
//! checked with both sides assembled from independent primitives so that a
//! shared bug cannot cancel itself out.
//!
//! The crate is organized to mirror the computation pipeline:
//!
//! - [`numerics`]: precision contexts, `erfc`, Richardson finite differences
//! - [`quad`]: Gauss-Legendre panel quadrature (oracle machinery)
//! - [`weight`]: weight parameters, closed-form moments, partition constant
//! - [`ortho`]: orthogonal-polynomial engine (factorization + Stieltjes oracle)
//! - [`identities`]: finite-n residual checks for every identity
//! - [`painleve4`]: change of variables and the coupled Painleve IV system
//! - [`softedge`]: double-scaling extraction of the Painleve II data
//! - [`painleve2`]: adaptive integrator for the coupled Painleve II flow
//! - [`montecarlo`]: GUE sampling cross-check of gap probabilities
//! - [`cli`]: configuration, orchestration, JSON/CSV report emission
//!
//! The `examples/` directory contains one runnable example per capability,
//! and the thin `jgl` binary exposes the same pipelines as subcommands:
//!
//! ```bash
//! cargo run --release -p jgl --example moments            # closed-form moments
//! cargo run --release -p jgl --example recurrence         # two-route ledger
//! cargo run --release -p jgl --example verify_identities  # identity suite
//! cargo run --release -p jgl --example painleve_iv        # coupled PIV checks
//! cargo run --release -p jgl --example soft_edge          # scaling extraction
//! cargo run --release -p jgl --example integrate_pii      # PII flow + match
//! cargo run --release -p jgl --example gap_probability    # MC vs determinant
//! ```

// Negated float comparisons in the validation guards are deliberate: a
// comparison written as !(x > 0) must also reject NaN, which x <= 0 passes.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod identities;
pub mod montecarlo;
pub mod numerics;
pub mod ortho;
pub mod painleve2;
pub mod painleve4;
pub mod quad;
pub mod report;
pub mod softedge;
pub mod weight;

mod error;

pub use error::Error;
pub use numerics::{PrecisionContext, Real};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
