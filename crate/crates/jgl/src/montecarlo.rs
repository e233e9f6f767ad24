//! GUE eigenvalue sampler and gap-probability cross-check.
//!
//! The determinant route computes `D_n(s1, s2) / C_n` at the designated
//! amplitudes, `(1, -1, 1)` for "no eigenvalues in (s1, s2)" and `(0, 1, -1)`
//! for "all eigenvalues"; the Monte Carlo route estimates the same
//! probabilities from the empirical spectrum of random Hermitian matrices
//! with density `exp(-Tr H^2)`: diagonal entries N(0, 1/2), off-diagonal
//! real and imaginary parts N(0, 1/4) each.
//!
//! Eigenvalues come from a dense symmetric eigensolver applied to the
//! standard real embedding `[[A, -B], [B, A]]` of `H = A + iB`, whose
//! spectrum is that of `H` doubled; machine precision is plenty because only
//! interval-membership counts enter the estimates.
//!
//! Sampling fans out over a fixed set of ChaCha substreams so that results
//! are reproducible regardless of scheduling.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rug::Float;

use crate::numerics::{PrecisionContext, Real};
use crate::ortho::build_ortho_system;
use crate::weight::{ln_partition_constant, WeightParams};
use crate::Result;

/// Fixed number of worker substreams; part of the reproducibility contract.
pub const WORKERS: u64 = 16;

/// Monte Carlo configuration. The seed fully determines the sample stream.
#[derive(Debug, Clone, Copy)]
pub struct MCConfig {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub s1: f64,
    pub s2: f64,
}

/// Which gap event is being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    NoneInInterval,
    AllInInterval,
}

impl GapMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GapMode::NoneInInterval => "none_in_interval",
            GapMode::AllInInterval => "all_in_interval",
        }
    }
}

/// Empirical gap-probability estimate with its binomial standard error.
#[derive(Debug, Clone, Copy)]
pub struct GapEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub mode: GapMode,
}

/// Draws one GUE(n) spectrum from the given stream (ascending eigenvalues).
fn draw_spectrum(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let diag = Normal::new(0.0, 0.5f64.sqrt()).expect("valid normal");
    let off = Normal::new(0.0, 0.5).expect("valid normal");
    // Canonical draw order: diagonal, then upper triangle row-major with
    // (re, im) per entry. Changing this would silently change every stream.
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = diag.sample(rng);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let re = off.sample(rng);
            let im = off.sample(rng);
            a[(i, j)] = re;
            a[(j, i)] = re;
            b[(i, j)] = im;
            b[(j, i)] = -im;
        }
    }
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[(i, j)];
            m[(n + i, n + j)] = a[(i, j)];
            m[(i, n + j)] = -b[(i, j)];
            m[(n + i, j)] = b[(i, j)];
        }
    }
    let mut eigen: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eigen.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    // Each eigenvalue of H appears exactly twice in the embedding.
    eigen.into_iter().step_by(2).collect()
}

/// Stream of eigenvalue tuples (stream 0 of the seed). The first tuple is a
/// bitwise-reproducible function of the seed.
pub fn sample_gue_spectrum(cfg: &MCConfig) -> impl Iterator<Item = Vec<f64>> {
    assert!(cfg.n >= 1 && cfg.n <= 64, "desk-scale sampler: 1 <= n <= 64");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    let n = cfg.n;
    std::iter::repeat_with(move || draw_spectrum(n, &mut rng))
}

/// Counts of the two gap events over the full sample budget, fanned out over
/// [`WORKERS`] substreams (worker `w` handles sample indices congruent to
/// `w`); the aggregation is a plain sum, independent of scheduling.
pub fn gap_counts(cfg: &MCConfig) -> (u64, u64) {
    assert!(cfg.n >= 1 && cfg.n <= 64, "desk-scale sampler: 1 <= n <= 64");
    assert!(cfg.samples >= 1);
    let per_worker: Vec<u64> = (0..WORKERS)
        .map(|w| cfg.samples / WORKERS + u64::from(w < cfg.samples % WORKERS))
        .collect();
    let counts: Vec<(u64, u64)> = (0..WORKERS as usize)
        .into_par_iter()
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(w as u64);
            let mut none = 0u64;
            let mut all = 0u64;
            for _ in 0..per_worker[w] {
                let eigen = draw_spectrum(cfg.n, &mut rng);
                let inside = eigen
                    .iter()
                    .filter(|&&x| x > cfg.s1 && x < cfg.s2)
                    .count();
                if inside == 0 {
                    none += 1;
                }
                if inside == cfg.n {
                    all += 1;
                }
            }
            (none, all)
        })
        .collect();
    counts
        .into_iter()
        .fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1))
}

/// Empirical frequency of the selected gap event with binomial stderr.
pub fn gap_probability_mc(cfg: &MCConfig, mode: GapMode) -> GapEstimate {
    let (none, all) = gap_counts(cfg);
    let hits = match mode {
        GapMode::NoneInInterval => none,
        GapMode::AllInInterval => all,
    };
    let p_hat = hits as f64 / cfg.samples as f64;
    let stderr = (p_hat * (1.0 - p_hat) / cfg.samples as f64).sqrt();
    GapEstimate {
        p_hat,
        stderr,
        mode,
    }
}

/// Exact gap probability `D_n(s1, s2) / C_n` through the Hankel-determinant
/// route at the mode's designated amplitudes.
pub fn gap_probability_det(
    n: usize,
    s1: f64,
    s2: f64,
    mode: GapMode,
    ctx: &PrecisionContext,
) -> Result<Real> {
    assert!((1..=64).contains(&n), "determinant route: 1 <= n <= 64");
    let params = match mode {
        GapMode::NoneInInterval => WeightParams::gap_none(s1, s2)?,
        GapMode::AllInInterval => WeightParams::gap_all(s1, s2)?,
    };
    let sys = build_ortho_system(&params, n, ctx)?;
    let wp = sys.prec();
    let ln_p = Float::with_val(wp, sys.log_d(n) - ln_partition_constant(n, wp));
    Ok(ln_p.exp())
}
