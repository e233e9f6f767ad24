//! Soft-edge double scaling `s_i = sqrt(2n) + t_i / (sqrt(2) n^{1/6})`.
//!
//! At the spectrum edge the auxiliary residues obey
//! `R_{n,i} ~ mu_i(t1,t2) n^{-1/6}` (and `nu_i` for the second side), the
//! scaled log-derivative `n^{-1/6} sigma_n / sqrt(2)` tends to the
//! Hamiltonian of a coupled Painleve II system, and the recurrence
//! coefficients pick up universal corrections. None of this is assumed here:
//! finite-n pipelines are built along a doubling `n` sweep, the limits are
//! extracted by a two-term fit `c0 + c1 n^{-1/3}` (the correction exponent
//! the expansions prescribe), and every limit relation is then verified
//! against the extracted data, with observed convergence rates reported.
//!
//! The `t`-derivatives of the limit functions come from small grids of
//! extractions spaced `delta` apart; the grid spacing is deliberately much
//! coarser than the finite-difference steps used at fixed `n`, because the
//! extracted values carry `O(n^{-1/3})` systematic error that must stay
//! common-mode across the stencil.

use std::collections::HashMap;

use rayon::prelude::*;
use rug::Float;

use crate::identities::ResidualReport;
use crate::numerics::{PrecisionContext, Real};
use crate::ortho::{build_ortho_system, default_bits, OrthoSystem, SigmaRoute};
use crate::weight::{Mode, WeightParams};
use crate::{Error, Result};

/// Weight amplitudes for an edge sweep; the jump locations are supplied by
/// the scaling map at each `n`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeTemplate {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
}

impl EdgeTemplate {
    pub fn new(a: f64, b1: f64, b2: f64) -> Self {
        Self { a, b1, b2 }
    }

    fn params_at(&self, s1: Real, s2: Real) -> Result<WeightParams> {
        let mode = if self.b1 != 0.0 && self.b2 != 0.0 {
            Mode::Strict
        } else {
            Mode::Relaxed
        };
        WeightParams::new(self.a, self.b1, self.b2, 0.0, 1.0, mode)
            .and_then(|p| p.with_endpoints(s1, s2))
    }
}

/// `s_i = sqrt(2n) + t_i / (sqrt(2) n^{1/6})`, exactly at working precision.
pub fn scaled_endpoints(n: usize, t1: &Real, t2: &Real, ctx: &PrecisionContext) -> Result<(Real, Real)> {
    if !(t1.clone() < t2.clone()) {
        return Err(Error::OrderViolation {
            t1: t1.to_f64(),
            t2: t2.to_f64(),
        });
    }
    let wp = ctx.working();
    let edge = Float::with_val(wp, 2.0 * n as f64).sqrt();
    let scale = Float::with_val(wp, 2).sqrt() * Float::with_val(wp, n as f64).root(6);
    let s1 = Float::with_val(wp, &edge + Float::with_val(wp, t1 / &scale));
    let s2 = Float::with_val(wp, &edge + Float::with_val(wp, t2 / &scale));
    Ok((s1, s2))
}

/// Finite-n data at one scaled point: the `n^{1/6}`-rescaled residues, the
/// rescaled log-derivative, and the recurrence coefficients.
#[derive(Debug, Clone)]
pub struct ScalingPoint {
    pub n: usize,
    pub t1: Real,
    pub t2: Real,
    pub s1: Real,
    pub s2: Real,
    /// `n^{1/6} R_{n,1}`
    pub mu1_hat: Real,
    /// `n^{1/6} R_{n,2}`
    pub nu1_hat: Real,
    /// `n^{-1/6} sigma_n / sqrt(2)`
    pub sigma_hat: Real,
    pub alpha_n: Real,
    pub beta_n: Real,
}

/// Builds one scaled pipeline; `bits = None` resolves to the per-`n` default
/// precision policy.
pub fn scaling_point(
    template: &EdgeTemplate,
    n: usize,
    t1: &Real,
    t2: &Real,
    bits: Option<u32>,
) -> Result<ScalingPoint> {
    let ctx = PrecisionContext::with_bits(bits.unwrap_or_else(|| default_bits(n)))?;
    let (s1, s2) = scaled_endpoints(n, t1, t2, &ctx)?;
    let params = template.params_at(s1.clone(), s2.clone())?;
    let sys = build_ortho_system(&params, n, &ctx)?;
    Ok(point_from_system(&sys, n, t1, t2))
}

fn point_from_system(sys: &OrthoSystem, n: usize, t1: &Real, t2: &Real) -> ScalingPoint {
    let wp = sys.prec();
    let aux = sys.aux_quantities(n);
    let sixth = Float::with_val(wp, n as f64).root(6);
    let sigma = sys
        .sigma_n(n, SigmaRoute::TwoP)
        .expect("two-p sigma route is total");
    let sqrt2 = Float::with_val(wp, 2).sqrt();
    ScalingPoint {
        n,
        t1: t1.clone(),
        t2: t2.clone(),
        s1: sys.params().s1().clone(),
        s2: sys.params().s2().clone(),
        mu1_hat: Float::with_val(wp, aux.r_cap(1) * &sixth),
        nu1_hat: Float::with_val(wp, aux.r_cap(2) * &sixth),
        sigma_hat: Float::with_val(wp, &sigma / &sixth) / &sqrt2,
        alpha_n: sys.alpha(n).clone(),
        beta_n: sys.beta(n).clone(),
    }
}

/// Two-term least-squares fit `y ~ c0 + c1 x` (used with `x = n^{-1/3}`).
fn fit_two_term(xs: &[Real], ys: &[Real]) -> (Real, Real) {
    let wp = 192;
    let n = Float::with_val(wp, xs.len() as f64);
    let mut sx = Float::with_val(wp, 0);
    let mut sy = Float::with_val(wp, 0);
    let mut sxx = Float::with_val(wp, 0);
    let mut sxy = Float::with_val(wp, 0);
    for (x, y) in xs.iter().zip(ys) {
        sx += Float::with_val(wp, x);
        sy += Float::with_val(wp, y);
        sxx += Float::with_val(wp, x * x);
        sxy += Float::with_val(wp, x * y);
    }
    let denom = Float::with_val(wp, &n * &sxx) - Float::with_val(wp, &sx * &sx);
    let c1 = (Float::with_val(wp, &n * &sxy) - Float::with_val(wp, &sx * &sy)) / &denom;
    let c0 = (sy - Float::with_val(wp, &c1 * &sx)) / &n;
    (c0, c1)
}

/// Observed convergence data for one extrapolated quantity along a doubling
/// `n` sweep: successive-difference contraction factors and the implied
/// correction exponent.
#[derive(Debug, Clone)]
pub struct RateEstimate {
    pub label: String,
    /// |d_{j+1} / d_j| for successive differences over doubling n.
    pub contraction_factors: Vec<f64>,
    /// Mean of -log2(contraction): the observed correction exponent.
    pub observed_exponent: f64,
}

impl RateEstimate {
    /// `None` for an identically-constant sequence (a degenerate side whose
    /// residue vanishes for every `n`): the limit is exact, no rate applies.
    fn from_sequence(label: &str, values: &[Real]) -> Result<Option<Self>> {
        if values.len() < 3 {
            return Err(Error::RateMismatch(format!(
                "{label}: need at least 3 sweep values for a rate estimate"
            )));
        }
        let wp = 192;
        let mut diffs = Vec::new();
        for pair in values.windows(2) {
            diffs.push(Float::with_val(wp, &pair[1] - &pair[0]).abs());
        }
        if diffs.iter().all(|d| d.is_zero()) {
            return Ok(None);
        }
        let mut factors = Vec::new();
        for pair in diffs.windows(2) {
            if pair[0].is_zero() {
                return Err(Error::RateMismatch(format!(
                    "{label}: zero successive difference; rate undefined"
                )));
            }
            factors.push(Float::with_val(wp, &pair[1] / &pair[0]).to_f64());
        }
        let exponent = -factors.iter().map(|f| f.log2()).sum::<f64>() / factors.len() as f64;
        Ok(Some(Self {
            label: label.to_string(),
            contraction_factors: factors,
            observed_exponent: exponent,
        }))
    }
}

/// Extracted soft-edge limit data at one `(t1, t2)`:
/// `v_i = -mu_1/sqrt(2), -nu_1/sqrt(2)` with `w_i = v_{i,xi} / (2 v_i)` from
/// a 3-point diagonal stencil, the Hamiltonian `H2`, the fit byproducts
/// `mu2, nu2`, and per-quantity rate estimates.
#[derive(Debug, Clone)]
pub struct EdgeExtract {
    pub template: EdgeTemplate,
    pub t1: f64,
    pub t2: f64,
    pub delta: f64,
    pub n_list: Vec<usize>,
    pub mu1: Real,
    pub nu1: Real,
    /// Fit coefficients of the `n^{-1/3}` corrections (no acceptance weight).
    pub mu2: Real,
    pub nu2: Real,
    pub v: [Real; 2],
    pub w: [Real; 2],
    pub h2: Real,
    pub rates: Vec<RateEstimate>,
    /// Raw sweep at the base point (for asymptotics checks downstream).
    pub base_sweep: Vec<ScalingPoint>,
}

impl EdgeExtract {
    pub fn eta(&self) -> f64 {
        self.t2 - self.t1
    }

    /// Fitted `O(n^{-1/3})` deviation envelope at sweep ceiling `n`:
    /// `kappa * max(|mu2|, |nu2|)/sqrt(2) * n^{-1/3}`, floored at `1e-6`.
    pub fn envelope(&self, n: usize, kappa: f64) -> f64 {
        let c1 = (self.mu2.to_f64().abs().max(self.nu2.to_f64().abs()))
            / std::f64::consts::SQRT_2;
        (kappa * c1.max(1e-6)) * (n as f64).powf(-1.0 / 3.0)
    }

    pub fn h2_value(&self) -> &Real {
        &self.h2
    }
}

/// Grid of extractions around a base `(t1, t2)`: offsets are integer
/// multiples of `delta` in each coordinate.
pub struct EdgeGrid {
    pub template: EdgeTemplate,
    pub t1: f64,
    pub t2: f64,
    pub delta: f64,
    pub n_list: Vec<usize>,
    offsets: Vec<(i32, i32)>,
    index: HashMap<(i32, i32), usize>,
    /// `points[offset_idx][n_idx]`
    points: Vec<Vec<ScalingPoint>>,
    /// Extrapolated `(mu1, nu1, mu2, nu2)` per offset.
    limits: Vec<(Real, Real, Real, Real)>,
}

/// The diagonal 3-point stencil used for `xi`-derivatives at fixed `eta`.
pub const DIAGONAL_OFFSETS: [(i32, i32); 3] = [(-1, -1), (0, 0), (1, 1)];

/// Full square grid of half-width `hw` (`(2hw+1)^2` offsets).
pub fn square_offsets(hw: i32) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for j in -hw..=hw {
        for k in -hw..=hw {
            out.push((j, k));
        }
    }
    out
}

impl EdgeGrid {
    /// Builds every `(offset, n)` pipeline; the jobs are independent and run
    /// in parallel, collected in deterministic index order.
    pub fn build(
        template: &EdgeTemplate,
        t1: f64,
        t2: f64,
        delta: f64,
        offsets: &[(i32, i32)],
        n_list: &[usize],
        bits: Option<u32>,
    ) -> Result<Self> {
        assert!(n_list.len() >= 3, "need >= 3 sweep values for extrapolation");
        let wp = 192u32;
        let jobs: Vec<(usize, usize)> = (0..offsets.len())
            .flat_map(|o| (0..n_list.len()).map(move |ni| (o, ni)))
            .collect();
        let computed: Result<Vec<ScalingPoint>> = jobs
            .par_iter()
            .map(|&(o, ni)| {
                let (j, k) = offsets[o];
                let t1r = Float::with_val(wp, t1)
                    + Float::with_val(wp, j) * Float::with_val(wp, delta);
                let t2r = Float::with_val(wp, t2)
                    + Float::with_val(wp, k) * Float::with_val(wp, delta);
                scaling_point(template, n_list[ni], &t1r, &t2r, bits)
            })
            .collect();
        let computed = computed?;
        let mut points: Vec<Vec<ScalingPoint>> = Vec::with_capacity(offsets.len());
        for o in 0..offsets.len() {
            let row: Vec<ScalingPoint> = (0..n_list.len())
                .map(|ni| computed[o * n_list.len() + ni].clone())
                .collect();
            points.push(row);
        }
        let xs: Vec<Real> = n_list
            .iter()
            .map(|&n| {
                let x = Float::with_val(wp, n as f64).root(3);
                Float::with_val(wp, 1) / x
            })
            .collect();
        let mut limits = Vec::with_capacity(offsets.len());
        for row in &points {
            let mus: Vec<Real> = row.iter().map(|p| p.mu1_hat.clone()).collect();
            let nus: Vec<Real> = row.iter().map(|p| p.nu1_hat.clone()).collect();
            let (mu1, mu2) = fit_two_term(&xs, &mus);
            let (nu1, nu2) = fit_two_term(&xs, &nus);
            limits.push((mu1, nu1, mu2, nu2));
        }
        let index = offsets
            .iter()
            .copied()
            .enumerate()
            .map(|(i, o)| (o, i))
            .collect();
        Ok(Self {
            template: *template,
            t1,
            t2,
            delta,
            n_list: n_list.to_vec(),
            offsets: offsets.to_vec(),
            index,
            points,
            limits,
        })
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn point(&self, offset: (i32, i32), n_idx: usize) -> &ScalingPoint {
        &self.points[self.index[&offset]][n_idx]
    }

    pub fn base_sweep(&self) -> &[ScalingPoint] {
        &self.points[self.index[&(0, 0)]]
    }

    /// Extrapolated `(mu1, nu1)` at an offset.
    pub fn limit(&self, offset: (i32, i32)) -> (&Real, &Real) {
        let i = self.index[&offset];
        (&self.limits[i].0, &self.limits[i].1)
    }

    /// Extrapolated correction coefficients `(mu2, nu2)` at an offset.
    pub fn correction(&self, offset: (i32, i32)) -> (&Real, &Real) {
        let i = self.index[&offset];
        (&self.limits[i].2, &self.limits[i].3)
    }

    /// `mu1 + nu1` at an offset (the combination the limit PDEs live on).
    fn limit_sum(&self, offset: (i32, i32)) -> Real {
        let (mu, nu) = self.limit(offset);
        Float::with_val(mu.prec(), mu + nu.clone())
    }

    /// Extracted Painleve II data `(v, w, H2)` at a grid offset whose
    /// diagonal neighbors exist.
    pub fn pii_data_at(&self, offset: (i32, i32)) -> Result<([Real; 2], [Real; 2], Real)> {
        let wp = 192u32;
        let (j, k) = offset;
        let up = (j + 1, k + 1);
        let down = (j - 1, k - 1);
        for o in [up, down] {
            if !self.index.contains_key(&o) {
                return Err(Error::RateMismatch(format!(
                    "grid lacks diagonal neighbor {o:?} for offset {offset:?}"
                )));
            }
        }
        let sqrt2 = Float::with_val(wp, 2).sqrt();
        let (mu_c, nu_c) = self.limit(offset);
        let (mu_u, nu_u) = self.limit(up);
        let (mu_d, nu_d) = self.limit(down);
        let v = [
            -Float::with_val(wp, mu_c / &sqrt2),
            -Float::with_val(wp, nu_c / &sqrt2),
        ];
        let two_delta = Float::with_val(wp, 2.0 * self.delta);
        let vxi = [
            -(Float::with_val(wp, mu_u - mu_d.clone()) / &two_delta) / &sqrt2,
            -(Float::with_val(wp, nu_u - nu_d.clone()) / &two_delta) / &sqrt2,
        ];
        let mut w = [Float::with_val(wp, 0), Float::with_val(wp, 0)];
        for i in 0..2 {
            if v[i].is_zero() && vxi[i].is_zero() {
                // Structurally absent side (degenerate single-jump weight):
                // v_i = 0 is the invariant subspace, take w_i := 0.
                continue;
            }
            if v[i].clone().abs() < 1e-12 {
                return Err(Error::DegenerateResidue {
                    n: *self.n_list.last().unwrap(),
                    index: i + 1,
                    reason: "extracted v_i vanishes on the stencil".into(),
                });
            }
            w[i] = Float::with_val(wp, &vxi[i] / &v[i]) / 2u32;
        }
        let t1 = Float::with_val(wp, self.t1) + Float::with_val(wp, j) * Float::with_val(wp, self.delta);
        let t2 = Float::with_val(wp, self.t2) + Float::with_val(wp, k) * Float::with_val(wp, self.delta);
        let h2 = hamiltonian_ii(&v, &w, &t1, &t2);
        Ok((v, w, h2))
    }
}

/// `H_II = v1 w1^2 + v2 w2^2 - (v1 + v2)^2 - t1 v1 - t2 v2`.
pub fn hamiltonian_ii(v: &[Real; 2], w: &[Real; 2], t1: &Real, t2: &Real) -> Real {
    let wp = v[0].prec().max(w[0].prec());
    Float::with_val(wp, &v[0] * Float::with_val(wp, &w[0] * &w[0]))
        + Float::with_val(wp, &v[1] * Float::with_val(wp, &w[1] * &w[1]))
        - {
            let s = Float::with_val(wp, &v[0] + &v[1]);
            Float::with_val(wp, &s * &s)
        }
        - Float::with_val(wp, t1 * &v[0])
        - Float::with_val(wp, t2 * &v[1])
}

/// Extraction at a single `(t1, t2)`: a diagonal 3-point grid over the sweep,
/// Richardson limits, rate estimates, and the assembled `(v, w, H2)`.
///
/// Fails with [`Error::RateMismatch`] if the observed correction exponent of
/// either rescaled residue strays from `1/3` by more than `0.2`.
pub fn extract_edge(
    template: &EdgeTemplate,
    t1: f64,
    t2: f64,
    n_list: &[usize],
    delta: f64,
    bits: Option<u32>,
) -> Result<EdgeExtract> {
    let grid = EdgeGrid::build(template, t1, t2, delta, &DIAGONAL_OFFSETS, n_list, bits)?;
    let extract = extract_from_grid(&grid)?;
    for rate in &extract.rates {
        if (rate.observed_exponent - 1.0 / 3.0).abs() > 0.2 {
            return Err(Error::RateMismatch(format!(
                "{}: observed correction exponent {:.3} outside 1/3 +- 0.2",
                rate.label, rate.observed_exponent
            )));
        }
    }
    Ok(extract)
}

/// [`extract_edge`] without the rate gate: still records the observed rates,
/// but leaves judging them to the caller. The verification harness uses this
/// so that slow-rate configurations (where the leading correction
/// coefficient nearly cancels) still produce limit data for the other
/// checks.
pub fn extract_edge_ungated(
    template: &EdgeTemplate,
    t1: f64,
    t2: f64,
    n_list: &[usize],
    delta: f64,
    bits: Option<u32>,
) -> Result<EdgeExtract> {
    let grid = EdgeGrid::build(template, t1, t2, delta, &DIAGONAL_OFFSETS, n_list, bits)?;
    extract_from_grid(&grid)
}

/// Assembles an [`EdgeExtract`] from any grid containing the diagonal
/// stencil. Rates are recorded, not judged.
pub fn extract_from_grid(grid: &EdgeGrid) -> Result<EdgeExtract> {
    let base = grid.base_sweep();
    let mus: Vec<Real> = base.iter().map(|p| p.mu1_hat.clone()).collect();
    let nus: Vec<Real> = base.iter().map(|p| p.nu1_hat.clone()).collect();
    let mut rates = Vec::new();
    if let Some(rate) = RateEstimate::from_sequence("mu1_hat", &mus)? {
        rates.push(rate);
    }
    if let Some(rate) = RateEstimate::from_sequence("nu1_hat", &nus)? {
        rates.push(rate);
    }
    let (v, w, h2) = grid.pii_data_at((0, 0))?;
    let (mu1, nu1) = grid.limit((0, 0));
    let (mu2, nu2) = grid.correction((0, 0));
    Ok(EdgeExtract {
        template: grid.template,
        t1: grid.t1,
        t2: grid.t2,
        delta: grid.delta,
        n_list: grid.n_list.clone(),
        mu1: mu1.clone(),
        nu1: nu1.clone(),
        mu2: mu2.clone(),
        nu2: nu2.clone(),
        v,
        w,
        h2,
        rates,
        base_sweep: base.to_vec(),
    })
}

/// Params slot for grid-level reports: the template amplitudes with the
/// t-window standing in for the per-n jump locations.
fn report_params(grid: &EdgeGrid) -> WeightParams {
    WeightParams::new(
        grid.template.a,
        grid.template.b1,
        grid.template.b2,
        grid.t1,
        grid.t2,
        Mode::Relaxed,
    )
    .expect("grid t-window is a valid params slot")
}

/// Limit-PDE residuals for `(mu1, nu1)` on a square grid (half-width >= 1),
/// plus the mixed-partial and cross-derivative symmetries.
pub fn check_mu_nu_pde(grid: &EdgeGrid) -> Result<Vec<ResidualReport>> {
    let wp = 192u32;
    let d = Float::with_val(wp, grid.delta);
    let d2 = Float::with_val(wp, &d * &d);
    let f = |j: i32, k: i32| grid.limit_sum((j, k));
    let center = f(0, 0);

    let d1 = Float::with_val(wp, f(1, 0) - f(-1, 0)) / Float::with_val(wp, 2 * d.clone());
    let d2f = Float::with_val(wp, f(0, 1) - f(0, -1)) / Float::with_val(wp, 2 * d.clone());
    let d11 = (Float::with_val(wp, f(1, 0) + f(-1, 0)) - Float::with_val(wp, 2 * center.clone()))
        / &d2;
    let d22 = (Float::with_val(wp, f(0, 1) + f(0, -1)) - Float::with_val(wp, 2 * center.clone()))
        / &d2;
    let d12 = (Float::with_val(wp, f(1, 1) - f(1, -1)) - Float::with_val(wp, f(-1, 1) - f(-1, -1)))
        / Float::with_val(wp, 4 * d2.clone());

    let (mu1, nu1) = grid.limit((0, 0));
    let sqrt2 = Float::with_val(wp, 2).sqrt();
    let t1 = Float::with_val(wp, grid.t1);
    let t2 = Float::with_val(wp, grid.t2);
    let sum = Float::with_val(wp, mu1 + nu1.clone());

    let params = report_params(grid);

    let mut out = Vec::new();
    // (d11 + d12)(mu+nu) - (d1(mu+nu))^2/(2 mu1) + 2 mu1 (sqrt2 (mu+nu) - t1)
    {
        let t_second = Float::with_val(wp, &d11 + &d12);
        let t_grad = Float::with_val(wp, &d1 * &d1) / Float::with_val(wp, 2 * mu1.clone());
        let t_coupling = Float::with_val(wp, 2 * mu1.clone())
            * (Float::with_val(wp, &sqrt2 * &sum) - &t1);
        let value = Float::with_val(wp, &t_second - &t_grad) + &t_coupling;
        out.push(ResidualReport::normalized(
            "edge/mu_nu_pde_1",
            *grid.n_list.last().unwrap(),
            &params,
            value,
            &[&t_second, &t_grad, &t_coupling],
            Some(grid.delta),
        ));
    }
    {
        let t_second = Float::with_val(wp, &d22 + &d12);
        let t_grad = Float::with_val(wp, &d2f * &d2f) / Float::with_val(wp, 2 * nu1.clone());
        let t_coupling = Float::with_val(wp, 2 * nu1.clone())
            * (Float::with_val(wp, &sqrt2 * &sum) - &t2);
        let value = Float::with_val(wp, &t_second - &t_grad) + &t_coupling;
        out.push(ResidualReport::normalized(
            "edge/mu_nu_pde_2",
            *grid.n_list.last().unwrap(),
            &params,
            value,
            &[&t_second, &t_grad, &t_coupling],
            Some(grid.delta),
        ));
    }
    // Cross-derivative symmetry d_{t2} mu1 = d_{t1} nu1.
    {
        let dmu_dt2 = Float::with_val(wp, grid.limit((0, 1)).0 - grid.limit((0, -1)).0)
            / Float::with_val(wp, 2 * d.clone());
        let dnu_dt1 = Float::with_val(wp, grid.limit((1, 0)).1 - grid.limit((-1, 0)).1)
            / Float::with_val(wp, 2 * d.clone());
        out.push(ResidualReport::two_sided(
            "edge/cross_derivative_symmetry",
            *grid.n_list.last().unwrap(),
            &params,
            dmu_dt2,
            dnu_dt1,
            Some(grid.delta),
        ));
    }
    Ok(out)
}

/// Coupled Painleve II residuals
/// `v_{i,xi,xi} - v_{i,xi}^2/(2 v_i) - 2 v_i (2(v1+v2) + t_i)` from the
/// diagonal stencil of extracted limits (per-`n` variant below feeds the
/// rate acceptance).
pub fn check_pii_residual(grid: &EdgeGrid) -> Result<Vec<ResidualReport>> {
    let wp = 192u32;
    let d = Float::with_val(wp, grid.delta);
    let sqrt2 = Float::with_val(wp, 2).sqrt();
    let t = [Float::with_val(wp, grid.t1), Float::with_val(wp, grid.t2)];
    let params = report_params(grid);

    // v_i at diagonal offsets -1, 0, +1.
    let vs: Vec<[Real; 2]> = [(-1, -1), (0, 0), (1, 1)]
        .into_iter()
        .map(|o| {
            let (mu, nu) = grid.limit(o);
            [
                -Float::with_val(wp, mu / &sqrt2),
                -Float::with_val(wp, nu / &sqrt2),
            ]
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..2 {
        let vm = &vs[0][i];
        let v0 = &vs[1][i];
        let vp = &vs[2][i];
        if v0.is_zero() && vm.is_zero() && vp.is_zero() {
            // Structurally absent side: every term of its equation vanishes.
            out.push(ResidualReport::normalized(
                format!("edge/pii_residual[i={}]", i + 1),
                *grid.n_list.last().unwrap(),
                &params,
                Float::with_val(wp, 0),
                &[],
                Some(grid.delta),
            ));
            continue;
        }
        if v0.clone().abs() < 1e-12 {
            return Err(Error::DegenerateResidue {
                n: *grid.n_list.last().unwrap(),
                index: i + 1,
                reason: "extracted v_i vanishes on the stencil".into(),
            });
        }
        let vxi = Float::with_val(wp, vp - vm.clone()) / Float::with_val(wp, 2 * d.clone());
        let vxixi = (Float::with_val(wp, vp + vm.clone())
            - Float::with_val(wp, 2 * v0.clone()))
            / Float::with_val(wp, &d * &d);
        let vsum = Float::with_val(wp, &vs[1][0] + &vs[1][1]);
        let t_grad = Float::with_val(wp, &vxi * &vxi) / Float::with_val(wp, 2 * v0.clone());
        let t_coupling = Float::with_val(wp, 2 * v0.clone())
            * (Float::with_val(wp, 2 * vsum) + &t[i]);
        let value = Float::with_val(wp, &vxixi - &t_grad) - &t_coupling;
        out.push(ResidualReport::normalized(
            format!("edge/pii_residual[i={}]", i + 1),
            *grid.n_list.last().unwrap(),
            &params,
            value,
            &[&vxixi, &t_grad, &t_coupling],
            Some(grid.delta),
        ));
    }
    Ok(out)
}

/// Per-`n` coupled-PII residual computed from *that* `n`'s rescaled data
/// alone (no extrapolation): the sequence should decay like the `n^{-1/3}`
/// correction as the sweep climbs.
pub fn pii_residual_per_n(grid: &EdgeGrid) -> Result<Vec<(usize, f64)>> {
    let wp = 192u32;
    let d = Float::with_val(wp, grid.delta);
    let sqrt2 = Float::with_val(wp, 2).sqrt();
    let t = [Float::with_val(wp, grid.t1), Float::with_val(wp, grid.t2)];
    let mut out = Vec::new();
    for (ni, &n) in grid.n_list.iter().enumerate() {
        let v_at = |o: (i32, i32)| -> [Real; 2] {
            let p = grid.point(o, ni);
            [
                -Float::with_val(wp, &p.mu1_hat / &sqrt2),
                -Float::with_val(wp, &p.nu1_hat / &sqrt2),
            ]
        };
        let vm = v_at((-1, -1));
        let v0 = v_at((0, 0));
        let vp = v_at((1, 1));
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            if v0[i].is_zero() && vm[i].is_zero() && vp[i].is_zero() {
                continue;
            }
            if v0[i].clone().abs() < 1e-12 {
                return Err(Error::DegenerateResidue {
                    n,
                    index: i + 1,
                    reason: "per-n v_i vanishes on the stencil".into(),
                });
            }
            let vxi = Float::with_val(wp, &vp[i] - &vm[i]) / Float::with_val(wp, 2 * d.clone());
            let vxixi = (Float::with_val(wp, &vp[i] + &vm[i])
                - Float::with_val(wp, 2 * v0[i].clone()))
                / Float::with_val(wp, &d * &d);
            let vsum = Float::with_val(wp, &v0[0] + &v0[1]);
            let t_grad =
                Float::with_val(wp, &vxi * &vxi) / Float::with_val(wp, 2 * v0[i].clone());
            let t_coupling = Float::with_val(wp, 2 * v0[i].clone())
                * (Float::with_val(wp, 2 * vsum) + &t[i]);
            let value = Float::with_val(wp, &vxixi - &t_grad) - &t_coupling;
            let scale = [&vxixi, &t_grad, &t_coupling]
                .iter()
                .map(|x| x.to_f64().abs())
                .fold(1.0f64, f64::max);
            worst = worst.max(value.to_f64().abs() / scale);
        }
        out.push((n, worst));
    }
    Ok(out)
}

/// Soft-edge asymptotics of `sigma_n`, `alpha_n`, `beta_n` against the
/// extracted limit data: per-`n` deviations and their doubling factors.
#[derive(Debug, Clone)]
pub struct AsymptoticsReport {
    /// `(n, |n^{-1/6} sigma_n / sqrt2 - H2|)`
    pub sigma_deviation: Vec<(usize, f64)>,
    /// `(n, |alpha_n + (v1+v2)/(sqrt2 n^{1/6})|)`
    pub alpha_deviation: Vec<(usize, f64)>,
    /// `(n, |beta_n - n/2 + (v1+v2) n^{1/3} / 2|)`
    pub beta_remainder: Vec<(usize, f64)>,
    pub sigma_factors: Vec<f64>,
    pub alpha_factors: Vec<f64>,
}

fn doubling_factors(seq: &[(usize, f64)]) -> Vec<f64> {
    seq.windows(2)
        .map(|w| if w[0].1 == 0.0 { f64::NAN } else { w[1].1 / w[0].1 })
        .collect()
}

/// Evaluates the sigma and recurrence-coefficient asymptotics along the
/// sweep recorded in the extract.
pub fn check_sigma_and_recurrence_asymptotics(extract: &EdgeExtract) -> AsymptoticsReport {
    let wp = 192u32;
    let sqrt2 = Float::with_val(wp, 2).sqrt();
    let vsum = Float::with_val(wp, &extract.v[0] + &extract.v[1]);
    let h2 = &extract.h2;
    let mut sigma_dev = Vec::new();
    let mut alpha_dev = Vec::new();
    let mut beta_rem = Vec::new();
    for p in &extract.base_sweep {
        let n = p.n;
        let nf = Float::with_val(wp, n as f64);
        let sixth = nf.clone().root(6);
        let third = nf.clone().root(3);
        let s = Float::with_val(wp, &p.sigma_hat - h2).abs().to_f64();
        sigma_dev.push((n, s));
        let a = Float::with_val(
            wp,
            &p.alpha_n + Float::with_val(wp, &vsum / Float::with_val(wp, &sqrt2 * &sixth)),
        )
        .abs()
        .to_f64();
        alpha_dev.push((n, a));
        let b = Float::with_val(
            wp,
            Float::with_val(wp, &p.beta_n - Float::with_val(wp, &nf / 2u32))
                + Float::with_val(wp, &vsum * &third) / 2u32,
        )
        .abs()
        .to_f64();
        beta_rem.push((n, b));
    }
    AsymptoticsReport {
        sigma_factors: doubling_factors(&sigma_dev),
        alpha_factors: doubling_factors(&alpha_dev),
        sigma_deviation: sigma_dev,
        alpha_deviation: alpha_dev,
        beta_remainder: beta_rem,
    }
}

/// Second-order second-degree PDE for `H_II` on a square grid:
/// residual of
/// `(d1 H)(d22 H + d21 H)^2 + (d2 H)(d11 H + d12 H)^2
///    - 4 (d1 H)(d2 H)(t1 d1 H + t2 d2 H - H)`,
/// all derivatives from grid differences of the per-offset `H2` values.
/// A companion report adds the Hamiltonian-closure term
/// `+ 4 (d1 H)(d2 H)((d1 + d2) H)^2` (see module tests).
pub fn check_hii_pde(grid: &EdgeGrid) -> Result<Vec<ResidualReport>> {
    let wp = 192u32;
    let d = Float::with_val(wp, grid.delta);
    let d2 = Float::with_val(wp, &d * &d);
    let h_at = |j: i32, k: i32| -> Result<Real> {
        let (_, _, h2) = grid.pii_data_at((j, k))?;
        Ok(h2)
    };
    let center = h_at(0, 0)?;
    let hp0 = h_at(1, 0)?;
    let hm0 = h_at(-1, 0)?;
    let h0p = h_at(0, 1)?;
    let h0m = h_at(0, -1)?;
    let hpp = h_at(1, 1)?;
    let hpm = h_at(1, -1)?;
    let hmp = h_at(-1, 1)?;
    let hmm = h_at(-1, -1)?;

    let d1 = Float::with_val(wp, &hp0 - &hm0) / Float::with_val(wp, 2 * d.clone());
    let d2h = Float::with_val(wp, &h0p - &h0m) / Float::with_val(wp, 2 * d.clone());
    let d11 = (Float::with_val(wp, &hp0 + &hm0) - Float::with_val(wp, 2 * center.clone())) / &d2;
    let d22 = (Float::with_val(wp, &h0p + &h0m) - Float::with_val(wp, 2 * center.clone())) / &d2;
    let d12 = (Float::with_val(wp, &hpp - &hpm) - Float::with_val(wp, &hmp - &hmm))
        / Float::with_val(wp, 4 * d2.clone());

    let t1 = Float::with_val(wp, grid.t1);
    let t2 = Float::with_val(wp, grid.t2);
    let e1 = Float::with_val(wp, &d11 + &d12);
    let e2 = Float::with_val(wp, &d22 + &d12);
    let term1 = Float::with_val(wp, &d1 * Float::with_val(wp, &e2 * &e2));
    let term2 = Float::with_val(wp, &d2h * Float::with_val(wp, &e1 * &e1));
    let g = Float::with_val(wp, &t1 * &d1) + Float::with_val(wp, &t2 * &d2h) - &center;
    let prod = Float::with_val(wp, &d1 * &d2h);
    let term3 = Float::with_val(wp, 4 * prod.clone()) * &g;
    let value = Float::with_val(wp, &term1 + &term2) - &term3;

    let params = report_params(grid);
    let n_top = *grid.n_list.last().unwrap();
    let mut out = Vec::new();
    out.push(ResidualReport::normalized(
        "edge/hii_pde",
        n_top,
        &params,
        value.clone(),
        &[&term1, &term2, &term3],
        Some(grid.delta),
    ));
    // Hamiltonian closure: eliminating (v, w) from the Hamiltonian and the
    // flow instead gives term1 + term2 = 4 (d1H)(d2H)(G - ((d1+d2)H)^2);
    // the extra term is reported alongside for comparison.
    let dsum = Float::with_val(wp, &d1 + &d2h);
    let closure = Float::with_val(wp, &value + Float::with_val(wp, 4 * prod.clone()) * Float::with_val(wp, &dsum * &dsum));
    out.push(ResidualReport::normalized(
        "edge/hii_pde_hamiltonian_closure",
        n_top,
        &params,
        closure,
        &[&term1, &term2, &term3],
        Some(grid.delta),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_endpoints_formula() {
        let ctx = PrecisionContext::with_bits(128).unwrap();
        let wp = ctx.working();
        let t1 = Float::with_val(wp, -1);
        let t2 = Float::with_val(wp, -0.5);
        let (s1, s2) = scaled_endpoints(100, &t1, &t2, &ctx).unwrap();
        // s1 = sqrt(200) - 1/(sqrt(2) 100^{1/6})
        let expect =
            200f64.sqrt() - 1.0 / (std::f64::consts::SQRT_2 * 100f64.powf(1.0 / 6.0));
        assert!((s1.to_f64() - expect).abs() < 1e-12);
        assert!(s2 > s1);
        // Cross-check at doubled bits.
        let ctx2 = ctx.doubled();
        let (s1b, _) = scaled_endpoints(100, &t1, &t2, &ctx2).unwrap();
        let rel = crate::numerics::rel_residual(&s1, &s1b);
        assert!(rel < 1e-35);
        // t1 = 0 gives exactly sqrt(2n).
        let zero = Float::with_val(wp, 0);
        let one = Float::with_val(wp, 1);
        let (s1z, _) = scaled_endpoints(8, &zero, &one, &ctx).unwrap();
        let exact = Float::with_val(wp, 16).sqrt();
        assert_eq!(s1z, exact);
        // Monotone in t.
        let (s1m, _) = scaled_endpoints(8, &Float::with_val(wp, 0.25), &one, &ctx).unwrap();
        assert!(s1m > s1z);
        // Order violation.
        assert!(matches!(
            scaled_endpoints(8, &one, &zero, &ctx),
            Err(Error::OrderViolation { .. })
        ));
    }

    #[test]
    fn single_jump_extraction_contracts() {
        // The single-jump sweep shows the n^{-1/3} signature cleanly once n
        // reaches 16; the gated extraction must accept it.
        let template = EdgeTemplate::new(1.0, -0.5, 0.0);
        let extract =
            extract_edge(&template, -1.0, -0.5, &[16, 32, 64, 128], 1e-3, None).unwrap();
        assert_eq!(extract.rates.len(), 1); // nu side is structurally absent
        let rate = &extract.rates[0];
        assert!(
            (rate.observed_exponent - 1.0 / 3.0).abs() < 0.2,
            "{} exponent {}",
            rate.label,
            rate.observed_exponent
        );
        // Residue signs follow the jump amplitude: B1 < 0 so mu1 < 0, v1 > 0.
        assert!(extract.mu1 < 0 && extract.v[0] > 0);
        assert!(extract.nu1.is_zero() && extract.v[1].is_zero());
    }

    #[test]
    fn two_jump_extraction_records_rates() {
        // With both jumps the nu side contracts at ~2^{-1/3} already for
        // small n, while the mu side's leading correction nearly cancels at
        // this (t1, t2) and converges visibly slower; the ungated extraction
        // must record both honestly.
        let template = EdgeTemplate::new(1.0, -0.5, 0.3);
        let extract =
            extract_edge_ungated(&template, -1.0, -0.5, &[8, 16, 32, 64], 1e-3, None).unwrap();
        assert_eq!(extract.rates.len(), 2);
        let nu_rate = &extract.rates[1];
        assert!(
            (nu_rate.observed_exponent - 1.0 / 3.0).abs() < 0.2,
            "nu exponent {}",
            nu_rate.observed_exponent
        );
        assert!(extract.mu1 < 0 && extract.v[0] > 0);
        assert!(extract.nu1 > 0 && extract.v[1] < 0);
        // The gated variant refuses this sweep window on the mu side.
        let gated = extract_edge(&template, -1.0, -0.5, &[8, 16, 32, 64], 1e-3, None);
        assert!(matches!(gated, Err(Error::RateMismatch(_))));
    }

    #[test]
    fn edge_residues_match_stieltjes_route() {
        // The rescaled residues at a scaled configuration, by the moment
        // factorization and by Stieltjes quadrature: two disjoint pipelines.
        let template = EdgeTemplate::new(1.0, -0.5, 0.3);
        let ctx = PrecisionContext::with_bits(256).unwrap();
        let wp = ctx.working();
        let t1 = Float::with_val(wp, -1);
        let t2 = Float::with_val(wp, -0.5);
        let n = 16usize;
        let (s1, s2) = scaled_endpoints(n, &t1, &t2, &ctx).unwrap();
        let params = template.params_at(s1, s2).unwrap();
        let sys = build_ortho_system(&params, n, &ctx).unwrap();
        let oracle = crate::ortho::stieltjes_oracle(&params, n, &ctx).unwrap();
        let a = sys.aux_quantities(n);
        let b = oracle.aux_quantities(n);
        for i in [1usize, 2] {
            let rel = crate::numerics::rel_residual(a.r_cap(i), b.r_cap(i));
            assert!(rel < 1e-20, "side {i} deviation {:e}", rel.to_f64());
        }
    }

    #[test]
    fn limit_pde_checks_on_small_grid() {
        // The limit PDEs, the cross-derivative symmetry and both H_II PDE
        // variants evaluated from a full square grid of extractions; residual
        // scale is set by the n^{-1/3} correction at the sweep ceiling.
        let template = EdgeTemplate::new(1.0, -0.5, 0.3);
        let n_list = [8usize, 16, 32, 64];
        let grid =
            EdgeGrid::build(&template, -1.0, -0.5, 1e-3, &square_offsets(2), &n_list, None)
                .unwrap();
        let extract = extract_from_grid(&grid).unwrap();
        let envelope = extract.envelope(64, 3.0);
        for rep in check_mu_nu_pde(&grid).unwrap() {
            assert!(
                rep.rel_f64() < envelope,
                "{} residual {:e} vs envelope {envelope:e}",
                rep.label,
                rep.rel_f64()
            );
        }
        for rep in check_pii_residual(&grid).unwrap() {
            assert!(
                rep.rel_f64() < envelope,
                "{} residual {:e} vs envelope {envelope:e}",
                rep.label,
                rep.rel_f64()
            );
        }
        for rep in check_hii_pde(&grid).unwrap() {
            assert!(
                rep.rel_f64() < envelope,
                "{} residual {:e} vs envelope {envelope:e}",
                rep.label,
                rep.rel_f64()
            );
        }
        // Per-n residuals contract along the sweep.
        let per_n = pii_residual_per_n(&grid).unwrap();
        for pair in per_n.windows(2) {
            let f = pair[1].1 / pair[0].1;
            assert!((0.6..1.0).contains(&f), "per-n factor {f}");
        }
    }

    #[test]
    fn hii_pde_all_zero_degenerate_input() {
        // Jump-free template: every extracted quantity vanishes identically
        // and both PDE residual variants are exactly zero.
        let template = EdgeTemplate::new(1.0, 0.0, 0.0);
        let n_list = [8usize, 16, 32];
        let grid =
            EdgeGrid::build(&template, -1.0, -0.5, 1e-3, &square_offsets(2), &n_list, None)
                .unwrap();
        for rep in check_hii_pde(&grid).unwrap() {
            assert!(rep.abs_residual.is_zero(), "{} not exactly zero", rep.label);
        }
    }

    #[test]
    fn degenerate_template_keeps_nu_zero() {
        // B2 = 0: the second side carries no residue, nu1_hat = 0 for all n.
        let template = EdgeTemplate::new(1.0, -0.5, 0.0);
        let ctx = PrecisionContext::with_bits(256).unwrap();
        let wp = ctx.working();
        let t1 = Float::with_val(wp, -1);
        let t2 = Float::with_val(wp, -0.5);
        let p = scaling_point(&template, 16, &t1, &t2, None).unwrap();
        assert!(p.nu1_hat.is_zero());
        assert!(!p.mu1_hat.is_zero());
    }
}
