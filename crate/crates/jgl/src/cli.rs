//! Configuration, orchestration and report emission behind the `jgl` binary.
//!
//! Every command resolves its configuration to a [`RunConfig`] (also
//! deserializable from a JSON file via `--config`), runs the selected
//! pipeline, prints a human summary, optionally writes the JSON/CSV
//! artifacts, and reports pass/fail through the exit code:
//! `0` all checks passed, `1` some check failed, `2` invalid configuration,
//! `3` precision exhausted, `4` other numeric failure.
//!
//! Identical configurations (including seeds) produce byte-identical
//! artifacts; files are written atomically at the end of the run.

use std::path::PathBuf;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::identities::{
    check_coupled_pde_r, check_derivative_relations, check_difference_system,
    check_ladder_compatibility, check_riccati, check_sigma_pde, check_single_jump_ode,
    observed_fd_order, ResidualReport,
};
use crate::montecarlo::{gap_counts, gap_probability_det, GapMode, MCConfig};
use crate::numerics::{PrecisionContext, Real};
use crate::ortho::{build_ortho_system, default_bits, stieltjes_oracle, OrthoSystem};
use crate::painleve2::{integrate_pii, match_finite_n, PIIState};
use crate::painleve4::{check_hamilton_equations, check_recurrence_maps, to_piv_state};
use crate::report::{
    dec40, montecarlo_csv, moments_csv, recurrence_csv, softedge_csv, trajectory_csv,
    write_atomic, CheckRecord, MonteCarloRow, ParamsJson, Report,
};
use crate::softedge::{
    check_hii_pde, check_mu_nu_pde, check_pii_residual,
    check_sigma_and_recurrence_asymptotics, extract_from_grid, pii_residual_per_n,
    square_offsets, EdgeGrid, EdgeTemplate,
};
use crate::weight::{moment, Mode, WeightParams};
use crate::{Error, Result};

/// Residual thresholds, pinned once for the whole artifact.
pub mod thresholds {
    /// Difference-system identities (relative).
    pub const DIFFERENCE: f64 = 1e-30;
    /// sigma route agreement: SumR vs TwoP.
    pub const SIGMA_ROUTES: f64 = 1e-28;
    /// sigma route agreement: closed form vs TwoP.
    pub const SIGMA_CLOSED: f64 = 1e-25;
    /// Christoffel-Darboux and ladder compatibility.
    pub const LADDER: f64 = 1e-25;
    /// First-order derivative relations and Riccati analogs at step 1e-10.
    pub const DERIVATIVE: f64 = 1e-18;
    /// Second-order PDE residuals (normalized).
    pub const SECOND_ORDER: f64 = 1e-12;
    /// Painleve IV Hamilton equations.
    pub const PIV_HAMILTON: f64 = 1e-15;
    /// H_IV vs sigma_n + n(s1+s2), and a_i = R_{n-1,i}/2.
    pub const PIV_EXACT: f64 = 1e-25;
    /// Painleve IV recurrence maps (fd-limited one included).
    pub const PIV_MAPS: f64 = 1e-18;
    /// Soft-edge correction exponent window around 1/3.
    pub const EDGE_EXPONENT: f64 = 0.2;
    /// Soft-edge contraction factor window around 2^{-1/3}.
    pub const EDGE_CONTRACTION: f64 = 0.15;
    /// Envelope slack multiplier for fitted n^{-1/3} envelopes.
    pub const EDGE_KAPPA: f64 = 3.0;
    /// Monte Carlo agreement in units of stderr.
    pub const MC_SIGMAS: f64 = 4.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Moments,
    Recurrence,
    Verify,
    Painleve4,
    Softedge,
    IntegratePii,
    Montecarlo,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Moments => "moments",
            Command::Recurrence => "recurrence",
            Command::Verify => "verify",
            Command::Painleve4 => "painleve4",
            Command::Softedge => "softedge",
            Command::IntegratePii => "integrate-pii",
            Command::Montecarlo => "montecarlo",
        }
    }
}

fn default_a() -> f64 {
    1.0
}

/// Unified run configuration; unknown-to-a-command fields are ignored by it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_a", rename = "A")]
    pub a: f64,
    #[serde(default, rename = "B1")]
    pub b1: f64,
    #[serde(default, rename = "B2")]
    pub b2: f64,
    #[serde(default)]
    pub s1: f64,
    #[serde(default)]
    pub s2: f64,
    #[serde(default)]
    pub relaxed: bool,
    #[serde(default)]
    pub n_max: Option<usize>,
    /// `None` means auto (module defaults, overridable by JGL_PRECISION_BITS).
    #[serde(default)]
    pub precision_bits: Option<u32>,
    #[serde(default)]
    pub fd_step: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default)]
    pub t2: Option<f64>,
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub xi_span: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::ConfigInvalid(format!("cannot parse {}: {e}", path.display())))
    }

    fn params(&self) -> Result<WeightParams> {
        let mode = if self.relaxed {
            Mode::Relaxed
        } else {
            Mode::Strict
        };
        WeightParams::new(self.a, self.b1, self.b2, self.s1, self.s2, mode)
            .map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// Resolves the working precision: explicit flag wins, then the
    /// JGL_PRECISION_BITS environment variable, then the given default.
    fn bits(&self, auto: u32) -> Result<u32> {
        if let Some(b) = self.precision_bits {
            return Ok(b);
        }
        if let Ok(text) = std::env::var("JGL_PRECISION_BITS") {
            return text.parse::<u32>().map_err(|e| {
                Error::ConfigInvalid(format!("JGL_PRECISION_BITS not a number: {e}"))
            });
        }
        Ok(auto)
    }

    fn ctx(&self, auto: u32) -> Result<PrecisionContext> {
        PrecisionContext::with_bits(self.bits(auto)?)
    }

    /// Like [`Self::bits`] but keeps "auto" as `None` (per-`n` policies).
    fn bits_opt(&self) -> Result<Option<u32>> {
        if self.precision_bits.is_some() {
            return Ok(self.precision_bits);
        }
        if let Ok(text) = std::env::var("JGL_PRECISION_BITS") {
            return text
                .parse::<u32>()
                .map(Some)
                .map_err(|e| Error::ConfigInvalid(format!("JGL_PRECISION_BITS not a number: {e}")));
        }
        Ok(None)
    }
}

/// Result of a run: exit status plus the artifacts produced.
pub struct RunSummary {
    pub exit_code: i32,
    pub report: Option<Report>,
    pub files: Vec<PathBuf>,
}

/// Executes the configured pipeline (see module docs for the exit code map).
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    match config.command {
        Command::Moments => run_moments(config),
        Command::Recurrence => run_recurrence(config),
        Command::Verify => run_verify(config),
        Command::Painleve4 => run_painleve4(config),
        Command::Softedge => run_softedge(config),
        Command::IntegratePii => run_integrate_pii(config),
        Command::Montecarlo => run_montecarlo(config),
    }
}

fn finish(
    command: Command,
    params: &WeightParams,
    bits: u32,
    checks: Vec<CheckRecord>,
    csv: Option<(String, String)>, // (suffix, content)
    config: &RunConfig,
) -> Result<RunSummary> {
    let report = Report {
        command: command.as_str().into(),
        params: ParamsJson::from_params(params),
        precision_bits: bits,
        checks,
    };
    let mut files = Vec::new();
    if let Some(base) = &config.output_path {
        let json_path = base.with_extension("json");
        write_atomic(&json_path, report.to_json()?.as_bytes())?;
        files.push(json_path);
        if let Some((suffix, content)) = &csv {
            let csv_path = base.with_extension(suffix.as_str());
            write_atomic(&csv_path, content.as_bytes())?;
            files.push(csv_path);
        }
    }
    let failures: Vec<&CheckRecord> = report.checks.iter().filter(|c| !c.pass).collect();
    println!(
        "{}: {} checks, {} failed (precision {} bits)",
        command.as_str(),
        report.checks.len(),
        failures.len(),
        bits
    );
    for f in &failures {
        println!(
            "  FAIL {} (n={}) residual {} threshold {}",
            f.label, f.n, f.rel_residual, f.threshold
        );
    }
    for f in &files {
        println!("  wrote {}", f.display());
    }
    Ok(RunSummary {
        exit_code: i32::from(!failures.is_empty()),
        report: Some(report),
        files,
    })
}

fn run_moments(config: &RunConfig) -> Result<RunSummary> {
    let params = config.params()?;
    let ctx = config.ctx(192)?;
    let k_top = config.k.unwrap_or(0);
    let rows: Vec<(usize, Real)> = (0..=k_top)
        .map(|k| (k, moment(k, &params, &ctx)))
        .collect();
    for (k, m) in &rows {
        println!("m_{k} = {}", dec40(m));
    }
    let csv = moments_csv(&rows);
    finish(
        Command::Moments,
        &params,
        ctx.bits(),
        Vec::new(),
        Some(("csv".into(), csv)),
        config,
    )
}

fn run_recurrence(config: &RunConfig) -> Result<RunSummary> {
    let params = config.params()?;
    let n_max = config.n_max.unwrap_or(12);
    let ctx = config.ctx(default_bits(n_max).max(256))?;
    let sys = build_ortho_system(&params, n_max, &ctx)?;
    // Independent-route cross-check at moderate degree.
    let n_oracle = n_max.min(12);
    let oracle = stieltjes_oracle(&params, n_oracle, &ctx)?;
    let mut checks = Vec::new();
    for n in 0..=n_oracle {
        let rep = ResidualReport::two_sided(
            format!("recurrence/stieltjes_alpha[n={n}]"),
            n,
            &params,
            sys.alpha(n).clone(),
            oracle.alpha(n).clone(),
            None,
        );
        checks.push(CheckRecord::from_residual(&rep, 1e-20));
        if n >= 1 {
            let rep = ResidualReport::two_sided(
                format!("recurrence/stieltjes_beta[n={n}]"),
                n,
                &params,
                sys.beta(n).clone(),
                oracle.beta(n).clone(),
                None,
            );
            checks.push(CheckRecord::from_residual(&rep, 1e-20));
        }
    }
    let csv = recurrence_csv(&sys);
    finish(
        Command::Recurrence,
        &params,
        sys.prec(),
        checks,
        Some(("csv".into(), csv)),
        config,
    )
}

/// Christoffel-Darboux residual at a sample pair.
fn cd_report(sys: &OrthoSystem, n: usize, x: f64, y: f64) -> ResidualReport {
    let wp = sys.prec();
    let xr = Float::with_val(wp, x);
    let yr = Float::with_val(wp, y);
    let px = sys.eval_all(n, &xr);
    let py = sys.eval_all(n, &yr);
    let mut lhs = Float::with_val(wp, 0);
    for j in 0..n {
        lhs += Float::with_val(wp, &px[j] * &py[j]) / sys.h(j);
    }
    let num =
        Float::with_val(wp, &px[n] * &py[n - 1]) - Float::with_val(wp, &px[n - 1] * &py[n]);
    let rhs = num / Float::with_val(wp, sys.h(n - 1) * Float::with_val(wp, &xr - &yr));
    ResidualReport::two_sided(
        format!("cd/sample[x={x},y={y}]"),
        n,
        sys.params(),
        lhs,
        rhs,
        None,
    )
}

fn run_verify(config: &RunConfig) -> Result<RunSummary> {
    let params = config.params()?;
    let n_max = config.n_max.unwrap_or(20);
    let bits1 = config.bits(default_bits(n_max).max(512))?;
    let ctx1 = PrecisionContext::with_bits(bits1)?;
    let ctx2 = PrecisionContext::with_bits(bits1.max(768))?;
    let step = config.fd_step.or(Some(1e-10));
    let n_mid = n_max.min(8);
    let mut checks = Vec::new();

    // Difference system and three-route sigma agreement over the full range.
    let sys = build_ortho_system(&params, n_max, &ctx1)?;
    for rep in check_difference_system(&sys, 1..=n_max)? {
        let thr = if rep.label.starts_with("sigma/routes_closed") {
            thresholds::SIGMA_CLOSED
        } else if rep.label.starts_with("sigma/") {
            thresholds::SIGMA_ROUTES
        } else {
            thresholds::DIFFERENCE
        };
        checks.push(CheckRecord::from_residual(&rep, thr));
    }
    // Christoffel-Darboux at fixed sample pairs.
    let n_cd = n_max.clamp(1, 9);
    for (x, y) in [(0.3, 1.1), (-1.2, 0.4)] {
        let rep = cd_report(&sys, n_cd, x, y);
        checks.push(CheckRecord::from_residual(&rep, thresholds::LADDER));
    }
    // Ladder compatibility (S1), (S2').
    for rep in check_ladder_compatibility(&params, n_max.clamp(1, 6), &[-2.0, 0.1, 3.0], &ctx1)? {
        checks.push(CheckRecord::from_residual(&rep, thresholds::LADDER));
    }
    // First-order derivative relations and Riccati analogs.
    for rep in check_derivative_relations(&params, n_mid, step, &ctx1)? {
        checks.push(CheckRecord::from_residual(&rep, thresholds::DERIVATIVE));
    }
    for rep in check_riccati(&params, n_mid, step, &ctx1)? {
        checks.push(CheckRecord::from_residual(&rep, thresholds::DERIVATIVE));
    }
    // Observed central-difference order (pre-Richardson).
    let order = observed_fd_order(&params, n_mid, 1e-4, &ctx1)?;
    checks.push(CheckRecord::from_scalar(
        "derivative/fd_order",
        n_mid,
        order,
        2.0,
        0.2,
    ));
    // Second-order checks at boosted precision, default (balanced) step.
    for rep in check_coupled_pde_r(&params, n_mid, None, &ctx2)? {
        checks.push(CheckRecord::from_residual(&rep, thresholds::SECOND_ORDER));
    }
    if params.b2() == 0.0 {
        let rep = check_single_jump_ode(&params, n_mid, None, &ctx2)?;
        checks.push(CheckRecord::from_residual(&rep, thresholds::SECOND_ORDER));
    }
    let rep = check_sigma_pde(&params, n_mid, None, &ctx2)?;
    checks.push(CheckRecord::from_residual(&rep, thresholds::SECOND_ORDER));

    finish(Command::Verify, &params, bits1, checks, None, config)
}

fn run_painleve4(config: &RunConfig) -> Result<RunSummary> {
    let params = config.params()?;
    let n_max = config.n_max.unwrap_or(8);
    let n_p = n_max.clamp(1, 6);
    let bits = config.bits(default_bits(n_max).max(512))?;
    let ctx = PrecisionContext::with_bits(bits)?;
    let step = config.fd_step.or(Some(1e-10));
    let mut checks = Vec::new();
    for rep in check_hamilton_equations(&params, n_p, step, &ctx)? {
        checks.push(CheckRecord::from_residual(&rep, thresholds::PIV_HAMILTON));
    }
    for rep in check_recurrence_maps(&params, n_p, step, &ctx)? {
        let thr = if rep.fd_step.is_some() {
            thresholds::PIV_MAPS
        } else {
            thresholds::PIV_EXACT
        };
        checks.push(CheckRecord::from_residual(&rep, thr));
    }
    // H_IV vs sigma_n + n(s1+s2), and a_i = R_{n-1,i}/2.
    let sys = build_ortho_system(&params, n_p + 1, &ctx)?;
    let wp = sys.prec();
    let state = to_piv_state(&sys.aux_quantities(n_p), &sys, n_p)?;
    let sigma = sys.sigma_n(n_p, crate::ortho::SigmaRoute::TwoP)?;
    let rhs = sigma
        + Float::with_val(wp, n_p as f64) * Float::with_val(wp, params.s(1) + params.s(2).clone());
    let rep = ResidualReport::two_sided(
        "piv/hamiltonian_vs_sigma",
        n_p,
        &params,
        state.h.clone(),
        rhs,
        None,
    );
    checks.push(CheckRecord::from_residual(&rep, thresholds::PIV_EXACT));
    let prev = sys.aux_quantities(n_p - 1);
    for i in [1usize, 2usize] {
        let rep = ResidualReport::two_sided(
            format!("piv/a_equals_half_prev_R[i={i}]"),
            n_p,
            &params,
            state.a(i).clone(),
            Float::with_val(wp, prev.r_cap(i) / 2u32),
            None,
        );
        checks.push(CheckRecord::from_residual(&rep, thresholds::PIV_EXACT));
    }
    finish(Command::Painleve4, &params, bits, checks, None, config)
}

fn edge_inputs(config: &RunConfig) -> Result<(EdgeTemplate, f64, f64, Vec<usize>, f64)> {
    let template = EdgeTemplate::new(config.a, config.b1, config.b2);
    let t1 = config
        .t1
        .ok_or_else(|| Error::ConfigInvalid("softedge needs --t1".into()))?;
    let t2 = config
        .t2
        .ok_or_else(|| Error::ConfigInvalid("softedge needs --t2".into()))?;
    if t1 >= t2 {
        return Err(Error::ConfigInvalid(format!(
            "need t1 < t2, got {t1} >= {t2}"
        )));
    }
    let n_list = config
        .n_list
        .clone()
        .unwrap_or_else(|| vec![32, 64, 128, 256]);
    if n_list.len() < 3 {
        return Err(Error::ConfigInvalid(
            "softedge needs at least 3 sweep values in --n-list".into(),
        ));
    }
    let delta = config.delta.unwrap_or(1e-3);
    Ok((template, t1, t2, n_list, delta))
}

fn rate_checks(extract: &crate::softedge::EdgeExtract, checks: &mut Vec<CheckRecord>) {
    let n_top = *extract.n_list.last().unwrap();
    for rate in &extract.rates {
        checks.push(CheckRecord::from_scalar(
            &format!("edge/exponent[{}]", rate.label),
            n_top,
            rate.observed_exponent,
            1.0 / 3.0,
            thresholds::EDGE_EXPONENT,
        ));
        for (i, f) in rate.contraction_factors.iter().enumerate() {
            checks.push(CheckRecord::from_scalar(
                &format!("edge/contraction[{}][{i}]", rate.label),
                n_top,
                *f,
                1.0 / 2f64.powf(1.0 / 3.0),
                thresholds::EDGE_CONTRACTION,
            ));
        }
    }
}

fn run_softedge(config: &RunConfig) -> Result<RunSummary> {
    let (template, t1, t2, n_list, delta) = edge_inputs(config)?;
    // Report header: the amplitudes with the t-window standing in for the
    // per-n jump locations.
    let params = WeightParams::new(config.a, config.b1, config.b2, t1, t2, Mode::Relaxed)
        .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let bits = config.bits_opt()?;
    let grid = EdgeGrid::build(&template, t1, t2, delta, &square_offsets(2), &n_list, bits)?;
    let extract = extract_from_grid(&grid)?;
    let n_top = *n_list.last().unwrap();

    let mut checks = Vec::new();
    rate_checks(&extract, &mut checks);

    let envelope = extract.envelope(n_top, thresholds::EDGE_KAPPA);
    for rep in check_mu_nu_pde(&grid)? {
        checks.push(CheckRecord::from_scalar(
            &rep.label,
            n_top,
            rep.rel_f64(),
            0.0,
            envelope,
        ));
    }
    for rep in check_pii_residual(&grid)? {
        checks.push(CheckRecord::from_scalar(
            &rep.label,
            n_top,
            rep.rel_f64(),
            0.0,
            envelope,
        ));
    }
    // Per-n PII residual must contract along the sweep.
    let per_n = pii_residual_per_n(&grid)?;
    for (i, pair) in per_n.windows(2).enumerate() {
        let factor = pair[1].1 / pair[0].1.max(1e-300);
        checks.push(CheckRecord::from_scalar(
            &format!("edge/pii_per_n_factor[{i}]"),
            pair[1].0,
            factor,
            0.8,
            thresholds::EDGE_CONTRACTION.max(0.2),
        ));
    }
    // sigma-hat -> H2 and recurrence-coefficient asymptotics.
    let asym = check_sigma_and_recurrence_asymptotics(&extract);
    for (i, f) in asym.sigma_factors.iter().enumerate() {
        checks.push(CheckRecord::from_scalar(
            &format!("edge/sigma_to_h2_factor[{i}]"),
            n_top,
            *f,
            0.8,
            0.2,
        ));
    }
    for (i, f) in asym.alpha_factors.iter().enumerate() {
        checks.push(CheckRecord::from_scalar(
            &format!("edge/alpha_decay_factor[{i}]"),
            n_top,
            *f,
            1.0 / 2f64.sqrt(),
            0.15,
        ));
    }
    // beta remainder stays O(1): final remainder within 3x the sweep median.
    {
        let mut sorted: Vec<f64> = asym.beta_remainder.iter().map(|p| p.1).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2].max(1e-300);
        let last = asym.beta_remainder.last().unwrap().1;
        checks.push(CheckRecord::from_scalar(
            "edge/beta_remainder_bounded",
            n_top,
            last / median,
            1.0,
            2.0,
        ));
    }
    // H_II PDE residuals (displayed form and Hamiltonian closure).
    for rep in check_hii_pde(&grid)? {
        checks.push(CheckRecord::from_scalar(
            &rep.label,
            n_top,
            rep.rel_f64(),
            0.0,
            envelope,
        ));
    }

    let csv = softedge_csv(&extract.base_sweep);
    let reported_bits = bits.unwrap_or_else(|| default_bits(n_top));
    finish(
        Command::Softedge,
        &params,
        reported_bits,
        checks,
        Some(("csv".into(), csv)),
        config,
    )
}

fn run_integrate_pii(config: &RunConfig) -> Result<RunSummary> {
    let (template, t1, t2, n_list, delta) = edge_inputs(config)?;
    let params = WeightParams::new(config.a, config.b1, config.b2, t1, t2, Mode::Relaxed)
        .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let tol = config.tolerance.unwrap_or(1e-12);
    let span = config.xi_span.unwrap_or(0.3);
    let ctx = PrecisionContext::with_bits(config.bits(192)?)?;

    let extract =
        crate::softedge::extract_edge_ungated(&template, t1, t2, &n_list, delta, config.bits_opt()?)?;
    let mut checks = Vec::new();
    rate_checks(&extract, &mut checks);

    // Trajectory over the full span (for the CSV artifact).
    let initial = PIIState::from_extract(&extract);
    let wp = ctx.working();
    let end = Float::with_val(wp, t1 + span);
    let traj = integrate_pii(&initial, &end, tol, &ctx, &[])?;
    checks.push(CheckRecord::from_scalar(
        "pii/flow_identity_defect",
        *n_list.last().unwrap(),
        traj.flow_defect,
        0.0,
        10.0 * tol,
    ));
    // Match against fresh extractions across the span.
    let report = match_finite_n(&extract, span, tol, &ctx)?;
    checks.push(CheckRecord::from_scalar(
        "pii/match_finite_n_max_dev",
        *n_list.last().unwrap(),
        report.max_deviation,
        0.0,
        report.envelope,
    ));

    let csv = trajectory_csv(&traj.states);
    finish(
        Command::IntegratePii,
        &params,
        ctx.bits(),
        checks,
        Some(("csv".into(), csv)),
        config,
    )
}

fn run_montecarlo(config: &RunConfig) -> Result<RunSummary> {
    let n = config.n.unwrap_or(3);
    let s1 = config.s1;
    let s2 = config.s2;
    if s1 >= s2 {
        return Err(Error::ConfigInvalid(format!(
            "need s1 < s2, got {s1} >= {s2}"
        )));
    }
    let cfg = MCConfig {
        n,
        samples: config.samples.unwrap_or(1_000_000),
        seed: config.seed.unwrap_or(42),
        s1,
        s2,
    };
    if cfg.samples < 10_000 {
        return Err(Error::ConfigInvalid(
            "montecarlo needs at least 10^4 samples".into(),
        ));
    }
    let ctx = config.ctx(default_bits(n).max(192))?;
    let (none, all) = gap_counts(&cfg);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (mode, hits) in [(GapMode::NoneInInterval, none), (GapMode::AllInInterval, all)] {
        let p_hat = hits as f64 / cfg.samples as f64;
        let stderr = (p_hat * (1.0 - p_hat) / cfg.samples as f64).sqrt();
        let p_det = gap_probability_det(n, s1, s2, mode, &ctx)?;
        // For events too rare to register at this budget the empirical
        // stderr collapses to zero; the binomial variance at the exact
        // probability is the meaningful scale for the comparison.
        let pd = p_det.to_f64().clamp(0.0, 1.0);
        let stderr_eff = stderr.max((pd * (1.0 - pd) / cfg.samples as f64).sqrt());
        let sigma_distance = (p_hat - pd).abs() / stderr_eff.max(1e-300);
        rows.push(MonteCarloRow {
            n,
            s1,
            s2,
            mode: mode.as_str(),
            p_hat,
            stderr,
            p_det: p_det.clone(),
            sigma_distance,
        });
        checks.push(CheckRecord::from_scalar(
            &format!("mc/gap_agreement[{}]", mode.as_str()),
            n,
            p_hat,
            pd,
            thresholds::MC_SIGMAS * stderr_eff.max(1e-12),
        ));
    }
    let params = WeightParams::gap_none(s1, s2)?;
    let csv = montecarlo_csv(&rows);
    finish(
        Command::Montecarlo,
        &params,
        ctx.bits(),
        checks,
        Some(("csv".into(), csv)),
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(command: Command) -> RunConfig {
        RunConfig {
            command,
            a: 1.0,
            b1: -0.5,
            b2: 0.3,
            s1: -0.7,
            s2: 0.9,
            relaxed: false,
            n_max: Some(6),
            precision_bits: None,
            fd_step: None,
            tolerance: None,
            t1: None,
            t2: None,
            n_list: None,
            delta: None,
            xi_span: None,
            n: None,
            samples: None,
            seed: None,
            k: None,
            output_path: None,
        }
    }

    #[test]
    fn moments_command_prints_gaussian_mass() {
        let mut cfg = base_config(Command::Moments);
        cfg.b1 = 0.0;
        cfg.b2 = 0.0;
        cfg.relaxed = true;
        cfg.s1 = -1.0;
        cfg.s2 = 1.0;
        cfg.k = Some(0);
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.exit_code, 0);
        let report = summary.report.unwrap();
        assert_eq!(report.command, "moments");
    }

    #[test]
    fn verify_command_small_passes() {
        let mut cfg = base_config(Command::Verify);
        cfg.n_max = Some(6);
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.exit_code, 0, "verify failed some check");
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = base_config(Command::Verify);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.command, Command::Verify);
        assert_eq!(back.b1, -0.5);
        // Kebab-case command names parse.
        let parsed: RunConfig = serde_json::from_str(
            r#"{"command":"integrate-pii","A":1.0,"B1":-0.5,"B2":0.3,"s1":0,"s2":1}"#,
        )
        .unwrap();
        assert_eq!(parsed.command, Command::IntegratePii);
    }

    #[test]
    fn config_file_loads() {
        let dir = std::env::temp_dir().join(format!("jgl_cfg_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(
            &path,
            r#"{"command":"moments","A":1.0,"B1":0.0,"B2":0.0,"relaxed":true,
               "s1":-1.0,"s2":1.0,"k":2}"#,
        )
        .unwrap();
        let cfg = RunConfig::from_json_file(&path).unwrap();
        assert_eq!(cfg.command, Command::Moments);
        assert_eq!(cfg.k, Some(2));
        assert!(cfg.relaxed);
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.exit_code, 0);
        // Malformed file surfaces as a configuration error.
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(
            RunConfig::from_json_file(&path),
            Err(Error::ConfigInvalid(_))
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn invalid_s_order_is_config_error() {
        let mut cfg = base_config(Command::Montecarlo);
        cfg.s1 = 0.5;
        cfg.s2 = -0.5;
        let err = run(&cfg);
        assert!(matches!(err, Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn outputs_are_byte_identical_across_runs() {
        let dir = std::env::temp_dir().join(format!("jgl_cli_det_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut cfg = base_config(Command::Montecarlo);
        cfg.n = Some(2);
        cfg.s1 = -0.5;
        cfg.s2 = 0.5;
        cfg.samples = Some(20_000);
        cfg.seed = Some(7);
        cfg.output_path = Some(dir.join("mc"));
        // Below the minimum budget guard? 20k >= 10k, fine.
        let a = run(&cfg).unwrap();
        let json_a = std::fs::read(dir.join("mc.json")).unwrap();
        let csv_a = std::fs::read(dir.join("mc.csv")).unwrap();
        let b = run(&cfg).unwrap();
        let json_b = std::fs::read(dir.join("mc.json")).unwrap();
        let csv_b = std::fs::read(dir.join("mc.csv")).unwrap();
        assert_eq!(json_a, json_b);
        assert_eq!(csv_a, csv_b);
        assert_eq!(a.exit_code, b.exit_code);
        std::fs::remove_dir_all(&dir).ok();
    }
}
