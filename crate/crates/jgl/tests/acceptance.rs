//! Acceptance suite: every release criterion as one test with one summary
//! line, at the pinned parameters and tolerances.
//!
//! Conventions: `PASS`/`FAIL` lines go to stdout (visible with
//! `cargo test -- --nocapture`); a criterion asserts only after printing all
//! of its sub-results.

use jgl::cli::{run, thresholds, Command, RunConfig};
use jgl::identities::{
    check_coupled_pde_r, check_derivative_relations, check_difference_system,
    check_ladder_compatibility, check_riccati, check_sigma_pde, check_single_jump_ode,
    observed_fd_order,
};
use jgl::montecarlo::{gap_counts, gap_probability_det, GapMode, MCConfig};
use jgl::numerics::{rel_residual, PrecisionContext};
use jgl::ortho::{build_ortho_system, SigmaRoute};
use jgl::painleve2::{integrate_pii, match_finite_n, PIIState};
use jgl::painleve4::{check_hamilton_equations, check_recurrence_maps, to_piv_state};
use jgl::softedge::{
    check_sigma_and_recurrence_asymptotics, extract_edge_ungated, extract_from_grid,
    pii_residual_per_n, EdgeGrid, EdgeTemplate, DIAGONAL_OFFSETS,
};
use jgl::weight::WeightParams;
use rug::Float;

fn ctx(bits: u32) -> PrecisionContext {
    PrecisionContext::with_bits(bits).unwrap()
}

fn acceptance_params() -> [WeightParams; 2] {
    [
        WeightParams::strict(1.0, -0.5, 0.3, -0.7, 0.9).unwrap(),
        WeightParams::gap_all(-0.7, 0.9).unwrap(), // (0, 1, -1, -0.7, 0.9)
    ]
}

struct Tally {
    name: &'static str,
    failures: Vec<String>,
    checks: usize,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            failures: Vec::new(),
            checks: 0,
        }
    }

    fn check(&mut self, label: &str, ok: bool, detail: String) {
        self.checks += 1;
        if !ok {
            self.failures.push(format!("{label}: {detail}"));
        }
    }

    fn residual(&mut self, label: &str, rel: f64, thr: f64) {
        self.check(label, rel < thr, format!("residual {rel:e} >= {thr:e}"));
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("ACCEPTANCE {}: PASS ({} checks)", self.name, self.checks);
        } else {
            println!(
                "ACCEPTANCE {}: FAIL ({} of {} checks failed)",
                self.name,
                self.failures.len(),
                self.checks
            );
            for f in &self.failures {
                println!("  {f}");
            }
            panic!("acceptance criterion failed: {}", self.name);
        }
    }
}

#[test]
fn acceptance_1_finite_n_identity_suite() {
    let mut tally = Tally::new("1 finite-n identity suite");
    let c = ctx(512);
    for params in acceptance_params() {
        let sys = build_ortho_system(&params, 20, &c).unwrap();
        for rep in check_difference_system(&sys, 1..=20).unwrap() {
            let thr = if rep.label.starts_with("sigma/") {
                thresholds::SIGMA_ROUTES
            } else {
                thresholds::DIFFERENCE
            };
            tally.residual(&format!("{} n={}", rep.label, rep.n), rep.rel_f64(), thr);
        }
        // Christoffel-Darboux at two sample pairs, degree 20.
        for (x, y) in [(0.3, 1.1), (-1.2, 0.4)] {
            let wp = sys.prec();
            let n = 20usize;
            let xr = Float::with_val(wp, x);
            let yr = Float::with_val(wp, y);
            let px = sys.eval_all(n, &xr);
            let py = sys.eval_all(n, &yr);
            let mut lhs = Float::with_val(wp, 0);
            for j in 0..n {
                lhs += Float::with_val(wp, &px[j] * &py[j]) / sys.h(j);
            }
            let num = Float::with_val(wp, &px[n] * &py[n - 1])
                - Float::with_val(wp, &px[n - 1] * &py[n]);
            let rhs =
                num / Float::with_val(wp, sys.h(n - 1) * Float::with_val(wp, &xr - &yr));
            tally.residual(
                &format!("christoffel-darboux x={x} y={y}"),
                rel_residual(&lhs, &rhs).to_f64(),
                thresholds::LADDER,
            );
        }
        for n in [1usize, 6, 12] {
            for rep in check_ladder_compatibility(&params, n, &[-2.0, 0.1, 3.0], &c).unwrap() {
                tally.residual(&rep.label, rep.rel_f64(), thresholds::LADDER);
            }
        }
    }
    tally.finish();
}

#[test]
fn acceptance_2_derivative_and_riccati() {
    let mut tally = Tally::new("2 derivative relations and Riccati analogs");
    let c = ctx(512);
    for params in acceptance_params() {
        for rep in check_derivative_relations(&params, 8, Some(1e-10), &c).unwrap() {
            tally.residual(&rep.label, rep.rel_f64(), thresholds::DERIVATIVE);
        }
        for rep in check_riccati(&params, 8, Some(1e-10), &c).unwrap() {
            tally.residual(&rep.label, rep.rel_f64(), thresholds::DERIVATIVE);
        }
        let order = observed_fd_order(&params, 8, 1e-10, &c).unwrap();
        tally.check(
            "raw central-difference order",
            (1.8..=2.2).contains(&order),
            format!("observed order {order}"),
        );
    }
    tally.finish();
}

#[test]
fn acceptance_3_second_order_checks() {
    let mut tally = Tally::new("3 second-order PDE checks");
    let c = ctx(768);
    for params in acceptance_params() {
        for rep in check_coupled_pde_r(&params, 8, None, &c).unwrap() {
            tally.residual(&rep.label, rep.rel_f64(), thresholds::SECOND_ORDER);
        }
        let rep = check_sigma_pde(&params, 8, None, &c).unwrap();
        tally.residual(&rep.label, rep.rel_f64(), thresholds::SECOND_ORDER);
    }
    // Single-jump reduction (B2 = 0, relaxed).
    let single = WeightParams::relaxed(1.0, -0.5, 0.0, -0.7, 0.9).unwrap();
    let rep = check_single_jump_ode(&single, 8, None, &c).unwrap();
    tally.residual(&rep.label, rep.rel_f64(), thresholds::SECOND_ORDER);
    let pdes = check_coupled_pde_r(&single, 8, None, &c).unwrap();
    tally.residual(
        "single-jump collapse of first PDE",
        pdes[0].rel_f64(),
        thresholds::SECOND_ORDER,
    );
    tally.finish();
}

#[test]
fn acceptance_4_coupled_painleve_iv() {
    let mut tally = Tally::new("4 coupled Painleve IV");
    let c = ctx(512);
    for params in acceptance_params() {
        let n = 6usize;
        for rep in check_hamilton_equations(&params, n, Some(1e-10), &c).unwrap() {
            tally.residual(&rep.label, rep.rel_f64(), thresholds::PIV_HAMILTON);
        }
        for rep in check_recurrence_maps(&params, n, Some(1e-10), &c).unwrap() {
            let thr = if rep.fd_step.is_some() {
                thresholds::PIV_MAPS
            } else {
                thresholds::PIV_EXACT
            };
            tally.residual(&rep.label, rep.rel_f64(), thr);
        }
        let sys = build_ortho_system(&params, n + 1, &c).unwrap();
        let wp = sys.prec();
        let state = to_piv_state(&sys.aux_quantities(n), &sys, n).unwrap();
        let sigma = sys.sigma_n(n, SigmaRoute::TwoP).unwrap();
        let rhs = sigma
            + Float::with_val(wp, n as f64)
                * Float::with_val(wp, params.s(1) + params.s(2).clone());
        tally.residual(
            "H_IV vs sigma_n + n(s1+s2)",
            rel_residual(&state.h, &rhs).to_f64(),
            thresholds::PIV_EXACT,
        );
        let prev = sys.aux_quantities(n - 1);
        for i in [1usize, 2usize] {
            let half = Float::with_val(wp, prev.r_cap(i) / 2u32);
            tally.residual(
                &format!("a_{i} = R_(n-1,{i})/2"),
                rel_residual(state.a(i), &half).to_f64(),
                thresholds::PIV_EXACT,
            );
        }
    }
    tally.finish();
}

#[test]
fn acceptance_5_soft_edge_scaling() {
    let mut tally = Tally::new("5 soft-edge scaling");
    let template = EdgeTemplate::new(1.0, -0.5, 0.3);
    let n_list = [32usize, 64, 128, 256];
    let grid = EdgeGrid::build(&template, -1.0, -0.5, 1e-3, &DIAGONAL_OFFSETS, &n_list, None)
        .unwrap();
    let extract = extract_from_grid(&grid).unwrap();

    // Correction exponent and successive-difference contraction for the
    // rescaled residues on both sides.
    for rate in &extract.rates {
        tally.check(
            &format!("{} correction exponent", rate.label),
            (rate.observed_exponent - 1.0 / 3.0).abs() <= thresholds::EDGE_EXPONENT,
            format!(
                "observed {:.3} outside 1/3 +- {} (factors {:?}; the leading \
                 n^-1/3 correction coefficient of this side nearly cancels at \
                 t = (-1, -0.5), so the windowed sweep still sees the n^-2/3 \
                 term; the values themselves are cross-validated by the \
                 Stieltjes route)",
                rate.observed_exponent,
                thresholds::EDGE_EXPONENT,
                rate.contraction_factors
            ),
        );
        for (i, f) in rate.contraction_factors.iter().enumerate() {
            tally.check(
                &format!("{} contraction[{i}]", rate.label),
                (*f - 0.7937).abs() <= thresholds::EDGE_CONTRACTION,
                format!("factor {f:.4} outside 0.79 +- 0.15"),
            );
        }
    }

    // |sigma_hat - H2| decreasing with per-doubling factor in (0.6, 1.0).
    let asym = check_sigma_and_recurrence_asymptotics(&extract);
    for (i, f) in asym.sigma_factors.iter().enumerate() {
        tally.check(
            &format!("sigma_hat->H2 factor[{i}]"),
            (0.6..1.0).contains(f),
            format!("factor {f:.4} outside (0.6, 1.0)"),
        );
    }
    // Coupled-PII residual decreasing along the sweep at the same rate.
    let per_n = pii_residual_per_n(&grid).unwrap();
    for (i, pair) in per_n.windows(2).enumerate() {
        let f = pair[1].1 / pair[0].1;
        tally.check(
            &format!("pii residual factor[{i}]"),
            (0.6..1.0).contains(&f),
            format!("factor {f:.4} outside (0.6, 1.0)"),
        );
    }
    // alpha_n decays toward -(v1+v2)/(sqrt2 n^{1/6}) at ~n^-1/2.
    for (i, f) in asym.alpha_factors.iter().enumerate() {
        tally.check(
            &format!("alpha decay factor[{i}]"),
            (f - 1.0 / 2f64.sqrt()).abs() <= 0.15,
            format!("factor {f:.4} outside 0.707 +- 0.15"),
        );
    }
    let vsum = extract.v[0].to_f64() + extract.v[1].to_f64();
    let alpha_last = extract.base_sweep.last().unwrap().alpha_n.to_f64();
    tally.check(
        "alpha_n sign matches -(v1+v2)",
        alpha_last.signum() == (-vsum).signum(),
        format!("alpha_256 = {alpha_last:e}, v1+v2 = {vsum:e}"),
    );
    // beta_n remainder after removing n/2 - (v1+v2) n^{1/3}/2 stays O(1),
    // and |beta_n/n - 1/2| <= 2(|v1|+|v2|) n^-2/3.
    {
        let mut sorted: Vec<f64> = asym.beta_remainder.iter().map(|p| p.1).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let last = asym.beta_remainder.last().unwrap().1;
        tally.check(
            "beta remainder bounded",
            last <= 3.0 * median.max(1e-6),
            format!("last remainder {last:e} vs median {median:e}"),
        );
        let vbound = 2.0 * (extract.v[0].to_f64().abs() + extract.v[1].to_f64().abs());
        for p in &extract.base_sweep {
            let dev = (p.beta_n.to_f64() / p.n as f64 - 0.5).abs();
            let bound = vbound * (p.n as f64).powf(-2.0 / 3.0);
            tally.check(
                &format!("beta_n/n -> 1/2 at n={}", p.n),
                dev <= bound,
                format!("|beta/n - 1/2| = {dev:e} > {bound:e}"),
            );
        }
    }
    tally.finish();
}

#[test]
fn acceptance_6_pii_integrator() {
    let mut tally = Tally::new("6 coupled PII integrator");
    let c = ctx(192);
    let wp = c.working();

    // Flow identity and per-decade self-convergence on a generic state.
    let initial = PIIState::new(
        Float::with_val(wp, -1),
        Float::with_val(wp, 0.5),
        [Float::with_val(wp, 0.17), Float::with_val(wp, -0.08)],
        [Float::with_val(wp, -0.16), Float::with_val(wp, -0.55)],
    );
    let end = Float::with_val(wp, -0.2);
    let mut ends = Vec::new();
    for tol in [1e-10, 1e-11, 1e-12] {
        let traj = integrate_pii(&initial, &end, tol, &c, &[]).unwrap();
        tally.check(
            &format!("flow identity at tol {tol:e}"),
            traj.flow_defect <= 10.0 * tol,
            format!("defect {:e}", traj.flow_defect),
        );
        ends.push(traj.last().clone());
    }
    let dev = |a: &PIIState, b: &PIIState| -> f64 {
        let mut worst = 0f64;
        for i in 0..2 {
            worst = worst
                .max(Float::with_val(wp, &a.v[i] - &b.v[i]).abs().to_f64())
                .max(Float::with_val(wp, &a.w[i] - &b.w[i]).abs().to_f64());
        }
        worst
    };
    let d_ab = dev(&ends[0], &ends[1]);
    let d_bc = dev(&ends[1], &ends[2]);
    tally.check(
        "self-convergence < 10 tol",
        d_ab < 10.0 * 1e-10 && d_bc < 10.0 * 1e-11,
        format!("deviations {d_ab:e}, {d_bc:e}"),
    );
    tally.check(
        "self-convergence factor >= 8 per tol-decade",
        d_ab / d_bc >= 8.0,
        format!("factor {}", d_ab / d_bc),
    );

    // The v = 0 subspace is exactly invariant.
    let zero_init = PIIState::new(
        Float::with_val(wp, 0.1),
        Float::with_val(wp, 0.3),
        [Float::with_val(wp, 0), Float::with_val(wp, 0)],
        [Float::with_val(wp, 0.2), Float::with_val(wp, 0.7)],
    );
    let traj = integrate_pii(&zero_init, &Float::with_val(wp, 1.0), 1e-12, &c, &[]).unwrap();
    tally.check(
        "v = 0 invariant subspace",
        traj.states.iter().all(|s| s.v[0].is_zero() && s.v[1].is_zero()),
        "nonzero v appeared".into(),
    );

    // Match the flow against fresh extractions inside the fitted envelope.
    let template = EdgeTemplate::new(1.0, -0.5, 0.3);
    let extract = extract_edge_ungated(&template, -1.0, -0.5, &[32, 64, 128], 1e-3, None).unwrap();
    let report = match_finite_n(&extract, 0.3, 1e-12, &c).unwrap();
    tally.check(
        "match_finite_n within envelope",
        report.pass,
        format!(
            "max deviation {:e} vs envelope {:e}",
            report.max_deviation, report.envelope
        ),
    );
    // Zero-span recovery.
    let zero = match_finite_n(&extract, 0.0, 1e-12, &c).unwrap();
    tally.check(
        "zero-span integration recovers the extraction",
        zero.max_deviation < 1e-30,
        format!("deviation {:e}", zero.max_deviation),
    );
    tally.finish();
}

#[test]
fn acceptance_7_montecarlo_crosscheck() {
    let mut tally = Tally::new("7 Monte Carlo cross-check");
    let c = ctx(256);
    // n = 1 closed form by both routes.
    let exact = 0.479_500_122_186_953_5;
    let det1 = gap_probability_det(1, -0.5, 0.5, GapMode::NoneInInterval, &c)
        .unwrap()
        .to_f64();
    tally.check(
        "n=1 determinant route = 1 - erf(1/2)",
        (det1 - exact).abs() < 1e-12,
        format!("got {det1}"),
    );
    let cfg1 = MCConfig {
        n: 1,
        samples: 1_000_000,
        seed: 42,
        s1: -0.5,
        s2: 0.5,
    };
    let (none1, _) = gap_counts(&cfg1);
    let p1 = none1 as f64 / cfg1.samples as f64;
    let se1 = (p1 * (1.0 - p1) / cfg1.samples as f64).sqrt();
    tally.check(
        "n=1 Monte Carlo matches the closed form",
        (p1 - exact).abs() <= 4.0 * se1,
        format!("p_hat {p1} vs {exact} (stderr {se1:e})"),
    );

    for n in [2usize, 3, 4] {
        let cfg = MCConfig {
            n,
            samples: 1_000_000,
            seed: 42,
            s1: -0.5,
            s2: 0.5,
        };
        let (none, all) = gap_counts(&cfg);
        for (mode, hits) in [(GapMode::NoneInInterval, none), (GapMode::AllInInterval, all)] {
            let p_hat = hits as f64 / cfg.samples as f64;
            let stderr = (p_hat * (1.0 - p_hat) / cfg.samples as f64).sqrt();
            let det = gap_probability_det(n, cfg.s1, cfg.s2, mode, &c)
                .unwrap()
                .to_f64();
            // Rare cells (expected hits < 1) take the exact-probability
            // binomial scale.
            let stderr_eff = stderr.max((det * (1.0 - det) / cfg.samples as f64).sqrt());
            tally.check(
                &format!("n={n} {}", mode.as_str()),
                (p_hat - det).abs() <= 4.0 * stderr_eff,
                format!(
                    "p_hat {p_hat} vs det {det} ({:.2} sigmas)",
                    (p_hat - det).abs() / stderr_eff.max(1e-300)
                ),
            );
        }
    }
    tally.finish();
}

#[test]
fn acceptance_8_determinism() {
    let mut tally = Tally::new("8 determinism");
    let dir = std::env::temp_dir().join(format!("jgl_acceptance8_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let mc_cfg = RunConfig {
        command: Command::Montecarlo,
        a: 1.0,
        b1: -1.0,
        b2: 1.0,
        s1: -0.5,
        s2: 0.5,
        relaxed: false,
        n_max: None,
        precision_bits: None,
        fd_step: None,
        tolerance: None,
        t1: None,
        t2: None,
        n_list: None,
        delta: None,
        xi_span: None,
        n: Some(2),
        samples: Some(50_000),
        seed: Some(42),
        k: None,
        output_path: Some(dir.join("mc")),
    };
    let verify_cfg = RunConfig {
        command: Command::Verify,
        n_max: Some(6),
        b1: -0.5,
        b2: 0.3,
        s1: -0.7,
        s2: 0.9,
        n: None,
        samples: None,
        seed: None,
        output_path: Some(dir.join("verify")),
        ..mc_cfg.clone()
    };
    for (label, cfg, files) in [
        ("montecarlo", &mc_cfg, vec!["mc.json", "mc.csv"]),
        ("verify", &verify_cfg, vec!["verify.json"]),
    ] {
        let first = run(cfg).unwrap();
        let bytes_a: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(dir.join(f)).unwrap())
            .collect();
        let second = run(cfg).unwrap();
        let bytes_b: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(dir.join(f)).unwrap())
            .collect();
        tally.check(
            &format!("{label} outputs byte-identical"),
            bytes_a == bytes_b,
            "artifacts differ between identical runs".into(),
        );
        tally.check(
            &format!("{label} exit status stable"),
            first.exit_code == second.exit_code,
            format!("{} vs {}", first.exit_code, second.exit_code),
        );
    }
    std::fs::remove_dir_all(&dir).ok();
    tally.finish();
}
