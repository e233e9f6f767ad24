//! Adaptive high-precision integrator for the coupled Painleve II
//! Hamiltonian system
//!
//! ```text
//! v_i' = 2 v_i w_i,        w_i' = 2 (v1 + v2) + t_i - w_i^2,
//! t1 = xi, t2 = xi + eta (eta constant along the flow),
//! H2 = v1 w1^2 + v2 w2^2 - (v1 + v2)^2 - t1 v1 - t2 v2.
//! ```
//!
//! The flow carries the identity `dH2/dxi = -(v1 + v2)` (the Hamiltonian's
//! explicit xi-dependence), which the integrator tracks by augmenting the
//! state with the quadrature `z' = v1 + v2` and checking conservation of
//! `H2 + z` at every accepted step. Time stepping is an embedded
//! Dormand-Prince 5(4) pair with error-per-unit-step control.
//!
//! Initial conditions come only from finite-n extraction; the theory fixes
//! the relevant solution branch through data this module never invents.
//! Poles of the transcendents show up as collapsing steps and are reported,
//! not continued through.

use rug::Float;

use crate::numerics::{PrecisionContext, Real};
use crate::softedge::{extract_edge_ungated, hamiltonian_ii, EdgeExtract};
use crate::{Error, Result};

/// Phase-space point of the coupled Painleve II flow at `xi` (with `eta`
/// riding along as a constant).
#[derive(Debug, Clone)]
pub struct PIIState {
    pub xi: Real,
    pub eta: Real,
    pub v: [Real; 2],
    pub w: [Real; 2],
    /// `H2` recomputed from `(v, w, xi, eta)`.
    pub h2: Real,
}

impl PIIState {
    pub fn new(xi: Real, eta: Real, v: [Real; 2], w: [Real; 2]) -> Self {
        let h2 = hamiltonian(&xi, &eta, &v, &w);
        Self { xi, eta, v, w, h2 }
    }

    /// State assembled from soft-edge extraction data at `xi = t1`.
    pub fn from_extract(extract: &EdgeExtract) -> Self {
        let wp = extract.v[0].prec();
        let xi = Float::with_val(wp, extract.t1);
        let eta = Float::with_val(wp, extract.t2 - extract.t1);
        Self::new(xi, eta, extract.v.clone(), extract.w.clone())
    }
}

fn hamiltonian(xi: &Real, eta: &Real, v: &[Real; 2], w: &[Real; 2]) -> Real {
    let wp = xi.prec().max(v[0].prec());
    let t1 = Float::with_val(wp, xi);
    let t2 = Float::with_val(wp, xi + eta.clone());
    hamiltonian_ii(v, w, &t1, &t2)
}

/// Exact right-hand sides `(dv1, dv2, dw1, dw2)` at a state.
pub fn pii_rhs(state: &PIIState) -> [Real; 4] {
    let wp = state.xi.prec().max(state.v[0].prec());
    let t1 = Float::with_val(wp, &state.xi);
    let t2 = Float::with_val(wp, &state.xi + state.eta.clone());
    rhs_at(&t1, &t2, &state.v, &state.w, wp)
}

fn rhs_at(t1: &Real, t2: &Real, v: &[Real; 2], w: &[Real; 2], wp: u32) -> [Real; 4] {
    let vsum2 = Float::with_val(wp, 2 * Float::with_val(wp, &v[0] + &v[1]));
    [
        Float::with_val(wp, 2 * Float::with_val(wp, &v[0] * &w[0])),
        Float::with_val(wp, 2 * Float::with_val(wp, &v[1] * &w[1])),
        Float::with_val(wp, &vsum2 + t1) - Float::with_val(wp, &w[0] * &w[0]),
        Float::with_val(wp, &vsum2 + t2) - Float::with_val(wp, &w[1] * &w[1]),
    ]
}

// Dormand-Prince 5(4) tableau (exact rationals, lifted per call).
const DP_C: [(i64, i64); 7] = [
    (0, 1),
    (1, 5),
    (3, 10),
    (4, 5),
    (8, 9),
    (1, 1),
    (1, 1),
];
const DP_A: [&[(i64, i64)]; 6] = [
    &[(1, 5)],
    &[(3, 40), (9, 40)],
    &[(44, 45), (-56, 15), (32, 9)],
    &[(19372, 6561), (-25360, 2187), (64448, 6561), (-212, 729)],
    &[(9017, 3168), (-355, 33), (46732, 5247), (49, 176), (-5103, 18656)],
    &[(35, 384), (0, 1), (500, 1113), (125, 192), (-2187, 6784), (11, 84)],
];
const DP_B5: [(i64, i64); 7] = [
    (35, 384),
    (0, 1),
    (500, 1113),
    (125, 192),
    (-2187, 6784),
    (11, 84),
    (0, 1),
];
const DP_B4: [(i64, i64); 7] = [
    (5179, 57600),
    (0, 1),
    (7571, 16695),
    (393, 640),
    (-92097, 339200),
    (187, 2100),
    (1, 40),
];

fn rat(wp: u32, q: (i64, i64)) -> Real {
    Float::with_val(wp, q.0) / Float::with_val(wp, q.1)
}

// Internal 5-vector state: [v1, v2, w1, w2, z] with z' = v1 + v2.
type Vec5 = [Real; 5];

fn deriv(wp: u32, xi: &Real, eta: &Real, y: &Vec5) -> Vec5 {
    let t1 = Float::with_val(wp, xi);
    let t2 = Float::with_val(wp, xi + eta.clone());
    let v = [y[0].clone(), y[1].clone()];
    let w = [y[2].clone(), y[3].clone()];
    let r = rhs_at(&t1, &t2, &v, &w, wp);
    let z = Float::with_val(wp, &y[0] + &y[1]);
    [r[0].clone(), r[1].clone(), r[2].clone(), r[3].clone(), z]
}

/// Trajectory of accepted steps plus the worst violation of the flow
/// identity `dH2/dxi + (v1 + v2) = 0` observed along it. The identity is
/// monitored through the augmented quadrature component `z' = v1 + v2`
/// (integrated by the same embedded pair), as conservation of `H2 + z`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<PIIState>,
    pub flow_defect: f64,
}

impl Trajectory {
    pub fn last(&self) -> &PIIState {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Integrates the coupled PII flow from `initial` to `xi_end` with
/// error-per-unit-step control at tolerance `tol`; returns the trajectory at
/// every accepted step (including both endpoints), with `H2` recomputed at
/// each state. Sample points in `samples` (must lie inside the span, sorted
/// in the direction of integration) are landed on exactly.
pub fn integrate_pii(
    initial: &PIIState,
    xi_end: &Real,
    tol: f64,
    ctx: &PrecisionContext,
    samples: &[Real],
) -> Result<Trajectory> {
    assert!(tol > 0.0, "tolerance must be positive");
    let wp = ctx.working();
    let eta = Float::with_val(wp, &initial.eta);
    let mut xi = Float::with_val(wp, &initial.xi);
    let end = Float::with_val(wp, xi_end);
    let span = Float::with_val(wp, &end - &xi);
    let direction: f64 = if span >= 0 { 1.0 } else { -1.0 };
    let span_abs = span.clone().abs().to_f64().max(1e-30);

    let mut y: Vec5 = [
        Float::with_val(wp, &initial.v[0]),
        Float::with_val(wp, &initial.v[1]),
        Float::with_val(wp, &initial.w[0]),
        Float::with_val(wp, &initial.w[1]),
        Float::with_val(wp, 0),
    ];
    let mut out = vec![PIIState::new(
        xi.clone(),
        eta.clone(),
        [y[0].clone(), y[1].clone()],
        [y[2].clone(), y[3].clone()],
    )];

    let mut sample_iter = samples.iter().peekable();
    let mut h = Float::with_val(wp, direction * (span_abs / 64.0).min(0.05));
    let h_floor = span_abs * 2f64.powi(-((ctx.bits() / 2) as i32));
    let mut steps: u64 = 0;
    let mut flow_defect = 0f64;
    loop {
        let remaining = Float::with_val(wp, &end - &xi);
        if remaining.clone().abs().to_f64() <= span_abs * 1e-25 {
            break;
        }
        // Clip to the next landing target (sample point or the endpoint).
        let mut target = end.clone();
        if let Some(s) = sample_iter.peek() {
            let to_sample = Float::with_val(wp, *s - &xi);
            if to_sample.clone().abs().to_f64() <= span_abs * 1e-25 {
                sample_iter.next();
            } else {
                target = Float::with_val(wp, *s);
            }
        }
        let to_target = Float::with_val(wp, &target - &xi);
        if h.clone().abs() > to_target.clone().abs() {
            h = to_target.clone();
        }

        // One embedded step.
        let mut k: Vec<Vec5> = Vec::with_capacity(7);
        k.push(deriv(wp, &xi, &eta, &y));
        for stage in 1..7 {
            let mut ys = y.clone();
            for (j, a) in DP_A[stage - 1].iter().enumerate() {
                if a.0 == 0 {
                    continue;
                }
                let coeff = rat(wp, *a);
                for c in 0..5 {
                    ys[c] += Float::with_val(wp, &coeff * &k[j][c]) * &h;
                }
            }
            let xs = Float::with_val(wp, &xi + Float::with_val(wp, rat(wp, DP_C[stage]) * &h));
            k.push(deriv(wp, &xs, &eta, &ys));
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (j, (b5, b4)) in DP_B5.iter().zip(DP_B4.iter()).enumerate() {
            if b5.0 != 0 {
                let c5 = rat(wp, *b5);
                for c in 0..5 {
                    y5[c] += Float::with_val(wp, &c5 * &k[j][c]) * &h;
                }
            }
            if b4.0 != 0 {
                let c4 = rat(wp, *b4);
                for c in 0..5 {
                    y4[c] += Float::with_val(wp, &c4 * &k[j][c]) * &h;
                }
            }
        }
        let mut err = 0f64;
        for c in 0..5 {
            let e = Float::with_val(wp, &y5[c] - &y4[c]).abs().to_f64();
            let scale = 1.0 + y5[c].to_f64().abs();
            err = err.max(e / scale);
        }
        let h_abs = h.clone().abs().to_f64();
        let budget = tol * (h_abs / span_abs);
        if err <= budget {
            xi = Float::with_val(wp, &xi + &h);
            y = y5;
            let state = PIIState::new(
                xi.clone(),
                eta.clone(),
                [y[0].clone(), y[1].clone()],
                [y[2].clone(), y[3].clone()],
            );
            let defect = Float::with_val(wp, &state.h2 - &out[0].h2) + &y[4];
            flow_defect = flow_defect.max(defect.abs().to_f64());
            out.push(state);
            // Divergence guard: a transcendent pole sends the state to
            // infinity in finite xi; relative error control would otherwise
            // grind toward it in ever-smaller steps.
            let cap = Float::with_val(wp, Float::i_exp(1, ctx.bits().min(4096) as i32));
            if y[..4].iter().any(|c| c.clone().abs() > cap) {
                return Err(Error::StepCollapse {
                    xi: xi.to_f64(),
                    reason: format!("state magnitude exceeded 2^{} (pole)", ctx.bits().min(4096)),
                });
            }
        }
        // Order-5 step update, symmetric for accepts and rejects.
        let ratio = if err == 0.0 {
            5.0
        } else {
            0.9 * (budget / err).powf(0.25)
        };
        let factor = ratio.clamp(0.2, 5.0);
        h = Float::with_val(wp, factor * h);
        if h.clone().abs().to_f64() < h_floor {
            return Err(Error::StepCollapse {
                xi: xi.to_f64(),
                reason: format!(
                    "step fell below {h_floor:e} (pole of the transcendent or tolerance too tight)"
                ),
            });
        }
        steps += 1;
        if steps > 200_000 {
            return Err(Error::StepCollapse {
                xi: xi.to_f64(),
                reason: "step budget exhausted".into(),
            });
        }
    }
    Ok(Trajectory {
        states: out,
        flow_defect,
    })
}

/// Outcome of the trajectory-vs-fresh-extraction comparison.
#[derive(Debug, Clone)]
pub struct MatchReport {
    /// `(xi, |v1 dev|, |v2 dev|, |H2 dev|)` at each comparison point.
    pub deviations: Vec<(f64, f64, f64, f64)>,
    pub max_deviation: f64,
    /// Fitted `O(n^{-1/3})` envelope at the sweep ceiling.
    pub envelope: f64,
    pub pass: bool,
}

/// Slack multiplier applied to the fitted `|c1| n^{-1/3}` correction scale
/// when forming the match envelope.
pub const MATCH_ENVELOPE_KAPPA: f64 = 3.0;

/// Integrates from the extracted state over `[xi0 - span, xi0 + span]` and
/// compares `(v1, v2, H2)` with fresh extractions at `xi0 +- span/2` and
/// `xi0 +- span`; the maximum absolute deviation must stay inside the
/// extraction's fitted `O(n^{-1/3})` envelope.
pub fn match_finite_n(
    extract: &EdgeExtract,
    xi_span: f64,
    tol: f64,
    ctx: &PrecisionContext,
) -> Result<MatchReport> {
    assert!(xi_span >= 0.0);
    let initial = PIIState::from_extract(extract);
    let wp = ctx.working();
    let eta = extract.eta();
    let n_top = *extract.n_list.last().unwrap();
    let envelope = extract.envelope(n_top, MATCH_ENVELOPE_KAPPA);

    let mut deviations = Vec::new();
    if xi_span == 0.0 {
        // Zero-length integration recovers the initial extraction exactly.
        let traj = integrate_pii(&initial, &initial.xi.clone(), tol, ctx, &[])?;
        let last = traj.last();
        let dev_h = Float::with_val(wp, &last.h2 - &extract.h2).abs().to_f64();
        deviations.push((extract.t1, 0.0, 0.0, dev_h));
        return Ok(MatchReport {
            max_deviation: dev_h,
            deviations,
            envelope,
            pass: dev_h <= envelope,
        });
    }

    for direction in [1.0f64, -1.0] {
        let offsets = [0.5 * xi_span * direction, xi_span * direction];
        let samples: Vec<Real> = offsets
            .iter()
            .map(|o| Float::with_val(wp, extract.t1 + o))
            .collect();
        let end = samples.last().unwrap().clone();
        let traj = integrate_pii(&initial, &end, tol, ctx, &samples)?;
        for (o, target) in offsets.iter().zip(&samples) {
            let state = traj
                .states
                .iter()
                .min_by(|a, b| {
                    let da = Float::with_val(wp, &a.xi - target).abs();
                    let db = Float::with_val(wp, &b.xi - target).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            let t1 = extract.t1 + o;
            let fresh = extract_edge_ungated(
                &extract.template,
                t1,
                t1 + eta,
                &extract.n_list,
                extract.delta,
                None,
            )?;
            let dv1 = Float::with_val(wp, &state.v[0] - &fresh.v[0]).abs().to_f64();
            let dv2 = Float::with_val(wp, &state.v[1] - &fresh.v[1]).abs().to_f64();
            let dh = Float::with_val(wp, &state.h2 - &fresh.h2).abs().to_f64();
            deviations.push((t1, dv1, dv2, dh));
        }
    }
    let max_deviation = deviations
        .iter()
        .map(|d| d.1.max(d.2).max(d.3))
        .fold(0.0, f64::max);
    Ok(MatchReport {
        deviations,
        max_deviation,
        envelope,
        pass: max_deviation <= envelope,
    })
}
