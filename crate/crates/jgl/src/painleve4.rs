//! Change of variables to the coupled Painleve IV system at finite `n`.
//!
//! With `x = (s1+s2)/2`, `s = (s2-s1)/2` and
//!
//! ```text
//! a_i = r_{n,i}^2 / (R_{n,i} (r_{n,1} + r_{n,2} + n)),
//! b_i = R_{n,i} (r_{n,1} + r_{n,2} + n) / r_{n,i},
//! ```
//!
//! the quantity `H_IV = sigma_n + n (s1 + s2)` is the Hamiltonian of a
//! coupled Painleve IV system in `(a_1, a_2, b_1, b_2)` with `d/dx`
//! realized as the diagonal direction `(1, 1)` in `(s1, s2)` at fixed `s`.
//! This module verifies the Hamilton equations and the recurrence-coefficient
//! maps pointwise; no attempt is made to integrate the PIV flow, since the
//! theory provides no initial data for it.

use rug::Float;

use crate::identities::{PipelineCache, ResidualReport};
use crate::numerics::{PrecisionContext, Real};
use crate::ortho::{AuxQuantities, OrthoSystem};
use crate::weight::WeightParams;
use crate::{Error, Result};

/// The coupled Painleve IV phase-space point at degree `n`, together with the
/// Hamiltonian value computed from the `(a, b)` closed form.
#[derive(Debug, Clone)]
pub struct PIVState {
    pub n: usize,
    /// `x = (s1 + s2)/2`
    pub x: Real,
    /// `s = (s2 - s1)/2 > 0`
    pub s: Real,
    pub a: [Real; 2],
    pub b: [Real; 2],
    /// `H_IV` from the `(a, b)` closed form.
    pub h: Real,
}

impl PIVState {
    pub fn a(&self, i: usize) -> &Real {
        &self.a[i - 1]
    }

    pub fn b(&self, i: usize) -> &Real {
        &self.b[i - 1]
    }

    /// Reassembles `(R_{n,i}, r_{n,i})` from `(a_i, b_i)`:
    /// `R = a b^2 / (a1 b1 + a2 b2 + n)`, `r = a b`.
    pub fn residues(&self) -> ([Real; 2], [Real; 2]) {
        let wp = self.x.prec();
        let denom = Float::with_val(wp, &self.a[0] * &self.b[0])
            + Float::with_val(wp, &self.a[1] * &self.b[1])
            + Float::with_val(wp, self.n as f64);
        let mut caps = [Float::with_val(wp, 0), Float::with_val(wp, 0)];
        let mut lows = [Float::with_val(wp, 0), Float::with_val(wp, 0)];
        for i in 0..2 {
            let ab = Float::with_val(wp, &self.a[i] * &self.b[i]);
            caps[i] = Float::with_val(wp, &ab * &self.b[i]) / &denom;
            lows[i] = ab;
        }
        (caps, lows)
    }
}

/// Hamiltonian closed form
/// `H_IV = -2 (a1 b1 + a2 b2 + n)(a1 + a2) - (a1 b1^2 + a2 b2^2)
///         + 2 ((x-s) a1 b1 + (x+s) a2 b2 + n x)`.
pub fn hamiltonian_iv(a: &[Real; 2], b: &[Real; 2], n: usize, x: &Real, s: &Real) -> Real {
    let wp = x.prec();
    let ab1 = Float::with_val(wp, &a[0] * &b[0]);
    let ab2 = Float::with_val(wp, &a[1] * &b[1]);
    let denom = Float::with_val(wp, &ab1 + &ab2) + Float::with_val(wp, n as f64);
    let term1 = Float::with_val(wp, -2 * denom) * Float::with_val(wp, &a[0] + &a[1]);
    let term2 = Float::with_val(wp, &ab1 * &b[0]) + Float::with_val(wp, &ab2 * &b[1]);
    let s1 = Float::with_val(wp, x - s);
    let s2 = Float::with_val(wp, x + s.clone());
    let term3 = Float::with_val(wp, 2u32)
        * (Float::with_val(wp, &s1 * &ab1)
            + Float::with_val(wp, &s2 * &ab2)
            + Float::with_val(wp, n as f64) * x);
    term1 - term2 + term3
}

/// Builds the PIV state from the degree-`n` auxiliary quantities. Fails with
/// `DegenerateResidue` when a residue vanishes (`a_i`, `b_i` undefined).
pub fn to_piv_state(aux: &AuxQuantities, sys: &OrthoSystem, n: usize) -> Result<PIVState> {
    let wp = sys.prec();
    if let Some(side) = aux.degenerate_side(wp) {
        return Err(Error::DegenerateResidue {
            n,
            index: side,
            reason: "PIV variables divide by a vanishing residue".into(),
        });
    }
    for i in [1usize, 2usize] {
        if aux.r_low(i).is_zero() {
            return Err(Error::DegenerateResidue {
                n,
                index: i,
                reason: "PIV variables divide by a vanishing r_{n,i}".into(),
            });
        }
    }
    let params = sys.params();
    let x = Float::with_val(wp, params.s(1) + params.s(2)) / 2u32;
    let s = Float::with_val(wp, params.s(2) - params.s(1)) / 2u32;
    let denom = Float::with_val(wp, aux.r_low(1) + aux.r_low(2).clone())
        + Float::with_val(wp, n as f64);
    let mut a = [Float::with_val(wp, 0), Float::with_val(wp, 0)];
    let mut b = [Float::with_val(wp, 0), Float::with_val(wp, 0)];
    for i in 0..2 {
        let low = &aux.small_r[i];
        let cap = &aux.big_r[i];
        a[i] = Float::with_val(wp, low * low) / Float::with_val(wp, cap * &denom);
        b[i] = Float::with_val(wp, cap * &denom) / low;
    }
    let h = hamiltonian_iv(&a, &b, n, &x, &s);
    Ok(PIVState { n, x, s, a, b, h })
}

/// Right-hand sides of the four Hamilton equations:
/// `dx a1 = -2 a1 (a1 + a2 + b1 - x + s)`,
/// `dx a2 = -2 a2 (a1 + a2 + b2 - x - s)`,
/// `dx b1 = b1^2 + 2 b1 (2 a1 + a2 - x + s) + 2 (a2 b2 + n)`,
/// `dx b2 = b2^2 + 2 b2 (a1 + 2 a2 - x - s) + 2 (a1 b1 + n)`.
pub fn piv_rhs(state: &PIVState) -> [Real; 4] {
    let wp = state.x.prec();
    let [a1, a2] = &state.a;
    let [b1, b2] = &state.b;
    let x = &state.x;
    let s = &state.s;
    let n = Float::with_val(wp, state.n as f64);
    let a_sum = Float::with_val(wp, a1 + a2.clone());

    let da1 = Float::with_val(wp, -2 * a1.clone())
        * (Float::with_val(wp, &a_sum + b1) - Float::with_val(wp, x - s));
    let da2 = Float::with_val(wp, -2 * a2.clone())
        * (Float::with_val(wp, &a_sum + b2) - Float::with_val(wp, x + s.clone()));
    let db1 = Float::with_val(wp, b1 * b1)
        + Float::with_val(wp, 2 * b1.clone())
            * (Float::with_val(wp, 2 * a1.clone()) + a2 - Float::with_val(wp, x - s))
        + 2u32 * (Float::with_val(wp, a2 * b2) + &n);
    let db2 = Float::with_val(wp, b2 * b2)
        + Float::with_val(wp, 2 * b2.clone())
            * (Float::with_val(wp, 2 * a2.clone()) + a1 - Float::with_val(wp, x + s.clone()))
        + 2u32 * (Float::with_val(wp, a1 * b1) + &n);
    [da1, da2, db1, db2]
}

/// Verifies the four Hamilton equations with the left-hand sides computed by
/// directional finite differences along `(1, 1)` (that is `d/dx` at fixed
/// `s`) on the rebuilt pipeline.
pub fn check_hamilton_equations(
    params: &WeightParams,
    n: usize,
    step: Option<f64>,
    ctx: &PrecisionContext,
) -> Result<Vec<ResidualReport>> {
    let cache = PipelineCache::new(params, n, ctx);
    let h = match step {
        Some(v) => Float::with_val(ctx.working(), v),
        None => ctx.default_step((params.s1(), params.s2())),
    };
    let h_f64 = h.to_f64();
    let base = cache.base()?;
    let state = to_piv_state(&base.aux_quantities(n), &base, n)?;
    let rhs = piv_rhs(&state);

    let labels = ["piv/da1", "piv/da2", "piv/db1", "piv/db2"];
    let mut out = Vec::new();
    for (k, label) in labels.iter().enumerate() {
        let est = cache.diff(
            |sys| {
                let st = to_piv_state(&sys.aux_quantities(n), sys, n)?;
                Ok(match k {
                    0 => st.a[0].clone(),
                    1 => st.a[1].clone(),
                    2 => st.b[0].clone(),
                    _ => st.b[1].clone(),
                })
            },
            (1, 1),
            &h,
            1,
        )?;
        out.push(ResidualReport::two_sided(
            *label,
            n,
            params,
            est.value,
            rhs[k].clone(),
            Some(h_f64),
        ));
    }
    Ok(out)
}

/// Verifies the recurrence-coefficient maps
/// `alpha_n = (a1 b1^2 + a2 b2^2) / (2 (a1 b1 + a2 b2 + n))`,
/// `beta_n = (a1 b1 + a2 b2 + n)/2`,
/// `alpha_{n-1} = a1 + a2 = -(1/2) dx ln h_{n-1}`.
pub fn check_recurrence_maps(
    params: &WeightParams,
    n: usize,
    step: Option<f64>,
    ctx: &PrecisionContext,
) -> Result<Vec<ResidualReport>> {
    assert!(n >= 1, "the alpha_{{n-1}} map needs n >= 1");
    let cache = PipelineCache::new(params, n, ctx);
    let h = match step {
        Some(v) => Float::with_val(ctx.working(), v),
        None => ctx.default_step((params.s1(), params.s2())),
    };
    let h_f64 = h.to_f64();
    let base = cache.base()?;
    let wp = base.prec();
    let state = to_piv_state(&base.aux_quantities(n), &base, n)?;
    let [a1, a2] = &state.a;
    let [b1, b2] = &state.b;
    let ab1 = Float::with_val(wp, a1 * b1);
    let ab2 = Float::with_val(wp, a2 * b2);
    let denom = Float::with_val(wp, &ab1 + &ab2) + Float::with_val(wp, n as f64);

    let mut out = Vec::new();
    // alpha_n map
    let rhs = (Float::with_val(wp, &ab1 * b1) + Float::with_val(wp, &ab2 * b2))
        / Float::with_val(wp, 2 * denom.clone());
    out.push(ResidualReport::two_sided(
        "piv/alpha_map",
        n,
        params,
        base.alpha(n).clone(),
        rhs,
        None,
    ));
    // beta_n map
    let rhs = Float::with_val(wp, &denom / 2u32);
    out.push(ResidualReport::two_sided(
        "piv/beta_map",
        n,
        params,
        base.beta(n).clone(),
        rhs,
        None,
    ));
    // alpha_{n-1} = a1 + a2
    let a_sum = Float::with_val(wp, a1 + a2.clone());
    out.push(ResidualReport::two_sided(
        "piv/alpha_prev_map",
        n,
        params,
        base.alpha(n - 1).clone(),
        a_sum.clone(),
        None,
    ));
    // a1 + a2 = -(1/2) dx ln h_{n-1}
    let est = cache.diff(|sys| Ok(sys.h(n - 1).clone().ln()), (1, 1), &h, 1)?;
    let lhs = Float::with_val(wp, -&est.value) / 2u32;
    out.push(ResidualReport::two_sided(
        "piv/alpha_prev_log_derivative",
        n,
        params,
        lhs,
        a_sum,
        Some(h_f64),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_residual;
    use crate::ortho::{build_ortho_system, SigmaRoute};

    fn ctx(bits: u32) -> PrecisionContext {
        PrecisionContext::with_bits(bits).unwrap()
    }

    fn strict_params() -> WeightParams {
        WeightParams::strict(1.0, -0.5, 0.3, -0.7, 0.9).unwrap()
    }

    #[test]
    fn round_trip_residues() {
        let c = ctx(512);
        let sys = build_ortho_system(&strict_params(), 8, &c).unwrap();
        let aux = sys.aux_quantities(6);
        let state = to_piv_state(&aux, &sys, 6).unwrap();
        let (caps, lows) = state.residues();
        for i in 0..2 {
            assert!(
                rel_residual(&caps[i], &aux.big_r[i]) < 1e-28,
                "R round trip side {i}"
            );
            assert!(
                rel_residual(&lows[i], &aux.small_r[i]) < 1e-28,
                "r round trip side {i}"
            );
        }
    }

    #[test]
    fn hamiltonian_matches_sigma_route() {
        // H_IV(a, b) = sigma_n + n (s1 + s2), both sides independent.
        let c = ctx(512);
        let p = strict_params();
        let sys = build_ortho_system(&p, 8, &c).unwrap();
        let wp = sys.prec();
        let n = 6usize;
        let state = to_piv_state(&sys.aux_quantities(n), &sys, n).unwrap();
        let sigma = sys.sigma_n(n, SigmaRoute::TwoP).unwrap();
        let rhs = sigma
            + Float::with_val(wp, n as f64) * Float::with_val(wp, p.s(1) + p.s(2).clone());
        assert!(
            rel_residual(&state.h, &rhs) < 1e-25,
            "H_IV vs sigma residual {:e}",
            rel_residual(&state.h, &rhs).to_f64()
        );
    }

    #[test]
    fn a_is_half_previous_residue() {
        // a_i = R_{n-1,i} / 2.
        let c = ctx(512);
        let sys = build_ortho_system(&strict_params(), 8, &c).unwrap();
        let n = 6usize;
        let state = to_piv_state(&sys.aux_quantities(n), &sys, n).unwrap();
        let prev = sys.aux_quantities(n - 1);
        for i in [1usize, 2usize] {
            let half = Float::with_val(sys.prec(), prev.r_cap(i) / 2u32);
            let resid = rel_residual(state.a(i), &half);
            assert!(resid < 1e-25, "a_{i} vs R_{{n-1,{i}}}/2 residual {resid:e}");
        }
    }

    #[test]
    fn hamilton_equations_strict() {
        let reports =
            check_hamilton_equations(&strict_params(), 6, Some(1e-10), &ctx(512)).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert!(
                r.rel_f64() < 1e-15,
                "{} residual {:e}",
                r.label,
                r.rel_f64()
            );
        }
    }

    #[test]
    fn gradient_consistency() {
        // Finite difference of H_IV in b1 reproduces the dx a1 right-hand
        // side; in a1 it reproduces the negated dx b1 right-hand side
        // (canonical pairing with a sign the displayed system absorbs).
        let c = ctx(512);
        let sys = build_ortho_system(&strict_params(), 8, &c).unwrap();
        let wp = sys.prec();
        let n = 6usize;
        let state = to_piv_state(&sys.aux_quantities(n), &sys, n).unwrap();
        let rhs = piv_rhs(&state);
        let h = Float::with_val(wp, 1e-12);

        let perturb_b1 = |delta: &Real| {
            let mut b = state.b.clone();
            b[0] = Float::with_val(wp, &b[0] + delta);
            hamiltonian_iv(&state.a, &b, n, &state.x, &state.s)
        };
        let dhb1 = (perturb_b1(&h) - perturb_b1(&(-h.clone())))
            / Float::with_val(wp, 2 * h.clone());
        assert!(
            rel_residual(&dhb1, &rhs[0]) < 1e-20,
            "dH/db1 vs dx a1 rhs: {:e}",
            rel_residual(&dhb1, &rhs[0]).to_f64()
        );

        let perturb_a1 = |delta: &Real| {
            let mut a = state.a.clone();
            a[0] = Float::with_val(wp, &a[0] + delta);
            hamiltonian_iv(&a, &state.b, n, &state.x, &state.s)
        };
        let dha1 = (perturb_a1(&h) - perturb_a1(&(-h.clone())))
            / Float::with_val(wp, 2 * h.clone());
        let neg = -rhs[2].clone();
        assert!(
            rel_residual(&dha1, &neg) < 1e-20,
            "dH/da1 vs -dx b1 rhs: {:e}",
            rel_residual(&dha1, &neg).to_f64()
        );
    }

    #[test]
    fn gaussian_limit_is_degenerate() {
        let p = WeightParams::relaxed(1.0, 0.0, 0.0, -1.0, 1.0).unwrap();
        let sys = build_ortho_system(&p, 6, &ctx(256)).unwrap();
        let err = to_piv_state(&sys.aux_quantities(4), &sys, 4);
        assert!(matches!(err, Err(Error::DegenerateResidue { .. })));
    }

    #[test]
    fn recurrence_maps_strict() {
        let reports = check_recurrence_maps(&strict_params(), 6, Some(1e-10), &ctx(512)).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            let tol = if r.fd_step.is_some() { 1e-18 } else { 1e-25 };
            assert!(
                r.rel_f64() < tol,
                "{} residual {:e}",
                r.label,
                r.rel_f64()
            );
        }
    }

    #[test]
    fn beta_map_is_substitution_identity() {
        // beta_n = (a1 b1 + a2 b2 + n)/2 must coincide with the
        // difference-system form (r1 + r2 + n)/2 because a_i b_i = r_i as
        // algebra; numerically they agree to rounding.
        let c = ctx(384);
        let sys = build_ortho_system(&strict_params(), 8, &c).unwrap();
        let wp = sys.prec();
        let n = 5usize;
        let aux = sys.aux_quantities(n);
        let state = to_piv_state(&aux, &sys, n).unwrap();
        let via_ab = (Float::with_val(wp, state.a(1) * state.b(1))
            + Float::with_val(wp, state.a(2) * state.b(2))
            + Float::with_val(wp, n as f64))
            / 2u32;
        let via_r = (Float::with_val(wp, aux.r_low(1) + aux.r_low(2).clone())
            + Float::with_val(wp, n as f64))
            / 2u32;
        let resid = rel_residual(&via_ab, &via_r);
        let floor = Float::with_val(64, Float::i_exp(1, -(wp as i32 - 8)));
        assert!(resid < floor, "substitution residual {:e}", resid.to_f64());
    }
}
