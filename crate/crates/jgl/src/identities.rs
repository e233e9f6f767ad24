//! Finite-n verification harness: every identity of the ladder-operator
//! theory is evaluated with both sides assembled from independent primitives,
//! returning residual reports.
//!
//! Two rules keep the checks honest. First, the two sides of an identity
//! never share an intermediate code path beyond the moment table: recurrence
//! data comes from the factorization, residues from polynomial boundary
//! values. Second, derivatives with respect to the jump locations are
//! realized by rebuilding the entire pipeline at perturbed `(s1, s2)` and
//! differencing the rebuilt scalars; nothing is differentiated in closed
//! form, because the identities under test are precisely about those
//! closed forms.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ops::RangeInclusive;
use std::rc::Rc;

use rug::Float;

use crate::numerics::{directional_diff, DiffEstimate, PrecisionContext, Real};
use crate::ortho::{build_ortho_system, ladder_eval, OrthoSystem, SigmaRoute};
use crate::weight::WeightParams;
use crate::{Error, Result};

/// One verified identity instance: both sides, their absolute and relative
/// residuals, and the finite-difference step if one was involved.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub label: String,
    pub n: usize,
    pub params: WeightParams,
    pub lhs: Real,
    pub rhs: Real,
    pub abs_residual: Real,
    pub rel_residual: Real,
    pub fd_step: Option<f64>,
}

impl ResidualReport {
    /// Two-sided report: `rel = |lhs - rhs| / max(1, |lhs|, |rhs|)`.
    pub fn two_sided(
        label: impl Into<String>,
        n: usize,
        params: &WeightParams,
        lhs: Real,
        rhs: Real,
        fd_step: Option<f64>,
    ) -> Self {
        let prec = lhs.prec().max(rhs.prec());
        let abs = Float::with_val(prec, &lhs - &rhs).abs();
        let rel = crate::numerics::rel_residual(&lhs, &rhs);
        Self {
            label: label.into(),
            n,
            params: params.clone(),
            lhs,
            rhs,
            abs_residual: abs,
            rel_residual: rel,
            fd_step,
        }
    }

    /// Expression-vs-zero report normalized by the largest intermediate
    /// magnitude that entered the expression.
    pub fn normalized(
        label: impl Into<String>,
        n: usize,
        params: &WeightParams,
        value: Real,
        scale_terms: &[&Real],
        fd_step: Option<f64>,
    ) -> Self {
        let prec = value.prec();
        let mut denom = Float::with_val(prec, 1);
        for t in scale_terms {
            let a = (*t).clone().abs();
            if a > denom {
                denom = Float::with_val(prec, a);
            }
        }
        let abs = value.clone().abs();
        let rel = Float::with_val(prec, &abs / &denom);
        Self {
            label: label.into(),
            n,
            params: params.clone(),
            lhs: value,
            rhs: Float::with_val(prec, 0),
            abs_residual: abs,
            rel_residual: rel,
            fd_step,
        }
    }

    pub fn rel_f64(&self) -> f64 {
        self.rel_residual.to_f64()
    }
}

/// Memoized rebuilds of the orthogonal-polynomial pipeline at perturbed jump
/// locations; every finite difference in this module goes through here so
/// each endpoint is factorized exactly once.
pub struct PipelineCache {
    params: WeightParams,
    n_top: usize,
    ctx: PrecisionContext,
    map: RefCell<HashMap<(String, String), Rc<OrthoSystem>>>,
}

impl PipelineCache {
    pub fn new(params: &WeightParams, n_top: usize, ctx: &PrecisionContext) -> Self {
        Self {
            params: params.clone(),
            n_top,
            ctx: *ctx,
            map: RefCell::new(HashMap::new()),
        }
    }

    /// System at the given (exact) endpoints.
    pub fn at(&self, s1: &Real, s2: &Real) -> Result<Rc<OrthoSystem>> {
        let key = (
            s1.to_string_radix(16, None),
            s2.to_string_radix(16, None),
        );
        if let Some(sys) = self.map.borrow().get(&key) {
            return Ok(sys.clone());
        }
        let perturbed = self.params.with_endpoints(s1.clone(), s2.clone())?;
        let sys = Rc::new(build_ortho_system(&perturbed, self.n_top, &self.ctx)?);
        self.map.borrow_mut().insert(key, sys.clone());
        Ok(sys)
    }

    /// Base (unperturbed) system.
    pub fn base(&self) -> Result<Rc<OrthoSystem>> {
        self.at(&self.params.s1().clone(), &self.params.s2().clone())
    }

    /// Richardson directional derivative of an extracted scalar.
    pub fn diff<F>(&self, extract: F, dir: (i32, i32), step: &Real, order: u8) -> Result<DiffEstimate>
    where
        F: Fn(&OrthoSystem) -> Result<Real>,
    {
        let wp = self.ctx.working();
        let d = (
            Float::with_val(wp, dir.0),
            Float::with_val(wp, dir.1),
        );
        let f = |s1: &Real, s2: &Real| -> Result<Real> {
            let sys = self.at(s1, s2)?;
            extract(&sys)
        };
        directional_diff(
            f,
            (self.params.s1(), self.params.s2()),
            (&d.0, &d.1),
            step,
            order,
            &self.ctx,
        )
    }

    fn step(&self, step: Option<f64>) -> Real {
        match step {
            Some(h) => Float::with_val(self.ctx.working(), h),
            None => self
                .ctx
                .default_step((self.params.s1(), self.params.s2())),
        }
    }
}

/// Difference-system residuals (both sides independent) for each `n` in the
/// range, plus the three-route sigma agreement. Requires
/// `n_range.end() + 1 <= sys.n_max() + 1`.
pub fn check_difference_system(
    sys: &OrthoSystem,
    n_range: RangeInclusive<usize>,
) -> Result<Vec<ResidualReport>> {
    let wp = sys.prec();
    let params = sys.params();
    let mut out = Vec::new();
    for n in n_range {
        let aux_prev = if n >= 1 {
            Some(sys.aux_quantities(n - 1))
        } else {
            None
        };
        let aux = sys.aux_quantities(n);
        let aux_next = sys.aux_quantities(n + 1);

        for i in [1usize, 2usize] {
            // beta_n R_{n,i} R_{n-1,i} = r_{n,i}^2 (lhs := 0 at n = 0 since beta_0 = 0)
            let lhs = match &aux_prev {
                Some(prev) => Float::with_val(
                    wp,
                    sys.beta(n) * Float::with_val(wp, aux.r_cap(i) * prev.r_cap(i)),
                ),
                None => Float::with_val(wp, 0),
            };
            let rhs = Float::with_val(wp, aux.r_low(i) * aux.r_low(i));
            out.push(ResidualReport::two_sided(
                format!("difference/beta_R_product[i={i}]"),
                n,
                params,
                lhs,
                rhs,
                None,
            ));

            // r_{n+1,i} + r_{n,i} = (s_i - alpha_n) R_{n,i}
            let lhs = Float::with_val(wp, aux_next.r_low(i) + aux.r_low(i).clone());
            let rhs = Float::with_val(wp, params.s(i) - sys.alpha(n)) * aux.r_cap(i);
            out.push(ResidualReport::two_sided(
                format!("difference/r_step[i={i}]"),
                n,
                params,
                lhs,
                rhs,
                None,
            ));
        }

        // alpha_n = (R_{n,1} + R_{n,2}) / 2
        let rhs = Float::with_val(wp, aux.r_cap(1) + aux.r_cap(2).clone()) / 2u32;
        out.push(ResidualReport::two_sided(
            "difference/alpha_from_R",
            n,
            params,
            sys.alpha(n).clone(),
            rhs,
            None,
        ));

        // beta_n = (r_{n,1} + r_{n,2} + n) / 2
        let rhs = (Float::with_val(wp, aux.r_low(1) + aux.r_low(2).clone())
            + Float::with_val(wp, n as f64))
            / 2u32;
        out.push(ResidualReport::two_sided(
            "difference/beta_from_r",
            n,
            params,
            sys.beta(n).clone(),
            rhs,
            None,
        ));

        // sum_{j<n} (R_{j,1}+R_{j,2})
        //   = -2 s1 r_{n,1} - 2 s2 r_{n,2} + 2 beta_n (R_n + R_{n-1} sums)
        let lhs = -sys.sigma_n(n, SigmaRoute::SumR)?;
        let mut rhs = Float::with_val(wp, -2) * Float::with_val(wp, params.s(1) * aux.r_low(1));
        rhs += Float::with_val(wp, -2) * Float::with_val(wp, params.s(2) * aux.r_low(2));
        let mut caps = Float::with_val(wp, aux.r_cap(1) + aux.r_cap(2).clone());
        if let Some(prev) = &aux_prev {
            caps += Float::with_val(wp, prev.r_cap(1) + prev.r_cap(2).clone());
        }
        rhs += Float::with_val(wp, 2 * sys.beta(n).clone()) * caps;
        out.push(ResidualReport::two_sided(
            "difference/sum_R_closed",
            n,
            params,
            lhs,
            rhs,
            None,
        ));

        // Three-route sigma agreement.
        let s_two = sys.sigma_n(n, SigmaRoute::TwoP)?;
        let s_sum = sys.sigma_n(n, SigmaRoute::SumR)?;
        out.push(ResidualReport::two_sided(
            "sigma/routes_sum_vs_twop",
            n,
            params,
            s_sum,
            s_two.clone(),
            None,
        ));
        match sys.sigma_n(n, SigmaRoute::ClosedForm) {
            Ok(s_closed) => out.push(ResidualReport::two_sided(
                "sigma/routes_closed_vs_twop",
                n,
                params,
                s_closed,
                s_two,
                None,
            )),
            // Vanishing residues (jump-free or single-jump configurations):
            // the closed form is undefined there by construction.
            Err(Error::DegenerateResidue { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Differential relations: residue formulas against finite differences of
/// the rebuilt pipeline, plus the cross-derivative symmetry
/// `d r_{n,1}/d s2 = d r_{n,2}/d s1`.
pub fn check_derivative_relations(
    params: &WeightParams,
    n: usize,
    step: Option<f64>,
    ctx: &PrecisionContext,
) -> Result<Vec<ResidualReport>> {
    let cache = PipelineCache::new(params, n + 1, ctx);
    let h = cache.step(step);
    let h_f64 = h.to_f64();
    let base = cache.base()?;
    let wp = base.prec();
    let aux = base.aux_quantities(n);
    let aux_next = base.aux_quantities(n + 1);
    let aux_prev = if n >= 1 {
        Some(base.aux_quantities(n - 1))
    } else {
        None
    };

    let mut out = Vec::new();
    for (i, dir) in [(1usize, (1, 0)), (2usize, (0, 1))] {
        // d ln h_n / d s_i = -R_{n,i}
        let est = cache.diff(|sys| Ok(sys.h(n).clone().ln()), dir, &h, 1)?;
        out.push(ResidualReport::two_sided(
            format!("derivative/ln_h[i={i}]"),
            n,
            params,
            est.value,
            -aux.r_cap(i).clone(),
            Some(h_f64),
        ));

        // d p(n) / d s_i = r_{n,i}
        let est = cache.diff(|sys| Ok(sys.p(n).clone()), dir, &h, 1)?;
        out.push(ResidualReport::two_sided(
            format!("derivative/p[i={i}]"),
            n,
            params,
            est.value,
            aux.r_low(i).clone(),
            Some(h_f64),
        ));

        // d alpha_n / d s_i = r_{n,i} - r_{n+1,i}
        let est = cache.diff(|sys| Ok(sys.alpha(n).clone()), dir, &h, 1)?;
        let rhs = Float::with_val(wp, aux.r_low(i) - aux_next.r_low(i));
        out.push(ResidualReport::two_sided(
            format!("derivative/alpha[i={i}]"),
            n,
            params,
            est.value,
            rhs,
            Some(h_f64),
        ));

        // d beta_n / d s_i = beta_n (R_{n-1,i} - R_{n,i})
        let est = cache.diff(|sys| Ok(sys.beta(n).clone()), dir, &h, 1)?;
        let prev_cap = match &aux_prev {
            Some(prev) => prev.r_cap(i).clone(),
            None => Float::with_val(wp, 0),
        };
        let rhs = Float::with_val(wp, base.beta(n) * Float::with_val(wp, prev_cap - aux.r_cap(i)));
        out.push(ResidualReport::two_sided(
            format!("derivative/beta[i={i}]"),
            n,
            params,
            est.value,
            rhs,
            Some(h_f64),
        ));
    }

    // Cross-derivative symmetry d_{s2} r_{n,1} = d_{s1} r_{n,2}.
    let d2r1 = cache.diff(
        |sys| Ok(sys.aux_quantities(n).r_low(1).clone()),
        (0, 1),
        &h,
        1,
    )?;
    let d1r2 = cache.diff(
        |sys| Ok(sys.aux_quantities(n).r_low(2).clone()),
        (1, 0),
        &h,
        1,
    )?;
    out.push(ResidualReport::two_sided(
        "derivative/cross_symmetry",
        n,
        params,
        d2r1.value,
        d1r2.value,
        Some(h_f64),
    ));
    Ok(out)
}

/// Observed convergence order of the raw (pre-Richardson) central difference
/// of `ln h_n` against the exact `-R_{n,1}`, measured between steps `h` and
/// `h/2`. Central differences should give an order near 2.
pub fn observed_fd_order(
    params: &WeightParams,
    n: usize,
    step: f64,
    ctx: &PrecisionContext,
) -> Result<f64> {
    let cache = PipelineCache::new(params, n, ctx);
    let h = cache.step(Some(step));
    let base = cache.base()?;
    let aux = base.aux_quantities(n);
    let exact = -aux.r_cap(1).clone();
    let est = cache.diff(|sys| Ok(sys.h(n).clone().ln()), (1, 0), &h, 1)?;
    let wp = base.prec();
    let e_coarse = Float::with_val(wp, &est.coarse - &exact).abs().to_f64();
    let e_fine = Float::with_val(wp, &est.fine - &exact).abs().to_f64();
    if e_fine == 0.0 || e_coarse == 0.0 {
        return Err(Error::RateMismatch(
            "fd residuals at the roundoff floor; cannot measure an order".into(),
        ));
    }
    Ok((e_coarse / e_fine).log2())
}

/// Riccati-type first-order relations for the residue sums.
pub fn check_riccati(
    params: &WeightParams,
    n: usize,
    step: Option<f64>,
    ctx: &PrecisionContext,
) -> Result<Vec<ResidualReport>> {
    let cache = PipelineCache::new(params, n, ctx);
    let h = cache.step(step);
    let h_f64 = h.to_f64();
    let base = cache.base()?;
    let wp = base.prec();
    let aux = base.aux_quantities(n);

    let cap_sum = Float::with_val(wp, aux.r_cap(1) + aux.r_cap(2).clone());
    let low_sum = Float::with_val(wp, aux.r_low(1) + aux.r_low(2).clone());
    let mut out = Vec::new();
    for (i, dir) in [(1usize, (1, 0)), (2usize, (0, 1))] {
        // d (R_1 + R_2) / d s_i = 4 r_{n,i} + (R_1 + R_2 - 2 s_i) R_{n,i}
        let est = cache.diff(
            |sys| {
                let a = sys.aux_quantities(n);
                Ok(Float::with_val(sys.prec(), a.r_cap(1) + a.r_cap(2).clone()))
            },
            dir,
            &h,
            1,
        )?;
        let rhs = Float::with_val(wp, 4 * aux.r_low(i).clone())
            + Float::with_val(
                wp,
                &cap_sum - Float::with_val(wp, 2 * params.s(i).clone()),
            ) * aux.r_cap(i);
        out.push(ResidualReport::two_sided(
            format!("riccati/R_sum[i={i}]"),
            n,
            params,
            est.value,
            rhs,
            Some(h_f64),
        ));

        // d (r_1 + r_2) / d s_i = 2 r_{n,i}^2 / R_{n,i} - (n + r_1 + r_2) R_{n,i}
        if let Some(side) = aux.degenerate_side(wp) {
            if side == i {
                return Err(Error::DegenerateResidue {
                    n,
                    index: side,
                    reason: "Riccati right-hand side divides by a vanishing residue".into(),
                });
            }
        }
        let est = cache.diff(
            |sys| {
                let a = sys.aux_quantities(n);
                Ok(Float::with_val(sys.prec(), a.r_low(1) + a.r_low(2).clone()))
            },
            dir,
            &h,
            1,
        )?;
        let rhs = Float::with_val(wp, 2 * Float::with_val(wp, aux.r_low(i) * aux.r_low(i)))
            / aux.r_cap(i)
            - (Float::with_val(wp, n as f64) + &low_sum) * aux.r_cap(i);
        out.push(ResidualReport::two_sided(
            format!("riccati/r_sum[i={i}]"),
            n,
            params,
            est.value,
            rhs,
            Some(h_f64),
        ));
    }
    Ok(out)
}

/// Second partial derivatives (d11, d22, d12) of an extracted scalar, from
/// directional second differences along (1,0), (0,1), (1,1).
fn second_partials<F>(
    cache: &PipelineCache,
    extract: F,
    h: &Real,
) -> Result<(Real, Real, Real)>
where
    F: Fn(&OrthoSystem) -> Result<Real> + Copy,
{
    let d11 = cache.diff(extract, (1, 0), h, 2)?.value;
    let d22 = cache.diff(extract, (0, 1), h, 2)?.value;
    let ddiag = cache.diff(extract, (1, 1), h, 2)?.value;
    let wp = d11.prec();
    let d12 = (Float::with_val(wp, &ddiag - &d11) - &d22) / 2u32;
    Ok((d11, d22, d12))
}

/// Coupled second-order PDEs for `(R_{n,1}, R_{n,2})`, every derivative by
/// finite differences of the rebuilt pipeline.
pub fn check_coupled_pde_r(
    params: &WeightParams,
    n: usize,
    step: Option<f64>,
    ctx: &PrecisionContext,
) -> Result<Vec<ResidualReport>> {
    let cache = PipelineCache::new(params, n, ctx);
    let h = cache.step(step);
    let h_f64 = h.to_f64();
    let base = cache.base()?;
    let wp = base.prec();
    let aux = base.aux_quantities(n);
    // PDE i divides by R_{n,i}; a degenerate side (single-jump reduction or
    // a polynomial zero at the jump) is skipped, and only if both sides
    // degenerate is there nothing to check.
    let degenerate = aux.degenerate_side(wp);
    let viable: Vec<usize> = [1usize, 2usize]
        .into_iter()
        .filter(|i| degenerate != Some(*i))
        .collect();
    if viable.is_empty() {
        return Err(Error::DegenerateResidue {
            n,
            index: degenerate.unwrap_or(1),
            reason: "coupled PDE divides by a vanishing residue on both sides".into(),
        });
    }

    let cap_sum_extract = |sys: &OrthoSystem| {
        let a = sys.aux_quantities(n);
        Ok(Float::with_val(sys.prec(), a.r_cap(1) + a.r_cap(2).clone()))
    };
    let d1f = cache.diff(cap_sum_extract, (1, 0), &h, 1)?.value;
    let d2f = cache.diff(cap_sum_extract, (0, 1), &h, 1)?.value;
    let (d11f, d22f, d12f) = second_partials(&cache, cap_sum_extract, &h)?;
    let d1r2 = cache
        .diff(
            |sys| Ok(sys.aux_quantities(n).r_cap(2).clone()),
            (1, 0),
            &h,
            1,
        )?
        .value;
    let d2r1 = cache
        .diff(
            |sys| Ok(sys.aux_quantities(n).r_cap(1).clone()),
            (0, 1),
            &h,
            1,
        )?
        .value;

    let r1 = aux.r_cap(1);
    let r2 = aux.r_cap(2);
    let s1 = Float::with_val(wp, params.s(1));
    let s2 = Float::with_val(wp, params.s(2));
    let f = Float::with_val(wp, r1 + r2.clone());
    let f2 = Float::with_val(wp, &f * &f);
    let two_n_plus_1 = Float::with_val(wp, (2 * n + 1) as f64);

    let mut out = Vec::new();
    // First PDE.
    if viable.contains(&1) {
        let t_second = Float::with_val(wp, &d11f + &d12f);
        let t_grad = Float::with_val(
            wp,
            &d1f * (Float::with_val(wp, &d1f / (2u32 * r1.clone())) + r2),
        );
        let t_skew =
            Float::with_val(wp, 2 * Float::with_val(wp, &s2 - &s1)) * Float::with_val(wp, &d1r2);
        let inner = Float::with_val(wp, &d2f - Float::with_val(wp, 1.5 * f2.clone()))
            + 2u32
                * (Float::with_val(wp, 2 * Float::with_val(wp, &s1 * r1))
                    + Float::with_val(wp, Float::with_val(wp, &s1 + &s2) * r2)
                    - Float::with_val(wp, &s1 * &s1)
                    + &two_n_plus_1);
        let t_coupling = Float::with_val(wp, r1 * &inner);
        let value = Float::with_val(wp, &t_second - &t_grad) + &t_skew + &t_coupling;
        out.push(ResidualReport::normalized(
            "pde_R/first",
            n,
            params,
            value,
            &[&t_second, &t_grad, &t_skew, &t_coupling],
            Some(h_f64),
        ));
    }
    // Second PDE (index swap of the first).
    if viable.contains(&2) {
        let t_second = Float::with_val(wp, &d22f + &d12f);
        let t_grad = Float::with_val(
            wp,
            &d2f * (Float::with_val(wp, &d2f / (2u32 * r2.clone())) + r1),
        );
        let t_skew =
            Float::with_val(wp, 2 * Float::with_val(wp, &s1 - &s2)) * Float::with_val(wp, &d2r1);
        let inner = Float::with_val(wp, &d1f - Float::with_val(wp, 1.5 * f2.clone()))
            + 2u32
                * (Float::with_val(wp, Float::with_val(wp, &s1 + &s2) * r1)
                    + Float::with_val(wp, 2 * Float::with_val(wp, &s2 * r2))
                    - Float::with_val(wp, &s2 * &s2)
                    + &two_n_plus_1);
        let t_coupling = Float::with_val(wp, r2 * &inner);
        let value = Float::with_val(wp, &t_second - &t_grad) + &t_skew + &t_coupling;
        out.push(ResidualReport::normalized(
            "pde_R/second",
            n,
            params,
            value,
            &[&t_second, &t_grad, &t_skew, &t_coupling],
            Some(h_f64),
        ));
    }
    Ok(out)
}

/// Single-jump reduction (`B2 = 0`): the first coupled PDE collapses to
/// `R'' = R'^2/(2R) + (3/2) R^3 - 4 s1 R^2 + 2 (s1^2 - 2n - 1) R`
/// with `R := R_{n,1}` depending on `s1` alone.
pub fn check_single_jump_ode(
    params: &WeightParams,
    n: usize,
    step: Option<f64>,
    ctx: &PrecisionContext,
) -> Result<ResidualReport> {
    if params.b2() != 0.0 {
        return Err(Error::InvalidParams(
            "single-jump reduction requires B2 = 0 (relaxed mode)".into(),
        ));
    }
    let cache = PipelineCache::new(params, n, ctx);
    let h = cache.step(step);
    let base = cache.base()?;
    let wp = base.prec();
    let aux = base.aux_quantities(n);
    let r = aux.r_cap(1);
    if aux.degenerate_side(wp) == Some(1) {
        return Err(Error::DegenerateResidue {
            n,
            index: 1,
            reason: "single-jump ODE divides by a vanishing residue".into(),
        });
    }
    let extract = |sys: &OrthoSystem| Ok(sys.aux_quantities(n).r_cap(1).clone());
    let d1 = cache.diff(extract, (1, 0), &h, 1)?.value;
    let d11 = cache.diff(extract, (1, 0), &h, 2)?.value;

    let s1 = Float::with_val(wp, params.s(1));
    let r2 = Float::with_val(wp, r * r);
    let r3 = Float::with_val(wp, &r2 * r);
    let t_sq = Float::with_val(wp, &d1 * &d1) / (2u32 * r.clone());
    let t_cub = Float::with_val(wp, 1.5 * r3);
    let t_quad = Float::with_val(wp, 4 * Float::with_val(wp, &s1 * &r2));
    let t_lin = 2u32
        * (Float::with_val(wp, &s1 * &s1) - Float::with_val(wp, (2 * n + 1) as f64))
        * r;
    let rhs = Float::with_val(wp, &t_sq + &t_cub) - &t_quad + &t_lin;
    let value = Float::with_val(wp, &d11 - &rhs);
    Ok(ResidualReport::normalized(
        "pde_R/single_jump_ode",
        n,
        params,
        value,
        &[&d11, &t_sq, &t_cub, &t_quad, &t_lin],
        Some(h.to_f64()),
    ))
}

/// Second-order PDE for `sigma_n`:
/// `((2 s1 d1 sigma + 2 s2 d2 sigma - 2 sigma)^2 - D1 - D2)^2 = 4 D1 D2`.
pub fn check_sigma_pde(
    params: &WeightParams,
    n: usize,
    step: Option<f64>,
    ctx: &PrecisionContext,
) -> Result<ResidualReport> {
    let cache = PipelineCache::new(params, n, ctx);
    let h = cache.step(step);
    let base = cache.base()?;
    let wp = base.prec();

    let extract = |sys: &OrthoSystem| sys.sigma_n(n, SigmaRoute::TwoP);
    let sigma = extract(&base)?;
    let d1 = cache.diff(extract, (1, 0), &h, 1)?.value;
    let d2 = cache.diff(extract, (0, 1), &h, 1)?.value;
    let (d11, d22, d12) = second_partials(&cache, extract, &h)?;

    let two_n = Float::with_val(wp, 2.0 * n as f64);
    let common = Float::with_val(wp, &d1 + &d2) + &two_n;
    let delta1 = {
        let a = Float::with_val(wp, &d11 + &d12);
        Float::with_val(wp, &a * &a)
            + 4u32 * Float::with_val(wp, &d1 * &d1) * &common
    };
    let delta2 = {
        let a = Float::with_val(wp, &d22 + &d12);
        Float::with_val(wp, &a * &a)
            + 4u32 * Float::with_val(wp, &d2 * &d2) * &common
    };
    let x = Float::with_val(wp, 2 * Float::with_val(wp, params.s(1) * &d1))
        + Float::with_val(wp, 2 * Float::with_val(wp, params.s(2) * &d2))
        - Float::with_val(wp, 2 * sigma.clone());
    let x2 = Float::with_val(wp, &x * &x);
    let inner = Float::with_val(wp, &x2 - &delta1) - &delta2;
    let lhs = Float::with_val(wp, &inner * &inner);
    let rhs = Float::with_val(wp, 4 * Float::with_val(wp, &delta1 * &delta2));
    let mut rep = ResidualReport::normalized(
        "sigma/pde",
        n,
        params,
        Float::with_val(wp, &lhs - &rhs),
        &[&lhs, &rhs, &x2, &delta1, &delta2],
        Some(h.to_f64()),
    );
    rep.rhs = rhs;
    rep.lhs = lhs;
    Ok(rep)
}

/// Compatibility conditions (S1) and (S2') at sample points `z`:
/// `(S1): B_{n+1} + B_n = (z - alpha_n) A_n - 2z`,
/// `(S2'): B_n^2 + 2 z B_n + sum_{j<n} A_j = beta_n A_n A_{n-1}`,
/// with the `A_j` sum accumulated directly.
pub fn check_ladder_compatibility(
    params: &WeightParams,
    n: usize,
    z_samples: &[f64],
    ctx: &PrecisionContext,
) -> Result<Vec<ResidualReport>> {
    assert!(n >= 1, "(S2') needs A_{{n-1}}: take n >= 1");
    let sys = build_ortho_system(params, n + 1, ctx)?;
    let wp = sys.prec();
    let aux: Vec<_> = (0..=n + 1).map(|j| sys.aux_quantities(j)).collect();
    let mut out = Vec::new();
    for &zf in z_samples {
        let z = Float::with_val(wp, zf);
        let ladders: Vec<_> = aux
            .iter()
            .map(|a| ladder_eval(&z, a, params))
            .collect::<Result<_>>()?;
        // (S1)
        let lhs = Float::with_val(wp, &ladders[n + 1].b_n + &ladders[n].b_n);
        let rhs = Float::with_val(wp, &z - sys.alpha(n)) * &ladders[n].a_n
            - Float::with_val(wp, 2 * z.clone());
        out.push(ResidualReport::two_sided(
            format!("ladder/S1[z={zf}]"),
            n,
            params,
            lhs,
            rhs,
            None,
        ));
        // (S2')
        let bsq = Float::with_val(wp, &ladders[n].b_n * &ladders[n].b_n);
        let mut asum = Float::with_val(wp, 0);
        for lad in ladders.iter().take(n) {
            asum += &lad.a_n;
        }
        let lhs = bsq + Float::with_val(wp, 2 * z.clone()) * &ladders[n].b_n + asum;
        let rhs = Float::with_val(wp, sys.beta(n) * &ladders[n].a_n) * &ladders[n - 1].a_n;
        out.push(ResidualReport::two_sided(
            format!("ladder/S2prime[z={zf}]"),
            n,
            params,
            lhs,
            rhs,
            None,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(bits: u32) -> PrecisionContext {
        PrecisionContext::with_bits(bits).unwrap()
    }

    fn strict_params() -> WeightParams {
        WeightParams::strict(1.0, -0.5, 0.3, -0.7, 0.9).unwrap()
    }

    fn all_mode_params() -> WeightParams {
        WeightParams::gap_all(-0.7, 0.9).unwrap()
    }

    fn gaussian() -> WeightParams {
        WeightParams::relaxed(1.0, 0.0, 0.0, -1.0, 1.0).unwrap()
    }

    fn single_jump() -> WeightParams {
        WeightParams::relaxed(1.0, -0.5, 0.0, -0.7, 0.9).unwrap()
    }

    #[test]
    fn difference_system_strict_tight() {
        let sys = build_ortho_system(&strict_params(), 21, &ctx(512)).unwrap();
        let reports = check_difference_system(&sys, 1..=20).unwrap();
        assert!(reports.len() >= 20 * 8);
        for r in &reports {
            assert!(
                r.rel_f64() < 1e-30,
                "{} at n={} residual {:e}",
                r.label,
                r.n,
                r.rel_f64()
            );
        }
    }

    #[test]
    fn difference_system_gaussian_exact_zero() {
        let sys = build_ortho_system(&gaussian(), 11, &ctx(256)).unwrap();
        let reports = check_difference_system(&sys, 0..=10).unwrap();
        for r in &reports {
            if r.label == "difference/beta_from_r" {
                // lhs is the floating ratio h_n/h_{n-1}, rhs the exact n/2;
                // equal only to working precision.
                assert!(r.rel_f64() < 1e-60, "{} at n={}", r.label, r.n);
            } else {
                // Every aux quantity vanishes identically, and the even
                // moment structure keeps p(n) and alpha_n exactly zero.
                assert!(
                    r.abs_residual.is_zero(),
                    "{} at n={} not exactly zero",
                    r.label,
                    r.n
                );
            }
        }
    }

    #[test]
    fn difference_system_single_jump_degenerate_side_vanishes() {
        let p = single_jump();
        let sys = build_ortho_system(&p, 21, &ctx(512)).unwrap();
        // R_{n,2} = r_{n,2} = 0 on the degenerate side.
        for n in [1usize, 7, 20] {
            let aux = sys.aux_quantities(n);
            assert!(aux.r_cap(2).is_zero() && aux.r_low(2).is_zero());
        }
        let reports = check_difference_system(&sys, 1..=20).unwrap();
        for r in &reports {
            assert!(
                r.rel_f64() < 1e-30,
                "{} at n={} residual {:e}",
                r.label,
                r.n,
                r.rel_f64()
            );
        }
    }

    #[test]
    fn derivative_relations_strict() {
        let reports =
            check_derivative_relations(&strict_params(), 8, Some(1e-10), &ctx(512)).unwrap();
        assert_eq!(reports.len(), 9);
        for r in &reports {
            assert!(
                r.rel_f64() < 1e-18,
                "{} residual {:e}",
                r.label,
                r.rel_f64()
            );
        }
    }

    #[test]
    fn derivative_relations_gaussian_zero_sides() {
        // Jump-free weight: both sides of every relation are identically 0
        // up to fd roundoff.
        let reports = check_derivative_relations(&gaussian(), 5, Some(1e-8), &ctx(256)).unwrap();
        for r in &reports {
            assert!(
                r.abs_residual.clone().to_f64() < 1e-60,
                "{} residual {:e}",
                r.label,
                r.abs_residual.to_f64()
            );
        }
    }

    #[test]
    fn fd_order_is_two_before_richardson() {
        let order = observed_fd_order(&strict_params(), 8, 1e-4, &ctx(512)).unwrap();
        assert!(
            (1.8..=2.2).contains(&order),
            "observed raw central-difference order {order}"
        );
    }

    #[test]
    fn riccati_strict_and_all_mode() {
        for (p, n) in [(strict_params(), 8usize), (all_mode_params(), 6usize)] {
            let reports = check_riccati(&p, n, Some(1e-10), &ctx(512)).unwrap();
            assert_eq!(reports.len(), 4);
            for r in &reports {
                assert!(
                    r.rel_f64() < 1e-18,
                    "{} at n={} residual {:e}",
                    r.label,
                    n,
                    r.rel_f64()
                );
            }
        }
    }

    #[test]
    fn riccati_mirror_swaps_side_residuals() {
        // Reflecting the weight exchanges the roles of the two jumps, so the
        // i=1 reports of the mirrored configuration must match the i=2
        // reports of the original to working accuracy.
        let c = ctx(384);
        let p = strict_params();
        let orig = check_riccati(&p, 6, Some(1e-9), &c).unwrap();
        let mirr = check_riccati(&p.mirrored(), 6, Some(1e-9), &c).unwrap();
        // Reports come in order [R_sum i=1, r_sum i=1, R_sum i=2, r_sum i=2].
        for (a, b) in [(0usize, 2usize), (1, 3), (2, 0), (3, 1)] {
            let got = mirr[a].abs_residual.to_f64();
            let want = orig[b].abs_residual.to_f64();
            assert!(
                (got - want).abs() <= 1e-22 * (1.0 + want.abs()),
                "mirror residual mismatch: {} vs {}",
                got,
                want
            );
        }
    }

    #[test]
    fn coupled_pde_r_strict() {
        let reports = check_coupled_pde_r(&strict_params(), 8, None, &ctx(768)).unwrap();
        for r in &reports {
            assert!(
                r.rel_f64() < 1e-12,
                "{} residual {:e}",
                r.label,
                r.rel_f64()
            );
        }
    }

    #[test]
    fn coupled_pde_r_index_swap_symmetry() {
        // Under the reflection that exchanges the jumps, PDE 1's residual at
        // the mirrored parameters equals PDE 2's at the originals.
        let c = ctx(640);
        let p = strict_params();
        let orig = check_coupled_pde_r(&p, 5, None, &c).unwrap();
        let mirr = check_coupled_pde_r(&p.mirrored(), 5, None, &c).unwrap();
        let a = mirr[0].rel_f64();
        let b = orig[1].rel_f64();
        assert!(
            (a - b).abs() <= 1e-6 * (1.0 + b.abs()) || (a < 1e-20 && b < 1e-20),
            "swap symmetry: {a:e} vs {b:e}"
        );
    }

    #[test]
    fn single_jump_ode_reduction() {
        let rep = check_single_jump_ode(&single_jump(), 8, None, &ctx(768)).unwrap();
        assert!(rep.rel_f64() < 1e-12, "ODE residual {:e}", rep.rel_f64());
        // And it coincides with the first coupled PDE in the degenerate case.
        let pde = check_coupled_pde_r(&single_jump(), 8, None, &ctx(768)).unwrap();
        assert!(pde[0].rel_f64() < 1e-12);
    }

    #[test]
    fn sigma_pde_strict_and_all_mode() {
        let rep = check_sigma_pde(&strict_params(), 8, None, &ctx(768)).unwrap();
        assert!(rep.rel_f64() < 1e-12, "sigma PDE residual {:e}", rep.rel_f64());
        let rep = check_sigma_pde(&all_mode_params(), 5, None, &ctx(768)).unwrap();
        assert!(rep.rel_f64() < 1e-12, "sigma PDE residual {:e}", rep.rel_f64());
    }

    #[test]
    fn sigma_pde_gaussian_identically_zero() {
        let rep = check_sigma_pde(&gaussian(), 4, Some(1e-6), &ctx(256)).unwrap();
        assert!(rep.abs_residual.is_zero());
    }

    #[test]
    fn ladder_compatibility_samples() {
        let reports =
            check_ladder_compatibility(&strict_params(), 6, &[-2.0, 0.1, 3.0], &ctx(512)).unwrap();
        assert_eq!(reports.len(), 6);
        for r in &reports {
            assert!(
                r.rel_f64() < 1e-25,
                "{} residual {:e}",
                r.label,
                r.rel_f64()
            );
        }
        // Residuals are z-independent up to precision: extra samples stay tiny.
        let more = check_ladder_compatibility(
            &strict_params(),
            6,
            &[-5.0, 0.42, 7.3],
            &ctx(512),
        )
        .unwrap();
        for r in &more {
            assert!(r.rel_f64() < 1e-25);
        }
    }

    #[test]
    fn ladder_s2prime_gaussian_n1() {
        // No jumps, n = 1: both sides of (S2') equal 4 beta_1 = 2.
        let sys = build_ortho_system(&gaussian(), 2, &ctx(256)).unwrap();
        let wp = sys.prec();
        let z = Float::with_val(wp, 1.3);
        let a0 = sys.aux_quantities(0);
        let a1 = sys.aux_quantities(1);
        let l0 = ladder_eval(&z, &a0, sys.params()).unwrap();
        let l1 = ladder_eval(&z, &a1, sys.params()).unwrap();
        let lhs = Float::with_val(wp, &l1.b_n * &l1.b_n)
            + Float::with_val(wp, 2 * z.clone()) * &l1.b_n
            + &l0.a_n;
        let rhs = Float::with_val(wp, sys.beta(1) * &l1.a_n) * &l0.a_n;
        assert_eq!(lhs, 2);
        assert_eq!(rhs, 2);
    }

    #[test]
    fn fd_residual_halving_factor() {
        // Raw central-difference residuals of the derivative relations drop
        // by ~4x when the step halves (order 2), within (3.5, 4.5).
        let c = ctx(512);
        let p = strict_params();
        let cache = PipelineCache::new(&p, 8, &c);
        let base = cache.base().unwrap();
        let aux = base.aux_quantities(8);
        let exact = -aux.r_cap(1).clone();
        let wp = base.prec();
        let res_at = |h: f64| -> f64 {
            let est = cache
                .diff(|sys| Ok(sys.h(8).clone().ln()), (1, 0), &Float::with_val(wp, h), 1)
                .unwrap();
            Float::with_val(wp, &est.coarse - &exact).abs().to_f64()
        };
        let r1 = res_at(1e-4);
        let r2 = res_at(0.5e-4);
        let factor = r1 / r2;
        assert!(
            (3.5..=4.5).contains(&factor),
            "halving factor {factor} (residuals {r1:e}, {r2:e})"
        );
    }
}
