//! Orthogonal-polynomial engine for the Gaussian weight with two jumps.
//!
//! The primary route factorizes the Hankel moment matrix
//! `(m_{i+j})_{i,j=0}^{n_max+1}` as `L D L^T` with unit-lower-triangular `L`:
//! the diagonal entries are the squared norms `h_n`, and since the rows of
//! `L^{-1}` are the monic-polynomial coefficients, the subleading coefficient
//! is read off as `p(n) = -L[n][n-1]`. Everything else follows:
//! `alpha_n = p(n) - p(n+1)`, `beta_n = h_n / h_{n-1}`,
//! `ln D_n = sum_{j<n} ln h_j`.
//!
//! Hankel condition numbers grow geometrically in `n`, so a build is accepted
//! only after an adaptive-precision agreement test: the factorization is
//! recomputed at doubled precision and the trailing norms must match to the
//! context's agreement threshold, doubling again as needed.
//!
//! A completely independent route, the Stieltjes procedure with
//! Gauss-Legendre panel quadrature against the weight itself, is provided as
//! a cross-validation oracle; it never touches the moment table.

use crate::numerics::{PrecisionContext, Real};
use crate::quad::GaussLegendre;
use crate::weight::{MomentTable, WeightParams};
use crate::{Error, Result};
use rug::Float;

/// Default precision policy: `64 + 12 * n_max` significand bits.
pub fn default_bits(n_max: usize) -> u32 {
    64 + 12 * n_max as u32
}

/// Per-degree ledger of norms, recurrence coefficients, subleading
/// coefficients and log-determinants at a fixed `(s1, s2)`.
///
/// Index ranges (inclusive): `h_0 ..= h_{n_max+1}`, `alpha_0 ..= alpha_{n_max}`,
/// `beta_0 ..= beta_{n_max+1}` with `beta_0 = 0`, `p(0) ..= p(n_max+1)` with
/// `p(0) = 0`, and `ln D_1 ..= ln D_{n_max+1}`.
#[derive(Debug, Clone)]
pub struct OrthoSystem {
    params: WeightParams,
    n_max: usize,
    prec: u32,
    agree_tol: f64,
    h: Vec<Real>,
    alpha: Vec<Real>,
    beta: Vec<Real>,
    p: Vec<Real>,
    log_d: Vec<Real>,
}

impl OrthoSystem {
    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Working precision of the accepted build.
    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn agree_tol(&self) -> f64 {
        self.agree_tol
    }

    /// Squared norm `h_n`, `n <= n_max + 1`.
    pub fn h(&self, n: usize) -> &Real {
        &self.h[n]
    }

    /// Recurrence coefficient `alpha_n`, `n <= n_max`.
    pub fn alpha(&self, n: usize) -> &Real {
        &self.alpha[n]
    }

    /// Recurrence coefficient `beta_n` (`beta_0 = 0`), `n <= n_max + 1`.
    pub fn beta(&self, n: usize) -> &Real {
        &self.beta[n]
    }

    /// Subleading coefficient `p(n)` of the monic `P_n` (`p(0) = 0`),
    /// `n <= n_max + 1`.
    pub fn p(&self, n: usize) -> &Real {
        &self.p[n]
    }

    /// `ln D_n = sum_{j<n} ln h_j`, `1 <= n <= n_max + 1`.
    pub fn log_d(&self, n: usize) -> &Real {
        &self.log_d[n - 1]
    }

    /// Monic polynomial value `P_n(x)` by the three-term recurrence,
    /// `n <= n_max + 1`.
    pub fn eval_monic(&self, n: usize, x: &Real) -> Real {
        let (pn, _) = self.eval_pair(n, x);
        pn
    }

    /// `(P_n(x), P_{n-1}(x))`, with `P_{-1} = 0`.
    pub fn eval_pair(&self, n: usize, x: &Real) -> (Real, Real) {
        let wp = self.prec;
        let x = Float::with_val(wp, x);
        let mut prev = Float::with_val(wp, 0); // P_{-1}
        let mut cur = Float::with_val(wp, 1); // P_0
        for j in 0..n {
            let next = Float::with_val(wp, &x - &self.alpha[j]) * &cur
                - Float::with_val(wp, &self.beta[j] * &prev);
            prev = cur;
            cur = next;
        }
        (cur, prev)
    }

    /// All values `P_0(x), ..., P_m(x)` in one recurrence pass,
    /// `m <= n_max + 1`.
    pub fn eval_all(&self, m: usize, x: &Real) -> Vec<Real> {
        let wp = self.prec;
        let x = Float::with_val(wp, x);
        let mut out = Vec::with_capacity(m + 1);
        out.push(Float::with_val(wp, 1));
        if m >= 1 {
            out.push(Float::with_val(wp, &x - &self.alpha[0]));
        }
        for j in 1..m {
            let next = Float::with_val(wp, &x - &self.alpha[j]) * &out[j]
                - Float::with_val(wp, &self.beta[j] * &out[j - 1]);
            out.push(next);
        }
        out
    }

    /// Auxiliary residues at degree `n <= n_max + 1`:
    /// `R_{n,i} = B_i P_n(s_i)^2 e^{-s_i^2} / h_n`,
    /// `r_{n,i} = B_i P_n(s_i) P_{n-1}(s_i) e^{-s_i^2} / h_{n-1}`,
    /// with `r_{0,i} = 0` by the convention `beta_0 P_{-1} = 0`.
    pub fn aux_quantities(&self, n: usize) -> AuxQuantities {
        let wp = self.prec;
        let mut big_r = [Float::with_val(wp, 0), Float::with_val(wp, 0)];
        let mut small_r = [Float::with_val(wp, 0), Float::with_val(wp, 0)];
        let mut p_n = [Float::with_val(wp, 0), Float::with_val(wp, 0)];
        let mut p_nm1 = [Float::with_val(wp, 0), Float::with_val(wp, 0)];
        for (idx, side) in [1usize, 2usize].into_iter().enumerate() {
            let s = self.params.s(side);
            let b = Float::with_val(wp, self.params.b(side));
            let gauss = (-Float::with_val(wp, s * s)).exp();
            let (pn, pm) = self.eval_pair(n, s);
            let rn =
                Float::with_val(wp, &b * Float::with_val(wp, &pn * &pn)) * &gauss / &self.h[n];
            let rs = if n == 0 {
                Float::with_val(wp, 0)
            } else {
                Float::with_val(wp, &b * Float::with_val(wp, &pn * &pm)) * &gauss / &self.h[n - 1]
            };
            big_r[idx] = rn;
            small_r[idx] = rs;
            p_n[idx] = pn;
            p_nm1[idx] = pm;
        }
        AuxQuantities {
            n,
            big_r,
            small_r,
            p_n,
            p_nm1,
        }
    }

    /// `sigma_n = (d/ds1 + d/ds2) ln D_n` by the selected route.
    pub fn sigma_n(&self, n: usize, route: SigmaRoute) -> Result<Real> {
        let wp = self.prec;
        match route {
            SigmaRoute::TwoP => Ok(Float::with_val(wp, 2 * self.p[n].clone())),
            SigmaRoute::SumR => {
                // -sum_{j<n} (R_{j,1} + R_{j,2}), one recurrence pass per side.
                let mut acc = Float::with_val(wp, 0);
                if n >= 1 {
                    for side in [1usize, 2usize] {
                        let s = self.params.s(side);
                        let b = Float::with_val(wp, self.params.b(side));
                        let gauss = (-Float::with_val(wp, s * s)).exp();
                        let values = self.eval_all(n - 1, s);
                        for (j, pj) in values.iter().enumerate() {
                            acc += Float::with_val(wp, &b * Float::with_val(wp, pj * pj)) * &gauss
                                / &self.h[j];
                        }
                    }
                }
                Ok(-acc)
            }
            SigmaRoute::ClosedForm => {
                let aux = self.aux_quantities(n);
                sigma_closed_form(&aux, &self.params, n, wp)
            }
        }
    }
}

/// Route selector for `sigma_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaRoute {
    /// `-sum_{j<n} (R_{j,1} + R_{j,2})`
    SumR,
    /// `2 p(n)`
    TwoP,
    /// Closed form in the degree-`n` auxiliary quantities.
    ClosedForm,
}

/// Residues of the ladder coefficients at degree `n`, plus the polynomial
/// boundary values they are built from.
#[derive(Debug, Clone)]
pub struct AuxQuantities {
    pub n: usize,
    /// `[R_{n,1}, R_{n,2}]`
    pub big_r: [Real; 2],
    /// `[r_{n,1}, r_{n,2}]`
    pub small_r: [Real; 2],
    /// `[P_n(s1), P_n(s2)]`
    pub p_n: [Real; 2],
    /// `[P_{n-1}(s1), P_{n-1}(s2)]`
    pub p_nm1: [Real; 2],
}

impl AuxQuantities {
    /// `R_{n,i}`, 1-based side index.
    pub fn r_cap(&self, i: usize) -> &Real {
        &self.big_r[i - 1]
    }

    /// `r_{n,i}`, 1-based side index.
    pub fn r_low(&self, i: usize) -> &Real {
        &self.small_r[i - 1]
    }

    /// Underflow guard consulted before dividing by `R_{n,i}`: flags a side
    /// whose residue is zero or below `2^{-prec/2} (1 + |r_{n,i}|)`.
    pub fn degenerate_side(&self, prec: u32) -> Option<usize> {
        for i in [1usize, 2usize] {
            let r = self.r_cap(i);
            let floor = Float::with_val(64, Float::i_exp(1, -((prec / 2) as i32)))
                * (Float::with_val(64, 1) + self.r_low(i).clone().abs());
            if r.is_zero() || r.clone().abs() < floor {
                return Some(i);
            }
        }
        None
    }
}

/// Ladder coefficients `A_n(z)`, `B_n(z)` assembled from the residues.
#[derive(Debug, Clone)]
pub struct LadderCoeffs {
    pub z: Real,
    pub a_n: Real,
    pub b_n: Real,
}

/// `A_n(z) = R_{n,1}/(z-s1) + R_{n,2}/(z-s2) + 2`,
/// `B_n(z) = r_{n,1}/(z-s1) + r_{n,2}/(z-s2)`; fails with `PoleHit` at the
/// jump locations.
pub fn ladder_eval(z: &Real, aux: &AuxQuantities, params: &WeightParams) -> Result<LadderCoeffs> {
    let wp = z.prec().max(aux.big_r[0].prec());
    for side in [1usize, 2usize] {
        if *z == *params.s(side) {
            return Err(Error::PoleHit { index: side });
        }
    }
    let d1 = Float::with_val(wp, z - params.s(1));
    let d2 = Float::with_val(wp, z - params.s(2));
    let a_n = Float::with_val(wp, &aux.big_r[0] / &d1)
        + Float::with_val(wp, &aux.big_r[1] / &d2)
        + 2u32;
    let b_n =
        Float::with_val(wp, &aux.small_r[0] / &d1) + Float::with_val(wp, &aux.small_r[1] / &d2);
    Ok(LadderCoeffs {
        z: z.clone(),
        a_n,
        b_n,
    })
}

/// `sigma_n` closed form
/// `2 (s1 r1 + s2 r2 - r1^2/R1 - r2^2/R2) - (r1 + r2 + n)(R1 + R2)`.
fn sigma_closed_form(
    aux: &AuxQuantities,
    params: &WeightParams,
    n: usize,
    wp: u32,
) -> Result<Real> {
    if let Some(side) = aux.degenerate_side(wp) {
        return Err(Error::DegenerateResidue {
            n,
            index: side,
            reason: "closed-form sigma divides by a vanishing residue".into(),
        });
    }
    let r1 = &aux.small_r[0];
    let r2 = &aux.small_r[1];
    let cap1 = &aux.big_r[0];
    let cap2 = &aux.big_r[1];
    let mut inner = Float::with_val(wp, params.s(1) * r1);
    inner += Float::with_val(wp, params.s(2) * r2);
    inner -= Float::with_val(wp, r1 * r1) / cap1;
    inner -= Float::with_val(wp, r2 * r2) / cap2;
    let tail = (Float::with_val(wp, r1 + r2.clone()) + Float::with_val(wp, n as f64))
        * Float::with_val(wp, cap1 + cap2.clone());
    Ok(inner * 2u32 - tail)
}

/// Builds the ledger by moment-matrix factorization with the adaptive
/// agreement loop. `ctx.bits()` is the starting precision (resolve "auto" to
/// [`default_bits`] before calling); precision doubles until the trailing
/// norms agree to `ctx.agree_tol()`.
pub fn build_ortho_system(
    params: &WeightParams,
    n_max: usize,
    ctx: &PrecisionContext,
) -> Result<OrthoSystem> {
    const MAX_DOUBLINGS: usize = 6;
    let mut bits = ctx.bits();
    let mut prev: Option<FactorData> = None;
    let mut last_err: Option<Error> = None;
    for _ in 0..=MAX_DOUBLINGS {
        let wp = bits + crate::numerics::GUARD_BITS;
        match factorize(params, n_max, wp) {
            Ok(data) => {
                if let Some(low) = &prev {
                    if agrees(low, &data, ctx.agree_tol()) {
                        return Ok(assemble(params, n_max, ctx, data));
                    }
                }
                prev = Some(data);
            }
            Err(e @ Error::NotPositiveDefinite { .. }) => {
                // Possibly just precision loss; retry at doubled bits.
                prev = None;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
        bits *= 2;
    }
    Err(match last_err {
        Some(Error::NotPositiveDefinite { n }) => Error::NotPositiveDefinite { n },
        _ => Error::PrecisionExhausted(format!(
            "h_{n_max} never stabilized up to {bits} bits (agree_tol {})",
            ctx.agree_tol()
        )),
    })
}

struct FactorData {
    wp: u32,
    h: Vec<Real>,
    p: Vec<Real>,
}

fn agrees(low: &FactorData, high: &FactorData, tol: f64) -> bool {
    for idx in [low.h.len() - 2, low.h.len() - 1] {
        let rel = Float::with_val(
            low.wp,
            Float::with_val(low.wp, &low.h[idx] - &high.h[idx]).abs() / &high.h[idx],
        );
        if rel > tol {
            return false;
        }
    }
    true
}

/// LDL^T factorization of the `(n_max+2)^2` Hankel matrix at precision `wp`.
/// Returns the diagonal (`h`) and the subleading coefficients (`p`).
fn factorize(params: &WeightParams, n_max: usize, wp: u32) -> Result<FactorData> {
    let size = n_max + 2;
    let table = MomentTable::build(params, size - 1, wp); // moments up to 2(n_max+1)
    let mut lower: Vec<Vec<Real>> = Vec::with_capacity(size); // strict lower part of L
    let mut lower_d: Vec<Vec<Real>> = Vec::with_capacity(size); // L[i][j] * d[j]
    let mut diag: Vec<Real> = Vec::with_capacity(size);
    for i in 0..size {
        let mut row = Vec::with_capacity(i);
        let mut row_d = Vec::with_capacity(i);
        for j in 0..i {
            let mut acc = Float::with_val(wp, table.m(i + j));
            for k in 0..j {
                acc -= Float::with_val(wp, &row[k] * &lower_d[j][k]);
            }
            // acc is L[i][j] * d[j] before the division.
            let lij = Float::with_val(wp, &acc / &diag[j]);
            row.push(lij);
            row_d.push(acc);
        }
        let mut d = Float::with_val(wp, table.m(2 * i));
        for k in 0..i {
            d -= Float::with_val(wp, &row[k] * &row_d[k]);
        }
        if !(d > 0) {
            return Err(Error::NotPositiveDefinite { n: i });
        }
        lower.push(row);
        lower_d.push(row_d);
        diag.push(d);
    }
    // p(n) = -L[n][n-1]: rows of L^{-1} hold the monic coefficients, and the
    // first subdiagonal of a unit-triangular inverse is the negated original.
    let mut p = Vec::with_capacity(size);
    p.push(Float::with_val(wp, 0));
    for n in 1..size {
        p.push(-lower[n][n - 1].clone());
    }
    Ok(FactorData { wp, h: diag, p })
}

fn assemble(
    params: &WeightParams,
    n_max: usize,
    ctx: &PrecisionContext,
    data: FactorData,
) -> OrthoSystem {
    let wp = data.wp;
    let mut alpha = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        alpha.push(Float::with_val(wp, &data.p[n] - &data.p[n + 1]));
    }
    let mut beta = Vec::with_capacity(n_max + 2);
    beta.push(Float::with_val(wp, 0));
    for n in 1..=n_max + 1 {
        beta.push(Float::with_val(wp, &data.h[n] / &data.h[n - 1]));
    }
    let mut log_d = Vec::with_capacity(n_max + 1);
    let mut acc = Float::with_val(wp, 0);
    for n in 0..=n_max {
        acc += data.h[n].clone().ln();
        log_d.push(acc.clone());
    }
    OrthoSystem {
        params: params.clone(),
        n_max,
        prec: wp,
        agree_tol: ctx.agree_tol(),
        h: data.h,
        alpha,
        beta,
        p: data.p,
        log_d,
    }
}

/// Stieltjes-procedure oracle: recurrence data from quadrature inner
/// products, never touching the moment table. Intended for `n_max <= 64`.
pub fn stieltjes_oracle(
    params: &WeightParams,
    n_max: usize,
    ctx: &PrecisionContext,
) -> Result<OrthoSystem> {
    let wp = ctx.working();
    // Truncation radius: tail mass of x^{2(n_max+1)} e^{-x^2} below 2^-wp.
    let mut radius = (((wp + 16) as f64) * std::f64::consts::LN_2).sqrt();
    for _ in 0..4 {
        radius = ((((wp + 16) as f64) * std::f64::consts::LN_2)
            + (2 * n_max + 2) as f64 * radius.max(1.0).ln())
        .sqrt();
    }
    let radius = radius.ceil() + 1.0;

    let rule = GaussLegendre::new(64, wp);
    let mut density = 1usize; // panels per unit length
    let mut prev: Option<StieltjesData> = None;
    loop {
        let data = stieltjes_attempt(params, n_max, wp, &rule, radius, density)?;
        if let Some(low) = &prev {
            let idx = n_max + 1;
            let rel = Float::with_val(
                wp,
                Float::with_val(wp, &low.h[idx] - &data.h[idx]).abs() / &data.h[idx],
            );
            if rel <= ctx.agree_tol() {
                let mut log_d = Vec::with_capacity(n_max + 1);
                let mut acc = Float::with_val(wp, 0);
                for n in 0..=n_max {
                    acc += data.h[n].clone().ln();
                    log_d.push(acc.clone());
                }
                // p(n) = -sum_{j<n} alpha_j
                let mut p = Vec::with_capacity(n_max + 2);
                let mut psum = Float::with_val(wp, 0);
                p.push(Float::with_val(wp, 0));
                for n in 0..=n_max {
                    psum -= &data.alpha[n];
                    p.push(psum.clone());
                }
                return Ok(OrthoSystem {
                    params: params.clone(),
                    n_max,
                    prec: wp,
                    agree_tol: ctx.agree_tol(),
                    h: data.h,
                    alpha: data.alpha,
                    beta: data.beta,
                    p,
                    log_d,
                });
            }
        }
        prev = Some(data);
        density *= 2;
        if density > 64 {
            return Err(Error::QuadratureNotConverged(format!(
                "Stieltjes panels stalled at density {density}/unit (radius {radius})"
            )));
        }
    }
}

struct StieltjesData {
    h: Vec<Real>,
    alpha: Vec<Real>,
    beta: Vec<Real>,
}

fn stieltjes_attempt(
    params: &WeightParams,
    n_max: usize,
    wp: u32,
    rule: &GaussLegendre,
    radius: f64,
    density: usize,
) -> Result<StieltjesData> {
    // Nodes and weights (quadrature weight times w(x)) over the three smooth
    // pieces; pieces whose constant factor vanishes contribute nothing.
    let consts = params.piece_constants(wp);
    let lo = Float::with_val(wp, -radius);
    let hi = Float::with_val(wp, radius);
    let mut xs: Vec<Real> = Vec::new();
    let mut ws: Vec<Real> = Vec::new();
    let pieces = [
        (lo.clone(), Float::with_val(wp, params.s1()), &consts[0]),
        (
            Float::with_val(wp, params.s1()),
            Float::with_val(wp, params.s2()),
            &consts[1],
        ),
        (Float::with_val(wp, params.s2()), hi.clone(), &consts[2]),
    ];
    for (a, b, factor) in pieces {
        if factor.is_zero() || !(b > a) {
            continue;
        }
        let len = Float::with_val(wp, &b - &a).to_f64();
        let panels = (len * density as f64).ceil().max(1.0) as usize;
        let width = Float::with_val(wp, &b - &a) / Float::with_val(wp, panels as f64);
        for k in 0..panels {
            let left = Float::with_val(
                wp,
                &a + Float::with_val(wp, &width * Float::with_val(wp, k as f64)),
            );
            let half = Float::with_val(wp, &width / 2u32);
            let mid = Float::with_val(wp, &left + &half);
            for (x, w) in rule.nodes_weights() {
                let t = Float::with_val(wp, &mid + Float::with_val(wp, &half * x));
                let gauss = (-Float::with_val(wp, &t * &t)).exp();
                let weight = Float::with_val(wp, &half * w) * gauss * factor;
                xs.push(t);
                ws.push(weight);
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::QuadratureNotConverged(
            "weight support is empty".into(),
        ));
    }

    let m = xs.len();
    let mut p_prev: Vec<Real> = vec![Float::with_val(wp, 0); m]; // P_{-1}
    let mut p_cur: Vec<Real> = vec![Float::with_val(wp, 1); m]; // P_0
    let mut h: Vec<Real> = Vec::with_capacity(n_max + 2);
    let mut alpha = Vec::with_capacity(n_max + 1);
    let mut beta = Vec::with_capacity(n_max + 2);
    beta.push(Float::with_val(wp, 0));
    for n in 0..=n_max + 1 {
        let mut norm = Float::with_val(wp, 0);
        let mut xnorm = Float::with_val(wp, 0);
        for i in 0..m {
            let p2 = Float::with_val(wp, &p_cur[i] * &p_cur[i]);
            let wp2 = Float::with_val(wp, &p2 * &ws[i]);
            norm += &wp2;
            xnorm += wp2 * &xs[i];
        }
        if !(norm > 0) {
            return Err(Error::QuadratureNotConverged(format!(
                "quadrature norm h_{n} not positive"
            )));
        }
        if n >= 1 {
            beta.push(Float::with_val(wp, &norm / &h[n - 1]));
        }
        let a_n = Float::with_val(wp, &xnorm / &norm);
        h.push(norm);
        if n <= n_max {
            alpha.push(a_n.clone());
            // Advance P_{n+1} = (x - alpha_n) P_n - beta_n P_{n-1} in place.
            let b_n = beta[n].clone();
            for i in 0..m {
                let next = Float::with_val(wp, &xs[i] - &a_n) * &p_cur[i]
                    - Float::with_val(wp, &b_n * &p_prev[i]);
                p_prev[i] = std::mem::replace(&mut p_cur[i], next);
            }
        }
    }
    Ok(StieltjesData { h, alpha, beta })
}
