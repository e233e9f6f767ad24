//! Gauss-Legendre panel quadrature at arbitrary precision.
//!
//! This is deliberately plain machinery: fixed-order Legendre rules whose
//! nodes are refined by Newton iteration at the target precision, applied on
//! uniform panels that are doubled until two successive refinements agree.
//! It backs the Stieltjes recurrence oracle and the quadrature oracles in the
//! test suites, so it must not share any code path with the closed-form
//! moment evaluation it is used to check (it only consumes `exp` and basic
//! arithmetic).

use crate::{Error, Result};
use rug::Float;

use crate::numerics::Real;

/// Gauss-Legendre rule of a fixed order on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    prec: u32,
    nodes: Vec<Real>,
    weights: Vec<Real>,
}

impl GaussLegendre {
    /// Nodes and weights at precision `prec`, by Newton refinement of the
    /// f64 Chebyshev initial guesses.
    pub fn new(order: usize, prec: u32) -> Self {
        assert!(order >= 2);
        let wp = prec + 16;
        let mut nodes = Vec::with_capacity(order);
        let mut weights = Vec::with_capacity(order);
        let pi = crate::numerics::pi(wp);
        for i in 0..order.div_ceil(2) {
            let guess =
                Float::with_val(wp, &pi * Float::with_val(wp, i as f64 + 0.75))
                    / Float::with_val(wp, order as f64 + 0.5);
            let mut x = guess.cos();
            // Quadratic convergence: ~log2(prec) iterations from a 53-bit seed.
            let iters = (wp as f64).log2().ceil() as usize + 3;
            for _ in 0..iters {
                let (p, d) = legendre_with_deriv(order, &x, wp);
                let step = p / &d;
                x -= step;
            }
            let (_, dp) = legendre_with_deriv(order, &x, wp);
            // w = 2 / ((1 - x^2) P'(x)^2)
            let one_minus_x2 = Float::with_val(wp, 1) - Float::with_val(wp, &x * &x);
            let w = Float::with_val(wp, 2) / (one_minus_x2 * Float::with_val(wp, &dp * &dp));
            nodes.push(x);
            weights.push(w);
        }
        // Mirror to the full symmetric rule (descending then ascending halves).
        let mut full_nodes = Vec::with_capacity(order);
        let mut full_weights = Vec::with_capacity(order);
        for i in 0..order {
            let j = if i < order / 2 { i } else { order - 1 - i };
            let x = if i < order / 2 {
                -nodes[j].clone()
            } else if order % 2 == 1 && i == order / 2 {
                Float::with_val(wp, 0)
            } else {
                nodes[j].clone()
            };
            full_nodes.push(x);
            full_weights.push(weights[j].clone());
        }
        Self {
            prec: wp,
            nodes: full_nodes,
            weights: full_weights,
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Nodes and weights on [-1, 1] (nodes ascending).
    pub fn nodes_weights(&self) -> impl Iterator<Item = (&Real, &Real)> {
        self.nodes.iter().zip(self.weights.iter())
    }

    /// Integral of `f` over `[a, b]` with a single application of the rule.
    pub fn integrate<F>(&self, f: &F, a: &Real, b: &Real) -> Real
    where
        F: Fn(&Real) -> Real,
    {
        let wp = self.prec;
        let half = Float::with_val(wp, b - a) / 2u32;
        let mid = Float::with_val(wp, a + b.clone()) / 2u32;
        let mut acc = Float::with_val(wp, 0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = Float::with_val(wp, &mid + Float::with_val(wp, &half * x));
            acc += w * f(&t);
        }
        acc * half
    }

    /// Integral over `[a, b]` split into `panels` uniform panels.
    pub fn integrate_panels<F>(&self, f: &F, a: &Real, b: &Real, panels: usize) -> Real
    where
        F: Fn(&Real) -> Real,
    {
        let wp = self.prec;
        let width = Float::with_val(wp, b - a) / Float::with_val(wp, panels as f64);
        let mut acc = Float::with_val(wp, 0);
        for k in 0..panels {
            let left = Float::with_val(wp, a + Float::with_val(wp, &width * Float::with_val(wp, k as f64)));
            let right = Float::with_val(wp, &left + &width);
            acc += self.integrate(f, &left, &right);
        }
        acc
    }
}

/// Legendre polynomial value and derivative by the three-term recurrence.
fn legendre_with_deriv(order: usize, x: &Real, wp: u32) -> (Real, Real) {
    let mut p_prev = Float::with_val(wp, 1);
    let mut p = Float::with_val(wp, x);
    for j in 1..order {
        let next = (Float::with_val(wp, (2 * j + 1) as f64) * Float::with_val(wp, x * &p)
            - Float::with_val(wp, j as f64) * &p_prev)
            / Float::with_val(wp, (j + 1) as f64);
        p_prev = p;
        p = next;
    }
    // P'_m(x) = m (x P_m - P_{m-1}) / (x^2 - 1)
    let num = Float::with_val(wp, order as f64)
        * (Float::with_val(wp, x * &p) - &p_prev);
    let den = Float::with_val(wp, x * x) - 1u32;
    let d = num / den;
    (p, d)
}

/// Adaptive panel refinement: doubles the panel count until two successive
/// refinements agree to `rel_tol` (relative to the magnitude of the finer
/// value, with an absolute floor for integrals that are genuinely zero).
pub fn adaptive_panels<F>(
    f: &F,
    a: &Real,
    b: &Real,
    rule: &GaussLegendre,
    rel_tol: &Real,
) -> Result<Real>
where
    F: Fn(&Real) -> Real,
{
    let wp = rule.prec();
    let mut panels = 1usize;
    let mut prev = rule.integrate_panels(f, a, b, panels);
    loop {
        panels *= 2;
        let next = rule.integrate_panels(f, a, b, panels);
        let diff = Float::with_val(wp, &next - &prev).abs();
        let scale = Float::with_val(wp, next.clone().abs()).max(&Float::with_val(wp, 1e-300));
        if diff <= Float::with_val(wp, rel_tol * &scale) {
            return Ok(next);
        }
        if panels > 1 << 14 {
            return Err(Error::QuadratureNotConverged(format!(
                "no agreement after {panels} panels on [{}, {}] (last defect {:e})",
                a.to_f64(),
                b.to_f64(),
                diff.to_f64()
            )));
        }
        prev = next;
    }
}

/// Oracle for the Gaussian tail `(2/sqrt(pi)) \int_x^inf e^{-t^2} dt`
/// (equals `erfc(x)`), by adaptive Gauss-Legendre panels on a truncated
/// interval whose tail mass is below the target precision.
pub fn gaussian_tail_oracle(x: &Real, prec: u32) -> Real {
    let wp = prec + 24;
    // e^{-(x+L)^2} / e^{-x^2} <= e^{-L^2} < 2^{-wp-8} once L^2 > (wp+8) ln 2.
    let span = ((wp as f64 + 8.0) * std::f64::consts::LN_2).sqrt().ceil() + 1.0;
    let upper = Float::with_val(wp, x + Float::with_val(wp, span));
    let rule = GaussLegendre::new(64, wp);
    let f = |t: &Real| -> Real { (-Float::with_val(wp, t * t)).exp() };
    let tol = Float::with_val(wp, Float::i_exp(1, -(prec as i32 + 8)));
    let integral = adaptive_panels(&f, x, &upper, &rule, &tol)
        .expect("gaussian tail integral must converge");
    Float::with_val(wp, 2) * integral / crate::numerics::sqrt_pi(wp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rel_residual, sqrt_pi};

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        // Order m is exact through degree 2m-1.
        let rule = GaussLegendre::new(8, 128);
        let wp = rule.prec();
        let f = |x: &Real| -> Real {
            // x^14 - 3 x^5 + 2
            let x2 = Float::with_val(wp, x * x);
            let x4 = Float::with_val(wp, &x2 * &x2);
            let x5 = Float::with_val(wp, &x4 * x);
            let x14 = Float::with_val(wp, &x4 * &x4) * Float::with_val(wp, &x4 * &x2);
            x14 - 3u32 * x5 + 2u32
        };
        let a = Float::with_val(wp, -1);
        let b = Float::with_val(wp, 1);
        let got = rule.integrate(&f, &a, &b);
        // exact: 2/15 + 0 + 4
        let exact = Float::with_val(wp, 2) / 15u32 + 4u32;
        assert!(rel_residual(&got, &exact) < 1e-30);
    }

    #[test]
    fn adaptive_panels_hit_gaussian_mass() {
        let prec = 256;
        let rule = GaussLegendre::new(64, prec);
        let wp = rule.prec();
        let f = |t: &Real| -> Real { (-Float::with_val(wp, t * t)).exp() };
        let span = Float::with_val(wp, 15);
        let a = -span.clone();
        let tol = Float::with_val(wp, Float::i_exp(1, -260));
        let got = adaptive_panels(&f, &a, &span, &rule, &tol).unwrap();
        let exact = sqrt_pi(wp);
        // Stops once refinements agree to the 2^-260 target; the 272-bit
        // rule arithmetic floors the achievable defect near 1e-80.
        let resid = rel_residual(&got, &exact);
        assert!(resid < 1e-78, "residual {resid:e}");
    }
}
