//! Arbitrary-precision arithmetic contract, `erfc`, and finite-difference
//! directional derivatives.
//!
//! All later stages evaluate elementary formulas at a working precision a few
//! guard bits above the requested one and round back on return, so the
//! results behave like exact real arithmetic observed through a
//! `bits`-precision window. A [`PrecisionContext`] carries the requested
//! precision together with the relative agreement threshold used by the
//! adaptive re-run machinery in `ortho`.

use crate::{Error, Result};
use rug::float::Constant;
use rug::Float;

/// Arbitrary-precision real scalar (MPFR-backed).
///
/// Values carry their own precision; operations write into an explicit target
/// precision, so arithmetic is deterministic given (value, bits).
pub type Real = Float;

/// Number of guard bits added to the requested precision while evaluating
/// special functions and other kernels; absorbs series-truncation and
/// summation rounding before the final round-back.
pub const GUARD_BITS: u32 = 32;

/// Precision context: requested significand bits plus the relative agreement
/// threshold for adaptive re-runs at doubled precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionContext {
    bits: u32,
    agree_tol: f64,
}

impl PrecisionContext {
    /// `bits >= 64`, `agree_tol` in (0, 1).
    pub fn new(bits: u32, agree_tol: f64) -> Result<Self> {
        if bits < 64 {
            return Err(Error::InvalidContext(format!(
                "need at least 64 significand bits, got {bits}"
            )));
        }
        if !(agree_tol > 0.0 && agree_tol < 1.0) {
            return Err(Error::InvalidContext(format!(
                "agreement threshold must lie in (0, 1), got {agree_tol}"
            )));
        }
        Ok(Self { bits, agree_tol })
    }

    /// Context with the default agreement threshold `1e-20`.
    pub fn with_bits(bits: u32) -> Result<Self> {
        Self::new(bits, 1e-20)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn agree_tol(&self) -> f64 {
        self.agree_tol
    }

    /// Working precision used inside kernels before rounding back.
    pub fn working(&self) -> u32 {
        self.bits + GUARD_BITS
    }

    /// Same context at doubled precision (agreement re-runs).
    pub fn doubled(&self) -> Self {
        Self {
            bits: self.bits * 2,
            agree_tol: self.agree_tol,
        }
    }

    /// Lift an `f64` into a `Real` at this context's precision (exact: any
    /// finite `f64` is representable once `bits >= 64`).
    pub fn real(&self, v: f64) -> Real {
        Float::with_val(self.bits, v)
    }

    /// Lift at working precision.
    pub fn wreal(&self, v: f64) -> Real {
        Float::with_val(self.working(), v)
    }

    /// Round a value back to this context's precision.
    pub fn round_back(&self, mut v: Real) -> Real {
        v.set_prec(self.bits);
        v
    }

    /// Default finite-difference step `2^(-bits/4) * max(1, |point|_inf)`,
    /// balancing truncation against roundoff at this precision.
    pub fn default_step(&self, point: (&Real, &Real)) -> Real {
        let wp = self.working();
        let mut scale = Float::with_val(wp, 1);
        for c in [point.0, point.1] {
            let a = c.clone().abs();
            if a > scale {
                scale = Float::with_val(wp, a);
            }
        }
        scale * Float::with_val(wp, Float::i_exp(1, -((self.bits / 4) as i32)))
    }
}

/// `pi` at the given precision.
pub fn pi(prec: u32) -> Real {
    Float::with_val(prec, Constant::Pi)
}

/// `sqrt(pi)` at the given precision.
pub fn sqrt_pi(prec: u32) -> Real {
    pi(prec).sqrt()
}

/// Relative residual `|lhs - rhs| / max(1, |lhs|, |rhs|)`.
pub fn rel_residual(lhs: &Real, rhs: &Real) -> Real {
    let prec = lhs.prec().max(rhs.prec());
    let abs = Float::with_val(prec, lhs - rhs).abs();
    let mut denom = Float::with_val(prec, 1);
    for v in [lhs, rhs] {
        let a = v.clone().abs();
        if a > denom {
            denom = Float::with_val(prec, a);
        }
    }
    abs / denom
}

/// Complementary error function at the context precision.
///
/// Taylor series of `erf` for `|x| <= 1.5`, Stieltjes continued fraction for
/// `x > 1.5`, reflection `erfc(-x) = 2 - erfc(x)` for `x < -1.5`; all at
/// extended working precision. Total on finite input.
pub fn eval_erfc(x: &Real, ctx: &PrecisionContext) -> Real {
    assert!(x.is_finite(), "eval_erfc: non-finite argument");
    let wp = ctx.working() + 16;
    if *x == 0 {
        return ctx.real(1.0);
    }
    let ax = Float::with_val(wp, x.clone().abs());
    let value = if ax <= 1.5f64 {
        let one = Float::with_val(wp, 1);
        one - erf_taylor(x, wp)
    } else if *x > 0 {
        erfc_continued_fraction(&ax, wp)
    } else {
        // x < -1.5: reflection; erfc(|x|) is tiny so no cancellation.
        let tail = erfc_continued_fraction(&ax, wp);
        Float::with_val(wp, 2) - tail
    };
    ctx.round_back(value)
}

/// Taylor series `erf(x) = (2/sqrt(pi)) sum_k (-1)^k x^(2k+1) / (k! (2k+1))`.
fn erf_taylor(x: &Real, wp: u32) -> Real {
    // Cancellation loses ~ 2 x^2 log2(e) bits; boost the working precision so
    // the series remains accurate even if a caller strays past |x| = 1.5.
    let xf = x.to_f64().abs();
    let boost = (2.0 * xf * xf * std::f64::consts::LOG2_E).ceil() as u32 + 16;
    let p = wp + boost;
    let x = Float::with_val(p, x);
    let x2 = Float::with_val(p, &x * &x);
    let mut term = x.clone(); // (-1)^k x^(2k+1) / k!
    let mut sum = x.clone();
    let eps = Float::with_val(p, Float::i_exp(1, -(p as i32 - 4)));
    let mut k: u32 = 1;
    loop {
        term = -term * &x2 / k;
        sum += Float::with_val(p, &term / (2 * k + 1));
        let bound = Float::with_val(p, &sum * &eps).abs();
        if term.clone().abs() < bound {
            break;
        }
        k += 1;
        assert!(k < 10_000_000, "erf_taylor failed to converge");
    }
    let two_over_sqrt_pi = Float::with_val(p, 2) / sqrt_pi(p);
    let mut out = sum * two_over_sqrt_pi;
    out.set_prec(wp);
    out
}

/// Stieltjes continued fraction for `x > 1.5`:
/// `sqrt(pi) e^(x^2) erfc(x) = 1 / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated with the modified Lentz algorithm.
fn erfc_continued_fraction(x: &Real, wp: u32) -> Real {
    let xf = x.to_f64();
    // Empirical iteration count ~ (wp ln2)^2 / (16 x^2); cap generously.
    let est = ((wp as f64) * std::f64::consts::LN_2).powi(2) / (16.0 * xf * xf);
    let cap = 10_000 + 4 * est.ceil() as u64;

    let tiny = Float::with_val(wp, Float::i_exp(1, -(2 * wp as i32)));
    let eps = Float::with_val(wp, Float::i_exp(1, -(wp as i32 - 8)));
    let mut f = Float::with_val(wp, x);
    let mut c = f.clone();
    let mut d = Float::with_val(wp, 0);
    let mut k: u64 = 0;
    loop {
        k += 1;
        let a = Float::with_val(wp, k) / 2u32;
        d = Float::with_val(wp, x + &a * &d);
        if d == 0 {
            d = tiny.clone();
        }
        let a_over_c = Float::with_val(wp, &a / &c);
        c = Float::with_val(wp, x + &a_over_c);
        if c == 0 {
            c = tiny.clone();
        }
        d = d.recip();
        let delta = Float::with_val(wp, &c * &d);
        f *= &delta;
        let dev = Float::with_val(wp, &delta - 1u32).abs();
        if dev < eps {
            break;
        }
        if k > cap {
            // The fraction converges for all x > 1.5; this path exists so the
            // function stays total even on inputs far outside the tuned range.
            return Float::with_val(wp, 1) - erf_taylor(&Float::with_val(wp, x), wp);
        }
    }
    let gauss = Float::with_val(wp, x * x).exp(); // e^(x^2)
    Float::with_val(wp, 1) / (sqrt_pi(wp) * gauss * f)
}

/// Richardson-extrapolated directional derivative.
///
/// `coarse`/`fine` are the raw central-difference estimates at steps `h` and
/// `h/2`; `value` eliminates their leading error term and `error_estimate` is
/// the extrapolation defect `|value - fine|`.
#[derive(Debug, Clone)]
pub struct DiffEstimate {
    pub value: Real,
    pub error_estimate: Real,
    pub coarse: Real,
    pub fine: Real,
}

/// First or second directional derivative of `f(s1, s2)` at `point` along
/// `direction`, by central differences at steps `{h, h/2}` with Richardson
/// extrapolation.
///
/// Fails with [`Error::StepUnderflow`] if `step < 2^(-bits/2)`, where
/// cancellation would dominate the estimate.
pub fn directional_diff<F>(
    f: F,
    point: (&Real, &Real),
    direction: (&Real, &Real),
    step: &Real,
    order: u8,
    ctx: &PrecisionContext,
) -> Result<DiffEstimate>
where
    F: Fn(&Real, &Real) -> Result<Real>,
{
    assert!(order == 1 || order == 2, "directional_diff: order must be 1 or 2");
    let floor_bits = ctx.bits() / 2;
    let floor = Float::with_val(64, Float::i_exp(1, -(floor_bits as i32)));
    if !(*step > 0) || *step < floor {
        return Err(Error::StepUnderflow {
            step: step.to_f64(),
            floor_bits,
        });
    }

    let wp = ctx.working();
    let at = |scale: &Real| -> Result<Real> {
        let s1 = Float::with_val(wp, point.0 + Float::with_val(wp, scale * direction.0));
        let s2 = Float::with_val(wp, point.1 + Float::with_val(wp, scale * direction.1));
        f(&s1, &s2)
    };

    let h = Float::with_val(wp, step);
    let h2 = Float::with_val(wp, &h / 2u32);
    let raw = |hh: &Real| -> Result<Real> {
        let plus = at(hh)?;
        let minus = at(&(-hh.clone()))?;
        Ok(match order {
            1 => Float::with_val(wp, &plus - &minus) / Float::with_val(wp, 2 * hh.clone()),
            _ => {
                let center = at(&Float::with_val(wp, 0))?;
                let num = plus - 2u32 * center + minus;
                num / Float::with_val(wp, hh * hh)
            }
        })
    };

    // Central differences of either order have an even error expansion in h,
    // so one 4:1 Richardson step removes the h^2 term.
    let coarse = raw(&h)?;
    let fine = raw(&h2)?;
    let value = (Float::with_val(wp, 4 * fine.clone()) - &coarse) / 3u32;
    let error_estimate = Float::with_val(wp, &value - &fine).abs();
    Ok(DiffEstimate {
        value: ctx.round_back(value),
        error_estimate: ctx.round_back(error_estimate),
        coarse: ctx.round_back(coarse),
        fine: ctx.round_back(fine),
    })
}
