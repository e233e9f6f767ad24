//! Weight parameters, closed-form moments of the Gaussian weight with two
//! jumps, and the partition constant.
//!
//! The weight is `w(x; s1, s2) = e^{-x^2} (A + B1 theta(x-s1) + B2 theta(x-s2))`
//! with `s1 < s2`; it is piecewise `const * e^{-x^2}` on the three intervals
//! cut by the jump locations. All Hankel-matrix entries reduce to the
//! incomplete Gaussian moments `I_k(s) = \int_s^inf x^k e^{-x^2} dx`, which
//! satisfy a two-step recurrence seeded by `erfc` and a pure Gaussian.

use crate::numerics::{eval_erfc, sqrt_pi, PrecisionContext, Real};
use crate::{Error, Result};
use rug::Float;

/// Strict mode enforces the standing assumption `B1 * B2 != 0`; relaxed mode
/// admits degenerate single-jump (or jump-free) configurations used by the
/// reduction tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Relaxed,
}

/// The five weight parameters. Jump locations are carried at full precision
/// because the differential identities perturb them; the amplitudes are plain
/// `f64` (they are never perturbed and lift exactly).
#[derive(Debug, Clone)]
pub struct WeightParams {
    a: f64,
    b1: f64,
    b2: f64,
    s1: Real,
    s2: Real,
    mode: Mode,
}

impl WeightParams {
    pub fn new(a: f64, b1: f64, b2: f64, s1: f64, s2: f64, mode: Mode) -> Result<Self> {
        let p = Self {
            a,
            b1,
            b2,
            s1: Float::with_val(64, s1),
            s2: Float::with_val(64, s2),
            mode,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn strict(a: f64, b1: f64, b2: f64, s1: f64, s2: f64) -> Result<Self> {
        Self::new(a, b1, b2, s1, s2, Mode::Strict)
    }

    pub fn relaxed(a: f64, b1: f64, b2: f64, s1: f64, s2: f64) -> Result<Self> {
        Self::new(a, b1, b2, s1, s2, Mode::Relaxed)
    }

    /// The "no eigenvalues in (s1, s2)" gap weight: (A, B1, B2) = (1, -1, 1).
    pub fn gap_none(s1: f64, s2: f64) -> Result<Self> {
        Self::strict(1.0, -1.0, 1.0, s1, s2)
    }

    /// The "all eigenvalues in (s1, s2)" gap weight: (A, B1, B2) = (0, 1, -1).
    pub fn gap_all(s1: f64, s2: f64) -> Result<Self> {
        Self::strict(0.0, 1.0, -1.0, s1, s2)
    }

    /// Same amplitudes at different jump locations (used by the rebuild
    /// machinery that realizes s-derivatives). The given endpoints are taken
    /// as exact values at whatever precision they carry.
    pub fn with_endpoints(&self, s1: Real, s2: Real) -> Result<Self> {
        let p = Self {
            a: self.a,
            b1: self.b1,
            b2: self.b2,
            s1,
            s2,
            mode: self.mode,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s1 < self.s2) {
            return Err(Error::InvalidParams(format!(
                "jump locations must satisfy s1 < s2, got s1 = {}, s2 = {}",
                self.s1.to_f64(),
                self.s2.to_f64()
            )));
        }
        let (a, ab1, ab12) = (self.a, self.a + self.b1, self.a + self.b1 + self.b2);
        if a < 0.0 || ab1 < 0.0 || ab12 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "weight must be nonnegative: need A, A+B1, A+B1+B2 >= 0, got {a}, {ab1}, {ab12}"
            )));
        }
        if a == 0.0 && ab1 == 0.0 && ab12 == 0.0 {
            return Err(Error::InvalidParams("weight vanishes identically".into()));
        }
        if self.mode == Mode::Strict && (self.b1 == 0.0 || self.b2 == 0.0) {
            return Err(Error::InvalidParams(
                "strict mode requires B1 * B2 != 0 (use relaxed mode for degenerate jumps)".into(),
            ));
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b1(&self) -> f64 {
        self.b1
    }
    pub fn b2(&self) -> f64 {
        self.b2
    }
    pub fn s1(&self) -> &Real {
        &self.s1
    }
    pub fn s2(&self) -> &Real {
        &self.s2
    }
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Jump amplitude by side index (1 or 2).
    pub fn b(&self, index: usize) -> f64 {
        match index {
            1 => self.b1,
            2 => self.b2,
            _ => panic!("jump index must be 1 or 2"),
        }
    }

    /// Jump location by side index (1 or 2).
    pub fn s(&self, index: usize) -> &Real {
        match index {
            1 => &self.s1,
            2 => &self.s2,
            _ => panic!("jump index must be 1 or 2"),
        }
    }

    /// Piecewise factors (A, A+B1, A+B1+B2) on (-inf,s1), (s1,s2), (s2,inf).
    pub fn piece_constants(&self, prec: u32) -> [Real; 3] {
        let a = Float::with_val(prec, self.a);
        let ab1 = Float::with_val(prec, &a + Float::with_val(prec, self.b1));
        let ab12 = Float::with_val(prec, &ab1 + Float::with_val(prec, self.b2));
        [a, ab1, ab12]
    }

    /// Pointwise weight value at `x`'s precision (jump points take the value
    /// from the left, consistent with `theta(0) = 0`).
    pub fn eval(&self, x: &Real) -> Real {
        let prec = x.prec();
        let mut factor = Float::with_val(prec, self.a);
        if *x > self.s1 {
            factor += Float::with_val(prec, self.b1);
        }
        if *x > self.s2 {
            factor += Float::with_val(prec, self.b2);
        }
        let gauss = (-Float::with_val(prec, x * x)).exp();
        factor * gauss
    }

    /// Reflection `x -> -x` of the weight:
    /// `(A, B1, B2, s1, s2) -> (A+B1+B2, -B2, -B1, -s2, -s1)`.
    /// Moments of the mirrored weight equal `(-1)^k` times the originals.
    pub fn mirrored(&self) -> Self {
        Self {
            a: self.a + self.b1 + self.b2,
            b1: -self.b2,
            b2: -self.b1,
            s1: -self.s2.clone(),
            s2: -self.s1.clone(),
            mode: self.mode,
        }
    }
}

/// Full Gaussian moment `G_k = \int_{-inf}^{inf} x^k e^{-x^2} dx`:
/// zero for odd k, `sqrt(pi) (k-1)!! / 2^{k/2}` for even k.
pub fn gaussian_moment(k: usize, prec: u32) -> Real {
    if k % 2 == 1 {
        return Float::with_val(prec, 0);
    }
    // (k-1)!! = 1 * 3 * ... * (k-1), empty product for k = 0.
    let mut dfact = Float::with_val(prec, 1);
    let mut j = 1usize;
    while j < k {
        dfact *= Float::with_val(prec, j as f64);
        j += 2;
    }
    (sqrt_pi(prec) * dfact) >> (k as u32 / 2)
}

/// Incomplete Gaussian moments `I_0(s), ..., I_kmax(s)` in one pass of the
/// recurrence `I_k = s^{k-1} e^{-s^2} / 2 + ((k-1)/2) I_{k-2}`, seeded by
/// `I_0 = (sqrt(pi)/2) erfc(s)` and `I_1 = e^{-s^2} / 2`.
pub fn incomplete_moments_upto(kmax: usize, s: &Real, prec: u32) -> Vec<Real> {
    let wp = prec + 16;
    let ctx = PrecisionContext::new(wp.max(64), 0.5).expect("internal context");
    let s = Float::with_val(wp, s);
    let gauss = (-Float::with_val(wp, &s * &s)).exp();
    let half_gauss = Float::with_val(wp, &gauss / 2u32);

    let mut out = Vec::with_capacity(kmax + 1);
    out.push(Float::with_val(wp, sqrt_pi(wp) * eval_erfc(&s, &ctx)) / 2u32);
    if kmax >= 1 {
        out.push(half_gauss.clone());
    }
    let mut s_pow = Float::with_val(wp, &s); // s^{k-1} for k = 2
    for k in 2..=kmax {
        let boundary = Float::with_val(wp, &s_pow * &half_gauss);
        let tail = Float::with_val(wp, (k - 1) as f64 / 2.0) * &out[k - 2];
        out.push(boundary + tail);
        s_pow *= &s;
    }
    out
}

/// Single incomplete moment `I_k(s) = \int_s^inf x^k e^{-x^2} dx`.
pub fn incomplete_moment(k: usize, s: &Real, ctx: &PrecisionContext) -> Real {
    let chain = incomplete_moments_upto(k, s, ctx.working());
    ctx.round_back(chain[k].clone())
}

/// Hankel-entry moment `m_k = A G_k + B1 I_k(s1) + B2 I_k(s2)`.
pub fn moment(k: usize, params: &WeightParams, ctx: &PrecisionContext) -> Real {
    let wp = ctx.working();
    let i1 = incomplete_moments_upto(k, params.s1(), wp);
    let i2 = incomplete_moments_upto(k, params.s2(), wp);
    let m = Float::with_val(wp, params.a()) * gaussian_moment(k, wp)
        + Float::with_val(wp, params.b1()) * &i1[k]
        + Float::with_val(wp, params.b2()) * &i2[k];
    ctx.round_back(m)
}

/// Moments `m_0, ..., m_{2 n_max}` of the weight at a fixed precision.
#[derive(Debug, Clone)]
pub struct MomentTable {
    params: WeightParams,
    moments: Vec<Real>,
    n_max: usize,
}

impl MomentTable {
    /// Builds the table at (raw) precision `prec`; entries are kept slightly
    /// above `prec` so downstream factorizations can treat them as exact.
    pub fn build(params: &WeightParams, n_max: usize, prec: u32) -> Self {
        let wp = prec + 16;
        let kmax = 2 * n_max;
        let i1 = incomplete_moments_upto(kmax, params.s1(), wp);
        let i2 = incomplete_moments_upto(kmax, params.s2(), wp);
        let moments = (0..=kmax)
            .map(|k| {
                Float::with_val(wp, params.a()) * gaussian_moment(k, wp)
                    + Float::with_val(wp, params.b1()) * &i1[k]
                    + Float::with_val(wp, params.b2()) * &i2[k]
            })
            .collect();
        Self {
            params: params.clone(),
            moments,
            n_max,
        }
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn m(&self, k: usize) -> &Real {
        &self.moments[k]
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }
}

/// Partition constant `C_n = (2 pi)^{n/2} 2^{-n^2/2} prod_{k=1}^{n-1} k!`.
pub fn partition_constant(n: usize, ctx: &PrecisionContext) -> Real {
    assert!(n >= 1, "partition constant defined for n >= 1");
    ctx.round_back(partition_constant_prec(n, ctx.working()))
}

fn partition_constant_prec(n: usize, wp: u32) -> Real {
    let two_pi = Float::with_val(wp, 2) * crate::numerics::pi(wp);
    // (2 pi)^{n/2}: integer power, square-rooted for odd n.
    let mut lead = Float::with_val(wp, 1);
    for _ in 0..(n / 2) {
        lead *= &two_pi;
    }
    if n % 2 == 1 {
        lead *= two_pi.sqrt();
    }
    // 2^{-n^2/2}: exact exponent shift, with a sqrt(2) correction for odd n^2.
    let n2 = n * n;
    let mut c = lead >> (n2 as u32 / 2);
    if n2 % 2 == 1 {
        c /= Float::with_val(wp, 2).sqrt();
    }
    let mut fact = Float::with_val(wp, 1);
    for k in 1..n {
        fact *= Float::with_val(wp, k as f64);
        c *= &fact;
    }
    c
}

/// `ln C_n`, for use against `ln D_n` when forming gap probabilities.
pub fn ln_partition_constant(n: usize, prec: u32) -> Real {
    partition_constant_prec(n, prec + 16).ln()
}
