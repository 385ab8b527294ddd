//! Moment envelopes (ν-functions), their norms and the moment/tail
//! conversion formulas.
//!
//! An envelope is a positive function `p ↦ ν(p)` that is finite on a support
//! interval starting at `lower ≥ 1` and `+∞` beyond it. A random variable
//! `ξ` is dominated by `ν` when `|ξ|_p = (E|ξ|^p)^(1/p) ≤ ν(p)` on the
//! support; the smallest such multiple is the envelope norm of `ξ`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{integrate, integrate_to_infinity, interp_log_linear};

/// Interval `[lower, upper)` (or `[lower, upper]`) on which an envelope is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub lower: f64,
    pub upper: f64,
    pub upper_closed: bool,
}

impl SupportInterval {
    pub fn new(lower: f64, upper: f64, upper_closed: bool) -> Result<Self> {
        if !lower.is_finite() || lower < 1.0 {
            return Err(Error::InvalidParameter(format!("support lower {lower} must be finite and >= 1")));
        }
        if upper.is_nan() || upper <= lower {
            return Err(Error::InvalidParameter(format!("support upper {upper} must exceed lower {lower}")));
        }
        Ok(Self { lower, upper, upper_closed: upper_closed && upper.is_finite() })
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.lower && (p < self.upper || (self.upper_closed && p == self.upper))
    }
}

/// A positive slowly varying function `L`, evaluated at `max(x, 1)`.
#[derive(Clone)]
pub enum SlowlyVarying {
    Constant(f64),
    /// `x ↦ (1 + ln x)^κ`.
    LogPower(f64),
    /// Pointwise maximum.
    Max(Vec<SlowlyVarying>),
    /// Pointwise product.
    Product(Vec<SlowlyVarying>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl SlowlyVarying {
    pub const ONE: SlowlyVarying = SlowlyVarying::Constant(1.0);

    pub fn eval(&self, x: f64) -> f64 {
        let x = if x.is_nan() { 1.0 } else { x.max(1.0) };
        match self {
            SlowlyVarying::Constant(c) => *c,
            SlowlyVarying::LogPower(k) => (1.0 + x.ln()).powf(*k),
            SlowlyVarying::Max(ls) => ls.iter().map(|l| l.eval(x)).fold(f64::NEG_INFINITY, f64::max),
            SlowlyVarying::Product(ls) => ls.iter().map(|l| l.eval(x)).product(),
            SlowlyVarying::Custom(f) => f(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            SlowlyVarying::Constant(_) => true,
            SlowlyVarying::LogPower(k) => *k == 0.0,
            SlowlyVarying::Max(ls) | SlowlyVarying::Product(ls) => ls.iter().all(|l| l.is_constant()),
            SlowlyVarying::Custom(_) => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SlowlyVarying::Constant(c) if !(c.is_finite() && *c > 0.0) => {
                Err(Error::InvalidParameter(format!("slowly varying constant {c} must be positive")))
            }
            SlowlyVarying::LogPower(k) if !k.is_finite() => {
                Err(Error::InvalidParameter("log-power exponent must be finite".into()))
            }
            SlowlyVarying::Max(ls) | SlowlyVarying::Product(ls) => {
                if ls.is_empty() {
                    return Err(Error::InvalidParameter("empty slowly varying combination".into()));
                }
                ls.iter().try_for_each(|l| l.validate())
            }
            _ => Ok(()),
        }
    }
}

impl Default for SlowlyVarying {
    fn default() -> Self {
        SlowlyVarying::ONE
    }
}

impl fmt::Debug for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlowlyVarying::Constant(c) => write!(f, "Constant({c})"),
            SlowlyVarying::LogPower(k) => write!(f, "LogPower({k})"),
            SlowlyVarying::Max(ls) => f.debug_tuple("Max").field(ls).finish(),
            SlowlyVarying::Product(ls) => f.debug_tuple("Product").field(ls).finish(),
            SlowlyVarying::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Tabulated envelope values, stored as `ln ν` on an increasing p-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    ps: Vec<f64>,
    ln_values: Vec<f64>,
}

impl Table {
    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.ln_values.iter().map(|v| v.exp())
    }
}

#[derive(Debug, Clone)]
pub enum EnvelopeForm {
    /// `p ↦ C·(r−p)^(−Δ)·L(1/(r−p))`.
    PowerSingularity { scale: f64, r: f64, delta: f64, slowly: SlowlyVarying },
    /// `p ↦ [C·(r−p)^(−Δ)·L(1/(r−p))]^(1/p)`: the norm form of a p-th moment
    /// that blows up like a power of the gap.
    MomentSingularity { scale: f64, r: f64, exponent: f64, slowly: SlowlyVarying },
    /// `p ↦ C·p^μ·L(p)`, finite for every p.
    PowerGrowth { scale: f64, mu: f64, slowly: SlowlyVarying },
    /// `1` on `[lower, r]`, `+∞` beyond.
    Indicator { r: f64 },
    /// Log-linear interpolation between grid points, `+∞` outside the grid.
    Tabulated(Table),
    Scaled { inner: Box<MomentEnvelope>, factor: f64 },
    Product(Vec<MomentEnvelope>),
    /// Doob maximal factor `p/(p−1)` applied to the inner envelope.
    DoobMaximal(Box<MomentEnvelope>),
}

/// A moment envelope: support plus functional form.
#[derive(Debug, Clone)]
pub struct MomentEnvelope {
    support: SupportInterval,
    form: EnvelopeForm,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be finite and positive")))
    }
}

impl MomentEnvelope {
    pub fn indicator(r: f64) -> Result<Self> {
        check_positive("r", r)?;
        Ok(Self { support: SupportInterval::new(1.0, r, true)?, form: EnvelopeForm::Indicator { r } })
    }

    pub fn power_singularity(scale: f64, r: f64, delta: f64, slowly: SlowlyVarying) -> Result<Self> {
        check_positive("scale", scale)?;
        check_positive("r", r)?;
        check_positive("delta", delta)?;
        slowly.validate()?;
        Ok(Self {
            support: SupportInterval::new(1.0, r, false)?,
            form: EnvelopeForm::PowerSingularity { scale, r, delta, slowly },
        })
    }

    pub fn moment_singularity(scale: f64, r: f64, exponent: f64, slowly: SlowlyVarying) -> Result<Self> {
        check_positive("scale", scale)?;
        check_positive("r", r)?;
        if !exponent.is_finite() {
            return Err(Error::InvalidParameter("exponent must be finite".into()));
        }
        slowly.validate()?;
        Ok(Self {
            support: SupportInterval::new(1.0, r, false)?,
            form: EnvelopeForm::MomentSingularity { scale, r, exponent, slowly },
        })
    }

    pub fn power_growth(scale: f64, mu: f64, slowly: SlowlyVarying) -> Result<Self> {
        check_positive("scale", scale)?;
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::InvalidParameter(format!("mu = {mu} must be finite and >= 0")));
        }
        slowly.validate()?;
        Ok(Self {
            support: SupportInterval::new(1.0, f64::INFINITY, false)?,
            form: EnvelopeForm::PowerGrowth { scale, mu, slowly },
        })
    }

    /// Tabulated envelope from `(p, ν(p))` pairs; the support is the closed
    /// grid range.
    pub fn tabulated(ps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ps.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if ps.len() != values.len() {
            return Err(Error::InvalidParameter("grid and value lengths differ".into()));
        }
        if !ps.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("tabulation grid must be strictly increasing".into()));
        }
        for v in &values {
            check_positive("tabulated value", *v)?;
        }
        let upper = if ps.len() == 1 { ps[0] + f64::EPSILON * ps[0].max(1.0) } else { ps[ps.len() - 1] };
        let support = SupportInterval::new(ps[0], upper, true)?;
        let ln_values = values.iter().map(|v| v.ln()).collect();
        Ok(Self { support, form: EnvelopeForm::Tabulated(Table { ps, ln_values }) })
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        check_positive("factor", factor)?;
        Ok(Self { support: self.support, form: EnvelopeForm::Scaled { inner: Box::new(self), factor } })
    }

    /// Pointwise product; support is the intersection.
    pub fn product(factors: Vec<MomentEnvelope>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("empty product".into()));
        }
        let lower = factors.iter().map(|e| e.support.lower).fold(1.0, f64::max);
        let upper = factors.iter().map(|e| e.support.upper).fold(f64::INFINITY, f64::min);
        let closed = factors
            .iter()
            .filter(|e| e.support.upper == upper)
            .all(|e| e.support.upper_closed);
        Ok(Self { support: SupportInterval::new(lower, upper, closed)?, form: EnvelopeForm::Product(factors) })
    }

    pub fn doob_maximal(inner: MomentEnvelope) -> Self {
        Self { support: inner.support, form: EnvelopeForm::DoobMaximal(Box::new(inner)) }
    }

    /// Same form with a different support lower endpoint.
    pub fn with_lower(mut self, lower: f64) -> Result<Self> {
        self.support = SupportInterval::new(lower, self.support.upper, self.support.upper_closed)?;
        Ok(self)
    }

    pub fn support(&self) -> SupportInterval {
        self.support
    }

    pub fn form(&self) -> &EnvelopeForm {
        &self.form
    }

    /// Upper end of the region where evaluation is finite, and whether that
    /// end itself is finite.
    pub fn finite_upper(&self) -> (f64, bool) {
        match &self.form {
            EnvelopeForm::Tabulated(t) => (t.ps[t.ps.len() - 1].min(self.support.upper), true),
            EnvelopeForm::Scaled { inner, .. } | EnvelopeForm::DoobMaximal(inner) => {
                let (u, c) = inner.finite_upper();
                if u < self.support.upper {
                    (u, c)
                } else {
                    (self.support.upper, self.support.upper_closed)
                }
            }
            EnvelopeForm::Product(fs) => {
                let mut best = (self.support.upper, self.support.upper_closed);
                for f in fs {
                    let (u, c) = f.finite_upper();
                    if u < best.0 || (u == best.0 && !c) {
                        best = (u, c);
                    }
                }
                best
            }
            _ => (self.support.upper, self.support.upper_closed),
        }
    }

    /// `ln ν(p)`, `+∞` outside the support.
    pub fn ln_eval(&self, p: f64) -> Result<f64> {
        if !p.is_finite() {
            return Err(Error::NonFinite("moment order p"));
        }
        if p < 1.0 {
            return Err(Error::Domain { p, reason: "p must be >= 1" });
        }
        if !self.support.contains(p) {
            return Ok(f64::INFINITY);
        }
        self.ln_eval_inside(p)
    }

    fn ln_eval_inside(&self, p: f64) -> Result<f64> {
        Ok(match &self.form {
            EnvelopeForm::PowerSingularity { scale, r, delta, slowly } => {
                let gap = r - p;
                if gap <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                scale.ln() - delta * gap.ln() + slowly.eval(1.0 / gap).ln()
            }
            EnvelopeForm::MomentSingularity { scale, r, exponent, slowly } => {
                let gap = r - p;
                if gap <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                (scale.ln() - exponent * gap.ln() + slowly.eval(1.0 / gap).ln()) / p
            }
            EnvelopeForm::PowerGrowth { scale, mu, slowly } => scale.ln() + mu * p.ln() + slowly.eval(p).ln(),
            EnvelopeForm::Indicator { .. } => 0.0,
            EnvelopeForm::Tabulated(t) => interp_log_linear(&t.ps, &t.ln_values, p).unwrap_or(f64::INFINITY),
            EnvelopeForm::Scaled { inner, factor } => factor.ln() + inner.ln_eval(p)?,
            EnvelopeForm::Product(fs) => {
                let mut s = 0.0;
                for f in fs {
                    s += f.ln_eval(p)?;
                }
                s
            }
            EnvelopeForm::DoobMaximal(inner) => {
                if p <= 1.0 {
                    return Err(Error::Domain { p, reason: "Doob factor p/(p-1) needs p > 1" });
                }
                (p / (p - 1.0)).ln() + inner.ln_eval(p)?
            }
        })
    }

    /// `ν(p)`; `+∞` outside the support.
    pub fn eval(&self, p: f64) -> Result<f64> {
        self.ln_eval(p).map(f64::exp)
    }

    /// Samples the envelope on `grid` into a tabulated envelope.
    pub fn tabulate(&self, grid: &[f64]) -> Result<MomentEnvelope> {
        let mut values = Vec::with_capacity(grid.len());
        for &p in grid {
            let v = self.eval(p)?;
            if !v.is_finite() {
                return Err(Error::GridOutsideSupport { p, upper: self.support.upper });
            }
            values.push(v);
        }
        MomentEnvelope::tabulated(grid.to_vec(), values)
    }
}

/// `ν(p)` for an envelope; see [`MomentEnvelope::eval`].
pub fn eval_envelope(env: &MomentEnvelope, p: f64) -> Result<f64> {
    env.eval(p)
}

/// Envelope norm on a grid: `max_p moments(p) / ν(p)`.
///
/// This is a lower bound of the supremum over the whole support and can
/// only grow as the grid is refined.
pub fn gls_norm(moments: impl Fn(f64) -> f64, env: &MomentEnvelope, p_grid: &[f64]) -> Result<f64> {
    if p_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best: f64 = 0.0;
    for &p in p_grid {
        let nu = env.eval(p)?;
        if !nu.is_finite() {
            return Err(Error::GridOutsideSupport { p, upper: env.support.upper });
        }
        let m = moments(p);
        if m.is_nan() {
            return Err(Error::NonFinite("moment value"));
        }
        best = best.max(m / nu);
    }
    Ok(best)
}

/// Default grid for [`gls_norm`]: `n` points from `max(2, lower)` to the
/// end of the finite region (pulled in by 0.1% when that end is open).
pub fn default_norm_grid(env: &MomentEnvelope, n: usize) -> Vec<f64> {
    let lo = env.support.lower.max(2.0);
    let (u, closed) = env.finite_upper();
    let hi = if u.is_infinite() {
        lo + 30.0
    } else if closed {
        u
    } else {
        lo + (u - lo) * 0.999
    };
    if hi <= lo {
        return vec![env.support.lower];
    }
    crate::numeric::chebyshev_grid(n, lo, hi)
}

/// `|ξ|_p` for `ξ = ε^(1/r1)` with `P(ε > x) = 1/x` on `x > 1`:
/// exactly `(r1/(r1−p))^(1/p)`.
pub fn natural_moments_pareto_power(r1: f64, p: f64) -> Result<f64> {
    if !(r1.is_finite() && r1 > 1.0) {
        return Err(Error::InvalidParameter(format!("r1 = {r1} must exceed 1")));
    }
    if !p.is_finite() {
        return Err(Error::NonFinite("moment order p"));
    }
    if p < 1.0 {
        return Err(Error::Domain { p, reason: "p must be >= 1" });
    }
    if p >= r1 {
        return Err(Error::InfiniteMoment { p, boundary: r1 });
    }
    Ok((r1 / (r1 - p)).powf(1.0 / p))
}

#[derive(Clone)]
pub enum TailForm {
    /// `x ↦ scale·x^(−r)·(ln x)^γ·L(ln x)` for `x > threshold`, `1` below.
    RegularVariation { r: f64, gamma: f64, slowly: SlowlyVarying, threshold: f64, scale: f64 },
    /// `x ↦ exp(−c·x^α)`.
    WeibullType { c: f64, alpha: f64 },
    /// Envelope tail `inf_p (k·ν(p)/x)^p`, evaluated on demand.
    Conjugate(crate::tails::ConjugateSpec),
    /// Flat to the left of the first node, log-log interpolation in between,
    /// power-law extrapolation of the last segment on the right.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

impl fmt::Debug for TailForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailForm::RegularVariation { r, gamma, slowly, threshold, scale } => f
                .debug_struct("RegularVariation")
                .field("r", r)
                .field("gamma", gamma)
                .field("slowly", slowly)
                .field("threshold", threshold)
                .field("scale", scale)
                .finish(),
            TailForm::WeibullType { c, alpha } => f.debug_struct("WeibullType").field("c", c).field("alpha", alpha).finish(),
            TailForm::Conjugate(s) => f.debug_tuple("Conjugate").field(s).finish(),
            TailForm::Tabulated { xs, values } => {
                f.debug_struct("Tabulated").field("xs", xs).field("values", values).finish()
            }
        }
    }
}

/// An upper tail function `x ↦ T(x)`, clipped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TailBound {
    form: TailForm,
}

impl TailBound {
    pub fn regular_variation(r: f64, gamma: f64, slowly: SlowlyVarying) -> Result<Self> {
        Self::regular_variation_from(r, gamma, slowly, std::f64::consts::E)
    }

    /// Regular-variation tail that switches on at `threshold` instead of `e`.
    pub fn regular_variation_from(r: f64, gamma: f64, slowly: SlowlyVarying, threshold: f64) -> Result<Self> {
        check_positive("r", r)?;
        check_positive("threshold", threshold)?;
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be finite".into()));
        }
        if gamma != 0.0 && threshold < 1.0 {
            return Err(Error::InvalidParameter("log factor needs threshold >= 1".into()));
        }
        slowly.validate()?;
        Ok(Self { form: TailForm::RegularVariation { r, gamma, slowly, threshold, scale: 1.0 } })
    }

    pub fn weibull(c: f64, alpha: f64) -> Result<Self> {
        check_positive("c", c)?;
        check_positive("alpha", alpha)?;
        Ok(Self { form: TailForm::WeibullType { c, alpha } })
    }

    pub fn conjugate(spec: crate::tails::ConjugateSpec) -> Self {
        Self { form: TailForm::Conjugate(spec) }
    }

    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if xs.len() != values.len() || !xs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("tail grid must be strictly increasing and match values".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) || !values.windows(2).all(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("tail values must be non-increasing in [0, 1]".into()));
        }
        Ok(Self { form: TailForm::Tabulated { xs, values } })
    }

    pub fn form(&self) -> &TailForm {
        &self.form
    }

    /// `ln T(x)` before clipping (may be positive).
    fn ln_raw(&self, x: f64) -> f64 {
        match &self.form {
            TailForm::RegularVariation { r, gamma, slowly, threshold, scale } => {
                if x <= *threshold {
                    return 0.0;
                }
                let lx = x.ln();
                let log_factor = if *gamma == 0.0 { 0.0 } else { gamma * lx.ln() };
                scale.ln() - r * lx + log_factor + slowly.eval(lx).ln()
            }
            TailForm::WeibullType { c, alpha } => -c * x.max(0.0).powf(*alpha),
            TailForm::Conjugate(spec) => crate::tails::tail_from_envelope(spec, x).map(f64::ln).unwrap_or(0.0),
            TailForm::Tabulated { xs, values } => {
                let n = xs.len();
                if x <= xs[0] {
                    return values[0].ln();
                }
                if x >= xs[n - 1] {
                    if n >= 2 && values[n - 1] > 0.0 && values[n - 2] > values[n - 1] {
                        let slope = (values[n - 1] / values[n - 2]).ln() / (xs[n - 1] / xs[n - 2]).ln();
                        return values[n - 1].ln() + slope * (x / xs[n - 1]).ln();
                    }
                    return values[n - 1].ln();
                }
                let k = xs.partition_point(|v| *v <= x);
                let (x0, x1, v0, v1) = (xs[k - 1], xs[k], values[k - 1], values[k]);
                if v0 <= 0.0 || v1 <= 0.0 {
                    return if v1 <= 0.0 && x > x0 { f64::NEG_INFINITY } else { v0.ln() };
                }
                let t = (x / x0).ln() / (x1 / x0).ln();
                v0.ln() + t * (v1 / v0).ln()
            }
        }
    }

    /// `T(x)` clipped to `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.ln_raw(x).min(0.0).exp()
    }

    /// Start of the region where the tail may decay (below it `T` is flat).
    fn knee(&self) -> f64 {
        match &self.form {
            TailForm::RegularVariation { threshold, .. } => *threshold,
            TailForm::WeibullType { .. } => 1.0,
            TailForm::Conjugate(_) => std::f64::consts::E,
            TailForm::Tabulated { xs, .. } => xs[0].max(f64::MIN_POSITIVE),
        }
    }
}

/// `|ξ|_p = [p ∫₀^∞ u^(p−1) T(u) du]^(1/p)` by quadrature.
///
/// The range above the knee of the tail is integrated in `s = ln u`, where a
/// heavy tail becomes an exponentially decaying integrand; the range is never
/// truncated, so no tail correction is needed.
pub fn moments_from_tail(tail: &TailBound, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Domain { p, reason: "p must be positive and finite" });
    }
    match &tail.form {
        TailForm::RegularVariation { r, gamma, .. } if p > *r || (p == *r && *gamma >= -1.0) => {
            return Err(Error::DivergentIntegral { p });
        }
        TailForm::Conjugate(spec) => {
            let (u, closed) = spec.envelope().finite_upper();
            if p > u || (p == u && !closed) {
                return Err(Error::DivergentIntegral { p });
            }
        }
        _ => {}
    }
    let knee = tail.knee();
    let lower = integrate(|u| p * u.powf(p - 1.0) * tail.eval(u), 0.0, knee, 1e-15, 1e-13);
    let s0 = knee.ln();
    let upper = integrate_to_infinity(
        |s| {
            let lt = tail.ln_raw(s.exp()).min(0.0);
            if lt == f64::NEG_INFINITY {
                0.0
            } else {
                (p.ln() + p * s + lt).exp()
            }
        },
        s0,
        1e-13,
        1e5,
    )
    .ok_or(Error::DivergentIntegral { p })?;
    let total = lower.value + upper.value;
    if !total.is_finite() {
        return Err(Error::DivergentIntegral { p });
    }
    Ok(total.max(0.0).powf(1.0 / p))
}

/// Empirical p-norm with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p: f64,
    /// `(mean |x|^p)^(1/p)`.
    pub norm: f64,
    /// `mean |x|^p`.
    pub power_mean: f64,
    /// Batch-means standard error of `power_mean`.
    pub power_mean_stderr: f64,
    /// Delta-method standard error of `norm`.
    pub norm_stderr: f64,
    pub batches: usize,
    /// Set when `p` exceeds half the moment boundary, where the variance of
    /// `|x|^p` is infinite and the error bar is unreliable.
    pub high_variance: bool,
}

impl MomentEstimate {
    pub fn with_moment_boundary(mut self, r: f64) -> Self {
        self.high_variance = self.p > r / 2.0;
        self
    }
}

/// `(mean |xᵢ|^p)^(1/p)` with a batch-means error bar over `⌊√N⌋` batches.
pub fn empirical_moments(sample: &[f64], p: f64) -> Result<MomentEstimate> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !p.is_finite() {
        return Err(Error::NonFinite("moment order p"));
    }
    if p < 1.0 {
        return Err(Error::Domain { p, reason: "p must be >= 1" });
    }
    let powers: Vec<f64> = sample.iter().map(|x| x.abs().powf(p)).collect();
    Ok(estimate_from_powers(&powers, p))
}

pub(crate) fn estimate_from_powers(powers: &[f64], p: f64) -> MomentEstimate {
    let n = powers.len();
    let mean = powers.iter().sum::<f64>() / n as f64;
    let (se, batches) = batch_means_stderr(powers, mean);
    let norm = mean.powf(1.0 / p);
    let norm_se = if mean > 0.0 { norm / (p * mean) * se } else { 0.0 };
    MomentEstimate {
        p,
        norm,
        power_mean: mean,
        power_mean_stderr: se,
        norm_stderr: norm_se,
        batches,
        high_variance: false,
    }
}

/// Standard error of the mean from `⌊√N⌋` equal batches (tail remainder
/// folded into the last batch).
pub(crate) fn batch_means_stderr(values: &[f64], mean: f64) -> (f64, usize) {
    let n = values.len();
    let b = (n as f64).sqrt().floor() as usize;
    if b < 2 {
        return (0.0, 1);
    }
    let size = n / b;
    let mut ss = 0.0;
    for k in 0..b {
        let start = k * size;
        let end = if k == b - 1 { n } else { start + size };
        let m = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        ss += (m - mean).powi(2);
    }
    let var_batch = ss / (b - 1) as f64;
    ((var_batch / b as f64).sqrt(), b)
}
