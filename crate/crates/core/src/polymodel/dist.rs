//! Input laws for the cells `ξ(i, m)`.
//!
//! Every continuous law is written as a non-decreasing map `v(y)` of a unit
//! exponential `y = −ln ω`, `ω` uniform on `(0, 1]`. Sampling, quadrature of
//! moments and tail stratification all go through the same map.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envelope::MomentEnvelope;
use crate::error::{Error, Result};
use crate::numeric::{chebyshev_grid, integrate, integrate_to_infinity};

/// User-supplied quantile function `u ↦ F⁻¹(u)` on `(0, 1)`.
#[derive(Clone)]
pub struct QuantileFn(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for QuantileFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuantileFn(..)")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistKind {
    /// `ε^(1/r1)` with `P(ε > x) = 1/x`, `x ≥ 1`.
    ParetoPower { r1: f64 },
    /// `ω^(−1/r)·|ln ω|^κ·(1 + ln|ln ω|)^λ` (the last factor for `|ln ω| ≥ 1`).
    LogPerturbedPareto {
        r: f64,
        kappa: f64,
        #[serde(default)]
        log_power: f64,
    },
    /// `|ln ω|^μ`.
    LogPowerOnly { mu: f64 },
    /// `P(ζ = exp(e^k)) ∝ exp(βrk − r·e^k)`, `k = 0, 1, …`.
    DoubleExpDiscrete { r: f64, beta: f64 },
    /// `P(X > x) = exp(−c·x^α)`.
    Weibull { c: f64, alpha: f64 },
    Rademacher,
    Discrete { atoms: Vec<f64>, probs: Vec<f64> },
    #[serde(skip)]
    Custom { quantile: QuantileFn, boundary: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    #[default]
    None,
    /// Subtract the mean.
    Mean,
    /// Multiply by an independent fair sign.
    SignSymmetric,
}

/// Serialized form of an [`InputDistribution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    pub law: DistKind,
    #[serde(default)]
    pub centering: Centering,
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone)]
struct Atoms {
    values: Vec<f64>,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct InputDistribution {
    kind: DistKind,
    centering: Centering,
    scale: f64,
    raw_mean: f64,
    atoms: Option<Atoms>,
}

impl InputDistribution {
    pub fn new(kind: DistKind, centering: Centering) -> Result<Self> {
        Self::from_spec(DistSpec { law: kind, centering, scale: 1.0 })
    }

    pub fn pareto_power(r1: f64, centering: Centering) -> Result<Self> {
        Self::new(DistKind::ParetoPower { r1 }, centering)
    }

    pub fn rademacher() -> Self {
        Self::new(DistKind::Rademacher, Centering::None).expect("valid law")
    }

    pub fn discrete(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Self::new(DistKind::Discrete { atoms, probs }, Centering::None)
    }

    pub fn from_spec(spec: DistSpec) -> Result<Self> {
        let DistSpec { law: kind, centering, scale } = spec;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("scale {scale} must be positive")));
        }
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match &kind {
            DistKind::ParetoPower { r1 } if !(r1.is_finite() && *r1 > 0.0) => return bad(format!("r1 = {r1}")),
            DistKind::LogPerturbedPareto { r, kappa, log_power }
                if !(r.is_finite() && *r > 0.0 && *kappa >= 0.0 && *log_power >= 0.0) =>
            {
                return bad("log-perturbed Pareto needs r > 0, kappa >= 0, log_power >= 0".into())
            }
            DistKind::LogPowerOnly { mu } if !(mu.is_finite() && *mu > 0.0) => return bad(format!("mu = {mu}")),
            DistKind::Weibull { c, alpha } if !(*c > 0.0 && *alpha > 0.0 && c.is_finite() && alpha.is_finite()) => {
                return bad("Weibull needs c, alpha > 0".into())
            }
            DistKind::DoubleExpDiscrete { r, beta } if !(*r > 0.0 && beta.is_finite() && r.is_finite()) => {
                return bad("double-exponential law needs r > 0".into())
            }
            _ => {}
        }
        let atoms = match &kind {
            DistKind::Rademacher => Some(make_atoms(vec![-1.0, 1.0], vec![0.5, 0.5])?),
            DistKind::Discrete { atoms, probs } => Some(make_atoms(atoms.clone(), probs.clone())?),
            DistKind::DoubleExpDiscrete { r, beta } => Some(double_exp_atoms(*r, *beta)?),
            _ => None,
        };
        let mut d = Self { kind, centering, scale, raw_mean: f64::NAN, atoms };
        d.raw_mean = d.compute_raw_mean()?;
        if centering == Centering::Mean && !d.raw_mean.is_finite() {
            return Err(Error::InvalidParameter("mean centering needs a finite mean".into()));
        }
        Ok(d)
    }

    pub fn spec(&self) -> Result<DistSpec> {
        if matches!(self.kind, DistKind::Custom { .. }) {
            return Err(Error::Unsupported("custom quantile laws cannot be serialized".into()));
        }
        Ok(DistSpec { law: self.kind.clone(), centering: self.centering, scale: self.scale })
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("scale {scale} must be positive")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn with_centering(self, centering: Centering) -> Result<Self> {
        Self::from_spec(DistSpec { law: self.kind, centering, scale: self.scale })
    }

    pub fn is_finite_support(&self) -> bool {
        self.atoms.is_some()
    }

    /// Supremum of the orders with finite absolute moment.
    pub fn moment_boundary(&self) -> f64 {
        match &self.kind {
            DistKind::ParetoPower { r1 } => *r1,
            DistKind::LogPerturbedPareto { r, .. } => *r,
            DistKind::DoubleExpDiscrete { r, .. } => *r,
            DistKind::Custom { boundary, .. } => *boundary,
            _ => f64::INFINITY,
        }
    }

    /// Mean of the uncentered, unscaled law.
    pub fn raw_mean(&self) -> f64 {
        self.raw_mean
    }

    /// Mean of the emitted values.
    pub fn mean(&self) -> f64 {
        match self.centering {
            Centering::None => self.raw_mean * self.scale,
            _ => 0.0,
        }
    }

    /// Raw value for `ω ∈ (0, 1]` (small `ω` gives large values).
    pub fn raw_at(&self, omega: f64) -> f64 {
        if let Some(a) = &self.atoms {
            let k = a.cum.partition_point(|&c| c < omega).min(a.values.len() - 1);
            return a.values[k];
        }
        if let DistKind::Custom { quantile, .. } = &self.kind {
            return (quantile.0)(1.0 - omega);
        }
        self.v(-omega.ln())
    }

    /// Emitted value for uniform `ω` and fair sign `s`.
    #[inline]
    pub fn value(&self, omega: f64, sign: f64) -> f64 {
        let raw = self.raw_at(omega);
        self.center(raw, sign) * self.scale
    }

    #[inline]
    fn center(&self, raw: f64, sign: f64) -> f64 {
        match self.centering {
            Centering::None => raw,
            Centering::Mean => raw - self.raw_mean,
            Centering::SignSymmetric => sign * raw,
        }
    }

    /// Continuous map `v(y)`, `y = −ln ω`.
    fn v(&self, y: f64) -> f64 {
        match &self.kind {
            DistKind::ParetoPower { r1 } => (y / r1).exp(),
            DistKind::LogPerturbedPareto { r, kappa, log_power } => {
                let l = if *log_power == 0.0 { 1.0 } else { (1.0 + y.max(1.0).ln()).powf(*log_power) };
                (y / r).exp() * y.powf(*kappa) * l
            }
            DistKind::LogPowerOnly { mu } => y.powf(*mu),
            DistKind::Weibull { c, alpha } => (y / c).powf(1.0 / alpha),
            DistKind::Custom { quantile, .. } => (quantile.0)(1.0 - (-y).exp()),
            _ => unreachable!("atomic laws have no continuous map"),
        }
    }

    /// `ln v(y)`, finite where `v` itself would overflow.
    fn ln_v(&self, y: f64) -> f64 {
        match &self.kind {
            DistKind::ParetoPower { r1 } => y / r1,
            DistKind::LogPerturbedPareto { r, kappa, log_power } => {
                let l = if *log_power == 0.0 { 0.0 } else { log_power * (1.0 + y.max(1.0).ln()).ln() };
                let k = if *kappa == 0.0 { 0.0 } else { kappa * y.ln() };
                y / r + k + l
            }
            DistKind::LogPowerOnly { mu } => mu * y.ln(),
            DistKind::Weibull { c, alpha } => (y.ln() - c.ln()) / alpha,
            _ => self.v(y).ln(),
        }
    }

    /// Rough location of the peak of `|v(y)|^p e^(−y)`.
    fn peak_hint(&self, p: f64) -> f64 {
        match &self.kind {
            DistKind::LogPerturbedPareto { r, kappa, log_power } => {
                let lam = (1.0 - p / r).max(1e-3);
                p * (kappa + log_power) / lam
            }
            DistKind::LogPowerOnly { mu } => p * mu,
            DistKind::Weibull { alpha, .. } => p / alpha,
            _ => 0.0,
        }
    }

    fn compute_raw_mean(&self) -> Result<f64> {
        if let Some(a) = &self.atoms {
            return Ok(a.values.iter().zip(&a.probs).map(|(v, p)| v * p).sum());
        }
        match &self.kind {
            DistKind::ParetoPower { r1 } => Ok(if *r1 > 1.0 { r1 / (r1 - 1.0) } else { f64::INFINITY }),
            _ if self.moment_boundary() <= 1.0 => Ok(f64::INFINITY),
            DistKind::Custom { quantile, .. } => Ok(integrate(|u| (quantile.0)(u), 0.0, 1.0, 1e-14, 1e-12).value),
            _ => {
                let (lo, hi) = self.y_integral(1.0, 0.0, None, 0.0)?;
                Ok(lo + hi)
            }
        }
    }

    /// `∫_{y_from}^∞ |v(y) − shift|^p e^(−y) dy`, split at the kink
    /// `v = shift`: returns `(part below the kink, part above)`.
    fn y_integral(&self, p: f64, shift: f64, kink: Option<f64>, y_from: f64) -> Result<(f64, f64)> {
        let f = |y: f64| {
            let lv = self.ln_v(y);
            let rel = (1.0 - shift * (-lv).exp()).abs();
            if rel == 0.0 || lv == f64::NEG_INFINITY {
                0.0
            } else {
                (p * (lv + rel.ln()) - y).exp()
            }
        };
        let k = kink.unwrap_or(0.0).max(y_from);
        let below = if k > y_from { integrate(f, y_from, k, 1e-300, 1e-12).value } else { 0.0 };
        let mid = k + 2.0 * self.peak_hint(p) + 50.0;
        let body = integrate(f, k, mid, 1e-300, 1e-12).value;
        let tail = integrate_to_infinity(f, mid, 1e-13, 1e6).ok_or(Error::DivergentIntegral { p })?.value;
        Ok((below, body + tail))
    }

    /// `y` with `v(y) = μ` (the point where centered values change sign).
    fn kink(&self) -> f64 {
        let mu = self.raw_mean;
        if self.v(0.0) >= mu {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.v(hi) < mu && hi < 1e6 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if self.v(m) < mu {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    fn check_order(&self, p: f64) -> Result<()> {
        if !p.is_finite() {
            return Err(Error::NonFinite("moment order p"));
        }
        if p <= 0.0 {
            return Err(Error::Domain { p, reason: "p must be positive" });
        }
        if p >= self.moment_boundary() {
            return Err(Error::InfiniteMoment { p, boundary: self.moment_boundary() });
        }
        Ok(())
    }

    /// Signed pieces of `E|value|^p / scale^p`: `(part where the centered
    /// value is negative, part where it is non-negative)`, restricted to
    /// `ω ≤ omega_max`.
    fn pieces(&self, p: f64, omega_max: f64) -> Result<(f64, f64)> {
        self.check_order(p)?;
        if let Some(a) = &self.atoms {
            let (mut neg, mut pos) = (0.0, 0.0);
            let mut prev = 0.0f64;
            for ((v, pr), c) in a.values.iter().zip(&a.probs).zip(&a.cum) {
                let w = (c.min(omega_max) - prev.min(omega_max)).max(0.0).min(*pr);
                prev = *c;
                let x = match self.centering {
                    Centering::Mean => v - self.raw_mean,
                    _ => *v,
                };
                let t = w * x.abs().powf(p);
                if x < 0.0 {
                    neg += t;
                } else {
                    pos += t;
                }
            }
            return Ok((neg, pos));
        }
        if let DistKind::Custom { quantile, .. } = &self.kind {
            let shift = if self.centering == Centering::Mean { self.raw_mean } else { 0.0 };
            let u0 = 1.0 - omega_max;
            let neg = integrate(
                |u| {
                    let x = (quantile.0)(u) - shift;
                    if x < 0.0 { x.abs().powf(p) } else { 0.0 }
                },
                u0,
                1.0,
                1e-300,
                1e-11,
            );
            let pos = integrate(
                |u| {
                    let x = (quantile.0)(u) - shift;
                    if x >= 0.0 { x.powf(p) } else { 0.0 }
                },
                u0,
                1.0,
                1e-300,
                1e-11,
            );
            return Ok((neg.value, pos.value));
        }
        let y_from = if omega_max >= 1.0 { 0.0 } else { -omega_max.ln() };
        match self.centering {
            Centering::Mean => self.y_integral(p, self.raw_mean, Some(self.kink()), y_from),
            _ => self.y_integral(p, 0.0, None, y_from),
        }
    }

    /// `E|ξ|^p` of the emitted values.
    pub fn abs_moment(&self, p: f64) -> Result<f64> {
        let (a, b) = self.pieces(p, 1.0)?;
        Ok((a + b) * self.scale.powf(p))
    }

    /// `E[|ξ|^p; ω ≤ q]`: the contribution of the `q` most extreme draws.
    pub fn upper_tail_abs_moment(&self, p: f64, q: f64) -> Result<f64> {
        let (a, b) = self.pieces(p, q)?;
        Ok((a + b) * self.scale.powf(p))
    }

    /// `|ξ|_p = (E|ξ|^p)^(1/p)`.
    pub fn norm(&self, p: f64) -> Result<f64> {
        Ok(self.abs_moment(p)?.powf(1.0 / p))
    }

    /// `E ξ^k` of the emitted values.
    pub fn signed_moment(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let p = k as f64;
        let (neg, pos) = self.pieces(p, 1.0)?;
        let s = self.scale.powi(k as i32);
        Ok(match self.centering {
            Centering::SignSymmetric if k % 2 == 1 => 0.0,
            Centering::SignSymmetric => (neg + pos) * s,
            _ => {
                let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                (pos + sign * neg) * s
            }
        })
    }

    /// Standard deviation of the emitted values.
    pub fn std_dev(&self) -> Result<f64> {
        let m2 = self.abs_moment(2.0)?;
        let mean = self.mean();
        Ok((m2 - mean * mean).max(0.0).sqrt())
    }

    /// Atoms `(emitted value, probability)` of a finitely supported law; a
    /// sign-symmetric law splits each atom into `±`.
    pub fn finite_atoms(&self) -> Option<Vec<(f64, f64)>> {
        let a = self.atoms.as_ref()?;
        let mut out = Vec::new();
        for (v, p) in a.values.iter().zip(&a.probs) {
            match self.centering {
                Centering::SignSymmetric => {
                    out.push((-v * self.scale, 0.5 * p));
                    out.push((v * self.scale, 0.5 * p));
                }
                _ => out.push((self.center(*v, 1.0) * self.scale, *p)),
            }
        }
        Some(out)
    }

    /// Breakpoints of the `ω ↦ value` step map of a finite law.
    pub(crate) fn omega_breaks(&self) -> Option<&[f64]> {
        self.atoms.as_ref().map(|a| a.cum.as_slice())
    }

    /// The natural envelope `p ↦ |ξ|_p` tabulated on 257 Chebyshev nodes
    /// over `[1, 0.99·r]` (`[1, 64]` when every moment is finite).
    pub fn natural_envelope(&self) -> Result<MomentEnvelope> {
        let r = self.moment_boundary();
        let hi = if r.is_finite() { 0.99 * r } else { 64.0 };
        if hi <= 1.0 {
            return Err(Error::InfiniteMoment { p: 1.0, boundary: r });
        }
        self.natural_envelope_on(&chebyshev_grid(257, 1.0, hi))
    }

    pub fn natural_envelope_on(&self, grid: &[f64]) -> Result<MomentEnvelope> {
        let vals = grid.iter().map(|&p| self.norm(p)).collect::<Result<Vec<f64>>>()?;
        if vals.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter("degenerate input has a zero norm".into()));
        }
        MomentEnvelope::tabulated(grid.to_vec(), vals)
    }
}

fn make_atoms(values: Vec<f64>, probs: Vec<f64>) -> Result<Atoms> {
    if values.is_empty() || values.len() != probs.len() {
        return Err(Error::InvalidParameter("atoms and probabilities must be non-empty and match".into()));
    }
    if values.iter().any(|v| !v.is_finite()) || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidParameter("atoms must be finite, probabilities non-negative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
    }
    let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
    let mut cum = Vec::with_capacity(probs.len());
    let mut s = 0.0;
    for p in &probs {
        s += p;
        cum.push(s);
    }
    *cum.last_mut().expect("non-empty") = 1.0;
    Ok(Atoms { values, probs, cum })
}

/// Atoms `exp(e^k)` with weights `∝ exp(βrk − r e^k)`, largest atoms first,
/// truncated once weights drop below `1e−300` of the largest or the atom
/// overflows.
fn double_exp_atoms(r: f64, beta: f64) -> Result<Atoms> {
    let mut ln_w = Vec::new();
    let mut vals = Vec::new();
    let mut k = 0u32;
    loop {
        let ek = (k as f64).exp();
        let v = ek.exp();
        let lw = beta * r * k as f64 - r * ek;
        if !v.is_finite() {
            break;
        }
        let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lw < max - 690.0 && k > 0 {
            break;
        }
        ln_w.push(lw);
        vals.push(v);
        k += 1;
    }
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ln_w.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    let mut values = vals;
    let mut probs: Vec<f64> = w.iter().map(|x| x / s).collect();
    values.reverse();
    probs.reverse();
    make_atoms(values, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pareto_moments_match_closed_form() {
        let d = InputDistribution::pareto_power(4.0, Centering::None).unwrap();
        assert_relative_eq!(d.raw_mean(), 4.0 / 3.0, epsilon = 1e-15);
        for p in [1.0, 2.0, 3.0, 3.5] {
            assert_relative_eq!(d.norm(p).unwrap(), (4.0 / (4.0 - p)).powf(1.0 / p), max_relative = 1e-10);
        }
        assert!(matches!(d.abs_moment(4.0), Err(Error::InfiniteMoment { .. })));
    }

    #[test]
    fn centered_pareto_variance() {
        // Var ε^(1/6) = 6/4 − (6/5)^2
        let d = InputDistribution::pareto_power(6.0, Centering::Mean).unwrap();
        assert_relative_eq!(d.abs_moment(2.0).unwrap(), 1.5 - 1.44, max_relative = 1e-10);
        assert!(d.signed_moment(1).unwrap().abs() < 1e-12);
        assert_relative_eq!(d.std_dev().unwrap(), 0.06f64.sqrt(), max_relative = 1e-10);
        let s = InputDistribution::pareto_power(6.0, Centering::SignSymmetric).unwrap();
        assert_relative_eq!(s.abs_moment(2.0).unwrap(), 1.5, max_relative = 1e-10);
        assert_eq!(s.signed_moment(3).unwrap(), 0.0);
    }

    #[test]
    fn light_tailed_means() {
        let w = InputDistribution::new(DistKind::Weibull { c: 1.0, alpha: 1.0 }, Centering::None).unwrap();
        assert_relative_eq!(w.raw_mean(), 1.0, max_relative = 1e-10);
        assert_relative_eq!(w.abs_moment(3.0).unwrap(), 6.0, max_relative = 1e-10);
        let l = InputDistribution::new(DistKind::LogPowerOnly { mu: 2.0 }, Centering::None).unwrap();
        assert_relative_eq!(l.raw_mean(), 2.0, max_relative = 1e-10);
    }

    #[test]
    fn log_perturbed_reduces_to_pareto() {
        let a = InputDistribution::new(DistKind::LogPerturbedPareto { r: 5.0, kappa: 0.0, log_power: 0.0 }, Centering::None)
            .unwrap();
        assert_relative_eq!(a.norm(3.0).unwrap(), (5.0f64 / 2.0).powf(1.0 / 3.0), max_relative = 1e-10);
        let b = InputDistribution::new(DistKind::LogPerturbedPareto { r: 5.0, kappa: 1.0, log_power: 0.0 }, Centering::None)
            .unwrap();
        // E[e^(py/r) y^p] = Γ(p+1)/(1−p/r)^(p+1) at p = 1
        assert_relative_eq!(b.raw_mean(), 1.0 / 0.8f64.powi(2), max_relative = 1e-10);
    }

    #[test]
    fn atomic_laws() {
        let r = InputDistribution::rademacher();
        assert_eq!(r.raw_mean(), 0.0);
        assert_eq!(r.value(0.3, 1.0), -1.0);
        assert_eq!(r.value(0.7, 1.0), 1.0);
        assert_eq!(r.abs_moment(3.0).unwrap(), 1.0);
        let t = InputDistribution::discrete(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(t.abs_moment(2.0).unwrap(), 0.5);
        assert_eq!(t.upper_tail_abs_moment(2.0, 0.25).unwrap(), 0.25);
        assert!(InputDistribution::discrete(vec![1.0], vec![0.5]).is_err());
    }

    #[test]
    fn double_exponential_law() {
        let d = InputDistribution::new(DistKind::DoubleExpDiscrete { r: 4.0, beta: 1.0 }, Centering::None).unwrap();
        let atoms = d.finite_atoms().unwrap();
        assert_relative_eq!(atoms.iter().map(|a| a.1).sum::<f64>(), 1.0, max_relative = 1e-12);
        assert!(atoms.iter().all(|a| a.0 >= std::f64::consts::E));
        assert_eq!(d.moment_boundary(), 4.0);
    }

    #[test]
    fn custom_quantile() {
        let q = QuantileFn(Arc::new(|u: f64| 2.0 * u));
        let d = InputDistribution::new(DistKind::Custom { quantile: q, boundary: f64::INFINITY }, Centering::Mean).unwrap();
        assert_relative_eq!(d.raw_mean(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(d.abs_moment(2.0).unwrap(), 1.0 / 3.0, max_relative = 1e-9);
        assert!(d.spec().is_err());
    }

    #[test]
    fn spec_round_trip() {
        let s: DistSpec = serde_json::from_str(r#"{"law":{"kind":"pareto_power","r1":6},"centering":"mean"}"#).unwrap();
        let d = InputDistribution::from_spec(s).unwrap();
        assert_eq!(d.scale(), 1.0);
        assert!(serde_json::from_str::<DistSpec>(r#"{"law":{"kind":"rademacher"},"bogus":1}"#).is_err());
    }

    #[test]
    fn natural_envelope_of_pareto() {
        let d = InputDistribution::pareto_power(6.0, Centering::None).unwrap();
        let e = d.natural_envelope().unwrap();
        assert_relative_eq!(e.support().upper, 5.94, max_relative = 1e-12);
        assert_relative_eq!(e.eval(3.0).unwrap(), 2f64.powf(1.0 / 3.0), max_relative = 1e-5);
    }
}
