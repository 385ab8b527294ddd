//! Tail bounds from moment envelopes.
//!
//! If `|η|_p ≤ k·ν(p)` for every p in the support then by Markov's
//! inequality `P(|η| ≥ x) ≤ inf_p (k·ν(p)/x)^p`. Writing the exponent as
//! `−[p ln x − p ln(kν(p))]` shows this is `exp(−f*(ln x))` with `f*` the
//! Legendre transform of `f(p) = p ln(kν(p))`. Both routes are implemented
//! separately so they can check each other.

use serde::{Deserialize, Serialize};

use crate::envelope::{MomentEnvelope, SlowlyVarying};
use crate::error::{Error, Result};
use crate::numeric::{chebyshev_grid, golden_section};

/// Envelope, multiplying norm and the p-grid the transform optimizes over.
#[derive(Debug, Clone)]
pub struct ConjugateSpec {
    envelope: MomentEnvelope,
    norm_factor: f64,
    p_grid: Vec<f64>,
}

impl ConjugateSpec {
    pub fn new(envelope: MomentEnvelope, norm_factor: f64, p_grid: Vec<f64>) -> Result<Self> {
        if !(norm_factor.is_finite() && norm_factor > 0.0) {
            return Err(Error::InvalidParameter(format!("norm factor {norm_factor} must be positive")));
        }
        if p_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if !p_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("p-grid must be strictly increasing".into()));
        }
        for &p in &p_grid {
            if !envelope.eval(p)?.is_finite() {
                return Err(Error::GridOutsideSupport { p, upper: envelope.support().upper });
            }
        }
        Ok(Self { envelope, norm_factor, p_grid })
    }

    /// 129 Chebyshev points spanning the finite region of the envelope
    /// (to 0.999 of an open end; 64 for an unbounded one).
    pub fn with_default_grid(envelope: MomentEnvelope, norm_factor: f64) -> Result<Self> {
        let lo = envelope.support().lower;
        let (u, closed) = envelope.finite_upper();
        let hi = if u.is_infinite() {
            lo.max(64.0)
        } else if closed {
            u
        } else {
            lo + 0.999 * (u - lo)
        };
        let grid = if hi > lo { chebyshev_grid(129, lo, hi) } else { vec![lo] };
        // drop nodes where the envelope is undefined, e.g. p = 1 for Doob
        let grid: Vec<f64> = grid.into_iter().filter(|&p| envelope.eval(p).is_ok_and(f64::is_finite)).collect();
        Self::new(envelope, norm_factor, grid)
    }

    pub fn envelope(&self) -> &MomentEnvelope {
        &self.envelope
    }

    pub fn norm_factor(&self) -> f64 {
        self.norm_factor
    }

    pub fn p_grid(&self) -> &[f64] {
        &self.p_grid
    }

    pub fn with_norm_factor(mut self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!("norm factor {k} must be positive")));
        }
        self.norm_factor = k;
        Ok(self)
    }

    fn ln_nu(&self, p: f64) -> f64 {
        self.envelope.ln_eval(p).unwrap_or(f64::INFINITY) + self.norm_factor.ln()
    }
}

/// Minimizes (or maximizes, via negation) `g` over a grid, then polishes
/// between the neighbours of the best node.
fn grid_then_polish(g: impl Fn(f64) -> f64, grid: &[f64]) -> (f64, f64) {
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for (k, &p) in grid.iter().enumerate() {
        let v = g(p);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let mut arg = grid[best_k];
    if grid.len() >= 2 && best.is_finite() {
        let a = grid[best_k.saturating_sub(1)];
        let b = grid[(best_k + 1).min(grid.len() - 1)];
        let (x, v) = golden_section(&g, a, b, 1e-13 * b.abs().max(1.0));
        if v < best {
            best = v;
            arg = x;
        }
    }
    (arg, best)
}

/// `min(1, inf_p (k·ν(p)/x)^p)` for `x > e`; `1` (vacuous) for `x ≤ e`.
pub fn tail_from_envelope(spec: &ConjugateSpec, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::NonFinite("x"));
    }
    if x <= std::f64::consts::E {
        return Ok(1.0);
    }
    if spec.p_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let k = spec.norm_factor;
    let ratio_power = |p: f64| match spec.envelope.eval(p) {
        Ok(nu) if nu.is_finite() => (k * nu / x).powf(p),
        _ => f64::INFINITY,
    };
    let (_, v) = grid_then_polish(ratio_power, &spec.p_grid);
    Ok(v.min(1.0))
}

/// Optimal moment order `p*` attaining the infimum at `x`.
pub fn optimal_order(spec: &ConjugateSpec, x: f64) -> f64 {
    let lx = x.ln();
    grid_then_polish(|p| p * (spec.ln_nu(p) - lx), &spec.p_grid).0
}

/// Legendre transform `f*(y) = sup_z (y·z − f(z))` over `z_grid`, with a
/// local polish around the best node.
pub fn legendre_transform(f: impl Fn(f64) -> f64, z_grid: &[f64], y: f64) -> f64 {
    if z_grid.is_empty() {
        return f64::NEG_INFINITY;
    }
    let (_, neg) = grid_then_polish(|z| f(z) - y * z, z_grid);
    -neg
}

/// The same bound through the conjugate: `exp(−(p ln(kν(p)))*(ln x))`.
pub fn conjugate_tail(spec: &ConjugateSpec, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::NonFinite("x"));
    }
    if x <= std::f64::consts::E {
        return Ok(1.0);
    }
    let f = |p: f64| p * spec.ln_nu(p);
    let fs = legendre_transform(f, &spec.p_grid, x.ln());
    Ok((-fs).exp().min(1.0))
}

/// Evaluates [`tail_from_envelope`] on a whole x-grid.
pub fn tail_curve(spec: &ConjugateSpec, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter().map(|&x| tail_from_envelope(spec, x)).collect()
}

/// `C4·x^(−r)·(ln x)^(γ+1)·L(ln x)` clipped to `[0, 1]`, for `x > e`.
pub fn regular_variation_tail(r: f64, gamma: f64, slowly: &SlowlyVarying, x: f64) -> Result<f64> {
    regular_variation_tail_scaled(r, gamma, slowly, x, 1.0)
}

pub fn regular_variation_tail_scaled(r: f64, gamma: f64, slowly: &SlowlyVarying, x: f64, c4: f64) -> Result<f64> {
    if !(x > std::f64::consts::E) {
        return Err(Error::InvalidParameter(format!("x = {x} must exceed e")));
    }
    let lx = x.ln();
    let ln_v = c4.ln() - r * lx + (gamma + 1.0) * lx.ln() + slowly.eval(lx).ln();
    Ok(ln_v.exp().clamp(0.0, 1.0))
}

/// One row of a tail comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub x: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub rows: Vec<TailRow>,
    /// x-rescale `C₁`: the bound is evaluated at `x / C₁`.
    pub rescale: f64,
    pub violations: Vec<f64>,
    pub pass: bool,
}

/// Flags `x` as a violation when `empirical − 2·stderr > bound(x / rescale)`.
pub fn dominance_check(
    tail_bound: impl Fn(f64) -> f64,
    empirical_tail: impl Fn(f64) -> (f64, f64),
    x_grid: &[f64],
    rescale: f64,
) -> DominanceReport {
    let rows: Vec<TailRow> = x_grid
        .iter()
        .map(|&x| {
            let (e, se) = empirical_tail(x);
            let b = tail_bound(x / rescale);
            TailRow { x, empirical: e, stderr: se, bound: b, pass: e - 2.0 * se <= b }
        })
        .collect();
    let violations: Vec<f64> = rows.iter().filter(|r| !r.pass).map(|r| r.x).collect();
    DominanceReport { pass: violations.is_empty(), rows, rescale, violations }
}

/// Finds the x-rescale `C` with `bound(x_ref / C) = target`, making the bound
/// tight at `x_ref`. Returns `None` when `target` is not in `(0, 1)`.
pub fn fit_rescale(tail_bound: impl Fn(f64) -> f64, x_ref: f64, target: f64) -> Option<f64> {
    if !(target > 0.0 && target < 1.0) {
        return None;
    }
    // bound(x_ref / C) is non-decreasing in C
    let h = |lc: f64| tail_bound(x_ref / lc.exp()) - target;
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    if h(lo) > 0.0 || h(hi) < 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Some(hi.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ind4() -> ConjugateSpec {
        ConjugateSpec::with_default_grid(MomentEnvelope::indicator(4.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn indicator_tail_is_chebyshev_bound() {
        let t = tail_from_envelope(&ind4(), 10.0).unwrap();
        assert_relative_eq!(t, 1e-4, max_relative = 1e-12);
        assert_relative_eq!(conjugate_tail(&ind4(), 10.0).unwrap(), 1e-4, max_relative = 1e-12);
    }

    #[test]
    fn vacuous_below_e() {
        assert_eq!(tail_from_envelope(&ind4(), 2.0).unwrap(), 1.0);
        assert_eq!(tail_from_envelope(&ind4(), std::f64::consts::E).unwrap(), 1.0);
    }

    #[test]
    fn spec_rejects_grid_outside_support() {
        let e = MomentEnvelope::indicator(4.0).unwrap();
        assert!(ConjugateSpec::new(e.clone(), 1.0, vec![]).is_err());
        assert!(ConjugateSpec::new(e.clone(), 1.0, vec![2.0, 5.0]).is_err());
        assert!(ConjugateSpec::new(e, 0.0, vec![2.0]).is_err());
    }

    #[test]
    fn regular_variation_examples() {
        let one = SlowlyVarying::ONE;
        assert_relative_eq!(regular_variation_tail(4.0, -1.0, &one, 10.0).unwrap(), 1e-4, max_relative = 1e-14);
        let e2 = std::f64::consts::E.powi(2);
        assert_relative_eq!(
            regular_variation_tail(4.0, 0.0, &one, e2).unwrap(),
            (-8.0f64).exp() * 2.0,
            max_relative = 1e-13
        );
        assert!(regular_variation_tail(4.0, 0.0, &one, 2.0).is_err());
        for (r, g) in [(2.0, 0.0), (4.0, 1.0), (6.0, -0.5)] {
            let a = regular_variation_tail(r, g, &one, 10.0).unwrap();
            let b = regular_variation_tail(r, g, &one, 100.0).unwrap();
            assert!(b < a);
        }
    }

    #[test]
    fn trivial_dominance_cases() {
        let xs = [5.0, 10.0, 20.0];
        assert!(dominance_check(|_| 1.0, |_| (0.7, 0.0), &xs, 1.0).pass);
        assert!(dominance_check(|_| 1e-9, |_| (0.0, 0.0), &xs, 1.0).pass);
        let r = dominance_check(|_| 1e-3, |x| if x > 15.0 { (0.5, 0.01) } else { (0.0, 0.0) }, &xs, 1.0);
        assert!(!r.pass);
        assert_eq!(r.violations, vec![20.0]);
    }

    #[test]
    fn rescale_fit_is_tight() {
        let spec = ind4();
        let c = fit_rescale(|x| tail_from_envelope(&spec, x).unwrap(), 10.0, 1e-3).unwrap();
        assert_relative_eq!(tail_from_envelope(&spec, 10.0 / c).unwrap(), 1e-3, max_relative = 1e-8);
        assert!(fit_rescale(|_| 0.5, 10.0, 0.0).is_none());
    }
}
