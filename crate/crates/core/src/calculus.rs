//! Envelope composition `⊗` and the recursive moment bounds built from it.
//!
//! `(ν₁ ⊗ ν₂)(p) = inf_{a+b=1} ν₁(p/a)·ν₂(p/b)` is the envelope of a product
//! of two (arbitrarily dependent) variables via Hölder's inequality. The
//! chains below combine it with martingale / independent-sum constants to
//! bound `|Q_d|_p` for a homogeneous polynomial of degree `d`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::envelope::{EnvelopeForm, MomentEnvelope, SlowlyVarying};
use crate::error::{Error, Result};
use crate::numeric::{chebyshev_grid, scan_then_golden};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTag {
    Martingale,
    CommonIndependent,
    InsideIndependent,
    VectorIndependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DependenceRegime {
    pub tag: RegimeTag,
    pub direction: Direction,
}

impl DependenceRegime {
    pub const fn forward(tag: RegimeTag) -> Self {
        Self { tag, direction: Direction::Forward }
    }

    pub const fn reverse(tag: RegimeTag) -> Self {
        Self { tag, direction: Direction::Reverse }
    }

    /// Whether consecutive stages combine through `⊗` (dependent factors)
    /// rather than a pointwise product.
    pub fn uses_otimes(&self) -> bool {
        matches!(self.tag, RegimeTag::Martingale | RegimeTag::InsideIndependent)
    }

    /// Whether the first stage uses the independent-sum constant.
    pub fn starts_independent(&self) -> bool {
        matches!(self.tag, RegimeTag::CommonIndependent | RegimeTag::InsideIndependent)
    }
}

/// Constant in `|Σ bᵢθᵢ|_p ≤ K(p)·sup|θᵢ|_p` for unit-norm `b`.
#[derive(Clone)]
pub enum GrowthConstant {
    /// `p·√2` (martingale differences).
    MartingaleKM,
    /// `0.87·p/ln p` (independent summands).
    IndependentKI,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl GrowthConstant {
    /// Both built-in constants are stated for `p ≥ 2`; below 2 they are
    /// frozen at their value at 2.
    pub fn eval(&self, p: f64) -> f64 {
        let q = p.max(2.0);
        match self {
            GrowthConstant::MartingaleKM => q * std::f64::consts::SQRT_2,
            GrowthConstant::IndependentKI => 0.87 * q / q.ln(),
            GrowthConstant::Custom(f) => f(p),
        }
    }
}

impl fmt::Debug for GrowthConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthConstant::MartingaleKM => write!(f, "MartingaleKM"),
            GrowthConstant::IndependentKI => write!(f, "IndependentKI"),
            GrowthConstant::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

const SCAN_POINTS: usize = 64;
const INSET: f64 = 1e-12;

/// Value and minimizing split of `ν₁ ⊗ ν₂` at `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtimesValue {
    pub value: f64,
    /// Share `a` given to the first factor (`ν₁` is evaluated at `p/a`).
    pub split: f64,
}

/// `(ν₁ ⊗ ν₂)(p)` with its minimizing split.
pub fn otimes_split(nu1: &MomentEnvelope, nu2: &MomentEnvelope, p: f64) -> Result<OtimesValue> {
    if !p.is_finite() {
        return Err(Error::NonFinite("moment order p"));
    }
    if p < 1.0 {
        return Err(Error::Domain { p, reason: "p must be >= 1" });
    }
    let infeasible = OtimesValue { value: f64::INFINITY, split: f64::NAN };
    let (u1, _) = nu1.finite_upper();
    let (u2, _) = nu2.finite_upper();
    if p / u1 + p / u2 >= 1.0 {
        return Ok(infeasible);
    }
    // a ∈ (p/u1, 1 − p/u2), also keeping p/a and p/b above the lower ends
    let lo = (p / u1).max(1.0 - p / nu2.support().lower);
    let hi = (1.0 - p / u2).min(p / nu1.support().lower);
    if !(hi > lo) {
        return Ok(infeasible);
    }
    let delta = INSET * (hi - lo);
    let objective = |a: f64| {
        let l1 = nu1.ln_eval(p / a).unwrap_or(f64::INFINITY);
        if l1 == f64::INFINITY {
            return f64::INFINITY;
        }
        l1 + nu2.ln_eval(p / (1.0 - a)).unwrap_or(f64::INFINITY)
    };
    let (a, v) = scan_then_golden(objective, lo + delta, hi - delta, SCAN_POINTS);
    if v == f64::INFINITY {
        return Ok(infeasible);
    }
    Ok(OtimesValue { value: v.exp(), split: a })
}

/// `(ν₁ ⊗ ν₂)(p) = inf_{a ∈ (0,1)} ν₁(p/a)·ν₂(p/(1−a))`; `+∞` when no split is
/// feasible (`p/r₁ + p/r₂ ≥ 1`).
pub fn otimes(nu1: &MomentEnvelope, nu2: &MomentEnvelope, p: f64) -> Result<f64> {
    otimes_split(nu1, nu2, p).map(|o| o.value)
}

/// `(Σ 1/r_m)^(−1)`; `+∞` when every exponent is infinite.
pub fn combined_exponent(rs: impl IntoIterator<Item = f64>) -> f64 {
    let s: f64 = rs.into_iter().map(|r| 1.0 / r).sum();
    1.0 / s
}

/// How chain stages are tabulated.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainGrid {
    /// Chebyshev nodes per stage.
    pub nodes: usize,
    /// Stages stop at `edge·r` for a finite partial exponent `r`.
    pub edge: f64,
    /// Upper end of the final stage when every exponent is infinite; earlier
    /// stages extend by a factor 4 per remaining step.
    pub horizon: f64,
}

impl Default for ChainGrid {
    fn default() -> Self {
        Self { nodes: 257, edge: 0.999, horizon: 32.0 }
    }
}

impl ChainGrid {
    fn stage_grid(&self, lower: f64, partial_r: f64, steps_left: usize, extra: &[f64]) -> Vec<f64> {
        let hi = if partial_r.is_finite() {
            lower + self.edge * (partial_r - lower)
        } else {
            self.horizon * 4f64.powi(steps_left as i32)
        };
        let mut g = chebyshev_grid(self.nodes, lower, hi.max(lower * (1.0 + 1e-9)));
        g.extend(extra.iter().copied().filter(|&p| p >= lower && p < partial_r));
        g.sort_by(f64::total_cmp);
        g.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
        g
    }
}

/// Tabulates `f` on `grid`, keeping the points where it is finite.
fn tabulate_finite(f: impl Fn(f64) -> Result<f64>, grid: &[f64]) -> Result<MomentEnvelope> {
    let mut ps = Vec::with_capacity(grid.len());
    let mut vs = Vec::with_capacity(grid.len());
    for &p in grid {
        let v = f(p)?;
        if v.is_finite() && v > 0.0 {
            ps.push(p);
            vs.push(v);
        }
    }
    if ps.is_empty() {
        return Err(Error::EmptyGrid);
    }
    MomentEnvelope::tabulated(ps, vs)
}

fn support_lower(envs: &[MomentEnvelope]) -> f64 {
    envs.iter().map(|e| e.support().lower).fold(1.0, f64::max)
}

/// Left fold `((ν₁ ⊗ ν₂) ⊗ …) ⊗ ν_d`, each intermediate result tabulated.
pub fn otimes_chain(envs: &[MomentEnvelope], grid: &ChainGrid) -> Result<MomentEnvelope> {
    let Some(first) = envs.first() else {
        return Err(Error::InvalidParameter("empty envelope list".into()));
    };
    let r = combined_exponent(envs.iter().map(|e| e.support().upper));
    if r <= 1.0 {
        return Err(Error::CombinedExponent { r });
    }
    if envs.len() == 1 {
        return Ok(first.clone());
    }
    let lower = support_lower(envs);
    let mut acc = first.clone();
    for k in 1..envs.len() {
        let partial = combined_exponent(envs[..=k].iter().map(|e| e.support().upper));
        let g = grid.stage_grid(lower, partial, envs.len() - 1 - k, &[]);
        let next = &envs[k];
        acc = tabulate_finite(|p| otimes(&acc, next, p), &g)?;
    }
    Ok(acc)
}

/// The stages `ζ₁ … ζ_d` of a moment bound for `Q_d`.
#[derive(Debug, Clone)]
pub struct ZetaChain {
    pub regime: DependenceRegime,
    /// `stages[m]` is `ζ_{m+1}`.
    pub stages: Vec<MomentEnvelope>,
    pub inputs: Vec<MomentEnvelope>,
    pub input_exponents: Vec<f64>,
    pub combined_r: f64,
    /// Combined exponent of the inputs folded into each stage, indexed like
    /// `stages`.
    pub partial_exponents: Vec<f64>,
}

impl ZetaChain {
    pub fn d(&self) -> usize {
        self.stages.len()
    }

    /// The bound envelope: `ζ_d` going forward, `ζ_1` in reverse.
    pub fn final_stage(&self) -> &MomentEnvelope {
        match self.regime.direction {
            Direction::Forward => &self.stages[self.stages.len() - 1],
            Direction::Reverse => &self.stages[0],
        }
    }

    pub fn eval(&self, p: f64) -> Result<f64> {
        self.final_stage().eval(p)
    }

    /// Multiplies every stage by `factor` (used to build deliberately broken
    /// bounds and calibrated variants).
    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        self.stages = self.stages.into_iter().map(|s| s.scaled(factor)).collect::<Result<_>>()?;
        Ok(self)
    }
}

/// Builds the `ζ` recursion for `regime` on `p_grid`.
///
/// Forward direction processes `ν₁, ν₂, …`; reverse processes `ν_d, ν_{d−1},
/// …` and stores each stage at the index of the last input it absorbed.
/// Stages are tabulated on Chebyshev grids up to `0.999` of their partial
/// exponent, with the caller's grid points added as exact nodes.
pub fn zeta_chain(
    regime: DependenceRegime,
    nus: &[MomentEnvelope],
    k_m: &GrowthConstant,
    k_i: &GrowthConstant,
    p_grid: &[f64],
    grid: &ChainGrid,
) -> Result<ZetaChain> {
    let d = nus.len();
    if d == 0 {
        return Err(Error::InvalidParameter("zeta chain needs at least one input".into()));
    }
    let input_exponents: Vec<f64> = nus.iter().map(|e| e.support().upper).collect();
    let combined_r = combined_exponent(input_exponents.iter().copied());
    if combined_r <= 1.0 {
        return Err(Error::CombinedExponent { r: combined_r });
    }
    for &p in p_grid {
        if !(p >= 1.0 && p < combined_r) {
            return Err(Error::GridOutsideSupport { p, upper: combined_r });
        }
    }
    let order: Vec<usize> = match regime.direction {
        Direction::Forward => (0..d).collect(),
        Direction::Reverse => (0..d).rev().collect(),
    };
    let lower = support_lower(nus);
    let k0 = if regime.starts_independent() { k_i } else { k_m };

    let mut stages: Vec<Option<MomentEnvelope>> = vec![None; d];
    let mut partial_exponents = vec![0.0; d];
    let mut prev: Option<MomentEnvelope> = None;
    for (step, &m) in order.iter().enumerate() {
        let absorbed = &order[..=step];
        let partial = combined_exponent(absorbed.iter().map(|&j| input_exponents[j]));
        let g = grid.stage_grid(lower, partial, d - 1 - step, p_grid);
        let stage = if step == 0 {
            tabulate_finite(|p| Ok(k0.eval(p) * nus[m].eval(p)?), &g)?
        } else if regime.uses_otimes() {
            let before = prev.as_ref().expect("previous stage");
            tabulate_finite(|p| Ok(k_m.eval(p) * otimes(before, &nus[m], p)?), &g)?
        } else {
            // pointwise products need no tabulated intermediate: recompute
            // the product at each node from the inputs
            tabulate_finite(
                |p| {
                    let mut v = k0.eval(p) * nus[absorbed[0]].eval(p)?;
                    for &j in &absorbed[1..] {
                        v = k_m.eval(p) * v * nus[j].eval(p)?;
                    }
                    Ok(v)
                },
                &g,
            )?
        };
        partial_exponents[m] = partial;
        prev = Some(stage.clone());
        stages[m] = Some(stage);
    }
    let chain = ZetaChain {
        regime,
        stages: stages.into_iter().map(|s| s.expect("every stage built")).collect(),
        inputs: nus.to_vec(),
        input_exponents,
        combined_r,
        partial_exponents,
    };
    for &p in p_grid {
        if !chain.eval(p)?.is_finite() {
            return Err(Error::SupportExceeded { p, upper: chain.final_stage().finite_upper().0 });
        }
    }
    Ok(chain)
}

/// Closed-form final stage for the product regimes:
/// `K_I·K_M^(d−1)·Π ν_m` (common independent) or `K_M^d·Π ν_m` (vector
/// independent).
pub fn explicit_zeta(
    regime: DependenceRegime,
    nus: &[MomentEnvelope],
    k_m: &GrowthConstant,
    k_i: &GrowthConstant,
    p: f64,
) -> Result<f64> {
    let d = nus.len() as i32;
    let mut prod = 1.0;
    for nu in nus {
        prod *= nu.eval(p)?;
    }
    match regime.tag {
        RegimeTag::CommonIndependent => Ok(k_i.eval(p) * k_m.eval(p).powi(d - 1) * prod),
        RegimeTag::VectorIndependent => Ok(k_m.eval(p).powi(d) * prod),
        _ => Err(Error::Unsupported("explicit solution exists only for product regimes".into())),
    }
}

/// Tail description `T(x) ≤ x^(−r)·ln^γ(x)·L(ln x)` of one input factor.
#[derive(Debug, Clone)]
pub struct TailParams {
    pub r: f64,
    pub gamma: f64,
    pub slowly: SlowlyVarying,
}

/// Envelope for an arbitrary centered polynomial, driven by its dominant
/// diagonal term.
#[derive(Debug, Clone)]
pub struct DominantEnvelope {
    pub envelope: MomentEnvelope,
    pub r_min: f64,
    /// `r_min / d`: where the moments of the dominant term blow up.
    pub edge: f64,
    pub gamma_bar: f64,
    /// Factors attaining `r_min` and then `gamma_bar`.
    pub dominant: Vec<usize>,
    pub constant: f64,
    /// True while `constant` is the uncalibrated default.
    pub shape_only: bool,
}

/// `ρ_d(p) = [C·(r_min/d − p)^(−γ̄−1)·L̄(1/(r_min/d − p))]^(1/p)` on
/// `[1, r_min/d)`.
///
/// `γ̄` is the largest log exponent among the factors with the smallest tail
/// index and `L̄` the pointwise maximum of their slowly varying parts. For
/// `γ̄ < −1` the dominant term has bounded moments up to the edge and the
/// envelope is `C` on the closed interval.
pub fn polynomial_dominant_envelope(tail_params: &[TailParams], d: usize, constant: Option<f64>) -> Result<DominantEnvelope> {
    if tail_params.is_empty() || d == 0 {
        return Err(Error::InvalidParameter("need at least one factor and d >= 1".into()));
    }
    let r_min = tail_params.iter().map(|t| t.r).fold(f64::INFINITY, f64::min);
    if !(r_min > d as f64) {
        return Err(Error::InvalidParameter(format!("smallest tail index {r_min} must exceed d = {d}")));
    }
    let tol = 1e-12 * r_min;
    let at_min: Vec<usize> = (0..tail_params.len()).filter(|&m| (tail_params[m].r - r_min).abs() <= tol).collect();
    let gamma_bar = at_min.iter().map(|&m| tail_params[m].gamma).fold(f64::NEG_INFINITY, f64::max);
    let dominant: Vec<usize> = at_min.into_iter().filter(|&m| tail_params[m].gamma == gamma_bar).collect();
    let slowly = if dominant.len() == 1 {
        tail_params[dominant[0]].slowly.clone()
    } else {
        SlowlyVarying::Max(dominant.iter().map(|&m| tail_params[m].slowly.clone()).collect())
    };
    let c = constant.unwrap_or(1.0);
    let edge = r_min / d as f64;
    let envelope = if gamma_bar < -1.0 {
        MomentEnvelope::indicator(edge)?.scaled(c)?
    } else {
        MomentEnvelope::moment_singularity(c, edge, gamma_bar + 1.0, slowly)?
    };
    Ok(DominantEnvelope { envelope, r_min, edge, gamma_bar, dominant, constant: c, shape_only: constant.is_none() })
}

/// Running-maximum envelope: `ζ(p)·p/(p−1)`.
pub fn doob_maximal_envelope(zeta: &MomentEnvelope) -> MomentEnvelope {
    MomentEnvelope::doob_maximal(zeta.clone())
}

/// Envelope `ψ_r(p) = ψ(p)·(r−p)^(−1/r)` for a variable `X` that satisfies a
/// good-λ inequality against `Y ∈ G(ψ)`, with `r = |log_β ε|`.
#[derive(Debug, Clone)]
pub struct GoodLambdaEnvelope {
    pub envelope: MomentEnvelope,
    pub r: f64,
    /// `C` in `‖X‖ ≤ C·‖Y‖`; not determined by the inequality itself.
    pub comparison_constant: f64,
}

pub fn good_lambda_envelope(psi: &MomentEnvelope, beta: f64, epsilon: f64) -> Result<GoodLambdaEnvelope> {
    if !(beta.is_finite() && beta > 1.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must exceed 1")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    let r = (epsilon.ln() / beta.ln()).abs();
    if r <= 1.0 {
        return Err(Error::CombinedExponent { r });
    }
    let correction = MomentEnvelope::power_singularity(1.0, r, 1.0 / r, SlowlyVarying::ONE)?;
    let envelope = MomentEnvelope::product(vec![psi.clone(), correction])?;
    Ok(GoodLambdaEnvelope { envelope, r, comparison_constant: 1.0 })
}

/// Order-of-magnitude composition of power singularities:
/// `(r−p)^(−ΣΔ_k)·Π L_k(1/(r−p))` at the combined exponent.
///
/// Only an asymptotic statement (`≍`) and never a substitute for the
/// numeric `⊗`.
#[derive(Debug, Clone)]
pub struct AsymptoticOrder {
    pub envelope: MomentEnvelope,
    pub combined_r: f64,
    pub total_delta: f64,
}

pub fn power_singularity_order(envs: &[MomentEnvelope]) -> Result<AsymptoticOrder> {
    let mut rs = Vec::new();
    let mut delta = 0.0;
    let mut scale = 1.0;
    let mut ls = Vec::new();
    for e in envs {
        match e.form() {
            EnvelopeForm::PowerSingularity { scale: c, r, delta: dl, slowly } => {
                rs.push(*r);
                delta += dl;
                scale *= c;
                ls.push(slowly.clone());
            }
            _ => return Err(Error::Unsupported("asymptotic order needs power-singularity factors".into())),
        }
    }
    let r = combined_exponent(rs);
    if r <= 1.0 {
        return Err(Error::CombinedExponent { r });
    }
    let slowly = if ls.iter().all(|l| l.is_constant()) {
        SlowlyVarying::Constant(ls.iter().map(|l| l.eval(1.0)).product())
    } else {
        SlowlyVarying::Product(ls)
    };
    Ok(AsymptoticOrder {
        envelope: MomentEnvelope::power_singularity(scale, r, delta, slowly)?,
        combined_r: r,
        total_delta: delta,
    })
}

/// Weights `z_j = Π_{s≠j} r_s / Σ_m Π_{l≠m} r_l`, i.e. `r / r_j`.
pub fn singularity_weights(rs: &[f64]) -> Vec<f64> {
    let r = combined_exponent(rs.iter().copied());
    rs.iter().map(|rj| r / rj).collect()
}

/// Upper bound for `⊗_m ν_m` from the fixed split `a_j = r/r_j`:
/// `Π ν_j(p·r_j/r)`.
pub fn split_upper_bound(envs: &[MomentEnvelope], p: f64) -> Result<f64> {
    let rs: Vec<f64> = envs.iter().map(|e| e.support().upper).collect();
    let r = combined_exponent(rs.iter().copied());
    if p >= r {
        return Ok(f64::INFINITY);
    }
    let mut v = 1.0;
    for (e, rj) in envs.iter().zip(&rs) {
        v *= e.eval(p * rj / r)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sqrt_growth() -> MomentEnvelope {
        MomentEnvelope::power_growth(1.0, 0.5, SlowlyVarying::ONE).unwrap()
    }

    #[test]
    fn constants() {
        assert_relative_eq!(GrowthConstant::MartingaleKM.eval(3.0), 3.0 * 2f64.sqrt());
        assert_relative_eq!(GrowthConstant::IndependentKI.eval(3.0), 0.87 * 3.0 / 3f64.ln());
        assert_eq!(GrowthConstant::IndependentKI.eval(1.2), GrowthConstant::IndependentKI.eval(2.0));
    }

    #[test]
    fn sqrt_growth_pair_is_two_p() {
        let e = sqrt_growth();
        for p in [1.0, 2.5, 7.0] {
            let o = otimes_split(&e, &e, p).unwrap();
            assert_relative_eq!(o.value, 2.0 * p, max_relative = 1e-9);
            assert!((o.split - 0.5).abs() < 1e-5);
        }
    }

    #[test]
    fn indicators_feasibility() {
        let a = MomentEnvelope::indicator(4.0).unwrap();
        assert_eq!(otimes(&a, &a, 1.5).unwrap(), 1.0);
        assert_eq!(otimes(&a, &a, 2.5).unwrap(), f64::INFINITY);
        assert!(otimes(&a, &a, 0.5).is_err());
    }

    #[test]
    fn single_element_chain_is_identity() {
        let e = MomentEnvelope::indicator(6.0).unwrap();
        let c = otimes_chain(std::slice::from_ref(&e), &ChainGrid::default()).unwrap();
        assert_eq!(c.eval(5.0).unwrap(), 1.0);
        assert!(matches!(c.form(), EnvelopeForm::Indicator { .. }));
    }

    #[test]
    fn chain_rejects_small_combined_exponent() {
        let e = MomentEnvelope::indicator(2.0).unwrap();
        assert!(matches!(otimes_chain(&[e.clone(), e], &ChainGrid::default()), Err(Error::CombinedExponent { .. })));
    }

    #[test]
    fn common_independent_arithmetic() {
        let nu = MomentEnvelope::indicator(8.0).unwrap();
        let z = zeta_chain(
            DependenceRegime::forward(RegimeTag::CommonIndependent),
            &[nu.clone(), nu],
            &GrowthConstant::MartingaleKM,
            &GrowthConstant::IndependentKI,
            &[3.0],
            &ChainGrid::default(),
        )
        .unwrap();
        let expected = (0.87 * 3.0 / 3f64.ln()) * (3.0 * 2f64.sqrt());
        assert_relative_eq!(z.eval(3.0).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 10.0787, max_relative = 1e-4);
    }

    #[test]
    fn martingale_base_case() {
        let nu = MomentEnvelope::power_singularity(1.0, 6.0, 1.0 / 6.0, SlowlyVarying::ONE).unwrap();
        let z = zeta_chain(
            DependenceRegime::forward(RegimeTag::Martingale),
            std::slice::from_ref(&nu),
            &GrowthConstant::MartingaleKM,
            &GrowthConstant::IndependentKI,
            &[2.0, 4.0, 5.5],
            &ChainGrid::default(),
        )
        .unwrap();
        for p in [2.0, 4.0, 5.5] {
            assert_relative_eq!(z.eval(p).unwrap(), p * 2f64.sqrt() * nu.eval(p).unwrap(), max_relative = 1e-14);
        }
    }

    #[test]
    fn zeta_rejects_grid_beyond_combined() {
        let nu = MomentEnvelope::indicator(6.0).unwrap();
        let r = zeta_chain(
            DependenceRegime::forward(RegimeTag::Martingale),
            &[nu.clone(), nu],
            &GrowthConstant::MartingaleKM,
            &GrowthConstant::IndependentKI,
            &[3.2],
            &ChainGrid::default(),
        );
        assert!(matches!(r, Err(Error::GridOutsideSupport { .. })));
    }

    #[test]
    fn dominant_envelope_two_factors() {
        let tails = [
            TailParams { r: 6.0, gamma: 0.0, slowly: SlowlyVarying::ONE },
            TailParams { r: 8.0, gamma: 0.0, slowly: SlowlyVarying::ONE },
        ];
        let d = polynomial_dominant_envelope(&tails, 2, None).unwrap();
        assert_eq!(d.edge, 3.0);
        assert_eq!(d.gamma_bar, 0.0);
        assert_eq!(d.dominant, vec![0]);
        assert!(d.shape_only);
        for p in [1.0, 2.0, 2.9] {
            assert_relative_eq!(d.envelope.eval(p).unwrap(), (3.0 - p).powf(-1.0 / p), max_relative = 1e-14);
        }
        assert!(polynomial_dominant_envelope(&tails, 6, None).is_err());
    }

    #[test]
    fn doob_factor_examples() {
        let z = MomentEnvelope::indicator(1e6).unwrap();
        let d = doob_maximal_envelope(&z);
        assert_relative_eq!(d.eval(2.0).unwrap(), 2.0);
        assert!((d.eval(1e5).unwrap() - 1.0).abs() < 1e-4);
        let d4 = doob_maximal_envelope(&MomentEnvelope::indicator(4.0).unwrap());
        assert_relative_eq!(d4.eval(3.0).unwrap(), 1.5);
        assert!(d4.eval(1.0).is_err());
    }

    #[test]
    fn good_lambda_examples() {
        let psi = MomentEnvelope::indicator(4.0).unwrap();
        let g = good_lambda_envelope(&psi, 2.0, 1.0 / 16.0).unwrap();
        assert_relative_eq!(g.r, 4.0, max_relative = 1e-14);
        assert_relative_eq!(g.envelope.eval(3.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(g.envelope.eval(3.5).unwrap(), 0.5f64.powf(-0.25), max_relative = 1e-14);
        assert!(!g.envelope.support().upper_closed);
        assert!(good_lambda_envelope(&psi, 2.0, 0.9).is_err());
        assert!(good_lambda_envelope(&psi, 0.5, 0.1).is_err());
    }

    #[test]
    fn asymptotic_order_requires_power_singularities() {
        let a = MomentEnvelope::power_singularity(2.0, 4.0, 0.25, SlowlyVarying::ONE).unwrap();
        let o = power_singularity_order(&[a.clone(), a]).unwrap();
        assert_relative_eq!(o.combined_r, 2.0);
        assert_relative_eq!(o.total_delta, 0.5);
        assert!(power_singularity_order(&[MomentEnvelope::indicator(4.0).unwrap()]).is_err());
    }

    #[test]
    fn weights_sum_to_one() {
        let z = singularity_weights(&[4.0, 6.0, 12.0]);
        assert_relative_eq!(z.iter().sum::<f64>(), 1.0, max_relative = 1e-14);
    }
}
