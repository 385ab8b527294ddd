//! Monte Carlo verification of the moment and tail bounds.
//!
//! An [`ExperimentPlan`] pairs a model with a bound; [`run_experiment`]
//! simulates, estimates `|Q|_p` and `P(|Q| ≥ x)` with batch-means errors and
//! applies the one-sided rule `empirical − 2·stderr ≤ bound`. Exact
//! enumeration ([`brute_force_moments`]) backs the estimates on finite
//! models.

use std::path::Path;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{doob_maximal_envelope, Direction, RegimeTag, ZetaChain};
use crate::envelope::{batch_means_stderr, estimate_from_powers, MomentEnvelope, MomentEstimate};
use crate::error::{Error, Result};
use crate::numeric::linspace;
use crate::polymodel::sample::{evaluate, fair_sign, omega, par_batches};
use crate::polymodel::{
    sample_q, sample_q_multi, sample_running_max, standardize_model, Centering, CoefficientTensor, Coupling,
    InputDistribution, PolynomialModel,
};
use crate::tails::{dominance_check, fit_rescale, tail_from_envelope, ConjugateSpec, TailRow};

pub const MIN_REPLICATIONS: usize = 1000;
pub const SCHEMA_VERSION: u32 = 1;

/// The bound under test.
#[derive(Debug, Clone)]
pub enum BoundSource {
    Zeta(ZetaChain),
    Envelope(MomentEnvelope),
}

impl BoundSource {
    pub fn envelope(&self) -> &MomentEnvelope {
        match self {
            BoundSource::Zeta(z) => z.final_stage(),
            BoundSource::Envelope(e) => e,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub model: PolynomialModel,
    pub replications: usize,
    pub p_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub bound: BoundSource,
    /// Envelope and norm factor for the tail bound; by default the bound's
    /// envelope with factor 1.
    pub tail_spec: Option<ConjugateSpec>,
    pub seed: u64,
    /// Number of coefficient tensors in the sweep over `B`.
    pub b_sweep: Option<usize>,
    /// Fit the x-rescale of the tail bound; tail violations are fatal only
    /// when it is enabled.
    pub fit_tail_rescale: bool,
}

impl ExperimentPlan {
    pub fn new(model: PolynomialModel, bound: BoundSource, p_grid: Vec<f64>, replications: usize, seed: u64) -> Self {
        Self {
            model,
            replications,
            p_grid,
            x_grid: vec![5.0, 10.0, 20.0, 50.0],
            bound,
            tail_spec: None,
            seed,
            b_sweep: None,
            fit_tail_rescale: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub p: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
    /// `p` beyond half the moment boundary: the error bar is unreliable.
    pub high_variance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub max_empirical: f64,
    pub stderr: f64,
    pub argmax: String,
    pub bound: f64,
    pub pass: bool,
    /// `empirical / bound` per swept tensor.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub tensors: Vec<String>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub k_m: String,
    pub k_i: String,
    pub envelope_inflation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    /// `"moments"` or `"doob"`.
    pub kind: String,
    pub regime: RegimeTag,
    pub direction: Direction,
    pub coupling: String,
    pub d: usize,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub combined_r: f64,
    pub constants: Constants,
    /// Fitted `C₁` (the tail bound is evaluated at `x / C₁`).
    pub tail_rescale: f64,
    pub tail_fatal: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub meta: ReportMeta,
    pub moments: Vec<MomentRow>,
    pub tails: Vec<TailRow>,
    pub sweep: Option<SweepReport>,
    pub moment_pass: bool,
    pub tail_pass: bool,
    pub pass: bool,
    /// Configuration that produced the report, when run from one.
    #[serde(default)]
    pub config: Option<serde_json::Value>,
    #[serde(default)]
    pub timing: Timing,
}

impl VerificationReport {
    /// Equality of everything except the wall-clock timing.
    pub fn same_results(&self, other: &Self) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.timing = Timing::default();
        b.timing = Timing::default();
        a == b
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// CSV with columns `p, empirical, stderr, bound, ratio, pass`.
    pub fn write_moments_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["p", "empirical", "stderr", "bound", "ratio", "pass"])?;
        for r in &self.moments {
            w.write_record([fmt(r.p), fmt(r.empirical), fmt(r.stderr), fmt(r.bound), fmt(r.ratio), r.pass.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV with columns `x, empirical, stderr, bound, pass`.
    pub fn write_tails_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "empirical", "stderr", "bound", "pass"])?;
        for r in &self.tails {
            w.write_record([fmt(r.x), fmt(r.empirical), fmt(r.stderr), fmt(r.bound), r.pass.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal, independent of locale.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn validate(plan: &ExperimentPlan, bound: &MomentEnvelope) -> Result<Vec<String>> {
    if plan.replications < MIN_REPLICATIONS {
        return Err(Error::TooFewReplications { got: plan.replications, min: MIN_REPLICATIONS });
    }
    if plan.p_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (upper, _) = bound.finite_upper();
    let mut warnings = Vec::new();
    for &p in &plan.p_grid {
        if !bound.eval(p)?.is_finite() {
            return Err(Error::SupportExceeded { p, upper });
        }
        if upper.is_finite() && p > 0.8 * upper {
            warnings.push(format!("p = {p} exceeds 0.8 of the bound's support ({upper}); estimates are noisy"));
        }
    }
    Ok(warnings)
}

/// Empirical `P(|x| ≥ t)` with a batch-means standard error.
pub fn empirical_tail(sample: &[f64], t: f64) -> (f64, f64) {
    let ind: Vec<f64> = sample.iter().map(|v| if v.abs() >= t { 1.0 } else { 0.0 }).collect();
    let mean = ind.iter().sum::<f64>() / ind.len() as f64;
    (mean, batch_means_stderr(&ind, mean).0)
}

fn moment_rows(sample: &[f64], plan: &ExperimentPlan, bound: &MomentEnvelope, boundary: f64) -> Result<Vec<MomentRow>> {
    plan.p_grid
        .iter()
        .map(|&p| {
            let powers: Vec<f64> = sample.iter().map(|v| v.abs().powf(p)).collect();
            let est = estimate_from_powers(&powers, p).with_moment_boundary(boundary);
            let b = bound.eval(p)?;
            Ok(MomentRow {
                p,
                empirical: est.norm,
                stderr: est.norm_stderr,
                bound: b,
                ratio: est.norm / b,
                pass: est.norm - 2.0 * est.norm_stderr <= b,
                high_variance: est.high_variance,
            })
        })
        .collect()
}

fn tail_rows(sample: &[f64], plan: &ExperimentPlan, bound: &MomentEnvelope) -> Result<(Vec<TailRow>, f64, bool)> {
    if plan.x_grid.is_empty() {
        return Ok((Vec::new(), 1.0, true));
    }
    let spec = match &plan.tail_spec {
        Some(s) => s.clone(),
        None => ConjugateSpec::with_default_grid(bound.clone(), 1.0)?,
    };
    let t = |x: f64| tail_from_envelope(&spec, x).unwrap_or(1.0);
    let emp: Vec<(f64, f64)> = plan.x_grid.iter().map(|&x| empirical_tail(sample, x)).collect();
    let mut rescale = 1.0;
    if plan.fit_tail_rescale {
        if let Some(k) = emp.iter().position(|e| e.0 > 0.0) {
            if let Some(c) = fit_rescale(t, plan.x_grid[k], emp[k].0) {
                rescale = c;
            }
        }
    }
    let lookup = |x: f64| {
        let k = plan.x_grid.iter().position(|v| *v == x).expect("grid point");
        emp[k]
    };
    let rep = dominance_check(t, lookup, &plan.x_grid, rescale);
    Ok((rep.rows, rescale, rep.pass))
}

fn sweep_tensors(model: &PolynomialModel, count: usize, seed: u64) -> Result<(Vec<CoefficientTensor>, Vec<String>)> {
    use rand::SeedableRng;
    let (d, n) = (model.d(), model.n());
    let mut tensors = vec![CoefficientTensor::uniform(d, n)?];
    let mut labels = vec!["uniform".to_string()];
    if count >= 2 {
        tensors.push(crate::polymodel::TensorSpec::Single { index: None, value: 1.0 }.build(d, n)?);
        labels.push("single".to_string());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed_5eed_5eed);
    for k in 2..count {
        tensors.push(CoefficientTensor::random_unit(d, n, &mut rng)?);
        labels.push(format!("random-{k}"));
    }
    Ok((tensors, labels))
}

fn run_sweep(plan: &ExperimentPlan, bound: &MomentEnvelope, count: usize) -> Result<SweepReport> {
    let (tensors, labels) = sweep_tensors(&plan.model, count, plan.seed)?;
    let values = sample_q_multi(&plan.model, &tensors, plan.seed, plan.replications)?;
    let mut rows = Vec::new();
    for &p in &plan.p_grid {
        let b = bound.eval(p)?;
        let ests: Vec<MomentEstimate> = (0..tensors.len())
            .map(|k| {
                let powers: Vec<f64> = values.iter().map(|v| v[k].abs().powf(p)).collect();
                estimate_from_powers(&powers, p)
            })
            .collect();
        let (kmax, best) = ests
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm.total_cmp(&b.1.norm))
            .expect("at least one tensor");
        rows.push(SweepRow {
            p,
            max_empirical: best.norm,
            stderr: best.norm_stderr,
            argmax: labels[kmax].clone(),
            bound: b,
            pass: ests.iter().all(|e| e.norm - 2.0 * e.norm_stderr <= b),
            ratios: ests.iter().map(|e| e.norm / b).collect(),
        });
    }
    Ok(SweepReport { tensors: labels, rows })
}

fn build_report(
    plan: &ExperimentPlan,
    kind: &str,
    sample: &[f64],
    bound: &MomentEnvelope,
    mut warnings: Vec<String>,
    start: Instant,
) -> Result<VerificationReport> {
    let model = &plan.model;
    let boundary = model.combined_exponent();
    let moments = moment_rows(sample, plan, bound, boundary)?;
    if moments.iter().any(|r| r.high_variance) {
        warnings.push(format!("some p exceed half the moment boundary {boundary}: infinite-variance estimates"));
    }
    let (tails, rescale, tails_ok) = tail_rows(sample, plan, bound)?;
    let sweep = match plan.b_sweep {
        Some(k) if k > 0 && kind == "moments" => Some(run_sweep(plan, bound, k)?),
        _ => None,
    };
    let sweep_ok = sweep.as_ref().is_none_or(|s| s.rows.iter().all(|r| r.pass));
    let moment_pass = moments.iter().all(|r| r.pass) && sweep_ok;
    let tail_fatal = plan.fit_tail_rescale;
    let pass = moment_pass && (tails_ok || !tail_fatal);
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        meta: ReportMeta {
            kind: kind.to_string(),
            regime: model.regime().tag,
            direction: model.regime().direction,
            coupling: model.coupling().label().to_string(),
            d: model.d(),
            n: model.n(),
            replications: plan.replications,
            seed: plan.seed,
            combined_r: model.combined_exponent(),
            constants: Constants {
                k_m: "p*sqrt(2)".into(),
                k_i: "0.87*p/ln(p)".into(),
                envelope_inflation: model.coupling().inflation(),
            },
            tail_rescale: rescale,
            tail_fatal,
            warnings,
        },
        moments,
        tails,
        sweep,
        moment_pass,
        tail_pass: tails_ok,
        pass,
        config: None,
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64() },
    })
}

/// Simulates `Q_d` and compares its moments and tails with the bound.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<VerificationReport> {
    let start = Instant::now();
    let bound = plan.bound.envelope();
    let warnings = validate(plan, bound)?;
    let sample = sample_q(&plan.model, plan.seed, plan.replications)?;
    build_report(plan, "moments", &sample, bound, warnings, start)
}

/// Compares the running maximum `max_k |Q(d, k, b)|` with the bound times
/// the Doob factor `p/(p−1)`.
pub fn doob_experiment(plan: &ExperimentPlan) -> Result<VerificationReport> {
    let start = Instant::now();
    let bound = doob_maximal_envelope(plan.bound.envelope());
    let warnings = validate(plan, &bound)?;
    let sample = sample_running_max(&plan.model, plan.seed, plan.replications)?;
    build_report(plan, "doob", &sample, &bound, warnings, start)
}

/// Checks an externally drawn sample of the plan's model (e.g. a centered
/// diagonal polynomial or a reverse window) against `bound`.
pub fn verify_sample(plan: &ExperimentPlan, kind: &str, sample: &[f64], bound: &MomentEnvelope) -> Result<VerificationReport> {
    let start = Instant::now();
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let warnings = validate(plan, bound)?;
    build_report(plan, kind, sample, bound, warnings, start)
}

pub const STATE_LIMIT: u64 = 1 << 24;

/// Per-slot outcome lists for exact enumeration: each slot is independent,
/// outcome `o` of slot `s` fixes some cells.
struct Enumeration {
    /// `slots[s][o] = (probability, [(cell, value)])`.
    slots: Vec<Vec<(f64, Vec<(usize, f64)>)>>,
}

fn enumeration(model: &PolynomialModel) -> Result<Enumeration> {
    let (d, n) = (model.d(), model.n());
    let f = model.factors();
    if f.iter().any(|l| !l.is_finite_support()) {
        return Err(Error::Unsupported("exact enumeration needs finitely supported inputs".into()));
    }
    let mut slots = Vec::new();
    match model.coupling() {
        Coupling::Independent => {
            for i in 0..n {
                for (m, law) in f.iter().enumerate() {
                    let atoms = law.finite_atoms().expect("finite law");
                    slots.push(atoms.into_iter().filter(|a| a.1 > 0.0).map(|(v, p)| (p, vec![(m * n + i, v)])).collect());
                }
            }
        }
        Coupling::Coincident => {
            let mut breaks: Vec<f64> = f.iter().flat_map(|l| l.omega_breaks().expect("finite law").to_vec()).collect();
            breaks.push(0.0);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let signs: &[f64] = if f.iter().any(|l| l.centering() == Centering::SignSymmetric) { &[-1.0, 1.0] } else { &[1.0] };
            for i in 0..n {
                let mut outcomes = Vec::new();
                for w in breaks.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    if hi <= lo {
                        continue;
                    }
                    let mid = 0.5 * (lo + hi);
                    for &s in signs {
                        let cells = (0..d).map(|m| (m * n + i, f[m].value(mid, s))).collect();
                        outcomes.push(((hi - lo) / signs.len() as f64, cells));
                    }
                }
                slots.push(outcomes);
            }
        }
        c => return Err(Error::Unsupported(format!("exact enumeration is not available for {} coupling", c.label()))),
    }
    let states: f64 = slots.iter().map(|s| s.len() as f64).product();
    if states > STATE_LIMIT as f64 {
        return Err(Error::StateSpaceTooLarge { states, limit: STATE_LIMIT });
    }
    Ok(Enumeration { slots })
}

fn enumerate_moments(model: &PolynomialModel, p_list: &[f64], running: bool) -> Result<Vec<f64>> {
    let e = enumeration(model)?;
    let t = model.coefficients().compile();
    let n = model.n();
    let mut x = vec![0.0; model.d() * n];
    let mut counter = vec![0usize; e.slots.len()];
    let mut acc = vec![0.0; p_list.len()];
    loop {
        let mut prob = 1.0;
        for (s, &o) in e.slots.iter().zip(&counter) {
            let (pr, cells) = &s[o];
            prob *= pr;
            for &(c, v) in cells {
                x[c] = v;
            }
        }
        let (q, max) = evaluate(&t, &x, n, running);
        let v = if running { max } else { q }.abs();
        for (a, &p) in acc.iter_mut().zip(p_list) {
            *a += prob * v.powf(p);
        }
        // mixed-radix increment
        let mut k = 0;
        loop {
            if k == counter.len() {
                return Ok(acc);
            }
            counter[k] += 1;
            if counter[k] < e.slots[k].len() {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
    }
}

/// Exact `E|Q|^p` by enumerating every outcome of a finitely supported model
/// (independent or coincident cells, at most 2²⁴ states).
pub fn brute_force_moments(model: &PolynomialModel, p_list: &[f64]) -> Result<Vec<f64>> {
    enumerate_moments(model, p_list, false)
}

/// Exact `E[max_k |Q(d, k, b)|^p]` by the same enumeration.
pub fn brute_force_running_max_moments(model: &PolynomialModel, p_list: &[f64]) -> Result<Vec<f64>> {
    enumerate_moments(model, p_list, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub replications: usize,
    /// Median over independent repeats of `mean |Q|^p`.
    pub median_power_mean: f64,
    /// Standard error of that median, from the interquartile range.
    pub median_stderr: f64,
    pub median_norm: f64,
    pub estimates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub p: f64,
    pub rows: Vec<TrendRow>,
    /// Least-squares slope of `ln(median power mean)` against `ln N`.
    pub slope: f64,
    pub threshold: f64,
    /// Non-stabilization: positive slope above the threshold and a rise
    /// beyond the error bars.
    pub drift: bool,
}

pub const TREND_REPEATS: usize = 16;
pub const DRIFT_SLOPE: f64 = 0.05;

/// Estimates `|Q|_p` across an increasing schedule of sample sizes and flags
/// moment explosion.
pub fn convergence_diagnostics(model: &PolynomialModel, p: f64, schedule: &[usize], seed: u64) -> Result<TrendReport> {
    convergence_diagnostics_with(|s, n| sample_q(model, s, n), p, schedule, seed)
}

/// [`convergence_diagnostics`] for any seeded sampler.
pub fn convergence_diagnostics_with(
    sampler: impl Fn(u64, usize) -> Result<Vec<f64>>,
    p: f64,
    schedule: &[usize],
    seed: u64,
) -> Result<TrendReport> {
    if schedule.len() < 2 || !schedule.windows(2).all(|w| w[0] < w[1]) || schedule[0] == 0 {
        return Err(Error::InvalidParameter("schedule must hold at least two increasing sizes".into()));
    }
    let mut rows = Vec::new();
    for (j, &size) in schedule.iter().enumerate() {
        let mut estimates = Vec::with_capacity(TREND_REPEATS);
        for k in 0..TREND_REPEATS {
            let s = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul((j * TREND_REPEATS + k + 1) as u64));
            let sample = sampler(s, size)?;
            estimates.push(sample.iter().map(|v| v.abs().powf(p)).sum::<f64>() / size as f64);
        }
        let mut sorted = estimates.clone();
        sorted.sort_by(f64::total_cmp);
        let q = |f: f64| sorted[((sorted.len() - 1) as f64 * f).round() as usize];
        let median = 0.5 * (sorted[(sorted.len() - 1) / 2] + sorted[sorted.len() / 2]);
        // IQR ≈ 1.349σ and the median's error is ≈ 1.2533σ/√K
        let se = 1.2533 * (q(0.75) - q(0.25)) / 1.349 / (TREND_REPEATS as f64).sqrt();
        rows.push(TrendRow {
            replications: size,
            median_power_mean: median,
            median_stderr: se,
            median_norm: median.powf(1.0 / p),
            estimates,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.replications as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_power_mean.max(f64::MIN_POSITIVE).ln()).collect();
    let slope = ls_slope(&xs, &ys);
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let rise = last.median_power_mean - first.median_power_mean;
    let noise = 2.0 * (first.median_stderr.powi(2) + last.median_stderr.powi(2)).sqrt();
    let drift = slope > DRIFT_SLOPE && rise > noise;
    Ok(TrendReport { p, rows, slope, threshold: DRIFT_SLOPE, drift })
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `|ξ|_p` estimated with the top `q` of the law (`ω ≤ q`) integrated
/// exactly and the bulk `ω ∈ (q, 1]` sampled.
pub fn stratified_moment(dist: &InputDistribution, p: f64, reps: usize, seed: u64, q: f64) -> Result<MomentEstimate> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("stratum q = {q} must lie in (0, 1)")));
    }
    if reps == 0 {
        return Err(Error::EmptySample);
    }
    let tail = dist.upper_tail_abs_moment(p, q)?;
    let signed = dist.centering() == Centering::SignSymmetric;
    let bulk: Vec<f64> = par_batches(seed, reps, |rng, count| {
        (0..count)
            .map(|_| {
                let w = q + (1.0 - q) * omega(rng);
                let s = if signed { fair_sign(rng) } else { 1.0 };
                dist.value(w, s).abs().powf(p)
            })
            .collect()
    });
    let b = estimate_from_powers(&bulk, p);
    let mean = (1.0 - q) * b.power_mean + tail;
    let se = (1.0 - q) * b.power_mean_stderr;
    let norm = mean.powf(1.0 / p);
    Ok(MomentEstimate {
        p,
        norm,
        power_mean: mean,
        power_mean_stderr: se,
        norm_stderr: norm / (p * mean) * se,
        batches: b.batches,
        high_variance: false,
    }
    .with_moment_boundary(dist.moment_boundary()))
}

/// Five points evenly inside `(1, 0.9·r)`.
pub fn battery_p_grid(combined_r: f64) -> Vec<f64> {
    let hi = 0.9 * combined_r;
    linspace(7, 1.0, hi)[1..6].to_vec()
}

/// The standardized Pareto model used by the dominance battery for one
/// regime: centered `ParetoPower(r_m)` inputs, uniform `b`, with the
/// coupling that exercises the regime's dependence.
pub fn battery_model(tag: RegimeTag, d: usize, n: usize, rs: &[f64]) -> Result<PolynomialModel> {
    if rs.len() != d {
        return Err(Error::InvalidParameter("one tail index per factor".into()));
    }
    let (coupling, centering) = match tag {
        RegimeTag::CommonIndependent => (Coupling::Independent, Centering::Mean),
        RegimeTag::InsideIndependent => (Coupling::LaggedMagnitude, Centering::SignSymmetric),
        RegimeTag::VectorIndependent => (Coupling::VectorModulated { spread: 0.5 }, Centering::Mean),
        RegimeTag::Martingale => (Coupling::Modulated { spread: 0.5 }, Centering::SignSymmetric),
    };
    let laws = rs.iter().map(|&r| InputDistribution::pareto_power(r, centering)).collect::<Result<Vec<_>>>()?;
    let model = PolynomialModel::new(
        CoefficientTensor::uniform(d, n)?,
        crate::calculus::DependenceRegime::forward(tag),
        laws,
        coupling,
    )?;
    standardize_model(&model)
}

/// Uniform draw helper kept public for tests that build their own strata.
pub fn uniform_omega<R: Rng>(rng: &mut R) -> f64 {
    omega(rng)
}
