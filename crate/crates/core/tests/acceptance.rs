//! Acceptance criteria 1–10. Each criterion prints one `PASS`/`FAIL` line
//! with its measured figures; run with `--nocapture` to see them.

use std::time::Instant;

use polymart::calculus::{
    otimes_split, polynomial_dominant_envelope, zeta_chain, ChainGrid, DependenceRegime, GrowthConstant, RegimeTag,
    TailParams,
};
use polymart::envelope::{gls_norm, moments_from_tail, MomentEnvelope, SlowlyVarying, TailBound};
use polymart::mcverify::{
    battery_model, battery_p_grid, brute_force_moments, brute_force_running_max_moments, convergence_diagnostics_with,
    doob_experiment, run_experiment, stratified_moment, BoundSource, ExperimentPlan,
};
use polymart::polymodel::{
    sample_q, sample_r, sample_reverse_v, sample_running_max, variance_of_q, Centering, CoefficientTensor, Coupling,
    InputDistribution, PolynomialModel,
};
use polymart::tails::{conjugate_tail, tail_from_envelope, ConjugateSpec};
use polymart::{empirical_moments, otimes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u8,
    pass: bool,
    detail: String,
    secs: f64,
    budget: f64,
}

fn report(o: &Outcome) -> bool {
    let timely = o.secs <= o.budget;
    let ok = o.pass && timely;
    println!(
        "criterion {:>2}: {}  ({:.2}s / {:.0}s budget) {}",
        o.id,
        if ok { "PASS" } else { "FAIL" },
        o.secs,
        o.budget,
        o.detail
    );
    ok
}

fn timed(id: u8, budget: f64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (pass, detail) = f();
    Outcome { id, pass, detail, secs: t.elapsed().as_secs_f64(), budget }
}

fn c1() -> (bool, String) {
    let nu = MomentEnvelope::power_growth(1.0, 0.5, SlowlyVarying::ONE).unwrap();
    let mut worst_v: f64 = 0.0;
    let mut worst_a: f64 = 0.0;
    for k in 1..=10 {
        let p = k as f64;
        let o = otimes_split(&nu, &nu, p).unwrap();
        worst_v = worst_v.max((o.value - 2.0 * p).abs() / (2.0 * p));
        worst_a = worst_a.max((o.split - 0.5).abs());
    }
    (worst_v <= 1e-6 && worst_a <= 1e-4, format!("max rel err {worst_v:.2e}, max |a-0.5| {worst_a:.2e}"))
}

fn c2() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..20 {
        let r1 = rng.random_range(1.5..20.0);
        let r2 = rng.random_range(1.5..20.0);
        let r = 1.0 / (1.0 / r1 + 1.0 / r2);
        let (a, b) = (MomentEnvelope::indicator(r1).unwrap(), MomentEnvelope::indicator(r2).unwrap());
        for f in [0.05, 0.3, 0.6, 0.9, 0.99] {
            let p = 1.0 + f * (r - 1.0);
            if p >= 1.0 && otimes(&a, &b, p).unwrap() != 1.0 {
                bad += 1;
            }
        }
        for f in [1.0001, 1.2, 2.0] {
            if otimes(&a, &b, r * f).unwrap() != f64::INFINITY {
                bad += 1;
            }
        }
    }
    (bad == 0, format!("{bad} mismatches over 20 pairs"))
}

fn c3() -> (bool, String) {
    let law = InputDistribution::pareto_power(4.0, Centering::None).unwrap();
    let tail = TailBound::regular_variation_from(4.0, 0.0, SlowlyVarying::ONE, 1.0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, p) in [1.0f64, 2.0, 3.0, 3.5].into_iter().enumerate() {
        let exact = (4.0 / (4.0 - p)).powf(1.0 / p);
        let est = stratified_moment(&law, p, 1_000_000, 30 + k as u64, 1e-3).unwrap();
        let z = (est.norm - exact).abs() / est.norm_stderr;
        let q = moments_from_tail(&tail, p).unwrap();
        let qerr = (q - exact).abs() / exact;
        ok &= z <= 3.0 && qerr <= 1e-6;
        parts.push(format!("p={p}: z={z:.2} quad={qerr:.1e}"));
    }
    (ok, parts.join(", "))
}

fn c4() -> (bool, String) {
    let spec = ConjugateSpec::with_default_grid(MomentEnvelope::indicator(4.0).unwrap(), 1.0).unwrap();
    let t = tail_from_envelope(&spec, 10.0).unwrap();
    let c = conjugate_tail(&spec, 10.0).unwrap();
    let e1 = (t.ln() - 1e-4f64.ln()).abs() / 1e-4f64.ln().abs();
    let e2 = (c.ln() - 1e-4f64.ln()).abs() / 1e-4f64.ln().abs();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        // log-convex increasing table: ln ν = a + b·p + c·p²
        let (a, b, cc) = (rng.random_range(-0.5..0.5), rng.random_range(0.0..0.5), rng.random_range(0.0..0.1));
        let r = rng.random_range(3.0..12.0);
        let ps: Vec<f64> = (0..40).map(|k| 1.0 + (r - 1.0) * k as f64 / 39.0).collect();
        let vs: Vec<f64> = ps.iter().map(|p| (a + b * p + cc * p * p).exp()).collect();
        let env = MomentEnvelope::tabulated(ps.clone(), vs).unwrap();
        let spec = ConjugateSpec::new(env, 1.0, ps).unwrap();
        for x in [5.0, 20.0, 100.0, 1e4] {
            let (ti, tc) = (tail_from_envelope(&spec, x).unwrap(), conjugate_tail(&spec, x).unwrap());
            let d = (ti.ln() - tc.ln()).abs() / ti.ln().abs().max(1e-300);
            if ti < 1.0 {
                worst = worst.max(d);
            }
        }
    }
    (
        e1 <= 1e-10 && e2 <= 1e-10 && worst <= 1e-10,
        format!("inf-form {t:.6e}, conjugate {c:.6e}, worst log disagreement {worst:.1e}"),
    )
}

fn c5() -> (bool, String) {
    let model = PolynomialModel::new(
        CoefficientTensor::uniform(2, 3).unwrap().normalized().unwrap(),
        DependenceRegime::forward(RegimeTag::CommonIndependent),
        vec![InputDistribution::rademacher(); 2],
        Coupling::Independent,
    )
    .unwrap();
    let ps = [1.0, 2.0, 3.0, 4.0];
    let exact = brute_force_moments(&model, &ps).unwrap();
    // 64 sign patterns of the 2×3 grid, enumerated here by hand
    let w = 1.0 / 3f64.sqrt();
    let mut oracle = [0.0; 4];
    for mask in 0u32..64 {
        let s = |k: u32| if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
        let q = w * (s(0) * s(4) + s(0) * s(5) + s(1) * s(5));
        for (o, p) in oracle.iter_mut().zip(&ps) {
            *o += q.abs().powf(*p) / 64.0;
        }
    }
    let sample = sample_q(&model, 5, 1_000_000).unwrap();
    let mut ok = exact.iter().zip(&oracle).all(|(e, o)| (e - o).abs() <= 1e-12 * o);
    let mut parts = Vec::new();
    for (p, e) in ps.iter().zip(&exact) {
        let est = empirical_moments(&sample, *p).unwrap();
        let z = (est.power_mean - e).abs() / est.power_mean_stderr;
        ok &= z <= 4.0;
        parts.push(format!("p={p}: z={z:.2}"));
    }
    let var = variance_of_q(model.coefficients(), &vec![vec![1.0; 2]; 3]).unwrap();
    // 3·(1/√3)² rounds to 1 + 2⁻⁵²
    ok &= (var - 1.0).abs() <= 4.0 * f64::EPSILON && (exact[1] - 1.0).abs() <= 4.0 * f64::EPSILON;
    (ok, format!("{}, Var Q = {var}", parts.join(", ")))
}

fn battery() -> (Outcome, Outcome) {
    let t = Instant::now();
    let mut violations = 0;
    let mut tail_violations = 0;
    let mut configs = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut rescales = Vec::new();
    let mut notes = Vec::new();
    for tag in [RegimeTag::CommonIndependent, RegimeTag::InsideIndependent, RegimeTag::VectorIndependent, RegimeTag::Martingale] {
        for d in 1..=3 {
            for n in [5, 20] {
                for rs in [vec![6.0; d], (0..d).map(|m| if m % 2 == 0 { 8.0 } else { 6.0 }).collect()] {
                    let model = battery_model(tag, d, n, &rs).unwrap();
                    let grid = battery_p_grid(model.combined_exponent());
                    let zeta = model.zeta(&grid).unwrap();
                    let seed = 600 + configs as u64;
                    let plan = ExperimentPlan::new(model, BoundSource::Zeta(zeta), grid, 1_000_000, seed);
                    let rep = run_experiment(&plan).unwrap();
                    configs += 1;
                    violations += rep.moments.iter().filter(|r| !r.pass).count();
                    tail_violations += rep.tails.iter().filter(|r| !r.pass).count();
                    for r in &rep.moments {
                        worst_ratio = worst_ratio.max(r.ratio);
                    }
                    rescales.push(rep.meta.tail_rescale);
                    if !rep.pass {
                        notes.push(format!("{tag:?} d={d} n={n} rs={rs:?}"));
                    }
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let (lo, hi) = rescales.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    (
        Outcome {
            id: 6,
            pass: violations == 0,
            detail: format!("{configs} models, {violations} violations, max empirical/zeta {worst_ratio:.3} {notes:?}"),
            secs,
            budget: 600.0,
        },
        Outcome {
            id: 7,
            pass: tail_violations == 0,
            detail: format!("{tail_violations} tail violations, fitted rescale C in [{lo:.3}, {hi:.3}]"),
            secs,
            budget: 600.0,
        },
    )
}

fn c8() -> (bool, String) {
    let r = 6.0;
    let n = 50;
    let law = InputDistribution::pareto_power(r, Centering::None).unwrap();
    let model = PolynomialModel::new(
        CoefficientTensor::uniform(1, n).unwrap().normalized().unwrap(),
        DependenceRegime::forward(RegimeTag::CommonIndependent),
        vec![law],
        Coupling::Independent,
    )
    .unwrap();
    let sampler = |s: u64, k: usize| sample_r(&model, &[2], s, k);
    let schedule = [10_000, 40_000, 160_000, 640_000];
    let stable = convergence_diagnostics_with(sampler, 2.5, &schedule, 81).unwrap();
    let drift = convergence_diagnostics_with(sampler, 3.5, &schedule, 82).unwrap();
    let shape = polynomial_dominant_envelope(&[TailParams { r, gamma: 0.0, slowly: SlowlyVarying::ONE }], 2, None).unwrap();
    let ps = [1.5, 2.0, 2.5];
    // constant fitted on an independent pilot run
    let pilot = sample_r(&model, &[2], 83, 200_000).unwrap();
    let c = gls_norm(|p| empirical_moments(&pilot, p).unwrap().norm, &shape.envelope, &ps).unwrap();
    let fitted = shape.envelope.clone().scaled(c).unwrap();
    let main = sample_r(&model, &[2], 84, 1_000_000).unwrap();
    let mut dominated = true;
    for &p in &ps {
        let est = empirical_moments(&main, p).unwrap();
        dominated &= est.norm - 2.0 * est.norm_stderr <= fitted.eval(p).unwrap();
    }
    (
        !stable.drift && drift.drift && dominated && shape.edge == 3.0,
        format!(
            "slope(p=2.5) {:.3} drift={}, slope(p=3.5) {:.3} drift={}, fitted C {c:.4}, dominated={dominated}",
            stable.slope, stable.drift, drift.slope, drift.drift
        ),
    )
}

fn c9() -> (bool, String) {
    let nu = InputDistribution::pareto_power(8.0, Centering::SignSymmetric).unwrap().natural_envelope().unwrap();
    let grid = [1.2, 1.5, 2.0, 2.4];
    let mut worst: f64 = 0.0;
    for tag in [RegimeTag::Martingale, RegimeTag::CommonIndependent, RegimeTag::InsideIndependent, RegimeTag::VectorIndependent] {
        let nus = vec![nu.clone(); 3];
        let f = zeta_chain(DependenceRegime::forward(tag), &nus, &GrowthConstant::MartingaleKM, &GrowthConstant::IndependentKI, &grid, &ChainGrid::default()).unwrap();
        let r = zeta_chain(DependenceRegime::reverse(tag), &nus, &GrowthConstant::MartingaleKM, &GrowthConstant::IndependentKI, &grid, &ChainGrid::default()).unwrap();
        for &p in &grid {
            let (a, b) = (f.eval(p).unwrap(), r.eval(p).unwrap());
            worst = worst.max((a - b).abs() / a);
        }
    }
    let model = PolynomialModel::new(
        CoefficientTensor::uniform(2, 8).unwrap().normalized().unwrap(),
        DependenceRegime::reverse(RegimeTag::Martingale),
        vec![InputDistribution::pareto_power(8.0, Centering::SignSymmetric).unwrap(); 2],
        Coupling::Independent,
    )
    .unwrap();
    let fwd = sample_q(&model, 91, 400_000).unwrap();
    let rev = sample_reverse_v(&model, 92, 400_000, 1, 8).unwrap();
    let mut ok = worst <= 1e-14;
    let mut parts = Vec::new();
    for p in [1.0, 2.0, 3.0] {
        let (a, b) = (empirical_moments(&fwd, p).unwrap(), empirical_moments(&rev, p).unwrap());
        let z = (a.power_mean - b.power_mean).abs() / a.power_mean_stderr.hypot(b.power_mean_stderr);
        ok &= z <= 4.0;
        parts.push(format!("p={p}: z={z:.2}"));
    }
    (ok, format!("max fwd/rev zeta rel diff {worst:.1e}, {}", parts.join(", ")))
}

fn c10() -> (bool, String) {
    let model = PolynomialModel::new(
        CoefficientTensor::uniform(1, 8).unwrap().normalized().unwrap(),
        DependenceRegime::forward(RegimeTag::Martingale),
        vec![InputDistribution::rademacher()],
        Coupling::Independent,
    )
    .unwrap();
    let ps = [1.5, 2.0, 3.0, 4.0];
    let exact = brute_force_running_max_moments(&model, &ps).unwrap();
    // independent oracle: walk the 2^8 sign paths directly
    let w = 1.0 / 8f64.sqrt();
    let mut oracle = vec![0.0; ps.len()];
    for mask in 0u32..256 {
        let (mut s, mut m) = (0.0f64, 0.0f64);
        for i in 0..8 {
            s += if mask >> i & 1 == 1 { w } else { -w };
            m = m.max(s.abs());
        }
        for (o, p) in oracle.iter_mut().zip(&ps) {
            *o += m.powf(*p) / 256.0;
        }
    }
    let sample = sample_running_max(&model, 10, 1_000_000).unwrap();
    let zeta = model.zeta(&ps).unwrap();
    let mut plan = ExperimentPlan::new(model, BoundSource::Zeta(zeta), ps.to_vec(), 100_000, 11);
    plan.x_grid.clear();
    let doob = doob_experiment(&plan).unwrap();
    let mut ok = doob.pass;
    let mut parts = Vec::new();
    for (k, p) in ps.iter().enumerate() {
        let est = empirical_moments(&sample, *p).unwrap();
        let z = (est.power_mean - exact[k]).abs() / est.power_mean_stderr;
        let agree = (exact[k] - oracle[k]).abs() <= 1e-12 * oracle[k];
        let bounded = exact[k].powf(1.0 / p) <= doob.moments[k].bound;
        ok &= z <= 4.0 && agree && bounded;
        parts.push(format!("p={p}: z={z:.2} exact={:.4} bound={:.3}", exact[k].powf(1.0 / p), doob.moments[k].bound));
    }
    (ok, parts.join(", "))
}

// Runs without the libtest harness so the criterion lines are never captured.
fn main() {
    let mut outcomes = vec![
        timed(1, 1.0, c1),
        timed(2, 1.0, c2),
        timed(3, 30.0, c3),
        timed(4, 5.0, c4),
        timed(5, 30.0, c5),
    ];
    let (o6, o7) = battery();
    outcomes.push(o6);
    outcomes.push(o7);
    outcomes.push(timed(8, 120.0, c8));
    outcomes.push(timed(9, 60.0, c9));
    outcomes.push(timed(10, 10.0, c10));
    let failed: Vec<u8> = outcomes.iter().filter(|o| !report(o)).map(|o| o.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass");
}
