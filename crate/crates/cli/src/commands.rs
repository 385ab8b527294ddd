use std::fs;
use std::path::{Path, PathBuf};

use polymart::calculus::{
    otimes_split, polynomial_dominant_envelope, zeta_chain, ChainGrid, DependenceRegime, Direction, GrowthConstant,
    RegimeTag, TailParams, ZetaChain,
};
use polymart::envelope::{default_norm_grid, gls_norm, MomentEnvelope, SlowlyVarying};
use polymart::mcverify::{
    battery_p_grid, doob_experiment, run_experiment, verify_sample, BoundSource, ExperimentPlan, VerificationReport,
};
use polymart::numeric::linspace;
use polymart::polymodel::{
    sample_q, sample_r, sample_reverse_v, sample_running_max, write_f64le, write_sample_csv, Centering,
    InputDistribution, PolynomialModel,
};
use polymart::tails::{conjugate_tail, tail_from_envelope, ConjugateSpec};
use polymart::{empirical_moments, Error};

use crate::config::{catalog, PlanKind, PlanSection, SampleFormat, ScenarioConfig, CATALOG};
use crate::{EnvelopeCmd, Failure, RunArgs, TailArgs, ZetaArgs};

type Outcome = Result<u8, Failure>;

/// Full-precision, locale-independent decimal.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn load(path: Option<&PathBuf>) -> Result<ScenarioConfig, Failure> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

/// `ν(p)`, reporting orders outside the support as `inf`.
fn eval_or_inf(env: &MomentEnvelope, p: f64) -> Result<f64, Failure> {
    match env.eval(p) {
        Ok(v) => Ok(v),
        Err(Error::Domain { .. }) if p >= 1.0 => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

pub fn envelope(cmd: EnvelopeCmd) -> Outcome {
    match cmd {
        EnvelopeCmd::Eval { name, p, source } => {
            let env = load(source.config.as_ref())?.envelope(&name)?;
            println!("p,nu");
            for p in p {
                println!("{},{}", num(p), num(eval_or_inf(&env, p)?));
            }
        }
        EnvelopeCmd::Otimes { a, b, p, source } => {
            let cfg = load(source.config.as_ref())?;
            let (ea, eb) = (cfg.envelope(&a)?, cfg.envelope(&b)?);
            println!("p,value,split");
            for p in p {
                let o = otimes_split(&ea, &eb, p)?;
                println!("{},{},{}", num(p), num(o.value), num(o.split));
            }
        }
        EnvelopeCmd::Table { name, from, to, points, source } => {
            let env = load(source.config.as_ref())?.envelope(&name)?;
            if points < 2 || !(to > from) {
                return Err(Failure::config("table needs --to > --from and at least 2 points"));
            }
            println!("p,nu");
            for p in linspace(points, from, to) {
                println!("{},{}", num(p), num(eval_or_inf(&env, p)?));
            }
        }
        EnvelopeCmd::Norm { name, law, points, source } => {
            let env = load(source.config.as_ref())?.envelope(&name)?;
            let law = parse_law(&law)?;
            let grid = default_norm_grid(&env, points);
            let norm = gls_norm(|p| law.norm(p).unwrap_or(f64::INFINITY), &env, &grid)?;
            println!("norm,{}", num(norm));
        }
        EnvelopeCmd::List => {
            println!("name,form");
            for name in CATALOG {
                let env = catalog(name).expect("catalog entry");
                println!("{name},{:?}", env.form());
            }
        }
    }
    Ok(0)
}

fn parse_law(s: &str) -> Result<InputDistribution, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Failure::config(format!("unknown law '{s}' (rademacher, pareto:R, pareto:R:mean, pareto:R:sym)"));
    match parts.as_slice() {
        ["rademacher"] => Ok(InputDistribution::rademacher()),
        ["pareto", r, rest @ ..] => {
            let r: f64 = r.parse().map_err(|_| bad())?;
            let centering = match rest {
                [] => Centering::None,
                ["mean"] => Centering::Mean,
                ["sym"] => Centering::SignSymmetric,
                _ => return Err(bad()),
            };
            Ok(InputDistribution::pareto_power(r, centering)?)
        }
        _ => Err(bad()),
    }
}

fn parse_regime(s: &str) -> Result<RegimeTag, Failure> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Failure::config(format!("unknown regime '{s}'")))
}

fn print_chain(chain: &ZetaChain, grid: &[f64]) -> Result<(), Failure> {
    println!("# regime={:?} direction={:?} combined_r={}", chain.regime.tag, chain.regime.direction, num(chain.combined_r));
    // columns in the order the stages are built
    let order: Vec<usize> = match chain.regime.direction {
        Direction::Forward => (0..chain.d()).collect(),
        Direction::Reverse => (0..chain.d()).rev().collect(),
    };
    let header: Vec<String> = order.iter().map(|m| format!("zeta_{}", m + 1)).collect();
    println!("p,{}", header.join(","));
    for &p in grid {
        let vals = order.iter().map(|&m| eval_or_inf(&chain.stages[m], p).map(num)).collect::<Result<Vec<_>, _>>()?;
        println!("{},{}", num(p), vals.join(","));
    }
    Ok(())
}

pub fn zeta(args: ZetaArgs) -> Outcome {
    let cfg = load(args.config.as_ref())?;
    let section = cfg.zeta.as_ref();
    let tag = match (&args.regime, section) {
        (Some(r), _) => parse_regime(r)?,
        (None, Some(z)) => z.regime,
        (None, None) => return Err(Failure::config("pass --regime or a config with a zeta section")),
    };
    let direction = if args.reverse {
        Direction::Reverse
    } else {
        section.map(|z| z.direction).unwrap_or(Direction::Forward)
    };
    let names = match (&args.inputs, section.and_then(|z| z.inputs.clone())) {
        (v, _) if !v.is_empty() => Some(v.clone()),
        (_, from_cfg) => from_cfg,
    };
    let nus = match names {
        Some(n) => n.iter().map(|name| cfg.envelope(name)).collect::<Result<Vec<_>, _>>()?,
        None => match &cfg.model {
            Some(spec) => spec.build()?.input_envelopes()?,
            None => return Err(Failure::config("pass --inputs or a config with zeta.inputs or a model")),
        },
    };
    let grid = if !args.p.is_empty() {
        args.p.clone()
    } else {
        section.and_then(|z| z.p_grid.clone()).ok_or_else(|| Failure::config("pass --p or zeta.p_grid"))?
    };
    let scale = section.map(|z| z.scale).unwrap_or(1.0);
    let chain = zeta_chain(
        DependenceRegime { tag, direction },
        &nus,
        &GrowthConstant::MartingaleKM,
        &GrowthConstant::IndependentKI,
        &grid,
        &ChainGrid::default(),
    )?
    .scaled(scale)?;
    print_chain(&chain, &grid)?;
    Ok(0)
}

pub fn tail(args: TailArgs) -> Outcome {
    let env = load(args.source.config.as_ref())?.envelope(&args.name)?;
    let spec = ConjugateSpec::with_default_grid(env, args.norm_factor)?;
    println!("x,bound,conjugate,note");
    for x in args.x {
        if x <= std::f64::consts::E {
            println!("{},1.0,1.0,vacuous", num(x));
        } else {
            let (t, c) = (tail_from_envelope(&spec, x)?, conjugate_tail(&spec, x)?);
            println!("{},{},{},", num(x), num(t), num(c));
        }
    }
    Ok(0)
}

/// Scenario with the command-line overrides folded in.
fn effective(args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    let plan = cfg.plan.get_or_insert_with(|| serde_json::from_str::<PlanSection>("{}").expect("defaults"));
    if let Some(s) = args.seed {
        plan.seed = s;
    }
    if let Some(r) = args.reps {
        plan.replications = r;
        plan.pilot_replications = plan.pilot_replications.min(r.max(1000));
    }
    if let Some(out) = &args.out {
        cfg.output.dir = Some(out.clone());
    }
    if cfg.model.is_none() {
        return Err(Failure::config("scenario has no model section"));
    }
    Ok(cfg)
}

fn p_grid(cfg: &ScenarioConfig, plan: &PlanSection, model: &PolynomialModel) -> Vec<f64> {
    if let Some(g) = plan.p_grid.clone().or_else(|| cfg.zeta.as_ref().and_then(|z| z.p_grid.clone())) {
        return g;
    }
    let r = model.combined_exponent();
    if r.is_finite() {
        battery_p_grid(r)
    } else {
        vec![1.5, 2.0, 3.0, 4.0, 6.0]
    }
}

fn chain_for(cfg: &ScenarioConfig, model: &PolynomialModel, grid: &[f64]) -> Result<ZetaChain, Failure> {
    let (regime, nus, scale) = match &cfg.zeta {
        Some(z) => {
            let nus = match &z.inputs {
                Some(names) => names.iter().map(|n| cfg.envelope(n)).collect::<Result<Vec<_>, _>>()?,
                None => model.input_envelopes()?,
            };
            (DependenceRegime { tag: z.regime, direction: z.direction }, nus, z.scale)
        }
        None => (model.regime(), model.input_envelopes()?, 1.0),
    };
    Ok(zeta_chain(regime, &nus, &GrowthConstant::MartingaleKM, &GrowthConstant::IndependentKI, grid, &ChainGrid::default())?
        .scaled(scale)?)
}

fn out_dir(cfg: &ScenarioConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("polymart-out"));
    fs::create_dir_all(&dir).map_err(|e| Failure::numeric(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn multiplicities(plan: &PlanSection, model: &PolynomialModel) -> Result<Vec<usize>, Failure> {
    plan.multiplicities.clone().ok_or_else(|| Failure::config("diagonal plans need plan.multiplicities"))
        .and_then(|k| if k.len() == model.d() { Ok(k) } else { Err(Failure::config("one multiplicity per factor")) })
}

fn window(plan: &PlanSection, model: &PolynomialModel) -> [usize; 2] {
    plan.window.unwrap_or([1, model.n()])
}

fn draw(plan: &PlanSection, model: &PolynomialModel, seed: u64, reps: usize) -> Result<Vec<f64>, Failure> {
    Ok(match plan.kind {
        PlanKind::Moments => sample_q(model, seed, reps)?,
        PlanKind::Doob => sample_running_max(model, seed, reps)?,
        PlanKind::Diagonal => sample_r(model, &multiplicities(plan, model)?, seed, reps)?,
        PlanKind::ReverseWindow => {
            let [a, b] = window(plan, model);
            sample_reverse_v(model, seed, reps, a, b)?
        }
    })
}

pub fn simulate(args: RunArgs) -> Outcome {
    let cfg = effective(&args)?;
    let model = cfg.model.as_ref().expect("checked").build()?;
    let plan = cfg.plan.as_ref().expect("filled");
    let sample = draw(plan, &model, plan.seed, plan.replications)?;
    let dir = out_dir(&cfg)?;
    let path = match cfg.output.sample_format {
        SampleFormat::Bin => {
            let p = dir.join("samples.bin");
            write_f64le(&p, &sample)?;
            p
        }
        SampleFormat::Csv => {
            let p = dir.join("samples.csv");
            write_sample_csv(&p, &sample)?;
            p
        }
    };
    println!("# {} samples written to {}", sample.len(), path.display());
    println!("p,empirical,stderr");
    for p in p_grid(&cfg, plan, &model) {
        let e = empirical_moments(&sample, p)?;
        println!("{},{},{}", num(p), num(e.norm), num(e.norm_stderr));
    }
    Ok(0)
}

/// Dominant-term envelope with its constant fitted on a pilot sample (the
/// GLS norm of the pilot moments against the shape).
fn diagonal_bound(plan: &PlanSection, model: &PolynomialModel, grid: &[f64]) -> Result<(MomentEnvelope, f64), Failure> {
    let ks = multiplicities(plan, model)?;
    let degree: usize = ks.iter().sum();
    let params: Vec<TailParams> = model
        .factors()
        .iter()
        .map(|f| TailParams { r: f.moment_boundary(), gamma: 0.0, slowly: SlowlyVarying::ONE })
        .collect();
    let shape = polynomial_dominant_envelope(&params, degree, None)?;
    let pilot_seed = plan.seed ^ 0x9E37_79B9_7F4A_7C15;
    let pilot = sample_r(model, &ks, pilot_seed, plan.pilot_replications)?;
    let c = gls_norm(|p| empirical_moments(&pilot, p).map(|e| e.norm).unwrap_or(f64::INFINITY), &shape.envelope, grid)?;
    Ok((shape.envelope.scaled(c)?, c))
}

fn run(cfg: &ScenarioConfig) -> Result<VerificationReport, Failure> {
    let model = cfg.model.as_ref().expect("checked").build()?;
    let plan = cfg.plan.as_ref().expect("filled");
    let grid = p_grid(cfg, plan, &model);
    let mut fitted = None;
    let bound = match (&plan.bound, plan.kind) {
        (Some(name), _) => BoundSource::Envelope(cfg.envelope(name)?),
        (None, PlanKind::Diagonal) => {
            let (env, c) = diagonal_bound(plan, &model, &grid)?;
            fitted = Some(c);
            BoundSource::Envelope(env)
        }
        (None, _) => BoundSource::Zeta(chain_for(cfg, &model, &grid)?),
    };
    let mut ep = ExperimentPlan::new(model.clone(), bound, grid, plan.replications, plan.seed);
    ep.x_grid = plan.x_grid.clone();
    ep.b_sweep = plan.b_sweep;
    ep.fit_tail_rescale = plan.fit_tail_rescale;
    if plan.tail_norm_factor != 1.0 {
        ep.tail_spec = Some(ConjugateSpec::with_default_grid(ep.bound.envelope().clone(), plan.tail_norm_factor)?);
    }
    let mut report = match plan.kind {
        PlanKind::Moments => run_experiment(&ep)?,
        PlanKind::Doob => doob_experiment(&ep)?,
        PlanKind::Diagonal | PlanKind::ReverseWindow => {
            let sample = draw(plan, &model, plan.seed, plan.replications)?;
            let kind = if plan.kind == PlanKind::Diagonal { "diagonal" } else { "reverse_window" };
            verify_sample(&ep, kind, &sample, ep.bound.envelope())?
        }
    };
    if let Some(c) = fitted {
        report.meta.warnings.push(format!("dominant-term constant fitted on a pilot run: C = {}", num(c)));
    }
    report.config = Some(serde_json::to_value(cfg).map_err(|e| Failure::numeric(e.to_string()))?);
    Ok(report)
}

fn write_report(report: &VerificationReport, dir: &Path, csv: bool) -> Result<(), Failure> {
    report.write_json(&dir.join("report.json"))?;
    if csv {
        report.write_moments_csv(&dir.join("moments.csv"))?;
        report.write_tails_csv(&dir.join("tails.csv"))?;
    }
    Ok(())
}

pub fn verify(args: RunArgs) -> Outcome {
    let cfg = effective(&args)?;
    let report = run(&cfg)?;
    let dir = out_dir(&cfg)?;
    write_report(&report, &dir, cfg.output.csv.unwrap_or(true))?;
    println!("p,empirical,stderr,bound,ratio,pass");
    for r in &report.moments {
        println!("{},{},{},{},{},{}", num(r.p), num(r.empirical), num(r.stderr), num(r.bound), num(r.ratio), r.pass);
    }
    for w in &report.meta.warnings {
        eprintln!("warning: {w}");
    }
    println!("# tail rescale C = {}, tails {}", num(report.meta.tail_rescale), if report.tail_pass { "pass" } else { "fail" });
    println!("# report: {}", dir.join("report.json").display());
    println!("# {}", if report.pass { "PASS" } else { "FAIL" });
    Ok(if report.pass { 0 } else { 3 })
}
