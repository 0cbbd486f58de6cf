//! Command-line driver behind the `qsfk` binary.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails,
//! 2 on input errors (unreadable or inconsistent instances, memory cap).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::coeff::{classify, min_quasicontractivity_beta, BlockCoefficient, Quasicontractivity};
use crate::error::{Error, Result};
use crate::flow::{from_hp_coefficient, validate_structure, FlowGenerator, GeneratorMap, HpFlowMap, TrivialFlow};
use crate::fock::{
    fk_expectation_estimate, isometry_defect, ladder_verdict, multiplier_cocycle_check, run_ladder,
    simulate_hp_unitary, DiscreteProcess, LadderPoint, ToyFockModel,
};
use crate::io::{InstanceFile, SimulationQuantity, SimulationSection};
use crate::matelem::{cocycle_matrix_element, tail_overlap, verify_cocycle_identity};
use crate::numerics::{expm, CMatrix, DEFAULT_TOL};
use crate::perturb::{fk_generator, psi_map, semigroup_at, semigroup_flags, vacuum_generator, PerturbationSpec};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

const STRUCTURE_TOL: f64 = 1e-11;
const UNITAL_TOL: f64 = 1e-10;
const CP_TOL: f64 = 1e-8;
const STRUCTURE_TRIALS: usize = 20;
const COCYCLE_TRIALS: usize = 8;

const KNOWN_CHECKS: &[&str] = &[
    "isometric",
    "coisometric",
    "contractive",
    "quasicontractive",
    "structure",
    "unital",
    "cp",
    "contractive_semigroup",
    "cocycle",
    "ladder",
];

#[derive(Parser, Debug)]
#[command(name = "qsfk", version, about = "Stochastic flows, Feynman-Kac perturbations and a toy Fock oracle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Instance file (JSON).
    #[arg(long)]
    pub instance: PathBuf,
    /// Primary output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides every check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Overrides the instance seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify the coefficient and validate the flow generator.
    Check(Common),
    /// Feynman-Kac semigroup values and property flags.
    Semigroup {
        #[command(flatten)]
        common: Common,
        /// Comma-separated times; overrides the instance.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Cocycle matrix elements between exponential vectors.
    Matelem {
        #[command(flatten)]
        common: Common,
        /// Overrides the instance time.
        #[arg(long)]
        t: Option<f64>,
        /// Split point for the weak-cocycle check.
        #[arg(long)]
        split: Option<f64>,
    },
    /// Slot-count ladder of the toy Fock simulation.
    Simulate(Common),
    /// Entrywise comparison of simulated and analytic semigroups.
    Compare(Common),
}

/// Output of a command before it is written anywhere.
#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    /// CSV or JSON; goes to `--out` or stdout.
    pub primary: String,
    /// JSON report for commands whose primary output is CSV.
    pub report: Option<Value>,
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    tol: f64,
    value: f64,
    passed: bool,
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn input_err(msg: impl Into<String>) -> Error {
    Error::Instance(msg.into())
}

struct Context<'a> {
    inst: &'a InstanceFile,
    common: &'a Common,
}

impl Context<'_> {
    fn seed(&self) -> u64 {
        self.common.seed.or(self.inst.seed).unwrap_or(0)
    }

    fn requested(&self, name: &str) -> Option<f64> {
        self.inst
            .checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| self.common.tol.or(c.tol).unwrap_or(f64::NAN))
    }

    fn tol_or(&self, name: &str, default: f64) -> f64 {
        match self.requested(name) {
            Some(t) if !t.is_nan() => t,
            _ => self.common.tol.unwrap_or(default),
        }
    }
}

fn check_result(name: &str, tol: f64, value: f64, passed: bool) -> CheckResult {
    CheckResult {
        name: name.into(),
        tol,
        value,
        passed,
    }
}

fn cmd_check(ctx: &Context) -> Result<Outcome> {
    let inst = ctx.inst;
    if inst.coefficient.is_none() && inst.flow.is_none() {
        return Err(input_err("check needs a \"coefficient\" or a \"flow\" section"));
    }
    let mut report = serde_json::Map::new();
    let mut results = Vec::new();
    let mut wanted: Vec<&str> = inst.checks.iter().map(|c| c.name.as_str()).collect();
    if wanted.is_empty() {
        if inst.coefficient.is_some() {
            wanted.push("quasicontractive");
        }
        if inst.flow.is_some() {
            wanted.push("structure");
        }
    }

    if let Some(f) = &inst.coefficient {
        let tol = ctx.common.tol.unwrap_or(DEFAULT_TOL);
        let class = classify(f, tol);
        let beta = min_quasicontractivity_beta(f, tol);
        report.insert("classification".into(), serde_json::to_value(class)?);
        report.insert(
            "beta".into(),
            match beta {
                Quasicontractivity::Beta(b) => json!(b),
                Quasicontractivity::Infeasible => Value::Null,
            },
        );
        for name in ["isometric", "coisometric", "contractive", "quasicontractive"] {
            if wanted.contains(&name) {
                let check_tol = ctx.tol_or(name, tol);
                let c = classify(f, check_tol);
                let flag = match name {
                    "isometric" => c.isometric_gen,
                    "coisometric" => c.coisometric_nec,
                    "contractive" => c.contractive_gen,
                    _ => c.quasicontractive,
                };
                results.push(check_result(name, check_tol, f64::from(u8::from(flag)), flag));
            }
        }
    } else if let Some(name) = wanted
        .iter()
        .find(|n| ["isometric", "coisometric", "contractive", "quasicontractive"].contains(n))
    {
        return Err(input_err(format!("check \"{name}\" needs a \"coefficient\" section")));
    }

    if let Some(flow) = &inst.flow {
        let tol = ctx.tol_or("structure", STRUCTURE_TOL);
        let rep = validate_structure(flow, STRUCTURE_TRIALS, tol, ctx.seed())?;
        if wanted.contains(&"structure") {
            results.push(check_result("structure", tol, rep.max_residual(), rep.passed));
        }
        report.insert("structure".into(), serde_json::to_value(rep)?);
    } else if wanted.contains(&"structure") {
        return Err(input_err("check \"structure\" needs a \"flow\" section"));
    }

    let passed = results.iter().all(|r| r.passed);
    report.insert("seed".into(), json!(ctx.seed()));
    report.insert("checks".into(), serde_json::to_value(&results)?);
    report.insert("passed".into(), json!(passed));
    Ok(Outcome {
        passed,
        primary: serde_json::to_string_pretty(&Value::Object(report))?,
        report: None,
    })
}

fn require_flow(inst: &InstanceFile) -> Result<&FlowGenerator> {
    inst.perturbation_flow()
        .ok_or_else(|| input_err("this command needs a \"flow\" (or \"perturbation.theta\")"))
}

fn cmd_semigroup(ctx: &Context, times: &[f64]) -> Result<Outcome> {
    let inst = ctx.inst;
    let p = inst
        .perturbation
        .as_ref()
        .ok_or_else(|| input_err("semigroup needs a \"perturbation\" section"))?;
    let flow = require_flow(inst)?;
    let (f1, f2) = (&p.f1, &p.f2);
    let g = fk_generator(flow, f1.l(), f2.l(), f1.k(), f2.k())?;
    let n = flow.n();

    let times: Vec<f64> = if times.is_empty() {
        inst.semigroup.as_ref().map(|s| s.times.clone()).unwrap_or_default()
    } else {
        times.to_vec()
    };
    if times.is_empty() {
        return Err(input_err("no times given (use --times or \"semigroup.times\")"));
    }
    let mut args = inst.semigroup.as_ref().map(|s| s.arguments.clone()).unwrap_or_default();
    if args.is_empty() {
        args.push(CMatrix::identity(n));
    }

    let unital_tol = ctx.tol_or("unital", UNITAL_TOL);
    let cp_tol = ctx.tol_or("cp", CP_TOL);
    let contractive_tol = ctx.tol_or("contractive_semigroup", UNITAL_TOL);
    let mut csv = String::from("t,arg,row,col,re,im\n");
    let mut flags = Vec::new();
    let (mut unital, mut cp, mut contractive) = (true, true, true);
    for &t in &times {
        let pt = semigroup_at(&g, t)?;
        for (k, a) in args.iter().enumerate() {
            let v = pt.apply(a)?;
            for r in 0..n {
                for c in 0..n {
                    let z = v[(r, c)];
                    writeln!(csv, "{},{k},{r},{c},{},{}", fmt_f(t), fmt_f(z.re), fmt_f(z.im)).unwrap();
                }
            }
        }
        let fl = semigroup_flags(&g, t, unital_tol, cp_tol)?;
        unital &= fl.unital;
        cp &= fl.cp;
        contractive &= fl.cp && fl.norm_at_identity <= 1.0 + contractive_tol;
        flags.push(fl);
    }

    // hypotheses of the Feynman-Kac theorem, evaluated on the coefficients
    let unital_condition = (&(&f1.k().adjoint() + &(&f1.l().adjoint() * f2.l())) + f2.k()).norm();
    let cp_condition = f1.l().dist(f2.l()).max(f1.k().dist(f2.k()));
    let q = &(&f1.k().adjoint() + f1.k()) + &(&f1.l().adjoint() * f1.l());
    let contractive_condition = crate::numerics::min_eig_hermitian(&-&q)?;

    let mut results = Vec::new();
    for (name, flag, tol) in [
        ("unital", unital, unital_tol),
        ("cp", cp, cp_tol),
        ("contractive_semigroup", contractive, contractive_tol),
    ] {
        if ctx.requested(name).is_some() {
            results.push(check_result(name, tol, f64::from(u8::from(flag)), flag));
        }
    }
    let passed = results.iter().all(|r| r.passed);
    let report = json!({
        "times": times,
        "flags": flags,
        "unital": unital,
        "cp": cp,
        "contractive": contractive,
        "hypotheses": {
            "unital_residual": unital_condition,
            "cp_residual": cp_condition,
            "contractive_min_eig": contractive_condition,
        },
        "checks": results,
        "passed": passed,
    });
    Ok(Outcome {
        passed,
        primary: csv,
        report: Some(report),
    })
}

/// The map whose cocycle is compressed: φ for a perturbation, ψ for a
/// coefficient (over the flow if present), else θ.
fn matelem_map(inst: &InstanceFile) -> Result<(&'static str, Box<dyn GeneratorMap + Sync + '_>)> {
    if let Some(p) = &inst.perturbation {
        let flow = require_flow(inst)?;
        return Ok(("phi", Box::new(PerturbationSpec::new(flow, p.f1.clone(), p.f2.clone())?)));
    }
    match (&inst.flow, &inst.coefficient) {
        (Some(flow), Some(f)) => Ok(("psi", Box::new(psi_map(flow, f)?))),
        (Some(flow), None) => Ok(("theta", Box::new(flow))),
        (None, Some(f)) => Ok(("psi", Box::new(psi_map(TrivialFlow { n: f.n(), d: f.d() }, f)?))),
        (None, None) => Err(input_err(
            "matelem needs a \"perturbation\", \"flow\" or \"coefficient\" section",
        )),
    }
}

fn cmd_matelem(ctx: &Context, t_override: Option<f64>, split: Option<f64>) -> Result<Outcome> {
    let inst = ctx.inst;
    let sf = inst
        .stepfunctions
        .as_ref()
        .ok_or_else(|| input_err("matelem needs a \"stepfunctions\" section"))?;
    let (kind, map) = matelem_map(inst)?;
    let n = map.n();
    let t = t_override.unwrap_or(sf.t);
    let a = sf.a.clone().unwrap_or_else(|| CMatrix::identity(n));
    let mut value = cocycle_matrix_element(map.as_ref(), &sf.f, &sf.g, t, &a)?;
    let tail = tail_overlap(&sf.f, &sf.g, t)?;
    if sf.include_tail {
        value = value.scale(tail);
    }
    let mut csv = String::from("row,col,re,im\n");
    for r in 0..n {
        for c in 0..n {
            let z = value[(r, c)];
            writeln!(csv, "{r},{c},{},{}", fmt_f(z.re), fmt_f(z.im)).unwrap();
        }
    }
    let mut results = Vec::new();
    let mut cocycle = Value::Null;
    if let Some(r) = split.or(sf.cocycle_split) {
        if !(0.0..=t).contains(&r) {
            return Err(Error::Domain(format!("cocycle split {r} outside [0, {t}]")));
        }
        let rep = verify_cocycle_identity(map.as_ref(), &sf.f, &sf.g, r, t - r, COCYCLE_TRIALS, ctx.seed())?;
        let tol = ctx.tol_or("cocycle", rep.tol);
        let ok = rep.max_residual <= tol;
        results.push(check_result("cocycle", tol, rep.max_residual, ok));
        cocycle = serde_json::to_value(rep)?;
    } else if ctx.requested("cocycle").is_some() {
        return Err(input_err("check \"cocycle\" needs \"cocycle_split\" or --split"));
    }
    let passed = results.iter().all(|r| r.passed);
    let report = json!({
        "map": kind,
        "t": t,
        "include_tail": sf.include_tail,
        "tail_overlap": [tail.re, tail.im],
        "cocycle": cocycle,
        "checks": results,
        "passed": passed,
    });
    Ok(Outcome {
        passed,
        primary: csv,
        report: Some(report),
    })
}

/// Free-flow HP coefficient and the analytic map it implements.
fn simulation_flow(inst: &InstanceFile, sim: &SimulationSection) -> Result<(BlockCoefficient, HpFlowMap)> {
    let g = match (&sim.hp, inst.perturbation_flow()) {
        (Some(g), _) => g.clone(),
        (None, Some(flow)) => flow.implementing_coefficient(),
        (None, None) => {
            let (n, d) = inst
                .perturbation
                .as_ref()
                .map(|p| (p.f1.n(), p.f1.d()))
                .or(inst.coefficient.as_ref().map(|f| (f.n(), f.d())))
                .ok_or_else(|| input_err("simulation needs a flow, an \"hp\" coefficient or a coefficient"))?;
            BlockCoefficient::zero(n, d)?
        }
    };
    let theta = from_hp_coefficient(&g)?;
    Ok((g, theta))
}

fn perturbation_or_coefficient(inst: &InstanceFile) -> Result<&BlockCoefficient> {
    inst.perturbation
        .as_ref()
        .map(|p| &p.f1)
        .or(inst.coefficient.as_ref())
        .ok_or_else(|| input_err("this quantity needs \"perturbation.F1\" or \"coefficient\""))
}

struct LadderRun {
    points: Vec<LadderPoint>,
    estimates: Vec<CMatrix>,
    analytic: Option<CMatrix>,
}

fn run_simulation(inst: &InstanceFile, sim: &SimulationSection) -> Result<LadderRun> {
    let (g, theta) = simulation_flow(inst, sim)?;
    let (n, d) = (g.n(), g.d());
    let horizon = sim.horizon;
    let model_for = |slots: usize| -> Result<ToyFockModel> {
        let m = ToyFockModel::new(n, d, slots, horizon)?.with_scheme(sim.scheme);
        Ok(match sim.memory_cap_bytes {
            Some(cap) => m.with_memory_cap(cap),
            None => m,
        })
    };
    // fail fast on the largest model
    let biggest = *sim.ladder.iter().max().unwrap();
    model_for(biggest)?.check_memory(model_for(biggest)?.dim() as u128, (4 * (d + 1) * n) as u128)?;

    let a = sim.argument.clone().unwrap_or_else(|| CMatrix::identity(n));
    let (analytic, estimate): (Option<CMatrix>, Box<dyn Fn(usize) -> Result<(f64, CMatrix)> + Sync + '_>) = match sim.quantity {
        SimulationQuantity::FeynmanKac => {
            let p = inst
                .perturbation
                .as_ref()
                .ok_or_else(|| input_err("feynman_kac needs a \"perturbation\" section"))?;
            let spec = PerturbationSpec::new(&theta, p.f1.clone(), p.f2.clone())?;
            let want = semigroup_at(&vacuum_generator(&spec)?, horizon)?.apply(&a)?;
            let (f1, f2, g, a) = (p.f1.clone(), p.f2.clone(), g.clone(), a.clone());
            let w = want.clone();
            (
                Some(want),
                Box::new(move |slots| {
                    let v = simulate_hp_unitary(&model_for(slots)?, &g)?;
                    let est = fk_expectation_estimate(&v, &f1, &f2, &a)?;
                    Ok((est.dist(&w), est))
                }),
            )
        }
        SimulationQuantity::HpVacuum => {
            let want = expm(&g.k().scale_real(horizon))?;
            let w = want.clone();
            let g = g.clone();
            (
                Some(want),
                Box::new(move |slots| {
                    let est = simulate_hp_unitary(&model_for(slots)?, &g)?.vacuum_compress(slots)?;
                    Ok((est.dist(&w), est))
                }),
            )
        }
        SimulationQuantity::Multiplier => {
            let f = perturbation_or_coefficient(inst)?.clone();
            let g = g.clone();
            (
                None,
                Box::new(move |slots| {
                    let v = simulate_hp_unitary(&model_for(slots)?, &g)?;
                    let r = multiplier_cocycle_check(&v, &f, (slots / 2).max(1))?;
                    Ok((r, CMatrix::scalar(r.into())))
                }),
            )
        }
        SimulationQuantity::Isometry => {
            let f = perturbation_or_coefficient(inst)?.clone();
            let g = g.clone();
            (
                None,
                Box::new(move |slots| {
                    let v = simulate_hp_unitary(&model_for(slots)?, &g)?;
                    let r = isometry_defect(&v, &f)?;
                    Ok((r, CMatrix::scalar(r.into())))
                }),
            )
        }
    };
    let estimates = std::sync::Mutex::new(vec![None; sim.ladder.len()]);
    let index_of = |slots: usize| sim.ladder.iter().position(|&s| s == slots).unwrap();
    let points = run_ladder(&sim.ladder, horizon, |slots| {
        let (err, est) = estimate(slots)?;
        estimates.lock().unwrap()[index_of(slots)] = Some(est);
        Ok(err)
    })?;
    let estimates = estimates.into_inner().unwrap().into_iter().map(Option::unwrap).collect();
    Ok(LadderRun {
        points,
        estimates,
        analytic,
    })
}

fn require_simulation(inst: &InstanceFile) -> Result<&SimulationSection> {
    inst.simulation
        .as_ref()
        .ok_or_else(|| input_err("this command needs a \"simulation\" section"))
}

fn cmd_simulate(ctx: &Context) -> Result<Outcome> {
    let sim = require_simulation(ctx.inst)?;
    let run = run_simulation(ctx.inst, sim)?;
    let mut csv = String::from("N,h,error\n");
    for p in &run.points {
        writeln!(csv, "{},{},{}", p.slots, fmt_f(p.step), fmt_f(p.error)).unwrap();
    }
    let verdict = ladder_verdict(&run.points);
    let report = json!({
        "quantity": sim.quantity,
        "monotone": verdict.monotone,
        "final_error": verdict.final_error,
        "initial_error": verdict.initial_error,
        "passed": verdict.passed,
    });
    Ok(Outcome {
        passed: verdict.passed,
        primary: csv,
        report: Some(report),
    })
}

fn cmd_compare(ctx: &Context) -> Result<Outcome> {
    let sim = require_simulation(ctx.inst)?;
    if sim.quantity != SimulationQuantity::FeynmanKac && sim.quantity != SimulationQuantity::HpVacuum {
        return Err(input_err("compare needs quantity \"feynman_kac\" or \"hp_vacuum\""));
    }
    let run = run_simulation(ctx.inst, sim)?;
    let analytic = run.analytic.expect("analytic value for comparable quantities");
    let mut csv = String::from("N,row,col,analytic_re,analytic_im,simulated_re,simulated_im,abs_diff\n");
    let mut max_diff = Vec::new();
    for (p, est) in run.points.iter().zip(&run.estimates) {
        let mut worst: f64 = 0.0;
        for r in 0..analytic.rows() {
            for c in 0..analytic.cols() {
                let (x, y) = (analytic[(r, c)], est[(r, c)]);
                let diff = (x - y).norm();
                worst = worst.max(diff);
                writeln!(
                    csv,
                    "{},{r},{c},{},{},{},{},{}",
                    p.slots,
                    fmt_f(x.re),
                    fmt_f(x.im),
                    fmt_f(y.re),
                    fmt_f(y.im),
                    fmt_f(diff)
                )
                .unwrap();
            }
        }
        max_diff.push(json!({"N": p.slots, "max_abs_diff": worst}));
    }
    let verdict = ladder_verdict(&run.points);
    let report = json!({
        "quantity": sim.quantity,
        "per_n": max_diff,
        "monotone": verdict.monotone,
        "final_error": verdict.final_error,
        "passed": verdict.passed,
    });
    Ok(Outcome {
        passed: verdict.passed,
        primary: csv,
        report: Some(report),
    })
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Check(c) | Command::Simulate(c) | Command::Compare(c) => c,
        Command::Semigroup { common, .. } | Command::Matelem { common, .. } => common,
    }
}

/// Loads the instance and runs the command; errors are input errors.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let c = common(&cli.command);
    let inst = InstanceFile::load(&c.instance)?;
    if let Some(bad) = inst.checks.iter().find(|k| !KNOWN_CHECKS.contains(&k.name.as_str())) {
        return Err(input_err(format!(
            "unknown check \"{}\" (known: {})",
            bad.name,
            KNOWN_CHECKS.join(", ")
        )));
    }
    let ctx = Context { inst: &inst, common: c };
    let work = || match &cli.command {
        Command::Check(_) => cmd_check(&ctx),
        Command::Semigroup { times, .. } => cmd_semigroup(&ctx, times),
        Command::Matelem { t, split, .. } => cmd_matelem(&ctx, *t, *split),
        Command::Simulate(_) => cmd_simulate(&ctx),
        Command::Compare(_) => cmd_compare(&ctx),
    };
    match c.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| input_err(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Parses `args`, runs the command and writes its output. Returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let c = common(&cli.command);
    let report = outcome.report.as_ref().map(|r| serde_json::to_string_pretty(r).unwrap());
    match &c.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &outcome.primary) {
                let _ = writeln!(stderr, "error: writing {}: {e}", path.display());
                return EXIT_INPUT;
            }
            if let Some(r) = report {
                let _ = writeln!(stdout, "{r}");
            }
        }
        None => {
            let _ = write!(stdout, "{}", outcome.primary);
            if !outcome.primary.ends_with('\n') {
                let _ = writeln!(stdout);
            }
            if let Some(r) = report {
                let _ = writeln!(stderr, "{r}");
            }
        }
    }
    if outcome.passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
