use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relusolve_core::iter::{audit_complexity, flag_unstable, AuditRecord};
use relusolve_core::{build_solver, random_rhs, solve_exact, Method, SolverConfig, SpectralClass};

use crate::coo::{format_coo, write_coo};
use crate::error::{CliError, Result};
use crate::netfile::{read_network, write_network, Metadata};
use crate::output::write_atomic;
use crate::problem::{load_problem, Problem, ProblemKind};
use crate::report::{AuditRow, Params, RunReport, Sample, Stats};

#[derive(Debug, Parser)]
#[command(name = "relusolve", version, about = "Build and check ReLU networks that solve sparse SPD systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a problem matrix in coordinate format.
    Gen(GenArgs),
    /// Build a solver network for a problem class.
    Build(BuildArgs),
    /// Evaluate a network on one right-hand side.
    Eval(EvalArgs),
    /// Check a network against exact solves on random right-hand sides.
    Verify(VerifyArgs),
    /// Sweep sizes and tolerances and compare network size with the log-shape.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Richardson,
    Cg,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Richardson => Method::Richardson,
            MethodArg::Cg => Method::ChebyshevCg,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// laplacian1d, laplacian2d, random or file:<path>
    #[arg(long, default_value = "laplacian1d")]
    pub problem: ProblemKind,
    /// Nodes per direction for the Laplacians, matrix size for `random`.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Condition bound of the `random` class (spectrum in [1, kappa]).
    #[arg(long, default_value_t = 100.0)]
    pub kappa: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report destination; `-` for stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long = "c-sc", default_value_t = 1.0)]
    pub c_sc: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Right-hand side as comma-separated values; random of norm c_sc*lambda otherwise.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rhs: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "richardson,cg")]
    pub method: Vec<MethodArg>,
    #[arg(long, default_value = "laplacian1d")]
    pub problem: ProblemKind,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05")]
    pub eps: Vec<f64>,
    #[arg(long = "c-sc", default_value_t = 1.0)]
    pub c_sc: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100.0)]
    pub kappa: f64,
    #[command(flatten)]
    pub report: ReportArgs,
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build(a),
        Command::Eval(a) => eval(a),
        Command::Verify(a) => verify(a),
        Command::Audit(a) => audit(a),
    }
}

fn params_for(p: &ProblemArgs, problem: &Problem, spec: &SpectralClass) -> Params {
    Params {
        problem: p.problem.to_string(),
        n: problem.n(),
        eta: problem.eta(),
        lambda: spec.lambda_min(),
        lambda_max: spec.lambda_max(),
        kappa: spec.kappa(),
        seed: p.seed,
        ..Params::default()
    }
}

fn emit(report: &RunReport, args: &ReportArgs, default_stdout: bool) -> Result<()> {
    let fill = |w: &mut dyn Write| match args.format {
        Format::Json => report.write_json(w),
        Format::Csv => report.write_csv(w),
    };
    match &args.report {
        Some(p) if p != Path::new("-") => write_atomic(p, fill),
        Some(_) => to_stdout(fill),
        None if default_stdout => to_stdout(fill),
        None => Ok(()),
    }
}

fn to_stdout(fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    fill(&mut lock)
        .and_then(|_| lock.flush())
        .map_err(|e| CliError::Output(format!("cannot write to stdout: {e}")))
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn gen(a: GenArgs) -> Result<u8> {
    let problem = load_problem(&a.problem.problem, a.problem.n, a.problem.seed, a.problem.kappa)?;
    match &a.out {
        Some(p) => write_coo(p, &problem.matrix)?,
        None => to_stdout(|w| w.write_all(format_coo(&problem.matrix).as_bytes()))?,
    }
    Ok(0)
}

fn build(a: BuildArgs) -> Result<u8> {
    let method: Method = a.method.into();
    let config = SolverConfig::new(method, a.eps, a.c_sc)?;
    let t = Instant::now();
    let problem = load_problem(&a.problem.problem, a.problem.n, a.problem.seed, a.problem.kappa)?;
    let load = secs(t);
    config.check_against(&problem.spectral)?;

    let t = Instant::now();
    let solver = build_solver(problem.matrix.pattern(), &problem.spectral, &config)?;
    let build_time = secs(t);

    let t = Instant::now();
    let meta = Metadata::from(&solver.meta);
    write_network(&a.out, &solver.network, Some(&meta))?;
    let write_time = secs(t);

    let mut params = params_for(&a.problem, &problem, &problem.spectral);
    params.method = Some(method.name().into());
    params.epsilon = Some(a.eps);
    params.c_sc = Some(a.c_sc);
    params.m = Some(solver.meta.m);
    let mut report = RunReport::new("build", params);
    report.stats = Some(Stats::from(&solver.network.stats()));
    let rec = audit_complexity(&solver.network, solver.meta.m, a.eps, problem.n(), problem.eta());
    report.audit = vec![audit_row(method, &problem, a.eps, solver.meta.m, &rec, (false, false))];
    report.durations.insert("load".into(), load);
    report.durations.insert("build".into(), build_time);
    report.durations.insert("write".into(), write_time);
    emit(&report, &a.report, false)?;
    if a.report.report.is_none() {
        eprintln!(
            "built {} network: m = {}, depth = {}, weights = {}",
            method.name(),
            solver.meta.m,
            solver.network.depth(),
            solver.network.weight_count()
        );
    }
    Ok(0)
}

/// Loads a network with metadata and the problem it claims to solve.
fn load_pair(network: &Path, p: &ProblemArgs) -> Result<(relusolve_core::ReluNetwork, Metadata, Problem)> {
    let (net, meta) = read_network(network)?;
    let meta = meta.ok_or_else(|| {
        CliError::InvalidArgs(format!("{}: network file carries no metadata", network.display()))
    })?;
    meta.method()?;
    let problem = load_problem(&p.problem, p.n, p.seed, p.kappa)?;
    if meta.n != problem.n() || meta.eta != problem.eta() {
        return Err(CliError::InvalidArgs(format!(
            "network was built for n = {}, eta = {} but the problem has n = {}, eta = {}",
            meta.n,
            meta.eta,
            problem.n(),
            problem.eta()
        )));
    }
    if net.input_dim() != meta.eta + meta.n || net.output_dim() != meta.n {
        return Err(CliError::InvalidArgs(format!(
            "{}: network dimensions {} -> {} do not match its metadata",
            network.display(),
            net.input_dim(),
            net.output_dim()
        )));
    }
    Ok((net, meta, problem))
}

fn metadata_class(meta: &Metadata) -> Result<SpectralClass> {
    Ok(SpectralClass::new(meta.lambda, meta.lambda_max)?)
}

fn evaluate(net: &relusolve_core::ReluNetwork, values: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let mut input = Vec::with_capacity(values.len() + rhs.len());
    input.extend_from_slice(values);
    input.extend_from_slice(rhs);
    Ok(net.evaluate(&input)?)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn eval(a: EvalArgs) -> Result<u8> {
    let (net, meta, problem) = load_pair(&a.network, &a.problem)?;
    let rhs = match a.rhs {
        Some(r) if r.len() != problem.n() => {
            return Err(CliError::InvalidArgs(format!(
                "--rhs has {} entries, expected {}",
                r.len(),
                problem.n()
            )))
        }
        Some(r) => r,
        None => random_rhs(problem.n(), meta.c_sc, meta.lambda, a.problem.seed),
    };
    let out = evaluate(&net, problem.matrix.values(), &rhs)?;
    let exact = solve_exact(&problem.matrix, &rhs)?;
    let body = serde_json::json!({
        "solution": out,
        "exact": exact,
        "error": dist(&out, &exact),
        "rhs_norm": norm(&rhs),
        "epsilon": meta.epsilon,
    });
    to_stdout(|w| {
        serde_json::to_writer_pretty(&mut *w, &body)?;
        w.write_all(b"\n")
    })?;
    Ok(0)
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let (net, meta, problem) = load_pair(&a.network, &a.problem)?;
    let class = metadata_class(&meta)?;
    let n = problem.n();
    let t = Instant::now();
    let mut samples = Vec::with_capacity(a.samples);
    for k in 0..a.samples {
        let seed = a.problem.seed.wrapping_add(k as u64);
        let matrix = problem.sample_matrix(&class, seed)?;
        let rhs = random_rhs(n, meta.c_sc, meta.lambda, seed);
        let out = evaluate(&net, matrix.values(), &rhs)?;
        let exact = solve_exact(&matrix, &rhs)?;
        let rhs_norm = norm(&rhs);
        samples.push(Sample {
            index: k,
            rhs_norm,
            c_sc_realized: rhs_norm / meta.lambda,
            error: dist(&out, &exact),
        });
    }
    let zero = evaluate(&net, problem.matrix.values(), &vec![0.0; n])?;
    let zero_err = norm(&zero);
    let elapsed = secs(t);

    let max_error = samples.iter().map(|s| s.error).fold(0.0, f64::max);
    let passed = samples.iter().all(|s| s.error <= meta.epsilon) && zero_err <= meta.epsilon;

    let mut params = params_for(&a.problem, &problem, &class);
    params.method = Some(meta.method.clone());
    params.epsilon = Some(meta.epsilon);
    params.c_sc = Some(meta.c_sc);
    params.m = Some(meta.m);
    params.samples = Some(a.samples);
    let mut report = RunReport::new("verify", params);
    report.stats = Some(Stats::from(&net.stats()));
    report.samples = samples;
    report.max_error = Some(max_error);
    report.zero_rhs_error = Some(zero_err);
    report.passed = Some(passed);
    report.durations.insert("verify".into(), elapsed);
    emit(&report, &a.report, true)?;
    if !passed {
        eprintln!(
            "verification failed: max error {max_error:e} exceeds epsilon {}",
            meta.epsilon
        );
    }
    Ok(if passed { 0 } else { 1 })
}

fn audit_row(
    method: Method,
    problem: &Problem,
    eps: f64,
    m: usize,
    rec: &AuditRecord,
    flags: (bool, bool),
) -> AuditRow {
    AuditRow {
        method: method.name().into(),
        n: problem.n(),
        eta: problem.eta(),
        kappa: problem.spectral.kappa(),
        eps,
        m,
        depth: rec.depth,
        weights: rec.weights,
        ratio_depth: rec.ratio_depth,
        ratio_weights: rec.ratio_weights,
        flag_depth: flags.0,
        flag_weights: flags.1,
    }
}

fn audit(a: AuditArgs) -> Result<u8> {
    if a.method.is_empty() || a.n.is_empty() || a.eps.is_empty() {
        return Err(CliError::InvalidArgs("audit needs at least one method, n and eps".into()));
    }
    let t = Instant::now();
    let mut rows = Vec::new();
    for &marg in &a.method {
        let method: Method = marg.into();
        let mut cases = Vec::new();
        for &n in &a.n {
            let problem = load_problem(&a.problem, n, a.seed, a.kappa)?;
            for &eps in &a.eps {
                let config = SolverConfig::new(method, eps, a.c_sc)?;
                config.check_against(&problem.spectral)?;
                let solver = build_solver(problem.matrix.pattern(), &problem.spectral, &config)?;
                let m = solver.meta.m;
                let rec = audit_complexity(&solver.network, m, eps, problem.n(), problem.eta());
                cases.push((problem.clone(), eps, m, rec));
            }
        }
        let recs: Vec<AuditRecord> = cases.iter().map(|c| c.3).collect();
        for ((problem, eps, m, rec), flags) in cases.iter().zip(flag_unstable(&recs)) {
            rows.push(audit_row(method, problem, *eps, *m, rec, flags));
        }
    }
    let params = Params {
        problem: a.problem.to_string(),
        c_sc: Some(a.c_sc),
        kappa: a.kappa,
        seed: a.seed,
        ..Params::default()
    };
    let mut report = RunReport::new("audit", params);
    report.audit = rows;
    report.durations.insert("audit".into(), secs(t));
    emit(&report, &a.report, true)?;
    Ok(0)
}

