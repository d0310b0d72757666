//! `perturbqp` command-line driver.
//!
//! Exit codes: 0 success, 1 usage error, 2 experiment finished with failed
//! instances, 3 I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perturbqp::asqp::{active_set_solve, crossover_from};
use perturbqp::gen::{generate, GenParams, ProblemKind};
use perturbqp::harness::{
    run_crossover_experiment, run_ratio_experiment, Execution, ExperimentConfig, GroundTruth, Suite,
};
use perturbqp::io::{read_qps_file, write_qps, write_ratio_csv, write_report_csv};
use perturbqp::ipm::{solve, SolveOptions};

#[derive(Parser)]
#[command(
    name = "perturbqp",
    version,
    about = "Perturbed interior point QP solver and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one QPS file.
    Solve(SolveArgs),
    /// Prediction ratios of both methods over a stop-iteration sweep.
    Ratios(ExperimentArgs),
    /// Crossover study: predicted sub-problems finished by the active-set method.
    Crossover(ExperimentArgs),
    /// Write generated instances as QPS files.
    Generate(GenerateArgs),
}

#[derive(Args, Clone, Default)]
struct SolverFlags {
    /// key=value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Initial perturbation ε₀ (0 gives the unperturbed method).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    mu_tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    shrink_fraction: Option<f64>,
    /// Prediction threshold C.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// Also finish with the active-set method on the predicted sub-problem.
    #[arg(long)]
    crossover: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// qts1, qts2 or a directory of QPS files.
    #[arg(long)]
    suite: String,
    /// First seed; instance k uses seed + k.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated stop iterations, e.g. 2,4,6.
    #[arg(long)]
    stops: Option<String>,
    /// Inclusive range like 11:59.
    #[arg(long)]
    m_range: Option<String>,
    #[arg(long)]
    n_range: Option<String>,
    /// Score against the unperturbed interior point solution instead.
    #[arg(long)]
    interior_truth: bool,
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct GenerateArgs {
    /// qts1 or qts2.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    m_range: Option<String>,
    #[arg(long)]
    n_range: Option<String>,
    #[arg(long)]
    density: Option<f64>,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<perturbqp::Error> for Failure {
    fn from(e: perturbqp::Error) -> Self {
        match e {
            perturbqp::Error::Io(_) => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parsed `key = value` lines; `#` starts a comment.
#[derive(Default)]
struct ConfigFile {
    entries: Vec<(String, String)>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage(format!("{}:{}: expected key=value", path.display(), k + 1))
            })?;
            entries.push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        match self.entries.iter().rev().find(|(k, _)| k == key) {
            None => Ok(None),
            Some((_, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| usage(format!("config key `{key}`: cannot parse `{v}`"))),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), Failure> {
        match self
            .entries
            .iter()
            .find(|(k, _)| !allowed.contains(&k.as_str()))
        {
            Some((k, _)) => Err(usage(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }
}

const SOLVER_KEYS: [&str; 6] = [
    "epsilon",
    "mu_tolerance",
    "max_iterations",
    "shrink_fraction",
    "threshold",
    "alpha_bar",
];

fn solver_options(flags: &SolverFlags, file: &ConfigFile) -> Result<SolveOptions, Failure> {
    let mut o = SolveOptions::default();
    let pick = |flag: Option<f64>, key: &str| -> Result<Option<f64>, Failure> {
        Ok(flag.or(file.get::<f64>(key)?))
    };
    if let Some(v) = pick(flags.epsilon, "epsilon")? {
        o.initial_perturbation = v;
    }
    if let Some(v) = pick(flags.mu_tolerance, "mu_tolerance")? {
        o.mu_tolerance = v;
    }
    if let Some(v) = pick(flags.shrink_fraction, "shrink_fraction")? {
        o.shrink_fraction = v;
    }
    if let Some(v) = pick(flags.threshold, "threshold")? {
        o.prediction_threshold = v;
    }
    if let Some(v) = file.get::<f64>("alpha_bar")? {
        o.alpha_bar = v;
    }
    if let Some(v) = flags.max_iterations.or(file.get("max_iterations")?) {
        o.max_iterations = v;
    }
    o.validate()?;
    Ok(o)
}

fn parse_range(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || usage(format!("range `{text}` is not of the form lo:hi"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_stops(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| usage(format!("bad stop iteration `{t}`")))
        })
        .collect()
}

fn generator_params(
    m_range: Option<&String>,
    n_range: Option<&String>,
    density: Option<f64>,
    file: &ConfigFile,
) -> Result<GenParams, Failure> {
    let mut p = GenParams::default();
    if let Some(r) = m_range.cloned().or(file.get("m_range")?) {
        p.m_range = parse_range(&r)?;
    }
    if let Some(r) = n_range.cloned().or(file.get("n_range")?) {
        p.n_range = parse_range(&r)?;
    }
    if let Some(d) = density.or(file.get("density")?) {
        p.density = d;
    }
    if let Some(s) = file.get("scale")? {
        p.scale = s;
    }
    p.validate()?;
    Ok(p)
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let file = ConfigFile::load(args.solver.config.as_deref())?;
    let mut keys = SOLVER_KEYS.to_vec();
    keys.extend([
        "count",
        "stops",
        "m_range",
        "n_range",
        "density",
        "scale",
        "ground_truth",
        "execution",
    ]);
    file.check_keys(&keys)?;

    let suite: Suite = args.suite.parse()?;
    let count = args.count.or(file.get("count")?).unwrap_or(50);
    let mut cfg = ExperimentConfig::new(suite, args.seed, count);
    cfg.generator = generator_params(args.m_range.as_ref(), args.n_range.as_ref(), None, &file)?;
    if let Some(s) = args.stops.clone().or(file.get("stops")?) {
        cfg.stop_iterations = parse_stops(&s)?;
    }
    let perturbed = solver_options(&args.solver, &file)?;
    if perturbed.initial_perturbation == 0.0 {
        return Err(usage("the perturbed arm needs epsilon > 0"));
    }
    cfg.options_unperturbed = perturbed.unperturbed();
    cfg.options_perturbed = perturbed;
    let truth: Option<String> = file.get("ground_truth")?;
    cfg.ground_truth = match (args.interior_truth, truth.as_deref()) {
        (true, _) | (false, Some("interior")) => GroundTruth::InteriorPoint,
        (false, None | Some("default")) => GroundTruth::Default,
        (false, Some(other)) => return Err(usage(format!("unknown ground_truth `{other}`"))),
    };
    let execution: Option<String> = file.get("execution")?;
    cfg.execution = match (args.sequential, execution.as_deref()) {
        (true, _) | (false, Some("sequential")) => Execution::Sequential,
        (false, Some("parallel")) => Execution::Parallel,
        (false, None) => Execution::default(),
        (false, Some(other)) => return Err(usage(format!("unknown execution `{other}`"))),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn io_failure(path: &Path, e: perturbqp::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn run_solve(args: &SolveArgs) -> Result<ExitCode, Failure> {
    let file = ConfigFile::load(args.solver.config.as_deref())?;
    file.check_keys(&SOLVER_KEYS)?;
    let opts = solver_options(&args.solver, &file)?;
    let (qp, mapping) = read_qps_file(&args.file).map_err(|e| match e {
        perturbqp::Error::Io(_) => io_failure(&args.file, e),
        other => usage(format!("{}: {other}", args.file.display())),
    })?;
    let report = solve(&qp, &opts)?;
    let x = &report.final_iterate.x;
    println!("problem      {}", qp.name());
    println!("size         m = {}, n = {}", qp.m(), qp.n());
    println!("status       {}", report.status.as_str());
    println!("iterations   {}", report.iterations);
    println!("mu_lambda    {:.3e}", report.final_mu_lambda());
    println!("mu           {:.3e}", report.final_mu());
    if let Some(last) = report.trace.last() {
        println!("residual     {:.3e}", last.residual);
    }
    println!("objective    {:.10e}", mapping.original_objective(&qp, x));
    println!("predicted    {} active", report.prediction.active.len());
    if args.crossover {
        let reference = active_set_solve(&qp, None)?;
        let out = crossover_from(&qp, &report.prediction.active, &reference.x, Some(x))?;
        println!("crossover    {:?}", out.status);
        println!(
            "active-set   {} iterations",
            out.score.active_set_iterations
        );
        println!("feaErr       {:.1e}", out.score.feasibility_error);
        println!("relObjErr    {:.1e}", out.score.objective_error);
        println!(
            "objective*   {:.10e}",
            mapping.original_objective(&qp, &out.score.lifted)
        );
    }
    let values = mapping.recover(x);
    println!(
        "x            {}",
        values
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(ExitCode::SUCCESS)
}

fn finished(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{failures} instance(s) failed");
        ExitCode::from(2)
    }
}

fn run_ratios(args: &ExperimentArgs) -> Result<ExitCode, Failure> {
    let cfg = experiment_config(args)?;
    let out = run_ratio_experiment(&cfg)?;
    write_ratio_csv(&out.rows, &args.out).map_err(|e| io_failure(&args.out, e))?;
    Ok(finished(out.failures))
}

fn run_crossover(args: &ExperimentArgs) -> Result<ExitCode, Failure> {
    let cfg = experiment_config(args)?;
    let out = run_crossover_experiment(&cfg)?;
    write_report_csv(&out.records, &args.out).map_err(|e| io_failure(&args.out, e))?;
    Ok(finished(out.failures))
}

fn run_generate(args: &GenerateArgs) -> Result<ExitCode, Failure> {
    let kind: ProblemKind = args.kind.parse()?;
    let template = generator_params(
        args.m_range.as_ref(),
        args.n_range.as_ref(),
        args.density,
        &ConfigFile::default(),
    )?;
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;
    for k in 0..args.count as u64 {
        let params = GenParams {
            seed: args.seed + k,
            ..template.clone()
        };
        let g = generate(kind, &params)?;
        let path = args
            .out
            .join(format!("{}-{}.qps", kind.as_str(), params.seed));
        fs::write(&path, write_qps(&g.qp))
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Ratios(a) => run_ratios(a),
        Command::Crossover(a) => run_crossover(a),
        Command::Generate(a) => run_generate(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("I/O error: {msg}");
            ExitCode::from(3)
        }
    }
}
