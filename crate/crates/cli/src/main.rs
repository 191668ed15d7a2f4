//! `stochmatch` command-line front end.
//!
//! Exit status: 0 when every requested target holds, 1 when a verification
//! target fails, 2 on bad arguments or unreadable input.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stochmatch::model::{gen_hardness_edge_weighted, gen_jaillet_lu, gen_random, GenParams};
use stochmatch::sim::{monte_carlo_with_trials, write_trials_csv};
use stochmatch::verify::{
    first_level_report, hardness_report, jaillet_lu_report, property_suite, second_level_report, top_half_gamma_report,
    top_half_ode_report, GridConfig, VerifierReport,
};
use stochmatch::{
    monte_carlo, solve_jaillet_lu_lp, solve_lp, AlgoChoice, ArrivalModel, Error, FractionalMatching, Instance,
    LpSolution, McReport, WeightClass,
};

#[derive(Parser, Debug)]
#[command(name = "stochmatch", version, about = "Online stochastic matching under Poisson arrivals")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Report format for `simulate`, `verify` and `all`.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write an instance as JSON.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Solve an LP relaxation of an instance.
    Lp(LpArgs),
    /// Monte Carlo estimate of an algorithm's ratio.
    Simulate(SimArgs),
    /// Run one verification target.
    Verify(VerifyArgs),
    /// Every verifier at its default grid plus the Jaillet-Lu simulation.
    All(AllArgs),
}

#[derive(Subcommand, Debug)]
enum GenKind {
    Random(RandomArgs),
    /// Edge-weighted hardness family.
    HardnessEw {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// The three-type Jaillet-Lu tightness instance.
    JailletLu,
}

#[derive(Args, Debug)]
struct RandomArgs {
    #[arg(long, default_value_t = 4)]
    n_types: usize,
    #[arg(long, default_value_t = 3)]
    n_offline: usize,
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
    #[arg(long, default_value_t = 0.2)]
    rate_min: f64,
    #[arg(long, default_value_t = 1.5)]
    rate_max: f64,
    #[arg(long, default_value_t = 1.0)]
    weight_min: f64,
    #[arg(long, default_value_t = 5.0)]
    weight_max: f64,
    #[arg(long, value_enum, default_value_t = ClassArg::Unweighted)]
    weight_class: ClassArg,
    #[arg(long)]
    free_disposal: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ClassArg {
    Unweighted,
    Vertex,
    Edge,
}

impl From<ClassArg> for WeightClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Unweighted => WeightClass::Unweighted,
            ClassArg::Vertex => WeightClass::VertexWeighted,
            ClassArg::Edge => WeightClass::EdgeWeighted,
        }
    }
}

#[derive(Args, Debug)]
struct LpArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Hierarchy level (0 is the matching polytope).
    #[arg(long, conflicts_with = "jl", required_unless_present = "jl")]
    level: Option<usize>,
    /// Solve the Jaillet-Lu LP instead.
    #[arg(long)]
    jl: bool,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Poisson,
    Fixed,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = parse_algo)]
    algo: AlgoChoice,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModelArg::Poisson)]
    model: ModelArg,
    /// Number of arrivals for the fixed model.
    #[arg(long, required_if_eq("model", "fixed"))]
    lambda: Option<usize>,
    /// Solve the LP at this level for the fractional matching.
    #[arg(long, conflicts_with = "solution", default_value_t = 1)]
    level: usize,
    /// Read the fractional matching from an `lp` output file.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Also write per-trial `(alg, opt)` values as CSV.
    #[arg(long)]
    trials_csv: Option<PathBuf>,
}

fn parse_algo(s: &str) -> Result<AlgoChoice, String> {
    s.parse::<AlgoChoice>().map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    TopHalf,
    FirstLevel,
    SecondLevel,
    Hardness,
    Jl,
    Properties,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    which: Which,
    /// Time step (ODE check, first level, second level).
    #[arg(long)]
    dt: Option<f64>,
    /// Load grid step of the second-level envelope.
    #[arg(long)]
    dx: Option<f64>,
    /// Quadrature step of the second-level integrals.
    #[arg(long)]
    dlambda: Option<f64>,
    /// Second-level loads, or the hardness weight.
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    /// Grid step of the first-level load sweep.
    #[arg(long, default_value_t = 0.01)]
    x_step: f64,
    /// Second-level ratio target.
    #[arg(long, default_value_t = 0.70)]
    target: f64,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 0.405)]
    m_frac: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

#[derive(Args, Debug)]
struct AllArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Trials of the Jaillet-Lu greedy simulation.
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
}

enum Failure {
    Usage(String),
    Target(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) => Failure::Target(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Target(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("STOCHMATCH_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("STOCHMATCH_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("STOCHMATCH_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Gen { kind } => {
            let inst = match kind {
                GenKind::Random(a) => gen_random(&gen_params(a), a.seed)?,
                GenKind::HardnessEw { n, x, eps } => gen_hardness_edge_weighted(*n, *x, *eps)?,
                GenKind::JailletLu => gen_jaillet_lu(),
            };
            emit(cli, &inst.to_json_string()?)
        }
        Command::Lp(a) => {
            let inst = load_instance(&a.instance)?;
            let sol =
                if a.jl { solve_jaillet_lu_lp(&inst, a.tol)? } else { solve_lp(&inst, a.level.unwrap_or(1), a.tol)? };
            emit(cli, &sol.to_json(&inst)?)
        }
        Command::Simulate(a) => simulate(cli, a),
        Command::Verify(a) => {
            let r = verify(a)?;
            emit(cli, &render(cli.format, std::slice::from_ref(&r))?)?;
            judge(&[r])
        }
        Command::All(a) => {
            let reports = all(a)?;
            emit(cli, &render(cli.format, &reports)?)?;
            judge(&reports)
        }
    }
}

fn gen_params(a: &RandomArgs) -> GenParams {
    GenParams {
        n_types: a.n_types,
        n_offline: a.n_offline,
        edge_prob: a.edge_prob,
        rate_range: (a.rate_min, a.rate_max),
        weight_range: (a.weight_min, a.weight_max),
        weight_class: a.weight_class.into(),
        free_disposal: a.free_disposal,
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    if !path.exists() {
        return Err(Failure::Usage(format!("instance not found: {}", path.display())));
    }
    Ok(Instance::load(path)?)
}

fn emit(cli: &Cli, text: &str) -> Outcome {
    match &cli.output {
        Some(p) => fs::write(p, text.as_bytes())?,
        None => {
            let mut out = io::stdout().lock();
            let written = out.write_all(text.as_bytes()).and_then(|()| {
                if text.ends_with('\n') {
                    Ok(())
                } else {
                    out.write_all(b"\n")
                }
            });
            match written {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

fn judge(reports: &[VerifierReport]) -> Outcome {
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Target(format!("target failed: {}", failed.join(", "))))
    }
}

fn render(format: Format, reports: &[VerifierReport]) -> Result<String, Failure> {
    Ok(match (format, reports) {
        (Format::Json, [one]) => one.to_json()?,
        (Format::Json, many) => serde_json::to_string_pretty(many).map_err(|e| Failure::Usage(e.to_string()))?,
        (Format::Csv, many) => {
            let mut out = String::new();
            for (k, r) in many.iter().enumerate() {
                let csv = r.to_csv();
                // one header for the whole file
                out += if k == 0 { &csv } else { csv.split_once('\n').map_or("", |p| p.1) };
            }
            out
        }
    })
}

fn mc_csv(r: &McReport) -> String {
    let mut out = String::from("section,key,value\n");
    out += &format!("report,algo,{}\n", r.algo);
    match r.model {
        ArrivalModel::Poisson => out += "report,model,poisson\n",
        ArrivalModel::Fixed { lambda } => out += &format!("report,model,fixed\nreport,lambda,{lambda}\n"),
    }
    out += &format!("report,seed,{}\nreport,trials,{}\n", r.seed, r.trials);
    for (k, v) in [
        ("alg_mean", r.alg_mean),
        ("opt_mean", r.opt_mean),
        ("ratio", r.ratio),
        ("alg_stderr", r.alg_stderr),
        ("opt_stderr", r.opt_stderr),
    ] {
        out += &format!("value,{k},{v}\n");
    }
    for (j, (p, se)) in r.per_vertex_match_prob.iter().enumerate() {
        out += &format!("vertex_prob,{j},{p}\nvertex_stderr,{j},{se}\n");
    }
    out
}

fn simulate(cli: &Cli, a: &SimArgs) -> Outcome {
    let inst = load_instance(&a.instance)?;
    let x: FractionalMatching = match &a.solution {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            LpSolution::from_json(&inst, &text)?.matching
        }
        None => solve_lp(&inst, a.level, 1e-9)?.matching,
    };
    let model = match a.model {
        ModelArg::Poisson => ArrivalModel::Poisson,
        ModelArg::Fixed => ArrivalModel::Fixed { lambda: a.lambda.unwrap_or(0) },
    };
    let report = match &a.trials_csv {
        Some(path) => {
            let (r, rows) = monte_carlo_with_trials(&inst, &x, a.algo, a.trials, a.seed, model)?;
            write_trials_csv(fs::File::create(path)?, &rows)?;
            r
        }
        None => monte_carlo(&inst, &x, a.algo, a.trials, a.seed, model)?,
    };
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&report).map_err(|e| Failure::Usage(e.to_string()))?,
        Format::Csv => mc_csv(&report),
    };
    emit(cli, &text)
}

fn grid(a: &VerifyArgs, default: f64) -> GridConfig {
    let dt = a.dt.unwrap_or(default);
    GridConfig { dt, dx: a.dx.unwrap_or(dt), dlambda: a.dlambda.unwrap_or(dt), ..GridConfig::uniform(dt) }
}

fn merge(mut a: VerifierReport, b: VerifierReport) -> VerifierReport {
    a.pass &= b.pass;
    a.target = format!("{}; {}", a.target, b.target);
    a.values.extend(b.values.into_iter().map(|(k, v)| (format!("ode.{k}"), v)));
    a.params.extend(b.params);
    a
}

fn verify(a: &VerifyArgs) -> Result<VerifierReport, Failure> {
    Ok(match a.which {
        Which::TopHalf => merge(top_half_gamma_report(), top_half_ode_report(a.dt.unwrap_or(1e-4))?),
        Which::FirstLevel => first_level_report(a.dt.unwrap_or(1e-5), a.x_step)?,
        Which::SecondLevel => {
            let xs = if a.x.is_empty() { vec![0.25, 0.5, 0.75, 1.0] } else { a.x.clone() };
            second_level_report(&xs, &grid(a, 1e-3), a.target)?
        }
        Which::Hardness => {
            let x = match a.x.as_slice() {
                [] => 0.94,
                [x] => *x,
                _ => return Err(Failure::Usage("hardness takes a single --x".into())),
            };
            hardness_report(a.n, x, a.m_frac)?
        }
        Which::Jl => jaillet_lu_report(),
        Which::Properties => property_suite(a.seed, a.trials)?,
    })
}

fn jl_simulation(seed: u64, trials: u64) -> Result<VerifierReport, Failure> {
    let inst = gen_jaillet_lu();
    let x = solve_jaillet_lu_lp(&inst, 1e-9)?.matching;
    let r = monte_carlo(&inst, &x, AlgoChoice::Greedy, trials, seed, ArrivalModel::Poisson)?;
    let want = jaillet_lu_report().values["alg"];
    let z = (r.alg_mean - want).abs() / r.alg_stderr;
    Ok(VerifierReport::new("jl-simulation", "greedy mean within 3 stderr of the closed form", z <= 3.0)
        .value("alg_mean", r.alg_mean)
        .value("alg_stderr", r.alg_stderr)
        .value("ratio", r.alg_mean / 2.0)
        .value("closed_form", want)
        .param("seed", seed as f64)
        .param("trials", trials as f64))
}

fn all(a: &AllArgs) -> Result<Vec<VerifierReport>, Failure> {
    let defaults = |which| VerifyArgs {
        which,
        dt: None,
        dx: None,
        dlambda: None,
        x: Vec::new(),
        x_step: 0.01,
        target: 0.70,
        n: 1_000_000,
        m_frac: 0.405,
        seed: a.seed,
        trials: 1000,
    };
    let mut out = Vec::new();
    for which in [Which::TopHalf, Which::Jl, Which::FirstLevel, Which::Hardness, Which::SecondLevel, Which::Properties]
    {
        out.push(verify(&defaults(which))?);
    }
    out.push(jl_simulation(a.seed, a.trials)?);
    Ok(out)
}
