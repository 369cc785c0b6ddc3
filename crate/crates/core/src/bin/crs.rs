use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crs_core::arc::{
    arc_minimize, write_history_csv, write_summary_csv, ArcConfig, ChainedRosenbrock, Humps,
    SmoothObjective,
};
use crs_core::bench::{run_experiment, write_csv, ExperimentConfig, InstanceSpec, MethodSpec};
use crs_core::operators::{read_matrix, read_vector};
use crs_core::solvers::{solve_crs, Method, SolveOptions, SolverConfig};
use crs_core::{CrsProblem, Variant};

#[derive(Parser)]
#[command(name = "crs", version, about = "Cubic regularization subproblem solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the synthetic benchmark and write one CSV row per run.
    Bench(BenchArgs),
    /// Solve one subproblem read from disk.
    Solve(SolveArgs),
    /// Minimize a test function by adaptive cubic regularization.
    Arc(ArcArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Apg,
    Bbm,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Apg => Method::Apg,
            MethodArg::Bbm => Method::Bbm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Sp,
    Ap,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Sp => Variant::Sp,
            VariantArg::Ap => Variant::Ap,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Easy,
    Hard,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Rosenbrock,
    Humps,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    case: CaseArg,
    /// Dimensions (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Block size; defaults to `n` (one dense block).
    #[arg(long)]
    block: Option<usize>,
    /// Condition numbers for the easy case (comma separated).
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<f64>,
    /// Eigengaps for the hard case (comma separated).
    #[arg(long, value_delimiter = ',')]
    gap: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "apg")]
    method: Vec<MethodArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sp")]
    variant: Vec<VariantArg>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Run cells one after another instead of in parallel.
    #[arg(long)]
    serial: bool,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix in Matrix Market or whitespace-separated dense text format.
    #[arg(long, required_unless_present = "manifest")]
    matrix: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    rhs: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    rho: Option<f64>,
    /// Key-value file with `matrix`, `rhs` and `rho` entries.
    #[arg(long, conflicts_with_all = ["matrix", "rhs", "rho"])]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "apg")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "sp")]
    variant: VariantArg,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    eig_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the solution vector, one entry per line.
    #[arg(long)]
    x_out: Option<PathBuf>,
}

#[derive(Args)]
struct ArcArgs {
    #[arg(long, value_enum, default_value = "rosenbrock")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, value_enum, default_value = "apg")]
    subsolver: MethodArg,
    #[arg(long, default_value_t = 5000)]
    max_outer: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-iteration history CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// One-row summary CSV with the run's counters.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let params = match args.case {
        CaseArg::Easy if args.kappa.is_empty() => bail!("--kappa is required for the easy case"),
        CaseArg::Hard if args.gap.is_empty() => bail!("--gap is required for the hard case"),
        CaseArg::Easy => &args.kappa,
        CaseArg::Hard => &args.gap,
    };
    let mut grid = Vec::new();
    for &n in &args.n {
        let block = args.block.unwrap_or(n);
        for &p in params {
            let mut spec = match args.case {
                CaseArg::Easy => InstanceSpec::easy(n, block, p, args.seed),
                CaseArg::Hard => InstanceSpec::hard(n, block, p, args.seed),
            };
            spec.rho = args.rho;
            grid.push(spec);
        }
    }
    let methods = args
        .method
        .iter()
        .flat_map(|&m| {
            args.variant
                .iter()
                .map(move |&v| MethodSpec { method: m.into(), variant: v.into() })
        })
        .collect();
    let mut cfg = ExperimentConfig {
        grid,
        methods,
        trials: args.trials,
        parallel: !args.serial,
        ..Default::default()
    };
    cfg.solver.max_iter = args.max_iter;
    let rows = run_experiment(&cfg)?;
    write_csv(&rows, sink(args.out.as_deref())?)?;
    Ok(())
}

fn solve(args: SolveArgs) -> anyhow::Result<()> {
    let prob = match &args.manifest {
        Some(m) => CrsProblem::from_manifest(m)?,
        None => {
            let (Some(a), Some(b), Some(rho)) = (&args.matrix, &args.rhs, args.rho) else {
                bail!("--matrix, --rhs and --rho are required without --manifest");
            };
            CrsProblem::new(read_matrix(a)?, read_vector(b)?, rho)?
        }
    };
    let opts = SolveOptions {
        method: args.method.into(),
        variant: args.variant.into(),
        eig_tol: args.eig_tol,
        solver: SolverConfig {
            tol: args.tol,
            max_iter: args.max_iter,
            seed: args.seed,
            ..SolverConfig::default()
        },
        ..SolveOptions::default()
    };
    let rep = solve_crs(&prob, &opts)?;
    let mut out = io::stdout().lock();
    writeln!(out, "method      {}({})", rep.method, rep.variant)?;
    writeln!(out, "n           {}", rep.x.len())?;
    writeln!(out, "status      {}", rep.status)?;
    writeln!(out, "fval        {:.16e}", rep.fval)?;
    writeln!(out, "|x|         {:.16e}", crs_core::linalg::norm(&rep.x))?;
    writeln!(out, "theta       {:.10e}", rep.theta)?;
    writeln!(out, "shift       {:.10e}", rep.spec.shift)?;
    writeln!(out, "iterations  {}", rep.iterations)?;
    writeln!(out, "eig_iter    {}", rep.eig_iterations)?;
    writeln!(out, "matvecs     {}", rep.matvecs)?;
    writeln!(out, "time        {:.6}", rep.total_time().as_secs_f64())?;
    writeln!(out, "time_eig    {:.6}", rep.eig_time.as_secs_f64())?;
    if let Some(path) = &args.x_out {
        let mut w = sink(Some(path))?;
        for v in &rep.x {
            writeln!(w, "{v:.17e}")?;
        }
        w.flush()?;
    }
    Ok(())
}

fn arc(args: ArcArgs) -> anyhow::Result<()> {
    let (obj, x0): (Box<dyn SmoothObjective>, Vec<f64>) = match args.objective {
        ObjectiveArg::Rosenbrock => {
            let f = ChainedRosenbrock { n: args.dim };
            let x0 = f.standard_start();
            (Box::new(f), x0)
        }
        ObjectiveArg::Humps => {
            let f = Humps::new(args.dim);
            let x0 = f.standard_start();
            (Box::new(f), x0)
        }
    };
    let cfg = ArcConfig { max_outer: args.max_outer, seed: args.seed, ..ArcConfig::default() };
    let method: Method = args.subsolver.into();
    let res = arc_minimize(obj.as_ref(), &x0, &cfg, method)?;
    write_history_csv(&res.history, sink(args.out.as_deref())?)?;
    if let Some(path) = &args.summary {
        write_summary_csv(&[(obj.name(), method, &res)], sink(Some(path))?)?;
    }
    eprintln!(
        "{}: f = {:.6e}, |g| = {:.3e}, outer = {}, products = {}",
        res.status, res.f, res.grad_norm, res.counters.n_i, res.counters.n_prod
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let res = match Cli::parse().command {
        Command::Bench(a) => bench(a),
        Command::Solve(a) => solve(a),
        Command::Arc(a) => arc(a),
    };
    // A closed pipe (e.g. `| head`) is not an error for a report writer.
    match res {
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => Ok(()),
        r => r,
    }
}
