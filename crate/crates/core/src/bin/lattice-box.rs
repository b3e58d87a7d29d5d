//! `lattice-box`: counts, limit-law tables and Monte Carlo comparisons.
//!
//! Exit codes: 0 success, 1 statistical or verification failure, 2 usage or
//! configuration error, 3 I/O error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lattice_box::io::{self, CfComparison, Format, LawTables};
use lattice_box::lattice::{count_lattice, BoxSpec, Translation};
use lattice_box::laws::{DiagonalLimitLaw, LimitLaw};
use lattice_box::sampling::{
    convergence_sweep, empirical_cf, generate_batch_with, u_grid, BatchOptions, Scenario,
};
use lattice_box::{verify, Error};

/// Relative `--output` paths are resolved against this directory when set.
const OUTPUT_DIR_ENV: &str = "LATTICE_BOX_OUTPUT_DIR";

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "lattice-box",
    version,
    about = "Lattice points of Z^d in dilated, translated hypercubes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact count, error and reduced statistic for one (d, a, t, X).
    Count(CountArgs),
    /// Generate a Monte Carlo batch of (t, Delta, R/t^(d-1)).
    Sample(SampleArgs),
    /// Compare the empirical CF of a batch with the limit CF.
    Cf(CfArgs),
    /// Tabulate the density and CDF of a limit law.
    Law(LawArgs),
    /// KS and CF distances over an increasing list of horizons.
    Convergence(ConvergenceArgs),
    /// Run the built-in self-check suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    d: usize,
    /// Half side of C(a).
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
    /// Comma-separated translation coordinates.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    x: Vec<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioKind {
    Diagonal,
    #[value(alias = "iid_uniform")]
    IidUniform,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioKind,
    #[arg(long)]
    d: usize,
    /// Common coordinate of X for the diagonal scenario.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
}

impl ScenarioArgs {
    fn scenario(&self) -> Result<Scenario, Error> {
        let s = match self.scenario {
            ScenarioKind::Diagonal => Scenario::Diagonal {
                d: self.d,
                x0: self.x0.ok_or_else(|| {
                    Error::Argument("--x0 is required for the diagonal scenario".into())
                })?,
            },
            ScenarioKind::IidUniform => Scenario::IidUniform { d: self.d },
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Horizon T of the dilation law.
    #[arg(long, visible_alias = "T", allow_hyphen_values = true)]
    horizon: f64,
    /// Number of draws.
    #[arg(long, visible_alias = "N")]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// `uniform` or a knot,value CSV file.
    #[arg(long, default_value = "uniform")]
    rho: String,
    /// Worker threads; never changes the output.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl RunArgs {
    fn options(&self) -> BatchOptions {
        BatchOptions {
            workers: self.workers,
            ..BatchOptions::default()
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Batch file; a `<output>.meta.json` sidecar is written next to it.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Statistic {
    Delta,
    NormalizedError,
}

#[derive(Args)]
struct CfArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    u_min: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    u_max: f64,
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    u_step: f64,
    /// Largest accepted sup gap.
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    #[arg(long, value_enum, default_value = "delta")]
    statistic: Statistic,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct LawArgs {
    #[arg(long, value_enum)]
    law: ScenarioKind,
    #[arg(long)]
    d: usize,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "y")]
    x0: Option<f64>,
    /// Gap parameter for the diagonal law, instead of --x0.
    #[arg(long)]
    y: Option<f64>,
    #[arg(long, default_value_t = 201)]
    steps: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated increasing horizons.
    #[arg(long, value_delimiter = ',', required = true)]
    horizons: Vec<f64>,
    #[arg(long, visible_alias = "N")]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "uniform")]
    rho: String,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Smaller sample sizes.
    #[arg(long)]
    quick: bool,
}

enum Failure {
    Stat(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Error(Error::Io(e))
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::Numeric(_) => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

fn resolve(path: &std::path::Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit<F>(out: &OutputArgs, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write, Format) -> lattice_box::Result<()>,
{
    let format = out.format.into();
    match &out.output {
        Some(p) => {
            let mut w = io::create_output(&resolve(p))?;
            write(&mut w, format)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            write(&mut w, format)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run_count(args: &CountArgs) -> Result<(), Failure> {
    let b = BoxSpec::new(args.d, args.a)?;
    if args.x.len() != args.d {
        return Err(Error::Argument(format!(
            "--x has {} coordinates, expected {}",
            args.x.len(),
            args.d
        ))
        .into());
    }
    let x = Translation::new(args.x.clone())?;
    let r = count_lattice(&b, args.t, &x)?;
    if r.boundary_degenerate {
        eprintln!("note: boundary-degenerate input (a t +/- x_i within 1e-9 of an integer)");
    }
    emit(&args.out, |w, f| io::write_count(w, &r, f))
}

fn run_sample(args: &SampleArgs) -> Result<(), Failure> {
    let scenario = args.scenario.scenario()?;
    let rho = io::load_rho(&args.run.rho)?;
    let batch = generate_batch_with(
        scenario,
        args.run.horizon,
        args.run.n,
        &rho,
        args.run.seed,
        &args.run.options(),
    )?;
    let path = resolve(&args.output);
    let mut w = io::create_output(&path)?;
    io::write_batch(&mut w, &batch, args.format.into())?;
    w.flush()?;
    let mut m = io::create_output(&io::metadata_path(&path))?;
    io::write_metadata(&mut m, &io::BatchMetadata::of(&batch))?;
    m.flush()?;
    Ok(())
}

fn run_cf(args: &CfArgs) -> Result<(), Failure> {
    let scenario = args.scenario.scenario()?;
    let grid = u_grid(args.u_min, args.u_max, args.u_step);
    if grid.is_empty() {
        return Err(Error::Argument("the u grid has no points".into()).into());
    }
    let law = scenario.limit_law()?;
    let rho = io::load_rho(&args.run.rho)?;
    let batch = generate_batch_with(
        scenario,
        args.run.horizon,
        args.run.n,
        &rho,
        args.run.seed,
        &args.run.options(),
    )?;
    let samples = match args.statistic {
        Statistic::Delta => &batch.delta_samples,
        Statistic::NormalizedError => &batch.normalized_error_samples,
    };
    let cmp = CfComparison::new(&empirical_cf(samples, &grid)?, &law)?;
    emit(&args.out, |w, f| io::write_cf_comparison(w, &cmp, f))?;
    eprintln!("sup_gap={} tol={}", io::fmt_real(cmp.sup_gap), args.tol);
    if cmp.sup_gap <= args.tol {
        Ok(())
    } else {
        Err(Failure::Stat(format!(
            "sup gap {} exceeds tolerance {}",
            cmp.sup_gap, args.tol
        )))
    }
}

fn run_law(args: &LawArgs) -> Result<(), Failure> {
    let law = match args.law {
        ScenarioKind::Diagonal => match (args.x0, args.y) {
            (_, Some(y)) => LimitLaw::Diagonal(DiagonalLimitLaw::new(args.d, y)?),
            (Some(x0), None) => LimitLaw::diagonal(args.d, x0)?,
            (None, None) => {
                return Err(Error::Argument("the diagonal law needs --x0 or --y".into()).into())
            }
        },
        ScenarioKind::IidUniform => LimitLaw::iid_uniform(args.d)?,
    };
    let tables = LawTables::new(law, args.steps)?;
    emit(&args.out, |w, f| io::write_law_tables(w, &tables, f))
}

fn run_convergence(args: &ConvergenceArgs) -> Result<(), Failure> {
    let scenario = args.scenario.scenario()?;
    let rho = io::load_rho(&args.rho)?;
    let options = BatchOptions {
        workers: args.workers,
        ..BatchOptions::default()
    };
    let reports = convergence_sweep(scenario, &rho, &args.horizons, args.n, args.seed, &options)?;
    emit(&args.out, |w, f| io::write_reports(w, &reports, f))
}

fn run_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let report = verify::run_suites(args.quick);
    let width = report
        .checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(0);
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:width$}  {}", c.name, c.detail);
    }
    if report.all_passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::Stat(format!(
            "failed checks: {}",
            names.join(", ")
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Count(a) => run_count(a),
        Command::Sample(a) => run_sample(a),
        Command::Cf(a) => run_cf(a),
        Command::Law(a) => run_law(a),
        Command::Convergence(a) => run_convergence(a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Stat(msg)) => {
            eprintln!("lattice-box: {msg}");
            ExitCode::from(EXIT_FAIL)
        }
        Err(Failure::Error(e)) => {
            eprintln!("lattice-box: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
