//! Command-line front end: `analyze` runs one experiment and writes CSV/JSON,
//! `verify` runs the cross-checks.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pfasst_lfa::analysis::{parse_blocks, parse_strategies, Blocks, ExperimentConfig, Reference, Strategy};
use pfasst_lfa::quadrature::QDeltaKind;
use pfasst_lfa::space::ProblemKind;
use pfasst_lfa::verify::{Fault, Scale};

pub mod fuzz_entry;
pub mod output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pfasst-lfa", version, about = "Local Fourier analysis of two-level PFASST")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run PFASST on a model problem and compare with the predictions.
    Analyze(AnalyzeArgs),
    /// Cross-check matrix, algorithmic and block formulations.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_parser = parse_problem)]
    pub problem: ProblemKind,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// ν for diffusion, c for advection.
    #[arg(long, conflicts_with = "mu")]
    pub coefficient: Option<f64>,
    /// Diffusion number ν Δt / Δx² (diffusion only).
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub wavenumber: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Comma list of rho, norm, norm-power, apply.
    #[arg(long, default_value = "rho,norm,norm-power,apply", value_parser = parse_strategy_list)]
    pub strategies: StrategyList,
    /// Comma list of tc, c, full.
    #[arg(long, default_value = "tc", value_parser = parse_block_list)]
    pub blocks: BlockList,
    /// implicit-euler, lu or tril; defaults per problem.
    #[arg(long, value_parser = parse_qdelta)]
    pub qdelta: Option<QDeltaKind>,
    #[arg(long)]
    pub interp_degree: Option<usize>,
    #[arg(long)]
    pub restr_degree: Option<usize>,
    /// Error reference: collocation or pde.
    #[arg(long, default_value = "collocation", value_parser = parse_reference)]
    pub reference: Reference,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    pub dump_config: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "small", value_parser = parse_scale)]
    pub scale: Scale,
    #[arg(long, hide = true, value_parser = parse_fault)]
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyList(pub Vec<Strategy>);

#[derive(Debug, Clone, PartialEq)]
pub struct BlockList(pub Vec<Blocks>);

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    s.parse().map_err(|e: pfasst_lfa::Error| e.to_string())
}

fn parse_qdelta(s: &str) -> Result<QDeltaKind, String> {
    s.parse().map_err(|e: pfasst_lfa::Error| e.to_string())
}

fn parse_reference(s: &str) -> Result<Reference, String> {
    s.parse().map_err(|e: pfasst_lfa::Error| e.to_string())
}

fn parse_scale(s: &str) -> Result<Scale, String> {
    s.parse().map_err(|e: pfasst_lfa::Error| e.to_string())
}

fn parse_fault(s: &str) -> Result<Fault, String> {
    s.parse().map_err(|e: pfasst_lfa::Error| e.to_string())
}

fn parse_strategy_list(s: &str) -> Result<StrategyList, String> {
    parse_strategies(s).map(StrategyList).map_err(|e| e.to_string())
}

fn parse_block_list(s: &str) -> Result<BlockList, String> {
    parse_blocks(s).map(BlockList).map_err(|e| e.to_string())
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(pfasst_lfa::Error),
    Verify(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Errors raised while building the experiment are usage errors when they
/// concern the inputs and numerical failures otherwise.
pub fn classify(e: pfasst_lfa::Error) -> CliError {
    use pfasst_lfa::Error as E;
    match e {
        E::Dimension(_) | E::Size(_) | E::Range(_) | E::Parity(_) | E::Configuration(_) | E::Parse(_) => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Numerical(other),
    }
}

/// Flags merged over the per-problem defaults, then validated.
pub fn resolve_config(args: &AnalyzeArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::defaults(args.problem);
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(l) = args.l {
        cfg.l = l;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(k) = args.wavenumber {
        cfg.wavenumber = k;
    }
    if let Some(k) = args.iterations {
        cfg.iterations = k;
    }
    if let Some(q) = args.qdelta {
        cfg.qdelta = q;
    }
    if let Some(d) = args.interp_degree {
        cfg.interp_degree = d;
    }
    if let Some(d) = args.restr_degree {
        cfg.restr_degree = d;
    }
    cfg.reference = args.reference;
    match (args.problem, args.mu, args.coefficient) {
        (ProblemKind::Advection, Some(_), _) => {
            return Err(CliError::Usage("--mu applies to diffusion only".into()));
        }
        (_, Some(mu), _) => cfg = cfg.with_mu(mu),
        (_, None, Some(c)) => {
            cfg.coefficient = c;
            cfg.mu = None;
        }
        (ProblemKind::Diffusion, None, None) => {
            let mu = cfg.mu.unwrap_or(pfasst_lfa::analysis::DEFAULT_MU);
            cfg = cfg.with_mu(mu);
        }
        (ProblemKind::Advection, None, None) => {}
    }
    cfg.validate().map_err(classify)?;
    Ok(cfg)
}

/// Parses `argv` and runs the command, writing progress to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => output::cmd_analyze(a, out, err),
        Command::Verify(v) => output::cmd_verify(v, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "pfasst-lfa: {e}");
            e.exit_code()
        }
    }
}
