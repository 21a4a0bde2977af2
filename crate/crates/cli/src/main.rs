use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use psi_core::inversion::{K0Policy, Method};

mod commands;
mod format;

/// State parameter estimation from undrained CPTu records.
#[derive(Debug, Parser)]
#[command(name = "cptu-psi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the state parameter along a sounding.
    Invert(InvertArgs),
    /// Simulate an undrained triaxial compression test from the in-situ state.
    Triaxial(TriaxialArgs),
    /// Undrained cavity expansion limit pressures.
    Cavity(CavityArgs),
    /// Dump a bundled reference table as CSV.
    Fixtures(FixturesArgs),
    /// Curve data for the parametric plots.
    Figures(FiguresArgs),
    /// Invert every bundled fixture row and summarize the error per method.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct OutputArg {
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    #[value(name = "this_work")]
    ThisWork,
    Plewes,
    #[value(name = "pezeshki_ahmadi")]
    PezeshkiAhmadi,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::ThisWork => Method::ThisWork,
            MethodArg::Plewes => Method::Plewes,
            MethodArg::PezeshkiAhmadi => Method::PezeshkiAhmadi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum K0PolicyArg {
    /// Every record must carry K0.
    Given,
    /// Use K0 = 0.7 where a record has none.
    #[value(name = "assume_0_7")]
    Assume07,
}

impl From<K0PolicyArg> for K0Policy {
    fn from(p: K0PolicyArg) -> Self {
        match p {
            K0PolicyArg::Given => K0Policy::Given,
            K0PolicyArg::Assume07 => K0Policy::Assume07,
        }
    }
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// Sounding CSV with header depth,qc,u2,u1,u0,sigma_v0,sigma_v0_eff,k0.
    input: PathBuf,
    /// JSON inversion settings: lambda, M, and optionally c_q, rho, beta, k0_policy.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Slope of the critical state line in e-ln p'.
    #[arg(long)]
    lambda: Option<f64>,
    /// Triaxial critical state stress ratio.
    #[arg(long = "M", id = "m_tc")]
    m_tc: Option<f64>,
    /// Geometric tip factor (overrides --rho).
    #[arg(long)]
    c_q: Option<f64>,
    /// Principal stress angle at the tip, degrees (120 smooth, 150 rough).
    #[arg(long)]
    rho: Option<f64>,
    /// Ratio between u1 and u2 excess pore pressure ratios.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum)]
    k0_policy: Option<K0PolicyArg>,
    /// Methods to apply; repeatable.
    #[arg(long = "method", value_enum, default_values_t = [MethodArg::ThisWork])]
    methods: Vec<MethodArg>,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AnchorArg {
    /// Place the preconsolidation pressure so that the CSL intercept is honoured.
    Csl,
    /// Use OCR times the initial mean stress.
    Ocr,
}

#[derive(Debug, Args)]
pub struct TriaxialArgs {
    /// Material JSON.
    #[arg(long)]
    material: PathBuf,
    /// Initial vertical effective stress, kPa.
    #[arg(long, default_value_t = 100.0)]
    sigma_v0_eff: f64,
    /// Final deviatoric strain.
    #[arg(long, default_value_t = 0.5)]
    max_strain: f64,
    /// Deviatoric strain per output step.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    #[arg(long, value_enum, default_value_t = AnchorArg::Csl)]
    anchor: AnchorArg,
    /// Start from the isotropic state instead of the K0 state.
    #[arg(long)]
    isotropic: bool,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeomArg {
    Spherical,
    Cylindrical,
}

#[derive(Debug, Args)]
pub struct CavityArgs {
    /// Material JSON.
    #[arg(long)]
    material: PathBuf,
    /// Cavity geometries; repeatable. Both by default.
    #[arg(long = "geom", value_enum)]
    geoms: Vec<GeomArg>,
    /// Initial vertical effective stress, kPa.
    #[arg(long, default_value_t = 100.0)]
    sigma_v0_eff: f64,
    /// Initial state parameter; computed from the in-situ state when omitted.
    #[arg(long)]
    psi0: Option<f64>,
    /// Initial pore pressure, kPa.
    #[arg(long, default_value_t = 0.0)]
    u0: f64,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableArg {
    /// Reference materials and their element test results.
    Materials,
    /// Cone and cavity metrics of every simulation series.
    Results,
    /// Parameter overrides of each series.
    Series,
    /// Source of every bundled value.
    Manifest,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(value_enum)]
    table: TableArg,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FigureArg {
    /// c_q against the principal stress angle.
    Cq,
    /// Inversion parameters against lambda (M = 1.4, c_q = 1.35).
    #[value(name = "kbar_mbar")]
    KbarMbar,
    /// Input and estimated state parameter per fixture row and method.
    Roundtrip,
    /// K0 correction against K0 and lambda.
    K0,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    #[arg(value_enum)]
    which: FigureArg,
    /// Tip factor used by `roundtrip`.
    #[arg(long, default_value_t = 1.0)]
    c_q: f64,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Tip factor for the this_work method.
    #[arg(long, default_value_t = 1.0)]
    c_q: f64,
    /// Include the rough-cone series.
    #[arg(long)]
    all: bool,
    /// Ignore u1 and use beta times the u2 ratio.
    #[arg(long)]
    beta_only: bool,
    #[command(flatten)]
    out: OutputArg,
}

fn open_output(out: &OutputArg) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &out.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Invert(a) => {
            let out = open_output(&a.out)?;
            commands::invert(&a, out)
        }
        Command::Triaxial(a) => {
            let out = open_output(&a.out)?;
            commands::triaxial(&a, out)
        }
        Command::Cavity(a) => {
            let out = open_output(&a.out)?;
            commands::cavity(&a, out)
        }
        Command::Fixtures(a) => {
            let out = open_output(&a.out)?;
            commands::fixtures(&a, out)
        }
        Command::Figures(a) => {
            let out = open_output(&a.out)?;
            commands::figures(&a, out)
        }
        Command::Compare(a) => {
            let out = open_output(&a.out)?;
            commands::compare(&a, out)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<psi_core::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
