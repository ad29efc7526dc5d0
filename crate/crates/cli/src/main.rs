//! `shiftlab`: trace formulas and spectral shift functions for matrix pairs.
//!
//! Exit status is 0 when every asserted check passes, 1 when a check fails and
//! 2 on usage or input errors.

mod commands;
mod config;
mod plotdata;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shiftlab_core::verify::family::FamilySelection;
use shiftlab_core::verify::instances::InstanceKind;
use shiftlab_core::verify::sweeps::SweepKind;

use config::{set, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(shiftlab_core::Error),
}

impl From<shiftlab_core::Error> for CliError {
    fn from(e: shiftlab_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "shiftlab",
    version,
    about = "Second-order trace formulas and spectral shift functions for matrix pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the self-adjoint second-order trace formula on seeded or given pairs (A, A + K).
    VerifySa(VerifySaArgs),
    /// Check the unitary second-order trace formula on seeded or given pairs (U, V).
    VerifyUnitary(VerifyUnitaryArgs),
    /// Compute a spectral shift function (Krein, Koplienko or unitary moments).
    ShiftFn(ShiftArgs),
    /// Littlewood-Paley blocks and the B^s_{inf,1} seminorm of a function.
    Besov(BesovArgs),
    /// Tensor factorization of the divided difference of a function.
    Factorize(FactorizeArgs),
    /// Empirical-constant sweep of a norm bound.
    SweepConstants(SweepArgs),
    /// Exploratory growth sweep for functions with bounded second derivative.
    SweepOpen(OpenArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Run configuration (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the full JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write flat CSV plot data here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the effective run configuration here.
    #[arg(long)]
    save_config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Dimension of a single instance.
    #[arg(long)]
    dim: Option<usize>,
    /// Number of instances; instance i has dimension 1 + i mod max-dim and seed seed + i.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hilbert-Schmidt norm of the perturbation.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Full,
    Polynomial,
    Modes,
}

impl From<FamilyArg> for FamilySelection {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Full => FamilySelection::Full,
            FamilyArg::Polynomial => FamilySelection::Polynomial,
            FamilyArg::Modes => FamilySelection::Modes,
        }
    }
}

#[derive(Args, Debug)]
struct VerifySaArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Hermitian matrix A (JSON matrix file).
    #[arg(long, requires = "k")]
    a: Option<PathBuf>,
    /// Hermitian perturbation K (JSON matrix file).
    #[arg(long, requires = "a")]
    k: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyUnitaryArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Unitary matrix U (JSON matrix file).
    #[arg(long, requires = "v")]
    u: Option<PathBuf>,
    /// Unitary matrix V (JSON matrix file).
    #[arg(long, requires = "u")]
    v: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShiftKindArg {
    Krein,
    Koplienko,
    Neidhardt,
}

#[derive(Args, Debug)]
struct ShiftArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum)]
    kind: Option<ShiftKindArg>,
    /// First matrix (A, or U for unitary moments).
    #[arg(long, requires = "second")]
    first: Option<PathBuf>,
    /// Second matrix (K, or V for unitary moments).
    #[arg(long, requires = "first")]
    second: Option<PathBuf>,
    /// Highest moment of the unitary shift function.
    #[arg(long)]
    degree: Option<u32>,
    /// Number of CSV sample points.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
}

#[derive(Args, Debug)]
struct FunctionArgs {
    /// Function file (JSON, tagged by kind "circle" or "line").
    #[arg(long)]
    function: Option<PathBuf>,
    /// Built-in family member by name, e.g. "exp(2ix)" or "z^3".
    #[arg(long)]
    member: Option<String>,
}

#[derive(Args, Debug)]
struct BesovArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// Smoothness index s.
    #[arg(long)]
    s: Option<u32>,
}

#[derive(Args, Debug)]
struct FactorizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// Band parameter M of a line function with spectrum in [M/2, 2M].
    #[arg(long)]
    band: Option<f64>,
    /// Quadrature nodes of the line factorization.
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepKindArg {
    CircleCertificate,
    LineCertificate,
    SaBand,
    UnitaryS2,
}

impl From<SweepKindArg> for SweepKind {
    fn from(k: SweepKindArg) -> Self {
        match k {
            SweepKindArg::CircleCertificate => SweepKind::CircleCertificate,
            SweepKindArg::LineCertificate => SweepKind::LineCertificate,
            SweepKindArg::SaBand => SweepKind::SaBand,
            SweepKindArg::UnitaryS2 => SweepKind::UnitaryS2,
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    kind: Option<SweepKindArg>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Degrees or bands, depending on the kind.
    #[arg(long, value_delimiter = ',')]
    params: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    eps: Option<f64>,
    /// Spectral radius of the unperturbed operator; 0 for unclustered spectra.
    #[arg(long)]
    spectral_radius: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProblemArg {
    Sa,
    Unitary,
}

#[derive(Args, Debug)]
struct OpenArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, value_delimiter = ',')]
    problems: Option<Vec<ProblemArg>>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Truncation lengths of the sawtooth functions.
    #[arg(long, value_delimiter = ',')]
    terms: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    eps: Option<f64>,
}

fn base_config(name: &str, common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(file_cmd) = &cfg.subcommand {
        if file_cmd != name {
            return Err(CliError::Usage(format!(
                "configuration is for {file_cmd:?} but the subcommand is {name:?}"
            )));
        }
    }
    cfg.subcommand = Some(name.to_string());
    set(&mut cfg.output.out, common.out.clone());
    set(&mut cfg.output.csv, common.csv.clone());
    Ok(cfg)
}

fn apply_instance(cfg: &mut RunConfig, a: &InstanceArgs) {
    set(&mut cfg.grid.dim, a.dim);
    set(&mut cfg.grid.count, a.count);
    set(&mut cfg.grid.max_dim, a.max_dim);
    set(&mut cfg.seed, a.seed);
    set(&mut cfg.grid.eps, a.eps);
}

fn apply_function(cfg: &mut RunConfig, f: &FunctionArgs) {
    set(&mut cfg.inputs.function, f.function.clone());
    set(&mut cfg.inputs.member, f.member.clone());
}

fn build_config(command: &Command) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    let (cfg, save) = match command {
        Command::VerifySa(a) => {
            let mut cfg = base_config("verify-sa", &a.common)?;
            apply_instance(&mut cfg, &a.instance);
            set(&mut cfg.family, a.family.map(Into::into));
            set(&mut cfg.inputs.first, a.a.clone());
            set(&mut cfg.inputs.second, a.k.clone());
            (cfg, &a.common.save_config)
        }
        Command::VerifyUnitary(a) => {
            let mut cfg = base_config("verify-unitary", &a.common)?;
            apply_instance(&mut cfg, &a.instance);
            set(&mut cfg.family, a.family.map(Into::into));
            set(&mut cfg.inputs.first, a.u.clone());
            set(&mut cfg.inputs.second, a.v.clone());
            (cfg, &a.common.save_config)
        }
        Command::ShiftFn(a) => {
            let mut cfg = base_config("shift-fn", &a.common)?;
            apply_instance(&mut cfg, &a.instance);
            let kind = a.kind.map(|k| {
                match k {
                    ShiftKindArg::Krein => "krein",
                    ShiftKindArg::Koplienko => "koplienko",
                    ShiftKindArg::Neidhardt => "neidhardt",
                }
                .to_string()
            });
            set(&mut cfg.shift_kind, kind);
            set(&mut cfg.inputs.first, a.first.clone());
            set(&mut cfg.inputs.second, a.second.clone());
            set(&mut cfg.grid.degree, a.degree);
            set(&mut cfg.output.samples, a.samples);
            if a.lo.is_some() || a.hi.is_some() {
                let (lo, hi) = cfg.output.range.unwrap_or((0.0, 1.0));
                cfg.output.range = Some((a.lo.unwrap_or(lo), a.hi.unwrap_or(hi)));
            }
            (cfg, &a.common.save_config)
        }
        Command::Besov(a) => {
            let mut cfg = base_config("besov", &a.common)?;
            apply_function(&mut cfg, &a.function);
            set(&mut cfg.grid.smoothness, a.s);
            (cfg, &a.common.save_config)
        }
        Command::Factorize(a) => {
            let mut cfg = base_config("factorize", &a.common)?;
            apply_function(&mut cfg, &a.function);
            set(&mut cfg.grid.band, a.band);
            set(&mut cfg.grid.nodes, a.nodes);
            (cfg, &a.common.save_config)
        }
        Command::SweepConstants(a) => {
            let mut cfg = base_config("sweep-constants", &a.common)?;
            set(&mut cfg.grid.sweep_kind, a.kind.map(Into::into));
            set(&mut cfg.grid.dims, a.dims.clone());
            set(&mut cfg.grid.params, a.params.clone());
            set(&mut cfg.grid.seeds, a.seeds.clone());
            set(&mut cfg.grid.eps, a.eps);
            set(&mut cfg.grid.spectral_radius, a.spectral_radius);
            set(&mut cfg.grid.nodes, a.nodes);
            (cfg, &a.common.save_config)
        }
        Command::SweepOpen(a) => {
            let mut cfg = base_config("sweep-open", &a.common)?;
            let problems = a.problems.as_ref().map(|ps| {
                ps.iter()
                    .map(|p| match p {
                        ProblemArg::Sa => InstanceKind::Sa,
                        ProblemArg::Unitary => InstanceKind::Unitary,
                    })
                    .collect()
            });
            set(&mut cfg.grid.problems, problems);
            set(&mut cfg.grid.dims, a.dims.clone());
            set(&mut cfg.grid.terms, a.terms.clone());
            set(&mut cfg.grid.seeds, a.seeds.clone());
            set(&mut cfg.grid.eps, a.eps);
            (cfg, &a.common.save_config)
        }
    };
    Ok((cfg, save.clone()))
}

fn run(command: &Command) -> Result<bool, CliError> {
    let (cfg, save) = build_config(command)?;
    if let Some(path) = save {
        std::fs::write(&path, cfg.to_json() + "\n")
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    match command {
        Command::VerifySa(_) => commands::verify(&cfg, InstanceKind::Sa),
        Command::VerifyUnitary(_) => commands::verify(&cfg, InstanceKind::Unitary),
        Command::ShiftFn(_) => commands::shift_fn(&cfg),
        Command::Besov(_) => commands::besov(&cfg),
        Command::Factorize(_) => commands::factorize(&cfg),
        Command::SweepConstants(_) => commands::sweep_constants(&cfg),
        Command::SweepOpen(_) => commands::sweep_open(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
