//! `mulsum` — command-line front end for lattice chain censuses, transfer-
//! matrix free energies, Fenchel-Legendre rate functions, dimension spectra,
//! and Monte Carlo verification of multiplicative multiple sums.
//!
//! Exit codes: 0 success, 1 failed verification, 2 invalid input, 3 numeric
//! non-convergence.  All output is deterministic: the same invocation
//! (including the seed) produces byte-identical bytes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mulsum::error::{EnergyError, IsingError, LatticeError, OracleError, RateError};
use mulsum::figures::{figure_sweep, FigureSetting};
use mulsum::free_energy::{
    finite_volume_free_energy, BoundaryFreeEnergy, BoundaryKind, FreeEnergy, GeneralFreeEnergy,
    MobiusFreeEnergy, SeriesControl, WeightProfile, WeightedFreeEnergy,
};
use mulsum::io;
use mulsum::lattice::{BoxSpec, ChainCensus, MultiplierVector};
use mulsum::oracle;
use mulsum::rate::{legendre_rate, level_set_dimension, mobius_level_set_dimension, SolverControl};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

/// Oracle agreement threshold for `verify`.
const VERIFY_TOLERANCE: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "mulsum",
    version,
    about = "Chain censuses, free energies, rate functions, and Monte Carlo checks \
             for multiple sums over multiplicative lattice chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chain census of a box: per-length site/chain counts and densities
    Counts(CountsArgs),
    /// Free-energy curves of the general evaluator, or preset sweeps
    FreeEnergy(FreeEnergyArgs),
    /// Fenchel-Legendre rate function of the general free energy
    Rate(RateArgs),
    /// Free energy for an explicit weight profile (even bias only)
    Weighted(WeightedArgs),
    /// Free energy under the Mobius weight profile (even bias only)
    Mobius(MobiusArgs),
    /// Boundary-conditioned free energies
    Boundary(BoundaryArgs),
    /// Hausdorff dimension of weighted-average level sets
    SpectrumDim(SpectrumDimArgs),
    /// Cross-check the chain assembly against brute-force enumeration
    Verify(VerifyArgs),
    /// Seeded Monte Carlo estimates and sample dumps
    Mc(McArgs),
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Write here instead of stdout
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct CouplingArgs {
    /// Single coupling value
    #[arg(long, allow_hyphen_values = true, conflicts_with = "beta_range")]
    beta: Option<f64>,
    /// Coupling grid
    #[arg(long, allow_hyphen_values = true, value_name = "START:STOP:STEP")]
    beta_range: Option<String>,
}

impl CouplingArgs {
    fn resolve(&self) -> Result<Vec<f64>, CliFailure> {
        resolve_grid(
            self.beta,
            self.beta_range.as_deref(),
            "--beta or --beta-range",
        )
    }
}

#[derive(Args)]
struct CountsArgs {
    /// Box sides N_1,...,N_d
    #[arg(
        long = "N",
        value_delimiter = ',',
        required = true,
        value_name = "N1,N2,..."
    )]
    n: Vec<u64>,
    /// Multiplier entries p_1,...,p_d
    #[arg(long, value_delimiter = ',', required = true, value_name = "P1,P2,...")]
    p: Vec<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FreeEnergyArgs {
    /// Spin bias in (0,1)
    #[arg(long)]
    r: Option<f64>,
    /// Multiplier entries p_1,...,p_d
    #[arg(long, value_delimiter = ',', value_name = "P1,P2,...")]
    p: Option<Vec<u64>>,
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Series terms kept
    #[arg(long, default_value_t = 100)]
    terms: usize,
    /// Preset sweep over biases 0.1..0.9 and couplings [-3,3]
    /// (1: multipliers (2,1); 2: multipliers (2,3,5,7,11))
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    figure: Option<u8>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RateArgs {
    /// Spin bias in (0,1)
    #[arg(long, required = true)]
    r: f64,
    /// Multiplier entries p_1,...,p_d
    #[arg(long, value_delimiter = ',', required = true, value_name = "P1,P2,...")]
    p: Vec<u64>,
    /// Single target average
    #[arg(long, allow_hyphen_values = true, conflicts_with = "x_range")]
    x: Option<f64>,
    /// Target grid
    #[arg(long, allow_hyphen_values = true, value_name = "START:STOP:STEP")]
    x_range: Option<String>,
    /// Series terms kept in the free-energy evaluator
    #[arg(long, default_value_t = 100)]
    terms: usize,
    /// Half-width limit of the tilt search bracket
    #[arg(long, default_value_t = 50.0)]
    bracket_limit: f64,
    /// Bracket-width tolerance of the tilt search
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration budget of the tilt search
    #[arg(long, default_value_t = 200)]
    max_iter: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct WeightedArgs {
    /// Weight values v_1,...,v_m
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    values: Vec<f64>,
    /// Asymptotic frequencies P_1,...,P_m (nonnegative, summing to 1)
    #[arg(long, value_delimiter = ',', required = true)]
    freqs: Vec<f64>,
    #[command(flatten)]
    coupling: CouplingArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MobiusArgs {
    #[command(flatten)]
    coupling: CouplingArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy)]
enum KindArg {
    /// No constraint on any spin
    Free,
    /// Every chain endpoint pinned to +1
    PinnedBoundary,
    /// Everything but the interior block pinned to +1
    PinnedFrame,
    /// Each chain's first and last spins forced equal
    MatchedEnds,
}

impl KindArg {
    fn to_kind(self) -> BoundaryKind {
        match self {
            Self::Free => BoundaryKind::Free,
            Self::PinnedBoundary => BoundaryKind::PinnedBoundary,
            Self::PinnedFrame => BoundaryKind::PinnedFrame,
            Self::MatchedEnds => BoundaryKind::MatchedEnds,
        }
    }
}

#[derive(Args)]
struct BoundaryArgs {
    /// Boundary condition
    #[arg(long, value_enum, required = true)]
    kind: KindArg,
    /// Multiplier entries p_1,...,p_d
    #[arg(long, value_delimiter = ',', required = true, value_name = "P1,P2,...")]
    p: Vec<u64>,
    /// Series terms kept
    #[arg(long, default_value_t = 100)]
    terms: usize,
    #[command(flatten)]
    coupling: CouplingArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SpectrumDimArgs {
    /// Single level
    #[arg(long, allow_hyphen_values = true, conflicts_with = "alpha_range")]
    alpha: Option<f64>,
    /// Level grid
    #[arg(long, allow_hyphen_values = true, value_name = "START:STOP:STEP")]
    alpha_range: Option<String>,
    /// Use the Mobius weight profile
    #[arg(long, conflicts_with_all = ["values", "freqs"])]
    mobius: bool,
    /// Weight values v_1,...,v_m
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "freqs"
    )]
    values: Option<Vec<f64>>,
    /// Asymptotic frequencies P_1,...,P_m
    #[arg(long, value_delimiter = ',', requires = "values")]
    freqs: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Box sides N_1,...,N_d
    #[arg(
        long = "N",
        value_delimiter = ',',
        required = true,
        value_name = "N1,N2,..."
    )]
    n: Vec<u64>,
    /// Multiplier entries p_1,...,p_d
    #[arg(long, value_delimiter = ',', required = true, value_name = "P1,P2,...")]
    p: Vec<u64>,
    /// Spin bias in (0,1)
    #[arg(long, required = true)]
    r: f64,
    /// Coupling
    #[arg(long, required = true, allow_hyphen_values = true)]
    beta: f64,
}

#[derive(Args)]
struct McArgs {
    /// Box sides N_1,...,N_d
    #[arg(
        long = "N",
        value_delimiter = ',',
        required = true,
        value_name = "N1,N2,..."
    )]
    n: Vec<u64>,
    /// Multiplier entries p_1,...,p_d
    #[arg(long, value_delimiter = ',', required = true, value_name = "P1,P2,...")]
    p: Vec<u64>,
    /// Spin bias in (0,1)
    #[arg(long, required = true)]
    r: f64,
    /// Estimate the free energy at this coupling
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Estimate the rate at this target average (needs --eps)
    #[arg(
        long,
        allow_hyphen_values = true,
        requires = "eps",
        conflicts_with = "beta"
    )]
    x: Option<f64>,
    /// Window half-width around --x
    #[arg(long, requires = "x")]
    eps: Option<f64>,
    /// Dump the raw multiple sums as CSV instead of estimating
    #[arg(long, conflicts_with_all = ["beta", "x", "eps"])]
    dump_samples: bool,
    /// Sample count
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write here instead of stdout (dumps are CSV, estimates are JSON)
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
enum CliFailure {
    /// Bad input or an impossible request (exit 2).
    Validation(String),
    /// An iterative solver ran out of budget (exit 3).
    NonConvergence(String),
}

impl From<LatticeError> for CliFailure {
    fn from(e: LatticeError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<IsingError> for CliFailure {
    fn from(e: IsingError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<EnergyError> for CliFailure {
    fn from(e: EnergyError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<OracleError> for CliFailure {
    fn from(e: OracleError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<RateError> for CliFailure {
    fn from(e: RateError) -> Self {
        match e {
            RateError::NonConvergence { .. } => Self::NonConvergence(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(CliFailure::Validation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(CliFailure::NonConvergence(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_NONCONVERGENCE)
        }
    }
}

fn execute(command: Command) -> Result<u8, CliFailure> {
    match command {
        Command::Counts(args) => run_counts(args),
        Command::FreeEnergy(args) => run_free_energy(args),
        Command::Rate(args) => run_rate(args),
        Command::Weighted(args) => run_weighted(args),
        Command::Mobius(args) => run_mobius(args),
        Command::Boundary(args) => run_boundary(args),
        Command::SpectrumDim(args) => run_spectrum_dim(args),
        Command::Verify(args) => run_verify(args),
        Command::Mc(args) => run_mc(args),
    }
}

/// Resolves a single value / `start:stop:step` pair into a nonempty grid.
fn resolve_grid(
    single: Option<f64>,
    range: Option<&str>,
    what: &str,
) -> Result<Vec<f64>, CliFailure> {
    match (single, range) {
        (Some(value), None) => {
            if !value.is_finite() {
                return Err(CliFailure::Validation(format!(
                    "{what}: value must be finite, got {value}"
                )));
            }
            Ok(vec![value])
        }
        (None, Some(spec)) => parse_range(spec),
        (None, None) => Err(CliFailure::Validation(format!("provide {what}"))),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

/// Parses `start:stop:step` into the grid `start, start+step, ..., <=stop`.
fn parse_range(spec: &str) -> Result<Vec<f64>, CliFailure> {
    let malformed = || {
        CliFailure::Validation(format!(
            "range {spec:?} does not match START:STOP:STEP with finite numbers and step > 0"
        ))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(malformed());
    }
    let numbers: Vec<f64> = parts
        .iter()
        .map(|part| part.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| malformed())?;
    let (start, stop, step) = (numbers[0], numbers[1], numbers[2]);
    if !start.is_finite() || !stop.is_finite() || !step.is_finite() || step <= 0.0 {
        return Err(malformed());
    }
    if stop < start {
        return Err(CliFailure::Validation(format!(
            "range {spec:?} is empty: stop lies below start"
        )));
    }
    // Tolerate last-point rounding, so -3:3:0.5 really ends at 3.
    let count = ((stop - start) / step + 1e-9).floor() as u64 + 1;
    if count > 1_000_001 {
        return Err(CliFailure::Validation(format!(
            "range {spec:?} has {count} points; the limit is 1000001"
        )));
    }
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

fn parse_geometry(n: &[u64], p: &[u64]) -> Result<(BoxSpec, MultiplierVector), CliFailure> {
    Ok((BoxSpec::new(n)?, MultiplierVector::new(p)?))
}

fn deliver(text: &str, output: Option<&Path>) -> Result<(), CliFailure> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliFailure::Validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Evaluates value, derivative, and tail bound over a coupling grid.
fn curve_rows<F: FreeEnergy>(
    evaluator: &F,
    betas: &[f64],
) -> Result<Vec<io::CurveRow>, CliFailure> {
    betas
        .iter()
        .map(|&beta| {
            let (value, tail_bound) = evaluator.value_and_tail(beta)?;
            let derivative = evaluator.derivative(beta)?;
            Ok(io::CurveRow {
                beta,
                value,
                derivative,
                tail_bound,
            })
        })
        .collect()
}

fn emit_curve(rows: &[io::CurveRow], output: &OutputArgs) -> Result<u8, CliFailure> {
    let text = match output.format {
        Format::Csv => io::write_curve_csv(rows),
        Format::Json => io::write_curve_json(rows),
    };
    deliver(&text, output.output.as_deref())?;
    Ok(0)
}

fn run_counts(args: CountsArgs) -> Result<u8, CliFailure> {
    let (n, p) = parse_geometry(&args.n, &args.p)?;
    let census = ChainCensus::closed_form(&n, &p)?;
    let text = match args.output.format {
        Format::Csv => io::write_census_csv(census.rows()),
        Format::Json => io::write_census_json(census.rows()),
    };
    deliver(&text, args.output.output.as_deref())?;
    Ok(0)
}

fn run_free_energy(args: FreeEnergyArgs) -> Result<u8, CliFailure> {
    if let Some(index) = args.figure {
        if args.r.is_some()
            || args.p.is_some()
            || args.coupling.beta.is_some()
            || args.coupling.beta_range.is_some()
        {
            return Err(CliFailure::Validation(
                "--figure fixes the bias and coupling grids; it cannot be combined with \
                 --r, --p, --beta, or --beta-range"
                    .to_string(),
            ));
        }
        let setting = FigureSetting::from_index(index).expect("clap restricts --figure to 1 or 2");
        let rows = figure_sweep(setting)?;
        let text = match args.output.format {
            Format::Csv => io::write_figure_csv(&rows),
            Format::Json => io::write_figure_json(&rows),
        };
        deliver(&text, args.output.output.as_deref())?;
        return Ok(0);
    }
    let r = args
        .r
        .ok_or_else(|| CliFailure::Validation("--r is required without --figure".to_string()))?;
    let p_entries = args
        .p
        .ok_or_else(|| CliFailure::Validation("--p is required without --figure".to_string()))?;
    let p = MultiplierVector::new(&p_entries)?;
    let betas = args.coupling.resolve()?;
    let control = SeriesControl::new(args.terms, true)?;
    let evaluator = GeneralFreeEnergy::new(r, &p, control)?;
    let rows = curve_rows(&evaluator, &betas)?;
    emit_curve(&rows, &args.output)
}

fn run_rate(args: RateArgs) -> Result<u8, CliFailure> {
    let p = MultiplierVector::new(&args.p)?;
    let targets = resolve_grid(args.x, args.x_range.as_deref(), "--x or --x-range")?;
    let control = SeriesControl::new(args.terms, true)?;
    let evaluator = GeneralFreeEnergy::new(args.r, &p, control)?;
    let solver = SolverControl::new(args.bracket_limit, args.tol, args.max_iter)?;
    let rows: Vec<io::RateRow> = targets
        .iter()
        .map(|&x| Ok(io::RateRow::from(&legendre_rate(&evaluator, x, solver)?)))
        .collect::<Result<_, CliFailure>>()?;
    let text = match args.output.format {
        Format::Csv => io::write_rate_csv(&rows),
        Format::Json => io::write_rate_json(&rows),
    };
    deliver(&text, args.output.output.as_deref())?;
    Ok(0)
}

fn run_weighted(args: WeightedArgs) -> Result<u8, CliFailure> {
    let profile = WeightProfile::new(&args.values, &args.freqs)?;
    let betas = args.coupling.resolve()?;
    let evaluator = WeightedFreeEnergy::new(profile);
    let rows = curve_rows(&evaluator, &betas)?;
    emit_curve(&rows, &args.output)
}

fn run_mobius(args: MobiusArgs) -> Result<u8, CliFailure> {
    let betas = args.coupling.resolve()?;
    let rows = curve_rows(&MobiusFreeEnergy, &betas)?;
    emit_curve(&rows, &args.output)
}

fn run_boundary(args: BoundaryArgs) -> Result<u8, CliFailure> {
    let p = MultiplierVector::new(&args.p)?;
    let control = SeriesControl::new(args.terms, true)?;
    let evaluator = BoundaryFreeEnergy::new(args.kind.to_kind(), &p, control)?;
    let betas = args.coupling.resolve()?;
    let rows = curve_rows(&evaluator, &betas)?;
    emit_curve(&rows, &args.output)
}

fn run_spectrum_dim(args: SpectrumDimArgs) -> Result<u8, CliFailure> {
    let levels = resolve_grid(
        args.alpha,
        args.alpha_range.as_deref(),
        "--alpha or --alpha-range",
    )?;
    let profile = if args.mobius {
        None
    } else {
        let values = args.values.ok_or_else(|| {
            CliFailure::Validation("provide --mobius, or --values with --freqs".to_string())
        })?;
        let freqs = args.freqs.expect("clap ties --values to --freqs");
        Some(WeightProfile::new(&values, &freqs)?)
    };
    let rows: Vec<io::SpectrumRow> = levels
        .iter()
        .map(|&alpha| {
            let dimension = match &profile {
                None => mobius_level_set_dimension(alpha)?,
                Some(profile) => level_set_dimension(profile, alpha)?,
            };
            Ok(io::SpectrumRow { alpha, dimension })
        })
        .collect::<Result<_, CliFailure>>()?;
    let text = match args.output.format {
        Format::Csv => io::write_spectrum_csv(&rows),
        Format::Json => io::write_spectrum_json(&rows),
    };
    deliver(&text, args.output.output.as_deref())?;
    Ok(0)
}

fn run_verify(args: VerifyArgs) -> Result<u8, CliFailure> {
    let (n, p) = parse_geometry(&args.n, &args.p)?;
    let naive = oracle::brute_force_mgf_log(&n, &p, args.r, args.beta)?;
    let assembled = n.volume() as f64 * finite_volume_free_energy(&n, &p, args.r, args.beta)?;
    let difference = (naive - assembled).abs();
    let passed = difference <= VERIFY_TOLERANCE;
    let verdict = if passed { "PASS" } else { "FAIL" };
    let text = format!(
        "brute_force_log_mgf,{}\nassembled_log_mgf,{}\nabsolute_difference,{}\ntolerance,{}\nverdict,{verdict}\n",
        io::format_real(naive),
        io::format_real(assembled),
        io::format_real(difference),
        io::format_real(VERIFY_TOLERANCE),
    );
    deliver(&text, None)?;
    Ok(if passed { 0 } else { EXIT_CHECK_FAILED })
}

fn run_mc(args: McArgs) -> Result<u8, CliFailure> {
    let (n, p) = parse_geometry(&args.n, &args.p)?;
    if args.dump_samples {
        let sums = oracle::sample_sums(&n, &p, args.r, args.samples, args.seed)?;
        deliver(&io::write_samples_csv(&sums), args.output.as_deref())?;
        return Ok(0);
    }
    let estimate = if let Some(x) = args.x {
        let eps = args.eps.expect("clap ties --x to --eps");
        oracle::empirical_rate(&n, &p, args.r, x, eps, args.samples, args.seed)?
    } else if let Some(beta) = args.beta {
        oracle::mc_free_energy(&n, &p, args.r, beta, args.samples, args.seed)?
    } else {
        return Err(CliFailure::Validation(
            "choose a mode: --beta (free energy), --x with --eps (rate), or --dump-samples"
                .to_string(),
        ));
    };
    deliver(&io::write_estimate_json(&estimate), args.output.as_deref())?;
    Ok(0)
}
