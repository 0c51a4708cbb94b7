//! Command-line front end for `dfp-core`.
//!
//! Every command reads its inputs, calls the library, and writes results via
//! temp-file-and-rename, so failures never leave partial outputs behind.
//! Errors map onto a fixed set of exit codes ([`ExitStatus`]).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfp_core::tensor::write_atomic;
use dfp_core::{
    default_config, diversity_score, gram, jacobi_eig, load_array, load_image, orthogonal_noise,
    pwct, save_array, save_image, stylize, Array, Distribution, Error, Factorization, Matrix,
    NoiseSpec, PipelineConfig, Profile, PwctParams, DEFAULT_THRESHOLD,
};

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    Format = 2,
    NumericalFailure = 3,
    Degenerate = 4,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn of(err: &Error) -> Self {
        match err {
            Error::Format { .. }
            | Error::UnsupportedShape(_)
            | Error::Io { .. }
            | Error::Config(_) => ExitStatus::Format,
            Error::NumericalFailure(_) => ExitStatus::NumericalFailure,
            Error::Degenerate(_) | Error::InsufficientSamples { .. } => ExitStatus::Degenerate,
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::InvalidParameter(_)
            | Error::NotCentered { .. } => ExitStatus::Usage,
        }
    }
}

impl From<ExitStatus> for ExitCode {
    fn from(s: ExitStatus) -> Self {
        ExitCode::from(s.code())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dfp",
    version,
    about = "Diversified style transfer by deep feature perturbation"
)]
pub struct Cli {
    /// Worker threads for parallel sections (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Gram matrix F·Fᵀ of a feature array.
    Gram { input: PathBuf, output: PathBuf },
    /// Perturbed whitening and coloring of a content feature by a style feature.
    Pwct(PwctArgs),
    /// Multi-level stylization of a PPM image.
    Stylize(StylizeArgs),
    /// Pairwise pixel-distance diversity of the PPM images in a directory.
    Diversity(DiversityArgs),
    /// Write a seeded random orthogonal matrix.
    Noise(NoiseArgs),
    #[command(subcommand, hide = true)]
    Debug(DebugCommand),
}

#[derive(Debug, Subcommand)]
pub enum DebugCommand {
    /// Jacobi reference eigendecomposition of a Gram array.
    EigOracle {
        input: PathBuf,
        /// Eigenvalues, written as a 1×C array.
        #[arg(long)]
        values: PathBuf,
        /// Eigenvectors as columns of a C×C array.
        #[arg(long)]
        vectors: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DistArg {
    StandardNormal,
    Uniform,
    Normal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FactorArg {
    Qr,
    Svd,
}

#[derive(Debug, Args)]
pub struct NoiseOptions {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "standard-normal")]
    pub dist: DistArg,
    /// Mean for `--dist normal`.
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    /// Standard deviation for `--dist normal`.
    #[arg(long, default_value_t = 1.0)]
    pub std_dev: f64,
    /// Factorization giving the orthogonal factor.
    #[arg(long, value_enum, default_value = "qr")]
    pub factor: FactorArg,
}

impl NoiseOptions {
    fn spec(&self) -> Result<NoiseSpec, Error> {
        let distribution = match self.dist {
            DistArg::StandardNormal => Distribution::StandardNormal,
            DistArg::Uniform => Distribution::Uniform,
            DistArg::Normal => Distribution::Normal {
                mean: self.mean,
                std_dev: self.std_dev,
            },
        };
        let factorization = match self.factor {
            FactorArg::Qr => Factorization::Qr,
            FactorArg::Svd => Factorization::Svd,
        };
        Ok(NoiseSpec::new(self.seed, distribution)?.with_factorization(factorization))
    }
}

#[derive(Debug, Args)]
pub struct PwctArgs {
    pub content: PathBuf,
    pub style: PathBuf,
    pub output: PathBuf,
    /// Diversity strength.
    #[arg(long, default_value_t = 0.6)]
    pub lambda: f64,
    /// Stylization strength.
    #[arg(long, default_value_t = 0.6)]
    pub alpha: f64,
    /// Eigenvalue truncation threshold for both content and style.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub content_threshold: Option<f64>,
    #[arg(long)]
    pub style_threshold: Option<f64>,
    #[command(flatten)]
    pub noise: NoiseOptions,
}

#[derive(Debug, Args)]
pub struct StylizeArgs {
    pub content: PathBuf,
    pub style: PathBuf,
    /// JSON pipeline configuration.
    #[arg(long, conflicts_with = "profile", required_unless_present = "profile")]
    pub config: Option<PathBuf>,
    /// Built-in configuration: deep-only or all-levels.
    #[arg(long)]
    pub profile: Option<String>,
    /// Overrides the configuration's noise_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiversityArgs {
    pub dir: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include every pair's distance in the report.
    #[arg(long)]
    pub per_pair: bool,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub rank: usize,
    pub output: PathBuf,
    #[command(flatten)]
    pub noise: NoiseOptions,
}

pub fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<(), Error> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::InvalidParameter(
                "--threads must be at least 1".into(),
            ));
        }
        // Fails only if the pool already exists (repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match cli.command {
        Command::Gram { input, output } => cmd_gram(&input, &output),
        Command::Pwct(args) => cmd_pwct(&args),
        Command::Stylize(args) => cmd_stylize(&args),
        Command::Diversity(args) => cmd_diversity(&args),
        Command::Noise(args) => cmd_noise(&args),
        Command::Debug(DebugCommand::EigOracle {
            input,
            values,
            vectors,
        }) => cmd_eig_oracle(&input, &values, &vectors),
    }
}

fn cmd_gram(input: &Path, output: &Path) -> Result<(), Error> {
    let f = load_array(input)?.into_feature()?;
    save_array(&gram(&f).into(), output)
}

fn cmd_pwct(args: &PwctArgs) -> Result<(), Error> {
    let params = PwctParams {
        lambda: args.lambda,
        alpha: args.alpha,
        content_threshold: args.content_threshold.unwrap_or(args.threshold),
        style_threshold: args.style_threshold.unwrap_or(args.threshold),
        noise: args.noise.spec()?,
    };
    params.validate()?;
    let content = load_array(&args.content)?;
    let flat = matches!(content, Array::Matrix(_));
    let fc = content.into_feature()?;
    let fs = load_array(&args.style)?.into_feature()?;
    let out = pwct(&fc, &fs, &params)?;
    let array = if flat {
        let (rows, cols) = (out.channels(), out.positions());
        Array::Matrix(Matrix::new(rows, cols, out.into_data())?)
    } else {
        Array::Feature(out)
    };
    save_array(&array, &args.output)
}

fn cmd_stylize(args: &StylizeArgs) -> Result<(), Error> {
    let mut cfg = match (&args.config, &args.profile) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            PipelineConfig::from_json(&text)?
        }
        (None, Some(name)) => default_config(name.parse::<Profile>()?),
        (None, None) => {
            return Err(Error::InvalidParameter(
                "one of --config or --profile is required".into(),
            ))
        }
    };
    if let Some(seed) = args.seed {
        cfg.noise_seed = seed;
    }
    let content = load_image(&args.content)?;
    let style = load_image(&args.style)?;
    let out = stylize(&content, &style, &cfg)?;
    save_image(&out, &args.out)
}

/// `.ppm` files directly inside `dir`, sorted by file name.
pub fn ppm_files(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })?
            .path();
        let is_ppm = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("ppm"));
        if is_ppm && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn cmd_diversity(args: &DiversityArgs) -> Result<(), Error> {
    let images = ppm_files(&args.dir)?
        .iter()
        .map(load_image)
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = diversity_score(&images)?;
    if !args.per_pair {
        report = report.without_pairs();
    }
    let json = report.to_json();
    if let Some(out) = &args.out {
        write_atomic(out, json.as_bytes())?;
    }
    println!("{json}");
    Ok(())
}

fn cmd_noise(args: &NoiseArgs) -> Result<(), Error> {
    let z = orthogonal_noise(args.rank, &args.noise.spec()?)?;
    save_array(&Matrix::from(z).into(), &args.output)
}

fn cmd_eig_oracle(input: &Path, values: &Path, vectors: &Path) -> Result<(), Error> {
    let g = load_array(input)?.into_gram()?;
    let eig = jacobi_eig(&g)?;
    let n = eig.dim();
    save_array(
        &Matrix::new(1, n, eig.eigenvalues().to_vec())?.into(),
        values,
    )?;
    save_array(
        &Matrix::new(n, n, eig.eigenvectors().to_vec())?.into(),
        vectors,
    )
}
