use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use varicurv::colormap::Colormap;
use varicurv::run::{
    convergence, write_convergence_table, write_sample, ConvergenceConfig, InputFormat, MassMode, NeighborMode,
    Quantity,
};
use varicurv::{run, CliError, RunConfig};
use varifold_curvature::estimator::{Pipeline, TangentMode};
use varifold_curvature::oracle::{SampleOptions, Sampling, Shape, ShapeParams};

const THREADS_VAR: &str = "VARICURV_THREADS";

#[derive(Parser)]
#[command(name = "varicurv", version, about = "Curvature of point clouds through varifold regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate curvature at every point of a cloud.
    Run(RunArgs),
    /// Write a point sample of a reference shape.
    Sample(SampleArgs),
    /// Report errors against a reference shape over a refinement schedule.
    Convergence(ConvergenceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Xyz,
    Ply,
}

#[derive(Clone, Copy, ValueEnum)]
enum MassArg {
    Uniform,
    Ball,
    Radius,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    Perp,
    Full,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::Perp => Pipeline::Perp,
            PipelineArg::Full => Pipeline::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Gauss,
    AbsSum,
    MeanNorm,
    K1,
    K2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColormapArg {
    Diverging,
    Sequential,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Lattice,
    Random,
}

impl From<SamplingArg> for Sampling {
    fn from(s: SamplingArg) -> Self {
        match s {
            SamplingArg::Lattice => Sampling::Lattice,
            SamplingArg::Random => Sampling::Random,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TangentArg {
    Exact,
    Estimated,
}

#[derive(Args)]
struct RunArgs {
    /// Input cloud, XYZ or ASCII PLY.
    input: PathBuf,
    /// Defaults to the input file extension.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Dimension of the sampled manifold.
    #[arg(short, long, default_value_t = 2)]
    d: usize,
    /// Ambient dimension.
    #[arg(short, long, default_value_t = 3)]
    n: usize,
    /// Neighbors per point; the kernel scale covers the k-th nearest.
    #[arg(short, long, default_value_t = 40, conflicts_with = "epsilon")]
    k: usize,
    /// Fixed kernel scale instead of k-nearest neighbors.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Kernel profile: bump or tent.
    #[arg(long, default_value = "bump")]
    kernel: String,
    #[arg(long, value_enum, default_value_t = MassArg::Uniform)]
    mass: MassArg,
    /// Points per mass ball.
    #[arg(long, default_value_t = 10)]
    n_mass: usize,
    /// Leave the center out of its own mass ball.
    #[arg(long)]
    exclusive_mass_ball: bool,
    #[arg(long, value_enum, default_value_t = PipelineArg::Perp)]
    pipeline: PipelineArg,
    /// Per-point table.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Colored PLY output.
    #[arg(long)]
    ply: Option<PathBuf>,
    /// Quantity shown in the PLY colors.
    #[arg(long, value_enum, default_value_t = QuantityArg::Gauss)]
    color_by: QuantityArg,
    /// Defaults to diverging for gauss and sequential otherwise.
    #[arg(long, value_enum)]
    colormap: Option<ColormapArg>,
}

#[derive(Args)]
struct ShapeArgs {
    /// sphere, torus, cylinder, plane, cube or circle.
    #[arg(long)]
    shape: String,
    /// Sphere, cylinder and circle radius, plane half width.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 2.0)]
    major: f64,
    #[arg(long, default_value_t = 0.5)]
    minor: f64,
    #[arg(long, default_value_t = 2.0)]
    height: f64,
    #[arg(long, default_value_t = 1.0)]
    side: f64,
}

impl ShapeArgs {
    fn shape(&self) -> Result<Shape, CliError> {
        let params = ShapeParams {
            radius: self.radius,
            major: self.major,
            minor: self.minor,
            height: self.height,
            side: self.side,
        };
        Ok(Shape::from_name(&self.shape, &params)?)
    }
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 4000)]
    n: usize,
    /// Standard deviation of Gaussian position noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SamplingArg::Lattice)]
    sampling: SamplingArg,
    /// `.ply` files carry exact normals.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Comma-separated point counts.
    #[arg(long, value_delimiter = ',', required = true)]
    counts: Vec<usize>,
    #[arg(short, long, default_value_t = 40)]
    k: usize,
    /// One fixed kernel scale per count instead of k-nearest neighbors.
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = TangentArg::Exact)]
    tangents: TangentArg,
    #[arg(long, value_enum, default_value_t = PipelineArg::Perp)]
    pipeline: PipelineArg,
    #[arg(long, value_enum, default_value_t = SamplingArg::Lattice)]
    sampling: SamplingArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bump")]
    kernel: String,
}

fn configure_threads() -> Result<bool, CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(true);
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{THREADS_VAR} must be a positive integer, got `{value}`")))?;
    match threads {
        0 => Err(CliError::Input(format!("{THREADS_VAR} must be positive"))),
        1 => Ok(false),
        _ => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| CliError::Input(e.to_string()))?;
            Ok(true)
        }
    }
}

fn run_command(args: RunArgs, parallel: bool) -> Result<(), CliError> {
    let mut config = RunConfig::new(&args.input);
    if let Some(format) = args.format {
        config.format = match format {
            FormatArg::Xyz => InputFormat::Xyz,
            FormatArg::Ply => InputFormat::Ply,
        };
    }
    config.d = args.d;
    config.n = args.n;
    config.neighbors = match args.epsilon {
        Some(eps) => NeighborMode::Radius(eps),
        None => NeighborMode::Knn(args.k),
    };
    config.kernel = args.kernel;
    config.mass = match args.mass {
        MassArg::Uniform => MassMode::Uniform,
        MassArg::Ball => MassMode::Ball { n_mass: args.n_mass },
        MassArg::Radius => MassMode::RadiusPower { n_mass: args.n_mass },
    };
    config.exclusive_mass_ball = args.exclusive_mass_ball;
    config.pipeline = args.pipeline.into();
    config.quantity = match args.color_by {
        QuantityArg::Gauss => Quantity::Gauss,
        QuantityArg::AbsSum => Quantity::AbsSum,
        QuantityArg::MeanNorm => Quantity::MeanNorm,
        QuantityArg::K1 => Quantity::K1,
        QuantityArg::K2 => Quantity::K2,
    };
    config.colormap = match args.colormap {
        Some(ColormapArg::Diverging) => Colormap::Diverging,
        Some(ColormapArg::Sequential) => Colormap::Sequential,
        None => config.quantity.default_colormap(),
    };
    config.csv = args.csv;
    config.ply = args.ply;
    config.parallel = parallel;
    let summary = run(&config)?;
    if summary.warnings > 0 {
        eprintln!("warning: curvature unavailable at {} of {} points", summary.warnings, summary.points);
    }
    if config.csv.is_none() && config.ply.is_none() {
        let stdout = std::io::stdout();
        varicurv::run::write_csv(stdout.lock(), &summary.positions, config.n, config.d, &summary.results)?;
    }
    Ok(())
}

fn sample_command(args: SampleArgs) -> Result<(), CliError> {
    let shape = args.shape.shape()?;
    let options = SampleOptions::new(args.n, args.seed)
        .with_noise(args.noise)
        .with_sampling(args.sampling.into());
    let count = write_sample(&shape, &options, &args.output)?;
    eprintln!("wrote {count} points to {}", args.output.display());
    Ok(())
}

fn convergence_command(args: ConvergenceArgs, parallel: bool) -> Result<(), CliError> {
    let config = ConvergenceConfig {
        shape: args.shape.shape()?,
        counts: args.counts,
        epsilons: args.epsilons,
        k: args.k,
        noise: args.noise,
        tangents: match args.tangents {
            TangentArg::Exact => TangentMode::Exact,
            TangentArg::Estimated => TangentMode::Estimated,
        },
        pipeline: args.pipeline.into(),
        sampling: args.sampling.into(),
        seed: args.seed,
        kernel: args.kernel,
        parallel,
    };
    let report = convergence(&config)?;
    let stdout = std::io::stdout();
    write_convergence_table(stdout.lock(), &report).map_err(|e| CliError::Input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|parallel| match cli.command {
        Command::Run(args) => run_command(args, parallel),
        Command::Sample(args) => sample_command(args),
        Command::Convergence(args) => convergence_command(args, parallel),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
