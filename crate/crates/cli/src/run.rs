//! The `run`, `sample` and `convergence` commands as library calls.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use thiserror::Error;
use varifold_curvature::estimator::convergence::{ConvergenceReport, Scale, ScheduleRow};
use varifold_curvature::estimator::{
    estimate_masses, estimate_tangent_planes, run_convergence, ConvergenceSchedule, CurvatureEngine, EngineOptions,
    MassFormula, NeighborQuery, Pipeline, PointCurvature, TangentMode,
};
use varifold_curvature::oracle::{sample, SampleOptions, Sampling, Shape};
use varifold_curvature::varifold::validate_cloud;
use varifold_curvature::{Error, KernelPair, KernelProfile};

use varifold_curvature::colormap::{colorize, Colormap};
use crate::io::{format_float, read_ply, read_xyz, write_ply, write_xyz, PlyExtras};

pub const MAX_DIMENSION: usize = 10;

/// Failure of a command, split by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input, exit status 1.
    #[error("{0}")]
    Input(String),
    /// The computation itself broke down, exit status 2.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 1,
            Self::Numeric(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::DegenerateNeighborhood { .. }
            | Error::ZeroRadius { .. }
            | Error::IsolatedPoint { .. }
            | Error::Quadrature { .. }
            | Error::InvalidDirectionMatrix(_) => Self::Numeric(err.to_string()),
            other => Self::Input(other.to_string()),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Xyz,
    Ply,
}

impl InputFormat {
    /// `.ply` files are PLY, everything else XYZ.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("ply") => Self::Ply,
            _ => Self::Xyz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborMode {
    Knn(usize),
    Radius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassMode {
    Uniform,
    /// `ω_d r^d / N_mass`.
    Ball { n_mass: usize },
    /// `r^d`.
    RadiusPower { n_mass: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Gauss,
    AbsSum,
    MeanNorm,
    K1,
    K2,
}

impl Quantity {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "gauss" => Self::Gauss,
            "abs-sum" => Self::AbsSum,
            "mean-norm" => Self::MeanNorm,
            "k1" => Self::K1,
            "k2" => Self::K2,
            _ => return None,
        })
    }

    pub fn default_colormap(self) -> Colormap {
        match self {
            Self::Gauss => Colormap::Diverging,
            _ => Colormap::Sequential,
        }
    }

    fn value(self, point: &PointCurvature) -> f64 {
        match self {
            Self::Gauss => point.gauss,
            Self::AbsSum => point.abs_sum,
            Self::MeanNorm => point.mean_norm,
            Self::K1 => point.kappas.first().copied().unwrap_or(f64::NAN),
            Self::K2 => point.kappas.get(1).copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    pub d: usize,
    pub n: usize,
    pub neighbors: NeighborMode,
    pub kernel: String,
    pub mass: MassMode,
    /// Mass balls exclude their center.
    pub exclusive_mass_ball: bool,
    pub pipeline: Pipeline,
    pub quantity: Quantity,
    pub colormap: Colormap,
    pub csv: Option<PathBuf>,
    pub ply: Option<PathBuf>,
    pub parallel: bool,
}

impl RunConfig {
    /// Defaults for a surface in `R³` read from `input`.
    pub fn new(input: impl Into<PathBuf>) -> Self {
        let input = input.into();
        Self {
            format: InputFormat::from_path(&input),
            input,
            d: 2,
            n: 3,
            neighbors: NeighborMode::Knn(40),
            kernel: "bump".into(),
            mass: MassMode::Uniform,
            exclusive_mass_ball: false,
            pipeline: Pipeline::Perp,
            quantity: Quantity::Gauss,
            colormap: Colormap::Diverging,
            csv: None,
            ply: None,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(1 <= self.d && self.d <= self.n && self.n <= MAX_DIMENSION) {
            return Err(CliError::Input(format!(
                "need 1 <= d <= n <= {MAX_DIMENSION}, got d = {}, n = {}",
                self.d, self.n
            )));
        }
        if self.format == InputFormat::Ply && self.n != 3 {
            return Err(CliError::Input("PLY input holds points in R^3".into()));
        }
        if self.ply.is_some() && self.n != 3 {
            return Err(CliError::Input("PLY output needs points in R^3".into()));
        }
        if self.quantity == Quantity::K2 && self.d < 2 {
            return Err(CliError::Input("k2 needs d >= 2".into()));
        }
        Ok(())
    }
}

/// Outcome of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub points: usize,
    /// Points whose curvature could not be evaluated.
    pub warnings: usize,
    pub results: Vec<PointCurvature>,
    pub positions: Vec<f64>,
}

fn planes_from_normals(normals: &[f64]) -> Result<Vec<DMatrix<f64>>, CliError> {
    normals
        .chunks(3)
        .enumerate()
        .map(|(i, nu)| {
            let norm = (nu[0] * nu[0] + nu[1] * nu[1] + nu[2] * nu[2]).sqrt();
            if !(norm > 0.0) {
                return Err(CliError::Input(format!("vertex {i} has a zero normal")));
            }
            let u = [nu[0] / norm, nu[1] / norm, nu[2] / norm];
            Ok(DMatrix::from_fn(3, 3, |a, b| f64::from(u8::from(a == b)) - u[a] * u[b]))
        })
        .collect()
}

/// Reads the cloud, estimates what it lacks, evaluates curvature at every
/// point and writes the requested outputs.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    config.validate()?;
    let (d, n) = (config.d, config.n);
    let file = File::open(&config.input)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", config.input.display())))?;
    let reader = BufReader::new(file);
    let (positions, normals) = match config.format {
        InputFormat::Xyz => (read_xyz(reader, n)?, None),
        InputFormat::Ply => {
            let ply = read_ply(reader)?;
            (ply.positions, ply.normals)
        }
    };
    let count = positions.len() / n;
    let query = match config.neighbors {
        NeighborMode::Knn(k) => NeighborQuery::knn(k)?,
        NeighborMode::Radius(eps) => NeighborQuery::radius(eps)?,
    };
    let rho = KernelProfile::from_name(&config.kernel)?;
    let kernels = KernelPair::natural(rho, d, n)?;

    let (planes, ambiguous) = match normals {
        Some(normals) if d + 1 == n => (planes_from_normals(&normals)?, None),
        _ => {
            let est = estimate_tangent_planes(&positions, n, d, &query, &kernels.rho, config.parallel)?;
            (est.planes.iter().map(|p| p.matrix().clone()).collect(), Some(est.ambiguous))
        }
    };
    let masses = match config.mass {
        MassMode::Uniform => vec![1.0; count],
        MassMode::Ball { n_mass } => {
            estimate_masses(&positions, n, d, n_mass, MassFormula::BallShare, config.exclusive_mass_ball)?
        }
        MassMode::RadiusPower { n_mass } => {
            estimate_masses(&positions, n, d, n_mass, MassFormula::RadiusPower, config.exclusive_mass_ball)?
        }
    };
    let cloud = validate_cloud(positions.clone(), &planes, masses, d, n)?;
    let mut engine = CurvatureEngine::new(
        &cloud,
        kernels,
        EngineOptions { query, pipeline: config.pipeline, parallel: config.parallel },
    )?;
    if let Some(flags) = ambiguous {
        engine.mark_ambiguous(flags);
    }
    let results = engine.evaluate_all();
    let warnings = results.iter().filter(|p| p.status.is_failure()).count();

    if let Some(path) = &config.csv {
        let mut out = create(path)?;
        write_csv(&mut out, &positions, n, d, &results).map_err(CliError::from)?;
        out.flush().map_err(|e| CliError::Input(e.to_string()))?;
    }
    if let Some(path) = &config.ply {
        let values: Vec<f64> = results.iter().map(|p| config.quantity.value(p)).collect();
        let colors = colorize(&values, config.colormap);
        let mut out = create(path)?;
        let extras = PlyExtras { normals: None, colors: Some(&colors), quality: Some(&values) };
        write_ply(&mut out, &positions, extras)?;
        out.flush().map_err(|e| CliError::Input(e.to_string()))?;
    }
    Ok(RunSummary { points: count, warnings, results, positions })
}

fn coordinate_names(n: usize) -> Vec<String> {
    if n <= 3 {
        ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (0..n).map(|i| format!("x{i}")).collect()
    }
}

/// One row per point: index, coordinates, principal curvatures (codimension
/// one only), gauss, abs_sum, mean_norm, status.
pub fn write_csv(
    mut out: impl Write,
    positions: &[f64],
    n: usize,
    d: usize,
    results: &[PointCurvature],
) -> varifold_curvature::Result<()> {
    let kappa_columns = if d + 1 == n { d } else { 0 };
    let mut header = vec!["index".to_string()];
    header.extend(coordinate_names(n));
    header.extend((1..=kappa_columns).map(|i| format!("k{i}")));
    header.extend(["gauss", "abs_sum", "mean_norm", "status"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for (i, point) in results.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(positions[i * n..(i + 1) * n].iter().map(|v| format_float(*v)));
        row.extend((0..kappa_columns).map(|c| format_float(point.kappas.get(c).copied().unwrap_or(f64::NAN))));
        row.extend([point.gauss, point.abs_sum, point.mean_norm].map(format_float));
        row.push(point.status.label().to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes a sampled shape as XYZ, or as PLY with exact normals.
pub fn write_sample(shape: &Shape, options: &SampleOptions, output: &Path) -> Result<usize, CliError> {
    let sampled = sample(shape, options)?;
    let cloud = &sampled.cloud;
    let (d, n) = shape.dims();
    let mut out = create(output)?;
    match InputFormat::from_path(output) {
        InputFormat::Xyz => write_xyz(&mut out, cloud.positions(), n)?,
        InputFormat::Ply => {
            if n != 3 {
                return Err(CliError::Input("PLY output needs points in R^3".into()));
            }
            let mut normals = Vec::with_capacity(3 * cloud.len());
            for plane in cloud.planes() {
                normals.extend(plane.unit_normal()?.iter());
            }
            debug_assert_eq!(d + 1, n);
            write_ply(&mut out, cloud.positions(), PlyExtras { normals: Some(&normals), ..PlyExtras::default() })?;
        }
    }
    out.flush().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(cloud.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub shape: Shape,
    pub counts: Vec<usize>,
    /// One entry per count, or `None` for k-nearest scales.
    pub epsilons: Option<Vec<f64>>,
    pub k: usize,
    pub noise: f64,
    pub tangents: TangentMode,
    pub pipeline: Pipeline,
    pub sampling: Sampling,
    pub seed: u64,
    pub kernel: String,
    pub parallel: bool,
}

pub fn convergence(config: &ConvergenceConfig) -> Result<ConvergenceReport, CliError> {
    let rows: Vec<ScheduleRow> = match &config.epsilons {
        Some(eps) => {
            if eps.len() != config.counts.len() {
                return Err(CliError::Input(format!(
                    "{} counts but {} radii",
                    config.counts.len(),
                    eps.len()
                )));
            }
            config.counts.iter().zip(eps).map(|(&count, &e)| ScheduleRow { count, scale: Scale::Epsilon(e) }).collect()
        }
        None => config.counts.iter().map(|&count| ScheduleRow { count, scale: Scale::Knn(config.k) }).collect(),
    };
    let mut schedule = ConvergenceSchedule::new(config.shape, rows)?
        .with_noise(config.noise)
        .with_tangent_mode(config.tangents)
        .with_pipeline(config.pipeline)
        .with_sampling(config.sampling)
        .with_seed(config.seed);
    schedule.parallel = config.parallel;
    let (d, n) = config.shape.dims();
    let kernels = KernelPair::natural(KernelProfile::from_name(&config.kernel)?, d, n)?;
    Ok(run_convergence(&schedule, &kernels)?)
}

/// Tab-separated table of a convergence report followed by fitted slopes.
pub fn write_convergence_table(mut out: impl Write, report: &ConvergenceReport) -> std::io::Result<()> {
    let d = report.rows.first().map_or(0, |r| r.kappa_median.len());
    let mut header = vec!["points".to_string(), "epsilon".into(), "evaluated".into(), "failed".into()];
    for i in 1..=d {
        header.push(format!("k{i}_median"));
        header.push(format!("k{i}_p90"));
    }
    header.extend(["mean_median", "mean_p90", "gauss_median", "gauss_p90", "wsff_median", "wsff_p90"].map(String::from));
    writeln!(out, "{}", header.join("\t"))?;
    for row in &report.rows {
        let mut fields = vec![row.count.to_string(), format_float(row.epsilon), row.evaluated.to_string(), row.failed.to_string()];
        for (m, p) in row.kappa_median.iter().zip(&row.kappa_p90) {
            fields.push(format_float(*m));
            fields.push(format_float(*p));
        }
        fields.extend(
            [row.mean_median, row.mean_p90, row.gauss_median, row.gauss_p90, row.wsff_median, row.wsff_p90].map(format_float),
        );
        writeln!(out, "{}", fields.join("\t"))?;
    }
    writeln!(out, "slope_kappa\t{}", format_float(report.kappa_slope()))?;
    writeln!(out, "slope_wsff\t{}", format_float(report.wsff_slope()))?;
    Ok(())
}
