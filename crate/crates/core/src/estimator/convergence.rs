//! Error tables against analytic shapes over a refinement schedule, and
//! log-log slope fits of error versus kernel scale.

use crate::error::{Error, Result};
use crate::estimator::curvature::{CurvatureEngine, EngineOptions, Pipeline, PointCurvature};
use crate::estimator::neighbors::NeighborQuery;
use crate::estimator::tangent::estimate_tangent_planes;
use crate::kernels::KernelPair;
use crate::oracle::{exact_report, sample, ExactCurvature, SampleOptions, Sampling, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentMode {
    /// Planes from the shape.
    Exact,
    /// Planes from local covariance of the (possibly noisy) positions.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Epsilon(f64),
    Knn(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleRow {
    pub count: usize,
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSchedule {
    pub shape: Shape,
    pub rows: Vec<ScheduleRow>,
    pub noise: f64,
    pub tangent_mode: TangentMode,
    pub pipeline: Pipeline,
    pub sampling: Sampling,
    pub seed: u64,
    pub parallel: bool,
}

impl ConvergenceSchedule {
    /// Point counts must increase and fixed radii decrease along `rows`.
    pub fn new(shape: Shape, rows: Vec<ScheduleRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidSchedule("no rows".into()));
        }
        for pair in rows.windows(2) {
            if pair[1].count <= pair[0].count {
                return Err(Error::InvalidSchedule(format!(
                    "point counts must increase, got {} then {}",
                    pair[0].count, pair[1].count
                )));
            }
            match (pair[0].scale, pair[1].scale) {
                (Scale::Epsilon(a), Scale::Epsilon(b)) if b >= a => {
                    return Err(Error::InvalidSchedule(format!("radii must decrease, got {a} then {b}")));
                }
                (Scale::Epsilon(_), Scale::Knn(_)) | (Scale::Knn(_), Scale::Epsilon(_)) => {
                    return Err(Error::InvalidSchedule("rows mix fixed radii and k-nearest scales".into()));
                }
                _ => {}
            }
        }
        for row in &rows {
            match row.scale {
                Scale::Epsilon(e) if !(e > 0.0 && e.is_finite()) => {
                    return Err(Error::InvalidSchedule(format!("radius {e} is not positive")));
                }
                Scale::Knn(k) if k < 2 => return Err(Error::InvalidSchedule(format!("k = {k} is too small"))),
                _ => {}
            }
        }
        Ok(Self {
            shape,
            rows,
            noise: 0.0,
            tangent_mode: TangentMode::Exact,
            pipeline: Pipeline::Perp,
            sampling: Sampling::Lattice,
            seed: 0,
            parallel: true,
        })
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_tangent_mode(mut self, mode: TangentMode) -> Self {
        self.tangent_mode = mode;
        self
    }

    pub fn with_pipeline(mut self, pipeline: Pipeline) -> Self {
        self.pipeline = pipeline;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Error statistics of one schedule row. Errors are relative to the exact
/// value, or absolute where the exact value vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct RowReport {
    pub count: usize,
    /// Median kernel scale over evaluated points.
    pub epsilon: f64,
    /// Points entering the statistics.
    pub evaluated: usize,
    /// Points whose evaluation failed.
    pub failed: usize,
    /// Per principal curvature, in descending order.
    pub kappa_median: Vec<f64>,
    pub kappa_p90: Vec<f64>,
    pub mean_median: f64,
    pub mean_p90: f64,
    pub gauss_median: f64,
    pub gauss_p90: f64,
    /// Frobenius error of the whole tensor fed to curvature extraction.
    pub wsff_median: f64,
    pub wsff_p90: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<RowReport>,
}

impl ConvergenceReport {
    /// Least-squares slope of `log metric` against `log ε` over the rows.
    pub fn slope(&self, metric: impl Fn(&RowReport) -> f64) -> f64 {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.epsilon).collect();
        let ys: Vec<f64> = self.rows.iter().map(metric).collect();
        log_log_slope(&xs, &ys)
    }

    pub fn wsff_slope(&self) -> f64 {
        self.slope(|r| r.wsff_median)
    }

    /// Slope of the worst per-curvature median error.
    pub fn kappa_slope(&self) -> f64 {
        self.slope(|r| r.kappa_median.iter().copied().fold(0.0, f64::max))
    }
}

/// Least-squares slope of `ln y` against `ln x`. NaN with fewer than two
/// usable points.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let count = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / count;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / count;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

/// Nearest-rank percentile, `q ∈ [0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// `|est − exact| / |exact|`, or `|est − exact|` when `exact` vanishes.
pub fn relative_error(est: f64, exact: f64) -> f64 {
    let diff = (est - exact).abs();
    if exact.abs() > 1e-12 {
        diff / exact.abs()
    } else {
        diff
    }
}

/// Estimated principal curvatures re-expressed relative to the oracle normal.
pub fn oriented_kappas(point: &PointCurvature, exact: &ExactCurvature) -> Vec<f64> {
    let flip = point.normal.as_ref().is_some_and(|nu| nu.dot(&exact.normal) < 0.0);
    let mut kappas: Vec<f64> = point.kappas.iter().map(|k| if flip { -k } else { *k }).collect();
    kappas.sort_by(|a, b| b.total_cmp(a));
    kappas
}

struct PointErrors {
    kappas: Vec<f64>,
    mean: f64,
    gauss: f64,
    wsff: f64,
}

fn point_errors(point: &PointCurvature, exact: &ExactCurvature) -> PointErrors {
    let kappas = oriented_kappas(point, exact)
        .iter()
        .zip(&exact.kappas)
        .map(|(e, x)| relative_error(*e, *x))
        .collect();
    let exact_tensor = exact.wsff();
    let diff: f64 = point
        .wsff
        .as_slice()
        .iter()
        .zip(exact_tensor.as_slice())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = exact_tensor.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    PointErrors {
        kappas,
        mean: relative_error(point.mean_curv.norm(), exact.kappas.iter().sum::<f64>().abs()),
        gauss: relative_error(point.gauss, exact.gauss),
        wsff: if norm > 1e-12 { diff / norm } else { diff },
    }
}

/// Runs every row of the schedule in turn.
pub fn run_convergence(schedule: &ConvergenceSchedule, kernels: &KernelPair) -> Result<ConvergenceReport> {
    let rows = schedule.rows.iter().map(|row| run_row(schedule, row, kernels)).collect::<Result<_>>()?;
    Ok(ConvergenceReport { rows })
}

fn run_row(schedule: &ConvergenceSchedule, row: &ScheduleRow, kernels: &KernelPair) -> Result<RowReport> {
    let (d, n) = schedule.shape.dims();
    let options = SampleOptions::new(row.count, schedule.seed)
        .with_noise(schedule.noise)
        .with_sampling(schedule.sampling);
    let sampled = sample(&schedule.shape, &options)?;
    let query = match row.scale {
        Scale::Epsilon(e) => NeighborQuery::radius(e)?,
        Scale::Knn(k) => NeighborQuery::knn(k)?,
    };
    let cloud = match schedule.tangent_mode {
        TangentMode::Exact => sampled.cloud.clone(),
        TangentMode::Estimated => {
            let est = estimate_tangent_planes(sampled.cloud.positions(), n, d, &query, &kernels.rho, schedule.parallel)?;
            sampled.cloud.with_planes(est.planes)?
        }
    };
    let engine = CurvatureEngine::new(
        &cloud,
        kernels.clone(),
        EngineOptions { query, pipeline: schedule.pipeline, parallel: schedule.parallel },
    )?;
    let points = engine.evaluate_all();
    let mut kappa_errors: Vec<Vec<f64>> = vec![Vec::new(); d];
    let (mut mean, mut gauss, mut wsff, mut eps) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut failed = 0;
    for (l, point) in points.iter().enumerate() {
        if point.status.is_failure() {
            failed += 1;
            continue;
        }
        let report = exact_report(&schedule.shape, sampled.clean_position(l))?;
        let Some(exact) = report.curvature else { continue };
        if report.feature_distance < point.epsilon {
            continue;
        }
        let errors = point_errors(point, &exact);
        for (bucket, e) in kappa_errors.iter_mut().zip(&errors.kappas) {
            bucket.push(*e);
        }
        mean.push(errors.mean);
        gauss.push(errors.gauss);
        wsff.push(errors.wsff);
        eps.push(point.epsilon);
    }
    Ok(RowReport {
        count: cloud.len(),
        epsilon: median(&eps),
        evaluated: eps.len(),
        failed,
        kappa_median: kappa_errors.iter().map(|v| median(v)).collect(),
        kappa_p90: kappa_errors.iter().map(|v| percentile(v, 0.9)).collect(),
        mean_median: median(&mean),
        mean_p90: percentile(&mean, 0.9),
        gauss_median: median(&gauss),
        gauss_p90: percentile(&gauss, 0.9),
        wsff_median: median(&wsff),
        wsff_p90: percentile(&wsff, 0.9),
    })
}

/// The same schedule under both pipelines, on identical clouds.
pub fn compare_pipelines(
    schedule: &ConvergenceSchedule,
    kernels: &KernelPair,
) -> Result<(ConvergenceReport, ConvergenceReport)> {
    let perp = run_convergence(&schedule.clone().with_pipeline(Pipeline::Perp), kernels)?;
    let full = run_convergence(&schedule.clone().with_pipeline(Pipeline::Full), kernels)?;
    Ok((perp, full))
}
