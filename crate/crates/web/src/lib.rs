//! WebAssembly bindings for the browser demo: curvature of sampled shapes,
//! kernel profile curves and the junction response.

use varifold_curvature::colormap::{colorize, Colormap};
use varifold_curvature::estimator::convergence::{median, oriented_kappas, relative_error};
use varifold_curvature::estimator::{
    estimate_tangent_planes, CurvatureEngine, EngineOptions, NeighborQuery, Pipeline, PointCurvature,
};
use varifold_curvature::estimator::curvature::beta_eps;
use varifold_curvature::oracle::{exact_report, sample, ExactCurvature, SampleOptions, Shape, ShapeParams};
use varifold_curvature::varifold::sample_junction;
use varifold_curvature::{Error, JunctionSpec, KernelPair, KernelProfile, Result};
use wasm_bindgen::prelude::*;

/// Largest cloud the page may request.
pub const MAX_POINTS: usize = 50_000;

fn quantity_value(name: &str, point: &PointCurvature) -> Result<f64> {
    Ok(match name {
        "gauss" => point.gauss,
        "abs-sum" => point.abs_sum,
        "mean-norm" => point.mean_norm,
        "k1" => point.kappas.first().copied().unwrap_or(f64::NAN),
        "k2" => point.kappas.get(1).copied().unwrap_or(f64::NAN),
        other => return Err(Error::InvalidInput(format!("unknown quantity `{other}`"))),
    })
}

fn exact_value(name: &str, exact: &ExactCurvature, point: &PointCurvature) -> (f64, f64) {
    match name {
        "gauss" => (point.gauss, exact.gauss),
        "abs-sum" => (point.abs_sum, exact.kappas.iter().map(|k| k.abs()).sum()),
        "mean-norm" => (point.mean_norm, exact.kappas.iter().sum::<f64>().abs()),
        _ => {
            let c = usize::from(name == "k2");
            (oriented_kappas(point, exact)[c], exact.kappas[c])
        }
    }
}

/// Curvature of one sampled shape, ready to draw.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct CurvatureView {
    positions: Vec<f32>,
    colors: Vec<u8>,
    values: Vec<f64>,
    failed: usize,
    median_epsilon: f64,
    median_error: f64,
}

#[wasm_bindgen]
impl CurvatureView {
    /// `x y z` per point.
    #[wasm_bindgen(getter)]
    pub fn positions(&self) -> Vec<f32> {
        self.positions.clone()
    }

    /// `r g b` per point.
    #[wasm_bindgen(getter)]
    pub fn colors(&self) -> Vec<u8> {
        self.colors.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn failed(&self) -> usize {
        self.failed
    }

    #[wasm_bindgen(getter, js_name = medianEpsilon)]
    pub fn median_epsilon(&self) -> f64 {
        self.median_epsilon
    }

    /// Median relative error against the exact shape, away from edges.
    #[wasm_bindgen(getter, js_name = medianError)]
    pub fn median_error(&self) -> f64 {
        self.median_error
    }
}

/// Samples `shape`, evaluates curvature with `k` neighbors and colors the
/// points by `quantity`.
pub fn compute_view(
    shape: &str,
    count: usize,
    noise: f64,
    k: usize,
    quantity: &str,
    estimate_tangents: bool,
    seed: u64,
) -> Result<CurvatureView> {
    if count > MAX_POINTS {
        return Err(Error::InvalidInput(format!("at most {MAX_POINTS} points")));
    }
    let shape = Shape::from_name(shape, &ShapeParams::default())?;
    let (d, n) = shape.dims();
    if n != 3 {
        return Err(Error::InvalidInput("the viewer draws surfaces in R^3".into()));
    }
    let sampled = sample(&shape, &SampleOptions::new(count, seed).with_noise(noise))?;
    let kernels = KernelPair::default_for(d, n)?;
    let query = NeighborQuery::knn(k)?;
    let (cloud, ambiguous) = if estimate_tangents {
        let est = estimate_tangent_planes(sampled.cloud.positions(), n, d, &query, &kernels.rho, false)?;
        (sampled.cloud.with_planes(est.planes)?, Some(est.ambiguous))
    } else {
        (sampled.cloud.clone(), None)
    };
    let mut engine = CurvatureEngine::new(&cloud, kernels, EngineOptions { query, pipeline: Pipeline::Perp, parallel: false })?;
    if let Some(flags) = ambiguous {
        engine.mark_ambiguous(flags);
    }
    let results = engine.evaluate_all();
    let values = results.iter().map(|p| quantity_value(quantity, p)).collect::<Result<Vec<f64>>>()?;
    let map = if quantity == "gauss" { Colormap::Diverging } else { Colormap::Sequential };
    let mut errors = Vec::new();
    let mut eps = Vec::new();
    for (l, point) in results.iter().enumerate() {
        if point.status.is_failure() {
            continue;
        }
        eps.push(point.epsilon);
        let report = exact_report(&shape, sampled.clean_position(l))?;
        if let Some(exact) = report.curvature.filter(|_| report.feature_distance >= point.epsilon) {
            let (est, truth) = exact_value(quantity, &exact, point);
            errors.push(relative_error(est, truth));
        }
    }
    Ok(CurvatureView {
        positions: cloud.positions().iter().map(|&v| v as f32).collect(),
        colors: colorize(&values, map).concat(),
        failed: results.iter().filter(|p| p.status.is_failure()).count(),
        values,
        median_epsilon: median(&eps),
        median_error: median(&errors),
    })
}

/// Rows `t, ρ(t), ξ(t), η(t)` at `samples` evenly spaced `t ∈ [0, 1]`,
/// flattened.
pub fn profile_table(kernel: &str, d: usize, n: usize, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let pair = KernelPair::natural(KernelProfile::from_name(kernel)?, d, n)?;
    let mut out = Vec::with_capacity(4 * samples);
    for s in 0..samples {
        let t = s as f64 / (samples - 1) as f64;
        out.extend([t, pair.rho.eval(t), pair.xi.eval(t), pair.eta.eval(t)]);
    }
    Ok(out)
}

/// `max |β(0)|` at the center of a regular junction of `rays` half-lines,
/// one value per scale.
pub fn junction_response(rays: usize, points_per_ray: usize, spacing: f64, scales: &[f64]) -> Result<Vec<f64>> {
    let cloud = sample_junction(&JunctionSpec::regular(rays)?, points_per_ray, spacing)?;
    let kernels = KernelPair::default_for(1, 2)?;
    scales.iter().map(|&eps| beta_eps(&cloud, 0, &kernels, eps).map(|b| b.max_abs())).collect()
}

fn js_error(err: Error) -> JsError {
    JsError::new(&err.to_string())
}

#[wasm_bindgen(js_name = shapeCurvature)]
pub fn shape_curvature(
    shape: &str,
    count: usize,
    noise: f64,
    k: usize,
    quantity: &str,
    estimate_tangents: bool,
    seed: u32,
) -> std::result::Result<CurvatureView, JsError> {
    compute_view(shape, count, noise, k, quantity, estimate_tangents, u64::from(seed)).map_err(js_error)
}

#[wasm_bindgen(js_name = kernelProfiles)]
pub fn kernel_profiles(kernel: &str, d: usize, n: usize, samples: usize) -> std::result::Result<Vec<f64>, JsError> {
    profile_table(kernel, d, n, samples).map_err(js_error)
}

#[wasm_bindgen(js_name = junctionBeta)]
pub fn junction_beta(
    rays: usize,
    points_per_ray: usize,
    spacing: f64,
    scales: Vec<f64>,
) -> std::result::Result<Vec<f64>, JsError> {
    junction_response(rays, points_per_ray, spacing, &scales).map_err(js_error)
}
