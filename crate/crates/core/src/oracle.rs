//! Analytic shapes with closed-form curvature, and samplers producing point
//! cloud varifolds with exact tangent planes.
//!
//! Sign conventions: the reference normal of a closed curved surface points
//! inwards, so sphere, cylinder and torus outer-equator curvatures are
//! positive. Principal curvatures are relative to that normal.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{b_to_a, CurvTensor, Projector, SffTensor, Tensor3};
use crate::varifold::PointCloudVarifold;

const ON_SHAPE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Centered at the origin.
    Sphere { radius: f64 },
    /// Around the `z` axis, tube centered in the `xy` plane.
    Torus { major: f64, minor: f64 },
    /// Axis `z`, `|z| ≤ height / 2`.
    Cylinder { radius: f64, height: f64 },
    /// The square `[−h, h]²` in `z = 0`.
    Plane { half_width: f64 },
    /// Surface of `[−side/2, side/2]³`.
    Cube { side: f64 },
    /// Curve in `R²` centered at the origin.
    Circle { radius: f64 },
}

/// Dimensions used when a shape is chosen by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    pub radius: f64,
    pub major: f64,
    pub minor: f64,
    pub height: f64,
    pub side: f64,
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self { radius: 1.0, major: 2.0, minor: 0.5, height: 2.0, side: 1.0 }
    }
}

impl Shape {
    pub fn from_name(name: &str, params: &ShapeParams) -> Result<Self> {
        let shape = match name {
            "sphere" => Self::Sphere { radius: params.radius },
            "torus" => Self::Torus { major: params.major, minor: params.minor },
            "cylinder" => Self::Cylinder { radius: params.radius, height: params.height },
            "plane" => Self::Plane { half_width: params.radius },
            "cube" => Self::Cube { side: params.side },
            "circle" => Self::Circle { radius: params.radius },
            other => return Err(Error::UnknownShape(other.to_string())),
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sphere { .. } => "sphere",
            Self::Torus { .. } => "torus",
            Self::Cylinder { .. } => "cylinder",
            Self::Plane { .. } => "plane",
            Self::Cube { .. } => "cube",
            Self::Circle { .. } => "circle",
        }
    }

    fn validate(&self) -> Result<()> {
        let sizes: &[f64] = match self {
            Self::Sphere { radius } | Self::Circle { radius } => &[*radius],
            Self::Torus { major, minor } => {
                if minor >= major {
                    return Err(Error::InvalidInput(format!("torus needs minor < major, got {minor} >= {major}")));
                }
                &[*major, *minor]
            }
            Self::Cylinder { radius, height } => &[*radius, *height],
            Self::Plane { half_width } => &[*half_width],
            Self::Cube { side } => &[*side],
        };
        if sizes.iter().all(|s| *s > 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{} dimensions must be positive", self.name())))
        }
    }

    /// `(d, n)`.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Circle { .. } => (1, 2),
            _ => (2, 3),
        }
    }
}

/// Closed-form curvature at a smooth point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCurvature {
    /// Descending, relative to `normal`.
    pub kappas: Vec<f64>,
    pub directions: Vec<DVector<f64>>,
    pub normal: DVector<f64>,
    pub gauss: f64,
    /// `(Σ κ) ν`.
    pub mean_vector: DVector<f64>,
}

impl ExactCurvature {
    fn new(mut pairs: Vec<(f64, DVector<f64>)>, normal: DVector<f64>) -> Self {
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let kappas: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let sum: f64 = kappas.iter().sum();
        Self {
            gauss: kappas.iter().product(),
            mean_vector: &normal * sum,
            directions: pairs.into_iter().map(|p| p.1).collect(),
            kappas,
            normal,
        }
    }

    pub fn plane(&self) -> Projector {
        Projector::from_orthonormal_basis(&DMatrix::from_columns(&self.directions))
    }

    /// `B_ij^k = Σ_a κ_a t_ai t_aj ν_k`.
    pub fn sff(&self) -> SffTensor {
        let n = self.normal.len();
        let b = Tensor3::from_fn(n, |i, j, k| {
            self.kappas
                .iter()
                .zip(&self.directions)
                .map(|(kappa, t)| kappa * t[i] * t[j])
                .sum::<f64>()
                * self.normal[k]
        });
        SffTensor::new(b).expect("symmetric by construction")
    }

    /// The classical tensor `A_ijk = B_ij^k + B_ik^j`.
    pub fn wsff(&self) -> CurvTensor {
        b_to_a(&self.sff())
    }
}

/// Ground truth at a point of a shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactReport {
    /// `None` on cube edges and corners, which carry no classical curvature.
    pub curvature: Option<ExactCurvature>,
    /// Distance to the nearest edge or boundary, `∞` for closed smooth shapes.
    pub feature_distance: f64,
}

fn unit(v: DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    v / norm
}

/// Nearest point of the shape and its distance from `point`.
pub fn project(shape: &Shape, point: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (_, n) = shape.dims();
    if point.len() != n {
        return Err(Error::InvalidInput(format!("{} lives in R^{n}, got a point with {} coordinates", shape.name(), point.len())));
    }
    let x = DVector::from_column_slice(point);
    let projected: DVector<f64> = match *shape {
        Shape::Sphere { radius } | Shape::Circle { radius } => {
            if x.norm() == 0.0 {
                return Err(Error::InvalidInput("the center has no nearest point".into()));
            }
            unit(x.clone()) * radius
        }
        Shape::Cylinder { radius, height } => {
            let rho = x[0].hypot(x[1]);
            if rho == 0.0 {
                return Err(Error::InvalidInput("the axis has no nearest point".into()));
            }
            DVector::from_vec(vec![x[0] * radius / rho, x[1] * radius / rho, x[2].clamp(-height / 2.0, height / 2.0)])
        }
        Shape::Plane { half_width } => {
            DVector::from_vec(vec![x[0].clamp(-half_width, half_width), x[1].clamp(-half_width, half_width), 0.0])
        }
        Shape::Torus { major, minor } => {
            let rho = x[0].hypot(x[1]);
            let (w_r, w_z) = (rho - major, x[2]);
            let w = w_r.hypot(w_z);
            if rho == 0.0 || w == 0.0 {
                return Err(Error::InvalidInput("the point has no unique nearest point on the torus".into()));
            }
            let (c, s) = (x[0] / rho, x[1] / rho);
            let r = major + minor * w_r / w;
            DVector::from_vec(vec![r * c, r * s, minor * w_z / w])
        }
        Shape::Cube { side } => {
            let h = side / 2.0;
            let mut y = x.map(|v| v.clamp(-h, h));
            if y.iter().all(|v| v.abs() < h) {
                let axis = (0..3).fold(0, |best, a| if y[a].abs() > y[best].abs() { a } else { best });
                y[axis] = if y[axis] >= 0.0 { h } else { -h };
            }
            y
        }
    };
    let dist = (&projected - &x).norm();
    Ok((projected.iter().copied().collect(), dist))
}

/// Exact curvature at `point`, which must lie within `1e-9` of the shape.
pub fn exact_report(shape: &Shape, point: &[f64]) -> Result<ExactReport> {
    let (p, dist) = project(shape, point)?;
    if dist > ON_SHAPE_TOL {
        return Err(Error::InvalidInput(format!("point is {dist:e} away from the {}", shape.name())));
    }
    let v = |a: f64, b: f64, c: f64| DVector::from_vec(vec![a, b, c]);
    let report = match *shape {
        Shape::Sphere { radius } => {
            let normal = -DVector::from_vec(p.clone()) / radius;
            let plane = Projector::from_orthonormal_basis(&complement_basis(&normal));
            let basis = plane.tangent_basis();
            let pairs = (0..2).map(|c| (1.0 / radius, basis.column(c).into_owned())).collect();
            ExactReport { curvature: Some(ExactCurvature::new(pairs, normal)), feature_distance: f64::INFINITY }
        }
        Shape::Circle { radius } => {
            let normal = DVector::from_vec(vec![-p[0] / radius, -p[1] / radius]);
            let tangent = DVector::from_vec(vec![-p[1] / radius, p[0] / radius]);
            ExactReport {
                curvature: Some(ExactCurvature::new(vec![(1.0 / radius, tangent)], normal)),
                feature_distance: f64::INFINITY,
            }
        }
        Shape::Cylinder { radius, height } => {
            let normal = v(-p[0] / radius, -p[1] / radius, 0.0);
            let around = v(-p[1] / radius, p[0] / radius, 0.0);
            let pairs = vec![(1.0 / radius, around), (0.0, v(0.0, 0.0, 1.0))];
            ExactReport {
                curvature: Some(ExactCurvature::new(pairs, normal)),
                feature_distance: height / 2.0 - p[2].abs(),
            }
        }
        Shape::Plane { half_width } => {
            let pairs = vec![(0.0, v(1.0, 0.0, 0.0)), (0.0, v(0.0, 1.0, 0.0))];
            ExactReport {
                curvature: Some(ExactCurvature::new(pairs, v(0.0, 0.0, 1.0))),
                feature_distance: half_width - p[0].abs().max(p[1].abs()),
            }
        }
        Shape::Torus { major, minor } => {
            let phi = p[1].atan2(p[0]);
            let theta = p[2].atan2(p[0].hypot(p[1]) - major);
            let (ct, st, cp, sp) = (theta.cos(), theta.sin(), phi.cos(), phi.sin());
            let normal = v(-ct * cp, -ct * sp, -st);
            let meridian = v(-st * cp, -st * sp, ct);
            let parallel = v(-sp, cp, 0.0);
            let pairs = vec![(1.0 / minor, meridian), (ct / (major + minor * ct), parallel)];
            ExactReport { curvature: Some(ExactCurvature::new(pairs, normal)), feature_distance: f64::INFINITY }
        }
        Shape::Cube { side } => {
            let h = side / 2.0;
            let on_face: Vec<usize> = (0..3).filter(|&a| p[a].abs() >= h - ON_SHAPE_TOL).collect();
            if on_face.len() != 1 {
                ExactReport { curvature: None, feature_distance: 0.0 }
            } else {
                let axis = on_face[0];
                let mut normal = DVector::zeros(3);
                normal[axis] = -p[axis].signum();
                let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
                let pairs = others
                    .iter()
                    .map(|&a| {
                        let mut t = DVector::zeros(3);
                        t[a] = 1.0;
                        (0.0, t)
                    })
                    .collect();
                let feature_distance = others.iter().map(|&a| h - p[a].abs()).fold(f64::INFINITY, f64::min);
                ExactReport { curvature: Some(ExactCurvature::new(pairs, normal)), feature_distance }
            }
        }
    };
    Ok(report)
}

/// Orthonormal basis of the orthogonal complement of a unit vector.
fn complement_basis(normal: &DVector<f64>) -> DMatrix<f64> {
    let n = normal.len();
    let complement = DMatrix::identity(n, n) - normal * normal.transpose();
    Projector::nearest(&complement, n - 1).tangent_basis()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Low-discrepancy or regular lattice with mass proportional to the
    /// local area element.
    Lattice,
    /// Independent area-uniform draws with equal masses.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    /// Requested point count; lattices round it to the nearest admissible size.
    pub count: usize,
    /// Standard deviation of the isotropic Gaussian added to positions.
    pub noise: f64,
    pub seed: u64,
    pub sampling: Sampling,
    /// Standard deviation of the random rotation applied to each plane.
    pub plane_jitter: f64,
}

impl SampleOptions {
    pub fn new(count: usize, seed: u64) -> Self {
        Self { count, noise: 0.0, seed, sampling: Sampling::Lattice, plane_jitter: 0.0 }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_plane_jitter(mut self, jitter: f64) -> Self {
        self.plane_jitter = jitter;
        self
    }
}

/// A sampled cloud with the noise-free positions it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub cloud: PointCloudVarifold,
    pub clean_positions: Vec<f64>,
}

impl Sample {
    pub fn clean_position(&self, l: usize) -> &[f64] {
        let n = self.cloud.ambient_dim();
        &self.clean_positions[l * n..(l + 1) * n]
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q: Vec<f64> = (0..4).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (w, x, y, z) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
    DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    )
}

/// Cayley transform of a random skew matrix with entries of scale `sigma`.
fn small_rotation(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * sigma * rng.sample::<f64, _>(StandardNormal);
            s[(i, j)] = v;
            s[(j, i)] = -v;
        }
    }
    let id = DMatrix::identity(n, n);
    (&id - &s).try_inverse().expect("I - S is invertible for skew S") * (&id + &s)
}

/// Torus coordinate `ψ ↦ θ` making `(ψ, φ)` conformal, for `|ψ| < Ψ / 2`.
fn torus_theta(psi: f64, major: f64, minor: f64) -> f64 {
    let root = (major * major - minor * minor).sqrt();
    2.0 * (((major + minor) / (major - minor)).sqrt() * (psi * root / (2.0 * minor)).tan()).atan()
}

fn torus_point(major: f64, minor: f64, theta: f64, phi: f64) -> [f64; 3] {
    let rho = major + minor * theta.cos();
    [rho * phi.cos(), rho * phi.sin(), minor * theta.sin()]
}

struct RawSample {
    positions: Vec<f64>,
    masses: Vec<f64>,
}

fn lattice(shape: &Shape, count: usize, rng: &mut ChaCha8Rng) -> RawSample {
    let mut positions = Vec::new();
    let mut masses = Vec::new();
    match *shape {
        Shape::Sphere { radius } => {
            let rotation = random_rotation(rng);
            let golden = PI * (3.0 - 5.0_f64.sqrt());
            for i in 0..count {
                let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                let x = &rotation * DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z]) * radius;
                positions.extend(x.iter());
                masses.push(1.0);
            }
        }
        Shape::Circle { radius } => {
            let phase: f64 = rng.random();
            for i in 0..count {
                let t = 2.0 * PI * (i as f64 + phase) / count as f64;
                positions.extend([radius * t.cos(), radius * t.sin()]);
                masses.push(1.0);
            }
        }
        Shape::Plane { half_width } => {
            let m = (count as f64).sqrt().round().max(1.0) as usize;
            let h = 2.0 * half_width / m as f64;
            for i in 0..m {
                for j in 0..m {
                    positions.extend([-half_width + (i as f64 + 0.5) * h, -half_width + (j as f64 + 0.5) * h, 0.0]);
                    masses.push(1.0);
                }
            }
        }
        Shape::Cylinder { radius, height } => {
            let around = (count as f64 * 2.0 * PI * radius / height).sqrt().round().max(3.0) as usize;
            let rows = (count as f64 / around as f64).round().max(1.0) as usize;
            let phase: f64 = rng.random();
            for j in 0..rows {
                let z = -height / 2.0 + (j as f64 + 0.5) * height / rows as f64;
                for i in 0..around {
                    let t = 2.0 * PI * (i as f64 + phase) / around as f64;
                    positions.extend([radius * t.cos(), radius * t.sin(), z]);
                    masses.push(1.0);
                }
            }
        }
        Shape::Torus { major, minor } => {
            let period = 2.0 * PI * minor / (major * major - minor * minor).sqrt();
            let around = (count as f64 * 2.0 * PI / period).sqrt().round().max(3.0) as usize;
            let rows = (count as f64 / around as f64).round().max(3.0) as usize;
            let (phase_phi, phase_psi): (f64, f64) = (rng.random(), rng.random());
            for j in 0..rows {
                let psi = -period / 2.0 + (j as f64 + phase_psi) * period / rows as f64;
                let theta = torus_theta(psi, major, minor);
                let stretch = major + minor * theta.cos();
                for i in 0..around {
                    let phi = 2.0 * PI * (i as f64 + phase_phi) / around as f64;
                    positions.extend(torus_point(major, minor, theta, phi));
                    masses.push(stretch * stretch);
                }
            }
        }
        Shape::Cube { side } => {
            let m = ((count.saturating_sub(2)) as f64 / 6.0).sqrt().round().max(1.0) as usize;
            let h = side / m as f64;
            let coord = |i: usize| -side / 2.0 + i as f64 * h;
            for a in 0..=m {
                for b in 0..=m {
                    for c in 0..=m {
                        let boundary = [a, b, c].iter().filter(|&&i| i == 0 || i == m).count();
                        if boundary == 0 {
                            continue;
                        }
                        positions.extend([coord(a), coord(b), coord(c)]);
                        masses.push(if boundary == 3 { 0.75 } else { 1.0 });
                    }
                }
            }
        }
    }
    RawSample { positions, masses }
}

fn random(shape: &Shape, count: usize, rng: &mut ChaCha8Rng) -> RawSample {
    let mut positions = Vec::with_capacity(3 * count);
    for _ in 0..count {
        match *shape {
            Shape::Sphere { radius } => {
                let g = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
                positions.extend((unit(g) * radius).iter());
            }
            Shape::Circle { radius } => {
                let t = 2.0 * PI * rng.random::<f64>();
                positions.extend([radius * t.cos(), radius * t.sin()]);
            }
            Shape::Plane { half_width } => {
                let (u, v): (f64, f64) = (rng.random(), rng.random());
                positions.extend([half_width * (2.0 * u - 1.0), half_width * (2.0 * v - 1.0), 0.0]);
            }
            Shape::Cylinder { radius, height } => {
                let t = 2.0 * PI * rng.random::<f64>();
                let z = height * (rng.random::<f64>() - 0.5);
                positions.extend([radius * t.cos(), radius * t.sin(), z]);
            }
            Shape::Torus { major, minor } => {
                let theta = loop {
                    let theta = 2.0 * PI * rng.random::<f64>();
                    let accept = (major + minor * theta.cos()) / (major + minor);
                    if rng.random::<f64>() < accept {
                        break theta;
                    }
                };
                let phi = 2.0 * PI * rng.random::<f64>();
                positions.extend(torus_point(major, minor, theta, phi));
            }
            Shape::Cube { side } => {
                let face = rng.random_range(0..6usize);
                let axis = face / 2;
                let mut p = [0.0; 3];
                for (a, slot) in p.iter_mut().enumerate() {
                    *slot = if a == axis {
                        if face % 2 == 0 { -side / 2.0 } else { side / 2.0 }
                    } else {
                        side * (rng.random::<f64>() - 0.5)
                    };
                }
                positions.extend(p);
            }
        }
    }
    RawSample { positions, masses: vec![1.0; count] }
}

/// Samples `shape` with exact tangent planes at the noise-free positions.
pub fn sample(shape: &Shape, options: &SampleOptions) -> Result<Sample> {
    shape.validate()?;
    if options.count < 10 {
        return Err(Error::InvalidInput(format!("need at least 10 points, got {}", options.count)));
    }
    if !(options.noise >= 0.0 && options.plane_jitter >= 0.0) {
        return Err(Error::InvalidInput("noise levels must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let raw = match options.sampling {
        Sampling::Lattice => lattice(shape, options.count, &mut rng),
        Sampling::Random => random(shape, options.count, &mut rng),
    };
    let (d, n) = shape.dims();
    let count = raw.masses.len();
    let mean_mass = raw.masses.iter().sum::<f64>() / count as f64;
    let masses: Vec<f64> = raw.masses.iter().map(|m| m / mean_mass).collect();
    let mut planes = Vec::with_capacity(count);
    for l in 0..count {
        let p = &raw.positions[l * n..(l + 1) * n];
        let plane = match exact_report(shape, p)?.curvature {
            Some(exact) => exact.plane(),
            None => cube_fallback_plane(p),
        };
        let plane = if options.plane_jitter > 0.0 {
            plane.conjugate(&small_rotation(&mut rng, n, options.plane_jitter))
        } else {
            plane
        };
        planes.push(plane);
    }
    let mut positions = raw.positions.clone();
    if options.noise > 0.0 {
        for v in positions.iter_mut() {
            *v += options.noise * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let cloud = PointCloudVarifold::new(positions, planes, masses, d)?;
    Ok(Sample { cloud, clean_positions: raw.positions })
}

/// Plane of the first face an edge or corner point lies on.
fn cube_fallback_plane(p: &[f64]) -> Projector {
    let extreme = p.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let axis = (0..3).find(|&a| p[a].abs() >= extreme - ON_SHAPE_TOL).unwrap_or(0);
    let mut m = DMatrix::identity(3, 3);
    m[(axis, axis)] = 0.0;
    Projector::new(m, 2).expect("coordinate plane")
}

/// Pearson statistic of sphere points binned into `bands × sectors` cells of
/// equal area, together with its degrees of freedom.
pub fn sphere_uniformity_chi_square(positions: &[f64], bands: usize, sectors: usize) -> (f64, usize) {
    let cells = bands * sectors;
    let mut counts = vec![0usize; cells];
    let total = positions.len() / 3;
    for p in positions.chunks(3) {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let z = (p[2] / r).clamp(-1.0, 1.0 - 1e-15);
        let band = (((z + 1.0) / 2.0) * bands as f64) as usize;
        let phi = p[1].atan2(p[0]) + PI;
        let sector = ((phi / (2.0 * PI)) * sectors as f64).min(sectors as f64 - 1.0) as usize;
        counts[band.min(bands - 1) * sectors + sector] += 1;
    }
    let expected = total as f64 / cells as f64;
    let stat = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    (stat, cells - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_of_radius_two() {
        let report = exact_report(&Shape::Sphere { radius: 2.0 }, &[0.0, 2.0, 0.0]).unwrap();
        let exact = report.curvature.unwrap();
        assert_eq!(exact.kappas, vec![0.5, 0.5]);
        assert_eq!(exact.gauss, 0.25);
    }

    #[test]
    fn torus_outer_equator() {
        let exact = exact_report(&Shape::Torus { major: 2.0, minor: 0.5 }, &[2.5, 0.0, 0.0]).unwrap().curvature.unwrap();
        assert!((exact.kappas[0] - 2.0).abs() < 1e-15);
        assert!((exact.kappas[1] - 0.4).abs() < 1e-15);
        assert!((exact.gauss - 0.8).abs() < 1e-15);
        let inner = exact_report(&Shape::Torus { major: 2.0, minor: 0.5 }, &[0.0, -1.5, 0.0]).unwrap().curvature.unwrap();
        assert!(inner.gauss < 0.0);
    }

    #[test]
    fn plane_is_flat() {
        let exact = exact_report(&Shape::Plane { half_width: 1.0 }, &[0.2, 0.3, 0.0]).unwrap().curvature.unwrap();
        assert!(exact.kappas.iter().all(|&k| k == 0.0));
        assert_eq!(exact.gauss, 0.0);
    }

    #[test]
    fn cube_edges_are_singular() {
        let cube = Shape::Cube { side: 1.0 };
        assert!(exact_report(&cube, &[0.5, 0.5, 0.1]).unwrap().curvature.is_none());
        let face = exact_report(&cube, &[0.5, 0.2, -0.1]).unwrap();
        assert!((face.feature_distance - 0.3).abs() < 1e-15);
        assert_eq!(face.curvature.unwrap().normal[0], -1.0);
    }

    #[test]
    fn off_shape_points_rejected() {
        assert!(exact_report(&Shape::Sphere { radius: 1.0 }, &[1.1, 0.0, 0.0]).is_err());
        assert!(exact_report(&Shape::Sphere { radius: 1.0 }, &[1.0 + 1e-12, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn unknown_shape() {
        assert_eq!(Shape::from_name("klein", &ShapeParams::default()), Err(Error::UnknownShape("klein".into())));
    }

    #[test]
    fn unit_sphere_tensor_matches_tangential_gradient() {
        let x = [0.6, 0.0, 0.8];
        let exact = exact_report(&Shape::Sphere { radius: 1.0 }, &x).unwrap().curvature.unwrap();
        let a = exact.wsff();
        let p = |i: usize, j: usize| f64::from(u8::from(i == j)) - x[i] * x[j];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let expected = -(p(i, j) * x[k] + x[j] * p(i, k));
                    assert!((a[(i, j, k)] - expected).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn oracle_self_consistency() {
        let shapes = [
            Shape::Sphere { radius: 1.5 },
            Shape::Torus { major: 2.0, minor: 0.5 },
            Shape::Cylinder { radius: 0.7, height: 2.0 },
            Shape::Plane { half_width: 1.0 },
            Shape::Cube { side: 1.0 },
            Shape::Circle { radius: 0.5 },
        ];
        for shape in shapes {
            let s = sample(&shape, &SampleOptions::new(500, 3)).unwrap();
            for l in 0..s.cloud.len() {
                let report = exact_report(&shape, s.clean_position(l)).unwrap();
                let Some(exact) = report.curvature else { continue };
                let product: f64 = exact.kappas.iter().product();
                let sum: f64 = exact.kappas.iter().sum();
                assert!((exact.gauss - product).abs() < 1e-14);
                assert!((exact.mean_vector.norm() - sum.abs()).abs() < 1e-12);
                assert!((exact.plane().matrix() - s.cloud.plane(l).matrix()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn samplers_are_deterministic() {
        let shape = Shape::Torus { major: 2.0, minor: 0.5 };
        for sampling in [Sampling::Lattice, Sampling::Random] {
            let options = SampleOptions::new(1000, 11).with_noise(0.01).with_sampling(sampling);
            assert_eq!(sample(&shape, &options).unwrap(), sample(&shape, &options).unwrap());
        }
    }

    #[test]
    fn cube_lattice_size() {
        let s = sample(&Shape::Cube { side: 1.0 }, &SampleOptions::new(21_602, 0)).unwrap();
        assert_eq!(s.cloud.len(), 21_602);
    }

    #[test]
    fn random_sphere_is_uniform() {
        let s = sample(&Shape::Sphere { radius: 1.0 }, &SampleOptions::new(10_000, 5).with_sampling(Sampling::Random)).unwrap();
        let (stat, dof) = sphere_uniformity_chi_square(s.cloud.positions(), 10, 8);
        let bound = dof as f64 + 3.0 * (2.0 * dof as f64).sqrt();
        assert!(stat < bound, "chi-square {stat} above {bound}");
        let lattice = sample(&Shape::Sphere { radius: 1.0 }, &SampleOptions::new(10_000, 5)).unwrap();
        let (stat, _) = sphere_uniformity_chi_square(lattice.cloud.positions(), 10, 8);
        assert!(stat < bound, "lattice chi-square {stat} above {bound}");
    }

    #[test]
    fn torus_lattice_masses_follow_area() {
        let shape = Shape::Torus { major: 2.0, minor: 0.5 };
        let s = sample(&shape, &SampleOptions::new(20_000, 1)).unwrap();
        let total: f64 = s.cloud.masses().iter().sum();
        // Area averages: ⟨z²⟩ = r² / 2 and ⟨ρ⟩ = R + r² / (2R).
        let (mut z2, mut rho) = (0.0, 0.0);
        for l in 0..s.cloud.len() {
            let p = s.clean_position(l);
            let m = s.cloud.masses()[l] / total;
            z2 += m * p[2] * p[2];
            rho += m * p[0].hypot(p[1]);
        }
        assert!((z2 - 0.125).abs() < 1e-6, "{z2}");
        assert!((rho - 2.0625).abs() < 1e-6, "{rho}");
    }
}
