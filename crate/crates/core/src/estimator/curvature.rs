//! Regularized variation tensor `β^ε` and the curvature quantities derived
//! from it.
//!
//! At a point `x_0 = x_{l0}` of the cloud, with `u_l = (x_0 − x_l) / |x_0 − x_l|`,
//!
//! ```text
//! β_ijk = (C_ξ / C_ρ) Σ_l m_l (P_l)_jk ρ′(|x_0 − x_l| / ε) (P_l u_l)_i
//!         / (ε Σ_l m_l ξ(|x_0 − x_l| / ε))
//! ```
//!
//! Terms with `x_l = x_0`, the point itself in particular, contribute nothing
//! to the numerator: `P_l u_l` has no limit there, and `ρ′(0) = 0` for the
//! smooth profiles makes zero the only consistent value.
//!
//! Writing `β_ijk = Σ_l a_l (P_l)_jk v_li` with `v_l = P_l u_l`, the mean
//! curvature is `H = Σ_l a_l v_l`, and the orthogonal form and its second
//! fundamental form reduce to sums over `D_l = P_l − P_0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimator::map_indices;
use crate::estimator::neighbors::NeighborQuery;
use crate::kernels::KernelPair;
use crate::spatial::KdTree;
use crate::tensor::{a_to_b, solve_curvature_system, sorted_symmetric_eigen, CurvTensor, DirectionMatrix, Projector, SffTensor, Tensor3};
use crate::varifold::PointCloudVarifold;

const DENOMINATOR_FLOOR: f64 = 1e-300;

/// Which weak second fundamental form feeds the curvature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// `A⊥ = β − P_0 ⊗ H` with the stored plane at the point.
    Perp,
    /// `A` solving the curvature system with the `η`-averaged plane `c^ε`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    /// Computed, but the tangent plane estimate was ill-determined.
    AmbiguousTangent,
    /// No kernel mass within `ε`; curvatures are NaN.
    Isolated,
    /// Neighborhood could not be resolved; curvatures are NaN.
    Degenerate,
}

impl PointStatus {
    pub fn label(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::AmbiguousTangent => "ambiguous_tangent",
            Self::Isolated => "isolated",
            Self::Degenerate => "degenerate",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Self::Isolated | Self::Degenerate)
    }
}

/// Everything computed at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCurvature {
    pub status: PointStatus,
    /// Kernel scale used at this point.
    pub epsilon: f64,
    /// Points strictly within `ε`, the point itself included.
    pub neighbors: usize,
    pub beta: CurvTensor,
    /// `A⊥` or `A`, depending on the pipeline.
    pub wsff: CurvTensor,
    /// `B = a_to_b(wsff)`.
    pub sff: Tensor3,
    /// `H_i = Σ_q β_qiq`.
    pub mean_curv: DVector<f64>,
    /// Unit normal used to scalarize `B`; `None` outside codimension one.
    pub normal: Option<DVector<f64>>,
    /// `Qᵀ (Σ_k B^k ν_k) Q` in an orthonormal basis `Q` of the stored plane.
    pub sff_restricted: Option<DMatrix<f64>>,
    /// Eigenvalues of `sff_restricted`, descending.
    pub kappas: Vec<f64>,
    /// Matching unit eigenvectors, in ambient coordinates.
    pub directions: Vec<DVector<f64>>,
    pub gauss: f64,
    pub abs_sum: f64,
    pub mean_norm: f64,
}

impl PointCurvature {
    fn failed(status: PointStatus, epsilon: f64, neighbors: usize, d: usize, n: usize) -> Self {
        let nan_tensor = Tensor3::from_fn(n, |_, _, _| f64::NAN);
        Self {
            status,
            epsilon,
            neighbors,
            beta: nan_tensor.clone(),
            wsff: nan_tensor.clone(),
            sff: nan_tensor,
            mean_curv: DVector::from_element(n, f64::NAN),
            normal: None,
            sff_restricted: None,
            kappas: vec![f64::NAN; if d + 1 == n { d } else { 0 }],
            directions: Vec::new(),
            gauss: f64::NAN,
            abs_sum: f64::NAN,
            mean_norm: f64::NAN,
        }
    }
}

/// Principal curvatures of a restricted second fundamental form.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalCurvatures {
    pub kappas: Vec<f64>,
    pub directions: Vec<DVector<f64>>,
    pub gauss: f64,
    pub abs_sum: f64,
    pub mean_norm: f64,
}

/// Eigen-decomposes `B̄` (`d × d`) and lifts eigenvectors through `basis`
/// (`n × d`).
pub fn principal_curvatures(sff_restricted: &DMatrix<f64>, basis: &DMatrix<f64>) -> PrincipalCurvatures {
    let symmetric = (sff_restricted + sff_restricted.transpose()) * 0.5;
    let (kappas, vectors) = sorted_symmetric_eigen(&symmetric);
    let directions = (0..kappas.len()).map(|c| basis * vectors.column(c)).collect();
    PrincipalCurvatures {
        gauss: kappas.iter().product(),
        abs_sum: kappas.iter().map(|k| k.abs()).sum(),
        mean_norm: kappas.iter().sum::<f64>().abs(),
        kappas,
        directions,
    }
}

/// `a_l` and `v_l = P_l u_l` for every neighbor with nonzero weight.
struct VariationTerms {
    terms: Vec<(usize, f64, Vec<f64>)>,
}

fn variation_terms<I>(
    cloud: &PointCloudVarifold,
    l0: usize,
    neighbors: I,
    kernels: &KernelPair,
    epsilon: f64,
) -> Result<VariationTerms>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let n = cloud.ambient_dim();
    let x0 = cloud.position(l0);
    let mut denominator = 0.0;
    let mut raw = Vec::new();
    for (l, dist) in neighbors {
        let t = dist / epsilon;
        let m = cloud.masses()[l];
        denominator += m * kernels.xi.eval(t);
        if dist <= 0.0 {
            continue;
        }
        let slope = kernels.rho.deriv(t);
        if slope == 0.0 {
            continue;
        }
        let xl = cloud.position(l);
        let u: Vec<f64> = x0.iter().zip(xl).map(|(a, b)| (a - b) / dist).collect();
        let p = cloud.plane(l).as_slice();
        let v: Vec<f64> = (0..n).map(|i| (0..n).map(|q| p[i * n + q] * u[q]).sum()).collect();
        raw.push((l, m * slope, v));
    }
    if !(denominator > DENOMINATOR_FLOOR) {
        return Err(Error::IsolatedPoint { index: l0 });
    }
    let scale = kernels.ratio() / (epsilon * denominator);
    Ok(VariationTerms { terms: raw.into_iter().map(|(l, w, v)| (l, w * scale, v)).collect() })
}

impl VariationTerms {
    fn beta(&self, cloud: &PointCloudVarifold) -> CurvTensor {
        let n = cloud.ambient_dim();
        let mut beta = Tensor3::zeros(n);
        let out = beta.as_mut_slice();
        for (l, a, v) in &self.terms {
            let p = cloud.plane(*l).as_slice();
            for i in 0..n {
                let av = a * v[i];
                for j in 0..n {
                    for k in 0..n {
                        out[(i * n + j) * n + k] += av * p[j * n + k];
                    }
                }
            }
        }
        beta
    }

    /// `B⊥_ij^k = Σ_l a_l (D_jk v_i + D_ik v_j − D_ij v_k) / 2`.
    fn sff_perp(&self, cloud: &PointCloudVarifold, l0: usize) -> SffTensor {
        let n = cloud.ambient_dim();
        let p0 = cloud.plane(l0).as_slice();
        let mut b = Tensor3::zeros(n);
        let out = b.as_mut_slice();
        let mut diff = vec![0.0; n * n];
        for (l, a, v) in &self.terms {
            let p = cloud.plane(*l).as_slice();
            for (dst, (x, y)) in diff.iter_mut().zip(p.iter().zip(p0)) {
                *dst = 0.5 * a * (x - y);
            }
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out[(i * n + j) * n + k] +=
                            diff[j * n + k] * v[i] + diff[i * n + k] * v[j] - diff[i * n + j] * v[k];
                    }
                }
            }
        }
        SffTensor::new_unchecked(b)
    }
}

fn all_points(cloud: &PointCloudVarifold, x: &[f64], epsilon: f64) -> Vec<(usize, f64)> {
    (0..cloud.len())
        .map(|l| {
            let dist = cloud.position(l).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            (l, dist)
        })
        .filter(|&(_, dist)| dist < epsilon)
        .collect()
}

fn check_scale(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("kernel scale must be positive, got {epsilon}")))
    }
}

/// `β^ε` at point `l0`, by a direct scan of the whole cloud.
pub fn beta_eps(cloud: &PointCloudVarifold, l0: usize, kernels: &KernelPair, epsilon: f64) -> Result<CurvTensor> {
    check_scale(epsilon)?;
    let near = all_points(cloud, cloud.position(l0), epsilon);
    Ok(variation_terms(cloud, l0, near, kernels, epsilon)?.beta(cloud))
}

/// `H_i = Σ_q β_qiq`.
pub fn mean_curvature_eps(beta: &CurvTensor) -> DVector<f64> {
    beta.trace_outer()
}

/// `η`-weighted average of the planes around `x`.
pub fn c_eps(cloud: &PointCloudVarifold, x: &[f64], kernels: &KernelPair, epsilon: f64) -> Result<DirectionMatrix> {
    check_scale(epsilon)?;
    c_from_neighbors(cloud, all_points(cloud, x, epsilon), kernels, epsilon)
        .ok_or_else(|| Error::InvalidInput("no kernel mass around the query point".into()))?
}

fn c_from_neighbors<I>(
    cloud: &PointCloudVarifold,
    neighbors: I,
    kernels: &KernelPair,
    epsilon: f64,
) -> Option<Result<DirectionMatrix>>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let weighted: Vec<(f64, &Projector)> = neighbors
        .into_iter()
        .map(|(l, dist)| (cloud.masses()[l] * kernels.eta.eval(dist / epsilon), cloud.plane(l)))
        .filter(|(w, _)| *w > 0.0)
        .collect();
    if weighted.is_empty() {
        return None;
    }
    Some(DirectionMatrix::from_weighted_planes(weighted))
}

/// `ε`-WSFF at `l0`: the solution of the curvature system with `c = c^ε(x_0)`
/// and right-hand side `β^ε`.
pub fn wsff_eps(cloud: &PointCloudVarifold, l0: usize, kernels: &KernelPair, epsilon: f64) -> Result<CurvTensor> {
    let beta = beta_eps(cloud, l0, kernels, epsilon)?;
    let c = c_eps(cloud, cloud.position(l0), kernels, epsilon)?;
    solve_curvature_system(&c, &beta)
}

fn perp_from_beta(beta: &CurvTensor, p0: &Projector) -> CurvTensor {
    let h = beta.trace_outer();
    Tensor3::from_fn(beta.dim(), |i, j, k| beta[(i, j, k)] - p0.entry(j, k) * h[i])
}

/// `A⊥_ijk = β_ijk − (P_0)_jk H_i`.
pub fn wsff_perp_eps(cloud: &PointCloudVarifold, l0: usize, kernels: &KernelPair, epsilon: f64) -> Result<CurvTensor> {
    let beta = beta_eps(cloud, l0, kernels, epsilon)?;
    Ok(perp_from_beta(&beta, cloud.plane(l0)))
}

/// `B⊥` from its closed form in the plane differences `P_l − P_0`.
pub fn sff_perp_direct(cloud: &PointCloudVarifold, l0: usize, kernels: &KernelPair, epsilon: f64) -> Result<SffTensor> {
    check_scale(epsilon)?;
    let near = all_points(cloud, cloud.position(l0), epsilon);
    Ok(variation_terms(cloud, l0, near, kernels, epsilon)?.sff_perp(cloud, l0))
}

/// Scalar second fundamental form of a hypersurface point.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedSff {
    pub sff: SffTensor,
    pub normal: DVector<f64>,
    /// `n × d` orthonormal basis `Q` of the stored plane.
    pub basis: DMatrix<f64>,
    /// `B̄ = Qᵀ (Σ_k B^k ν_k) Q`.
    pub matrix: DMatrix<f64>,
}

fn restrict(sff: SffTensor, plane: &Projector) -> Result<RestrictedSff> {
    let normal = plane.unit_normal()?;
    let basis = plane.tangent_basis();
    let full = sff.along_normal(&normal);
    let matrix = basis.transpose() * full * &basis;
    let matrix = (&matrix + matrix.transpose()) * 0.5;
    Ok(RestrictedSff { sff, normal, basis, matrix })
}

/// `B⊥` at `l0` scalarized along the unit normal of the stored plane and
/// restricted to that plane. Requires `d = n − 1`.
pub fn sff_matrix_perp(cloud: &PointCloudVarifold, l0: usize, kernels: &KernelPair, epsilon: f64) -> Result<RestrictedSff> {
    let (d, n) = (cloud.dim(), cloud.ambient_dim());
    if d + 1 != n {
        return Err(Error::Codimension { d, n });
    }
    restrict(sff_perp_direct(cloud, l0, kernels, epsilon)?, cloud.plane(l0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineOptions {
    pub query: NeighborQuery,
    pub pipeline: Pipeline,
    pub parallel: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { query: NeighborQuery::Knn { k: 40, margin: NeighborQuery::DEFAULT_MARGIN }, pipeline: Pipeline::Perp, parallel: true }
    }
}

/// Evaluates curvature at every point of a cloud using a shared spatial index.
#[derive(Debug)]
pub struct CurvatureEngine<'a> {
    cloud: &'a PointCloudVarifold,
    kernels: KernelPair,
    tree: KdTree,
    options: EngineOptions,
    ambiguous: Option<Vec<bool>>,
}

impl<'a> CurvatureEngine<'a> {
    pub fn new(cloud: &'a PointCloudVarifold, kernels: KernelPair, options: EngineOptions) -> Result<Self> {
        let dims = (cloud.dim(), cloud.ambient_dim());
        if kernels.dims() != dims {
            return Err(Error::InvalidInput(format!(
                "kernel pair built for (d, n) = {:?}, cloud has {:?}",
                kernels.dims(),
                dims
            )));
        }
        let tree = KdTree::build(cloud.positions(), cloud.ambient_dim());
        Ok(Self { cloud, kernels, tree, options, ambiguous: None })
    }

    /// Tags points whose tangent plane was flagged as ill-determined.
    pub fn mark_ambiguous(&mut self, flags: Vec<bool>) {
        self.ambiguous = Some(flags);
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }

    /// Full evaluation at `l0`, or the error that prevented it.
    pub fn try_evaluate(&self, l0: usize) -> Result<PointCurvature> {
        let cloud = self.cloud;
        let (d, n) = (cloud.dim(), cloud.ambient_dim());
        let x0 = cloud.position(l0);
        let (epsilon, found) = self.options.query.resolve(&self.tree, x0, l0)?;
        let pairs: Vec<(usize, f64)> = found.iter().map(|nb| (nb.index, nb.distance)).collect();
        let terms = variation_terms(cloud, l0, pairs.iter().copied(), &self.kernels, epsilon)?;
        let beta = terms.beta(cloud);
        let mean_curv = beta.trace_outer();
        let p0 = cloud.plane(l0);
        let (wsff, sff) = match self.options.pipeline {
            Pipeline::Perp => (perp_from_beta(&beta, p0), terms.sff_perp(cloud, l0)),
            Pipeline::Full => {
                let c = c_from_neighbors(cloud, pairs.iter().copied(), &self.kernels, epsilon)
                    .ok_or(Error::IsolatedPoint { index: l0 })??;
                let a = solve_curvature_system(&c, &beta)?;
                let b = a_to_b(&a)?;
                (a, b)
            }
        };
        let status = match &self.ambiguous {
            Some(flags) if flags.get(l0).copied().unwrap_or(false) => PointStatus::AmbiguousTangent,
            _ => PointStatus::Ok,
        };
        let mut report = PointCurvature {
            status,
            epsilon,
            neighbors: found.len(),
            beta,
            wsff,
            sff: sff.clone().into_inner(),
            mean_curv,
            normal: None,
            sff_restricted: None,
            kappas: Vec::new(),
            directions: Vec::new(),
            gauss: f64::NAN,
            abs_sum: f64::NAN,
            mean_norm: f64::NAN,
        };
        if d + 1 == n {
            let restricted = restrict(sff, p0)?;
            let principal = principal_curvatures(&restricted.matrix, &restricted.basis);
            report.normal = Some(restricted.normal);
            report.sff_restricted = Some(restricted.matrix);
            report.kappas = principal.kappas;
            report.directions = principal.directions;
            report.gauss = principal.gauss;
            report.abs_sum = principal.abs_sum;
            report.mean_norm = principal.mean_norm;
        }
        Ok(report)
    }

    /// Evaluation at `l0` with failures recorded in the status field.
    pub fn evaluate(&self, l0: usize) -> PointCurvature {
        let (d, n) = (self.cloud.dim(), self.cloud.ambient_dim());
        match self.try_evaluate(l0) {
            Ok(report) => report,
            Err(Error::IsolatedPoint { .. }) => {
                let epsilon = self
                    .options
                    .query
                    .resolve(&self.tree, self.cloud.position(l0), l0)
                    .map_or(f64::NAN, |(eps, _)| eps);
                PointCurvature::failed(PointStatus::Isolated, epsilon, 1, d, n)
            }
            Err(_) => PointCurvature::failed(PointStatus::Degenerate, f64::NAN, 0, d, n),
        }
    }

    /// Evaluation at every point, in index order.
    pub fn evaluate_all(&self) -> Vec<PointCurvature> {
        map_indices(self.cloud.len(), self.options.parallel, |l| self.evaluate(l))
    }
}
