//! Discrete varifolds: weighted point clouds carrying a `d`-plane per point,
//! and the planar junction of half-lines meeting at the origin.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::{CurvTensor, Projector, Tensor3};

const REPROJECTION_TOL: f64 = 1e-6;

/// `V = Σ_l m_l δ(x_l, P_l)` with `N ≥ 1` points in `R^n` and rank-`d` planes.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudVarifold {
    positions: Vec<f64>,
    planes: Vec<Projector>,
    masses: Vec<f64>,
    d: usize,
    n: usize,
}

/// Checks raw cloud data and builds a [`PointCloudVarifold`].
///
/// `positions` is flat, `N × n`. Each plane is symmetrized and replaced by the
/// nearest rank-`d` projector when that moves no entry by more than `1e-6`.
pub fn validate_cloud(
    positions: Vec<f64>,
    planes: &[DMatrix<f64>],
    masses: Vec<f64>,
    d: usize,
    n: usize,
) -> Result<PointCloudVarifold> {
    if d == 0 || d > n {
        return Err(Error::InvalidCloud(format!("need 1 <= d <= n, got d = {d}, n = {n}")));
    }
    let count = planes.len();
    if count == 0 {
        return Err(Error::InvalidCloud("cloud has no points".into()));
    }
    if positions.len() != count * n || masses.len() != count {
        return Err(Error::InvalidCloud(format!(
            "inconsistent lengths: {} coordinates, {} planes, {} masses for n = {n}",
            positions.len(),
            count,
            masses.len()
        )));
    }
    if let Some(pos) = positions.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidCloud(format!("non-finite coordinate at point {}", pos / n)));
    }
    if let Some((index, m)) = masses.iter().enumerate().find(|(_, m)| !(**m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidCloud(format!("mass {m} at point {index} is not strictly positive")));
    }
    let mut projectors = Vec::with_capacity(count);
    for (index, raw) in planes.iter().enumerate() {
        if raw.nrows() != n || raw.ncols() != n {
            return Err(Error::InvalidCloud(format!("plane {index} is not {n} x {n}")));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCloud(format!("plane {index} has non-finite entries")));
        }
        let symmetric = (raw + raw.transpose()) * 0.5;
        if let Ok(exact) = Projector::new(symmetric, d) {
            projectors.push(exact);
            continue;
        }
        let projector = Projector::nearest(raw, d);
        let deviation = (projector.matrix() - raw).amax();
        if deviation > REPROJECTION_TOL {
            return Err(Error::InvalidCloud(format!(
                "plane {index} is not a rank-{d} projector (deviation {deviation:e})"
            )));
        }
        projectors.push(projector);
    }
    Ok(PointCloudVarifold { positions, planes: projectors, masses, d, n })
}

impl PointCloudVarifold {
    /// Builds a cloud from already validated projectors.
    pub fn new(positions: Vec<f64>, planes: Vec<Projector>, masses: Vec<f64>, d: usize) -> Result<Self> {
        let Some(first) = planes.first() else {
            return Err(Error::InvalidCloud("cloud has no points".into()));
        };
        let n = first.ambient_dim();
        if let Some(index) = planes.iter().position(|p| p.rank() != d || p.ambient_dim() != n) {
            return Err(Error::InvalidCloud(format!("plane {index} is not a rank-{d} projector in R^{n}")));
        }
        let raw: Vec<DMatrix<f64>> = planes.iter().map(|p| p.matrix().clone()).collect();
        validate_cloud(positions, &raw, masses, d, n)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    #[inline]
    pub fn position(&self, l: usize) -> &[f64] {
        &self.positions[l * self.n..(l + 1) * self.n]
    }

    pub fn planes(&self) -> &[Projector] {
        &self.planes
    }

    #[inline]
    pub fn plane(&self, l: usize) -> &Projector {
        &self.planes[l]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Replaces all planes, keeping positions and masses.
    pub fn with_planes(&self, planes: Vec<Projector>) -> Result<Self> {
        if planes.len() != self.len() {
            return Err(Error::InvalidCloud(format!("expected {} planes, got {}", self.len(), planes.len())));
        }
        Self::new(self.positions.clone(), planes, self.masses.clone(), self.d)
    }

    /// Replaces all masses, keeping positions and planes.
    pub fn with_masses(&self, masses: Vec<f64>) -> Result<Self> {
        let raw: Vec<DMatrix<f64>> = self.planes.iter().map(|p| p.matrix().clone()).collect();
        validate_cloud(self.positions.clone(), &raw, masses, self.d, self.n)
    }

    /// Image under `x ↦ scale · R x + shift`, planes conjugated by `R`.
    pub fn transformed(&self, rotation: &DMatrix<f64>, scale: f64, shift: &[f64]) -> Self {
        let n = self.n;
        assert_eq!(rotation.nrows(), n, "rotation dimension mismatch");
        assert_eq!(shift.len(), n, "shift dimension mismatch");
        let mut positions = Vec::with_capacity(self.positions.len());
        for l in 0..self.len() {
            let x = DVector::from_column_slice(self.position(l));
            let y = rotation * x * scale;
            positions.extend(y.iter().zip(shift).map(|(a, b)| a + b));
        }
        let planes = self.planes.iter().map(|p| p.conjugate(rotation)).collect();
        Self { positions, planes, masses: self.masses.clone(), d: self.d, n }
    }
}

/// Directions `u_l` of half-lines in `R²` meeting at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionSpec {
    directions: Vec<[f64; 2]>,
}

impl JunctionSpec {
    pub fn new(directions: Vec<[f64; 2]>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidInput("junction needs at least one ray".into()));
        }
        for (index, u) in directions.iter().enumerate() {
            let norm = u[0].hypot(u[1]);
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::NonUnitDirection { index, norm });
            }
        }
        Ok(Self { directions })
    }

    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        Self::new(angles.iter().map(|a| [a.cos(), a.sin()]).collect())
    }

    /// `count` rays at angles `2πl / count`.
    pub fn regular(count: usize) -> Result<Self> {
        let step = 2.0 * std::f64::consts::PI / count.max(1) as f64;
        let angles: Vec<f64> = (0..count).map(|l| l as f64 * step).collect();
        Self::from_angles(&angles)
    }

    pub fn directions(&self) -> &[[f64; 2]] {
        &self.directions
    }
}

/// Coefficients of the G-linear variations of a junction at its center.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionCoefficients {
    /// `t_ijk = Σ_l u_li u_lj u_lk`.
    pub t: CurvTensor,
    /// `Σ_l u_l`.
    pub direction_sum: [f64; 2],
}

impl JunctionCoefficients {
    /// Whether the junction carries a vanishing weak second fundamental form.
    pub fn is_flat(&self, tol: f64) -> bool {
        self.t.max_abs() <= tol && self.direction_sum.iter().all(|v| v.abs() <= tol)
    }
}

pub fn junction_coefficients(spec: &JunctionSpec) -> JunctionCoefficients {
    let mut t = Tensor3::zeros(2);
    let mut direction_sum = [0.0; 2];
    for u in &spec.directions {
        direction_sum[0] += u[0];
        direction_sum[1] += u[1];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    t[(i, j, k)] += u[i] * u[j] * u[k];
                }
            }
        }
    }
    JunctionCoefficients { t, direction_sum }
}

/// Samples each ray at `spacing · {1, …, points_per_ray}` and adds the origin.
///
/// Every point carries its ray's line as plane and mass `spacing`; the origin
/// takes the first ray's line.
pub fn sample_junction(spec: &JunctionSpec, points_per_ray: usize, spacing: f64) -> Result<PointCloudVarifold> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidInput(format!("spacing must be positive, got {spacing}")));
    }
    let line = |u: &[f64; 2]| DMatrix::from_row_slice(2, 2, &[u[0] * u[0], u[0] * u[1], u[1] * u[0], u[1] * u[1]]);
    let count = 1 + spec.directions.len() * points_per_ray;
    let mut positions = Vec::with_capacity(2 * count);
    let mut planes = Vec::with_capacity(count);
    positions.extend([0.0, 0.0]);
    planes.push(line(&spec.directions[0]));
    for u in &spec.directions {
        let plane = line(u);
        for step in 1..=points_per_ray {
            let s = spacing * step as f64;
            positions.extend([s * u[0], s * u[1]]);
            planes.push(plane.clone());
        }
    }
    validate_cloud(positions, &planes, vec![spacing; count], 1, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_point_line_in_plane() {
        let plane = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let cloud = validate_cloud(vec![0.3, -0.2], &[plane], vec![1.0], 1, 2).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.dim(), 1);
        assert_eq!(cloud.ambient_dim(), 2);
    }

    #[test]
    fn rejects_zero_mass() {
        let plane = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let err = validate_cloud(vec![0.0, 0.0, 1.0, 0.0], &[plane.clone(), plane], vec![1.0, 0.0], 1, 2);
        assert!(matches!(err, Err(Error::InvalidCloud(_))));
    }

    #[test]
    fn rejects_wrong_trace() {
        let plane = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.0]));
        let err = validate_cloud(vec![0.0; 3], &[plane], vec![1.0], 2, 3);
        assert!(matches!(err, Err(Error::InvalidCloud(_))));
    }

    #[test]
    fn rejects_nan_coordinate() {
        let plane = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let err = validate_cloud(vec![f64::NAN, 0.0], &[plane], vec![1.0], 1, 2);
        assert!(matches!(err, Err(Error::InvalidCloud(_))));
    }

    #[test]
    fn slightly_perturbed_plane_is_reprojected() {
        let mut plane = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        plane[(0, 1)] = 1e-8;
        let cloud = validate_cloud(vec![0.0, 0.0], &[plane], vec![1.0], 1, 2).unwrap();
        let p = cloud.plane(0).matrix();
        assert!((p * p - p).amax() < 1e-14);
    }

    #[test]
    fn validation_is_idempotent() {
        let spec = JunctionSpec::regular(5).unwrap();
        let cloud = sample_junction(&spec, 4, 0.1).unwrap();
        let again = PointCloudVarifold::new(
            cloud.positions().to_vec(),
            cloud.planes().to_vec(),
            cloud.masses().to_vec(),
            1,
        )
        .unwrap();
        assert_eq!(cloud, again);
    }

    #[test]
    fn full_line_has_zero_coefficients() {
        let spec = JunctionSpec::new(vec![[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        assert!(junction_coefficients(&spec).is_flat(0.0));
    }

    #[test]
    fn nine_regular_rays_are_flat() {
        let coeffs = junction_coefficients(&JunctionSpec::regular(9).unwrap());
        assert!(coeffs.is_flat(1e-14));
    }

    #[test]
    fn three_regular_rays_are_not_flat() {
        let coeffs = junction_coefficients(&JunctionSpec::from_angles(&[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]).unwrap());
        assert!((coeffs.t[(0, 0, 0)] - 0.75).abs() < 1e-15);
        assert!(coeffs.direction_sum.iter().all(|v| v.abs() < 1e-15));
        assert!(!coeffs.is_flat(1e-6));
    }

    #[test]
    fn non_unit_direction_rejected() {
        assert!(matches!(
            JunctionSpec::new(vec![[1.0, 0.1]]),
            Err(Error::NonUnitDirection { index: 0, .. })
        ));
    }

    #[test]
    fn sampled_junction_counts() {
        let cloud = sample_junction(&JunctionSpec::regular(9).unwrap(), 7, 0.01).unwrap();
        assert_eq!(cloud.len(), 9 * 7 + 1);
        assert!(cloud.masses().iter().all(|&m| m == 0.01));
        let segment = sample_junction(&JunctionSpec::new(vec![[1.0, 0.0], [-1.0, 0.0]]).unwrap(), 3, 0.5).unwrap();
        assert!(segment.positions().chunks(2).all(|p| p[1] == 0.0));
    }
}
