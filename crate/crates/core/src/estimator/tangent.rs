//! Tangent planes from kernel-weighted local covariance.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimator::map_indices;
use crate::estimator::neighbors::NeighborQuery;
use crate::kernels::KernelProfile;
use crate::spatial::KdTree;
use crate::tensor::{sorted_symmetric_eigen, Projector};

const DEGENERATE_RATIO: f64 = 1e-12;
const AMBIGUOUS_RATIO: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentEstimate {
    pub planes: Vec<Projector>,
    /// Points where the `d`-th and `(d+1)`-th covariance eigenvalues nearly
    /// coincide, so the plane is not well determined.
    pub ambiguous: Vec<bool>,
}

/// Plane at one point: top-`d` eigenvectors of the `ρ(|x_j − x_i| / σ)`-weighted
/// covariance about the weighted barycenter, with `σ` given by `query`.
pub fn estimate_tangent_plane(
    positions: &[f64],
    n: usize,
    d: usize,
    tree: &KdTree,
    query: &NeighborQuery,
    weight: &KernelProfile,
    index: usize,
) -> Result<(Projector, bool)> {
    let x = &positions[index * n..(index + 1) * n];
    let (sigma, neighbors) = query.resolve(tree, x, index)?;
    let weighted: Vec<(f64, &[f64])> = neighbors
        .iter()
        .map(|nb| (weight.eval(nb.distance / sigma), &positions[nb.index * n..(nb.index + 1) * n]))
        .filter(|(w, _)| *w > 0.0)
        .collect();
    if weighted.len() < d + 1 {
        return Err(Error::DegenerateNeighborhood {
            index,
            reason: format!("{} weighted neighbors, need at least {}", weighted.len(), d + 1),
        });
    }
    let total: f64 = weighted.iter().map(|(w, _)| w).sum();
    let mut mean = vec![0.0; n];
    for (w, p) in &weighted {
        for (m, v) in mean.iter_mut().zip(p.iter()) {
            *m += w * v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut cov = DMatrix::zeros(n, n);
    for (w, p) in &weighted {
        for a in 0..n {
            let da = p[a] - mean[a];
            for b in a..n {
                cov[(a, b)] += w * da * (p[b] - mean[b]);
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    let (values, vectors) = sorted_symmetric_eigen(&cov);
    let top = values[0];
    if !(top > 0.0) || values[d - 1] <= DEGENERATE_RATIO * top {
        return Err(Error::DegenerateNeighborhood {
            index,
            reason: "covariance rank is below the plane dimension".into(),
        });
    }
    let ambiguous = d < n && values[d - 1] - values[d] <= AMBIGUOUS_RATIO * top;
    let basis = vectors.columns(0, d).into_owned();
    Ok((Projector::from_orthonormal_basis(&basis), ambiguous))
}

/// Tangent planes at every point of a flat `N × n` position array.
pub fn estimate_tangent_planes(
    positions: &[f64],
    n: usize,
    d: usize,
    query: &NeighborQuery,
    weight: &KernelProfile,
    parallel: bool,
) -> Result<TangentEstimate> {
    if d == 0 || d > n {
        return Err(Error::InvalidInput(format!("need 1 <= d <= n, got d = {d}, n = {n}")));
    }
    let tree = KdTree::build(positions, n);
    let results = map_indices(tree.len(), parallel, |i| {
        estimate_tangent_plane(positions, n, d, &tree, query, weight, i)
    });
    let mut planes = Vec::with_capacity(results.len());
    let mut ambiguous = Vec::with_capacity(results.len());
    for result in results {
        let (plane, flag) = result?;
        planes.push(plane);
        ambiguous.push(flag);
    }
    Ok(TangentEstimate { planes, ambiguous })
}
