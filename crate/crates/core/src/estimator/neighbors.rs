//! Fixed-radius and k-nearest neighborhoods.

use crate::error::{Error, Result};
use crate::spatial::{KdTree, Neighbor};

/// How the kernel scale `ε` is chosen at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborQuery {
    /// The same `ε` everywhere.
    Radius(f64),
    /// `ε = (1 + margin) · distance to the k-th nearest point`, the point
    /// itself counted among the `k`.
    Knn { k: usize, margin: f64 },
}

impl NeighborQuery {
    pub const DEFAULT_MARGIN: f64 = 0.05;

    pub fn radius(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {epsilon}")));
        }
        Ok(Self::Radius(epsilon))
    }

    pub fn knn(k: usize) -> Result<Self> {
        Self::knn_with_margin(k, Self::DEFAULT_MARGIN)
    }

    pub fn knn_with_margin(k: usize, margin: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("k must be at least 2, got {k}")));
        }
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::InvalidInput(format!("margin must be non-negative, got {margin}")));
        }
        Ok(Self::Knn { k, margin })
    }

    /// `ε` at `query` and all points strictly within it, sorted by distance.
    pub fn resolve(&self, tree: &KdTree, query: &[f64], index: usize) -> Result<(f64, Vec<Neighbor>)> {
        let epsilon = match *self {
            Self::Radius(eps) => eps,
            Self::Knn { k, margin } => {
                let knn = tree.knn(query, k);
                let reach = knn.last().map_or(0.0, |n| n.distance);
                if reach <= 0.0 {
                    return Err(Error::DegenerateNeighborhood {
                        index,
                        reason: format!("the {k} nearest points coincide"),
                    });
                }
                (1.0 + margin) * reach
            }
        };
        Ok((epsilon, tree.within_radius(query, epsilon)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_scale_covers_k_points() {
        let pts: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let tree = KdTree::build(&pts, 1);
        let (eps, found) = NeighborQuery::knn(5).unwrap().resolve(&tree, &[10.0], 10).unwrap();
        assert!((eps - 2.0 * 1.05).abs() < 1e-15);
        assert_eq!(found.len(), 5);
        assert_eq!(found[0].index, 10);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let tree = KdTree::build(&[0.0; 6], 2);
        let err = NeighborQuery::knn(3).unwrap().resolve(&tree, &[0.0, 0.0], 1);
        assert!(matches!(err, Err(Error::DegenerateNeighborhood { index: 1, .. })));
    }

    #[test]
    fn invalid_parameters() {
        assert!(NeighborQuery::radius(0.0).is_err());
        assert!(NeighborQuery::knn(1).is_err());
        assert!(NeighborQuery::knn_with_margin(4, -0.1).is_err());
    }
}
