//! Point masses from the radius of the smallest ball holding `N_mass` points.

use crate::error::{Error, Result};
use crate::kernels::unit_ball_volume;
use crate::spatial::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassFormula {
    /// `ω_d r^d / N_mass`, the volume of the ball shared among its points.
    BallShare,
    /// `r^d`.
    RadiusPower,
}

/// `r_i` is the smallest radius whose closed ball around `x_i` holds
/// `n_mass` points, `x_i` included unless `exclude_self` is set.
pub fn estimate_masses(
    positions: &[f64],
    n: usize,
    d: usize,
    n_mass: usize,
    formula: MassFormula,
    exclude_self: bool,
) -> Result<Vec<f64>> {
    let count = positions.len() / n.max(1);
    let needed = n_mass + usize::from(exclude_self);
    if n_mass == 0 || needed > count {
        return Err(Error::InvalidInput(format!(
            "mass neighborhood of {n_mass} points needs at least {needed} points, cloud has {count}"
        )));
    }
    let tree = KdTree::build(positions, n);
    let omega = unit_ball_volume(d);
    (0..count)
        .map(|i| {
            let found = tree.knn(&positions[i * n..(i + 1) * n], needed);
            let r = found.last().map_or(0.0, |nb| nb.distance);
            if r <= 0.0 {
                return Err(Error::ZeroRadius { index: i });
            }
            let rd = r.powi(d as i32);
            Ok(match formula {
                MassFormula::BallShare => omega * rd / n_mass as f64,
                MassFormula::RadiusPower => rd,
            })
        })
        .collect()
}
