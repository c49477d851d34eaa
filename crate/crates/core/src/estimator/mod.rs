//! The point-cloud pipeline: neighborhoods, tangent planes and masses, the
//! regularized variation tensor `β` and the curvature quantities built on it.

pub mod convergence;
pub mod curvature;
pub mod mass;
pub mod neighbors;
pub mod tangent;

pub use convergence::{run_convergence, ConvergenceReport, ConvergenceSchedule, TangentMode};
pub use curvature::{
    beta_eps, c_eps, mean_curvature_eps, principal_curvatures, sff_matrix_perp, wsff_eps, wsff_perp_eps,
    CurvatureEngine, EngineOptions, Pipeline, PointCurvature, PointStatus,
};
pub use mass::{estimate_masses, MassFormula};
pub use neighbors::NeighborQuery;
pub use tangent::{estimate_tangent_planes, TangentEstimate};

/// Maps `f` over `0..count`, in parallel when requested and available.
/// Output order always follows the index.
pub(crate) fn map_indices<T, F>(count: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..count).map(f).collect()
}
