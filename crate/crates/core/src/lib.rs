//! Curvature of point cloud varifolds.
//!
//! A point cloud is treated as a discrete varifold `Σ m_l δ(x_l, P_l)`: each
//! point carries a mass and a tangent plane. Kernel-regularized first
//! variations give a rank-3 tensor `β` at every point; solving a small linear
//! system turns it into an approximate weak second fundamental form, from
//! which the principal curvatures follow.

pub mod colormap;
pub mod error;
pub mod estimator;
pub mod kernels;
pub mod oracle;
pub mod quadrature;
pub mod spatial;
pub mod tensor;
pub mod varifold;

pub use error::{Error, Result};
pub use kernels::{KernelPair, KernelProfile};
pub use tensor::{CurvTensor, DirectionMatrix, Projector, SffTensor, Tensor3};
pub use varifold::{JunctionSpec, PointCloudVarifold};
