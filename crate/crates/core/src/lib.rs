//! Numerical laboratory for the graphical prescribed mean curvature flow
//! ∂_s u = −(H − 𝓗)v of space-like graphs in warped products
//! ℝ × M with metric −dt² + f(t)² g̃.
//!
//! The base manifold is a periodic torus or a Dirichlet square of dimension
//! one or two, discretized with second-order stencils.

pub mod checkpoint;
pub mod decay;
pub mod error;
pub mod flow;
pub mod graph;
pub mod identities;
pub mod mesh;
pub mod par;
pub mod profile;
pub mod sampling;
pub mod tensor;
pub mod warp;

pub use checkpoint::Checkpoint;
pub use error::{GrwError, Result};
pub use flow::{FlowConfig, FlowEngine, FlowRecord, FlowSpeed, Integrator, MonitorRow, PrescribedCurvature};
pub use graph::{GeometrySnapshot, GraphState};
pub use mesh::{BaseMesh, MeshSpec, MetricSpec, Topology};
pub use profile::InitProfile;
pub use warp::{WarpKind, WarpingFunction};
