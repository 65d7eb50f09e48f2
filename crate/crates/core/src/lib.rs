//! Impedance-aware segmentation of demonstrations and multi-objective
//! Bayesian optimization of per-phase stiffness.

pub mod bo;
pub mod error;
pub mod io;
pub mod pareto;
pub mod pipeline;
pub mod rng;
pub mod segment;
pub mod segmentation;
pub mod sim;
pub mod stiffness;
pub mod trajectory;

pub use error::{DataError, IoError, PipelineError, SegmentError, SimError, SurrogateError};
pub use pareto::{dominates, pareto_front, ObjectivePoint, ParetoArchive};
pub use rng::RandomStream;
pub use segmentation::Segmentation;
pub use stiffness::{StiffnessBounds, StiffnessParams};
pub use trajectory::Trajectory;
