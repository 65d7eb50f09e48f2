//! Multi-objective Bayesian optimization over per-phase stiffness.

pub mod design;
pub mod ehvi;
pub mod gp;
pub mod hypervolume;
pub mod prior;
pub mod space;
pub mod suggest;
pub mod surrogate;

pub use design::{halton, initial_design};
pub use ehvi::{ehvi_gaussian, ehvi_mc, NormalDraws};
pub use gp::{Gp, GpFitOptions, GpParams};
pub use hypervolume::{hypervolume, Staircase};
pub use prior::{pibo_weight, StiffnessPrior};
pub use space::SearchSpace;
pub use suggest::{suggest, AcquisitionContext, SuggestOptions, Suggestion};
pub use surrogate::Surrogate;
