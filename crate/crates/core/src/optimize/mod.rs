//! Minimizer search: simulated annealing on voxel sets at fixed cell count,
//! and gradient descent for star-shaped sets given by spectral coefficients.

mod anneal;
mod harmonics;
mod star;

pub use anneal::{anneal, anneal_observed, random_blob, AnnealConfig, MinimizeResult, TracePoint};
pub use harmonics::{Basis, Evaluation};
pub use star::{
    fuglede_check, gradient_check, star_descent, star_energy, DescentResult, FugledeReport,
    GradientReport, StarContext, StarShape,
};
