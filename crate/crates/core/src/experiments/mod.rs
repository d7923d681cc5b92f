//! Scripted studies: fission crossover, energy scaling, equipartition,
//! diameter and density bounds, hyperplane cuts, and the interpolation
//! inequality. Every study is a deterministic function of its inputs.

mod cut;
mod density;
mod fission;
mod interpolation;
mod scaling;

pub use cut::{cut_inequality_probe, CutReport, CutRow, SplitRow};
pub use density::{density_bound_check, local_masses, DensityReport};
pub use fission::{
    best_chain, chain_oracle, crossover_bisection, crossover_closed_form, fission_scan, grid_crossover,
    FissionRow, FissionScan, GridCrossover, GridFissionRow,
};
pub use interpolation::{
    interpolation_sweep, mesh_for, random_set, InterpolationReport, InterpolationRow, INTERPOLATION_SLACK,
};
pub use scaling::{
    chain_diameter, chain_record, default_beta, diameter_bounds_check, equipartition_check, equipartition_of,
    scaling_sweep, DiameterEntry, DiameterReport, EquipartitionReport, EquipartitionRow, ScalingReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::EnergyBreakdown;
use crate::riesz::Kernel;

/// Candidate energies at one mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub mass: f64,
    pub kernel: Kernel,
    /// Mesh size, or `None` for closed-form candidates.
    pub h: Option<f64>,
    pub candidates: Vec<(String, EnergyBreakdown)>,
    /// Index of the candidate with the lowest total energy.
    pub best: usize,
}

impl SweepRecord {
    pub fn new(mass: f64, kernel: Kernel, h: Option<f64>, candidates: Vec<(String, EnergyBreakdown)>) -> Self {
        let best = candidates
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total.total_cmp(&b.1 .1.total))
            .map_or(0, |x| x.0);
        Self {
            mass,
            kernel,
            h,
            candidates,
            best,
        }
    }

    pub fn best_id(&self) -> &str {
        &self.candidates[self.best].0
    }

    pub fn best_energy(&self) -> &EnergyBreakdown {
        &self.candidates[self.best].1
    }
}

pub(crate) fn check_ascending(masses: &[f64]) -> Result<()> {
    if masses.is_empty() {
        return Err(Error::PreconditionFailed("no masses given".into()));
    }
    if masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::PreconditionFailed("masses must be positive".into()));
    }
    if masses.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::PreconditionFailed("masses must be strictly ascending".into()));
    }
    Ok(())
}
