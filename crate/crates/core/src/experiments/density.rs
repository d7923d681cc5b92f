use serde::{Deserialize, Serialize};

use crate::grid::GridSet;
use crate::riesz::ConvolutionPlan;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub mass: f64,
    /// Number of unit balls examined (one per occupied cell).
    pub samples: usize,
    /// Smallest `|F cap B_1(x)|` over occupied cell centers `x`.
    pub min_local_mass: Option<f64>,
    /// `min_local_mass / min(1, m)`.
    pub normalized: Option<f64>,
    pub argmin: Option<[f64; 3]>,
    /// Occupied cells whose local mass is below `threshold * min(1, m)`.
    pub violations: usize,
    pub threshold: f64,
}

/// `|F cap B_1(x)|` at every occupied cell, counting cells whose centers
/// lie within distance 1 of `x`.
pub fn local_masses(s: &GridSet) -> Vec<(usize, f64)> {
    let h = s.h();
    let cv = s.cell_volume();
    let plan = ConvolutionPlan::new(s.shape(), |o| {
        let r2 = ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64) * h * h;
        if r2 <= 1.0 {
            cv
        } else {
            0.0
        }
    });
    let u: Vec<f64> = s.cells().iter().map(|&c| c as f64).collect();
    let local = plan.apply(&u);
    s.occupied().map(|i| (i, local[i])).collect()
}

/// Uniform density scan: the smallest mass of the set in a unit ball
/// centered on the set, against `threshold * min(1, m)`.
pub fn density_bound_check(s: &GridSet, threshold: f64) -> DensityReport {
    let mass = s.volume();
    let floor = mass.min(1.0);
    let local = local_masses(s);
    let min = local
        .iter()
        .copied()
        .fold(None, |b: Option<(usize, f64)>, x| match b {
            Some(b) if b.1 <= x.1 => Some(b),
            _ => Some(x),
        });
    // half a cell of slack against rounding in the convolution
    let tol = 0.5 * s.cell_volume();
    DensityReport {
        mass,
        samples: local.len(),
        min_local_mass: min.map(|m| m.1),
        normalized: min.map(|m| m.1 / floor),
        argmin: min.map(|m| s.center(m.0)),
        violations: local.iter().filter(|x| x.1 + tol < threshold * floor).count(),
        threshold,
    }
}
