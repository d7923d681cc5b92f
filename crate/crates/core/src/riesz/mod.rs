//! Riesz interaction `|x - y|^(-alpha)` on voxel sets and on the unit ball.
//!
//! Discretization: every occupied cell is a point mass `h^n` at its center,
//! except for the interaction of a cell with itself, which uses the exact
//! self-energy of a cube (`c_self * h^(2n - alpha)`, see [`SelfEnergyTable`]).
//! The potential `v_F` at the center of an occupied cell therefore contains
//! the cell-averaged self potential `c_self * h^(n - alpha)`.

mod ball;
mod fft;
mod field;
mod posdef;
mod selfenergy;

pub use ball::{
    ball_potential, ball_profile, boundary_drop, boundary_exponent, log_ratio_drift, spherical_average,
    unit_ball_energy, unit_ball_energy_by_shells,
};
pub use fft::{cross_correlation, ConvolutionPlan};
pub use field::{
    cross_energy, interaction, nonlocal_energy, nonlocal_energy_weighted, potential_at, potential_field,
    KernelTable, RieszPlan,
};
pub use posdef::{posdef_gap, posdef_gap_with};
pub use selfenergy::{estimate_self_energy, self_energy, SelfEnergyEntry, SelfEnergyTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The Riesz kernel `|x|^(-alpha)` in dimension `n`, with `0 < alpha < n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    n: usize,
    alpha: f64,
}

impl Kernel {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidKernel(format!("dimension {n} must be at least 2")));
        }
        if !(alpha > 0.0 && alpha < n as f64) {
            return Err(Error::InvalidKernel(format!(
                "alpha must lie in (0, n); got alpha = {alpha}, n = {n}"
            )));
        }
        Ok(Self { n, alpha })
    }

    /// Coulomb interaction in three dimensions.
    pub fn coulomb() -> Self {
        Self { n: 3, alpha: 1.0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `r^(-alpha)` from the squared distance.
    #[inline]
    pub fn eval_sq(&self, r2: f64) -> f64 {
        if self.alpha == 1.0 {
            1.0 / r2.sqrt()
        } else if self.alpha == 2.0 {
            1.0 / r2
        } else {
            r2.powf(-0.5 * self.alpha)
        }
    }

    /// Grid paths only support two and three dimensions.
    pub(crate) fn check_grid(&self, dim: usize) -> Result<()> {
        if self.n != dim {
            Err(Error::DimensionMismatch(self.n, dim))
        } else {
            Ok(())
        }
    }
}

/// How the pair sum behind `V(F)` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NonlocalMethod {
    /// Ordered pair sum over occupied cells through a kernel lookup table.
    Direct,
    /// Zero-padded FFT convolution of the occupancy with the sampled kernel.
    #[default]
    Convolution,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_range_is_enforced() {
        assert!(Kernel::new(3, 1.0).is_ok());
        assert!(Kernel::new(3, 0.0).is_err());
        assert!(Kernel::new(3, 3.0).is_err());
        assert!(Kernel::new(3, 3.5).is_err());
        assert!(Kernel::new(1, 0.5).is_err());
        let k = Kernel::new(3, 2.5).unwrap();
        assert!((k.eval_sq(4.0) - 2f64.powf(-2.5)).abs() < 1e-15);
    }
}
