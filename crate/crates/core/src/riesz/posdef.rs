use super::{nonlocal_energy, potential_field, Kernel, NonlocalMethod};
use crate::error::{Error, Result};
use crate::grid::GridSet;

/// Right minus left side of the comparison
/// `V(F) - V(G) <= 2 (int_{F\G} (v_F - c) - int_{G\F} (v_F - c))`.
///
/// The difference equals the interaction energy of `chi_F - chi_G` with
/// itself, so it is nonnegative for a positive definite kernel.
pub fn posdef_gap(f: &GridSet, g: &GridSet, k: &Kernel, c: f64) -> Result<f64> {
    posdef_gap_with(f, g, k, c, NonlocalMethod::Convolution)
}

pub fn posdef_gap_with(
    f: &GridSet,
    g: &GridSet,
    k: &Kernel,
    c: f64,
    method: NonlocalMethod,
) -> Result<f64> {
    k.check_grid(f.dim())?;
    let (f, g) = GridSet::align(f, g)?;
    if f.count().abs_diff(g.count()) > 1 {
        return Err(Error::MassMismatch(f.volume(), g.volume()));
    }
    let vf = potential_field(&f, k, method)?;
    let f_only = f.difference(&g)?;
    let g_only = g.difference(&f)?;
    let sum = |s: &GridSet| s.occupied().map(|i| vf[i] - c).sum::<f64>();
    let rhs = 2.0 * (sum(&f_only) - sum(&g_only)) * f.cell_volume();
    let lhs = nonlocal_energy(&f, k, method)? - nonlocal_energy(&g, k, method)?;
    Ok(rhs - lhs)
}
