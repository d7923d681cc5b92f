//! Energies, deficits and inequality evaluators built on the grid and the
//! Riesz kernel, plus the closed-form energy of balls.

mod oracle;

pub use oracle::{ball_energy, monte_carlo_ball_energy, BallOracle};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{perimeter, GridSet, PerimeterMethod};
use crate::quad::unit_ball_volume;
use crate::riesz::{cross_correlation, nonlocal_energy, Kernel, NonlocalMethod};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub perimeter: f64,
    pub nonlocal: f64,
    pub total: f64,
    pub mass: f64,
    pub kernel: Kernel,
}

impl EnergyBreakdown {
    pub fn new(perimeter: f64, nonlocal: f64, mass: f64, kernel: Kernel) -> Self {
        Self {
            perimeter,
            nonlocal,
            total: perimeter + nonlocal,
            mass,
            kernel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct EnergyOptions {
    pub perimeter: PerimeterMethod,
    pub nonlocal: NonlocalMethod,
}

pub fn total_energy(s: &GridSet, k: &Kernel) -> Result<EnergyBreakdown> {
    total_energy_with(s, k, EnergyOptions::default())
}

pub fn total_energy_with(s: &GridSet, k: &Kernel, opts: EnergyOptions) -> Result<EnergyBreakdown> {
    let v = nonlocal_energy(s, k, opts.nonlocal)?;
    let p = perimeter(s, opts.perimeter);
    Ok(EnergyBreakdown::new(p, v, s.volume(), *k))
}

/// Length scale and nonlocal weight after rescaling a set of mass `m` to
/// the volume of the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleParams {
    pub lambda: f64,
    pub epsilon: f64,
}

impl RescaleParams {
    pub fn new(k: &Kernel, m: f64) -> Self {
        let n = k.n() as f64;
        let lambda = (m / unit_ball_volume(k.n())).powf(1.0 / n);
        Self {
            lambda,
            epsilon: lambda.powf(n + 1.0 - k.alpha()),
        }
    }
}

/// `P(s) + epsilon V(s)` for a set already rescaled to volume `omega_n`.
pub fn rescaled_energy(s: &GridSet, k: &Kernel, m: f64) -> Result<(f64, RescaleParams)> {
    rescaled_energy_with(s, k, m, EnergyOptions::default())
}

pub fn rescaled_energy_with(
    s: &GridSet,
    k: &Kernel,
    m: f64,
    opts: EnergyOptions,
) -> Result<(f64, RescaleParams)> {
    let omega = unit_ball_volume(k.n());
    if (s.volume() - omega).abs() > 0.01 * omega {
        return Err(Error::MassMismatch(s.volume(), omega));
    }
    let params = RescaleParams::new(k, m);
    let e = total_energy_with(s, k, opts)?;
    Ok((e.perimeter + params.epsilon * e.nonlocal, params))
}

/// Perimeter of the ball of volume `m` in dimension `n`.
pub fn ball_perimeter(n: usize, m: f64) -> f64 {
    let nf = n as f64;
    nf * unit_ball_volume(n).powf(1.0 / nf) * m.powf((nf - 1.0) / nf)
}

/// `P / (n omega_n^(1/n) m^((n-1)/n)) - 1` from a perimeter and a volume.
pub fn deficit_from(n: usize, p: f64, m: f64) -> f64 {
    p / ball_perimeter(n, m) - 1.0
}

pub fn isoperimetric_deficit(s: &GridSet) -> Result<f64> {
    isoperimetric_deficit_with(s, PerimeterMethod::SurfaceMesh)
}

pub fn isoperimetric_deficit_with(s: &GridSet, method: PerimeterMethod) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(deficit_from(s.dim(), perimeter(s, method), s.volume()))
}

/// Largest overlap (in cells) of `f` with a lattice translate of `g`, and
/// the shift of `g` (in cells, relative to its own position) achieving it.
pub fn max_overlap(f: &GridSet, g: &GridSet) -> Result<(usize, [i64; 3])> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch(f.dim(), g.dim()));
    }
    if (f.h() - g.h()).abs() > 1e-12 * f.h() {
        return Err(Error::GridMismatch);
    }
    if f.is_empty() || g.is_empty() {
        return Ok((0, [0; 3]));
    }
    let (fc, gc) = (f.cropped(1)?, g.cropped(1)?);
    let to_f64 = |s: &GridSet| s.cells().iter().map(|&c| c as f64).collect::<Vec<_>>();
    let (corr, shape) = cross_correlation(&to_f64(&fc), fc.shape(), &to_f64(&gc), gc.shape());
    let mut best = (0usize, 0usize);
    for (q, v) in corr.iter().enumerate() {
        let c = v.round().max(0.0) as usize;
        if c > best.0 {
            best = (c, q);
        }
    }
    let (of, og) = (fc.lattice_origin()?, gc.lattice_origin()?);
    let q = best.1;
    let qc = [q % shape[0], (q / shape[0]) % shape[1], q / (shape[0] * shape[1])];
    let gs = gc.shape();
    let mut shift = [0i64; 3];
    for a in 0..f.dim() {
        shift[a] = qc[a] as i64 - (gs[a] as i64 - 1) + of[a] - og[a];
    }
    Ok((best.0, shift))
}

/// `min_x |F symmetric-difference (G + x)| / |F|` over lattice translations `x`.
pub fn fraenkel_asymmetry(f: &GridSet, g: &GridSet) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch(f.dim(), g.dim()));
    }
    if f.count().abs_diff(g.count()) > 1 {
        return Err(Error::MassMismatch(f.volume(), g.volume()));
    }
    if f.is_empty() {
        return Err(Error::EmptySet);
    }
    let (overlap, _) = max_overlap(f, g)?;
    let sym = f.count() + g.count() - 2 * overlap;
    Ok(sym as f64 / f.count() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QisoReport {
    pub asymmetry: f64,
    pub deficit: f64,
    pub ratio: f64,
    /// Deficit of the rasterized comparison ball plus a fixed slack; sets
    /// at or below it count as balls.
    pub tolerance: f64,
}

/// Slack added to the deficit of the rasterized ball when deciding whether
/// a set is distinguishable from a ball.
pub const DEFICIT_SLACK: f64 = 2e-3;

/// Asymmetry against the same-volume lattice ball, deficit, and `asymmetry / sqrt(deficit)`.
pub fn check_qiso(s: &GridSet) -> Result<QisoReport> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    let ball = GridSet::lattice_ball(s.dim(), s.h(), [0.0; 3], s.count())?;
    let tolerance = isoperimetric_deficit(&ball)?.abs() + DEFICIT_SLACK;
    let deficit = isoperimetric_deficit(s)?;
    if deficit <= tolerance {
        return Err(Error::DegenerateDeficit(deficit));
    }
    let asymmetry = fraenkel_asymmetry(s, &ball)?;
    Ok(QisoReport {
        asymmetry,
        deficit,
        ratio: asymmetry / deficit.sqrt(),
        tolerance,
    })
}

/// `m / (P^((n - alpha)/(n + 1 - alpha)) V^(1/(n + 1 - alpha)))` for the indicator of `s`.
pub fn interpolation_ratio(s: &GridSet, k: &Kernel) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    let e = total_energy(s, k)?;
    Ok(interpolation_ratio_from(k, e.mass, e.perimeter, e.nonlocal))
}

pub fn interpolation_ratio_from(k: &Kernel, m: f64, p: f64, v: f64) -> f64 {
    let n = k.n() as f64;
    let q = n + 1.0 - k.alpha();
    m / (p.powf((n - k.alpha()) / q) * v.powf(1.0 / q))
}
