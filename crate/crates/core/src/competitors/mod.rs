//! Comparison sets: balls, chains of equal balls, rescaled sets, hyperplane
//! splits, and the decision whether a two-piece partition can be improved.

mod decision;

pub use decision::{
    non_optimality_check, truncated_competitor, CompetitorKind, NonOptimalityParams,
    NonOptimalityReport, TruncationBranch, TruncationOutcome, TruncationParams,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{box_smooth, perimeter, GridSet};
use crate::metrics::{EnergyBreakdown, EnergyOptions};
use crate::quad::unit_ball_volume;
use crate::riesz::{interaction, nonlocal_energy, Kernel};

/// Chain spacing in units of the ball diameter when none is given.
pub const DEFAULT_SPACING_FACTOR: f64 = 10.0;

/// Number of cells closest to volume `m`.
pub fn cell_count(n: usize, m: f64, h: f64) -> usize {
    (m / h.powi(n as i32)).round() as usize
}

/// Radius of the ball of volume `m`.
pub fn ball_radius(n: usize, m: f64) -> f64 {
    (m / unit_ball_volume(n)).powf(1.0 / n as f64)
}

/// Lattice ball of volume `m` (nearest cell count) centered at the origin.
pub fn make_ball(n: usize, m: f64, h: f64) -> Result<GridSet> {
    make_ball_at(n, m, h, [0.0; 3])
}

pub fn make_ball_at(n: usize, m: f64, h: f64, center: [f64; 3]) -> Result<GridSet> {
    let count = cell_count(n, m, h);
    if count == 0 {
        return Err(Error::BoxTooSmall(format!("mass {m} is below one cell at h = {h}")));
    }
    GridSet::lattice_ball(n, h, center, count)
}

/// Smallest `N` such that `m / N <= 1`.
pub fn chain_count(m: f64) -> usize {
    (m.ceil() as usize).max(1)
}

/// `N` disjoint balls of (nearly) equal cell count with centers on the first axis.
#[derive(Clone, Debug)]
pub struct BallChain {
    pub balls: Vec<GridSet>,
    pub spacing: f64,
}

impl BallChain {
    /// Splits the cell count of `m` as evenly as possible over `count` balls
    /// spaced `spacing` apart (default: ten diameters).
    pub fn new(n: usize, m: f64, h: f64, count: usize, spacing: Option<f64>) -> Result<Self> {
        let total = cell_count(n, m, h);
        if count == 0 || total < count {
            return Err(Error::BoxTooSmall(format!("cannot split {total} cells into {count} balls")));
        }
        let diameter = 2.0 * ball_radius(n, m / count as f64);
        let spacing = spacing.unwrap_or(DEFAULT_SPACING_FACTOR * diameter);
        if spacing <= diameter + 2.0 * h {
            return Err(Error::PreconditionFailed(format!(
                "chain spacing {spacing} does not exceed the ball diameter {diameter}"
            )));
        }
        let step = (spacing / h).round() * h;
        let (base, extra) = (total / count, total % count);
        let balls = (0..count)
            .map(|j| {
                let cells = base + usize::from(j < extra);
                GridSet::lattice_ball(n, h, [j as f64 * step, 0.0, 0.0], cells)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { balls, spacing: step })
    }

    /// The chain the non-optimality argument compares against: `N = ceil(m)` balls.
    pub fn standard(n: usize, m: f64, h: f64, spacing: Option<f64>) -> Result<Self> {
        Self::new(n, m, h, chain_count(m), spacing)
    }

    pub fn mass(&self) -> f64 {
        self.balls.iter().map(|b| b.volume()).sum()
    }

    pub fn to_grid(&self) -> Result<GridSet> {
        let mut acc = self.balls[0].clone();
        for b in &self.balls[1..] {
            let (x, y) = GridSet::align(&acc, b)?;
            acc = x.union(&y)?;
        }
        Ok(acc)
    }

    /// Interaction between balls `i` and `j` (one ordered pair).
    pub fn cross(&self, i: usize, j: usize, k: &Kernel) -> Result<f64> {
        interaction(&self.balls[i], &self.balls[j], k)
    }

    /// Energy as the sum of the balls' own energies plus all pair interactions.
    pub fn energy(&self, k: &Kernel, opts: EnergyOptions) -> Result<EnergyBreakdown> {
        let mut p = 0.0;
        let mut v = 0.0;
        for b in &self.balls {
            p += perimeter(b, opts.perimeter);
            v += nonlocal_energy(b, k, opts.nonlocal)?;
        }
        for i in 0..self.balls.len() {
            for j in i + 1..self.balls.len() {
                v += 2.0 * self.cross(i, j, k)?;
            }
        }
        Ok(EnergyBreakdown::new(p, v, self.mass(), *k))
    }
}

/// Rasterized chain of `ceil(m)` balls with the default spacing.
pub fn make_ball_chain(n: usize, m: f64, h: f64) -> Result<GridSet> {
    BallChain::standard(n, m, h, None)?.to_grid()
}

/// `ell * s` about the lattice origin with `round(ell^n |s| / h^n)` cells.
pub fn rescale_set(s: &GridSet, ell: f64) -> Result<GridSet> {
    let target = (ell.powi(s.dim() as i32) * s.count() as f64).round() as usize;
    rescale_set_to(s, ell, target, 0)
}

/// Resamples `ell * s` on the same lattice and keeps exactly `target` cells.
///
/// Cells are ranked by the multilinear interpolant of the indicator of `s`
/// at `x / ell`, then by the interpolant of its box-smoothed indicator, then
/// by a seeded random key. At `ell = 1` with `target = |s|` this returns `s`.
pub fn rescale_set_to(s: &GridSet, ell: f64, target: usize, seed: u64) -> Result<GridSet> {
    if !(ell > 0.0) {
        return Err(Error::PreconditionFailed(format!("scale {ell} must be positive")));
    }
    let (blo, bhi) = s.bounding_box().ok_or(Error::EmptySet)?;
    let h = s.h();
    let org = s.origin();
    let dim = s.dim();
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for a in 0..dim {
        lo[a] = ell * (org[a] + blo[a] as f64 * h) - 3.0 * h;
        hi[a] = ell * (org[a] + bhi[a] as f64 * h) + 3.0 * h;
    }
    let mut out = GridSet::covering(dim, h, lo, hi)?;
    let indicator: Vec<f64> = s.cells().iter().map(|&c| c as f64).collect();
    let smooth = box_smooth(s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranked: Vec<(f64, f64, u64, usize)> = (0..out.len())
        .filter(|&i| !out.is_margin(i))
        .filter_map(|i| {
            let y = out.center(i);
            let x = y.map(|v| v / ell);
            let primary = s.interpolate(&indicator, x);
            let secondary = s.interpolate(&smooth, x);
            (secondary > 0.0).then(|| (primary, secondary, rng.gen::<u64>(), i))
        })
        .collect();
    if ranked.len() < target {
        return Err(Error::BoxTooSmall("rescaled set does not fit its box".into()));
    }
    ranked.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.1.total_cmp(&a.1))
            .then(a.2.cmp(&b.2))
    });
    for &(_, _, _, i) in &ranked[..target] {
        out.set(i, true)?;
    }
    Ok(out)
}

/// The pieces `{x_axis <= t}` and `{x_axis > t}` of `s` on its own box.
pub fn split_pieces(s: &GridSet, axis: usize, t: f64) -> Result<(GridSet, GridSet)> {
    if axis >= s.dim() {
        return Err(Error::PreconditionFailed(format!("axis {axis} out of range")));
    }
    let mut lower = s.empty_like();
    let mut upper = s.empty_like();
    for idx in s.occupied() {
        if s.center(idx)[axis] > t {
            upper.set(idx, true)?;
        } else {
            lower.set(idx, true)?;
        }
    }
    Ok((lower, upper))
}

/// Cuts `s` by the hyperplane `x_axis = t` and moves the upper piece by
/// `r` (rounded to whole cells) along the axis.
///
/// A plane that misses the set returns it unchanged.
pub fn split_translate(s: &GridSet, axis: usize, t: f64, r: f64) -> Result<GridSet> {
    if s.is_empty() {
        return Err(Error::EmptyPiece);
    }
    let (lower, upper) = split_pieces(s, axis, t)?;
    if lower.is_empty() || upper.is_empty() {
        return Ok(s.clone());
    }
    let shift = (r / s.h()).round() as i64;
    if shift < 0 {
        return Err(Error::PreconditionFailed(format!("separation {r} must be nonnegative")));
    }
    let mut delta = [0i64; 3];
    delta[axis] = shift;
    let moved = upper.translated(delta)?;
    let (a, b) = GridSet::align(&lower, &moved)?;
    a.union(&b)
}

/// A comparison set described by plain parameters, as stored in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompetitorSpec {
    Ball {
        mass: f64,
    },
    BallChain {
        mass: f64,
        #[serde(default)]
        count: Option<usize>,
        #[serde(default)]
        spacing: Option<f64>,
    },
    /// The ball of volume `mass / scale^n`, rescaled by `scale`.
    Rescaled {
        mass: f64,
        scale: f64,
    },
    /// A ball of volume `mass` cut at `t` (relative to its radius) and pulled apart by `separation`.
    SplitTranslate {
        mass: f64,
        #[serde(default)]
        axis: usize,
        t: f64,
        separation: f64,
    },
    /// The cells of `{x_axis <= t * r}` nearest to the center, `r` the
    /// radius of the ball of volume `mass`.
    TruncatedBall {
        mass: f64,
        #[serde(default)]
        axis: usize,
        t: f64,
    },
}

impl CompetitorSpec {
    pub fn mass(&self) -> f64 {
        match *self {
            Self::Ball { mass }
            | Self::BallChain { mass, .. }
            | Self::Rescaled { mass, .. }
            | Self::SplitTranslate { mass, .. }
            | Self::TruncatedBall { mass, .. } => mass,
        }
    }

    pub fn build(&self, n: usize, h: f64) -> Result<GridSet> {
        match *self {
            Self::Ball { mass } => make_ball(n, mass, h),
            Self::BallChain { mass, count, spacing } => {
                BallChain::new(n, mass, h, count.unwrap_or_else(|| chain_count(mass)), spacing)?.to_grid()
            }
            Self::Rescaled { mass, scale } => {
                let base = make_ball(n, mass / scale.powi(n as i32), h)?;
                rescale_set_to(&base, scale, cell_count(n, mass, h), 0)
            }
            Self::SplitTranslate { mass, axis, t, separation } => {
                let b = make_ball(n, mass, h)?;
                split_translate(&b, axis, t * ball_radius(n, mass), separation)
            }
            Self::TruncatedBall { mass, axis, t } => {
                if axis >= n {
                    return Err(Error::PreconditionFailed(format!("axis {axis} out of range")));
                }
                let count = cell_count(n, mass, h);
                let r = ball_radius(n, mass);
                let cut = t * r;
                // enough room for the whole count even when the cut is deep
                let reach = 2.0 * r / (0.5 * (1.0 + t.clamp(-0.9, 1.0))).powf(1.0 / n as f64) + 2.0 * h;
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for a in 0..n {
                    lo[a] = -reach;
                    hi[a] = reach;
                }
                hi[axis] = cut.min(reach);
                let mut s = GridSet::covering(n, h, lo, hi)?;
                let mut cand: Vec<(f64, usize)> = (0..s.len())
                    .filter(|&i| !s.is_margin(i) && s.center(i)[axis] <= cut)
                    .map(|i| {
                        let c = s.center(i);
                        ((0..n).map(|a| c[a] * c[a]).sum::<f64>(), i)
                    })
                    .collect();
                if cand.len() < count {
                    return Err(Error::BoxTooSmall("truncated ball does not fit".into()));
                }
                cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(_, i) in &cand[..count] {
                    s.set(i, true)?;
                }
                Ok(s)
            }
        }
    }
}
