use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::competitors::{ball_radius, make_ball};
use crate::error::Result;
use crate::grid::GridSet;
use crate::metrics::{interpolation_ratio_from, total_energy_with, BallOracle, EnergyOptions};
use crate::optimize::random_blob;
use crate::riesz::Kernel;

use super::check_ascending;

/// Relative slack on the ball constant covering the perimeter estimator.
pub const INTERPOLATION_SLACK: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRow {
    pub kind: String,
    pub mass: f64,
    pub h: f64,
    pub perimeter: f64,
    pub nonlocal: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub balls: Vec<InterpolationRow>,
    pub random: Vec<InterpolationRow>,
    /// `(max - min) / max` of the ball ratios.
    pub ball_spread: f64,
    /// Continuum ball ratio times `1 + INTERPOLATION_SLACK`.
    pub constant: f64,
    pub random_max: f64,
    pub exceeding: usize,
}

/// Mesh size with about `cells_per_radius` cells across the radius of the
/// ball of mass `m`, rounded down to a power of two.
pub fn mesh_for(n: usize, m: f64, cells_per_radius: f64) -> f64 {
    let h = ball_radius(n, m) / cells_per_radius;
    2f64.powf(h.log2().floor())
}

/// A random test set of roughly mass `m`: a bump blob, an ellipsoid, or a
/// union of a few balls, chosen by `kind`.
pub fn random_set(n: usize, m: f64, h: f64, kind: usize, rng: &mut ChaCha8Rng) -> Result<GridSet> {
    let r = ball_radius(n, m);
    let cells = (m / h.powi(n as i32)).round() as usize;
    match kind % 3 {
        0 => {
            let seed = rng.gen();
            random_blob(n, h, cells, [2.0 * r; 3], seed)
        }
        1 => {
            let mut ax = [1.0; 3];
            for a in ax.iter_mut().take(n) {
                *a = rng.gen_range(0.4..2.5f64);
            }
            let norm: f64 = ax[..n].iter().product::<f64>().powf(1.0 / n as f64);
            let ax: Vec<f64> = ax.iter().map(|a| a / norm * r).collect();
            let reach = ax.iter().cloned().fold(0.0, f64::max);
            GridSet::rasterize(n, h, [-reach; 3], [reach; 3], |x| {
                (0..n).map(|a| (x[a] / ax[a]).powi(2)).sum::<f64>() < 1.0
            })
        }
        _ => {
            let count = rng.gen_range(2..=4);
            let balls: Vec<([f64; 3], f64)> = (0..count)
                .map(|_| {
                    let mut c = [0.0; 3];
                    for x in c.iter_mut().take(n) {
                        *x = rng.gen_range(-1.5..1.5) * r;
                    }
                    (c, rng.gen_range(0.5..0.9) * r)
                })
                .collect();
            let reach = 2.4 * r;
            GridSet::rasterize(n, h, [-reach; 3], [reach; 3], |x| {
                balls
                    .iter()
                    .any(|(c, rr)| (0..n).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>() < rr * rr)
            })
        }
    }
}

/// Interpolation ratio `m / (P^a V^b)` on lattice balls over a mass range
/// and on random sets, against the continuum ball constant.
pub fn interpolation_sweep(
    k: &Kernel,
    masses: &[f64],
    cells_per_radius: f64,
    random_sets: usize,
    seed: u64,
    opts: EnergyOptions,
) -> Result<InterpolationReport> {
    check_ascending(masses)?;
    let n = k.n();
    let row = |kind: &str, s: &GridSet| -> Result<InterpolationRow> {
        let e = total_energy_with(s, k, opts)?;
        Ok(InterpolationRow {
            kind: kind.to_string(),
            mass: e.mass,
            h: s.h(),
            perimeter: e.perimeter,
            nonlocal: e.nonlocal,
            ratio: interpolation_ratio_from(k, e.mass, e.perimeter, e.nonlocal),
        })
    };
    let mut balls = Vec::new();
    for &m in masses {
        balls.push(row("ball", &make_ball(n, m, mesh_for(n, m, cells_per_radius))?)?);
    }
    let hi = balls.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let lo = balls.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let o = BallOracle::new(k);
    let b = o.breakdown(1.0);
    let constant = interpolation_ratio_from(k, 1.0, b.perimeter, b.nonlocal) * (1.0 + INTERPOLATION_SLACK);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = Vec::with_capacity(random_sets);
    for i in 0..random_sets {
        let m = rng.gen_range(0.2..2.0);
        let h = mesh_for(n, m, cells_per_radius);
        let s = random_set(n, m, h, i, &mut rng)?;
        let kind = ["blob", "ellipsoid", "balls"][i % 3];
        random.push(row(kind, &s)?);
    }
    let random_max = random.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let exceeding = random.iter().filter(|r| r.ratio > constant).count();
    Ok(InterpolationReport {
        ball_spread: (hi - lo) / hi,
        balls,
        random,
        constant,
        random_max,
        exceeding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PerimeterMethod;
    use crate::riesz::NonlocalMethod;

    #[test]
    fn ball_ratio_is_scale_free_and_random_sets_stay_below() {
        let k = Kernel::coulomb();
        let opts = EnergyOptions {
            perimeter: PerimeterMethod::Stencil,
            nonlocal: NonlocalMethod::Convolution,
        };
        let r = interpolation_sweep(&k, &[0.01, 0.1, 1.0, 10.0], 12.0, 9, 1, opts).unwrap();
        assert!(r.ball_spread < 0.02, "{:?}", r.balls);
        assert_eq!(r.exceeding, 0, "{:?}", r.random);
        assert!(r.random.iter().all(|x| x.ratio > 0.0));
    }

    #[test]
    fn mesh_is_a_power_of_two() {
        let h = mesh_for(3, 1.0, 16.0);
        assert_eq!(h.log2().fract(), 0.0);
        assert!(ball_radius(3, 1.0) / h >= 16.0);
    }
}
