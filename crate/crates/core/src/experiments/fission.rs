use serde::{Deserialize, Serialize};

use crate::competitors::{ball_radius, make_ball, BallChain, DEFAULT_SPACING_FACTOR};
use crate::error::{Error, Result};
use crate::metrics::{total_energy_with, BallOracle, EnergyOptions};
use crate::riesz::Kernel;

use super::check_ascending;

/// Optimal number of equal balls at infinite separation for one mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FissionRow {
    pub mass: f64,
    pub ball_energy: f64,
    pub two_ball_energy: f64,
    pub best_count: usize,
    pub best_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FissionScan {
    pub rows: Vec<FissionRow>,
    /// Mass where one ball and two half balls have equal energy, by bisection.
    pub crossover: f64,
    /// The same mass from the closed form.
    pub crossover_closed_form: f64,
}

/// `N e(m / N)` for the ball oracle `e`.
pub fn chain_oracle(o: &BallOracle, m: f64, count: usize) -> f64 {
    count as f64 * o.energy(m / count as f64)
}

/// Best `N` in `1..=ceil(m) + 1` and its energy.
pub fn best_chain(o: &BallOracle, m: f64) -> (usize, f64) {
    let top = m.ceil() as usize + 1;
    (1..=top)
        .map(|c| (c, chain_oracle(o, m, c)))
        .fold((1, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b })
}

/// `m*` with `e(m*) = 2 e(m*/2)`:
/// `(c1 (2^(1/n) - 1) / (c2 (1 - 2^((alpha - n)/n))))^(n / (n + 1 - alpha))`.
pub fn crossover_closed_form(o: &BallOracle) -> f64 {
    let n = o.kernel.n() as f64;
    let a = o.kernel.alpha();
    let ratio = o.c1 * (2f64.powf(1.0 / n) - 1.0) / (o.c2 * (1.0 - 2f64.powf((a - n) / n)));
    ratio.powf(n / (n + 1.0 - a))
}

/// Bisection in `log m` on `e(m) - 2 e(m/2)`.
pub fn crossover_bisection(o: &BallOracle) -> f64 {
    let f = |m: f64| o.energy(m) - 2.0 * o.energy(0.5 * m);
    let (mut lo, mut hi) = (1e-8f64, 1e8f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    (lo * hi).sqrt()
}

pub fn fission_scan(k: &Kernel, masses: &[f64]) -> Result<FissionScan> {
    check_ascending(masses)?;
    let o = BallOracle::new(k);
    let rows = masses
        .iter()
        .map(|&m| {
            let (best_count, best_energy) = best_chain(&o, m);
            FissionRow {
                mass: m,
                ball_energy: o.energy(m),
                two_ball_energy: chain_oracle(&o, m, 2),
                best_count,
                best_energy,
            }
        })
        .collect();
    Ok(FissionScan {
        rows,
        crossover: crossover_bisection(&o),
        crossover_closed_form: crossover_closed_form(&o),
    })
}

/// Grid energies of one ball and of two half balls for one mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFissionRow {
    pub mass: f64,
    pub ball: f64,
    /// Two balls at the chain spacing, interaction included.
    pub pair: f64,
    /// Interaction energy of the two balls (both orders).
    pub cross: f64,
    /// Oracle values for comparison.
    pub ball_oracle: f64,
    pub pair_oracle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCrossover {
    pub h: f64,
    pub spacing_factor: f64,
    pub rows: Vec<GridFissionRow>,
    /// Sign change of `ball - pair`, interaction included.
    pub crossover_at_spacing: Option<f64>,
    /// Sign change of `ball - (pair - cross)`: the pair at infinite separation.
    pub crossover_separated: Option<f64>,
}

/// Linear interpolation of the first sign change from negative to positive.
fn sign_change(xs: &[f64], ys: &[f64]) -> Option<f64> {
    xs.windows(2).zip(ys.windows(2)).find_map(|(x, y)| {
        (y[0] < 0.0 && y[1] >= 0.0).then(|| x[0] + (x[1] - x[0]) * (-y[0]) / (y[1] - y[0]))
    })
}

/// One ball against two half balls `spacing_factor` diameters apart, on the
/// grid, for masses bracketing the crossover.
pub fn grid_crossover(
    k: &Kernel,
    masses: &[f64],
    h: f64,
    spacing_factor: Option<f64>,
    opts: EnergyOptions,
) -> Result<GridCrossover> {
    check_ascending(masses)?;
    let n = k.n();
    let o = BallOracle::new(k);
    let factor = spacing_factor.unwrap_or(DEFAULT_SPACING_FACTOR);
    let mut rows = Vec::with_capacity(masses.len());
    for &m in masses {
        let ball = total_energy_with(&make_ball(n, m, h)?, k, opts)?.total;
        let spacing = factor * 2.0 * ball_radius(n, 0.5 * m);
        let chain = BallChain::new(n, m, h, 2, Some(spacing))?;
        let pair = chain.energy(k, opts)?.total;
        let cross = 2.0 * chain.cross(0, 1, k)?;
        rows.push(GridFissionRow {
            mass: m,
            ball,
            pair,
            cross,
            ball_oracle: o.energy(m),
            pair_oracle: chain_oracle(&o, m, 2),
        });
    }
    if rows.len() < 2 {
        return Err(Error::PreconditionFailed("need at least two masses".into()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.mass).collect();
    let raw: Vec<f64> = rows.iter().map(|r| r.ball - r.pair).collect();
    let sep: Vec<f64> = rows.iter().map(|r| r.ball - (r.pair - r.cross)).collect();
    Ok(GridCrossover {
        h,
        spacing_factor: factor,
        crossover_at_spacing: sign_change(&xs, &raw),
        crossover_separated: sign_change(&xs, &sep),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coulomb_crossover_matches_closed_form() {
        let k = Kernel::coulomb();
        let s = fission_scan(&k, &[0.1, 1.0, 2.0, 8.0, 30.0]).unwrap();
        assert!((s.crossover - 1.756).abs() < 1e-3, "{}", s.crossover);
        assert!((s.crossover - s.crossover_closed_form).abs() < 1e-9);
        assert_eq!(s.rows[0].best_count, 1);
        assert!(s.rows[3].best_count >= 2);
    }

    #[test]
    fn optimal_count_is_monotone() {
        for (n, a) in [(3, 1.0), (3, 2.0), (2, 1.0), (3, 0.5)] {
            let k = Kernel::new(n, a).unwrap();
            let masses: Vec<f64> = (0..60).map(|i| 0.05 * 1.15f64.powi(i)).collect();
            let s = fission_scan(&k, &masses).unwrap();
            for w in s.rows.windows(2) {
                assert!(w[1].best_count >= w[0].best_count);
            }
            for r in &s.rows {
                assert!(r.best_count <= r.mass.ceil() as usize + 1);
            }
        }
    }

    #[test]
    fn rejects_unsorted_masses() {
        let k = Kernel::coulomb();
        assert!(fission_scan(&k, &[2.0, 1.0]).is_err());
        assert!(fission_scan(&k, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn sign_change_interpolates() {
        assert_eq!(sign_change(&[1.0, 2.0, 3.0], &[-2.0, -1.0, 1.0]), Some(2.5));
        assert_eq!(sign_change(&[1.0, 2.0], &[1.0, 2.0]), None);
    }
}
