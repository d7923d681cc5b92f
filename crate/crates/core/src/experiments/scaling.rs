use serde::{Deserialize, Serialize};

use crate::competitors::ball_radius;
use crate::error::{Error, Result};
use crate::metrics::{interpolation_ratio_from, BallOracle, EnergyBreakdown};
use crate::quad::linear_fit;
use crate::riesz::Kernel;

use super::fission::crossover_bisection;
use super::{check_ascending, SweepRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub records: Vec<SweepRecord>,
    pub crossover: f64,
    /// Log-log slope of the best energy over `m <= 0.1 m*`.
    pub small_slope: Option<f64>,
    /// Log-log slope over `m >= 10 m*`.
    pub large_slope: Option<f64>,
    /// Extremes of `E / max(m^((n-1)/n), m)` over all records.
    pub c_lower: f64,
    pub c_upper: f64,
    /// Largest `m / (P^a V^b)` over all evaluated candidates.
    pub interpolation_max: f64,
}

/// Energy, perimeter and nonlocal term of `N` equal balls at infinite separation.
fn chain_breakdown(o: &BallOracle, m: f64, count: usize) -> EnergyBreakdown {
    let one = o.breakdown(m / count as f64);
    let c = count as f64;
    EnergyBreakdown::new(c * one.perimeter, c * one.nonlocal, m, o.kernel)
}

/// Chains of `N = 1..=ceil(m) + 1` balls at infinite separation for one mass.
pub fn chain_record(o: &BallOracle, m: f64) -> SweepRecord {
    let top = m.ceil() as usize + 1;
    let candidates: Vec<(String, EnergyBreakdown)> = (1..=top)
        .map(|c| {
            let id = if c == 1 { "ball".to_string() } else { format!("chain-{c}") };
            (id, chain_breakdown(o, m, c))
        })
        .collect();
    SweepRecord::new(m, o.kernel, None, candidates)
}

/// Best-competitor energy over a range of masses and the slopes of both
/// branches of `E ~ max(m^((n-1)/n), m)`.
pub fn scaling_sweep(k: &Kernel, masses: &[f64]) -> Result<ScalingReport> {
    check_ascending(masses)?;
    if masses.last().unwrap() / masses[0] < 100.0 {
        return Err(Error::PreconditionFailed("need at least two decades of masses".into()));
    }
    let o = BallOracle::new(k);
    let crossover = crossover_bisection(&o);
    let n = k.n() as f64;
    let records: Vec<SweepRecord> = masses.iter().map(|&m| chain_record(&o, m)).collect();
    let slope = |keep: &dyn Fn(f64) -> bool| {
        let (x, y): (Vec<f64>, Vec<f64>) = records
            .iter()
            .filter(|r| keep(r.mass))
            .map(|r| (r.mass.ln(), r.best_energy().total.ln()))
            .unzip();
        (x.len() >= 2).then(|| linear_fit(&x, &y).0)
    };
    let small_slope = slope(&|m| m <= 0.1 * crossover);
    let large_slope = slope(&|m| m >= 10.0 * crossover);
    let (mut c_lower, mut c_upper) = (f64::INFINITY, 0.0f64);
    let mut interpolation_max = 0.0f64;
    for r in &records {
        let e = r.best_energy().total;
        let scale = r.mass.powf((n - 1.0) / n).max(r.mass);
        c_lower = c_lower.min(e / scale);
        c_upper = c_upper.max(e / scale);
        for (_, b) in &r.candidates {
            interpolation_max = interpolation_max.max(interpolation_ratio_from(k, b.mass, b.perimeter, b.nonlocal));
        }
    }
    Ok(ScalingReport {
        records,
        crossover,
        small_slope,
        large_slope,
        c_lower,
        c_upper,
        interpolation_max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquipartitionRow {
    pub mass: f64,
    pub count: usize,
    pub perimeter: f64,
    pub nonlocal: f64,
    pub total: f64,
    /// `min(P, V) / m`.
    pub min_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquipartitionReport {
    pub beta: f64,
    pub rows: Vec<EquipartitionRow>,
    /// `min(P, V) / m` minimized over all candidates.
    pub c_fit: f64,
    /// Per mass, the smallest `min(P, V) / m` among its candidates.
    pub per_mass: Vec<(f64, f64)>,
    /// `(max - min) / max` of `per_mass`.
    pub spread: f64,
    /// Candidates with `max(P, V) > beta m` (impossible when `E <= beta m`).
    pub upper_violations: usize,
}

/// `1.5` times the smallest energy per unit mass of a ball, `min_mu e(mu) / mu`.
pub fn default_beta(k: &Kernel) -> f64 {
    let o = BallOracle::new(k);
    // e(mu)/mu = c1 mu^(-1/n) + c2 mu^((n-alpha)/n) is minimal at
    // mu = (c1 / (c2 (n - alpha)))^(n / (n + 1 - alpha))
    let n = k.n() as f64;
    let mu = (o.c1 / (o.c2 * (n - k.alpha()))).powf(n / (n + 1.0 - k.alpha()));
    1.5 * o.energy(mu) / mu
}

/// Equipartition bounds for explicit candidates; every candidate must have
/// `E <= beta m`.
pub fn equipartition_of(candidates: &[EnergyBreakdown], beta: f64) -> Result<EquipartitionReport> {
    let mut rows = Vec::with_capacity(candidates.len());
    for b in candidates {
        if b.total > beta * b.mass {
            return Err(Error::PreconditionFailed(format!(
                "candidate of mass {} has E = {} > beta m = {}",
                b.mass,
                b.total,
                beta * b.mass
            )));
        }
        rows.push(EquipartitionRow {
            mass: b.mass,
            count: 1,
            perimeter: b.perimeter,
            nonlocal: b.nonlocal,
            total: b.total,
            min_ratio: b.perimeter.min(b.nonlocal) / b.mass,
        });
    }
    summarize(beta, rows)
}

fn summarize(beta: f64, rows: Vec<EquipartitionRow>) -> Result<EquipartitionReport> {
    if rows.is_empty() {
        return Err(Error::PreconditionFailed("no candidate satisfies E <= beta m".into()));
    }
    let mut per_mass: Vec<(f64, f64)> = Vec::new();
    for r in &rows {
        match per_mass.iter_mut().find(|(m, _)| *m == r.mass) {
            Some(p) => p.1 = p.1.min(r.min_ratio),
            None => per_mass.push((r.mass, r.min_ratio)),
        }
    }
    let lo = per_mass.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = per_mass.iter().map(|p| p.1).fold(0.0, f64::max);
    let upper_violations = rows
        .iter()
        .filter(|r| r.perimeter.max(r.nonlocal) > beta * r.mass)
        .count();
    Ok(EquipartitionReport {
        beta,
        c_fit: lo,
        spread: (hi - lo) / hi,
        per_mass,
        upper_violations,
        rows,
    })
}

/// Chains of `N` balls at infinite separation with `E <= beta m`, for each mass.
pub fn equipartition_check(k: &Kernel, masses: &[f64], beta: f64) -> Result<EquipartitionReport> {
    check_ascending(masses)?;
    if masses.iter().any(|&m| m < 1.0) {
        return Err(Error::PreconditionFailed("equipartition needs masses >= 1".into()));
    }
    let o = BallOracle::new(k);
    let mut rows = Vec::new();
    for &m in masses {
        for count in 1..=m.ceil() as usize + 1 {
            let b = chain_breakdown(&o, m, count);
            if b.total <= beta * m {
                rows.push(EquipartitionRow {
                    mass: m,
                    count,
                    perimeter: b.perimeter,
                    nonlocal: b.nonlocal,
                    total: b.total,
                    min_ratio: b.perimeter.min(b.nonlocal) / m,
                });
            }
        }
    }
    summarize(beta, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterEntry {
    pub mass: f64,
    pub diameter: f64,
    pub energy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterReport {
    /// `min diam / m^(1/alpha)`.
    pub c_lower: f64,
    /// `max diam / m`.
    pub c_upper: f64,
    /// Entries with `E <= beta m` but `diam < (m / beta)^(1/alpha)`.
    pub violations: Vec<usize>,
}

/// Fits `c m^(1/alpha) <= diam <= C m` over the entries.
pub fn diameter_bounds_check(entries: &[DiameterEntry], k: &Kernel, beta: f64) -> Result<DiameterReport> {
    if entries.is_empty() {
        return Err(Error::EmptySet);
    }
    if entries.iter().any(|e| e.mass < 1.0) {
        return Err(Error::PreconditionFailed("diameter bounds need masses >= 1".into()));
    }
    let a = k.alpha();
    let mut c_lower = f64::INFINITY;
    let mut c_upper = 0.0f64;
    let mut violations = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        c_lower = c_lower.min(e.diameter / e.mass.powf(1.0 / a));
        c_upper = c_upper.max(e.diameter / e.mass);
        if let Some(en) = e.energy {
            if en <= beta * e.mass && e.diameter < (e.mass / beta).powf(1.0 / a) {
                violations.push(i);
            }
        }
    }
    Ok(DiameterReport {
        c_lower,
        c_upper,
        violations,
    })
}

/// Diameter of `N` balls of mass `m / N` with centers `spacing_factor`
/// ball diameters apart on a line.
pub fn chain_diameter(n: usize, m: f64, count: usize, spacing_factor: f64) -> f64 {
    let d = 2.0 * ball_radius(n, m / count as f64);
    (count as f64 - 1.0) * spacing_factor * d + d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::fission::{best_chain, chain_oracle};

    fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (count - 1) as f64).exp())
            .collect()
    }

    #[test]
    fn both_scaling_branches_have_the_right_slope() {
        let k = Kernel::coulomb();
        let o = BallOracle::new(&k);
        let ms = crossover_bisection(&o);
        let mut masses = logspace(1e-3, 0.1 * ms, 12);
        masses.extend(logspace(10.0 * ms, 1e3 * ms, 12));
        let r = scaling_sweep(&k, &masses).unwrap();
        assert!((r.small_slope.unwrap() - 2.0 / 3.0).abs() < 0.05, "{:?}", r.small_slope);
        assert!((r.large_slope.unwrap() - 1.0).abs() < 0.05, "{:?}", r.large_slope);
        assert!(r.c_lower > 0.0 && r.c_upper < 20.0);
        for rec in &r.records {
            assert!((rec.best_energy().total - best_chain(&o, rec.mass).1).abs() < 1e-12 * rec.mass.max(1.0) * 100.0);
        }
    }

    #[test]
    fn interpolation_bound_is_attained_by_balls_and_chains() {
        // N equal balls at infinity have exactly the ball's ratio
        let k = Kernel::coulomb();
        let r = scaling_sweep(&k, &[0.01, 0.1, 1.0, 10.0]).unwrap();
        let o = BallOracle::new(&k);
        let b = o.breakdown(1.0);
        let ball = interpolation_ratio_from(&k, 1.0, b.perimeter, b.nonlocal);
        assert!((r.interpolation_max - ball).abs() < 1e-12 * ball);
    }

    #[test]
    fn equipartition_is_stable_over_chain_masses() {
        let k = Kernel::coulomb();
        let beta = default_beta(&k);
        let r = equipartition_check(&k, &[2.0, 4.0, 8.0, 16.0], beta).unwrap();
        assert!(r.c_fit > 0.0);
        assert!(r.spread < 0.3, "{r:?}");
        assert_eq!(r.upper_violations, 0);
    }

    #[test]
    fn huge_ball_violates_linear_energy() {
        let k = Kernel::coulomb();
        let o = BallOracle::new(&k);
        let big = o.breakdown(100.0);
        assert!(matches!(equipartition_of(&[big], default_beta(&k)), Err(Error::PreconditionFailed(_))));
        let one = o.breakdown(1.0);
        assert!(equipartition_of(&[one], 2.0 * o.energy(1.0)).is_ok());
    }

    #[test]
    fn chain_diameters_grow_linearly() {
        let k = Kernel::coulomb();
        let o = BallOracle::new(&k);
        let entries: Vec<DiameterEntry> = [2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&m| {
                let c = m as usize;
                DiameterEntry {
                    mass: m,
                    diameter: chain_diameter(3, m, c, 10.0),
                    energy: Some(chain_oracle(&o, m, c)),
                }
            })
            .collect();
        let r = diameter_bounds_check(&entries, &k, default_beta(&k)).unwrap();
        assert!(r.violations.is_empty());
        let per_mass: Vec<f64> = entries.iter().map(|e| e.diameter / e.mass).collect();
        assert!((per_mass[3] - per_mass[2]).abs() / per_mass[3] < 0.1, "{per_mass:?}");
        let too_small = DiameterEntry { mass: 16.0, diameter: 0.1, energy: Some(1.0) };
        let r = diameter_bounds_check(&[too_small], &k, 10.0).unwrap();
        assert_eq!(r.violations, vec![0]);
    }
}
