use serde::{Deserialize, Serialize};

use crate::competitors::split_pieces;
use crate::error::{Error, Result};
use crate::grid::{perimeter, GridSet};
use crate::metrics::{total_energy_with, EnergyOptions};
use crate::riesz::{interaction, nonlocal_energy, Kernel};

/// Hyperplane-cut quantities at one cut position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutRow {
    /// Cut position measured from the lower face of the lowest slice.
    pub t: f64,
    /// `U(t)`: mass below the cut.
    pub u: f64,
    /// `rho(t)`: area of the section at the cut.
    pub rho: f64,
    /// `m U(t) / (2 d^alpha)`, the right-hand side of `2 rho(t) >= ...`.
    pub section_rhs: f64,
    pub section_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub t: f64,
    /// Translation of the upper piece.
    pub separation: f64,
    pub energy: f64,
    /// `E(split) - E(set)`.
    pub delta: f64,
    /// Interaction between the two pieces after translation (both orders).
    pub cross: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    pub axis: usize,
    pub reflected: bool,
    pub mass: f64,
    /// Extent of the set along the axis.
    pub extent: f64,
    pub energy: f64,
    pub cuts: Vec<CutRow>,
    pub splits: Vec<SplitRow>,
    /// Cut positions where `2 rho(t) >= m U(t) / (2 d^alpha)` fails.
    pub section_failures: Vec<f64>,
    pub profitable: bool,
    pub best: Option<SplitRow>,
}

/// Probes hyperplane cuts `x_axis = t` for `t` in `(d/4, d/2)`, with `d`
/// the extent along the longest axis, oriented so that `U(d/2) <= m/2`.
/// Each cut is also tried as a split with the upper piece moved by
/// `factor * d` for every factor in `separations`.
pub fn cut_inequality_probe(s: &GridSet, k: &Kernel, separations: &[f64], opts: EnergyOptions) -> Result<CutReport> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    k.check_grid(s.dim())?;
    let axis = (0..s.dim())
        .max_by(|&a, &b| s.slice_extent(a).total_cmp(&s.slice_extent(b)).then(b.cmp(&a)))
        .unwrap();
    let d = s.slice_extent(axis);
    let m = s.volume();
    let reflected = s.cross_section_mass(axis, 0.5 * d)? > 0.5 * m;
    let set = if reflected { s.reflect(axis)? } else { s.clone() };
    let h = set.h();
    let energy = total_energy_with(&set, k, opts)?.total;
    let (lo, _) = set.bounding_box().expect("nonempty");
    let base = set.center(set.index(lo[0], lo[1], lo[2]))[axis] - 0.5 * h;
    let slices = (d / h).round() as usize;
    let mut cuts = Vec::new();
    let mut splits = Vec::new();
    let own = |p: &GridSet| -> Result<f64> { Ok(perimeter(p, opts.perimeter) + nonlocal_energy(p, k, opts.nonlocal)?) };
    for j in 1..slices {
        let t = j as f64 * h;
        if t <= 0.25 * d || t >= 0.5 * d {
            continue;
        }
        let u = set.cross_section_mass(axis, t)?;
        // the slice just above the cut
        let rho = set.cross_section_area(axis, t + 0.5 * h)?;
        let section_rhs = m * u / (2.0 * d.powf(k.alpha()));
        cuts.push(CutRow {
            t,
            u,
            rho,
            section_rhs,
            section_holds: 2.0 * rho >= section_rhs,
        });
        let (lower, upper) = split_pieces(&set, axis, base + t)?;
        if lower.is_empty() || upper.is_empty() {
            continue;
        }
        let pieces = own(&lower)? + own(&upper)?;
        for &f in separations {
            let shift = (f * d / h).round() as i64;
            let mut delta = [0i64; 3];
            delta[axis] = shift;
            let moved = upper.translated(delta)?;
            let cross = 2.0 * interaction(&lower, &moved, k)?;
            let e = pieces + cross;
            splits.push(SplitRow {
                t,
                separation: shift as f64 * h,
                energy: e,
                delta: e - energy,
                cross,
            });
        }
    }
    let best = splits
        .iter()
        .min_by(|a, b| a.delta.total_cmp(&b.delta))
        .cloned();
    Ok(CutReport {
        axis,
        reflected,
        mass: m,
        extent: d,
        energy,
        section_failures: cuts.iter().filter(|c| !c.section_holds).map(|c| c.t).collect(),
        profitable: best.as_ref().is_some_and(|b| b.delta < 0.0),
        best,
        cuts,
        splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::competitors::make_ball;
    use crate::grid::PerimeterMethod;
    use crate::riesz::NonlocalMethod;

    fn opts() -> EnergyOptions {
        EnergyOptions {
            perimeter: PerimeterMethod::Stencil,
            nonlocal: NonlocalMethod::Convolution,
        }
    }

    #[test]
    fn large_ball_splits_profitably() {
        let k = Kernel::coulomb();
        let b = make_ball(3, 8.0, 1.0 / 8.0).unwrap();
        let r = cut_inequality_probe(&b, &k, &[10.0], opts()).unwrap();
        assert!(r.profitable, "{:?}", r.best);
        // U is nondecreasing and the cuts stay inside (d/4, d/2)
        for w in r.cuts.windows(2) {
            assert!(w[1].u >= w[0].u);
        }
        assert!(r.cuts.iter().all(|c| c.t > 0.25 * r.extent && c.t < 0.5 * r.extent));
        assert!((b.cross_section_mass(0, r.extent).unwrap() - r.mass).abs() < 1e-12);
    }

    #[test]
    fn small_ball_has_no_profitable_cut() {
        let k = Kernel::coulomb();
        let b = make_ball(3, 0.5, 1.0 / 16.0).unwrap();
        let r = cut_inequality_probe(&b, &k, &[1.0, 10.0], opts()).unwrap();
        assert!(!r.profitable, "{:?}", r.best);
    }

    #[test]
    fn interaction_decays_like_the_kernel() {
        let k = Kernel::coulomb();
        let b = make_ball(3, 2.0, 1.0 / 8.0).unwrap();
        let r = cut_inequality_probe(&b, &k, &[10.0, 20.0], opts()).unwrap();
        for pair in r.splits.chunks(2) {
            let ratio = pair[0].cross / pair[1].cross;
            assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
        }
    }

    #[test]
    fn empty_set_is_rejected() {
        let k = Kernel::coulomb();
        let s = GridSet::new(3, [4, 4, 4], 0.25, [0.0; 3]).unwrap();
        assert_eq!(cut_inequality_probe(&s, &k, &[1.0], opts()).unwrap_err(), Error::EmptySet);
    }
}
