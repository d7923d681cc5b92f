use serde::{Deserialize, Serialize};

use super::{rescale_set_to, BallChain};
use crate::error::{Error, Result};
use crate::grid::{perimeter, GridSet, PerimeterMethod};
use crate::metrics::{total_energy_with, EnergyOptions};
use crate::riesz::{Kernel, NonlocalMethod};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonOptimalityParams {
    /// Mass fraction below which the small piece counts as negligible.
    pub epsilon: f64,
    /// Chain spacing in ball diameters.
    pub spacing_factor: f64,
    pub seed: u64,
    /// Perimeter defaults to the stencil estimator, which charges small
    /// pieces their full boundary; the smoothed mesh loses pieces a few
    /// cells wide.
    #[serde(skip)]
    pub options: EnergyOptions,
}

impl Default for NonOptimalityParams {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            spacing_factor: super::DEFAULT_SPACING_FACTOR,
            seed: 0,
            options: EnergyOptions {
                perimeter: PerimeterMethod::Stencil,
                nonlocal: NonlocalMethod::Convolution,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetitorKind {
    Rescaled,
    BallChain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonOptimalityReport {
    pub mass_f1: f64,
    pub mass_f2: f64,
    /// `P(F1) + P(F2) - P(F1 u F2)`.
    pub sigma: f64,
    pub energy_f1: f64,
    pub energy_f2: f64,
    pub energy_f: f64,
    pub sigma_holds: bool,
    pub mass_holds: bool,
    pub triggered: bool,
    pub competitor: Option<CompetitorKind>,
    pub competitor_energy: Option<f64>,
    /// Energies of both candidates when the criterion triggers: rescaled, chain.
    pub candidates: Option<(f64, f64)>,
    pub improved: bool,
}

/// Evaluates the two hypotheses of the non-optimality criterion for the
/// partition `F = F1 u F2` and, if both hold, builds the rescaled set
/// `(1 + gamma)^(1/n) F1` and the standard ball chain of mass `|F|`,
/// returning the cheaper one.
pub fn non_optimality_check(
    f1: &GridSet,
    f2: &GridSet,
    k: &Kernel,
    params: &NonOptimalityParams,
) -> Result<(NonOptimalityReport, Option<GridSet>)> {
    if f1.is_empty() || f2.is_empty() {
        return Err(Error::EmptyPiece);
    }
    let (a, b) = GridSet::align(f1, f2)?;
    if a.overlap_count(&b)? > 0 {
        return Err(Error::NotDisjoint);
    }
    let f = a.union(&b)?;
    let opts = params.options;
    let e1 = total_energy_with(f1, k, opts)?;
    let e2 = total_energy_with(f2, k, opts)?;
    let ef = total_energy_with(&f, k, opts)?;
    let sigma = e1.perimeter + e2.perimeter - perimeter(&f, opts.perimeter);
    let (m1, m2) = (f1.volume(), f2.volume());
    let sigma_holds = sigma <= 0.5 * e2.total;
    let mass_holds = m2 <= params.epsilon * m1.min(1.0);
    let mut report = NonOptimalityReport {
        mass_f1: m1,
        mass_f2: m2,
        sigma,
        energy_f1: e1.total,
        energy_f2: e2.total,
        energy_f: ef.total,
        sigma_holds,
        mass_holds,
        triggered: sigma_holds && mass_holds,
        competitor: None,
        competitor_energy: None,
        candidates: None,
        improved: false,
    };
    if !report.triggered {
        return Ok((report, None));
    }
    let n = f1.dim();
    let gamma = m2 / m1;
    let ell = (1.0 + gamma).powf(1.0 / n as f64);
    let rescaled = rescale_set_to(f1, ell, f.count(), params.seed)?;
    let e_rescaled = total_energy_with(&rescaled, k, opts)?.total;
    let mass = f.volume();
    let diameter = 2.0 * super::ball_radius(n, mass / super::chain_count(mass) as f64);
    let chain = BallChain::standard(n, mass, f.h(), Some(params.spacing_factor * diameter))?;
    let e_chain = chain.energy(k, opts)?.total;
    report.candidates = Some((e_rescaled, e_chain));
    let (kind, energy, set) = if e_rescaled <= e_chain {
        (CompetitorKind::Rescaled, e_rescaled, rescaled)
    } else {
        (CompetitorKind::BallChain, e_chain, chain.to_grid()?)
    };
    report.competitor = Some(kind);
    report.competitor_energy = Some(energy);
    report.improved = energy < ef.total;
    Ok((report, Some(set)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationParams {
    /// Sets within this distance of the center of their largest component are kept.
    pub radius: f64,
    /// Number of cut radii tried between one cell and the far end of the set.
    pub radii: usize,
    pub criterion: NonOptimalityParams,
}

impl Default for TruncationParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            radii: 16,
            criterion: NonOptimalityParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "branch")]
pub enum TruncationBranch {
    /// The same-mass ball is already cheaper.
    Ball,
    /// A cut at radius `rho` triggered the non-optimality criterion.
    Split { rho: f64, kind: CompetitorKind },
    /// The set already lies in the configured ball.
    Contained,
    /// No tried cut produced a cheaper set.
    Unchanged,
}

#[derive(Clone, Debug)]
pub struct TruncationOutcome {
    pub set: GridSet,
    pub branch: TruncationBranch,
    pub energy_before: f64,
    pub energy_after: f64,
}

/// Replaces `s` by a set of the same mass with bounded support and no larger energy.
pub fn truncated_competitor(s: &GridSet, k: &Kernel, params: &TruncationParams) -> Result<TruncationOutcome> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    let opts = params.criterion.options;
    let e = total_energy_with(s, k, opts)?.total;
    let comps = s.components();
    let main = comps.iter().max_by_key(|c| c.count()).expect("nonempty set has a component");
    let c = main.barycenter().expect("nonempty component");
    let center = c.map(|x| (x / s.h()).round() * s.h());
    let ball = GridSet::lattice_ball(s.dim(), s.h(), center, s.count())?;
    let eb = total_energy_with(&ball, k, opts)?.total;
    if e > eb {
        return Ok(TruncationOutcome {
            set: ball,
            branch: TruncationBranch::Ball,
            energy_before: e,
            energy_after: eb,
        });
    }
    let dist = |i: usize| -> f64 {
        let x = s.center(i);
        (0..s.dim()).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt()
    };
    let far = s.occupied().map(dist).fold(0.0, f64::max);
    let unchanged = |branch| TruncationOutcome {
        set: s.clone(),
        branch,
        energy_before: e,
        energy_after: e,
    };
    if far <= params.radius {
        return Ok(unchanged(TruncationBranch::Contained));
    }
    let steps = params.radii.max(1);
    for step in 1..=steps {
        let rho = s.h() + (far - s.h()) * step as f64 / (steps + 1) as f64;
        let mut inner = s.empty_like();
        let mut outer = s.empty_like();
        for i in s.occupied() {
            if dist(i) <= rho {
                inner.set(i, true)?;
            } else {
                outer.set(i, true)?;
            }
        }
        if inner.is_empty() || outer.is_empty() {
            continue;
        }
        let (report, set) = non_optimality_check(&inner, &outer, k, &params.criterion)?;
        if let (true, Some(set)) = (report.improved, set) {
            return Ok(TruncationOutcome {
                set,
                branch: TruncationBranch::Split {
                    rho,
                    kind: report.competitor.expect("triggered report names its competitor"),
                },
                energy_before: e,
                energy_after: report.competitor_energy.unwrap_or(e),
            });
        }
    }
    Ok(unchanged(TruncationBranch::Unchanged))
}
