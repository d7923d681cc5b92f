use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{perimeter, stencil_flip_delta, GridSet, PerimeterMethod};
use crate::metrics::{fraenkel_asymmetry, total_energy_with, EnergyBreakdown, EnergyOptions};
use crate::riesz::{potential_field, Kernel, KernelTable, NonlocalMethod};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    /// Required cell count of the initial set, if given.
    pub target_cells: Option<usize>,
    /// Number of proposed moves.
    pub moves: u64,
    /// Initial temperature; `None` means half the energy of one facet, `h^(n-1) / 2`.
    pub t0: Option<f64>,
    /// Temperature factor per sweep (one proposal per occupied cell).
    pub decay: f64,
    /// Probability that the added cell is drawn from the whole box instead
    /// of the cells next to the set.
    pub far_weight: f64,
    pub seed: u64,
    /// Proposals between trace points; 0 keeps only the final point.
    pub snapshot_period: u64,
    /// Accepted moves between full recomputations of the potential.
    pub refresh_period: u64,
    /// Candidates drawn per proposal; the removed cell is the one with the
    /// most empty neighbors and the added cell the one with the most
    /// occupied neighbors. 1 gives uniform proposals.
    pub tournament: usize,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            target_cells: None,
            moves: 200_000,
            t0: None,
            decay: 0.999,
            far_weight: 0.05,
            seed: 0,
            snapshot_period: 0,
            refresh_period: 5_000,
            tournament: 3,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::PreconditionFailed(format!("decay {} not in (0, 1)", self.decay)));
        }
        if !(0.0..=1.0).contains(&self.far_weight) {
            return Err(Error::PreconditionFailed(format!("far_weight {} not in [0, 1]", self.far_weight)));
        }
        if self.tournament == 0 {
            return Err(Error::PreconditionFailed("tournament size must be at least 1".into()));
        }
        if let Some(t) = self.t0 {
            if !(t >= 0.0) {
                return Err(Error::PreconditionFailed(format!("t0 {t} must be nonnegative")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub proposals: u64,
    pub accepted: u64,
    pub temperature: f64,
    /// Annealing objective (stencil perimeter plus exact pair sum) of the current state.
    pub energy: f64,
    /// Lowest objective seen so far.
    pub best: f64,
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub set: GridSet,
    pub initial: EnergyBreakdown,
    /// The best state re-evaluated with the reporting estimators.
    pub best: EnergyBreakdown,
    /// Objective value of the best state as tracked during the run.
    pub objective: f64,
    pub trace: Vec<TracePoint>,
    pub asymmetry: f64,
    pub components: Vec<usize>,
    pub proposals: u64,
    pub accepted: u64,
}

impl MinimizeResult {
    /// Components holding at least `fraction` of the cells.
    pub fn major_components(&self, fraction: f64) -> usize {
        let total: usize = self.components.iter().sum();
        self.components
            .iter()
            .filter(|&&c| c as f64 >= fraction * total as f64)
            .count()
    }
}

/// Random connected-looking blob of exactly `cells` cells: the top cells of
/// a sum of a few random bumps near the center of the box `[-half, half]`.
pub fn random_blob(dim: usize, h: f64, cells: usize, half: [f64; 3], seed: u64) -> Result<GridSet> {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for a in 0..dim {
        lo[a] = -half[a];
        hi[a] = half[a];
    }
    let mut s = GridSet::covering(dim, h, lo, hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = (cells as f64 * h.powi(dim as i32) / crate::quad::unit_ball_volume(dim)).powf(1.0 / dim as f64);
    let bumps: Vec<([f64; 3], f64)> = (0..5)
        .map(|_| {
            let mut c = [0.0; 3];
            for x in c.iter_mut().take(dim) {
                *x = rng.gen_range(-0.6..0.6) * r;
            }
            (c, rng.gen_range(0.5..1.0) * r)
        })
        .collect();
    let mut ranked: Vec<(f64, u64, usize)> = (0..s.len())
        .filter(|&i| !s.is_margin(i))
        .map(|i| {
            let x = s.center(i);
            let f: f64 = bumps
                .iter()
                .map(|(c, w)| {
                    let d2: f64 = (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum();
                    (-d2 / (w * w)).exp()
                })
                .sum();
            (f, rng.gen::<u64>(), i)
        })
        .collect();
    if ranked.len() < cells {
        return Err(Error::BoxTooSmall(format!("{cells} cells do not fit the box")));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, _, i) in &ranked[..cells] {
        s.set(i, true)?;
    }
    Ok(s)
}

struct State {
    set: GridSet,
    table: KernelTable,
    /// `sum_{y in F} T(x, y)` for every cell `x`, self term included.
    field: Vec<f64>,
    occupied: Vec<usize>,
    slot: Vec<usize>,
    perimeter: f64,
    nonlocal: f64,
    self_value: f64,
}

const NO_SLOT: usize = usize::MAX;

impl State {
    fn new(set: GridSet, k: &Kernel) -> Result<Self> {
        let table = KernelTable::for_set(k, &set);
        let field = potential_field(&set, k, NonlocalMethod::Convolution)?;
        let occupied: Vec<usize> = set.occupied().collect();
        let mut slot = vec![NO_SLOT; set.len()];
        for (p, &i) in occupied.iter().enumerate() {
            slot[i] = p;
        }
        let self_value = table.get([0; 3], [0; 3]);
        let mut s = Self {
            perimeter: perimeter(&set, PerimeterMethod::Stencil),
            nonlocal: 0.0,
            set,
            table,
            field,
            occupied,
            slot,
            self_value,
        };
        s.nonlocal = s.pair_sum();
        Ok(s)
    }

    fn pair_sum(&self) -> f64 {
        self.occupied.iter().map(|&i| self.field[i]).sum::<f64>() * self.set.cell_volume()
    }

    fn refresh(&mut self, k: &Kernel) -> Result<()> {
        self.field = potential_field(&self.set, k, NonlocalMethod::Convolution)?;
        self.nonlocal = self.pair_sum();
        Ok(())
    }

    fn energy(&self) -> f64 {
        self.perimeter + self.nonlocal
    }

    /// Energy change of moving the cell at `b` to the free cell `a`.
    fn delta(&mut self, b: usize, a: usize) -> (f64, f64) {
        let cv = self.set.cell_volume();
        let (cb, ca) = (self.set.coords(b), self.set.coords(a));
        let dv = 2.0 * cv * (self.field[a] - (self.field[b] - self.self_value) - self.table.get(ca, cb));
        let d1 = stencil_flip_delta(&self.set, b);
        self.set.set(b, false).expect("interior cell");
        let d2 = stencil_flip_delta(&self.set, a);
        self.set.set(b, true).expect("interior cell");
        (d1 + d2, dv)
    }

    fn apply(&mut self, b: usize, a: usize, dp: f64, dv: f64) {
        self.set.set(b, false).expect("interior cell");
        self.set.set(a, true).expect("interior cell");
        let p = self.slot[b];
        self.occupied[p] = a;
        self.slot[a] = p;
        self.slot[b] = NO_SLOT;
        self.perimeter += dp;
        self.nonlocal += dv;
        let shape = self.set.shape();
        let (ca, cb) = (self.set.coords(a), self.set.coords(b));
        for kk in 0..shape[2] {
            for j in 0..shape[1] {
                let start = shape[0] * (j + shape[1] * kk);
                let ra = self.table.row(ca, j, kk);
                let rb = self.table.row(cb, j, kk);
                let out = &mut self.field[start..start + shape[0]];
                for ((f, x), y) in out.iter_mut().zip(ra).zip(rb) {
                    *f += x - y;
                }
            }
        }
    }
}

pub fn anneal(init: &GridSet, k: &Kernel, cfg: &AnnealConfig) -> Result<MinimizeResult> {
    anneal_observed(init, k, cfg, |_, _| {})
}

/// Annealing with a callback receiving every trace point and the current set.
pub fn anneal_observed(
    init: &GridSet,
    k: &Kernel,
    cfg: &AnnealConfig,
    mut observe: impl FnMut(&TracePoint, &GridSet),
) -> Result<MinimizeResult> {
    cfg.validate()?;
    if init.is_empty() {
        return Err(Error::EmptySet);
    }
    k.check_grid(init.dim())?;
    if let Some(t) = cfg.target_cells {
        if t != init.count() {
            let cv = init.cell_volume();
            return Err(Error::MassMismatch(init.volume(), t as f64 * cv));
        }
    }
    let report = EnergyOptions::default();
    let initial = total_energy_with(init, k, report)?;
    let mut st = State::new(init.clone(), k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = init.dim();
    let h = init.h();
    let t0 = cfg.t0.unwrap_or(0.5 * h.powi(dim as i32 - 1));
    let sweep = st.occupied.len() as f64;
    let mut best_energy = st.energy();
    let mut best_cells = st.set.clone();
    let mut trace = Vec::new();
    let mut accepted = 0u64;
    let mut since_refresh = 0u64;
    let free_interior = |s: &GridSet, i: usize| !s.get(i) && !s.is_margin(i);
    for step in 0..cfg.moves {
        let temperature = t0 * cfg.decay.powf(step as f64 / sweep);
        // cell to remove: an occupied boundary cell, preferring protrusions
        let mut b = None;
        let mut b_score = 0;
        for _ in 0..cfg.tournament {
            if let Some(c) = random_boundary(&st, &mut rng) {
                let score = st.set.face_neighbors(c).filter(|&j| !st.set.get(j)).count();
                if b.is_none() || score > b_score {
                    (b, b_score) = (Some(c), score);
                }
            }
        }
        let Some(b) = b else { continue };
        // cell to add: a free neighbor of the boundary, preferring concave sites
        let a = if rng.gen::<f64>() < cfg.far_weight {
            let i = rng.gen_range(0..st.set.len());
            free_interior(&st.set, i).then_some(i)
        } else {
            let mut a = None;
            let mut a_score = 0;
            for _ in 0..cfg.tournament {
                let Some(c) = random_boundary(&st, &mut rng) else { continue };
                let nb: Vec<usize> = st.set.face_neighbors(c).filter(|&j| free_interior(&st.set, j)).collect();
                if nb.is_empty() {
                    continue;
                }
                let x = nb[rng.gen_range(0..nb.len())];
                let score = st.set.face_neighbors(x).filter(|&j| st.set.get(j)).count();
                if a.is_none() || score > a_score {
                    (a, a_score) = (Some(x), score);
                }
            }
            a
        };
        if let Some(a) = a {
            let (dp, dv) = st.delta(b, a);
            let de = dp + dv;
            let ok = de <= 0.0 || (temperature > 0.0 && rng.gen::<f64>() < (-de / temperature).exp());
            if ok {
                st.apply(b, a, dp, dv);
                accepted += 1;
                since_refresh += 1;
                if cfg.refresh_period > 0 && since_refresh >= cfg.refresh_period {
                    st.refresh(k)?;
                    since_refresh = 0;
                }
                if st.energy() < best_energy {
                    best_energy = st.energy();
                    best_cells.clone_from(&st.set);
                }
            }
        }
        if cfg.snapshot_period > 0 && (step + 1) % cfg.snapshot_period == 0 {
            let point = TracePoint {
                proposals: step + 1,
                accepted,
                temperature,
                energy: st.energy(),
                best: best_energy,
            };
            observe(&point, &st.set);
            trace.push(point);
        }
    }
    let final_point = TracePoint {
        proposals: cfg.moves,
        accepted,
        temperature: t0 * cfg.decay.powf(cfg.moves as f64 / sweep),
        energy: st.energy(),
        best: best_energy,
    };
    if trace.last().map_or(true, |p| p.proposals != cfg.moves) {
        observe(&final_point, &st.set);
        trace.push(final_point);
    }
    let best = total_energy_with(&best_cells, k, report)?;
    let ball = GridSet::lattice_ball(dim, h, [0.0; 3], best_cells.count())?;
    let asymmetry = fraenkel_asymmetry(&best_cells, &ball)?;
    let components = best_cells.component_sizes();
    Ok(MinimizeResult {
        set: best_cells,
        initial,
        best,
        objective: best_energy,
        trace,
        asymmetry,
        components,
        proposals: cfg.moves,
        accepted,
    })
}

/// A uniformly random occupied cell on the boundary, by rejection.
fn random_boundary(st: &State, rng: &mut ChaCha8Rng) -> Option<usize> {
    for _ in 0..64 {
        let c = st.occupied[rng.gen_range(0..st.occupied.len())];
        if st.set.is_boundary_cell(c) {
            return Some(c);
        }
    }
    None
}

/// The annealing objective of a set, evaluated from scratch.
#[cfg(test)]
pub(crate) fn objective(s: &GridSet, k: &Kernel) -> Result<f64> {
    let opts = EnergyOptions {
        perimeter: PerimeterMethod::Stencil,
        nonlocal: NonlocalMethod::Direct,
    };
    Ok(total_energy_with(s, k, opts)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(moves: u64, seed: u64) -> AnnealConfig {
        AnnealConfig {
            moves,
            seed,
            snapshot_period: 500,
            refresh_period: 700,
            ..AnnealConfig::default()
        }
    }

    #[test]
    fn zero_budget_returns_input() {
        let k = Kernel::coulomb();
        let blob = random_blob(3, 0.1, 300, [1.0; 3], 1).unwrap();
        let r = anneal(&blob, &k, &small_config(0, 0)).unwrap();
        assert_eq!(r.set, blob);
        assert_eq!(r.best, r.initial);
    }

    #[test]
    fn mass_is_conserved_and_best_is_monotone() {
        let k = Kernel::coulomb();
        let blob = random_blob(3, 0.1, 400, [0.9; 3], 2).unwrap();
        let mut counts = Vec::new();
        let r = anneal_observed(&blob, &k, &small_config(6000, 3), |_, s| counts.push(s.count())).unwrap();
        assert!(counts.iter().all(|&c| c == 400));
        assert_eq!(r.set.count(), 400);
        for w in r.trace.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
        assert!(r.objective <= objective(&blob, &k).unwrap() + 1e-12);
        let again = objective(&r.set, &k).unwrap();
        assert!((again - r.objective).abs() <= 1e-9 * again, "{again} {}", r.objective);
    }

    #[test]
    fn runs_are_reproducible() {
        let k = Kernel::new(2, 1.0).unwrap();
        let blob = random_blob(2, 0.05, 300, [1.0; 3], 4).unwrap();
        let a = anneal(&blob, &k, &small_config(3000, 9)).unwrap();
        let b = anneal(&blob, &k, &small_config(3000, 9)).unwrap();
        assert_eq!(a.set, b.set);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let k = Kernel::coulomb();
        let blob = random_blob(3, 0.1, 50, [0.6; 3], 1).unwrap();
        let bad = AnnealConfig { decay: 1.0, ..AnnealConfig::default() };
        assert!(anneal(&blob, &k, &bad).is_err());
        assert!(anneal(&blob.empty_like(), &k, &AnnealConfig::default()).is_err());
        let wrong = AnnealConfig { target_cells: Some(51), ..AnnealConfig::default() };
        assert!(matches!(anneal(&blob, &k, &wrong), Err(Error::MassMismatch(_, _))));
    }
}
