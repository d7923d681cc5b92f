//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. A free argument filters criteria by number or name substring,
//! e.g. `cargo test -p ldlab --test acceptance -- fission`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use ldlab::competitors::{cell_count, make_ball, rescale_set_to};
use ldlab::experiments::{
    crossover_bisection, crossover_closed_form, cut_inequality_probe, default_beta, equipartition_check,
    grid_crossover, interpolation_sweep, scaling_sweep,
};
use ldlab::grid::perimeter;
use ldlab::metrics::{monte_carlo_ball_energy, total_energy, BallOracle, EnergyOptions};
use ldlab::optimize::{anneal, fuglede_check, gradient_check, random_blob, AnnealConfig, StarContext, StarShape};
use ldlab::quad::{linear_fit, unit_sphere_area};
use ldlab::riesz::{boundary_exponent, log_ratio_drift, nonlocal_energy, posdef_gap, unit_ball_energy};
use ldlab::{GridSet, Kernel, NonlocalMethod, PerimeterMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), ldlab::Error>;

const SEEDS: u64 = 10;

fn stencil() -> EnergyOptions {
    EnergyOptions {
        perimeter: PerimeterMethod::Stencil,
        nonlocal: NonlocalMethod::Convolution,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Collects sub-checks into one verdict and a readable detail line.
#[derive(Default)]
struct Verdict {
    ok: bool,
    parts: Vec<String>,
    started: bool,
}

impl Verdict {
    fn check(&mut self, ok: bool, what: String) {
        if !self.started {
            self.ok = true;
            self.started = true;
        }
        self.ok &= ok;
        self.parts.push(if ok { what } else { format!("{what} [failed]") });
    }

    fn done(self) -> Outcome {
        Ok((self.ok && self.started, self.parts.join("; ")))
    }
}

fn ball_riesz_energy() -> Outcome {
    let k = Kernel::coulomb();
    let exact = 32.0 * PI * PI / 15.0;
    let mut v = Verdict::default();
    let quad = unit_ball_energy(&k);
    v.check(rel(quad, exact) < 1e-6, format!("quadrature {quad:.6}"));
    let (mc, err) = monte_carlo_ball_energy(&k, 10_000_000, 17);
    v.check((mc - exact).abs() < 4.0 * err, format!("Monte Carlo {mc:.4} +- {err:.4} (1e7 pairs)"));
    let h = 1.0 / 32.0;
    let ball = GridSet::rasterize(3, h, [-1.0 - h; 3], [1.0 + h; 3], |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1.0)?;
    let grid = nonlocal_energy(&ball, &k, NonlocalMethod::Convolution)?;
    v.check(rel(grid, exact) <= 0.02, format!("grid V(B1) at h = 1/32 {grid:.4} vs {exact:.4} ({:.2}%)", 100.0 * rel(grid, exact)));
    v.done()
}

fn boundary_asymptotics() -> Outcome {
    let mut v = Verdict::default();
    let e1 = boundary_exponent(&Kernel::new(3, 1.0)?, 1e-4, 1e-2, 9);
    v.check((e1 - 1.0).abs() <= 0.05, format!("alpha 1 exponent {e1:.4}"));
    let drift = log_ratio_drift(&Kernel::new(3, 2.0)?, 1e-4, 1e-2, 9);
    v.check(drift <= 0.10, format!("alpha 2 r ln(1/r) ratio drift {:.1}%", 100.0 * drift));
    let e25 = boundary_exponent(&Kernel::new(3, 2.5)?, 1e-6, 1e-4, 9);
    v.check((e25 - 0.5).abs() <= 0.05, format!("alpha 2.5 exponent {e25:.4}"));
    v.done()
}

fn fission_crossover() -> Outcome {
    let k = Kernel::coulomb();
    let o = BallOracle::new(&k);
    let closed = crossover_closed_form(&o);
    let mut v = Verdict::default();
    let bis = crossover_bisection(&o);
    v.check(rel(bis, closed) <= 0.03, format!("closed form {closed:.4}, bisection {bis:.4}"));
    let masses: Vec<f64> = (0..13).map(|i| 1.5 + 0.05 * i as f64).collect();
    let g = grid_crossover(&k, &masses, 1.0 / 24.0, Some(10.0), stencil())?;
    match g.crossover_separated {
        Some(c) => v.check(
            rel(c, closed) <= 0.03,
            format!(
                "grid h = 1/24, balls 10 diameters apart: {c:.4} with the pair interaction removed ({:.2}%), {} with it",
                100.0 * rel(c, closed),
                g.crossover_at_spacing.map_or("none".into(), |x| format!("{x:.4}"))
            ),
        ),
        None => v.check(false, "no grid crossover in [1.5, 2.1]".into()),
    }
    v.done()
}

fn scaling_law() -> Outcome {
    let k = Kernel::coulomb();
    let m_star = crossover_closed_form(&BallOracle::new(&k));
    let (a, b) = (1e-3f64.ln(), (1e3 * m_star).ln());
    let masses: Vec<f64> = (0..61).map(|i| (a + (b - a) * i as f64 / 60.0).exp()).collect();
    let r = scaling_sweep(&k, &masses)?;
    let mut v = Verdict::default();
    match (r.small_slope, r.large_slope) {
        (Some(s), Some(l)) => {
            v.check((s - 2.0 / 3.0).abs() <= 0.05, format!("small-mass slope {s:.4}"));
            v.check((l - 1.0).abs() <= 0.05, format!("large-mass slope {l:.4}"));
            v.check(true, format!("c = {:.3}, C = {:.3}", r.c_lower, r.c_upper));
        }
        _ => v.check(false, "too few masses on a branch".into()),
    }
    v.done()
}

fn interpolation() -> Outcome {
    let k = Kernel::coulomb();
    let r = interpolation_sweep(&k, &[0.01, 0.1, 1.0, 10.0], 12.0, 100, 2024, stencil())?;
    let mut v = Verdict::default();
    v.check(r.ball_spread <= 0.02, format!("ball ratio spread {:.2}% over m in [0.01, 10]", 100.0 * r.ball_spread));
    v.check(
        r.exceeding == 0 && r.random.len() >= 100,
        format!(
            "{} random sets, max {:.4} vs constant {:.4}, {} above",
            r.random.len(),
            r.random_max,
            r.constant,
            r.exceeding
        ),
    );
    v.done()
}

fn ball_optimality() -> Outcome {
    let k = Kernel::coulomb();
    let (m, h) = (0.5, 1.0 / 24.0);
    let cells = cell_count(3, m, h);
    let oracle = BallOracle::new(&k).energy(m);
    let lattice = GridSet::lattice_ball(3, h, [0.0; 3], cells)?;
    let tolerance = rel(total_energy(&lattice, &k)?.total, oracle);
    let mut good = 0;
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..SEEDS {
        let blob = random_blob(3, h, cells, [0.75; 3], seed)?;
        let cfg = AnnealConfig {
            moves: 2_000_000,
            decay: 0.97,
            seed,
            ..Default::default()
        };
        let r = anneal(&blob, &k, &cfg)?;
        let gap = rel(r.best.total, oracle);
        worst = (worst.0.max(r.asymmetry), worst.1.max(gap));
        if r.asymmetry <= 0.1 && gap <= 0.02 + tolerance {
            good += 1;
        }
    }
    Ok((
        good >= 8,
        format!(
            "{good}/{SEEDS} seeds with asymmetry <= 0.1 and energy within 2% + {:.2}% of the ball (worst {:.3}, {:.2}%)",
            100.0 * tolerance,
            worst.0,
            100.0 * worst.1
        ),
    ))
}

fn fission_mechanism() -> Outcome {
    let k = Kernel::coulomb();
    let (m, h) = (8.0, 1.0 / 8.0);
    let mut v = Verdict::default();
    let ball = make_ball(3, m, h)?;
    let probe = cut_inequality_probe(&ball, &k, &[10.0], stencil())?;
    v.check(
        probe.profitable,
        format!(
            "cut probe on the ball: best split changes E by {}",
            probe.best.as_ref().map_or("n/a".into(), |b| format!("{:.3} at t = {:.3}", b.delta, b.t))
        ),
    );
    let cells = cell_count(3, m, h);
    let mut split = 0;
    for seed in 0..SEEDS {
        let blob = random_blob(3, h, cells, [3.0; 3], seed)?;
        let cfg = AnnealConfig {
            moves: 2_000_000,
            decay: 0.97,
            seed,
            ..Default::default()
        };
        let r = anneal(&blob, &k, &cfg)?;
        if r.major_components(0.05) >= 2 {
            split += 1;
        }
    }
    v.check(split >= 8, format!("{split}/{SEEDS} annealed seeds end with >= 2 components"));
    v.done()
}

fn equipartition() -> Outcome {
    let k = Kernel::coulomb();
    let beta = default_beta(&k);
    let r = equipartition_check(&k, &[2.0, 4.0, 8.0, 16.0], beta)?;
    let mut v = Verdict::default();
    v.check(r.c_fit > 0.0, format!("beta {beta:.3}, {} chains, c_fit {:.4}", r.rows.len(), r.c_fit));
    v.check(r.spread <= 0.3, format!("spread {:.1}%", 100.0 * r.spread));
    v.check(r.upper_violations == 0, format!("{} upper-bound violations", r.upper_violations));
    v.done()
}

fn property_suites() -> Outcome {
    let mut v = Verdict::default();

    // perimeter of balls at h = r/16
    for n in [2, 3] {
        let h = 1.0 / 16.0;
        let ball = GridSet::rasterize(n, h, [-1.1; 3], [1.1; 3], |x| x[..n].iter().map(|c| c * c).sum::<f64>() < 1.0)?;
        let exact = unit_sphere_area(n);
        for method in [PerimeterMethod::SurfaceMesh, PerimeterMethod::Stencil] {
            let p = perimeter(&ball, method);
            v.check(rel(p, exact) <= 0.02, format!("{n}D {method:?} perimeter {:.2}%", 100.0 * rel(p, exact)));
        }
    }

    // direct against convolution
    let k = Kernel::coulomb();
    let blob = random_blob(3, 1.0 / 12.0, 900, [0.9; 3], 5)?;
    let d = nonlocal_energy(&blob, &k, NonlocalMethod::Direct)?;
    let c = nonlocal_energy(&blob, &k, NonlocalMethod::Convolution)?;
    v.check(rel(c, d) <= 0.005, format!("direct vs convolution {:.1e}", rel(c, d)));

    // positive definiteness on random pairs
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let f = random_blob(3, 1.0 / 10.0, 400, [0.8; 3], rng.gen())?;
        let g = random_blob(3, 1.0 / 10.0, 400, [0.8; 3], rng.gen())?;
        let gap = posdef_gap(&f, &g, &k, rng.gen_range(0.0..5.0))?;
        worst = worst.min(gap / nonlocal_energy(&f, &k, NonlocalMethod::Convolution)?);
    }
    v.check(worst >= -1e-6, format!("posdef gap over 50 pairs >= {worst:.2e} V"));

    // P and V exponents under dilation
    let h = 1.0 / 20.0;
    let base = GridSet::rasterize(3, h, [-1.0; 3], [1.0; 3], |x| {
        (x[0] / 0.9).powi(2) + (x[1] / 0.6).powi(2) + (x[2] / 0.5).powi(2) < 1.0
    })?;
    let (mut lp, mut lv, mut ll) = (vec![], vec![], vec![]);
    for i in 0..4 {
        let ell = 2f64.powf(i as f64 / 3.0);
        let target = (base.count() as f64 * ell.powi(3)).round() as usize;
        let s = rescale_set_to(&base, ell, target, 0)?;
        let e = total_energy(&s, &k)?;
        ll.push(ell.ln());
        lp.push(e.perimeter.ln());
        lv.push(e.nonlocal.ln());
    }
    let (sp, sv) = (linear_fit(&ll, &lp).0, linear_fit(&ll, &lv).0);
    v.check(rel(sp, 2.0) <= 0.02, format!("P exponent {sp:.4}"));
    v.check(rel(sv, 5.0) <= 0.02, format!("V exponent {sv:.4}"));

    // Fuglede ratio under sample doubling
    let a = fuglede_check(3, 6, 20, 0.1, 0)?;
    let b = fuglede_check(3, 6, 40, 0.1, 0)?;
    v.check(
        rel(b.max_ratio, a.max_ratio) <= 0.2,
        format!("Fuglede max ratio {:.2} -> {:.2}", a.max_ratio, b.max_ratio),
    );

    // Richardson ratio of the finite-difference V gradient
    for (n, amplitude) in [(3, 0.1), (2, 0.15)] {
        let ctx = StarContext::new(Kernel::new(n, 1.0)?, 3, 1.0 / 16.0)?;
        let shape = StarShape::random(ctx.basis(), amplitude, 1);
        let r = gradient_check(&shape, &ctx)?;
        v.check(
            (3.5..=4.5).contains(&r.richardson_ratio),
            format!("{n}D Richardson ratio {:.3}", r.richardson_ratio),
        );
    }
    v.done()
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("ball Riesz energy", ball_riesz_energy),
        ("boundary asymptotics", boundary_asymptotics),
        ("fission crossover", fission_crossover),
        ("scaling law", scaling_law),
        ("interpolation inequality", interpolation),
        ("ball optimality", ball_optimality),
        ("fission by annealing", fission_mechanism),
        ("equipartition", equipartition),
        ("property suites", property_suites),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    if std::env::args().any(|a| a == "--list") {
        for (i, (name, _)) in criteria.iter().enumerate() {
            println!("{} {name}: test", i + 1);
        }
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if let Some(f) = &filter {
            if *f != id && !name.contains(f.as_str()) {
                continue;
            }
        }
        ran += 1;
        let t = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] {id}. {name}: {detail} ({:.1} s)",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
