use std::path::Path;

use ldlab::competitors::{ball_radius, cell_count, make_ball, CompetitorSpec};
use ldlab::experiments::{
    best_chain, chain_diameter, chain_oracle, cut_inequality_probe, default_beta, density_bound_check,
    diameter_bounds_check, equipartition_check, fission_scan, grid_crossover, interpolation_sweep, local_masses,
    scaling_sweep, DiameterEntry,
};
use ldlab::metrics::{
    check_qiso, monte_carlo_ball_energy, total_energy_with, BallOracle, EnergyBreakdown, EnergyOptions,
};
use ldlab::optimize::{
    anneal_observed, fuglede_check, gradient_check, random_blob, star_descent, StarContext, StarShape,
};
use ldlab::quad::unit_ball_volume;
use ldlab::riesz::{
    ball_profile, boundary_drop, boundary_exponent, estimate_self_energy, log_ratio_drift, nonlocal_energy, posdef_gap_with,
    potential_at, potential_field, unit_ball_energy, SelfEnergyTable,
};
use ldlab::{Error, GridSet, Kernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::run::Run;
use crate::{Check, StarMode, Study, VariantArg, Verb};

pub fn dispatch(run: &mut Run, verb: &Verb) -> Result<(), CliError> {
    match verb {
        Verb::Energy { input } => energy(run, input),
        Verb::Potential {
            input,
            ball,
            r_out,
            points,
            at,
        } => {
            if *ball {
                ball_potential(run, *r_out, *points)
            } else {
                let input = input.as_deref().expect("clap requires --input without --ball");
                potential(run, input, at.as_deref())
            }
        }
        Verb::Competitor {
            variant,
            mass,
            count,
            spacing,
            scale,
            t,
            separation,
            axis,
        } => {
            let mut spec = json!({ "variant": variant_name(*variant), "mass": mass });
            let obj = spec.as_object_mut().unwrap();
            let mut put = |k: &str, v: serde_json::Value| {
                obj.insert(k.into(), v);
            };
            let optional = [
                ("count", count.map(|v| json!(v))),
                ("spacing", spacing.map(|v| json!(v))),
                ("scale", scale.map(|v| json!(v))),
                ("t", t.map(|v| json!(v))),
                ("separation", separation.map(|v| json!(v))),
                ("axis", axis.map(|v| json!(v))),
            ];
            for (key, value) in optional {
                if let Some(v) = value {
                    put(key, v);
                }
            }
            let spec: CompetitorSpec = serde_json::from_value(spec)
                .map_err(|e| CliError::Usage(format!("competitor {}: {e}", variant_name(*variant))))?;
            competitor(run, &spec)
        }
        Verb::Minimize { input, snapshots, .. } => minimize(run, input.as_deref(), *snapshots),
        Verb::Star {
            mode,
            degree,
            epsilon,
            steps,
            step_size,
            amplitude,
        } => star(run, *mode, *degree, *epsilon, *steps, *step_size, *amplitude),
        Verb::Sweep {
            study, input, mass, ..
        } => sweep(run, *study, input.as_deref(), *mass),
        Verb::Verify { check, input } => verify(run, *check, input.as_deref()),
        Verb::Calibrate { pairs, draws } => calibrate(run, pairs, *draws),
    }
}

fn variant_name(v: VariantArg) -> &'static str {
    match v {
        VariantArg::Ball => "ball",
        VariantArg::BallChain => "ball_chain",
        VariantArg::Rescaled => "rescaled",
        VariantArg::SplitTranslate => "split_translate",
        VariantArg::TruncatedBall => "truncated_ball",
    }
}

fn options(run: &Run) -> EnergyOptions {
    EnergyOptions {
        perimeter: run.cfg.grid.perimeter,
        nonlocal: run.cfg.grid.nonlocal,
    }
}

/// The configured kernel, which must match the dimension of a raster.
fn kernel_for(run: &Run, s: &GridSet) -> Result<Kernel, CliError> {
    let k = run.cfg.kernel();
    if k.n() != s.dim() {
        return Err(CliError::Usage(format!(
            "raster is {}-dimensional but kernel.n = {}; pass --n {}",
            s.dim(),
            k.n(),
            s.dim()
        )));
    }
    Ok(k)
}

fn masses_or(run: &Run, default: Vec<f64>) -> Vec<f64> {
    if run.cfg.sweep.masses.is_empty() {
        default
    } else {
        run.cfg.sweep.masses.clone()
    }
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Serialize)]
struct EnergyRow {
    label: String,
    n: usize,
    alpha: f64,
    h: f64,
    cells: usize,
    mass: f64,
    perimeter: f64,
    nonlocal: f64,
    total: f64,
}

impl EnergyRow {
    fn new(label: &str, s: &GridSet, e: &EnergyBreakdown) -> Self {
        Self {
            label: label.into(),
            n: e.kernel.n(),
            alpha: e.kernel.alpha(),
            h: s.h(),
            cells: s.count(),
            mass: e.mass,
            perimeter: e.perimeter,
            nonlocal: e.nonlocal,
            total: e.total,
        }
    }
}

fn print_energy(e: &EnergyBreakdown) {
    println!("P = {}", e.perimeter);
    println!("V = {}", e.nonlocal);
    println!("E = {}", e.total);
    println!("m = {}", e.mass);
}

fn energy(run: &mut Run, input: &Path) -> Result<(), CliError> {
    let s = run.read_raster(input)?;
    let k = kernel_for(run, &s)?;
    let e = total_energy_with(&s, &k, options(run))?;
    print_energy(&e);
    run.write_csv(".csv", &[EnergyRow::new(&input.display().to_string(), &s, &e)])?;
    run.result("energy", e)?;
    Ok(())
}

#[derive(Serialize)]
struct ProfileRow {
    r: f64,
    v: f64,
}

fn ball_potential(run: &mut Run, r_out: f64, points: usize) -> Result<(), CliError> {
    if !(r_out > 0.0) || points < 2 {
        return Err(CliError::Usage("--r-out must be positive and --points at least 2".into()));
    }
    let k = run.cfg.kernel();
    let rows: Vec<ProfileRow> = ball_profile(&k, r_out, points)
        .into_iter()
        .map(|(r, v)| ProfileRow { r, v })
        .collect();
    run.write_csv(".csv", &rows)?;
    run.result("v_center", rows[0].v)?;
    run.result("unit_ball_energy", unit_ball_energy(&k))?;
    Ok(())
}

#[derive(Serialize)]
struct FieldRow {
    i: usize,
    j: usize,
    k: usize,
    x: f64,
    y: f64,
    z: f64,
    occupied: u8,
    v: f64,
}

fn potential(run: &mut Run, input: &Path, at: Option<&[f64]>) -> Result<(), CliError> {
    let s = run.read_raster(input)?;
    let k = kernel_for(run, &s)?;
    let field = potential_field(&s, &k, run.cfg.grid.nonlocal)?;
    let rows: Vec<FieldRow> = (0..s.len())
        .filter(|&i| !s.is_margin(i))
        .map(|i| {
            let [a, b, c] = s.coords(i);
            let x = s.center(i);
            FieldRow {
                i: a,
                j: b,
                k: c,
                x: x[0],
                y: x[1],
                z: x[2],
                occupied: s.get(i) as u8,
                v: field[i],
            }
        })
        .collect();
    run.write_csv(".csv", &rows)?;
    let (vmin, vmax) = s
        .occupied()
        .map(|i| field[i])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    run.result("v_min_on_set", vmin)?;
    run.result("v_max_on_set", vmax)?;
    if let Some(x) = at {
        if x.len() != s.dim() {
            return Err(CliError::Usage(format!("--at needs {} coordinates", s.dim())));
        }
        let v = potential_at(&s, &k, x)?;
        println!("v({}) = {v}", x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "));
        run.result("at", json!({ "x": x, "v": v }))?;
    }
    Ok(())
}

fn competitor(run: &mut Run, spec: &CompetitorSpec) -> Result<(), CliError> {
    let k = run.cfg.kernel();
    let n = k.n();
    let s = spec.build(n, run.cfg.grid.h)?;
    let e = total_energy_with(&s, &k, options(run))?;
    print_energy(&e);
    run.write_raster(".ras", &s)?;
    run.write_csv(".csv", &[EnergyRow::new("competitor", &s, &e)])?;
    run.result("spec", spec)?;
    run.result("energy", e)?;
    run.result("ball_oracle", BallOracle::new(&k).energy(s.volume()))?;
    Ok(())
}

fn minimize(run: &mut Run, input: Option<&Path>, snapshots: bool) -> Result<(), CliError> {
    let k = run.cfg.kernel();
    let n = k.n();
    let init = match input {
        Some(p) => {
            let s = run.read_raster(p)?;
            kernel_for(run, &s)?;
            s
        }
        None => {
            let (m, h) = (run.cfg.anneal.mass, run.cfg.grid.h);
            let half = run.cfg.grid.box_half.unwrap_or(2.0 * ball_radius(n, m));
            let mut box_half = [0.0; 3];
            box_half[..n].fill(half);
            random_blob(n, h, cell_count(n, m, h), box_half, run.cfg.anneal.seed)?
        }
    };
    let cfg = run.cfg.anneal.to_core();
    let mut frames: Vec<(u64, GridSet)> = Vec::new();
    let res = anneal_observed(&init, &k, &cfg, |tp, set| {
        if snapshots {
            frames.push((tp.proposals, set.clone()));
        }
    })?;
    run.write_raster("-init.ras", &init)?;
    run.write_raster(".ras", &res.set)?;
    for (p, set) in &frames {
        run.write_raster(&format!("-snap-{p:010}.ras"), set)?;
    }
    run.write_csv("-trace.csv", &res.trace)?;
    let oracle = BallOracle::new(&k).energy(res.best.mass);
    println!("E = {} (ball {oracle})", res.best.total);
    println!("asymmetry = {}", res.asymmetry);
    println!("components = {:?}", res.components);
    run.result("initial", res.initial)?;
    run.result("best", res.best)?;
    run.result("objective", res.objective)?;
    run.result("ball_oracle", oracle)?;
    run.result("asymmetry", res.asymmetry)?;
    run.result("components", &res.components)?;
    run.result("major_components", res.major_components(0.05))?;
    run.result("proposals", res.proposals)?;
    run.result("accepted", res.accepted)?;
    let monotone = res.trace.windows(2).all(|w| w[1].best <= w[0].best);
    run.check(monotone, "best-so-far trace increased");
    run.check(res.set.count() == init.count(), "annealing changed the cell count");
    Ok(())
}

#[derive(Serialize)]
struct StepRow {
    step: usize,
    energy: f64,
}

#[derive(Serialize)]
struct CoeffRow {
    index: usize,
    degree: usize,
    value: f64,
}

/// Linearized bound on `(|rho|^2 + |grad rho|^2) / D` for near-spheres in 3D.
fn fuglede_bound(n: usize) -> Option<f64> {
    (n == 3).then(|| 2.0 * 3.0 * unit_ball_volume(3) * 7.0 / 4.0)
}

fn star(
    run: &mut Run,
    mode: StarMode,
    degree: usize,
    eps: f64,
    steps: usize,
    step_size: f64,
    amplitude: Option<f64>,
) -> Result<(), CliError> {
    // small perturbations leave the finite differences of V at the level of
    // lattice noise in 2D, so the gradient check defaults to a larger one
    let amplitude = amplitude.unwrap_or(match mode {
        StarMode::Descent => 0.05,
        StarMode::Gradient => 0.15,
        StarMode::Fuglede => 0.1,
    });
    let k = run.cfg.kernel();
    let n = k.n();
    let seed = run.cfg.sweep.seed;
    if !(amplitude > 0.0 && amplitude < 1.0) {
        return Err(CliError::Usage("--amplitude must lie in (0, 1)".into()));
    }
    if degree < 2 {
        return Err(CliError::Usage("--degree must be at least 2".into()));
    }
    match mode {
        StarMode::Fuglede => {
            let r = fuglede_check(n, degree, run.cfg.sweep.samples, amplitude, seed)?;
            println!("max ratio = {} over {} shapes", r.max_ratio, r.samples);
            run.result("report", &r)?;
            if let Some(b) = fuglede_bound(n) {
                run.result("linearized_bound", b)?;
                run.check(
                    r.max_ratio <= 1.1 * b,
                    format!("Fuglede ratio {} above 1.1 x linearized bound {b}", r.max_ratio),
                );
            }
        }
        StarMode::Gradient => {
            let ctx = StarContext::new(k, degree, run.cfg.grid.h)?;
            let shape = StarShape::random(ctx.basis(), amplitude, seed);
            let r = gradient_check(&shape, &ctx)?;
            println!("perimeter gradient error = {}", r.perimeter_error);
            println!("Richardson ratio = {}", r.richardson_ratio);
            run.result("report", &r)?;
            run.check(
                (3.5..=4.5).contains(&r.richardson_ratio),
                format!("Richardson ratio {} outside [3.5, 4.5]", r.richardson_ratio),
            );
            run.check(
                r.perimeter_error <= 1e-4,
                format!("perimeter gradient error {} above 1e-4", r.perimeter_error),
            );
        }
        StarMode::Descent => {
            if eps < 0.0 {
                return Err(CliError::Usage("--epsilon must be nonnegative".into()));
            }
            let ctx = StarContext::new(k, degree, run.cfg.grid.h)?;
            let init = StarShape::random(ctx.basis(), amplitude, seed);
            let r = star_descent(&init, &ctx, eps, steps, step_size)?;
            let rows: Vec<StepRow> = r
                .energies
                .iter()
                .enumerate()
                .map(|(step, &energy)| StepRow { step, energy })
                .collect();
            run.write_csv(".csv", &rows)?;
            let coeffs: Vec<CoeffRow> = r
                .shape
                .coeffs
                .iter()
                .enumerate()
                .map(|(index, &value)| CoeffRow {
                    index,
                    degree: ctx.basis().degree_of(index),
                    value,
                })
                .collect();
            run.write_csv("-coeffs.csv", &coeffs)?;
            println!(
                "E {} -> {} in {} steps, sup|rho| {} -> {}",
                r.energies[0],
                r.energies.last().unwrap(),
                r.steps,
                ctx.sup_rho(&init)?,
                r.sup_rho
            );
            run.result("epsilon", eps)?;
            run.result("initial_sup_rho", ctx.sup_rho(&init)?)?;
            run.result("sup_rho", r.sup_rho)?;
            run.result("steps", r.steps)?;
            run.result("converged", r.converged)?;
            run.result("gradient_norm", r.gradient_norm)?;
            run.check(
                r.energies.windows(2).all(|w| w[1] <= w[0]),
                "descent energy increased",
            );
        }
    }
    Ok(())
}

/// The raster given by `--input`, or else the ball of `--mass`.
fn probe_set(run: &mut Run, input: Option<&Path>, mass: Option<f64>) -> Result<GridSet, CliError> {
    match (input, mass) {
        (Some(p), None) => run.read_raster(p),
        (None, Some(m)) if m > 0.0 => {
            let s = make_ball(run.cfg.kernel.n, m, run.cfg.grid.h)?;
            run.note_grid(&s);
            Ok(s)
        }
        (None, Some(m)) => Err(CliError::Usage(format!("--mass must be positive, got {m}"))),
        _ => Err(CliError::Usage("give exactly one of --input and --mass".into())),
    }
}

fn sweep(run: &mut Run, study: Study, input: Option<&Path>, mass: Option<f64>) -> Result<(), CliError> {
    let k = run.cfg.kernel();
    let n = k.n();
    let oracle = BallOracle::new(&k);
    let precondition = |e: Error| match e {
        Error::PreconditionFailed(m) => CliError::Usage(m),
        other => CliError::Core(other),
    };
    match study {
        Study::Fission => {
            let masses = masses_or(run, log_grid(0.1, 20.0, 40));
            let scan = fission_scan(&k, &masses).map_err(precondition)?;
            run.write_csv(".csv", &scan.rows)?;
            println!("crossover = {} (closed form {})", scan.crossover, scan.crossover_closed_form);
            run.result("crossover", scan.crossover)?;
            run.result("crossover_closed_form", scan.crossover_closed_form)?;
            let monotone = scan.rows.windows(2).all(|w| w[1].best_count >= w[0].best_count);
            run.check(monotone, "optimal ball count decreased with mass");
            let bounded = scan.rows.iter().all(|r| r.best_count <= r.mass.ceil() as usize + 1);
            run.check(bounded, "optimal ball count above ceil(m) + 1");
            let rel = (scan.crossover - scan.crossover_closed_form).abs() / scan.crossover_closed_form;
            run.check(rel <= 0.03, format!("bisection crossover off the closed form by {rel}"));
        }
        Study::Crossover => {
            let m_star = oracle_crossover(&oracle);
            let masses = masses_or(run, (0..13).map(|i| m_star * (0.85 + 0.025 * i as f64)).collect());
            let spacing = run.cfg.sweep.spacing_factor;
            let r = grid_crossover(&k, &masses, run.cfg.grid.h, Some(spacing), options(run)).map_err(precondition)?;
            run.write_csv(".csv", &r.rows)?;
            println!(
                "crossover separated = {:?}, at spacing = {:?}, closed form = {m_star}",
                r.crossover_separated, r.crossover_at_spacing
            );
            run.result("crossover_separated", r.crossover_separated)?;
            run.result("crossover_at_spacing", r.crossover_at_spacing)?;
            run.result("crossover_closed_form", m_star)?;
            match r.crossover_separated {
                Some(c) => {
                    let rel = (c - m_star).abs() / m_star;
                    run.check(rel <= 0.03, format!("grid crossover {c} off the closed form by {rel}"));
                }
                None => run.check(false, "no crossover inside the mass range"),
            }
        }
        Study::Scaling => {
            let m_star = oracle_crossover(&oracle);
            let masses = masses_or(run, log_grid(1e-3, 1e3 * m_star, 43));
            let r = scaling_sweep(&k, &masses).map_err(precondition)?;
            #[derive(Serialize)]
            struct Row<'a> {
                mass: f64,
                best: &'a str,
                perimeter: f64,
                nonlocal: f64,
                total: f64,
            }
            let rows: Vec<Row> = r
                .records
                .iter()
                .map(|rec| {
                    let b = rec.best_energy();
                    Row {
                        mass: rec.mass,
                        best: rec.best_id(),
                        perimeter: b.perimeter,
                        nonlocal: b.nonlocal,
                        total: b.total,
                    }
                })
                .collect();
            run.write_csv(".csv", &rows)?;
            let expect_small = (n as f64 - 1.0) / n as f64;
            println!("slopes: small {:?} (want {expect_small}), large {:?} (want 1)", r.small_slope, r.large_slope);
            run.result("crossover", r.crossover)?;
            run.result("small_slope", r.small_slope)?;
            run.result("large_slope", r.large_slope)?;
            run.result("c_lower", r.c_lower)?;
            run.result("c_upper", r.c_upper)?;
            run.result("interpolation_max", r.interpolation_max)?;
            if let Some(s) = r.small_slope {
                run.check((s - expect_small).abs() <= 0.05, format!("small-mass slope {s}"));
            }
            if let Some(s) = r.large_slope {
                run.check((s - 1.0).abs() <= 0.05, format!("large-mass slope {s}"));
            }
        }
        Study::Equipartition => {
            let masses = masses_or(run, vec![2.0, 4.0, 8.0, 16.0]);
            let beta = run.cfg.sweep.beta.unwrap_or_else(|| default_beta(&k));
            let r = equipartition_check(&k, &masses, beta).map_err(precondition)?;
            run.write_csv(".csv", &r.rows)?;
            println!("c_fit = {}, spread = {}", r.c_fit, r.spread);
            run.result("beta", r.beta)?;
            run.result("c_fit", r.c_fit)?;
            run.result("per_mass", &r.per_mass)?;
            run.result("spread", r.spread)?;
            run.check(r.spread <= 0.3, format!("min(P, V)/m spread {} above 30%", r.spread));
            run.check(r.upper_violations == 0, "max(P, V) above beta m");
        }
        Study::Diameter => {
            let masses = masses_or(run, vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
            let beta = run.cfg.sweep.beta.unwrap_or_else(|| default_beta(&k));
            let factor = run.cfg.sweep.spacing_factor;
            let mut entries = Vec::new();
            #[derive(Serialize)]
            struct Row {
                mass: f64,
                candidate: String,
                count: usize,
                diameter: f64,
                energy: f64,
            }
            let mut rows = Vec::new();
            for &m in &masses {
                let (count, _) = best_chain(&oracle, m);
                for c in [1, count] {
                    let d = chain_diameter(n, m, c, factor);
                    // point-mass interaction of the balls at the chain spacing
                    let mu = m / c as f64;
                    let spacing = factor * 2.0 * ball_radius(n, mu);
                    let cross: f64 = (0..c)
                        .flat_map(|i| (0..c).filter(move |&j| j != i).map(move |j| (i, j)))
                        .map(|(i, j)| mu * mu * k.eval_sq(((i as f64 - j as f64) * spacing).powi(2)))
                        .sum();
                    let e = chain_oracle(&oracle, m, c) + cross;
                    entries.push(DiameterEntry {
                        mass: m,
                        diameter: d,
                        energy: Some(e),
                    });
                    rows.push(Row {
                        mass: m,
                        candidate: if c == 1 { "ball".into() } else { format!("chain-{c}") },
                        count: c,
                        diameter: d,
                        energy: e,
                    });
                    if count == 1 {
                        break;
                    }
                }
            }
            let r = diameter_bounds_check(&entries, &k, beta).map_err(precondition)?;
            run.write_csv(".csv", &rows)?;
            println!("c = {}, C = {}", r.c_lower, r.c_upper);
            run.result("beta", beta)?;
            run.result("c_lower", r.c_lower)?;
            run.result("c_upper", r.c_upper)?;
            run.result("violations", &r.violations)?;
            run.check(r.violations.is_empty(), "candidate with E <= beta m below the diameter floor");
        }
        Study::Density => {
            let s = probe_set(run, input, mass)?;
            kernel_for(run, &s)?;
            let r = density_bound_check(&s, run.cfg.sweep.density_threshold);
            #[derive(Serialize)]
            struct Row {
                x: f64,
                y: f64,
                z: f64,
                local_mass: f64,
            }
            let rows: Vec<Row> = local_masses(&s)
                .into_iter()
                .map(|(i, local_mass)| {
                    let c = s.center(i);
                    Row {
                        x: c[0],
                        y: c[1],
                        z: c[2],
                        local_mass,
                    }
                })
                .collect();
            run.write_csv(".csv", &rows)?;
            println!("min local mass = {:?} (normalized {:?})", r.min_local_mass, r.normalized);
            run.result("report", &r)?;
            run.check(r.violations == 0, format!("{} cells below the density floor", r.violations));
        }
        Study::Cut => {
            let s = probe_set(run, input, mass)?;
            let k = kernel_for(run, &s)?;
            let r = cut_inequality_probe(&s, &k, &run.cfg.sweep.separations, options(run))?;
            run.write_csv("-cuts.csv", &r.cuts)?;
            run.write_csv("-splits.csv", &r.splits)?;
            println!("profitable split: {}", r.profitable);
            if let Some(b) = &r.best {
                println!("best: t = {}, R = {}, delta = {}", b.t, b.separation, b.delta);
            }
            run.result("axis", r.axis)?;
            run.result("reflected", r.reflected)?;
            run.result("mass", r.mass)?;
            run.result("extent", r.extent)?;
            run.result("energy", r.energy)?;
            run.result("section_failures", &r.section_failures)?;
            run.result("profitable", r.profitable)?;
            run.result("best", &r.best)?;
        }
    }
    Ok(())
}

fn oracle_crossover(o: &BallOracle) -> f64 {
    ldlab::experiments::crossover_closed_form(o)
}

#[derive(Serialize)]
struct DropRow {
    r: f64,
    drop: f64,
}

#[derive(Serialize)]
struct GapRow {
    pair: usize,
    c: f64,
    cells: usize,
    gap: f64,
    v_f: f64,
}

fn verify(run: &mut Run, check: Check, input: Option<&Path>) -> Result<(), CliError> {
    let k = run.cfg.kernel();
    let n = k.n();
    let seed = run.cfg.sweep.seed;
    match check {
        Check::Interpolation => {
            let masses = masses_or(run, vec![0.01, 0.1, 1.0, 10.0]);
            let mut opts = options(run);
            // the smoothed mesh estimator loses small pieces of random sets
            opts.perimeter = ldlab::PerimeterMethod::Stencil;
            let r = interpolation_sweep(&k, &masses, run.cfg.sweep.cells_per_radius, run.cfg.sweep.samples, seed, opts)?;
            let rows: Vec<_> = r.balls.iter().chain(&r.random).collect();
            run.write_csv(".csv", &rows)?;
            println!(
                "constant {}, ball spread {}, random max {}, exceeding {}",
                r.constant, r.ball_spread, r.random_max, r.exceeding
            );
            run.result("constant", r.constant)?;
            run.result("ball_spread", r.ball_spread)?;
            run.result("random_max", r.random_max)?;
            run.result("exceeding", r.exceeding)?;
            run.check(r.ball_spread <= 0.02, format!("ball ratios spread {} above 2%", r.ball_spread));
            run.check(r.exceeding == 0, format!("{} random sets exceed the constant", r.exceeding));
        }
        Check::BallEnergy => {
            let h = run.cfg.grid.h;
            let ball = GridSet::rasterize(n, h, [-1.0 - h; 3], [1.0 + h; 3], |x| {
                x[..n].iter().map(|c| c * c).sum::<f64>() < 1.0
            })?;
            run.note_grid(&ball);
            let grid = nonlocal_energy(&ball, &k, run.cfg.grid.nonlocal)?;
            let exact = unit_ball_energy(&k);
            let (mc, mc_err) = monte_carlo_ball_energy(&k, run.cfg.sweep.samples.max(2), seed);
            let rel = (grid - exact).abs() / exact;
            println!("V(B1): grid {grid}, quadrature {exact}, Monte Carlo {mc} +- {mc_err}");
            run.result("grid", grid)?;
            run.result("grid_volume", ball.volume())?;
            run.result("quadrature", exact)?;
            run.result("monte_carlo", mc)?;
            run.result("monte_carlo_stderr", mc_err)?;
            run.result("relative_error", rel)?;
            run.check(rel <= 0.02, format!("grid V(B1) off by {rel}"));
            if 2.0 * k.alpha() < n as f64 {
                run.check(
                    (mc - exact).abs() <= 5.0 * mc_err + 1e-12,
                    format!("Monte Carlo {mc} +- {mc_err} disagrees with quadrature {exact}"),
                );
            }
        }
        Check::Asymptotics => {
            let gap = n as f64 - k.alpha();
            let (lo, hi) = if gap < 1.0 { (1e-6, 1e-4) } else { (1e-4, 1e-2) };
            let rows: Vec<DropRow> = boundary_drop(&k, lo, hi, 9)
                .into_iter()
                .map(|(r, drop)| DropRow { r, drop })
                .collect();
            run.write_csv(".csv", &rows)?;
            if (gap - 1.0).abs() < 1e-12 {
                let drift = log_ratio_drift(&k, lo, hi, 9);
                println!("r ln r ratio drift = {drift}");
                run.result("ratio_drift", drift)?;
                run.check(drift <= 0.1, format!("r ln(1/r) ratio drifts by {drift}"));
            } else {
                let e = boundary_exponent(&k, lo, hi, 9);
                let want = gap.min(1.0);
                println!("exponent = {e} (want {want})");
                run.result("exponent", e)?;
                run.result("expected", want)?;
                run.check((e - want).abs() <= 0.05, format!("boundary exponent {e}, want {want}"));
            }
        }
        Check::Posdef => {
            let h = run.cfg.grid.h;
            let m = run.cfg.anneal.mass;
            let cells = cell_count(n, m, h);
            let half = [2.0 * ball_radius(n, m); 3];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::new();
            for pair in 0..run.cfg.sweep.samples {
                let f = random_blob(n, h, cells, half, rng.gen())?;
                let g = random_blob(n, h, cells, half, rng.gen())?;
                let c = rng.gen_range(0.0..5.0);
                let gap = posdef_gap_with(&f, &g, &k, c, run.cfg.grid.nonlocal)?;
                let v_f = nonlocal_energy(&f, &k, run.cfg.grid.nonlocal)?;
                rows.push(GapRow { pair, c, cells, gap, v_f });
            }
            run.write_csv(".csv", &rows)?;
            let worst = rows.iter().map(|r| r.gap / r.v_f).fold(f64::INFINITY, f64::min);
            println!("smallest gap / V(F) = {worst}");
            run.result("pairs", rows.len())?;
            run.result("min_relative_gap", worst)?;
            let tol = if run.cfg.grid.nonlocal == ldlab::NonlocalMethod::Direct { 1e-9 } else { 1e-6 };
            let bad = rows.iter().filter(|r| r.gap < -tol * r.v_f).count();
            run.check(bad == 0, format!("{bad} pairs with a negative gap"));
        }
        Check::Qiso => {
            let p = input.ok_or_else(|| CliError::Usage("qiso needs --input".into()))?;
            let s = run.read_raster(p)?;
            match check_qiso(&s) {
                Ok(r) => {
                    println!("asymmetry {}, deficit {}, ratio {}", r.asymmetry, r.deficit, r.ratio);
                    run.result("report", &r)?;
                }
                Err(Error::DegenerateDeficit(d)) => {
                    println!("deficit {d} is within the estimator tolerance: indistinguishable from a ball");
                    run.result("degenerate_deficit", d)?;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn calibrate(run: &mut Run, pairs: &[String], draws: usize) -> Result<(), CliError> {
    let mut parsed = Vec::new();
    for p in pairs {
        let bad = || CliError::Usage(format!("bad pair `{p}`, expected n:alpha"));
        let (a, b) = p.split_once(':').ok_or_else(bad)?;
        let n: usize = a.trim().parse().map_err(|_| bad())?;
        let alpha: f64 = b.trim().parse().map_err(|_| bad())?;
        Kernel::new(n, alpha).map_err(|e| CliError::Usage(e.to_string()))?;
        parsed.push((n, alpha));
    }
    if draws == 0 {
        return Err(CliError::Usage("--draws must be positive".into()));
    }
    let seed = run.cfg.sweep.seed;
    let table = SelfEnergyTable {
        entries: parsed
            .iter()
            .map(|&(n, a)| estimate_self_energy(n, a, draws, seed))
            .collect(),
    };
    let text = table.to_text();
    print!("{text}");
    run.write_text(".txt", &text)?;
    run.result("entries", table.entries.len())?;
    Ok(())
}
