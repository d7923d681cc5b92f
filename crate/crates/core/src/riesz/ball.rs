//! Potential and energy of the unit ball by radial quadrature.
//!
//! `v_B(t) = int_0^1 s^(n-1) A(s, t) ds` where `A(s, t)` is the integral of
//! `|s w - t e|^(-alpha)` over unit directions `w`. For `n = 3` the
//! spherical average is elementary; otherwise it is a one-dimensional
//! integral in the polar angle.

use super::Kernel;
use crate::quad::{linear_fit, tanh_sinh, unit_ball_volume, unit_sphere_area};

const TOL: f64 = 1e-13;

/// `A(s, t)` with `d = |s - t|` supplied by the caller to avoid cancellation.
fn average(k: &Kernel, s: f64, t: f64, d: f64) -> f64 {
    let n = k.n();
    let alpha = k.alpha();
    if n == 3 {
        let (lo, hi) = if s < t { (s, t) } else { (t, s) };
        if lo == 0.0 {
            return 4.0 * std::f64::consts::PI * hi.powf(-alpha);
        }
        let u = lo / hi;
        let p = 2.0 - alpha;
        let two_pi = 2.0 * std::f64::consts::PI;
        if u < 0.5 {
            let (a, b) = (u.ln_1p(), (-u).ln_1p());
            let diff = if p == 0.0 { a - b } else { ((p * a).exp_m1() - (p * b).exp_m1()) / p };
            return two_pi * hi.powf(p - 2.0) * diff / u;
        }
        return if p == 0.0 {
            two_pi / (s * t) * ((s + t) / d).ln()
        } else {
            two_pi / (p * s * t) * ((s + t).powf(p) - d.powf(p))
        };
    }
    let st4 = 4.0 * s * t;
    let d2 = d * d;
    let m = (n - 2) as i32;
    let sphere = unit_sphere_area(n - 1);
    sphere
        * tanh_sinh(
            |th, th0, _| {
                let half = (0.5 * th0).sin();
                (d2 + st4 * half * half).powf(-0.5 * alpha) * th.sin().powi(m)
            },
            0.0,
            std::f64::consts::PI,
            1e-11,
        )
}

/// Integral of the kernel over the sphere of radius `s`, seen from distance `t`
/// (normalized by `s^(n-1)`).
pub fn spherical_average(k: &Kernel, s: f64, t: f64) -> f64 {
    average(k, s, t, (s - t).abs())
}

/// `v_B(t)` for the unit ball at distance `t >= 0` from its center.
pub fn ball_potential(k: &Kernel, t: f64) -> f64 {
    ball_potential_offset(k, t.min(1.0), (t - 1.0).max(0.0))
}

/// `v_B` at `t = base + excess`, where `excess >= 0` is the distance beyond the
/// unit sphere, kept separate so that points just outside stay exact.
fn ball_potential_offset(k: &Kernel, base: f64, excess: f64) -> f64 {
    let n = k.n();
    let nm1 = (n - 1) as i32;
    let t = base + excess;
    if t == 0.0 {
        return unit_sphere_area(n) / (n as f64 - k.alpha());
    }
    if excess > 0.0 || base >= 1.0 {
        return tanh_sinh(
            |s, _, db| s.powi(nm1) * average(k, s, t, db + excess),
            0.0,
            1.0,
            TOL,
        );
    }
    let inner = tanh_sinh(|s, _, db| s.powi(nm1) * average(k, s, t, db), 0.0, t, TOL);
    let outer = tanh_sinh(|s, da, _| s.powi(nm1) * average(k, s, t, da), t, 1.0, TOL);
    inner + outer
}

/// `samples` equispaced values of `(|x|, v_B(|x|))` on `[0, r_out]`.
pub fn ball_profile(k: &Kernel, r_out: f64, samples: usize) -> Vec<(f64, f64)> {
    let samples = samples.max(2);
    (0..samples)
        .map(|i| {
            let t = r_out * i as f64 / (samples - 1) as f64;
            (t, ball_potential(k, t))
        })
        .collect()
}

/// `V(B_1)` as `|S^(n-1)| int_0^2 r^(n-1-alpha) |B_1 cap (B_1 + r e)| dr`,
/// with the lens volume written as two caps.
pub fn unit_ball_energy(k: &Kernel) -> f64 {
    let n = k.n();
    let half_power = 0.5 * (n as f64 - 1.0);
    let slab = unit_ball_volume(n - 1);
    let lens = |r: f64| {
        2.0 * slab * tanh_sinh(|_, _, db| (db * (2.0 - db)).powf(half_power), 0.5 * r, 1.0, 1e-13)
    };
    let p = n as f64 - 1.0 - k.alpha();
    unit_sphere_area(n) * tanh_sinh(|r, _, _| r.powf(p) * lens(r), 0.0, 2.0, 1e-12)
}

/// `V(B_1) = int_{B_1} v_B` through the ball potential itself.
pub fn unit_ball_energy_by_shells(k: &Kernel) -> f64 {
    let n = k.n();
    let nm1 = (n - 1) as i32;
    unit_sphere_area(n) * tanh_sinh(|t, _, _| t.powi(nm1) * ball_potential(k, t), 0.0, 1.0, 1e-10)
}

fn log_grid(r_lo: f64, r_hi: f64, samples: usize) -> Vec<f64> {
    let samples = samples.max(2);
    let (a, b) = (r_lo.ln(), r_hi.ln());
    (0..samples)
        .map(|i| (a + (b - a) * i as f64 / (samples - 1) as f64).exp())
        .collect()
}

/// `v_B(1) - v_B(1 + r)` on a logarithmic grid of `r`.
pub fn boundary_drop(k: &Kernel, r_lo: f64, r_hi: f64, samples: usize) -> Vec<(f64, f64)> {
    let v0 = ball_potential(k, 1.0);
    log_grid(r_lo, r_hi, samples)
        .into_iter()
        .map(|r| (r, v0 - ball_potential_offset(k, 1.0, r)))
        .collect()
}

/// Log-log slope of `v_B(1) - v_B(1 + r)` against `r` over `[r_lo, r_hi]`.
pub fn boundary_exponent(k: &Kernel, r_lo: f64, r_hi: f64, samples: usize) -> f64 {
    let drop = boundary_drop(k, r_lo, r_hi, samples);
    let x: Vec<f64> = drop.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = drop.iter().map(|p| p.1.ln()).collect();
    linear_fit(&x, &y).0
}

/// Relative spread `(max - min) / max` of `(v_B(1) - v_B(1 + r)) / (r ln(1/r))`
/// over `[r_lo, r_hi]`.
pub fn log_ratio_drift(k: &Kernel, r_lo: f64, r_hi: f64, samples: usize) -> f64 {
    let ratios: Vec<f64> = boundary_drop(k, r_lo, r_hi, samples)
        .into_iter()
        .map(|(r, d)| d / (r * (1.0 / r).ln()))
        .collect();
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    (max - min) / max
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn newtonian_ball_potential() {
        let k = Kernel::coulomb();
        for t in [0.0, 0.3, 0.9, 1.0] {
            let want = 2.0 * PI * (1.0 - t * t / 3.0);
            assert!((ball_potential(&k, t) - want).abs() < 1e-10, "{t}");
        }
        for t in [1.0 + 1e-9, 1.5, 4.0] {
            let want = 4.0 * PI / (3.0 * t);
            assert!((ball_potential(&k, t) - want).abs() < 1e-10, "{t}");
        }
    }

    #[test]
    fn polar_average_matches_closed_form() {
        let k3 = Kernel::new(3, 1.7).unwrap();
        // route the n = 3 case through the generic polar integral
        let generic = |s: f64, t: f64| {
            let d2 = (s - t).powi(2);
            2.0 * PI
                * tanh_sinh(
                    |th, th0, _| {
                        let h = (0.5 * th0).sin();
                        (d2 + 4.0 * s * t * h * h).powf(-0.85) * th.sin()
                    },
                    0.0,
                    PI,
                    1e-13,
                )
        };
        for (s, t) in [(0.2, 0.9), (0.5, 0.55), (1.0, 1.3), (1e-3, 0.8)] {
            let a = spherical_average(&k3, s, t);
            let b = generic(s, t);
            assert!((a - b).abs() < 1e-9 * a, "{s} {t}: {a} {b}");
        }
    }

    #[test]
    fn newtonian_ball_energy() {
        let k = Kernel::coulomb();
        let v = unit_ball_energy(&k);
        assert!((v - 32.0 * PI * PI / 15.0).abs() < 1e-9, "{v}");
        let w = unit_ball_energy_by_shells(&k);
        assert!((w - 32.0 * PI * PI / 15.0).abs() < 1e-7, "{w}");
    }

    #[test]
    fn lens_and_shell_routes_agree() {
        for alpha in [0.4, 1.7, 2.0, 2.6] {
            let k = Kernel::new(3, alpha).unwrap();
            let a = unit_ball_energy(&k);
            let b = unit_ball_energy_by_shells(&k);
            assert!((a - b).abs() < 1e-7 * a, "{alpha}: {a} {b}");
        }
    }

    #[test]
    fn disk_energy_matches_pair_sampling() {
        use rand::{Rng, SeedableRng};
        let k = Kernel::new(2, 1.0).unwrap();
        let v = unit_ball_energy(&k);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut point = || loop {
            let p: (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if p.0 * p.0 + p.1 * p.1 < 1.0 {
                return p;
            }
        };
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let (a, b) = (point(), point());
            acc += 1.0 / ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        }
        let mc = acc / n as f64 * PI * PI;
        assert!((v - mc).abs() / v < 0.01, "{v} {mc}");
        assert!((v - 16.0 * PI / 3.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn profile_decreases_and_decays() {
        for (n, alpha) in [(2, 0.5), (3, 2.5), (4, 1.0)] {
            let k = Kernel::new(n, alpha).unwrap();
            let prof = ball_profile(&k, 3.0, 31);
            let outside: Vec<_> = prof.iter().filter(|p| p.0 >= 1.0).collect();
            for w in outside.windows(2) {
                assert!(w[1].1 < w[0].1);
            }
            let far: f64 = 200.0;
            let omega = crate::quad::unit_ball_volume(n);
            let want = omega / far.powf(alpha);
            assert!((ball_potential(&k, far) - want).abs() / want < 1e-3);
        }
    }

    #[test]
    fn boundary_asymptotics() {
        let e1 = boundary_exponent(&Kernel::coulomb(), 1e-4, 1e-2, 9);
        assert!((e1 - 1.0).abs() < 0.05, "{e1}");
        let e25 = boundary_exponent(&Kernel::new(3, 2.5).unwrap(), 1e-6, 1e-4, 9);
        assert!((e25 - 0.5).abs() < 0.05, "{e25}");
    }
}
