use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ball_perimeter, EnergyBreakdown};
use crate::error::Result;
use crate::quad::unit_ball_volume;
use crate::riesz::{unit_ball_energy, Kernel};

/// Closed-form energy of balls: `e(m) = c1 m^((n-1)/n) + c2 m^((2n-alpha)/n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallOracle {
    pub kernel: Kernel,
    /// Perimeter of the unit-volume ball.
    pub c1: f64,
    /// Riesz energy of the unit-volume ball.
    pub c2: f64,
}

impl BallOracle {
    pub fn new(kernel: &Kernel) -> Self {
        let n = kernel.n() as f64;
        let omega = unit_ball_volume(kernel.n());
        let c2 = unit_ball_energy(kernel) * omega.powf(-(2.0 * n - kernel.alpha()) / n);
        Self {
            kernel: *kernel,
            c1: ball_perimeter(kernel.n(), 1.0),
            c2,
        }
    }

    pub fn breakdown(&self, m: f64) -> EnergyBreakdown {
        let n = self.kernel.n() as f64;
        let p = self.c1 * m.powf((n - 1.0) / n);
        let v = self.c2 * m.powf((2.0 * n - self.kernel.alpha()) / n);
        EnergyBreakdown::new(p, v, m, self.kernel)
    }

    pub fn energy(&self, m: f64) -> f64 {
        self.breakdown(m).total
    }
}

pub fn ball_energy(n: usize, alpha: f64, m: f64) -> Result<EnergyBreakdown> {
    let k = Kernel::new(n, alpha)?;
    Ok(BallOracle::new(&k).breakdown(m))
}

/// `V(B_1)` by sampling `pairs` independent point pairs in the unit ball.
///
/// Returns the estimate and its standard error. The estimator has finite
/// variance only when `2 alpha < n`.
pub fn monte_carlo_ball_energy(k: &Kernel, pairs: usize, seed: u64) -> (f64, f64) {
    let n = k.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = |buf: &mut [f64]| {
        let mut r2 = 0.0;
        for x in buf.iter_mut() {
            *x = rng.sample(StandardNormal);
            r2 += *x * *x;
        }
        let radius = rng.gen::<f64>().powf(1.0 / n as f64) / r2.sqrt();
        buf.iter_mut().for_each(|x| *x *= radius);
    };
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..pairs {
        point(&mut a);
        point(&mut b);
        let d2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        let g = k.eval_sq(d2);
        s += g;
        s2 += g * g;
    }
    let np = pairs as f64;
    let mean = s / np;
    let var = (s2 / np - mean * mean).max(0.0);
    let omega = unit_ball_volume(n);
    (mean * omega * omega, (var / np).sqrt() * omega * omega)
}
