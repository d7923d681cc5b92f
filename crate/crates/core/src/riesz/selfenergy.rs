//! Self-interaction of one lattice cell.
//!
//! `c_self(n, alpha) = int_{[0,1]^n} int_{[0,1]^n} |x - y|^(-alpha) dx dy`, so
//! a cube of side `h` carries `c_self * h^(2n - alpha)`. The difference
//! `z = x - y` has density `prod_i (1 - |z_i|)` on `[-1, 1]^n`; in polar
//! coordinates the radial integral along each direction is a polynomial
//! times a power and is done exactly, leaving a smooth integral over the
//! positive orthant of the sphere which is sampled by Monte Carlo.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quad::unit_sphere_area;

pub const TABLE_VERSION: u32 = 1;
const DEFAULT_SAMPLES: usize = 1 << 20;
const DEFAULT_SEED: u64 = 0x5e1f;

#[derive(Clone, Debug, PartialEq)]
pub struct SelfEnergyEntry {
    pub n: usize,
    pub alpha: f64,
    pub method: String,
    pub value: f64,
    pub stderr: f64,
}

/// Exact radial integral `int_0^R r^(n-1-alpha) prod_i (1 - r w_i) dr`, `R = 1/max w_i`.
fn radial_integral(dir: &[f64], alpha: f64) -> f64 {
    let n = dir.len();
    // coefficients of prod_i (1 - r w_i) in powers of r
    let mut poly = vec![0.0; n + 1];
    poly[0] = 1.0;
    for (deg, &w) in dir.iter().enumerate() {
        for k in (1..=deg + 1).rev() {
            poly[k] -= w * poly[k - 1];
        }
    }
    let wmax = dir.iter().cloned().fold(0.0, f64::max);
    let r = 1.0 / wmax;
    poly.iter()
        .enumerate()
        .map(|(k, &a)| {
            let p = n as f64 - alpha + k as f64;
            a * r.powf(p) / p
        })
        .sum()
}

/// Monte-Carlo estimate of `c_self(n, alpha)` with its standard error.
pub fn estimate_self_energy(n: usize, alpha: f64, samples: usize, seed: u64) -> SelfEnergyEntry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dir = vec![0.0; n];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        loop {
            for d in dir.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *d = g.abs();
            }
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                dir.iter_mut().for_each(|v| *v /= norm);
                break;
            }
        }
        let g = radial_integral(&dir, alpha);
        sum += g;
        sum2 += g * g;
    }
    let mean = sum / samples as f64;
    let var = (sum2 / samples as f64 - mean * mean).max(0.0);
    let area = unit_sphere_area(n);
    SelfEnergyEntry {
        n,
        alpha,
        method: "mc_polar".into(),
        value: area * mean,
        stderr: area * (var / samples as f64).sqrt(),
    }
}

/// Versioned text table of cell self-energies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelfEnergyTable {
    pub entries: Vec<SelfEnergyEntry>,
}

impl SelfEnergyTable {
    /// Computes entries for the given `(n, alpha)` pairs with the default sample budget.
    pub fn calibrate(pairs: &[(usize, f64)]) -> Self {
        Self {
            entries: pairs
                .iter()
                .map(|&(n, a)| estimate_self_energy(n, a, DEFAULT_SAMPLES, DEFAULT_SEED))
                .collect(),
        }
    }

    pub fn lookup(&self, n: usize, alpha: f64) -> Option<&SelfEnergyEntry> {
        self.entries
            .iter()
            .find(|e| e.n == n && (e.alpha - alpha).abs() < 1e-12)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# ldlab self-energy table v{TABLE_VERSION}\n# n alpha method value stderr\n");
        for e in &self.entries {
            let _ = writeln!(out, "{} {:?} {} {:?} {:?}", e.n, e.alpha, e.method, e.value, e.stderr);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = lines.next().unwrap_or_default();
        let version = head
            .strip_prefix("# ldlab self-energy table v")
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| Error::Format("missing self-energy table header".into()))?;
        if version != TABLE_VERSION {
            return Err(Error::Format(format!("unsupported table version {version}")));
        }
        let bad = |l: &str| Error::Format(format!("bad table row `{l}`"));
        let mut entries = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(bad(line));
            }
            entries.push(SelfEnergyEntry {
                n: f[0].parse().map_err(|_| bad(line))?,
                alpha: f[1].parse().map_err(|_| bad(line))?,
                method: f[2].to_string(),
                value: f[3].parse().map_err(|_| bad(line))?,
                stderr: f[4].parse().map_err(|_| bad(line))?,
            });
        }
        Ok(Self { entries })
    }
}

fn cache() -> &'static Mutex<HashMap<(usize, u64), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `c_self(n, alpha)`, computed once per process with a fixed seed.
pub fn self_energy(n: usize, alpha: f64) -> f64 {
    let key = (n, alpha.to_bits());
    if let Some(&v) = cache().lock().unwrap().get(&key) {
        return v;
    }
    let v = estimate_self_energy(n, alpha, DEFAULT_SAMPLES, DEFAULT_SEED).value;
    cache().lock().unwrap().insert(key, v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Plain pair sampling; finite variance only when `2 alpha < n`.
    fn pair_mc(n: usize, alpha: f64, samples: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let r2: f64 = (0..n)
                .map(|_| {
                    let d = rng.gen::<f64>() - rng.gen::<f64>();
                    d * d
                })
                .sum();
            let g = r2.powf(-0.5 * alpha);
            s += g;
            s2 += g * g;
        }
        let m = s / samples as f64;
        (m, ((s2 / samples as f64 - m * m) / samples as f64).sqrt())
    }

    #[test]
    fn matches_independent_pair_sampling() {
        for &(n, alpha) in &[(3usize, 1.0f64), (2, 0.5), (3, 0.8)] {
            let e = estimate_self_energy(n, alpha, 1 << 18, 1);
            let (m, se) = pair_mc(n, alpha, 4_000_000);
            let tol = 5.0 * (se * se + e.stderr * e.stderr).sqrt();
            assert!((e.value - m).abs() < tol, "n={n} a={alpha}: {} vs {m} (tol {tol})", e.value);
        }
    }

    #[test]
    fn known_closed_forms() {
        // int int over the unit square of 1/|x-y| = 4 ln(1 + sqrt 2) - 4 (sqrt 2 - 1) / 3
        let sq = 4.0 * (1.0 + 2f64.sqrt()).ln() - 4.0 * (2f64.sqrt() - 1.0) / 3.0;
        let e = estimate_self_energy(2, 1.0, 1 << 20, 3);
        assert!((e.value - sq).abs() < 4.0 * e.stderr + 1e-4, "{} vs {sq}", e.value);
        assert!(e.stderr / e.value < 1e-3);
        // unit cube, alpha = 1 (independent 3D cubature of the same integral)
        let e = estimate_self_energy(3, 1.0, 1 << 20, 4);
        assert!((e.value - 1.882_312_644_389_353).abs() < 4.0 * e.stderr + 1e-4);
    }

    #[test]
    fn table_text_roundtrip() {
        let t = SelfEnergyTable::calibrate(&[(3, 1.0), (2, 1.5)]);
        let back = SelfEnergyTable::from_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert!(back.lookup(2, 1.5).unwrap().value > 0.0);
        assert!(SelfEnergyTable::from_text("# ldlab self-energy table v9\n").is_err());
    }
}
