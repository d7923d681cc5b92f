//! Browser bindings for three small ldlab operations. The plain functions
//! return `Result<_, String>` so they can be tested natively; the
//! `wasm_bindgen` wrappers only convert errors.

use ldlab::competitors::{ball_radius, cell_count};
use ldlab::experiments::{chain_oracle, crossover_closed_form};
use ldlab::metrics::BallOracle;
use ldlab::optimize::{anneal, random_blob, AnnealConfig};
use ldlab::riesz::ball_profile;
use ldlab::Kernel;
use wasm_bindgen::prelude::*;

fn kernel(n: usize, alpha: f64) -> Result<Kernel, String> {
    Kernel::new(n, alpha).map_err(|e| e.to_string())
}

/// Radial profile of the unit-ball potential, interleaved as `r0, v0, r1, v1, ...`.
pub fn profile(n: usize, alpha: f64, r_out: f64, points: usize) -> Result<Vec<f64>, String> {
    let k = kernel(n, alpha)?;
    if !(r_out > 0.0) || points < 2 || points > 10_000 {
        return Err("need r_out > 0 and 2 <= points <= 10000".into());
    }
    Ok(ball_profile(&k, r_out, points)
        .into_iter()
        .flat_map(|(r, v)| [r, v])
        .collect())
}

/// Energy per unit mass of `N` far-apart equal balls, `N e(m/N) / m`, for
/// `N = 1..=max_count` on `points` masses in `(0, m_max]`. Row-major with
/// the mass first: `m, E_1/m, ..., E_max/m`.
pub fn fission(n: usize, alpha: f64, m_max: f64, points: usize, max_count: usize) -> Result<Vec<f64>, String> {
    let k = kernel(n, alpha)?;
    if !(m_max > 0.0) || points < 2 || points > 10_000 || max_count == 0 || max_count > 64 {
        return Err("need m_max > 0, 2 <= points <= 10000 and 1 <= max_count <= 64".into());
    }
    let o = BallOracle::new(&k);
    let mut out = Vec::with_capacity(points * (max_count + 1));
    for i in 1..=points {
        let m = m_max * i as f64 / points as f64;
        out.push(m);
        out.extend((1..=max_count).map(|c| chain_oracle(&o, m, c) / m));
    }
    Ok(out)
}

/// Mass at which one ball and two half balls cost the same.
pub fn crossover(n: usize, alpha: f64) -> Result<f64, String> {
    Ok(crossover_closed_form(&BallOracle::new(&kernel(n, alpha)?)))
}

/// Final state of a 2D annealing run.
#[wasm_bindgen]
pub struct AnnealView {
    width: usize,
    height: usize,
    cells: Vec<u8>,
    energy: f64,
    ball_energy: f64,
    asymmetry: f64,
    components: usize,
    accepted: u64,
}

#[wasm_bindgen]
impl AnnealView {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Occupancy, one byte per cell, x fastest.
    pub fn cells(&self) -> Vec<u8> {
        self.cells.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn energy(&self) -> f64 {
        self.energy
    }

    #[wasm_bindgen(getter)]
    pub fn ball_energy(&self) -> f64 {
        self.ball_energy
    }

    #[wasm_bindgen(getter)]
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    #[wasm_bindgen(getter)]
    pub fn components(&self) -> usize {
        self.components
    }

    #[wasm_bindgen(getter)]
    pub fn accepted(&self) -> f64 {
        self.accepted as f64
    }
}

/// Anneals a random blob of the given mass in the plane.
pub fn anneal_plane(alpha: f64, mass: f64, h: f64, moves: u64, seed: u64) -> Result<AnnealView, String> {
    let k = kernel(2, alpha)?;
    if !(mass > 0.0 && h > 0.0) {
        return Err("mass and h must be positive".into());
    }
    let cells = cell_count(2, mass, h);
    if !(8..=20_000).contains(&cells) {
        return Err(format!("{cells} cells; keep between 8 and 20000"));
    }
    let half = 2.5 * ball_radius(2, mass);
    let init = random_blob(2, h, cells, [half, half, 0.0], seed).map_err(|e| e.to_string())?;
    let cfg = AnnealConfig {
        moves,
        seed,
        decay: 0.97,
        ..AnnealConfig::default()
    };
    let r = anneal(&init, &k, &cfg).map_err(|e| e.to_string())?;
    let shape = r.set.shape();
    Ok(AnnealView {
        width: shape[0],
        height: shape[1],
        cells: r.set.cells().to_vec(),
        energy: r.best.total,
        ball_energy: BallOracle::new(&k).energy(mass),
        asymmetry: r.asymmetry,
        components: r.major_components(0.05),
        accepted: r.accepted,
    })
}

#[wasm_bindgen(js_name = ballProfile)]
pub fn ball_profile_js(n: usize, alpha: f64, r_out: f64, points: usize) -> Result<Vec<f64>, JsError> {
    profile(n, alpha, r_out, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fissionCurves)]
pub fn fission_js(n: usize, alpha: f64, m_max: f64, points: usize, max_count: usize) -> Result<Vec<f64>, JsError> {
    fission(n, alpha, m_max, points, max_count).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = crossoverMass)]
pub fn crossover_js(n: usize, alpha: f64) -> Result<f64, JsError> {
    crossover(n, alpha).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = annealPlane)]
pub fn anneal_js(alpha: f64, mass: f64, h: f64, moves: u32, seed: u32) -> Result<AnnealView, JsError> {
    anneal_plane(alpha, mass, h, moves as u64, seed as u64).map_err(|e| JsError::new(&e))
}
