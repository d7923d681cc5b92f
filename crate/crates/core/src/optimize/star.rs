//! Nearly spherical star-shaped sets `{ r < s (1 + rho(x / |x|)) }`, with
//! `rho` expanded in spherical harmonics of degree `2..=L` and `s` chosen so
//! that the volume is always `omega_n`.
//!
//! The perimeter is computed by quadrature on the sphere. The nonlocal term
//! uses a smoothed indicator on a fixed grid, so it is a smooth function of
//! the coefficients and can be differentiated by finite differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::harmonics::{Basis, Evaluation};
use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::metrics::EnergyBreakdown;
use crate::quad::unit_ball_volume;
use crate::riesz::{Kernel, RieszPlan};

/// Largest normalized radius the context grid is built for.
const MAX_RADIUS: f64 = 1.45;
/// Ramp `(1 + tanh((R - r) / (RAMP_WIDTH h))) / 2`, cut off beyond
/// `RAMP_BAND` cells.
const RAMP_WIDTH: f64 = 1.5;
const RAMP_BAND: f64 = 10.0;

/// Coefficients of `rho` in the real orthonormal basis; entries of degree 0
/// and 1 are kept at zero (volume and translation are gauged out).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarShape {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl StarShape {
    pub fn sphere(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            coeffs: vec![0.0; Basis::size_for(dim, degree)],
        }
    }

    /// Wraps raw coefficients, zeroing the gauge modes.
    pub fn from_coeffs(dim: usize, degree: usize, mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != Basis::size_for(dim, degree) {
            return Err(Error::PreconditionFailed(format!(
                "expected {} coefficients, got {}",
                Basis::size_for(dim, degree),
                coeffs.len()
            )));
        }
        let gauge = if dim == 2 { 3 } else { 4 };
        for c in coeffs.iter_mut().take(gauge) {
            *c = 0.0;
        }
        Ok(Self { dim, degree, coeffs })
    }

    /// Indices of the coefficients that are free to vary.
    pub fn free_indices(&self) -> std::ops::Range<usize> {
        let gauge = if self.dim == 2 { 3 } else { 4 };
        gauge..self.coeffs.len()
    }

    /// Random shape with `max(sup |rho|, sup |grad rho|) = amplitude`; the
    /// coefficient of degree `l` is Gaussian with standard deviation `l^-2`.
    pub fn random(basis: &Basis, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self::sphere(basis.dim(), basis.degree());
        for j in s.free_indices() {
            let l = basis.degree_of(j) as f64;
            let z: f64 = StandardNormal.sample(&mut rng);
            s.coeffs[j] = z / (l * l);
        }
        let norm = w1_inf(&basis.evaluate(&s.coeffs));
        if norm > 0.0 {
            for c in &mut s.coeffs {
                *c *= amplitude / norm;
            }
        }
        s
    }
}

fn w1_inf(e: &Evaluation) -> f64 {
    let mut m: f64 = 0.0;
    for (v, g) in e.values.iter().zip(&e.gradients) {
        m = m.max(v.abs()).max((g[0] * g[0] + g[1] * g[1]).sqrt());
    }
    m
}

/// Volume-normalized geometry of a star shape, by quadrature.
#[derive(Clone, Debug)]
struct Geometry {
    /// Uniform scale making the volume `omega_n`.
    scale: f64,
    perimeter: f64,
    /// `sup |s (1 + rho) - 1|`.
    sup_rho: f64,
}

fn geometry(basis: &Basis, coeffs: &[f64]) -> Result<Geometry> {
    let n = basis.dim() as f64;
    let e = basis.evaluate(coeffs);
    let (mut vol, mut per) = (0.0, 0.0);
    for q in 0..basis.nodes() {
        let r = 1.0 + e.values[q];
        if r <= 0.0 {
            return Err(Error::NotStarShaped);
        }
        let g = e.gradients[q];
        let w = basis.weights()[q];
        vol += w * r.powf(n) / n;
        per += w * r.powf(n - 2.0) * (r * r + g[0] * g[0] + g[1] * g[1]).sqrt();
    }
    let scale = (unit_ball_volume(basis.dim()) / vol).powf(1.0 / n);
    let sup_rho = e
        .values
        .iter()
        .map(|v| (scale * (1.0 + v) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(Geometry {
        scale,
        perimeter: scale.powf(n - 1.0) * per,
        sup_rho,
    })
}

/// Analytic gradient of the normalized perimeter in the coefficients.
fn perimeter_gradient(basis: &Basis, coeffs: &[f64]) -> Result<Vec<f64>> {
    let n = basis.dim() as f64;
    let e = basis.evaluate(coeffs);
    let mut vol = 0.0;
    let mut per = 0.0;
    let mut dvol = vec![0.0; coeffs.len()];
    let mut dper = vec![0.0; coeffs.len()];
    for q in 0..basis.nodes() {
        let r = 1.0 + e.values[q];
        if r <= 0.0 {
            return Err(Error::NotStarShaped);
        }
        let g = e.gradients[q];
        let w = basis.weights()[q];
        let g2 = g[0] * g[0] + g[1] * g[1];
        let root = (r * r + g2).sqrt();
        vol += w * r.powf(n) / n;
        per += w * r.powf(n - 2.0) * root;
        // d/dr and d/dg of r^(n-2) sqrt(r^2 + |g|^2)
        let dr = (n - 2.0) * r.powf(n - 3.0) * root + r.powf(n - 1.0) / root;
        let dg = r.powf(n - 2.0) / root;
        for j in 0..coeffs.len() {
            let y = basis.value(q, j);
            let gy = basis.gradient(q, j);
            dvol[j] += w * r.powf(n - 1.0) * y;
            dper[j] += w * (dr * y + dg * (g[0] * gy[0] + g[1] * gy[1]));
        }
    }
    // P_norm = (omega_n / vol)^((n-1)/n) * per
    let s = (unit_ball_volume(basis.dim()) / vol).powf((n - 1.0) / n);
    Ok(dper
        .iter()
        .zip(&dvol)
        .map(|(dp, dv)| s * (dp - (n - 1.0) / n * per * dv / vol))
        .collect())
}

/// Basis, kernel and a fixed grid with precomputed directions, shared by all
/// energy evaluations of one dimension and degree.
pub struct StarContext {
    basis: Basis,
    kernel: Kernel,
    grid: GridSet,
    plan: RieszPlan,
    radii: Vec<f64>,
    /// Basis values at `x / |x|` for every cell, row-major by cell.
    directions: Vec<f64>,
}

impl StarContext {
    pub fn new(kernel: Kernel, degree: usize, h: f64) -> Result<Self> {
        let dim = kernel.n();
        if !(2..=3).contains(&dim) {
            return Err(Error::DimensionMismatch(dim, 3));
        }
        if !(h > 0.0 && h < 0.5) {
            return Err(Error::InvalidGrid(format!("mesh size {h} out of range")));
        }
        let basis = Basis::new(dim, degree)?;
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        let half = MAX_RADIUS + RAMP_BAND * h;
        for a in 0..dim {
            lo[a] = -half;
            hi[a] = half;
        }
        let grid = GridSet::covering(dim, h, lo, hi)?;
        let plan = RieszPlan::for_set(&kernel, &grid);
        let nb = basis.len();
        let mut radii = Vec::with_capacity(grid.len());
        let mut directions = Vec::with_capacity(grid.len() * nb);
        for idx in 0..grid.len() {
            let c = grid.center(idx);
            let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            radii.push(r);
            if r > 1e-12 {
                directions.extend(basis.values_at([c[0] / r, c[1] / r, c[2] / r]));
            } else {
                directions.extend(std::iter::repeat(0.0).take(nb));
            }
        }
        Ok(Self {
            basis,
            kernel,
            grid,
            plan,
            radii,
            directions,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    fn check(&self, shape: &StarShape) -> Result<()> {
        if shape.dim != self.basis.dim() || shape.coeffs.len() != self.basis.len() {
            return Err(Error::DimensionMismatch(shape.dim, self.basis.dim()));
        }
        Ok(())
    }

    /// Smoothed indicator of the normalized shape on the context grid.
    fn weights(&self, shape: &StarShape, scale: f64) -> Result<Vec<f64>> {
        let h = self.grid.h();
        let nb = self.basis.len();
        let mut w = vec![0.0; self.grid.len()];
        // variance of the ramp derivative
        let sigma2 = (std::f64::consts::PI * RAMP_WIDTH * h).powi(2) / 12.0;
        for (idx, wi) in w.iter_mut().enumerate() {
            let r = self.radii[idx];
            if r <= 1e-12 {
                *wi = 1.0;
                continue;
            }
            let y = &self.directions[idx * nb..(idx + 1) * nb];
            let rho: f64 = shape.coeffs.iter().zip(y).map(|(c, y)| c * y).sum();
            let big_r = scale * (1.0 + rho);
            if big_r > MAX_RADIUS {
                return Err(Error::BoxTooSmall(format!("radius {big_r:.3} reaches the box edge")));
            }
            // shift so the ramp carries the mass of the sharp ball to
            // second order in its width
            let shift = (self.basis.dim() as f64 - 1.0) * sigma2 / (2.0 * big_r);
            let t = (big_r - shift - r) / (RAMP_WIDTH * h);
            *wi = if t > RAMP_BAND / RAMP_WIDTH {
                1.0
            } else if t < -RAMP_BAND / RAMP_WIDTH {
                0.0
            } else {
                0.5 * (1.0 + t.tanh())
            };
        }
        Ok(w)
    }

    /// Smoothed nonlocal energy of the volume-normalized shape.
    pub fn nonlocal(&self, shape: &StarShape) -> Result<f64> {
        self.check(shape)?;
        let g = geometry(&self.basis, &shape.coeffs)?;
        let w = self.weights(shape, g.scale)?;
        Ok(self.plan.energy(&w, self.grid.cell_volume()))
    }

    /// Normalized perimeter, by quadrature.
    pub fn perimeter(&self, shape: &StarShape) -> Result<f64> {
        self.check(shape)?;
        Ok(geometry(&self.basis, &shape.coeffs)?.perimeter)
    }

    /// `sup |rho|` of the volume-normalized shape.
    pub fn sup_rho(&self, shape: &StarShape) -> Result<f64> {
        self.check(shape)?;
        Ok(geometry(&self.basis, &shape.coeffs)?.sup_rho)
    }
}

/// `P + eps V` of the normalized shape. The `nonlocal` field holds `eps V`,
/// so `total = perimeter + nonlocal`; `V` is skipped when `eps = 0`.
pub fn star_energy(shape: &StarShape, ctx: &StarContext, eps: f64) -> Result<EnergyBreakdown> {
    let p = ctx.perimeter(shape)?;
    let v = if eps == 0.0 { 0.0 } else { eps * ctx.nonlocal(shape)? };
    Ok(EnergyBreakdown::new(
        p,
        v,
        unit_ball_volume(ctx.basis.dim()),
        ctx.kernel,
    ))
}

fn energy_value(ctx: &StarContext, coeffs: &[f64], eps: f64, template: &StarShape) -> Result<f64> {
    let s = StarShape {
        dim: template.dim,
        degree: template.degree,
        coeffs: coeffs.to_vec(),
    };
    Ok(star_energy(&s, ctx, eps)?.total)
}

/// Central finite-difference gradient over the free coefficients.
fn fd_gradient(shape: &StarShape, ctx: &StarContext, eps: f64, delta: f64) -> Result<Vec<f64>> {
    let mut g = vec![0.0; shape.coeffs.len()];
    let mut c = shape.coeffs.clone();
    for j in shape.free_indices() {
        let c0 = c[j];
        c[j] = c0 + delta;
        let ep = energy_value(ctx, &c, eps, shape)?;
        c[j] = c0 - delta;
        let em = energy_value(ctx, &c, eps, shape)?;
        c[j] = c0;
        g[j] = (ep - em) / (2.0 * delta);
    }
    Ok(g)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DescentResult {
    pub shape: StarShape,
    pub energies: Vec<f64>,
    pub steps: usize,
    pub converged: bool,
    /// `sup |rho|` of the final normalized shape.
    pub sup_rho: f64,
    pub gradient_norm: f64,
}

const FD_DELTA: f64 = 1e-4;
const STEP_TOL: f64 = 1e-8;

/// Gradient descent with backtracking on `P + eps V` over the free
/// coefficients. Each iteration starts from `step` and halves it until the
/// energy decreases.
pub fn star_descent(
    init: &StarShape,
    ctx: &StarContext,
    eps: f64,
    max_steps: usize,
    step: f64,
) -> Result<DescentResult> {
    if !(step > 0.0) {
        return Err(Error::PreconditionFailed("step size must be positive".into()));
    }
    let mut shape = init.clone();
    let mut e = star_energy(&shape, ctx, eps)?.total;
    let mut energies = vec![e];
    let mut converged = false;
    let mut gnorm = f64::INFINITY;
    let mut steps = 0;
    while steps < max_steps {
        let g = fd_gradient(&shape, ctx, eps, FD_DELTA)?;
        gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm * step < STEP_TOL {
            converged = true;
            break;
        }
        let mut eta = step;
        let mut moved = false;
        while eta * gnorm >= STEP_TOL {
            let trial: Vec<f64> = shape.coeffs.iter().zip(&g).map(|(c, g)| c - eta * g).collect();
            match energy_value(ctx, &trial, eps, &shape) {
                Ok(et) if et < e => {
                    shape.coeffs = trial;
                    e = et;
                    moved = true;
                    break;
                }
                Ok(_) | Err(Error::NotStarShaped) | Err(Error::BoxTooSmall(_)) => eta *= 0.5,
                Err(err) => return Err(err),
            }
        }
        steps += 1;
        energies.push(e);
        if !moved {
            converged = true;
            break;
        }
    }
    let sup_rho = ctx.sup_rho(&shape)?;
    Ok(DescentResult {
        shape,
        energies,
        steps,
        converged,
        sup_rho,
        gradient_norm: gnorm,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradientReport {
    /// `max |analytic - fd|` over free coefficients, relative to
    /// `max(1, max |analytic|)`.
    pub perimeter_error: f64,
    /// `(D(d) - D(d/2)) / (D(d/2) - D(d/4))` for the central difference `D`
    /// of the nonlocal term along the largest free coefficient; `4` for a
    /// smooth function.
    pub richardson_ratio: f64,
    /// Largest gradient component along a gauge mode (always zero by
    /// construction, reported for completeness).
    pub gauge_component: f64,
}

/// Consistency checks for the finite-difference gradients.
pub fn gradient_check(shape: &StarShape, ctx: &StarContext) -> Result<GradientReport> {
    ctx.check(shape)?;
    let analytic = perimeter_gradient(&ctx.basis, &shape.coeffs)?;
    let fd = fd_gradient(shape, ctx, 0.0, 1e-5)?;
    let scale = shape
        .free_indices()
        .map(|j| analytic[j].abs())
        .fold(1.0, f64::max);
    let perimeter_error = shape
        .free_indices()
        .map(|j| (analytic[j] - fd[j]).abs())
        .fold(0.0, f64::max)
        / scale;
    let j = shape
        .free_indices()
        .max_by(|&a, &b| shape.coeffs[a].abs().total_cmp(&shape.coeffs[b].abs()))
        .ok_or_else(|| Error::PreconditionFailed("no free coefficients".into()))?;
    let d = |delta: f64| -> Result<f64> {
        let mut c = shape.coeffs.clone();
        c[j] += delta;
        let vp = ctx.nonlocal(&StarShape { coeffs: c.clone(), ..shape.clone() })?;
        c[j] -= 2.0 * delta;
        let vm = ctx.nonlocal(&StarShape { coeffs: c, ..shape.clone() })?;
        Ok((vp - vm) / (2.0 * delta))
    };
    let base = 0.2;
    let (d1, d2, d3) = (d(base)?, d(base / 2.0)?, d(base / 4.0)?);
    let gauge_component = (0..shape.free_indices().start)
        .map(|j| fd[j].abs())
        .fold(0.0, f64::max);
    Ok(GradientReport {
        perimeter_error,
        richardson_ratio: (d1 - d2) / (d2 - d3),
        gauge_component,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FugledeReport {
    pub samples: usize,
    pub amplitude: f64,
    /// `max (|rho|_2^2 + |grad rho|_2^2) / D` over the samples.
    pub max_ratio: f64,
    pub min_deficit: f64,
}

/// Random nearly spherical shapes: the squared `W^{1,2}` norm of the
/// normalized `rho` against the isoperimetric deficit.
pub fn fuglede_check(dim: usize, degree: usize, samples: usize, amplitude: f64, seed: u64) -> Result<FugledeReport> {
    if samples == 0 || degree < 2 {
        return Err(Error::PreconditionFailed("need samples and degree >= 2".into()));
    }
    let basis = Basis::new(dim, degree)?;
    let ball_p = dim as f64 * unit_ball_volume(dim);
    let mut max_ratio: f64 = 0.0;
    let mut min_deficit = f64::INFINITY;
    for i in 0..samples {
        let s = StarShape::random(&basis, amplitude, seed.wrapping_add(i as u64));
        let g = geometry(&basis, &s.coeffs)?;
        let e = basis.evaluate(&s.coeffs);
        let mut norm = 0.0;
        for q in 0..basis.nodes() {
            let rho = g.scale * (1.0 + e.values[q]) - 1.0;
            let gr = e.gradients[q];
            let g2 = g.scale * g.scale * (gr[0] * gr[0] + gr[1] * gr[1]);
            norm += basis.weights()[q] * (rho * rho + g2);
        }
        let deficit = g.perimeter / ball_p - 1.0;
        if deficit <= 0.0 {
            return Err(Error::DegenerateDeficit(deficit));
        }
        min_deficit = min_deficit.min(deficit);
        max_ratio = max_ratio.max(norm / deficit);
    }
    Ok(FugledeReport {
        samples,
        amplitude,
        max_ratio,
        min_deficit,
    })
}
