//! Real orthonormal bases on the unit circle (Fourier) and sphere
//! (spherical harmonics), tabulated with tangential gradients on a product
//! quadrature rule.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// Basis functions and their tangential gradients at quadrature nodes.
///
/// Index layout: in 2D, `0` is the constant, `2k - 1` and `2k` are
/// `cos(k t)` and `sin(k t)`; in 3D, `l^2 + l + m` is the real harmonic of
/// degree `l` and order `m` (cosine for `m > 0`, sine for `m < 0`).
#[derive(Clone, Debug)]
pub struct Basis {
    dim: usize,
    degree: usize,
    weights: Vec<f64>,
    directions: Vec<[f64; 3]>,
    values: Vec<Vec<f64>>,
    /// Gradient components in the orthonormal frame `(e_theta, e_phi)`; the
    /// second is zero in 2D.
    gradients: Vec<Vec<[f64; 2]>>,
}

/// A function `sum_j c_j Y_j` evaluated at every node.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

impl Basis {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        match dim {
            2 => Ok(Self::circle(degree)),
            3 => Ok(Self::sphere(degree)),
            _ => Err(Error::InvalidGrid(format!("no spectral basis in dimension {dim}"))),
        }
    }

    pub fn size_for(dim: usize, degree: usize) -> usize {
        if dim == 2 {
            2 * degree + 1
        } else {
            (degree + 1) * (degree + 1)
        }
    }

    /// Degree of basis function `j`.
    pub fn degree_of(&self, j: usize) -> usize {
        if self.dim == 2 {
            (j + 1) / 2
        } else {
            (j as f64).sqrt().floor() as usize
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        Self::size_for(self.dim, self.degree)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    /// `Y_j` at node `q`.
    pub fn value(&self, q: usize, j: usize) -> f64 {
        self.values[q][j]
    }

    pub fn gradient(&self, q: usize, j: usize) -> [f64; 2] {
        self.gradients[q][j]
    }

    pub fn evaluate(&self, coeffs: &[f64]) -> Evaluation {
        let mut values = vec![0.0; self.nodes()];
        let mut gradients = vec![[0.0; 2]; self.nodes()];
        for q in 0..self.nodes() {
            let (mut v, mut g) = (0.0, [0.0; 2]);
            for (j, &c) in coeffs.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                v += c * self.values[q][j];
                g[0] += c * self.gradients[q][j][0];
                g[1] += c * self.gradients[q][j][1];
            }
            values[q] = v;
            gradients[q] = g;
        }
        Evaluation { values, gradients }
    }

    /// Values of all basis functions in an arbitrary direction (unit vector).
    pub fn values_at(&self, dir: [f64; 3]) -> Vec<f64> {
        if self.dim == 2 {
            let t = dir[1].atan2(dir[0]);
            circle_values(self.degree, t).0
        } else {
            let x = dir[2].clamp(-1.0, 1.0);
            let phi = dir[1].atan2(dir[0]);
            sphere_values(self.degree, x, phi).0
        }
    }

    fn circle(degree: usize) -> Self {
        let nodes = (4 * degree + 32).max(64);
        let w = 2.0 * PI / nodes as f64;
        let mut s = Self {
            dim: 2,
            degree,
            weights: vec![w; nodes],
            directions: Vec::with_capacity(nodes),
            values: Vec::with_capacity(nodes),
            gradients: Vec::with_capacity(nodes),
        };
        for q in 0..nodes {
            let t = w * q as f64;
            s.directions.push([t.cos(), t.sin(), 0.0]);
            let (v, g) = circle_values(degree, t);
            s.values.push(v);
            s.gradients.push(g.into_iter().map(|d| [d, 0.0]).collect());
        }
        s
    }

    fn sphere(degree: usize) -> Self {
        let nt = (3 * degree + 16).max(24);
        let np = 2 * nt;
        let (xs, ws) = gauss_legendre(nt);
        let mut s = Self {
            dim: 3,
            degree,
            weights: Vec::with_capacity(nt * np),
            directions: Vec::with_capacity(nt * np),
            values: Vec::with_capacity(nt * np),
            gradients: Vec::with_capacity(nt * np),
        };
        for (&x, &wx) in xs.iter().zip(&ws) {
            let st = (1.0 - x * x).sqrt();
            for k in 0..np {
                let phi = 2.0 * PI * k as f64 / np as f64;
                s.weights.push(wx * 2.0 * PI / np as f64);
                s.directions.push([st * phi.cos(), st * phi.sin(), x]);
                let (v, g) = sphere_values(degree, x, phi);
                s.values.push(v);
                s.gradients.push(g);
            }
        }
        s
    }
}

fn circle_values(degree: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![1.0 / (2.0 * PI).sqrt()];
    let mut g = vec![0.0];
    let a = 1.0 / PI.sqrt();
    for k in 1..=degree {
        let kf = k as f64;
        let (s, c) = (kf * t).sin_cos();
        v.push(a * c);
        g.push(-a * kf * s);
        v.push(a * s);
        g.push(a * kf * c);
    }
    (v, g)
}

/// Associated Legendre functions normalized to unit `L^2` norm on `[-1, 1]`
/// (no Condon-Shortley phase), `p[l][m]` for `m <= l <= degree`.
fn legendre(degree: usize, x: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut p = vec![vec![0.0; degree + 1]; degree + 1];
    p[0][0] = 1.0 / 2f64.sqrt();
    for m in 1..=degree {
        let mf = m as f64;
        p[m][m] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..degree {
        p[m + 1][m] = (2.0 * m as f64 + 3.0).sqrt() * x * p[m][m];
    }
    for m in 0..=degree {
        for l in m + 2..=degree {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
        }
    }
    p
}

fn sphere_values(degree: usize, x: f64, phi: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    let p = legendre(degree, x);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let n = (degree + 1) * (degree + 1);
    let mut v = vec![0.0; n];
    let mut g = vec![[0.0; 2]; n];
    let c0 = 1.0 / (2.0 * PI).sqrt();
    let c1 = 1.0 / PI.sqrt();
    for l in 0..=degree {
        let lf = l as f64;
        for m in 0..=l {
            let mf = m as f64;
            let lower = if l > m { p[l - 1][m] } else { 0.0 };
            let ratio = ((2.0 * lf + 1.0) * (lf - mf) * (lf + mf) / (2.0 * lf - 1.0)).sqrt();
            // d/dtheta of p[l][m](cos theta)
            let dp = if l == 0 { 0.0 } else { (lf * x * p[l][m] - ratio * lower) / s };
            if m == 0 {
                v[l * l + l] = c0 * p[l][0];
                g[l * l + l] = [c0 * dp, 0.0];
            } else {
                let (sn, cs) = (mf * phi).sin_cos();
                let jc = l * l + l + m;
                let js = l * l + l - m;
                v[jc] = c1 * p[l][m] * cs;
                v[js] = c1 * p[l][m] * sn;
                g[jc] = [c1 * dp * cs, -c1 * mf * p[l][m] * sn / s];
                g[js] = [c1 * dp * sn, c1 * mf * p[l][m] * cs / s];
            }
        }
    }
    (v, g)
}
