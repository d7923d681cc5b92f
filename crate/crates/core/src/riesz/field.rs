use super::{self_energy, ConvolutionPlan, Kernel, NonlocalMethod};
use crate::error::Result;
use crate::grid::GridSet;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `h^n |d h|^(-alpha)` for every lattice offset `d` between two cells of a
/// box, with the self value `c_self h^(n - alpha)` at `d = 0`.
#[derive(Clone, Debug)]
pub struct KernelTable {
    shape: [usize; 3],
    dims: [usize; 3],
    values: Vec<f64>,
}

impl KernelTable {
    pub fn new(kernel: &Kernel, dim: usize, shape: [usize; 3], h: f64, self_value: f64) -> Self {
        let dims = shape.map(|n| 2 * n - 1);
        let cv = h.powi(dim as i32);
        let mut values = vec![0.0; dims.iter().product()];
        for k in 0..dims[2] {
            let dz = k as f64 - (shape[2] - 1) as f64;
            for j in 0..dims[1] {
                let dy = j as f64 - (shape[1] - 1) as f64;
                for i in 0..dims[0] {
                    let dx = i as f64 - (shape[0] - 1) as f64;
                    let r2 = (dx * dx + dy * dy + dz * dz) * h * h;
                    values[i + dims[0] * (j + dims[1] * k)] =
                        if r2 == 0.0 { self_value } else { cv * kernel.eval_sq(r2) };
                }
            }
        }
        Self { shape, dims, values }
    }

    /// Table for `s`'s box with the cell self term.
    pub fn for_set(kernel: &Kernel, s: &GridSet) -> Self {
        let selfv = self_energy(kernel.n(), kernel.alpha()) * s.h().powf(kernel.n() as f64 - kernel.alpha());
        Self::new(kernel, s.dim(), s.shape(), s.h(), selfv)
    }

    #[inline]
    pub fn get(&self, a: [usize; 3], b: [usize; 3]) -> f64 {
        let i = a[0] + self.shape[0] - 1 - b[0];
        let j = a[1] + self.shape[1] - 1 - b[1];
        let k = a[2] + self.shape[2] - 1 - b[2];
        self.values[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    /// Slice of table values for cells `(0.., j, k)` against source cell `src`:
    /// entry `i` is the value for offset `(i, j, k) - src`.
    #[inline]
    pub fn row(&self, src: [usize; 3], j: usize, k: usize) -> &[f64] {
        let jj = j + self.shape[1] - 1 - src[1];
        let kk = k + self.shape[2] - 1 - src[2];
        let start = self.shape[0] - 1 - src[0] + self.dims[0] * (jj + self.dims[1] * kk);
        &self.values[start..start + self.shape[0]]
    }
}

/// Convolution plan for a fixed box: `v = h^n K * u` with the cell self term.
pub struct RieszPlan {
    plan: ConvolutionPlan,
    len: usize,
}

impl RieszPlan {
    pub fn new(kernel: &Kernel, dim: usize, shape: [usize; 3], h: f64) -> Self {
        let cv = h.powi(dim as i32);
        let selfv = self_energy(kernel.n(), kernel.alpha()) * h.powf(kernel.n() as f64 - kernel.alpha());
        let k = *kernel;
        let plan = ConvolutionPlan::new(shape, move |o| {
            let r2 = ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64) * h * h;
            if r2 == 0.0 {
                selfv
            } else {
                cv * k.eval_sq(r2)
            }
        });
        Self {
            plan,
            len: shape.iter().product(),
        }
    }

    pub fn for_set(kernel: &Kernel, s: &GridSet) -> Self {
        Self::new(kernel, s.dim(), s.shape(), s.h())
    }

    /// Potential of a (possibly fractional) occupancy field on the box.
    pub fn potential(&self, weights: &[f64]) -> Vec<f64> {
        assert_eq!(weights.len(), self.len);
        self.plan.apply(weights)
    }

    /// `sum_i h^n w_i v_i` for a weight field.
    pub fn energy(&self, weights: &[f64], cell_volume: f64) -> f64 {
        let v = self.potential(weights);
        weights.iter().zip(&v).map(|(w, v)| w * v).sum::<f64>() * cell_volume
    }
}

fn occupancy(s: &GridSet) -> Vec<f64> {
    s.cells().iter().map(|&c| c as f64).collect()
}

/// The potential `v_F` at every cell center of the box.
pub fn potential_field(s: &GridSet, kernel: &Kernel, method: NonlocalMethod) -> Result<Vec<f64>> {
    kernel.check_grid(s.dim())?;
    if s.is_empty() {
        return Ok(vec![0.0; s.len()]);
    }
    Ok(match method {
        NonlocalMethod::Convolution => RieszPlan::for_set(kernel, s).potential(&occupancy(s)),
        NonlocalMethod::Direct => {
            let table = KernelTable::for_set(kernel, s);
            let occ: Vec<[usize; 3]> = s.occupied().map(|i| s.coords(i)).collect();
            let eval = |idx: usize| -> f64 {
                let c = s.coords(idx);
                occ.iter().map(|&o| table.get(c, o)).sum()
            };
            #[cfg(feature = "parallel")]
            let out = (0..s.len()).into_par_iter().map(eval).collect();
            #[cfg(not(feature = "parallel"))]
            let out = (0..s.len()).map(eval).collect();
            out
        }
    })
}

/// `v_F(x)` at an arbitrary point.
///
/// Cells not containing `x` act as point masses `h^n` at their centers. If
/// `x` falls inside an occupied cell, that cell contributes its
/// cell-averaged self potential `c_self h^(n - alpha)` instead of the
/// singular point value.
pub fn potential_at(s: &GridSet, kernel: &Kernel, x: &[f64]) -> Result<f64> {
    kernel.check_grid(s.dim())?;
    if x.len() != s.dim() {
        return Err(crate::Error::DimensionMismatch(x.len(), s.dim()));
    }
    let h = s.h();
    let cv = s.cell_volume();
    let org = s.origin();
    let shape = s.shape();
    let mut home = [0usize; 3];
    let mut inside = true;
    for a in 0..s.dim() {
        let q = ((x[a] - org[a]) / h).round();
        if q < 0.0 || q >= shape[a] as f64 {
            inside = false;
            break;
        }
        home[a] = q as usize;
    }
    let home_idx = inside.then(|| s.index(home[0], home[1], home[2]));
    let mut v = 0.0;
    for idx in s.occupied() {
        if Some(idx) == home_idx {
            v += self_energy(kernel.n(), kernel.alpha()) * h.powf(kernel.n() as f64 - kernel.alpha());
            continue;
        }
        let c = s.center(idx);
        let r2: f64 = (0..s.dim()).map(|a| (x[a] - c[a]).powi(2)).sum();
        v += cv * kernel.eval_sq(r2);
    }
    Ok(v)
}

/// `V(F) = sum over ordered pairs of occupied cells`, diagonal via `c_self`.
pub fn nonlocal_energy(s: &GridSet, kernel: &Kernel, method: NonlocalMethod) -> Result<f64> {
    kernel.check_grid(s.dim())?;
    if s.is_empty() {
        return Ok(0.0);
    }
    let cv = s.cell_volume();
    Ok(match method {
        NonlocalMethod::Convolution => RieszPlan::for_set(kernel, s).energy(&occupancy(s), cv),
        NonlocalMethod::Direct => {
            let table = KernelTable::for_set(kernel, s);
            let occ: Vec<[usize; 3]> = s.occupied().map(|i| s.coords(i)).collect();
            let row = |a: &[usize; 3]| -> f64 { occ.iter().map(|b| table.get(*a, *b)).sum() };
            #[cfg(feature = "parallel")]
            let rows: Vec<f64> = occ.par_iter().map(row).collect();
            #[cfg(not(feature = "parallel"))]
            let rows: Vec<f64> = occ.iter().map(row).collect();
            rows.iter().sum::<f64>() * cv
        }
    })
}

/// Nonlocal energy of a fractional occupancy field (weights in `[0, 1]`) on `s`'s box.
pub fn nonlocal_energy_weighted(
    s: &GridSet,
    kernel: &Kernel,
    weights: &[f64],
) -> Result<f64> {
    kernel.check_grid(s.dim())?;
    Ok(RieszPlan::for_set(kernel, s).energy(weights, s.cell_volume()))
}

/// `sum_{i in A, j in B} h^(2n) |x_i - x_j|^(-alpha)` for two sets on the same box.
pub fn cross_energy(a: &GridSet, b: &GridSet, kernel: &Kernel) -> Result<f64> {
    kernel.check_grid(a.dim())?;
    if !a.same_box(b) {
        return Err(crate::Error::GridMismatch);
    }
    let table = KernelTable::new(kernel, a.dim(), a.shape(), a.h(), 0.0);
    let ob: Vec<[usize; 3]> = b.occupied().map(|i| b.coords(i)).collect();
    let mut total = 0.0;
    for ia in a.occupied() {
        let ca = a.coords(ia);
        total += ob.iter().map(|cb| table.get(ca, *cb)).sum::<f64>();
    }
    Ok(total * a.cell_volume())
}

/// Interaction `sum_{i in A, j in B} h^(2n) |x_i - x_j|^(-alpha)` between two
/// sets with the same cell size, placed anywhere (no common box needed).
pub fn interaction(a: &GridSet, b: &GridSet, kernel: &Kernel) -> Result<f64> {
    kernel.check_grid(a.dim())?;
    if a.dim() != b.dim() {
        return Err(crate::Error::DimensionMismatch(a.dim(), b.dim()));
    }
    if (a.h() - b.h()).abs() > 1e-12 * a.h() {
        return Err(crate::Error::GridMismatch);
    }
    let pb: Vec<[f64; 3]> = b.occupied().map(|i| b.center(i)).collect();
    let pa: Vec<[f64; 3]> = a.occupied().map(|i| a.center(i)).collect();
    let row = |x: &[f64; 3]| -> f64 {
        pb.iter()
            .map(|y| {
                let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
                kernel.eval_sq(r2)
            })
            .sum()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<f64> = pa.par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<f64> = pa.iter().map(row).collect();
    Ok(rows.iter().sum::<f64>() * a.cell_volume() * a.cell_volume())
}
