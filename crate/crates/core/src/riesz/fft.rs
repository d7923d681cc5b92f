//! Zero-padded linear convolution on 2D/3D boxes via complex FFTs.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Smallest `m >= n` whose only prime factors are 2, 3 and 5.
fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

fn transform_nd(data: &mut [Complex<f64>], p: [usize; 3], plans: &[Arc<dyn Fft<f64>>]) {
    let strides = [1, p[0], p[0] * p[1]];
    for axis in 0..3 {
        let n = p[axis];
        if n == 1 {
            continue;
        }
        let fft = &plans[axis];
        let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        if axis == 0 {
            for line in data.chunks_exact_mut(n) {
                fft.process_with_scratch(line, &mut scratch);
            }
            continue;
        }
        let st = strides[axis];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for block in (0..data.len()).step_by(st * n) {
            for base in block..block + st {
                for (t, b) in buf.iter_mut().enumerate() {
                    *b = data[base + t * st];
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for (t, b) in buf.iter().enumerate() {
                    data[base + t * st] = *b;
                }
            }
        }
    }
}

/// Full linear cross-correlation `c[s] = sum_x a[x] * b[x - s]` of two box
/// fields, for every shift `s` with `-(b_shape - 1) <= s <= a_shape - 1`.
///
/// The result has shape `a_shape + b_shape - 1`; entry `q` holds the shift
/// `s = q - (b_shape - 1)`.
pub fn cross_correlation(
    a: &[f64],
    a_shape: [usize; 3],
    b: &[f64],
    b_shape: [usize; 3],
) -> (Vec<f64>, [usize; 3]) {
    let out_shape = [0, 1, 2].map(|ax| a_shape[ax] + b_shape[ax] - 1);
    let padded = out_shape.map(|n| if n == 1 { 1 } else { smooth_size(n) });
    let mut planner = FftPlanner::new();
    let forward: Vec<_> = padded.iter().map(|&p| planner.plan_fft_forward(p)).collect();
    let inverse: Vec<_> = padded.iter().map(|&p| planner.plan_fft_inverse(p)).collect();
    let len: usize = padded.iter().product();
    let at = |i: usize, j: usize, k: usize| i + padded[0] * (j + padded[1] * k);
    let mut fa = vec![Complex::new(0.0, 0.0); len];
    let mut fb = vec![Complex::new(0.0, 0.0); len];
    for k in 0..a_shape[2] {
        for j in 0..a_shape[1] {
            for i in 0..a_shape[0] {
                fa[at(i, j, k)].re = a[i + a_shape[0] * (j + a_shape[1] * k)];
            }
        }
    }
    // b is stored reversed so the product of transforms is a correlation
    for k in 0..b_shape[2] {
        for j in 0..b_shape[1] {
            for i in 0..b_shape[0] {
                let (ri, rj, rk) = (b_shape[0] - 1 - i, b_shape[1] - 1 - j, b_shape[2] - 1 - k);
                fb[at(ri, rj, rk)].re = b[i + b_shape[0] * (j + b_shape[1] * k)];
            }
        }
    }
    transform_nd(&mut fa, padded, &forward);
    transform_nd(&mut fb, padded, &forward);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    transform_nd(&mut fa, padded, &inverse);
    let scale = 1.0 / len as f64;
    let mut out = vec![0.0; out_shape.iter().product()];
    for k in 0..out_shape[2] {
        for j in 0..out_shape[1] {
            for i in 0..out_shape[0] {
                out[i + out_shape[0] * (j + out_shape[1] * k)] = fa[at(i, j, k)].re * scale;
            }
        }
    }
    (out, out_shape)
}

/// Linear (non-wrapping) convolution of box fields with a fixed kernel.
///
/// Each axis is padded to at least `2 * shape - 1`, so every offset the
/// kernel needs between two cells of the box has its own slot and nothing
/// wraps around.
pub struct ConvolutionPlan {
    shape: [usize; 3],
    padded: [usize; 3],
    kernel_hat: Vec<Complex<f64>>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl ConvolutionPlan {
    /// `kernel(offset)` is evaluated for every lattice offset in
    /// `(-shape, shape)` per axis; the zero offset included.
    pub fn new(shape: [usize; 3], kernel: impl Fn([i64; 3]) -> f64) -> Self {
        let padded = shape.map(|n| if n == 1 { 1 } else { smooth_size(2 * n - 1) });
        let mut planner = FftPlanner::new();
        let forward: Vec<_> = padded.iter().map(|&p| planner.plan_fft_forward(p)).collect();
        let inverse: Vec<_> = padded.iter().map(|&p| planner.plan_fft_inverse(p)).collect();
        let len: usize = padded.iter().product();
        let mut data = vec![Complex::new(0.0, 0.0); len];
        let to_offset = |q: usize, a: usize| -> Option<i64> {
            if q < shape[a] {
                Some(q as i64)
            } else if q + shape[a] > padded[a] {
                Some(q as i64 - padded[a] as i64)
            } else {
                None
            }
        };
        for k in 0..padded[2] {
            let Some(dz) = to_offset(k, 2) else { continue };
            for j in 0..padded[1] {
                let Some(dy) = to_offset(j, 1) else { continue };
                for i in 0..padded[0] {
                    let Some(dx) = to_offset(i, 0) else { continue };
                    data[i + padded[0] * (j + padded[1] * k)] =
                        Complex::new(kernel([dx, dy, dz]), 0.0);
                }
            }
        }
        let mut plan = Self {
            shape,
            padded,
            kernel_hat: Vec::new(),
            forward,
            inverse,
        };
        plan.transform(&mut data, false);
        plan.kernel_hat = data;
        plan
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    fn transform(&self, data: &mut [Complex<f64>], inverse: bool) {
        let plans = if inverse { &self.inverse } else { &self.forward };
        transform_nd(data, self.padded, plans);
    }

    /// `out[i] = sum_j field[j] * kernel(i - j)` over the box.
    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        let [nx, ny, nz] = self.shape;
        assert_eq!(field.len(), nx * ny * nz);
        let p = self.padded;
        let len: usize = p.iter().product();
        let mut data = vec![Complex::new(0.0, 0.0); len];
        for k in 0..nz {
            for j in 0..ny {
                let src = nx * (j + ny * k);
                let dst = p[0] * (j + p[1] * k);
                for i in 0..nx {
                    data[dst + i].re = field[src + i];
                }
            }
        }
        self.transform(&mut data, false);
        for (d, kh) in data.iter_mut().zip(&self.kernel_hat) {
            *d *= kh;
        }
        self.transform(&mut data, true);
        let scale = 1.0 / len as f64;
        let mut out = vec![0.0; field.len()];
        for k in 0..nz {
            for j in 0..ny {
                let dst = nx * (j + ny * k);
                let src = p[0] * (j + p[1] * k);
                for i in 0..nx {
                    out[dst + i] = data[src + i].re * scale;
                }
            }
        }
        out
    }
}
