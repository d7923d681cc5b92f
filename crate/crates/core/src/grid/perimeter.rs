//! Perimeter estimators for voxel sets.
//!
//! * `Facet` counts occupied/empty face adjacencies. It is the exact
//!   perimeter of the union of cells and overestimates curved boundaries.
//! * `SurfaceMesh` smooths the indicator with one 3^n box-filter pass and
//!   measures the 1/2-level set with marching squares (2D) or marching
//!   tetrahedra on the Kuhn split of each dual cube (3D).
//! * `Stencil` is a Cauchy-Crofton estimate over a fixed set of lattice
//!   directions with weights fitted for isotropy. It is local (a one-cell
//!   flip changes it through a bounded stencil) and sees every cell, which
//!   makes it the estimator used inside Metropolis moves.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::GridSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerimeterMethod {
    Facet,
    #[default]
    SurfaceMesh,
    Stencil,
}

pub fn perimeter(s: &GridSet, method: PerimeterMethod) -> f64 {
    match method {
        PerimeterMethod::Facet => facet(s),
        PerimeterMethod::SurfaceMesh => surface_mesh(s),
        PerimeterMethod::Stencil => stencil(s),
    }
}

fn facet(s: &GridSet) -> f64 {
    let mut faces = 0usize;
    for idx in s.occupied() {
        let c = s.coords(idx);
        let st = s.strides();
        for a in 0..s.dim() {
            if c[a] == 0 || s.cells[idx - st[a]] == 0 {
                faces += 1;
            }
            if c[a] + 1 == s.shape[a] || s.cells[idx + st[a]] == 0 {
                faces += 1;
            }
        }
    }
    faces as f64 * s.h.powi(s.dim() as i32 - 1)
}

/// Indicator averaged over the 3^n block around each cell (zero outside the box).
/// Indicator averaged over the `3^n` block around each cell.
pub(crate) fn box_smooth(s: &GridSet) -> Vec<f64> {
    let mut field: Vec<f64> = s.cells.iter().map(|&c| c as f64).collect();
    let st = s.strides();
    let mut tmp = vec![0.0; field.len()];
    for a in 0..s.dim() {
        let n = s.shape[a];
        for idx in 0..field.len() {
            let c = s.coords(idx)[a];
            let mut v = field[idx];
            if c > 0 {
                v += field[idx - st[a]];
            }
            if c + 1 < n {
                v += field[idx + st[a]];
            }
            tmp[idx] = v / 3.0;
        }
        std::mem::swap(&mut field, &mut tmp);
    }
    field
}

const ISO: f64 = 0.5;

fn surface_mesh(s: &GridSet) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let f = box_smooth(s);
    match s.dim() {
        2 => marching_squares(s, &f),
        _ => marching_tetrahedra(s, &f),
    }
}

fn lerp_point(p: [f64; 3], q: [f64; 3], fp: f64, fq: f64) -> [f64; 3] {
    let t = (ISO - fp) / (fq - fp);
    [
        p[0] + t * (q[0] - p[0]),
        p[1] + t * (q[1] - p[1]),
        p[2] + t * (q[2] - p[2]),
    ]
}

fn dist(p: [f64; 3], q: [f64; 3]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

fn marching_squares(s: &GridSet, f: &[f64]) -> f64 {
    let [nx, ny, _] = s.shape;
    // corners in counter-clockwise order
    const CORNERS: [[usize; 2]; 4] = [[0, 0], [1, 0], [1, 1], [0, 1]];
    let mut total = 0.0;
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v: [f64; 4] = CORNERS.map(|c| f[s.index(i + c[0], j + c[1], 0)]);
            let inside = v.map(|x| x >= ISO);
            let n_in = inside.iter().filter(|&&b| b).count();
            if n_in == 0 || n_in == 4 {
                continue;
            }
            let p = CORNERS.map(|c| [c[0] as f64, c[1] as f64, 0.0]);
            // crossing point on edge (k, k+1)
            let edge = |k: usize| {
                let l = (k + 1) % 4;
                lerp_point(p[k], p[l], v[k], v[l])
            };
            let cut_corner = |k: usize, total: &mut f64| {
                // segment separating corner k from the rest: edges (k-1,k) and (k,k+1)
                let a = edge((k + 3) % 4);
                let b = edge(k);
                *total += dist(a, b);
            };
            match n_in {
                1 | 3 => {
                    let lone = (0..4).find(|&k| inside[k] == (n_in == 1)).unwrap();
                    cut_corner(lone, &mut total);
                }
                _ => {
                    if inside[0] == inside[2] {
                        // saddle: resolve with the cell-center average
                        let center_in = v.iter().sum::<f64>() / 4.0 >= ISO;
                        for k in 0..4 {
                            if inside[k] != center_in {
                                cut_corner(k, &mut total);
                            }
                        }
                    } else {
                        let crossings: Vec<[f64; 3]> = (0..4)
                            .filter(|&k| inside[k] != inside[(k + 1) % 4])
                            .map(edge)
                            .collect();
                        total += dist(crossings[0], crossings[1]);
                    }
                }
            }
        }
    }
    total * s.h
}

fn tri_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let x = u[1] * v[2] - u[2] * v[1];
    let y = u[2] * v[0] - u[0] * v[2];
    let z = u[0] * v[1] - u[1] * v[0];
    0.5 * (x * x + y * y + z * z).sqrt()
}

fn tet_area(p: [[f64; 3]; 4], v: [f64; 4]) -> f64 {
    let inside = v.map(|x| x >= ISO);
    let n_in = inside.iter().filter(|&&b| b).count();
    match n_in {
        0 | 4 => 0.0,
        1 | 3 => {
            let lone = (0..4).find(|&k| inside[k] == (n_in == 1)).unwrap();
            let q: Vec<[f64; 3]> = (0..4)
                .filter(|&k| k != lone)
                .map(|k| lerp_point(p[lone], p[k], v[lone], v[k]))
                .collect();
            tri_area(q[0], q[1], q[2])
        }
        _ => {
            let ins: Vec<usize> = (0..4).filter(|&k| inside[k]).collect();
            let out: Vec<usize> = (0..4).filter(|&k| !inside[k]).collect();
            let (a, b, c, d) = (ins[0], ins[1], out[0], out[1]);
            let ac = lerp_point(p[a], p[c], v[a], v[c]);
            let ad = lerp_point(p[a], p[d], v[a], v[d]);
            let bd = lerp_point(p[b], p[d], v[b], v[d]);
            let bc = lerp_point(p[b], p[c], v[b], v[c]);
            tri_area(ac, ad, bd) + tri_area(ac, bd, bc)
        }
    }
}

/// The six tetrahedra of the Kuhn split of the unit cube, as corner bit masks.
fn kuhn_tets() -> [[usize; 4]; 6] {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    PERMS.map(|p| {
        let a = 1 << p[0];
        let b = a | (1 << p[1]);
        [0, a, b, 7]
    })
}

fn marching_tetrahedra(s: &GridSet, f: &[f64]) -> f64 {
    let [nx, ny, nz] = s.shape;
    let tets = kuhn_tets();
    let corner_pos: [[f64; 3]; 8] =
        std::array::from_fn(|m| [(m & 1) as f64, ((m >> 1) & 1) as f64, ((m >> 2) & 1) as f64]);
    let mut total = 0.0;
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let v: [f64; 8] =
                    std::array::from_fn(|m| f[s.index(i + (m & 1), j + ((m >> 1) & 1), k + (m >> 2))]);
                let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if hi < ISO || lo >= ISO {
                    continue;
                }
                for t in &tets {
                    total += tet_area(t.map(|m| corner_pos[m]), t.map(|m| v[m]));
                }
            }
        }
    }
    total * s.h * s.h
}

/// Lattice directions (one of each +/- pair) and their Crofton weights.
pub fn stencil_weights(dim: usize) -> &'static [([i64; 3], f64)] {
    static W2: OnceLock<Vec<([i64; 3], f64)>> = OnceLock::new();
    static W3: OnceLock<Vec<([i64; 3], f64)>> = OnceLock::new();
    match dim {
        2 => W2.get_or_init(|| fit_weights(2)),
        _ => W3.get_or_init(|| fit_weights(3)),
    }
}

fn direction_classes(dim: usize) -> Vec<Vec<[i64; 3]>> {
    let generators: &[[i64; 3]] = if dim == 2 {
        &[[1, 0, 0], [1, 1, 0], [2, 1, 0]]
    } else {
        &[[1, 0, 0], [1, 1, 0], [1, 1, 1], [2, 1, 0], [2, 1, 1]]
    };
    generators.iter().map(|&g| orbit(g, dim)).collect()
}

/// All coordinate permutations and sign changes of `g`, one of each `+/-` pair.
fn orbit(g: [i64; 3], dim: usize) -> Vec<[i64; 3]> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out: Vec<[i64; 3]> = Vec::new();
    for p in PERMS {
        for signs in 0..8 {
            let mut k = [0i64; 3];
            for a in 0..3 {
                k[a] = g[p[a]] * if signs >> a & 1 == 1 { -1 } else { 1 };
            }
            if k[dim..].iter().any(|&x| x != 0) {
                continue;
            }
            // canonical representative: first nonzero entry positive
            let first = k.iter().copied().find(|&x| x != 0).unwrap_or(0);
            if first < 0 || out.contains(&k) {
                continue;
            }
            out.push(k);
        }
    }
    out
}

/// Weights per direction class so that `sum_k w_k |nu . k|` is as close to
/// 1 as possible over unit normals `nu`, in the max norm (Lawson's
/// iteratively reweighted least squares).
fn fit_weights(dim: usize) -> Vec<([i64; 3], f64)> {
    let classes = direction_classes(dim);
    let nc = classes.len();
    let normals: Vec<[f64; 3]> = if dim == 2 {
        let n = 2048;
        (0..n)
            .map(|i| {
                let th = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                [th.cos(), th.sin(), 0.0]
            })
            .collect()
    } else {
        let n = 4096;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                [r * phi.cos(), r * phi.sin(), z]
            })
            .collect()
    };
    let rows: Vec<Vec<f64>> = normals
        .iter()
        .map(|nu| {
            classes
                .iter()
                .map(|cl| {
                    cl.iter()
                        .map(|k| (0..3).map(|a| nu[a] * k[a] as f64).sum::<f64>().abs())
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut u = vec![1.0 / rows.len() as f64; rows.len()];
    let mut w = vec![0.0; nc];
    for _ in 0..300 {
        let mut ata = vec![vec![0.0; nc]; nc];
        let mut atb = vec![0.0; nc];
        for (row, &ui) in rows.iter().zip(&u) {
            for p in 0..nc {
                atb[p] += ui * row[p];
                for q in 0..nc {
                    ata[p][q] += ui * row[p] * row[q];
                }
            }
        }
        w = solve_dense(ata, atb);
        let mut total = 0.0;
        for (row, ui) in rows.iter().zip(u.iter_mut()) {
            let r: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
            *ui *= r.abs();
            total += *ui;
        }
        if total == 0.0 {
            break;
        }
        u.iter_mut().for_each(|x| *x /= total);
    }
    classes
        .iter()
        .zip(w)
        .flat_map(|(cl, wc)| cl.iter().map(move |&k| (k, wc)))
        .collect()
}

/// Gaussian elimination with partial pivoting for small dense systems.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[inline]
fn offset_index(s: &GridSet, c: [usize; 3], k: [i64; 3], sign: i64) -> Option<usize> {
    let mut t = [0usize; 3];
    for a in 0..3 {
        let v = c[a] as i64 + sign * k[a];
        if v < 0 || v >= s.shape[a] as i64 {
            return None;
        }
        t[a] = v as usize;
    }
    Some(s.index(t[0], t[1], t[2]))
}

fn stencil(s: &GridSet) -> f64 {
    let w = stencil_weights(s.dim());
    let mut total = 0.0;
    for idx in s.occupied() {
        let c = s.coords(idx);
        for &(k, wk) in w {
            for sign in [-1, 1] {
                match offset_index(s, c, k, sign) {
                    Some(j) if s.cells[j] != 0 => {}
                    _ => total += wk,
                }
            }
        }
    }
    total * s.h.powi(s.dim() as i32 - 1)
}

/// Change of the stencil perimeter if cell `idx` were flipped.
pub fn stencil_flip_delta(s: &GridSet, idx: usize) -> f64 {
    let w = stencil_weights(s.dim());
    let c = s.coords(idx);
    let me = s.cells[idx] != 0;
    let mut delta = 0.0;
    for &(k, wk) in w {
        for sign in [-1, 1] {
            let other = offset_index(s, c, k, sign).map_or(false, |j| s.cells[j] != 0);
            // differs before the flip -> equal after, and vice versa
            delta += if me != other { -wk } else { wk };
        }
    }
    delta * s.h.powi(s.dim() as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ball(dim: usize, r: f64, h: f64) -> GridSet {
        GridSet::rasterize(dim, h, [-r; 3], [r; 3], |x| {
            (0..dim).map(|a| x[a] * x[a]).sum::<f64>() < r * r
        })
        .unwrap()
    }

    #[test]
    fn cube_facet_perimeter_is_exact() {
        let h = 1.0 / 16.0;
        let cube = GridSet::rasterize(3, h, [0.0; 3], [0.5; 3], |x| {
            (0..3).all(|a| x[a] > -1e-9 && x[a] < 0.5 - 1e-9)
        })
        .unwrap();
        assert_eq!(cube.volume(), 0.125);
        assert!((perimeter(&cube, PerimeterMethod::Facet) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn empty_set_has_zero_perimeter() {
        let s = GridSet::new(3, [6, 6, 6], 0.1, [0.0; 3]).unwrap();
        for m in [PerimeterMethod::Facet, PerimeterMethod::SurfaceMesh, PerimeterMethod::Stencil] {
            assert_eq!(perimeter(&s, m), 0.0);
        }
    }

    #[test]
    fn ball_surface_mesh_perimeter() {
        let s = ball(3, 0.5, 1.0 / 64.0);
        let p = perimeter(&s, PerimeterMethod::SurfaceMesh);
        assert!((p - PI).abs() / PI < 0.015, "{p}");
    }

    #[test]
    fn disk_perimeter_2d() {
        let s = ball(2, 1.0, 1.0 / 32.0);
        let p = perimeter(&s, PerimeterMethod::SurfaceMesh);
        assert!((p - 2.0 * PI).abs() / (2.0 * PI) < 0.01, "{p}");
        let q = perimeter(&s, PerimeterMethod::Stencil);
        assert!((q - 2.0 * PI).abs() / (2.0 * PI) < 0.03, "{q}");
    }

    #[test]
    fn stencil_perimeter_is_nearly_isotropic() {
        let s = ball(3, 1.0, 1.0 / 24.0);
        let p = perimeter(&s, PerimeterMethod::Stencil);
        assert!((p - 4.0 * PI).abs() / (4.0 * PI) < 0.03, "{p}");
    }

    #[test]
    fn stencil_density_is_flat_over_normals() {
        for dim in [2, 3] {
            let w = stencil_weights(dim);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..2000 {
                let nu = if dim == 2 {
                    let t = PI * i as f64 / 2000.0;
                    [t.cos(), t.sin(), 0.0]
                } else {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / 2000.0;
                    let r = (1.0 - z * z).sqrt();
                    let phi = 2.399963 * i as f64;
                    [r * phi.cos(), r * phi.sin(), z]
                };
                let d: f64 = w
                    .iter()
                    .map(|(k, wk)| wk * (0..3).map(|a| nu[a] * k[a] as f64).sum::<f64>().abs())
                    .sum();
                lo = lo.min(d);
                hi = hi.max(d);
            }
            assert!(hi - lo < 0.03, "{dim}: {lo} {hi}");
            assert!(w.iter().all(|(_, wk)| *wk > 0.0));
        }
    }

    #[test]
    fn flip_delta_matches_recomputation() {
        let mut s = ball(3, 0.4, 0.1);
        let base = perimeter(&s, PerimeterMethod::Stencil);
        for idx in [s.index(5, 5, 5), s.index(2, 5, 5), s.index(1, 5, 5), s.index(3, 2, 5)] {
            let d = stencil_flip_delta(&s, idx);
            let was = s.get(idx);
            s.cells[idx] = (!was) as u8;
            let after = perimeter(&s, PerimeterMethod::Stencil);
            s.cells[idx] = was as u8;
            assert!((after - base - d).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_cell_has_positive_stencil_perimeter() {
        let mut s = GridSet::new(3, [5, 5, 5], 0.1, [0.0; 3]).unwrap();
        let c = s.index(2, 2, 2);
        s.set(c, true).unwrap();
        assert!(perimeter(&s, PerimeterMethod::Stencil) > 0.0);
        assert!(perimeter(&s, PerimeterMethod::Facet) > 0.0);
    }
}
