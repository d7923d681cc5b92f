//! Binary voxel sets on a regular lattice and their geometric measurements.
//!
//! A [`GridSet`] stores one byte per cell (0 or 1) on an axis-aligned box of
//! `shape[0] x shape[1] x shape[2]` cells (the third extent is 1 in two
//! dimensions). Cell `(i, j, k)` has its center at `origin + h * (i, j, k)`.
//! Every constructor keeps a one-cell empty margin around the occupied cells
//! so the set is compactly contained in the box.

mod perimeter;
mod raster;

pub(crate) use perimeter::box_smooth;
pub use perimeter::{perimeter, stencil_flip_delta, stencil_weights, PerimeterMethod};
pub use raster::{read_raster, write_raster, RASTER_MAGIC};

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Physical extent of the box a [`GridSet`] lives on.
///
/// Energies are always evaluated over the whole space; `periodic` is kept
/// for completeness of the record and is never set by this crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDomain {
    pub lo: [f64; 3],
    pub extents: [f64; 3],
    pub periodic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    dim: usize,
    shape: [usize; 3],
    h: f64,
    origin: [f64; 3],
    cells: Vec<u8>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")))
    }
}

impl GridSet {
    /// An empty set on a box with the given cell counts.
    pub fn new(dim: usize, shape: [usize; 3], h: f64, origin: [f64; 3]) -> Result<Self> {
        check_dim(dim)?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        let mut shape = shape;
        let mut origin = origin;
        if dim == 2 {
            shape[2] = 1;
            origin[2] = 0.0;
        }
        for a in 0..dim {
            if shape[a] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} cells; at least 3 are needed for the margin",
                    shape[a]
                )));
            }
        }
        let len = shape.iter().product();
        Ok(Self {
            dim,
            shape,
            h,
            origin,
            cells: vec![0; len],
        })
    }

    /// Builds a set from raw occupancy bytes, validating values and the margin.
    pub fn from_cells(
        dim: usize,
        shape: [usize; 3],
        h: f64,
        origin: [f64; 3],
        cells: Vec<u8>,
    ) -> Result<Self> {
        let mut s = Self::new(dim, shape, h, origin)?;
        if cells.len() != s.cells.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} cells, got {}",
                s.cells.len(),
                cells.len()
            )));
        }
        for (idx, &c) in cells.iter().enumerate() {
            match c {
                0 => {}
                1 => {
                    if s.is_margin(idx) {
                        return Err(Error::BoxTooSmall(
                            "occupied cell in the one-cell margin".into(),
                        ));
                    }
                }
                v => return Err(Error::InvalidGrid(format!("cell value {v} is not 0/1"))),
            }
        }
        s.cells = cells;
        Ok(s)
    }

    /// An empty lattice-aligned box whose interior cell centers cover `[lo, hi]`.
    ///
    /// Cell centers lie on the global lattice `h * Z^n`, so any two boxes
    /// built this way with the same `h` can be aligned exactly.
    pub fn covering(dim: usize, h: f64, lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        check_dim(dim)?;
        let mut shape = [1usize; 3];
        let mut origin = [0.0; 3];
        for a in 0..dim {
            if !(hi[a] >= lo[a]) {
                return Err(Error::InvalidGrid(format!("empty range on axis {a}")));
            }
            let first = (lo[a] / h).floor() as i64 - 1;
            let last = (hi[a] / h).ceil() as i64 + 1;
            shape[a] = (last - first + 1) as usize;
            origin[a] = first as f64 * h;
        }
        Self::new(dim, shape, h, origin)
    }

    /// Occupies every interior cell of `covering(dim, h, lo, hi)` whose
    /// center satisfies `inside`.
    pub fn rasterize(
        dim: usize,
        h: f64,
        lo: [f64; 3],
        hi: [f64; 3],
        inside: impl Fn([f64; 3]) -> bool,
    ) -> Result<Self> {
        let mut s = Self::covering(dim, h, lo, hi)?;
        for idx in 0..s.cells.len() {
            if !s.is_margin(idx) && inside(s.center(idx)) {
                s.cells[idx] = 1;
            }
        }
        Ok(s)
    }

    /// The `count` cells whose centers are nearest to `center`, ties broken
    /// by cell index.
    pub fn lattice_ball(dim: usize, h: f64, center: [f64; 3], count: usize) -> Result<Self> {
        check_dim(dim)?;
        let omega = crate::quad::unit_ball_volume(dim);
        let mut r = (count as f64 * h.powi(dim as i32) / omega).powf(1.0 / dim as f64) + 2.0 * h;
        loop {
            let mut lo = [0.0; 3];
            let mut hi = [0.0; 3];
            for a in 0..dim {
                lo[a] = center[a] - r;
                hi[a] = center[a] + r;
            }
            let mut s = Self::covering(dim, h, lo, hi)?;
            let mut cand: Vec<(f64, usize)> = (0..s.cells.len())
                .filter(|&i| !s.is_margin(i))
                .map(|i| {
                    let c = s.center(i);
                    let d2: f64 = (0..dim).map(|a| (c[a] - center[a]).powi(2)).sum();
                    (d2, i)
                })
                .filter(|&(d2, _)| d2 <= r * r)
                .collect();
            if cand.len() < count {
                r *= 1.25;
                continue;
            }
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, i) in &cand[..count] {
                s.cells[i] = 1;
            }
            return Ok(s);
        }
    }

    /// Multilinear interpolation of a per-cell field at `x`; zero outside the box.
    pub fn interpolate(&self, field: &[f64], x: [f64; 3]) -> f64 {
        let mut base = [0i64; 3];
        let mut frac = [0.0; 3];
        for a in 0..self.dim {
            let q = (x[a] - self.origin[a]) / self.h;
            let f = q.floor();
            base[a] = f as i64;
            frac[a] = q - f;
        }
        let corners = 1usize << self.dim;
        let mut acc = 0.0;
        for corner in 0..corners {
            let mut w = 1.0;
            let mut c = [0usize; 3];
            let mut inside = true;
            for a in 0..self.dim {
                let up = (corner >> a) & 1 == 1;
                let g = base[a] + i64::from(up);
                if g < 0 || g >= self.shape[a] as i64 {
                    inside = false;
                    break;
                }
                c[a] = g as usize;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
            }
            if inside && w > 0.0 {
                acc += w * field[self.index(c[0], c[1], c[2])];
            }
        }
        acc
    }

    /// Same lattice and box, no occupied cells.
    pub fn empty_like(&self) -> Self {
        Self {
            cells: vec![0; self.cells.len()],
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    /// Number of lattice cells in the box (occupied or not).
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn domain(&self) -> BoxDomain {
        let mut lo = [0.0; 3];
        let mut extents = [0.0; 3];
        for a in 0..self.dim {
            lo[a] = self.origin[a] - 0.5 * self.h;
            extents[a] = self.shape[a] as f64 * self.h;
        }
        BoxDomain {
            lo,
            extents,
            periodic: false,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.shape[0];
        let r = idx / self.shape[0];
        [i, r % self.shape[1], r / self.shape[1]]
    }

    #[inline]
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.origin[a] + self.h * c[a] as f64;
        }
        x
    }

    /// Integer lattice coordinates of the box origin (`origin / h`).
    pub fn lattice_origin(&self) -> Result<[i64; 3]> {
        let mut o = [0i64; 3];
        for a in 0..self.dim {
            let q = self.origin[a] / self.h;
            let r = q.round();
            if (q - r).abs() > 1e-6 {
                return Err(Error::GridMismatch);
            }
            o[a] = r as i64;
        }
        Ok(o)
    }

    #[inline]
    pub fn is_margin(&self, idx: usize) -> bool {
        let c = self.coords(idx);
        (0..self.dim).any(|a| c[a] == 0 || c[a] + 1 == self.shape[a])
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        self.cells[idx] != 0
    }

    /// Sets one cell; occupying a margin cell is rejected.
    pub fn set(&mut self, idx: usize, occupied: bool) -> Result<()> {
        if occupied && self.is_margin(idx) {
            return Err(Error::BoxTooSmall("cannot occupy a margin cell".into()));
        }
        self.cells[idx] = occupied as u8;
        Ok(())
    }

    /// Number of occupied cells.
    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|&c| c == 0)
    }

    /// Occupied-cell count times `h^n`.
    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.cell_volume()
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, _)| i)
    }

    /// Strides of the flat index along each axis.
    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        [1, self.shape[0], self.shape[0] * self.shape[1]]
    }

    /// Face neighbors of a cell that lie inside the box.
    pub fn face_neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.coords(idx);
        let st = self.strides();
        (0..self.dim).flat_map(move |a| {
            let down = (c[a] > 0).then(|| idx - st[a]);
            let up = (c[a] + 1 < self.shape[a]).then(|| idx + st[a]);
            down.into_iter().chain(up)
        })
    }

    /// Inclusive lattice bounding box `(min, max)` of the occupied cells.
    pub fn bounding_box(&self) -> Option<([usize; 3], [usize; 3])> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for idx in self.occupied() {
            any = true;
            let c = self.coords(idx);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        any.then_some((lo, hi))
    }

    pub fn barycenter(&self) -> Option<[f64; 3]> {
        let mut acc = [0.0; 3];
        let mut n = 0usize;
        for idx in self.occupied() {
            let x = self.center(idx);
            for a in 0..3 {
                acc[a] += x[a];
            }
            n += 1;
        }
        (n > 0).then(|| acc.map(|v| v / n as f64))
    }

    /// Cells with an empty face neighbor.
    pub fn is_boundary_cell(&self, idx: usize) -> bool {
        self.get(idx) && self.face_neighbors(idx).any(|j| !self.get(j))
    }

    /// Sizes (cell counts) of the face-connected components, in order of
    /// their lowest flat index.
    pub fn component_sizes(&self) -> Vec<usize> {
        self.component_labels().1
    }

    fn component_labels(&self) -> (Vec<u32>, Vec<usize>) {
        const NONE: u32 = u32::MAX;
        let mut label = vec![NONE; self.cells.len()];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.cells.len() {
            if !self.get(start) || label[start] != NONE {
                continue;
            }
            let id = sizes.len() as u32;
            label[start] = id;
            queue.push_back(start);
            let mut size = 0;
            while let Some(idx) = queue.pop_front() {
                size += 1;
                for j in self.face_neighbors(idx) {
                    if self.get(j) && label[j] == NONE {
                        label[j] = id;
                        queue.push_back(j);
                    }
                }
            }
            sizes.push(size);
        }
        (label, sizes)
    }

    /// Face-connected components, each on this set's lattice and box.
    pub fn components(&self) -> Vec<GridSet> {
        let (label, sizes) = self.component_labels();
        let mut out: Vec<GridSet> = sizes.iter().map(|_| self.empty_like()).collect();
        for (idx, &l) in label.iter().enumerate() {
            if l != u32::MAX {
                out[l as usize].cells[idx] = 1;
            }
        }
        out
    }

    /// Maximum distance between occupied cell centers.
    ///
    /// The farthest pair is a pair of convex-hull vertices, and every hull
    /// vertex is the first or last occupied cell of its lattice row along
    /// axis 0, so only those row extremes are compared.
    pub fn essential_diameter(&self) -> Result<f64> {
        let [nx, ny, nz] = self.shape;
        let mut cand: Vec<[f64; 3]> = Vec::new();
        for k in 0..nz {
            for j in 0..ny {
                let row = self.index(0, j, k);
                let first = (0..nx).find(|&i| self.cells[row + i] != 0);
                if let Some(f) = first {
                    let last = (0..nx).rev().find(|&i| self.cells[row + i] != 0).unwrap();
                    cand.push(self.center(row + f));
                    if last != f {
                        cand.push(self.center(row + last));
                    }
                }
            }
        }
        if cand.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut best = 0.0f64;
        for (i, p) in cand.iter().enumerate() {
            for q in &cand[i + 1..] {
                let d2 = (0..3).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>();
                best = best.max(d2);
            }
        }
        Ok(best.sqrt())
    }

    /// Occupied-cell count of each lattice slice perpendicular to `axis`,
    /// from the lowest occupied slice to the highest.
    fn slice_counts(&self, axis: usize) -> Vec<usize> {
        let Some((lo, hi)) = self.bounding_box() else {
            return Vec::new();
        };
        let mut counts = vec![0usize; hi[axis] - lo[axis] + 1];
        for idx in self.occupied() {
            counts[self.coords(idx)[axis] - lo[axis]] += 1;
        }
        counts
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(axis + 1, self.dim))
        }
    }

    /// Volume of the part of the set in the slab `0 < x' <= t`, where `x'`
    /// is measured along `axis` from the lower face of the lowest occupied
    /// slice. A lattice slice is counted when its center lies in the slab.
    pub fn cross_section_mass(&self, axis: usize, t: f64) -> Result<f64> {
        self.check_axis(axis)?;
        let counts = self.slice_counts(axis);
        let cv = self.cell_volume();
        let mut acc = 0usize;
        for (s, &c) in counts.iter().enumerate() {
            if (s as f64 + 0.5) * self.h <= t {
                acc += c;
            } else {
                break;
            }
        }
        Ok(acc as f64 * cv)
    }

    /// `h^(n-1)` times the occupied count of the slice containing `t`
    /// (same relative coordinate as [`cross_section_mass`](Self::cross_section_mass)).
    pub fn cross_section_area(&self, axis: usize, t: f64) -> Result<f64> {
        self.check_axis(axis)?;
        let counts = self.slice_counts(axis);
        let extent = counts.len() as f64 * self.h;
        if counts.is_empty() || t < 0.0 || t > extent {
            return Ok(0.0);
        }
        let s = ((t / self.h).floor() as usize).min(counts.len() - 1);
        Ok(counts[s] as f64 * self.h.powi(self.dim as i32 - 1))
    }

    /// Extent along `axis` of the occupied slices (`count * h`).
    pub fn slice_extent(&self, axis: usize) -> f64 {
        self.slice_counts(axis).len() as f64 * self.h
    }

    /// Mirror image through the box center along `axis`.
    pub fn reflect(&self, axis: usize) -> Result<GridSet> {
        self.check_axis(axis)?;
        let mut out = self.empty_like();
        let n = self.shape[axis];
        let st = self.strides()[axis];
        for idx in self.occupied() {
            let c = self.coords(idx)[axis];
            let target = idx - c * st + (n - 1 - c) * st;
            out.cells[target] = 1;
        }
        Ok(out)
    }

    /// Copies this set into a box of `shape` whose lattice origin is
    /// `lattice_origin` (in units of `h`).
    pub fn reembed(&self, lattice_origin: [i64; 3], shape: [usize; 3]) -> Result<GridSet> {
        let own = self.lattice_origin()?;
        let mut origin = [0.0; 3];
        for a in 0..self.dim {
            origin[a] = lattice_origin[a] as f64 * self.h;
        }
        let mut out = GridSet::new(self.dim, shape, self.h, origin)?;
        for idx in self.occupied() {
            let c = self.coords(idx);
            let mut t = [0usize; 3];
            for a in 0..self.dim {
                let g = own[a] + c[a] as i64 - lattice_origin[a];
                if g < 1 || g as usize + 1 >= out.shape[a] {
                    return Err(Error::BoxTooSmall("re-embedding drops occupied cells".into()));
                }
                t[a] = g as usize;
            }
            let ti = out.index(t[0], t[1], t[2]);
            out.cells[ti] = 1;
        }
        Ok(out)
    }

    /// Embeds two sets on the same lattice into one common box.
    pub fn align(a: &GridSet, b: &GridSet) -> Result<(GridSet, GridSet)> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch(a.dim, b.dim));
        }
        if (a.h - b.h).abs() > 1e-12 * a.h {
            return Err(Error::GridMismatch);
        }
        let oa = a.lattice_origin()?;
        let ob = b.lattice_origin()?;
        let mut lo = [0i64; 3];
        let mut shape = [1usize; 3];
        for ax in 0..a.dim {
            lo[ax] = oa[ax].min(ob[ax]);
            let hi = (oa[ax] + a.shape[ax] as i64).max(ob[ax] + b.shape[ax] as i64);
            shape[ax] = (hi - lo[ax]) as usize;
        }
        Ok((a.reembed(lo, shape)?, b.reembed(lo, shape)?))
    }

    /// Cellwise union of two sets on the same box.
    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        self.check_same_box(other)?;
        let mut out = self.clone();
        for (o, &c) in out.cells.iter_mut().zip(&other.cells) {
            *o |= c;
        }
        Ok(out)
    }

    /// Cells of `self` not in `other` (same box).
    pub fn difference(&self, other: &GridSet) -> Result<GridSet> {
        self.check_same_box(other)?;
        let mut out = self.clone();
        for (o, &c) in out.cells.iter_mut().zip(&other.cells) {
            *o &= 1 - c;
        }
        Ok(out)
    }

    /// Number of cells occupied in both sets (same box).
    pub fn overlap_count(&self, other: &GridSet) -> Result<usize> {
        self.check_same_box(other)?;
        Ok(self
            .cells
            .iter()
            .zip(&other.cells)
            .filter(|(&a, &b)| a & b != 0)
            .count())
    }

    pub fn same_box(&self, other: &GridSet) -> bool {
        self.dim == other.dim
            && self.shape == other.shape
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (0..3).all(|a| (self.origin[a] - other.origin[a]).abs() <= 1e-9 * self.h)
    }

    fn check_same_box(&self, other: &GridSet) -> Result<()> {
        if self.same_box(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Shrinks the box to the occupied bounding box plus `pad` empty cells
    /// per side (at least the one-cell margin).
    pub fn cropped(&self, pad: usize) -> Result<GridSet> {
        let (lo, hi) = self.bounding_box().ok_or(Error::EmptySet)?;
        let pad = pad.max(1) as i64;
        let own = self.lattice_origin()?;
        let mut org = [0i64; 3];
        let mut shape = [1usize; 3];
        for a in 0..self.dim {
            org[a] = own[a] + lo[a] as i64 - pad;
            shape[a] = hi[a] - lo[a] + 1 + 2 * pad as usize;
        }
        self.reembed(org, shape)
    }

    /// Translates the set by an integer lattice vector, growing the box as needed.
    pub fn translated(&self, shift: [i64; 3]) -> Result<GridSet> {
        let own = self.lattice_origin()?;
        let mut org = own;
        for a in 0..self.dim {
            org[a] += shift[a];
        }
        let mut moved = self.clone();
        for a in 0..self.dim {
            moved.origin[a] = org[a] as f64 * self.h;
        }
        Ok(moved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ball(dim: usize, r: f64, h: f64, c: [f64; 3]) -> GridSet {
        let lo = [c[0] - r, c[1] - r, c[2] - r];
        let hi = [c[0] + r, c[1] + r, c[2] + r];
        GridSet::rasterize(dim, h, lo, hi, |x| {
            (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>() < r * r
        })
        .unwrap()
    }

    fn unit_cube(dim: usize, h: f64) -> GridSet {
        GridSet::rasterize(dim, h, [0.0; 3], [1.0; 3], |x| {
            (0..dim).all(|a| x[a] > -1e-9 && x[a] < 1.0 - 1e-9)
        })
        .unwrap()
    }

    #[test]
    fn empty_set_volume_is_zero() {
        let s = GridSet::new(3, [8, 8, 8], 0.1, [0.0; 3]).unwrap();
        assert_eq!(s.volume(), 0.0);
        assert!(s.components().is_empty());
        assert_eq!(s.essential_diameter(), Err(Error::EmptySet));
    }

    #[test]
    fn unit_box_volume() {
        for &h in &[0.5, 0.25, 0.125] {
            let s = GridSet::rasterize(3, h, [0.0; 3], [1.0; 3], |x| {
                (0..3).all(|a| x[a] > 0.0 && x[a] < 1.0 + 1e-9)
            })
            .unwrap();
            assert_eq!(s.volume(), 1.0, "h = {h}");
        }
    }

    #[test]
    fn lattice_ball_has_requested_count() {
        for (dim, count) in [(2, 1), (2, 317), (3, 1000), (3, 4189)] {
            let b = GridSet::lattice_ball(dim, 0.1, [0.25, -0.3, 0.0], count).unwrap();
            assert_eq!(b.count(), count);
            let c = b.barycenter().unwrap();
            assert!((c[0] - 0.25).abs() < 0.1 && (c[1] + 0.3).abs() < 0.1);
        }
    }

    #[test]
    fn rasterized_ball_volume() {
        let s = ball(3, 0.5, 1.0 / 64.0, [0.0; 3]);
        let exact = 4.0 * PI / 3.0 * 0.125;
        assert!((s.volume() - exact).abs() / exact < 0.01);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(GridSet::new(4, [5, 5, 5], 0.1, [0.0; 3]).is_err());
        assert!(GridSet::new(3, [5, 5, 5], 0.0, [0.0; 3]).is_err());
        assert!(GridSet::new(3, [2, 5, 5], 0.1, [0.0; 3]).is_err());
        let mut cells = vec![0u8; 27];
        cells[0] = 1;
        assert!(matches!(
            GridSet::from_cells(3, [3, 3, 3], 1.0, [0.0; 3], cells),
            Err(Error::BoxTooSmall(_))
        ));
        let mut s = GridSet::new(2, [4, 4, 1], 1.0, [0.0; 3]).unwrap();
        assert!(s.set(0, true).is_err());
        assert!(s.set(s.index(1, 1, 0), true).is_ok());
    }

    #[test]
    fn diameter_examples() {
        let mut s = GridSet::new(3, [5, 5, 5], 0.1, [0.0; 3]).unwrap();
        let c = s.index(2, 2, 2);
        s.set(c, true).unwrap();
        assert_eq!(s.essential_diameter().unwrap(), 0.0);

        let h = 1.0 / 16.0;
        let b = ball(3, 1.0, h, [0.0; 3]);
        assert!((b.essential_diameter().unwrap() - 2.0).abs() <= 2.0 * h);

        let two = GridSet::rasterize(3, h, [-0.5, -0.5, -0.5], [3.5, 0.5, 0.5], |x| {
            let d0 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let d1 = (x[0] - 3.0).powi(2) + x[1] * x[1] + x[2] * x[2];
            d0 < 0.25 || d1 < 0.25
        })
        .unwrap();
        assert!((two.essential_diameter().unwrap() - 4.0).abs() <= 2.0 * h);
        assert_eq!(two.components().len(), 2);
        assert_eq!(b.components().len(), 1);
    }

    #[test]
    fn diameter_matches_all_pairs() {
        let h = 0.1;
        let s = GridSet::rasterize(3, h, [-1.0; 3], [1.0; 3], |x| {
            (x[0] * 3.1).sin() + (x[1] * 2.3).cos() * x[2] > 0.4
        })
        .unwrap();
        let pts: Vec<_> = s.occupied().map(|i| s.center(i)).collect();
        let mut best = 0.0f64;
        for p in &pts {
            for q in &pts {
                best = best.max((0..3).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>());
            }
        }
        assert!((s.essential_diameter().unwrap() - best.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn components_partition_the_set() {
        let h = 0.125;
        let s = GridSet::rasterize(3, h, [-1.0; 3], [1.0; 3], |x| {
            ((x[0] * 5.0).sin() * (x[1] * 4.0).cos() + x[2]).abs() < 0.15
        })
        .unwrap();
        let comps = s.components();
        assert!(comps.len() > 1);
        let total: usize = comps.iter().map(|c| c.count()).sum();
        assert_eq!(total, s.count());
        let vol: f64 = comps.iter().map(|c| c.volume()).sum();
        assert_eq!(vol, s.volume());
        let mut acc = s.empty_like();
        for c in &comps {
            assert_eq!(acc.overlap_count(c).unwrap(), 0);
            acc = acc.union(c).unwrap();
        }
        assert_eq!(acc, s);
    }

    #[test]
    fn cross_sections_of_cube() {
        let h = 1.0 / 32.0;
        let cube = unit_cube(3, h);
        assert_eq!(cube.cross_section_mass(0, 0.0).unwrap(), 0.0);
        assert!((cube.cross_section_mass(0, 0.25).unwrap() - 0.25).abs() <= h);
        assert_eq!(cube.cross_section_mass(0, 10.0).unwrap(), cube.volume());
        let d = cube.essential_diameter().unwrap();
        assert_eq!(cube.cross_section_mass(1, d).unwrap(), cube.volume());
        for &t in &[0.1, 0.5, 0.77] {
            let a = cube.cross_section_area(2, t).unwrap();
            assert!((a - 1.0).abs() <= 4.0 * h, "t = {t}: {a}");
        }
        assert_eq!(cube.cross_section_area(0, -0.1).unwrap(), 0.0);
        assert_eq!(cube.cross_section_area(0, 1.5).unwrap(), 0.0);
        assert!(cube.cross_section_mass(3, 0.1).is_err());
    }

    #[test]
    fn great_disk_cross_section() {
        let h = 1.0 / 32.0;
        let b = ball(3, 1.0, h, [0.0; 3]);
        let ext = b.slice_extent(0);
        let a = b.cross_section_area(0, 0.5 * ext).unwrap();
        assert!((a - PI).abs() / PI < 0.03, "{a}");
    }

    #[test]
    fn discrete_fubini() {
        let h = 1.0 / 20.0;
        let s = GridSet::rasterize(3, h, [-1.0; 3], [1.0; 3], |x| {
            x[0] * x[0] + 2.0 * x[1] * x[1] + 0.5 * x[2] * x[2] + 0.3 * x[0] * x[1] < 0.6
        })
        .unwrap();
        for axis in 0..3 {
            let ext = s.slice_extent(axis);
            let (t1, t2) = (0.21 * ext, 0.83 * ext);
            let du = s.cross_section_mass(axis, t2).unwrap() - s.cross_section_mass(axis, t1).unwrap();
            let nslices = (ext / h).round() as usize;
            let sum: f64 = (0..nslices)
                .map(|k| (k as f64 + 0.5) * h)
                .filter(|&c| c > t1 && c <= t2)
                .map(|c| h * s.cross_section_area(axis, c).unwrap())
                .sum();
            assert!((du - sum).abs() <= 1e-12 * s.volume());
        }
    }

    #[test]
    fn align_and_translate() {
        let h = 0.125;
        let a = ball(3, 0.5, h, [0.0; 3]);
        let b = a.translated([10, 0, 0]).unwrap();
        let (aa, bb) = GridSet::align(&a, &b).unwrap();
        assert_eq!(aa.count(), a.count());
        assert_eq!(bb.count(), a.count());
        assert_eq!(aa.overlap_count(&bb).unwrap(), 0);
        let back = bb.reflect(0).unwrap().reflect(0).unwrap();
        assert_eq!(back, bb);
        let c = a.cropped(2).unwrap();
        assert_eq!(c.count(), a.count());
    }
}
