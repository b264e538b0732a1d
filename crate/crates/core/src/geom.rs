//! Index-space geometry: boxes of grid cells and the maps between integer
//! indices and physical coordinates.
//!
//! Boxes are axis-aligned with inclusive corners. In two dimensions the
//! third axis is pinned to the single index 0, so the same code paths serve
//! both `d = 2` and `d = 3`.

use crate::error::{Error, Result};

/// Axis-aligned box of cell indices, corners inclusive.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct IndexBox {
    pub lo: [i64; 3],
    pub hi: [i64; 3],
    pub dim: usize,
}

impl IndexBox {
    pub fn new(lo: [i64; 3], hi: [i64; 3], dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Geometry(format!("dimension must be 2 or 3, got {dim}")));
        }
        let (mut lo, mut hi) = (lo, hi);
        if dim == 2 {
            lo[2] = 0;
            hi[2] = 0;
        }
        for a in 0..dim {
            if lo[a] > hi[a] {
                return Err(Error::Geometry(format!(
                    "empty box: lo {lo:?} exceeds hi {hi:?} on axis {a}"
                )));
            }
        }
        Ok(Self { lo, hi, dim })
    }

    pub fn new_2d(lo: [i64; 2], hi: [i64; 2]) -> Result<Self> {
        Self::new([lo[0], lo[1], 0], [hi[0], hi[1], 0], 2)
    }

    pub fn new_3d(lo: [i64; 3], hi: [i64; 3]) -> Result<Self> {
        Self::new(lo, hi, 3)
    }

    /// Extent (number of cells) along each axis; 1 on the dropped axis in 2D.
    pub fn shape(&self) -> [i64; 3] {
        let mut s = [1; 3];
        for a in 0..self.dim {
            s[a] = self.hi[a] - self.lo[a] + 1;
        }
        s
    }

    pub fn num_cells(&self) -> i64 {
        let s = self.shape();
        s[0] * s[1] * s[2]
    }

    pub fn contains(&self, idx: [i64; 3]) -> bool {
        (0..self.dim).all(|a| idx[a] >= self.lo[a] && idx[a] <= self.hi[a])
            && (self.dim == 3 || idx[2] == 0)
    }

    pub fn contains_box(&self, other: &IndexBox) -> bool {
        (0..self.dim).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }

    pub fn intersect(&self, other: &IndexBox) -> Option<IndexBox> {
        let mut lo = [0_i64; 3];
        let mut hi = [0_i64; 3];
        for a in 0..3 {
            lo[a] = self.lo[a].max(other.lo[a]);
            hi[a] = self.hi[a].min(other.hi[a]);
            if lo[a] > hi[a] {
                return None;
            }
        }
        Some(IndexBox { lo, hi, dim: self.dim })
    }

    pub fn intersects(&self, other: &IndexBox) -> bool {
        self.intersect(other).is_some()
    }

    /// Grow by `n` cells on every side (in-plane axes only).
    pub fn grow(&self, n: i64) -> IndexBox {
        let mut b = *self;
        for a in 0..self.dim {
            b.lo[a] -= n;
            b.hi[a] += n;
        }
        b
    }

    /// Map this box to the next finer index space.
    pub fn refine(&self, ratio: i64) -> IndexBox {
        let mut b = *self;
        for a in 0..self.dim {
            b.lo[a] = self.lo[a] * ratio;
            b.hi[a] = (self.hi[a] + 1) * ratio - 1;
        }
        b
    }

    /// Map this box to the next coarser index space (covering coarsen).
    pub fn coarsen(&self, ratio: i64) -> IndexBox {
        let mut b = *self;
        for a in 0..self.dim {
            b.lo[a] = self.lo[a].div_euclid(ratio);
            b.hi[a] = self.hi[a].div_euclid(ratio);
        }
        b
    }

    /// True if refining `coarsen(self)` reproduces exactly `self`, i.e. the
    /// box is aligned to coarse-cell boundaries.
    pub fn is_aligned(&self, ratio: i64) -> bool {
        self.coarsen(ratio).refine(ratio) == *self
    }

    /// Lexicographic iteration over all cell indices (k outermost, i innermost).
    pub fn iter(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        let b = *self;
        (b.lo[2]..=b.hi[2]).flat_map(move |k| {
            (b.lo[1]..=b.hi[1])
                .flat_map(move |j| (b.lo[0]..=b.hi[0]).map(move |i| [i, j, k]))
        })
    }

    /// The index box of faces normal to `axis`: one wider along that axis.
    /// Face `f` along axis 0 separates cells `f-1` and `f`.
    pub fn face_box(&self, axis: usize) -> IndexBox {
        let mut b = *self;
        b.hi[axis] += 1;
        b
    }
}

/// Uniform rectangular physical domain [0,L1]x[0,L2](x[0,L3]) with a coarse
/// cell count per axis. The coarse spacing must be identical on every axis.
#[derive(Clone, Copy, Debug)]
pub struct DomainGeometry {
    pub dim: usize,
    pub lengths: [f64; 3],
    pub n_cells: [i64; 3],
    /// Coarse (level 0) grid spacing.
    pub h0: f64,
}

impl DomainGeometry {
    pub fn new(dim: usize, lengths: [f64; 3], n_cells: [i64; 3]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Geometry(format!("dimension must be 2 or 3, got {dim}")));
        }
        let mut lengths = lengths;
        let mut n_cells = n_cells;
        if dim == 2 {
            lengths[2] = 0.0;
            n_cells[2] = 1;
        }
        let h0 = lengths[0] / n_cells[0] as f64;
        for a in 0..dim {
            if lengths[a] <= 0.0 || n_cells[a] <= 0 {
                return Err(Error::Geometry("domain extents and cell counts must be positive".into()));
            }
            let h = lengths[a] / n_cells[a] as f64;
            if ((h - h0) / h0).abs() > 1e-12 {
                return Err(Error::Geometry(format!(
                    "nonuniform coarse spacing: axis {a} gives h = {h}, axis 0 gives {h0}"
                )));
            }
        }
        Ok(Self { dim, lengths, n_cells, h0 })
    }

    /// Cell box of the whole domain at level-0 resolution.
    pub fn domain_box(&self) -> IndexBox {
        let mut hi = [0_i64; 3];
        for a in 0..self.dim {
            hi[a] = self.n_cells[a] - 1;
        }
        IndexBox { lo: [0; 3], hi, dim: self.dim }
    }
}

/// Center of cell `idx` on a level with spacing `h`.
pub fn cell_center(idx: [i64; 3], h: f64, dim: usize) -> [f64; 3] {
    let mut x = [0.0; 3];
    for a in 0..dim {
        x[a] = (idx[a] as f64 + 0.5) * h;
    }
    x
}

/// Center of the face with face-index `idx` normal to `axis`.
pub fn face_center(idx: [i64; 3], axis: usize, h: f64, dim: usize) -> [f64; 3] {
    let mut x = cell_center(idx, h, dim);
    x[axis] = idx[axis] as f64 * h;
    x
}
