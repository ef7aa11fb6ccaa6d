//! Voxel-grid geometry: extents, derived dimensions, world/voxel transforms
//! and the linear cell layout shared by every dense volume.
//!
//! Voxels are half-open boxes `[min + i*s, min + (i+1)*s)` per axis, so every
//! point inside the grid box belongs to exactly one voxel and the upper faces
//! of the box are outside. Cells are laid out with `k` fastest, so the
//! vertical column under a BEV pixel is contiguous:
//! `idx = (i * ny + j) * nz + k`.

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};

/// Relative tolerance for "span is an integer multiple of the voxel size".
const SPAN_TOLERANCE: f64 = 1e-9;

/// Integer cell coordinates along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl VoxelIndex {
    pub const fn new(i: usize, j: usize, k: usize) -> Self {
        VoxelIndex { i, j, k }
    }

    #[inline]
    pub fn axis(&self, axis: usize) -> usize {
        match axis {
            0 => self.i,
            1 => self.j,
            _ => self.k,
        }
    }
}

impl From<[usize; 3]> for VoxelIndex {
    fn from(v: [usize; 3]) -> Self {
        VoxelIndex::new(v[0], v[1], v[2])
    }
}

/// Cubic-voxel grid over an axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig<T: Scalar> {
    min: Vec3<T>,
    max: Vec3<T>,
    voxel_size: T,
    dims: [usize; 3],
}

impl<T: Scalar> GridConfig<T> {
    /// Validates extents and voxel size and derives the cell counts.
    pub fn new(min: Vec3<T>, max: Vec3<T>, voxel_size: T) -> Result<Self> {
        if !(voxel_size.is_finite() && voxel_size > T::zero()) {
            return Err(Error::config(format!(
                "voxel_size must be positive and finite, got {voxel_size}"
            )));
        }
        let mut dims = [0usize; 3];
        for axis in 0..3 {
            let name = ["x", "y", "z"][axis];
            let (lo, hi) = (min[axis].as_f64(), max[axis].as_f64());
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::config(format!("{name} extent is not finite")));
            }
            if lo >= hi {
                return Err(Error::config(format!(
                    "{name}_min ({lo}) must be less than {name}_max ({hi})"
                )));
            }
            let span = hi - lo;
            let cells = span / voxel_size.as_f64();
            let rounded = cells.round();
            if rounded < 1.0 || (rounded * voxel_size.as_f64() - span).abs() > SPAN_TOLERANCE * span {
                return Err(Error::config(format!(
                    "{name} span {span} is not an integer multiple of voxel_size {voxel_size}"
                )));
            }
            dims[axis] = rounded as usize;
        }
        Ok(GridConfig {
            min,
            max,
            voxel_size,
            dims,
        })
    }

    /// `[-50, 50] x [-50, 50] x [-5, 3]` at 0.25 m, i.e. 400 x 400 x 32 cells.
    pub fn detection_default() -> Self {
        Self::new(
            [T::lit(-50.0), T::lit(-50.0), T::lit(-5.0)],
            [T::lit(50.0), T::lit(50.0), T::lit(3.0)],
            T::lit(0.25),
        )
        .expect("default grid is valid")
    }

    pub fn min(&self) -> Vec3<T> {
        self.min
    }

    pub fn max(&self) -> Vec3<T> {
        self.max
    }

    pub fn voxel_size(&self) -> T {
        self.voxel_size
    }

    /// `(nx, ny, nz)`.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_voxels(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Same cell layout (dimensions, origin, voxel size).
    pub fn same_layout(&self, other: &Self) -> bool {
        self == other
    }

    pub fn contains_index(&self, v: VoxelIndex) -> bool {
        v.i < self.dims[0] && v.j < self.dims[1] && v.k < self.dims[2]
    }

    /// Half-open containment test against the grid box.
    #[inline]
    pub fn contains_point(&self, p: Vec3<T>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] < self.max[a])
    }

    /// Voxel containing `p`, or `None` when `p` is outside the half-open box.
    #[inline]
    pub fn world_to_voxel(&self, p: Vec3<T>) -> Option<VoxelIndex> {
        if !self.contains_point(p) {
            return None;
        }
        let mut idx = [0usize; 3];
        for a in 0..3 {
            idx[a] = self.axis_cell(a, p[a]);
        }
        Some(idx.into())
    }

    /// Cell index along one axis for a coordinate known to be inside the box.
    #[inline]
    pub(crate) fn axis_cell(&self, axis: usize, coord: T) -> usize {
        let c = ((coord - self.min[axis]) / self.voxel_size).floor();
        let c = c.to_usize().unwrap_or(0);
        c.min(self.dims[axis] - 1)
    }

    pub fn voxel_center(&self, v: VoxelIndex) -> Result<Vec3<T>> {
        if !self.contains_index(v) {
            return Err(Error::argument(format!(
                "voxel {v:?} outside grid of dims {:?}",
                self.dims
            )));
        }
        let half = T::lit(0.5);
        let c = |a: usize| self.min[a] + (T::lit(v.axis(a) as f64) + half) * self.voxel_size;
        Ok([c(0), c(1), c(2)])
    }

    #[inline]
    pub fn linear_index(&self, v: VoxelIndex) -> usize {
        (v.i * self.dims[1] + v.j) * self.dims[2] + v.k
    }

    #[inline]
    pub fn voxel_at(&self, linear: usize) -> VoxelIndex {
        let nz = self.dims[2];
        let ny = self.dims[1];
        VoxelIndex::new(linear / (ny * nz), (linear / nz) % ny, linear % nz)
    }

    /// Converts the geometry to another scalar width.
    pub fn cast<U: Scalar>(&self) -> Result<GridConfig<U>> {
        let conv = |v: Vec3<T>| v.map(|c| U::lit(c.as_f64()));
        GridConfig::new(conv(self.min), conv(self.max), U::lit(self.voxel_size.as_f64()))
    }
}

impl<T: Scalar> Default for GridConfig<T> {
    fn default() -> Self {
        Self::detection_default()
    }
}

/// Cell counts for a configuration.
pub fn grid_dims<T: Scalar>(config: &GridConfig<T>) -> [usize; 3] {
    config.dims()
}
