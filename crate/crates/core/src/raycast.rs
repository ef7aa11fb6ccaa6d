//! Amanatides-Woo voxel traversal and per-sweep visibility volumes.
//!
//! A ray is the segment from the sensor origin to a return. It is first
//! clipped to the grid box (slab method), then walked one face crossing at a
//! time. When several axis boundaries are crossed at the same parameter the
//! axes are stepped separately in x, y, z order.

use std::sync::atomic::{AtomicU8, Ordering};

use crate::error::{Error, Result};
use crate::grid::{GridConfig, VoxelIndex};
use crate::io::Sweep;
use crate::parallel::map_chunks;
use crate::scalar::{is_finite3, norm_sq, sub, Scalar, Vec3};

/// Rays shorter than this (meters) are treated as degenerate.
pub const MIN_RAY_LENGTH: f64 = 1e-12;

/// Ternary visibility of one voxel. The discriminant order is the join order
/// used when merging rays: occupied beats free beats unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(u8)]
pub enum VoxelState {
    #[default]
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

impl VoxelState {
    pub fn from_u8(byte: u8) -> Option<Self> {
        match byte {
            0 => Some(VoxelState::Unknown),
            1 => Some(VoxelState::Free),
            2 => Some(VoxelState::Occupied),
            _ => None,
        }
    }
}

/// Result of walking one ray through the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RayTrace {
    /// Voxels in entry order.
    pub visited: Vec<VoxelIndex>,
    pub reached_endpoint: bool,
    /// Voxel holding the endpoint, `None` when the endpoint is outside the grid.
    pub endpoint_voxel: Option<VoxelIndex>,
    /// The walk stopped on a pre-occupied voxel (always the last visited entry).
    pub blocked: bool,
}

/// Dense boolean voxel set, used for pre-occupied voxels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelMask {
    dims: [usize; 3],
    cells: Vec<bool>,
}

impl VoxelMask {
    pub fn new(dims: [usize; 3]) -> Self {
        VoxelMask {
            dims,
            cells: vec![false; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn for_grid<T: Scalar>(config: &GridConfig<T>) -> Self {
        Self::new(config.dims())
    }

    /// Marks the voxel of every in-grid point.
    pub fn from_points<T: Scalar>(
        config: &GridConfig<T>,
        points: impl IntoIterator<Item = Vec3<T>>,
    ) -> Self {
        let mut mask = Self::for_grid(config);
        for p in points {
            if let Some(v) = config.world_to_voxel(p) {
                mask.insert(v);
            }
        }
        mask
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    fn linear(&self, v: VoxelIndex) -> usize {
        (v.i * self.dims[1] + v.j) * self.dims[2] + v.k
    }

    pub fn insert(&mut self, v: VoxelIndex) {
        let idx = self.linear(v);
        self.cells[idx] = true;
    }

    #[inline]
    pub fn contains(&self, v: VoxelIndex) -> bool {
        self.cells[self.linear(v)]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }
}

/// Lazy voxel walk along a clipped segment.
///
/// Yields voxels in travel order and stops after the endpoint voxel, or when
/// the segment leaves the grid.
#[derive(Debug, Clone)]
pub struct VoxelRay<'a, T: Scalar> {
    config: &'a GridConfig<T>,
    origin: Vec3<T>,
    cell: [isize; 3],
    step: [isize; 3],
    // crossing parameter of the next face per axis is num / den; comparing
    // cross products keeps exact ties exact without dividing
    num: Vec3<T>,
    den: Vec3<T>,
    t_end: T,
    end: Option<[isize; 3]>,
    started: bool,
    done: bool,
}

impl<'a, T: Scalar> VoxelRay<'a, T> {
    /// Prepares a walk from `origin` to `endpoint`. Fails for zero-length or
    /// non-finite segments.
    pub fn new(origin: Vec3<T>, endpoint: Vec3<T>, config: &'a GridConfig<T>) -> Result<Self> {
        if !is_finite3(origin) || !is_finite3(endpoint) {
            return Err(Error::argument("ray endpoints must be finite"));
        }
        let dir = sub(endpoint, origin);
        if norm_sq(dir).as_f64() <= MIN_RAY_LENGTH * MIN_RAY_LENGTH {
            return Err(Error::argument("degenerate zero-length ray"));
        }
        Ok(Self::from_parts(origin, endpoint, dir, config))
    }

    fn from_parts(origin: Vec3<T>, endpoint: Vec3<T>, dir: Vec3<T>, config: &'a GridConfig<T>) -> Self {
        let mut ray = VoxelRay {
            config,
            origin,
            cell: [0; 3],
            step: [0; 3],
            num: [T::one(); 3],
            den: [T::zero(); 3],
            t_end: T::one(),
            end: config
                .world_to_voxel(endpoint)
                .map(|v| [v.i as isize, v.j as isize, v.k as isize]),
            started: false,
            done: false,
        };
        let Some((t_enter, t_exit)) = clip_segment(origin, dir, config) else {
            ray.done = true;
            return ray;
        };
        ray.t_end = t_exit;

        let (min, dims) = (config.min(), config.dims());
        for a in 0..3 {
            let entry = if t_enter == T::zero() {
                origin[a]
            } else {
                origin[a] + dir[a] * t_enter
            };
            let raw = ((entry - min[a]) / config.voxel_size()).floor();
            let mut cell = raw.to_isize().unwrap_or(0).clamp(0, dims[a] as isize - 1);
            if dir[a] > T::zero() {
                ray.step[a] = 1;
            } else if dir[a] < T::zero() {
                ray.step[a] = -1;
                // a clipped entry lying exactly on an inner face enters the lower cell
                let face = min[a] + T::lit(cell as f64) * config.voxel_size();
                if t_enter > T::zero() && entry == face && cell > 0 {
                    cell -= 1;
                }
            }
            ray.cell[a] = cell;
            ray.den[a] = dir[a].abs();
            ray.num[a] = ray.boundary_num(a);
        }
        ray
    }

    /// Distance along `axis` from the origin to the face the ray crosses next.
    #[inline]
    fn boundary_num(&self, axis: usize) -> T {
        let step = self.step[axis];
        if step == 0 {
            return T::one();
        }
        let face = if step > 0 {
            self.cell[axis] + 1
        } else {
            self.cell[axis]
        };
        let coord = self.config.min()[axis] + T::lit(face as f64) * self.config.voxel_size();
        if step > 0 {
            coord - self.origin[axis]
        } else {
            self.origin[axis] - coord
        }
    }

    /// Whether crossing the next face along `axis` lies beyond the segment.
    /// Voxels are half-open, so a lower face reached exactly at the end
    /// leaves the ray in its current cell while an upper face does not.
    #[inline]
    fn past_end(&self, axis: usize, num: T) -> bool {
        let end = self.t_end * self.den[axis];
        if self.step[axis] > 0 {
            num > end
        } else {
            num >= end
        }
    }

    /// Axis whose face is crossed first within the segment, if any.
    ///
    /// On simultaneous crossings, upward steps go before downward ones: at
    /// the crossing instant the point is already past an upper face but still
    /// inside the cell whose lower face it touches. Within each group the
    /// order is x, y, z.
    #[inline]
    fn next_axis(&self) -> Option<usize> {
        let (num, den) = (&self.num, &self.den);
        let mut best: Option<usize> = None;
        for a in 0..3 {
            if self.past_end(a, num[a]) {
                continue;
            }
            match best {
                Some(b) => {
                    let (lhs, rhs) = (num[a] * den[b], num[b] * den[a]);
                    if lhs < rhs || (lhs == rhs && self.step[a] > 0 && self.step[b] < 0) {
                        best = Some(a);
                    }
                }
                None => best = Some(a),
            }
        }
        best
    }

    /// Whether the most recently yielded voxel is the endpoint voxel.
    #[inline]
    pub fn at_endpoint(&self) -> bool {
        self.end == Some(self.cell)
    }

    #[inline]
    fn current(&self) -> VoxelIndex {
        VoxelIndex::new(self.cell[0] as usize, self.cell[1] as usize, self.cell[2] as usize)
    }

    /// Moves to the next cell. Returns `false` when the walk is over.
    #[inline]
    fn advance(&mut self) -> bool {
        if self.at_endpoint() {
            return false;
        }
        let Some(axis) = self.next_axis() else {
            return false;
        };
        let next = self.cell[axis] + self.step[axis];
        if next < 0 || next >= self.config.dims()[axis] as isize {
            return false;
        }
        self.cell[axis] = next;
        self.num[axis] = self.boundary_num(axis);
        true
    }
}

impl<T: Scalar> Iterator for VoxelRay<'_, T> {
    type Item = VoxelIndex;

    #[inline]
    fn next(&mut self) -> Option<VoxelIndex> {
        if self.done {
            return None;
        }
        if self.started {
            if !self.advance() {
                self.done = true;
                return None;
            }
        } else {
            self.started = true;
        }
        Some(self.current())
    }
}

impl<T: Scalar> VoxelRay<'_, T> {
    /// Walks the ray, calling `visit` on each voxel until it returns `false`.
    /// Returns the number of voxels visited.
    #[inline]
    pub fn walk(mut self, mut visit: impl FnMut(VoxelIndex) -> bool) -> usize {
        if self.done {
            return 0;
        }
        if self.started {
            let mut count = 0;
            for v in &mut self {
                count += 1;
                if !visit(v) {
                    break;
                }
            }
            return count;
        }
        let mut count = 0;
        loop {
            count += 1;
            if !visit(self.current()) || !self.advance() {
                return count;
            }
        }
    }
}

impl<T: Scalar> VoxelRay<'_, T> {
    /// Marks every visited voxel except the endpoint voxel as free. Same
    /// walk as the iterator, tracking the linear index incrementally.
    fn carve_free(mut self, cells: &[AtomicU8]) {
        if self.done {
            return;
        }
        let dims = self.config.dims();
        let stride = [(dims[1] * dims[2]) as isize, dims[2] as isize, 1];
        let end_linear = self.end.map(|e| e[0] * stride[0] + e[1] * stride[1] + e[2]);
        let mut linear = self.cell[0] * stride[0] + self.cell[1] * stride[1] + self.cell[2];
        let mut left = [0isize; 3];
        for a in 0..3 {
            left[a] = match self.step[a] {
                1 => dims[a] as isize - 1 - self.cell[a],
                -1 => self.cell[a],
                _ => 0,
            };
        }
        let limit = self.t_end;
        // fast path: incrementally advanced crossing parameters; whenever two
        // candidates (or the end test) are within the drift bound, fall back
        // to the exact comparison used by `advance`
        let drift = T::epsilon() * T::lit(4096.0);
        let mut t = [T::infinity(); 3];
        let mut dt = [T::infinity(); 3];
        for a in 0..3 {
            if self.step[a] != 0 {
                t[a] = self.num[a] / self.den[a];
                dt[a] = self.config.voxel_size() / self.den[a];
            }
        }
        loop {
            if Some(linear) == end_linear {
                return;
            }
            join(&cells[linear as usize], VoxelState::Free);
            let mut axis = 0;
            if t[1] < t[axis] {
                axis = 1;
            }
            if t[2] < t[axis] {
                axis = 2;
            }
            let m = t[axis];
            let tol = drift * (T::one() + m);
            let close = (t[0] - m <= tol) as u8 + (t[1] - m <= tol) as u8 + (t[2] - m <= tol) as u8;
            if close > 1 || m >= limit - tol {
                for a in 0..3 {
                    self.num[a] = self.boundary_num(a);
                }
                match self.next_axis() {
                    Some(a) => axis = a,
                    None => return,
                }
            }
            if left[axis] == 0 {
                return;
            }
            left[axis] -= 1;
            linear += self.step[axis] * stride[axis];
            self.cell[axis] += self.step[axis];
            t[axis] = t[axis] + dt[axis];
        }
    }
}

/// Slab clip of `origin + t * dir`, `t in [0, 1]`, against the grid box.
fn clip_segment<T: Scalar>(origin: Vec3<T>, dir: Vec3<T>, config: &GridConfig<T>) -> Option<(T, T)> {
    let (min, max) = (config.min(), config.max());
    let (mut t0, mut t1) = (T::zero(), T::one());
    for a in 0..3 {
        if dir[a] == T::zero() {
            if origin[a] < min[a] || origin[a] >= max[a] {
                return None;
            }
            continue;
        }
        let ta = (min[a] - origin[a]) / dir[a];
        let tb = (max[a] - origin[a]) / dir[a];
        let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 > t1 {
            return None;
        }
    }
    if t0 == t1 {
        // grazing contact: keep it only if the touching point is inside the half-open box
        let p = [0, 1, 2].map(|a| origin[a] + dir[a] * t0);
        if !config.contains_point(p) {
            return None;
        }
    }
    Some((t0, t1))
}

/// Voxels crossed by the segment `origin -> endpoint`, clipped to the grid.
pub fn traverse_ray<T: Scalar>(origin: Vec3<T>, endpoint: Vec3<T>, config: &GridConfig<T>) -> Result<RayTrace> {
    let ray = VoxelRay::new(origin, endpoint, config)?;
    let endpoint_voxel = config.world_to_voxel(endpoint);
    let mut visited = Vec::new();
    ray.walk(|v| {
        visited.push(v);
        true
    });
    let reached_endpoint = endpoint_voxel.is_some() && visited.last() == endpoint_voxel.as_ref();
    Ok(RayTrace {
        visited,
        reached_endpoint,
        endpoint_voxel,
        blocked: false,
    })
}

/// Like [`traverse_ray`] but stops on entering any voxel of `blocked` other
/// than the endpoint's own voxel.
pub fn traverse_until_preoccupied<T: Scalar>(
    origin: Vec3<T>,
    endpoint: Vec3<T>,
    blocked: &VoxelMask,
    config: &GridConfig<T>,
) -> Result<RayTrace> {
    check_mask(blocked, config)?;
    let ray = VoxelRay::new(origin, endpoint, config)?;
    let endpoint_voxel = config.world_to_voxel(endpoint);
    let mut visited = Vec::new();
    let mut hit = false;
    ray.walk(|v| {
        visited.push(v);
        if Some(v) != endpoint_voxel && blocked.contains(v) {
            hit = true;
            return false;
        }
        true
    });
    let reached_endpoint = !hit && endpoint_voxel.is_some() && visited.last() == endpoint_voxel.as_ref();
    Ok(RayTrace {
        visited,
        reached_endpoint,
        endpoint_voxel,
        blocked: hit,
    })
}

/// Allocation-free blocker test: does the ray hit a pre-occupied voxel
/// before its endpoint voxel? Degenerate rays are never blocked.
pub(crate) fn ray_is_blocked<T: Scalar>(
    origin: Vec3<T>,
    endpoint: Vec3<T>,
    blocked: &VoxelMask,
    config: &GridConfig<T>,
) -> bool {
    let Ok(ray) = VoxelRay::new(origin, endpoint, config) else {
        return false;
    };
    let endpoint_voxel = config.world_to_voxel(endpoint);
    let mut hit = false;
    ray.walk(|v| {
        if Some(v) != endpoint_voxel && blocked.contains(v) {
            hit = true;
            return false;
        }
        true
    });
    hit
}

/// Every masked voxel on the segment other than the endpoint's own voxel.
pub(crate) fn blocking_voxels<T: Scalar>(
    origin: Vec3<T>,
    endpoint: Vec3<T>,
    mask: &VoxelMask,
    config: &GridConfig<T>,
) -> Vec<VoxelIndex> {
    let Ok(ray) = VoxelRay::new(origin, endpoint, config) else {
        return Vec::new();
    };
    let endpoint_voxel = config.world_to_voxel(endpoint);
    ray.filter(|&v| Some(v) != endpoint_voxel && mask.contains(v)).collect()
}

pub(crate) fn check_mask<T: Scalar>(mask: &VoxelMask, config: &GridConfig<T>) -> Result<()> {
    if mask.dims() != config.dims() {
        return Err(Error::argument(format!(
            "mask dims {:?} do not match grid dims {:?}",
            mask.dims(),
            config.dims()
        )));
    }
    Ok(())
}

/// Per-sweep ternary visibility over the whole grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityVolume<T: Scalar> {
    config: GridConfig<T>,
    states: Vec<u8>,
    degenerate_rays: usize,
}

/// Cell counts per state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Census {
    pub unknown: usize,
    pub free: usize,
    pub occupied: usize,
}

impl Census {
    pub fn total(&self) -> usize {
        self.unknown + self.free + self.occupied
    }
}

impl std::fmt::Display for Census {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unknown={} free={} occupied={}", self.unknown, self.free, self.occupied)
    }
}

impl<T: Scalar> VisibilityVolume<T> {
    /// All-unknown volume.
    pub fn new(config: GridConfig<T>) -> Self {
        VisibilityVolume {
            states: vec![0; config.num_voxels()],
            config,
            degenerate_rays: 0,
        }
    }

    /// Wraps raw state bytes in grid layout. Rejects wrong lengths and bytes
    /// other than 0, 1, 2.
    pub fn from_bytes(config: GridConfig<T>, states: Vec<u8>) -> Result<Self> {
        if states.len() != config.num_voxels() {
            return Err(Error::argument(format!(
                "expected {} state bytes, got {}",
                config.num_voxels(),
                states.len()
            )));
        }
        if let Some(pos) = states.iter().position(|&b| b > 2) {
            return Err(Error::argument(format!("invalid voxel state {} at cell {pos}", states[pos])));
        }
        Ok(VisibilityVolume {
            config,
            states,
            degenerate_rays: 0,
        })
    }

    pub fn config(&self) -> &GridConfig<T> {
        &self.config
    }

    pub fn state(&self, v: VoxelIndex) -> VoxelState {
        self.state_at(self.config.linear_index(v))
    }

    #[inline]
    pub fn state_at(&self, linear: usize) -> VoxelState {
        VoxelState::from_u8(self.states[linear]).expect("state bytes validated")
    }

    pub fn set(&mut self, v: VoxelIndex, state: VoxelState) {
        let idx = self.config.linear_index(v);
        self.states[idx] = state as u8;
    }

    /// State bytes in grid linear order.
    pub fn as_bytes(&self) -> &[u8] {
        &self.states
    }

    /// Rays skipped because the point coincided with the sensor origin.
    pub fn degenerate_rays(&self) -> usize {
        self.degenerate_rays
    }

    pub fn census(&self) -> Census {
        let mut counts = [0usize; 3];
        for &s in &self.states {
            counts[s as usize] += 1;
        }
        Census {
            unknown: counts[0],
            free: counts[1],
            occupied: counts[2],
        }
    }

    /// Voxels holding `state`, in linear order.
    pub fn voxels_with(&self, state: VoxelState) -> impl Iterator<Item = VoxelIndex> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == state as u8)
            .map(|(idx, _)| self.config.voxel_at(idx))
    }
}

#[inline]
fn join(cell: &AtomicU8, state: VoxelState) {
    let s = state as u8;
    if cell.load(Ordering::Relaxed) < s {
        cell.fetch_max(s, Ordering::Relaxed);
    }
}

/// Casts a ray from the sweep's sensor origin to every point and merges the
/// results: a voxel is occupied if it holds an in-grid return, otherwise free
/// if any ray crosses it, otherwise unknown. Points outside the grid still
/// carve free space along their clipped segment.
///
/// The merge is an order-free `max` over states, so the output is identical
/// for every worker count and point order.
pub fn compute_visibility<T: Scalar>(sweep: &Sweep<T>, config: &GridConfig<T>, workers: usize) -> VisibilityVolume<T> {
    let mut states = vec![0u8; config.num_voxels()];
    let origin = sweep.sensor_origin;
    let min_len_sq = MIN_RAY_LENGTH * MIN_RAY_LENGTH;

    let degenerate: usize = {
        let cells = as_atomic(&mut states);
        map_chunks(&sweep.points, workers, |chunk| {
            let mut degenerate = 0;
            for point in chunk {
                let p = point.position();
                let dir = sub(p, origin);
                let end = config.world_to_voxel(p);
                if norm_sq(dir).as_f64() <= min_len_sq {
                    degenerate += 1;
                } else {
                    VoxelRay::from_parts(origin, p, dir, config).carve_free(cells);
                }
                if let Some(v) = end {
                    join(&cells[config.linear_index(v)], VoxelState::Occupied);
                }
            }
            degenerate
        })
        .into_iter()
        .sum()
    };

    VisibilityVolume {
        config: *config,
        states,
        degenerate_rays: degenerate,
    }
}

fn as_atomic(bytes: &mut [u8]) -> &[AtomicU8] {
    // SAFETY: AtomicU8 has the same size, alignment and bit validity as u8,
    // and the exclusive borrow guarantees no non-atomic access meanwhile.
    unsafe { &*(bytes as *mut [u8] as *const [AtomicU8]) }
}
