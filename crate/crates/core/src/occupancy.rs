//! Temporal fusion of per-sweep visibility into a clamped log-odds
//! occupancy grid.
//!
//! Each sweep contributes at most one update per voxel: occupied voxels add
//! the hit log-odds, free voxels add the miss log-odds, unknown voxels are
//! untouched. The sum is clamped after every sweep, so once a bound is hit
//! the fold is no longer order independent.

use crate::error::{Error, Result};
use crate::grid::{GridConfig, VoxelIndex};
use crate::io::{motion_compensate, Pose, Sweep};
use crate::raycast::{compute_visibility, VisibilityVolume, VoxelState};
use crate::scalar::Scalar;

/// `ln(p / (1 - p))`.
pub fn logit<T: Scalar>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

/// Inverse of [`logit`].
pub fn logistic<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Sensor model and clamping bounds. Defaults follow the usual octree
/// mapping setup: hit 0.7, miss 0.4, clamp to probabilities `[0.12, 0.97]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyParams<T: Scalar> {
    pub p_hit: T,
    pub p_miss: T,
    /// Lower log-odds bound.
    pub clamp_min: T,
    /// Upper log-odds bound.
    pub clamp_max: T,
}

impl<T: Scalar> OccupancyParams<T> {
    pub fn new(p_hit: T, p_miss: T, clamp_min: T, clamp_max: T) -> Result<Self> {
        let params = OccupancyParams {
            p_hit,
            p_miss,
            clamp_min,
            clamp_max,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let half = T::lit(0.5);
        if !(self.p_hit < T::one() && self.p_hit > half) {
            return Err(Error::config(format!("p_hit must be in (0.5, 1), got {}", self.p_hit)));
        }
        if !(self.p_miss > T::zero() && self.p_miss < half) {
            return Err(Error::config(format!("p_miss must be in (0, 0.5), got {}", self.p_miss)));
        }
        if !(self.clamp_min < T::zero() && self.clamp_min.is_finite()) {
            return Err(Error::config(format!("clamp_min must be negative, got {}", self.clamp_min)));
        }
        if !(self.clamp_max > T::zero() && self.clamp_max.is_finite()) {
            return Err(Error::config(format!("clamp_max must be positive, got {}", self.clamp_max)));
        }
        Ok(())
    }

    pub fn hit_logodds(&self) -> T {
        logit(self.p_hit)
    }

    pub fn miss_logodds(&self) -> T {
        logit(self.p_miss)
    }
}

impl<T: Scalar> Default for OccupancyParams<T> {
    fn default() -> Self {
        OccupancyParams {
            p_hit: T::lit(0.7),
            p_miss: T::lit(0.4),
            clamp_min: logit(T::lit(0.12)),
            clamp_max: logit(T::lit(0.97)),
        }
    }
}

/// Dense log-odds grid; untouched cells stay at exactly 0 (probability 0.5).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid<T: Scalar> {
    config: GridConfig<T>,
    params: OccupancyParams<T>,
    logodds: Vec<T>,
}

impl<T: Scalar> OccupancyGrid<T> {
    pub fn new(config: GridConfig<T>, params: OccupancyParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(OccupancyGrid {
            logodds: vec![T::zero(); config.num_voxels()],
            config,
            params,
        })
    }

    /// Wraps existing log-odds values in grid linear order.
    pub fn from_logodds(config: GridConfig<T>, params: OccupancyParams<T>, logodds: Vec<T>) -> Result<Self> {
        params.validate()?;
        if logodds.len() != config.num_voxels() {
            return Err(Error::argument(format!(
                "expected {} log-odds values, got {}",
                config.num_voxels(),
                logodds.len()
            )));
        }
        if logodds.iter().any(|v| !v.is_finite()) {
            return Err(Error::argument("log-odds values must be finite"));
        }
        Ok(OccupancyGrid { config, params, logodds })
    }

    pub fn config(&self) -> &GridConfig<T> {
        &self.config
    }

    pub fn params(&self) -> &OccupancyParams<T> {
        &self.params
    }

    pub fn logodds(&self) -> &[T] {
        &self.logodds
    }

    pub fn logodds_at(&self, v: VoxelIndex) -> T {
        self.logodds[self.config.linear_index(v)]
    }

    pub fn probability_at(&self, v: VoxelIndex) -> T {
        logistic(self.logodds_at(v))
    }

    /// Folds one sweep's visibility into the grid.
    pub fn update_with_sweep(&mut self, vis: &VisibilityVolume<T>) -> Result<()> {
        if !self.config.same_layout(vis.config()) {
            return Err(Error::argument("visibility volume grid does not match occupancy grid"));
        }
        let hit = self.params.hit_logodds();
        let miss = self.params.miss_logodds();
        let (lo, hi) = (self.params.clamp_min, self.params.clamp_max);
        for (cell, &state) in self.logodds.iter_mut().zip(vis.as_bytes()) {
            let delta = match VoxelState::from_u8(state) {
                Some(VoxelState::Occupied) => hit,
                Some(VoxelState::Free) => miss,
                _ => continue,
            };
            *cell = (*cell + delta).max(lo).min(hi);
        }
        Ok(())
    }

    /// Occupancy probability per voxel, in grid linear order.
    pub fn posterior(&self) -> Vec<T> {
        self.logodds.iter().map(|&l| logistic(l)).collect()
    }
}

/// Motion-compensates each sweep into the frame of the last one, computes
/// its visibility from its own compensated origin, and folds the sweeps in
/// time order. Only one visibility volume is alive at a time.
pub fn build_temporal_occupancy<T: Scalar>(
    sweeps: &[Sweep<T>],
    poses: &[Pose<T>],
    config: &GridConfig<T>,
    params: OccupancyParams<T>,
    workers: usize,
) -> Result<OccupancyGrid<T>> {
    if sweeps.is_empty() {
        return Err(Error::argument("at least one sweep is required"));
    }
    if sweeps.len() != poses.len() {
        return Err(Error::argument(format!(
            "{} sweeps but {} poses",
            sweeps.len(),
            poses.len()
        )));
    }
    if let Some(i) = sweeps.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::argument(format!(
            "sweep {} (t={}) is earlier than sweep {} (t={})",
            i + 1,
            sweeps[i + 1].timestamp,
            i,
            sweeps[i].timestamp
        )));
    }
    let reference = sweeps.len() - 1;
    let (pose_ref, t_ref) = (poses[reference], sweeps[reference].timestamp);
    let mut grid = OccupancyGrid::new(*config, params)?;
    for (sweep, pose) in sweeps.iter().zip(poses) {
        let local = motion_compensate(sweep, pose, &pose_ref, t_ref)?;
        let vis = compute_visibility(&local, config, workers);
        grid.update_with_sweep(&vis)?;
    }
    Ok(grid)
}
