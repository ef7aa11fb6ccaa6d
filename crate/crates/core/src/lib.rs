//! LiDAR visibility engine.
//!
//! Recreates what a LiDAR saw at capture time by casting a ray from the
//! sensor to every return through a voxel grid, then builds on that
//! visibility:
//!
//! * [`raycast`]: voxel traversal and per-sweep ternary volumes
//!   (unknown / free / occupied).
//! * [`occupancy`]: log-odds fusion of several motion-compensated sweeps.
//! * [`augment`]: pasting virtual objects with naive, culling or drilling
//!   visibility handling.
//! * [`bev`]: bird's-eye-view maps with one channel per z cell.
//! * [`io`]: sweep, pose, object and volume file formats.
//!
//! The geometry is generic over the float width ([`Scalar`]); the aliases
//! below fix it to `f32` or `f64`.

pub mod augment;
pub mod bev;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod occupancy;
pub mod parallel;
pub mod raycast;
pub mod scalar;
pub mod synth;

pub use augment::{augment, cull, drill, insert_naive, AugmentMode, AugmentReport, OrientedBox, VirtualObject};
pub use bev::{bev_slice_render, occupancy_to_bev, visibility_to_bev, BevMap};
pub use config::EngineConfig;
pub use error::{Error, Result};
pub use grid::{grid_dims, GridConfig, VoxelIndex};
pub use io::{aggregate_sweeps, motion_compensate, Pose, Sweep, SweepPoint};
pub use occupancy::{build_temporal_occupancy, OccupancyGrid, OccupancyParams};
pub use parallel::available_workers;
pub use raycast::{
    compute_visibility, traverse_ray, traverse_until_preoccupied, Census, RayTrace, VisibilityVolume, VoxelMask, VoxelState,
};
pub use scalar::{Scalar, Vec3};

pub type GridConfigF32 = GridConfig<f32>;
pub type GridConfigF64 = GridConfig<f64>;
pub type SweepF32 = Sweep<f32>;
pub type SweepF64 = Sweep<f64>;
pub type PoseF32 = Pose<f32>;
pub type PoseF64 = Pose<f64>;
pub type VisibilityVolumeF32 = VisibilityVolume<f32>;
pub type VisibilityVolumeF64 = VisibilityVolume<f64>;
pub type OccupancyGridF32 = OccupancyGrid<f32>;
pub type OccupancyGridF64 = OccupancyGrid<f64>;
pub type OccupancyParamsF32 = OccupancyParams<f32>;
pub type OccupancyParamsF64 = OccupancyParams<f64>;
pub type VirtualObjectF32 = VirtualObject<f32>;
pub type VirtualObjectF64 = VirtualObject<f64>;
pub type EngineConfigF32 = EngineConfig<f32>;
pub type EngineConfigF64 = EngineConfig<f64>;
