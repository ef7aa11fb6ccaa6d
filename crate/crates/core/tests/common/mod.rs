//! Shared test support: an independent dense-sampling traversal oracle and
//! the wall/object scene fixtures.

#![allow(dead_code)]

use std::collections::HashSet;

use freespace::{
    traverse_ray, traverse_until_preoccupied, AugmentReport, GridConfig, OrientedBox, Sweep, VirtualObject, VoxelIndex,
    VoxelMask,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples per voxel edge length along the segment.
pub const SAMPLES_PER_VOXEL: f64 = 1000.0;
/// Sub-intervals shorter than this (in segment parameter) are treated as a
/// simultaneous multi-axis crossing.
const TIE_WIDTH: f64 = 1e-13;

/// Plain-arithmetic grid description, independent of the engine's types.
#[derive(Clone, Copy)]
pub struct Box3 {
    pub min: [f64; 3],
    pub voxel: f64,
    pub dims: [i64; 3],
}

impl Box3 {
    pub fn of(config: &GridConfig<f64>) -> Self {
        let d = config.dims();
        Box3 {
            min: config.min(),
            voxel: config.voxel_size(),
            dims: [d[0] as i64, d[1] as i64, d[2] as i64],
        }
    }

    fn cell(&self, p: [f64; 3]) -> Option<[i64; 3]> {
        let mut c = [0i64; 3];
        for a in 0..3 {
            let v = ((p[a] - self.min[a]) / self.voxel).floor() as i64;
            if v < 0 || v >= self.dims[a] {
                return None;
            }
            c[a] = v;
        }
        Some(c)
    }
}

fn lerp(o: [f64; 3], e: [f64; 3], s: f64) -> [f64; 3] {
    [0, 1, 2].map(|a| o[a] + s * (e[a] - o[a]))
}

/// Ordered voxels of the segment `o -> e`, found by sampling every
/// `voxel / 1000` of arc length. Where two consecutive samples land in cells
/// that are not face neighbours, the gap is bisected until it is; a gap that
/// stays non-adjacent down to `TIE_WIDTH` is a corner crossing. Voxels are
/// half-open, so at the crossing instant the point already sits past the
/// faces it crosses upwards but not yet past those it crosses downwards:
/// upward steps come first, then downward ones, each in x, y, z order.
///
/// Only samples inside the grid are kept, so segments with endpoints inside
/// the grid are covered exactly.
pub fn oracle_voxels(o: [f64; 3], e: [f64; 3], grid: &Box3) -> Vec<[i64; 3]> {
    let len = (0..3).map(|a| (e[a] - o[a]).powi(2)).sum::<f64>().sqrt();
    let n = ((len / grid.voxel) * SAMPLES_PER_VOXEL).ceil().max(1.0) as u64;
    let mut out: Vec<[i64; 3]> = Vec::new();
    let mut prev: Option<(f64, [i64; 3])> = None;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let Some(c) = grid.cell(lerp(o, e, s)) else {
            prev = None;
            continue;
        };
        match prev {
            None => out.push(c),
            Some((sp, cp)) if cp != c => refine(o, e, grid, sp, cp, s, c, &mut out),
            _ => {}
        }
        prev = Some((s, c));
    }
    out
}

fn adjacent(a: [i64; 3], b: [i64; 3]) -> bool {
    (0..3).map(|k| (a[k] - b[k]).abs()).sum::<i64>() == 1
}

#[allow(clippy::too_many_arguments)]
fn refine(o: [f64; 3], e: [f64; 3], grid: &Box3, s0: f64, c0: [i64; 3], s1: f64, c1: [i64; 3], out: &mut Vec<[i64; 3]>) {
    if c0 == c1 {
        return;
    }
    if adjacent(c0, c1) {
        out.push(c1);
        return;
    }
    if s1 - s0 < TIE_WIDTH {
        let mut c = c0;
        for upward in [true, false] {
            for a in 0..3 {
                while c[a] != c1[a] && (c1[a] > c[a]) == upward {
                    c[a] += (c1[a] - c[a]).signum();
                    out.push(c);
                }
            }
        }
        return;
    }
    let sm = 0.5 * (s0 + s1);
    let cm = grid.cell(lerp(o, e, sm)).expect("segment interior inside grid");
    refine(o, e, grid, s0, c0, sm, cm, out);
    refine(o, e, grid, sm, cm, s1, c1, out);
}

pub fn to_index(c: [i64; 3]) -> VoxelIndex {
    VoxelIndex::new(c[0] as usize, c[1] as usize, c[2] as usize)
}

/// `[0, 16]^3` at 0.25 m: 64 cells per axis.
pub fn grid64() -> GridConfig<f64> {
    GridConfig::new([0.0; 3], [16.0; 3], 0.25).unwrap()
}

/// Seeded rays with both endpoints uniformly inside `config`'s box.
pub fn random_rays(config: &GridConfig<f64>, count: usize, seed: u64) -> Vec<([f64; 3], [f64; 3])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (min, max) = (config.min(), config.max());
    let point = |rng: &mut ChaCha8Rng| [0, 1, 2].map(|a| rng.random_range(min[a]..max[a]));
    (0..count)
        .map(|_| loop {
            let o = point(&mut rng);
            let e = point(&mut rng);
            if (0..3).map(|a| (e[a] - o[a]).powi(2)).sum::<f64>() > 1e-6 {
                break (o, e);
            }
        })
        .collect()
}

/// Random sweep: returns spread around the origin inside and beyond the
/// default grid.
pub fn random_sweep(points: usize, seed: u64) -> Sweep<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.5)];
    let positions: Vec<[f64; 3]> = (0..points)
        .map(|_| [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0), rng.random_range(-6.0..4.0)])
        .collect();
    Sweep::from_positions(origin, 0.0, positions)
}

pub const WALL_X: f64 = 5.1;

/// Sensor at the origin facing a dense wall of returns at x = 5.1 m
/// spanning y in [-3, 3] and z in [-1, 1] at 5 cm spacing.
pub fn wall_scene() -> Sweep<f64> {
    let mut pts = Vec::new();
    for iy in 0..=120 {
        for iz in 0..=40 {
            pts.push([WALL_X, -3.0 + iy as f64 * 0.05, -1.0 + iz as f64 * 0.05]);
        }
    }
    Sweep::from_positions([0.0; 3], 0.0, pts)
}

/// Box-shaped cluster sampled on a 10 cm lattice.
pub fn box_object(label: &str, center: [f64; 3], size: [f64; 3]) -> VirtualObject<f64> {
    let steps = size.map(|s| (s / 0.1).round() as usize);
    let mut pts = Vec::new();
    for ix in 0..=steps[0] {
        for iy in 0..=steps[1] {
            for iz in 0..=steps[2] {
                pts.push([
                    center[0] - size[0] / 2.0 + ix as f64 * 0.1,
                    center[1] - size[1] / 2.0 + iy as f64 * 0.1,
                    center[2] - size[2] / 2.0 + iz as f64 * 0.1,
                ]);
            }
        }
    }
    VirtualObject::new(label, pts, OrientedBox { center, size, yaw: 0.0 }).unwrap()
}

/// Object fully hidden behind the wall.
pub fn hidden_object() -> VirtualObject<f64> {
    box_object("trailer", [10.0, 0.0, 0.0], [1.0, 1.5, 1.0])
}

/// Object straddling the wall's upper y edge as seen from the sensor.
pub fn edge_object() -> VirtualObject<f64> {
    box_object("truck", [10.0, 6.5, 0.0], [1.0, 1.0, 1.0])
}

/// Object between the sensor and the wall.
pub fn front_object() -> VirtualObject<f64> {
    box_object("car", [3.0, 0.0, 0.0], [1.0, 1.0, 1.0])
}

fn mask_of(config: &GridConfig<f64>, points: impl IntoIterator<Item = [f64; 3]>) -> VoxelMask {
    VoxelMask::from_points(config, points)
}

/// Voxels strictly before the endpoint voxel on the full segment trace.
fn inner_voxels(o: [f64; 3], p: [f64; 3], config: &GridConfig<f64>) -> Vec<VoxelIndex> {
    let t = traverse_ray(o, p, config).unwrap();
    t.visited.into_iter().filter(|&v| Some(v) != t.endpoint_voxel).collect()
}

/// Re-derives a culling result from full traces and checks the output and
/// report against it. Returns the number of occluded virtual points.
pub fn check_culling(
    scene: &Sweep<f64>,
    objects: &[VirtualObject<f64>],
    config: &GridConfig<f64>,
    drop_fraction: f64,
    out: &Sweep<f64>,
    report: &AugmentReport,
) -> Result<usize, String> {
    let origin = scene.sensor_origin;
    let scene_mask = mask_of(config, scene.positions());
    if out.points[..scene.len()] != scene.points[..] {
        return Err("culling changed scene points".into());
    }
    let mut expected = Vec::new();
    let mut dropped = Vec::new();
    let mut total = 0;
    for (idx, object) in objects.iter().enumerate() {
        let mut kept = Vec::new();
        for &p in object.points() {
            let crosses_scene = inner_voxels(origin, p, config).iter().any(|&v| scene_mask.contains(v));
            let trace = traverse_until_preoccupied(origin, p, &scene_mask, config).unwrap();
            if trace.blocked != crosses_scene {
                return Err(format!("blocked flag disagrees with full trace for {p:?}"));
            }
            if crosses_scene {
                if !scene_mask.contains(*trace.visited.last().unwrap()) {
                    return Err(format!("blocked trace for {p:?} does not end on a scene voxel"));
                }
            } else {
                if trace.endpoint_voxel.is_some() && !trace.reached_endpoint {
                    return Err(format!("kept point {p:?} does not reach its endpoint"));
                }
                kept.push(p);
            }
        }
        let occluded = object.points().len() - kept.len();
        total += occluded;
        if report.occluded_points[idx] != occluded {
            return Err(format!("object {idx}: report says {} occluded, traces say {occluded}", report.occluded_points[idx]));
        }
        if occluded as f64 / object.points().len() as f64 > drop_fraction {
            dropped.push(idx);
        } else {
            expected.extend(kept);
        }
    }
    if report.objects_dropped != dropped {
        return Err(format!("dropped {:?}, expected {dropped:?}", report.objects_dropped));
    }
    let got: Vec<[f64; 3]> = out.points[scene.len()..].iter().map(|p| p.position()).collect();
    if got != expected {
        return Err("surviving virtual points differ from the traced ones".into());
    }
    Ok(total)
}

/// Re-derives a drilling result from full traces, checks the output, and
/// checks that every ray to a virtual point reaches its endpoint against the
/// remaining scene. Returns the number of removed scene points.
pub fn check_drilling(
    scene: &Sweep<f64>,
    objects: &[VirtualObject<f64>],
    config: &GridConfig<f64>,
    out: &Sweep<f64>,
    report: &AugmentReport,
) -> Result<usize, String> {
    let origin = scene.sensor_origin;
    let virtual_pts: Vec<[f64; 3]> = objects.iter().flat_map(|o| o.points().iter().copied()).collect();
    let virtual_mask = mask_of(config, virtual_pts.iter().copied());
    let scene_mask = mask_of(config, scene.positions());
    let occluders: HashSet<VoxelIndex> = virtual_pts
        .iter()
        .flat_map(|&p| inner_voxels(origin, p, config))
        .filter(|&v| scene_mask.contains(v))
        .collect();
    let survivors: Vec<_> = scene
        .points
        .iter()
        .filter(|sp| {
            let p = sp.position();
            let shadowed = inner_voxels(origin, p, config).iter().any(|&v| virtual_mask.contains(v));
            let occluding = config.world_to_voxel(p).is_some_and(|v| occluders.contains(&v));
            !shadowed && !occluding
        })
        .copied()
        .collect();
    let removed = scene.len() - survivors.len();
    if report.scene_points_removed != removed {
        return Err(format!("report says {} removed, traces say {removed}", report.scene_points_removed));
    }
    if out.points[..survivors.len()] != survivors[..] {
        return Err("surviving scene points differ from the traced ones".into());
    }
    let got: Vec<[f64; 3]> = out.points[survivors.len()..].iter().map(|p| p.position()).collect();
    if got != virtual_pts {
        return Err("drilling did not keep every virtual point".into());
    }
    let remaining = mask_of(config, survivors.iter().map(|p| p.position()));
    for &p in &virtual_pts {
        let t = traverse_until_preoccupied(origin, p, &remaining, config).unwrap();
        if t.blocked || (t.endpoint_voxel.is_some() && !t.reached_endpoint) {
            return Err(format!("ray to virtual point {p:?} is still blocked"));
        }
    }
    Ok(removed)
}

/// Scene part (leading points) of a drilled sweep.
pub fn scene_part(out: &Sweep<f64>, objects: &[VirtualObject<f64>]) -> Sweep<f64> {
    let n = out.len() - objects.iter().map(|o| o.points().len()).sum::<usize>();
    Sweep::new(out.sensor_origin, out.timestamp, out.points[..n].to_vec())
}
