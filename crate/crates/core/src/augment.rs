//! Pasting virtual objects into a scene sweep with three visibility policies.
//!
//! * naive: plain union, occlusion ignored.
//! * culling: scene voxels are pre-occupied; virtual points whose ray from
//!   the sensor is stopped by a scene voxel are removed, and an object whose
//!   occluded fraction exceeds the drop fraction is removed entirely.
//! * drilling: virtual-object voxels are pre-occupied; scene points whose
//!   ray is stopped by a virtual voxel are removed, and so are scene points
//!   sitting in voxels that stop a ray to a virtual point.
//!
//! Blocking masks are always built from the other population, so points of
//! one object never occlude each other.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::io::{Sweep, SweepPoint};
use crate::parallel::map_chunks;
use crate::raycast::{blocking_voxels, ray_is_blocked, VoxelMask};
use crate::scalar::{sub, Scalar, Vec3};

/// Margin (meters) by which object points may stick out of their box.
pub const BOX_MARGIN: f64 = 0.5;

/// Box with a yaw rotation about +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox<T: Scalar> {
    pub center: Vec3<T>,
    /// Full extents along the box's local x, y, z.
    pub size: Vec3<T>,
    pub yaw: T,
}

impl<T: Scalar> OrientedBox<T> {
    /// Smallest axis-aligned box around `points`.
    pub fn enclosing(points: &[Vec3<T>]) -> Option<Self> {
        let first = *points.first()?;
        let (mut lo, mut hi) = (first, first);
        for p in points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let half = T::lit(0.5);
        Some(OrientedBox {
            center: [0, 1, 2].map(|a| (lo[a] + hi[a]) * half),
            size: [0, 1, 2].map(|a| hi[a] - lo[a]),
            yaw: T::zero(),
        })
    }

    /// Containment in the box grown by `margin` on every side.
    pub fn contains(&self, p: Vec3<T>, margin: T) -> bool {
        let d = sub(p, self.center);
        let (s, c) = self.yaw.sin_cos();
        let local = [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]];
        let half = T::lit(0.5);
        (0..3).all(|a| local[a].abs() <= self.size[a] * half + margin)
    }
}

/// Labeled cluster of points already placed in the scene frame.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualObject<T: Scalar> {
    label: String,
    points: Vec<Vec3<T>>,
    bbox: OrientedBox<T>,
}

impl<T: Scalar> VirtualObject<T> {
    pub fn new(label: impl Into<String>, points: Vec<Vec3<T>>, bbox: OrientedBox<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::argument("virtual object has no points"));
        }
        let margin = T::lit(BOX_MARGIN);
        if let Some(i) = points.iter().position(|&p| !bbox.contains(p, margin)) {
            return Err(Error::argument(format!(
                "object point {i} lies outside its box inflated by {BOX_MARGIN} m"
            )));
        }
        Ok(VirtualObject {
            label: label.into(),
            points,
            bbox,
        })
    }

    /// Object whose box is the axis-aligned hull of its points.
    pub fn from_points(label: impl Into<String>, points: Vec<Vec3<T>>) -> Result<Self> {
        let bbox = OrientedBox::enclosing(&points).ok_or_else(|| Error::argument("virtual object has no points"))?;
        Self::new(label, points, bbox)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn bbox(&self) -> &OrientedBox<T> {
        &self.bbox
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentMode {
    Naive,
    Culling,
    Drilling,
}

impl AugmentMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AugmentMode::Naive => "naive",
            AugmentMode::Culling => "culling",
            AugmentMode::Drilling => "drilling",
        }
    }
}

impl fmt::Display for AugmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AugmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(AugmentMode::Naive),
            "culling" => Ok(AugmentMode::Culling),
            "drilling" => Ok(AugmentMode::Drilling),
            other => Err(Error::argument(format!(
                "unknown augmentation mode {other:?} (expected naive, culling or drilling)"
            ))),
        }
    }
}

/// What an augmentation pass kept and removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentReport {
    pub mode: AugmentMode,
    pub labels: Vec<String>,
    /// Virtual points per object that made it into the output.
    pub kept_points: Vec<usize>,
    /// Virtual points per object whose ray was stopped by the scene (culling only).
    pub occluded_points: Vec<usize>,
    /// Indices of objects removed as a whole.
    pub objects_dropped: Vec<usize>,
    pub scene_points_in: usize,
    pub scene_points_removed: usize,
    pub output_points: usize,
}

impl AugmentReport {
    fn new<T: Scalar>(mode: AugmentMode, scene: &Sweep<T>, objects: &[VirtualObject<T>]) -> Self {
        AugmentReport {
            mode,
            labels: objects.iter().map(|o| o.label.clone()).collect(),
            kept_points: objects.iter().map(|o| o.points.len()).collect(),
            occluded_points: vec![0; objects.len()],
            objects_dropped: Vec::new(),
            scene_points_in: scene.len(),
            scene_points_removed: 0,
            output_points: 0,
        }
    }
}

/// Line-oriented `key=value` rendering, one object per `object.<i>.*` group.
impl fmt::Display for AugmentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode={}", self.mode)?;
        writeln!(f, "objects={}", self.labels.len())?;
        for (i, label) in self.labels.iter().enumerate() {
            writeln!(f, "object.{i}.label={label}")?;
            writeln!(f, "object.{i}.kept_points={}", self.kept_points[i])?;
            writeln!(f, "object.{i}.occluded_points={}", self.occluded_points[i])?;
        }
        let dropped: Vec<String> = self.objects_dropped.iter().map(|i| i.to_string()).collect();
        writeln!(f, "objects_dropped={}", dropped.join(","))?;
        writeln!(f, "scene_points_in={}", self.scene_points_in)?;
        writeln!(f, "scene_points_removed={}", self.scene_points_removed)?;
        writeln!(f, "output_points={}", self.output_points)
    }
}

fn virtual_points<'a, T: Scalar>(
    objects: impl IntoIterator<Item = &'a VirtualObject<T>> + 'a,
) -> impl Iterator<Item = SweepPoint<T>> + 'a {
    // stamped with the scene reference time
    objects.into_iter().flat_map(|o| o.points.iter().map(|&p| SweepPoint::at(p)))
}

/// Scene points followed by every object point.
pub fn insert_naive<T: Scalar>(scene: &Sweep<T>, objects: &[VirtualObject<T>]) -> Sweep<T> {
    let mut out = scene.clone();
    out.points.extend(virtual_points(objects));
    out
}

/// Per-point blocked flags, in input order.
fn blocked_flags<T: Scalar>(
    origin: Vec3<T>,
    points: &[Vec3<T>],
    mask: &VoxelMask,
    config: &GridConfig<T>,
    workers: usize,
) -> Vec<bool> {
    map_chunks(points, workers, |chunk| {
        chunk
            .iter()
            .map(|&p| ray_is_blocked(origin, p, mask, config))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Removes virtual points hidden behind scene voxels; drops whole objects
/// whose occluded fraction is above `drop_fraction`.
pub fn cull<T: Scalar>(
    scene: &Sweep<T>,
    objects: &[VirtualObject<T>],
    config: &GridConfig<T>,
    drop_fraction: T,
    workers: usize,
) -> Result<(Sweep<T>, AugmentReport)> {
    if !(drop_fraction >= T::zero() && drop_fraction <= T::one()) {
        return Err(Error::argument(format!("drop_fraction must be in [0, 1], got {drop_fraction}")));
    }
    let mask = VoxelMask::from_points(config, scene.positions());
    let mut report = AugmentReport::new(AugmentMode::Culling, scene, objects);
    let mut out = scene.clone();
    for (idx, object) in objects.iter().enumerate() {
        let blocked = blocked_flags(scene.sensor_origin, &object.points, &mask, config, workers);
        let occluded = blocked.iter().filter(|&&b| b).count();
        report.occluded_points[idx] = occluded;
        let fraction = T::lit(occluded as f64 / object.points.len() as f64);
        if fraction > drop_fraction {
            report.objects_dropped.push(idx);
            report.kept_points[idx] = 0;
            continue;
        }
        report.kept_points[idx] = object.points.len() - occluded;
        out.points.extend(
            object
                .points
                .iter()
                .zip(&blocked)
                .filter(|(_, &b)| !b)
                .map(|(&p, _)| SweepPoint::at(p)),
        );
    }
    report.output_points = out.len();
    Ok((out, report))
}

/// Removes scene points that would be hidden by the virtual objects and
/// scene points that hide them, then adds every virtual point.
///
/// A scene point goes if its ray is stopped by a virtual voxel (scene rays
/// cast with virtual voxels pre-occupied), or if its voxel stops the ray to
/// some virtual point (virtual rays cast with scene voxels pre-occupied).
/// Afterwards every ray to a virtual point reaches its endpoint voxel.
pub fn drill<T: Scalar>(
    scene: &Sweep<T>,
    objects: &[VirtualObject<T>],
    config: &GridConfig<T>,
    workers: usize,
) -> (Sweep<T>, AugmentReport) {
    let origin = scene.sensor_origin;
    let virtual_pos: Vec<Vec3<T>> = objects.iter().flat_map(|o| o.points.iter().copied()).collect();
    let virtual_mask = VoxelMask::from_points(config, virtual_pos.iter().copied());
    let scene_pos: Vec<Vec3<T>> = scene.positions().collect();
    let scene_mask = VoxelMask::from_points(config, scene_pos.iter().copied());

    let mut occluders = VoxelMask::for_grid(config);
    let hits = map_chunks(&virtual_pos, workers, |chunk| {
        chunk
            .iter()
            .flat_map(|&p| blocking_voxels(origin, p, &scene_mask, config))
            .collect::<Vec<_>>()
    });
    for v in hits.into_iter().flatten() {
        occluders.insert(v);
    }
    let shadowed = blocked_flags(origin, &scene_pos, &virtual_mask, config, workers);

    let mut report = AugmentReport::new(AugmentMode::Drilling, scene, objects);
    let keep = |(p, &hidden): &(&SweepPoint<T>, &bool)| {
        !hidden && !config.world_to_voxel(p.position()).is_some_and(|v| occluders.contains(v))
    };
    let mut out = Sweep {
        sensor_origin: origin,
        timestamp: scene.timestamp,
        points: scene.points.iter().zip(&shadowed).filter(keep).map(|(p, _)| *p).collect(),
    };
    report.scene_points_removed = scene.len() - out.len();
    out.points.extend(virtual_points(objects));
    report.output_points = out.len();
    (out, report)
}

/// Dispatches on `mode`.
pub fn augment<T: Scalar>(
    scene: &Sweep<T>,
    objects: &[VirtualObject<T>],
    mode: AugmentMode,
    config: &GridConfig<T>,
    drop_fraction: T,
    workers: usize,
) -> Result<(Sweep<T>, AugmentReport)> {
    match mode {
        AugmentMode::Naive => {
            let out = insert_naive(scene, objects);
            let mut report = AugmentReport::new(mode, scene, objects);
            report.output_points = out.len();
            Ok((out, report))
        }
        AugmentMode::Culling => cull(scene, objects, config, drop_fraction, workers),
        AugmentMode::Drilling => Ok(drill(scene, objects, config, workers)),
    }
}
