//! Sweeps, rigid poses, motion compensation and the on-disk formats.

pub(crate) mod bytes;
mod object_file;
mod pose_file;
mod sweep_file;
mod volume_file;

pub use object_file::{read_object, sidecar_path, write_object};
pub use pose_file::{read_poses, write_poses, StampedPose};
pub use sweep_file::{read_sweep, write_sweep, SWEEP_MAGIC, SWEEP_VERSION};
pub use volume_file::{
    read_occupancy, read_visibility, write_occupancy, write_visibility, VolumeHeader, OCCUPANCY_MAGIC,
    VISIBILITY_MAGIC, VOLUME_VERSION,
};

use crate::error::{Error, Result};
use crate::scalar::{add, is_finite3, Scalar, Vec3};

/// One LiDAR return. `t` is seconds relative to the reference sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepPoint<T: Scalar> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub t: T,
}

impl<T: Scalar> SweepPoint<T> {
    pub fn new(x: T, y: T, z: T, t: T) -> Self {
        SweepPoint { x, y, z, t }
    }

    pub fn at(p: Vec3<T>) -> Self {
        SweepPoint::new(p[0], p[1], p[2], T::zero())
    }

    #[inline]
    pub fn position(&self) -> Vec3<T> {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        is_finite3(self.position()) && self.t.is_finite()
    }
}

/// One LiDAR capture with its sensor origin and absolute timestamp (seconds).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sweep<T: Scalar> {
    pub sensor_origin: Vec3<T>,
    pub timestamp: f64,
    pub points: Vec<SweepPoint<T>>,
}

impl<T: Scalar> Sweep<T> {
    pub fn new(sensor_origin: Vec3<T>, timestamp: f64, points: Vec<SweepPoint<T>>) -> Self {
        Sweep {
            sensor_origin,
            timestamp,
            points,
        }
    }

    /// Sweep with `t = 0` on every point.
    pub fn from_positions(sensor_origin: Vec3<T>, timestamp: f64, positions: impl IntoIterator<Item = Vec3<T>>) -> Self {
        Sweep::new(sensor_origin, timestamp, positions.into_iter().map(SweepPoint::at).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3<T>> + '_ {
        self.points.iter().map(SweepPoint::position)
    }

    /// Checks that origin, timestamp and every point are finite.
    pub fn validate(&self) -> Result<()> {
        if !is_finite3(self.sensor_origin) || !self.timestamp.is_finite() {
            return Err(Error::argument("sweep origin and timestamp must be finite"));
        }
        if let Some(idx) = self.points.iter().position(|p| !p.is_finite()) {
            return Err(Error::argument(format!("point {idx} has a non-finite value")));
        }
        Ok(())
    }
}

/// Rigid transform: rotation (unit quaternion `w, x, y, z`) then translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Scalar> {
    translation: Vec3<T>,
    rotation: [T; 4],
}

const UNIT_QUATERNION_TOLERANCE: f64 = 1e-6;

impl<T: Scalar> Pose<T> {
    pub fn new(translation: Vec3<T>, rotation: [T; 4]) -> Result<Self> {
        if !is_finite3(translation) || rotation.iter().any(|c| !c.is_finite()) {
            return Err(Error::argument("pose values must be finite"));
        }
        let norm = rotation.iter().map(|&c| c * c).fold(T::zero(), |a, b| a + b).sqrt();
        if (norm.as_f64() - 1.0).abs() > UNIT_QUATERNION_TOLERANCE {
            return Err(Error::argument(format!("rotation quaternion has norm {norm}, expected 1")));
        }
        Ok(Pose { translation, rotation })
    }

    pub fn identity() -> Self {
        Pose {
            translation: [T::zero(); 3],
            rotation: [T::one(), T::zero(), T::zero(), T::zero()],
        }
    }

    pub fn from_translation(translation: Vec3<T>) -> Self {
        Pose {
            translation,
            ..Self::identity()
        }
    }

    /// Rotation about +z by `yaw` radians.
    pub fn from_yaw(yaw: T, translation: Vec3<T>) -> Self {
        let half = yaw * T::lit(0.5);
        Pose {
            translation,
            rotation: [half.cos(), T::zero(), T::zero(), half.sin()],
        }
    }

    pub fn translation(&self) -> Vec3<T> {
        self.translation
    }

    pub fn rotation(&self) -> [T; 4] {
        self.rotation
    }

    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        let [w, qx, qy, qz] = self.rotation;
        let two = T::lit(2.0);
        // v + 2w (q x v) + 2 q x (q x v)
        let c1 = [qy * v[2] - qz * v[1], qz * v[0] - qx * v[2], qx * v[1] - qy * v[0]];
        let c2 = [qy * c1[2] - qz * c1[1], qz * c1[0] - qx * c1[2], qx * c1[1] - qy * c1[0]];
        [0, 1, 2].map(|a| v[a] + two * (w * c1[a] + c2[a]))
    }

    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        add(self.rotate(p), self.translation)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose<T>) -> Pose<T> {
        let [aw, ax, ay, az] = self.rotation;
        let [bw, bx, by, bz] = other.rotation;
        let rotation = [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ];
        Pose {
            translation: self.transform_point(other.translation),
            rotation,
        }
    }

    pub fn inverse(&self) -> Pose<T> {
        let [w, x, y, z] = self.rotation;
        let conj = Pose {
            translation: [T::zero(); 3],
            rotation: [w, -x, -y, -z],
        };
        let t = conj.rotate(self.translation);
        Pose {
            translation: [-t[0], -t[1], -t[2]],
            rotation: conj.rotation,
        }
    }
}

impl<T: Scalar> Default for Pose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

/// Maps a sweep from its own frame into the reference frame
/// (`pose_ref⁻¹ ∘ pose_sweep`) and stamps every point with
/// `sweep.timestamp - t_ref`.
pub fn motion_compensate<T: Scalar>(sweep: &Sweep<T>, pose_sweep: &Pose<T>, pose_ref: &Pose<T>, t_ref: f64) -> Result<Sweep<T>> {
    // re-validate: poses may have been built through struct update paths
    let pose_sweep = Pose::new(pose_sweep.translation, pose_sweep.rotation)?;
    let pose_ref = Pose::new(pose_ref.translation, pose_ref.rotation)?;
    let transform = pose_ref.inverse().compose(&pose_sweep);
    let dt = T::lit(sweep.timestamp - t_ref);
    let points = sweep
        .points
        .iter()
        .map(|p| {
            let q = transform.transform_point(p.position());
            SweepPoint::new(q[0], q[1], q[2], dt)
        })
        .collect();
    Ok(Sweep {
        sensor_origin: transform.transform_point(sweep.sensor_origin),
        timestamp: sweep.timestamp,
        points,
    })
}

/// Concatenates sweeps already expressed in the reference frame. The last
/// sweep is the reference: its origin and timestamp are kept.
pub fn aggregate_sweeps<T: Scalar>(sweeps: &[Sweep<T>]) -> Result<Sweep<T>> {
    let reference = sweeps
        .last()
        .ok_or_else(|| Error::argument("cannot aggregate an empty list of sweeps"))?;
    let points = sweeps.iter().flat_map(|s| s.points.iter().copied()).collect();
    Ok(Sweep {
        sensor_origin: reference.sensor_origin,
        timestamp: reference.timestamp,
        points,
    })
}
