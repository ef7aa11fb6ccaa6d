//! Pose lists: one `timestamp tx ty tz qw qx qy qz` line per pose.

use std::fmt::Write as _;
use std::path::Path;

use super::bytes::{read_file, write_file};
use super::Pose;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sensor pose at an absolute timestamp (seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedPose<T: Scalar> {
    pub timestamp: f64,
    pub pose: Pose<T>,
}

pub fn read_poses<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<StampedPose<T>>> {
    let path = path.as_ref();
    let data = read_file(path)?;
    let text = std::str::from_utf8(&data).map_err(|e| Error::parse(path, e.valid_up_to() as u64, "not valid UTF-8"))?;
    let mut poses = Vec::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let at = offset;
        offset += line.len() as u64;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|_| Error::parse(path, at, format!("invalid number {f:?}"))))
            .collect::<Result<_>>()?;
        if v.len() != 8 {
            return Err(Error::parse(path, at, format!("pose line needs 8 fields, got {}", v.len())));
        }
        let pose = Pose::new([v[1], v[2], v[3]].map(T::lit), [v[4], v[5], v[6], v[7]].map(T::lit))
            .map_err(|e| Error::parse(path, at, e.to_string()))?;
        if !v[0].is_finite() {
            return Err(Error::parse(path, at, "non-finite timestamp"));
        }
        poses.push(StampedPose { timestamp: v[0], pose });
    }
    Ok(poses)
}

pub fn write_poses<T: Scalar>(path: impl AsRef<Path>, poses: &[StampedPose<T>]) -> Result<()> {
    let mut out = String::new();
    for p in poses {
        let t = p.pose.translation();
        let q = p.pose.rotation();
        let _ = writeln!(out, "{} {} {} {} {} {} {} {}", p.timestamp, t[0], t[1], t[2], q[0], q[1], q[2], q[3]);
    }
    write_file(path.as_ref(), out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poses.txt");
        let poses = vec![
            StampedPose { timestamp: 0.0, pose: Pose::<f64>::identity() },
            StampedPose { timestamp: 0.05, pose: Pose::from_yaw(0.3, [1.0, -2.0, 0.5]) },
        ];
        write_poses(&path, &poses).unwrap();
        assert_eq!(read_poses::<f64>(&path).unwrap(), poses);

        std::fs::write(&path, "# comment\n0 0 0 0 1 0 0\n").unwrap();
        assert!(matches!(read_poses::<f64>(&path), Err(Error::Parse { offset: 10, .. })));
        std::fs::write(&path, "0 0 0 0 2 0 0 0\n").unwrap();
        assert!(read_poses::<f64>(&path).is_err());
    }
}
