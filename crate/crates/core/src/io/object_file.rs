//! Virtual objects on disk: points in a sweep file plus an optional
//! `<file>.box` sidecar with `label=`, `center=x y z`, `size=l w h` and
//! `yaw=` lines. Without a sidecar the label is the file stem and the box is
//! the axis-aligned hull of the points.

use std::path::{Path, PathBuf};

use super::bytes::{read_file, write_file};
use super::{read_sweep, write_sweep, Sweep};
use crate::augment::{OrientedBox, VirtualObject};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".box");
    PathBuf::from(name)
}

pub fn read_object<T: Scalar>(path: impl AsRef<Path>) -> Result<VirtualObject<T>> {
    let path = path.as_ref();
    let sweep: Sweep<T> = read_sweep(path)?;
    let points: Vec<_> = sweep.positions().collect();
    let sidecar = sidecar_path(path);
    if !sidecar.exists() {
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "object".to_string());
        return VirtualObject::from_points(label, points);
    }
    let data = read_file(&sidecar)?;
    let text = String::from_utf8_lossy(&data);
    let mut label = None;
    let (mut center, mut size, mut yaw) = (None, None, None);
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let at = offset;
        offset += line.len() as u64;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |msg: String| Error::parse(&sidecar, at, msg);
        let (key, value) = line.split_once('=').ok_or_else(|| fail("expected key=value".into()))?;
        let numbers = || -> Result<Vec<T>> {
            value
                .split_whitespace()
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map(T::lit)
                        .ok_or_else(|| fail(format!("invalid number {f:?}")))
                })
                .collect()
        };
        let triple = || -> Result<[T; 3]> {
            let v = numbers()?;
            <[T; 3]>::try_from(v).map_err(|_| fail(format!("{} needs three numbers", key.trim())))
        };
        match key.trim() {
            "label" => label = Some(value.trim().to_string()),
            "center" => center = Some(triple()?),
            "size" => size = Some(triple()?),
            "yaw" => {
                let v = numbers()?;
                if v.len() != 1 {
                    return Err(fail("yaw needs one number".into()));
                }
                yaw = Some(v[0]);
            }
            other => return Err(fail(format!("unknown key {other:?}"))),
        }
    }
    let missing = |what: &str| Error::parse(&sidecar, 0, format!("missing {what}"));
    let bbox = OrientedBox {
        center: center.ok_or_else(|| missing("center"))?,
        size: size.ok_or_else(|| missing("size"))?,
        yaw: yaw.unwrap_or_else(T::zero),
    };
    VirtualObject::new(label.ok_or_else(|| missing("label"))?, points, bbox)
}

/// Writes the points (origin and timestamp zero) and the box sidecar.
pub fn write_object<T: Scalar>(path: impl AsRef<Path>, object: &VirtualObject<T>) -> Result<()> {
    let path = path.as_ref();
    let sweep = Sweep::from_positions([T::zero(); 3], 0.0, object.points().iter().copied());
    write_sweep(path, &sweep)?;
    let b = object.bbox();
    let text = format!(
        "label={}\ncenter={} {} {}\nsize={} {} {}\nyaw={}\n",
        object.label(),
        b.center[0],
        b.center[1],
        b.center[2],
        b.size[0],
        b.size[1],
        b.size[2],
        b.yaw
    );
    write_file(&sidecar_path(path), text.as_bytes())
}
