//! `VSWP` binary sweeps and the whitespace-delimited `.txt` variant.
//!
//! Binary layout (little-endian): `"VSWP"`, `u16` version, `f64` origin
//! x/y/z, `f64` timestamp, `u64` count, then `count` records of four `f32`
//! (x, y, z, t).
//!
//! Text layout: one point per line as `x y z [t]`. Optional header lines
//! `# origin <x> <y> <z>` and `# timestamp <s>`; other `#` lines are comments.

use std::fmt::Write as _;
use std::path::Path;

use super::bytes::{read_file, write_file, ByteReader};
use super::{Sweep, SweepPoint};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SWEEP_MAGIC: &[u8; 4] = b"VSWP";
pub const SWEEP_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 3 * 8 + 8 + 8;
const RECORD_LEN: usize = 16;

fn is_text(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt"))
}

pub fn read_sweep<T: Scalar>(path: impl AsRef<Path>) -> Result<Sweep<T>> {
    let path = path.as_ref();
    let data = read_file(path)?;
    if is_text(path) {
        parse_text(path, &data)
    } else {
        parse_binary(path, &data)
    }
}

pub fn write_sweep<T: Scalar>(path: impl AsRef<Path>, sweep: &Sweep<T>) -> Result<()> {
    let path = path.as_ref();
    sweep.validate()?;
    let data = if is_text(path) {
        encode_text(sweep).into_bytes()
    } else {
        encode_binary(sweep)
    };
    write_file(path, &data)
}

pub(crate) fn encode_binary<T: Scalar>(sweep: &Sweep<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * sweep.len());
    out.extend_from_slice(SWEEP_MAGIC);
    out.extend_from_slice(&SWEEP_VERSION.to_le_bytes());
    for c in sweep.sensor_origin {
        out.extend_from_slice(&c.as_f64().to_le_bytes());
    }
    out.extend_from_slice(&sweep.timestamp.to_le_bytes());
    out.extend_from_slice(&(sweep.len() as u64).to_le_bytes());
    for p in &sweep.points {
        for c in [p.x, p.y, p.z, p.t] {
            out.extend_from_slice(&(c.as_f64() as f32).to_le_bytes());
        }
    }
    out
}

pub(crate) fn parse_binary<T: Scalar>(path: &Path, data: &[u8]) -> Result<Sweep<T>> {
    let mut r = ByteReader::new(path, data);
    r.magic(SWEEP_MAGIC)?;
    let version_at = r.offset();
    let version = r.u16("version")?;
    if version != SWEEP_VERSION {
        return Err(r.error(version_at, format!("unsupported sweep version {version}")));
    }
    let origin_at = r.offset();
    let origin = [r.f64("origin")?, r.f64("origin")?, r.f64("origin")?];
    let timestamp = r.f64("timestamp")?;
    if origin.iter().any(|c| !c.is_finite()) || !timestamp.is_finite() {
        return Err(r.error(origin_at, "non-finite sensor origin or timestamp"));
    }
    let count = r.u64("point count")?;
    let expected = (count as u128) * RECORD_LEN as u128;
    if expected > r.remaining() as u128 {
        return Err(r.error(
            r.offset(),
            format!("truncated payload: {count} records need {expected} bytes, {} left", r.remaining()),
        ));
    }
    let mut points = Vec::with_capacity(count as usize);
    for index in 0..count {
        let at = r.offset();
        let v = [r.f32("record")?, r.f32("record")?, r.f32("record")?, r.f32("record")?];
        if v.iter().any(|c| !c.is_finite()) {
            return Err(r.error(at, format!("record {index} has a non-finite value")));
        }
        let [x, y, z, t] = v.map(|c| T::lit(c as f64));
        points.push(SweepPoint::new(x, y, z, t));
    }
    r.finish()?;
    Ok(Sweep::new(origin.map(T::lit), timestamp, points))
}

fn encode_text<T: Scalar>(sweep: &Sweep<T>) -> String {
    let o = sweep.sensor_origin;
    let mut out = format!("# origin {} {} {}\n# timestamp {}\n", o[0], o[1], o[2], sweep.timestamp);
    for p in &sweep.points {
        let _ = writeln!(out, "{} {} {} {}", p.x, p.y, p.z, p.t);
    }
    out
}

fn parse_text<T: Scalar>(path: &Path, data: &[u8]) -> Result<Sweep<T>> {
    let text = std::str::from_utf8(data).map_err(|e| Error::parse(path, e.valid_up_to() as u64, "not valid UTF-8"))?;
    let mut origin = [0.0f64; 3];
    let mut timestamp = 0.0f64;
    let mut points = Vec::new();
    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let at = offset;
        offset += line.len();
        let trimmed = line.trim();
        let fail = |msg: String| Error::parse(path, at as u64, msg);
        let numbers = |fields: &[&str]| -> Result<Vec<f64>> {
            fields
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| fail(format!("invalid number {f:?}"))))
                .collect()
        };
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let fields: Vec<&str> = comment.split_whitespace().collect();
            match fields.first() {
                Some(&"origin") if fields.len() == 4 => {
                    let v = numbers(&fields[1..])?;
                    origin = [v[0], v[1], v[2]];
                }
                Some(&"timestamp") if fields.len() == 2 => timestamp = numbers(&fields[1..])?[0],
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(fail(format!("record {} must have 3 or 4 fields, got {}", points.len(), fields.len())));
        }
        let v = numbers(&fields)?;
        if v.iter().any(|c| !c.is_finite()) {
            return Err(fail(format!("record {} has a non-finite value", points.len())));
        }
        let t = v.get(3).copied().unwrap_or(0.0);
        points.push(SweepPoint::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]), T::lit(t)));
    }
    if origin.iter().any(|c| !c.is_finite()) || !timestamp.is_finite() {
        return Err(Error::parse(path, 0, "non-finite sensor origin or timestamp"));
    }
    Ok(Sweep::new(origin.map(T::lit), timestamp, points))
}
