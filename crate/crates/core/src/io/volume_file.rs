//! `VVOL` (ternary visibility) and `OVOL` (log-odds) volume files.
//!
//! Shared header, little-endian: 4-byte magic, `u16` version, `u32`
//! nx/ny/nz, `f64` x_min/y_min/z_min/voxel_size. The payload follows in grid
//! linear order: one state byte per voxel for `VVOL`, one `f32` log-odds per
//! voxel for `OVOL`.

use std::path::Path;

use super::bytes::{read_file, write_file, ByteReader};
use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::occupancy::OccupancyGrid;
use crate::raycast::VisibilityVolume;
use crate::scalar::Scalar;

pub const VISIBILITY_MAGIC: &[u8; 4] = b"VVOL";
pub const OCCUPANCY_MAGIC: &[u8; 4] = b"OVOL";
pub const VOLUME_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 3 * 4 + 4 * 8;

/// Decoded volume header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeHeader {
    pub dims: [u32; 3],
    pub min: [f64; 3],
    pub voxel_size: f64,
}

impl VolumeHeader {
    pub fn of<T: Scalar>(config: &GridConfig<T>) -> Self {
        VolumeHeader {
            dims: config.dims().map(|d| d as u32),
            min: config.min().map(T::as_f64),
            voxel_size: config.voxel_size().as_f64(),
        }
    }

    pub fn num_voxels(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    pub fn grid<T: Scalar>(&self) -> Result<GridConfig<T>> {
        let max = [0, 1, 2].map(|a| T::lit(self.min[a] + self.dims[a] as f64 * self.voxel_size));
        let grid = GridConfig::new(self.min.map(T::lit), max, T::lit(self.voxel_size))?;
        if grid.dims() != self.dims.map(|d| d as usize) {
            return Err(Error::config("volume header dimensions are inconsistent"));
        }
        Ok(grid)
    }

    fn encode(&self, magic: &[u8; 4], out: &mut Vec<u8>) {
        out.extend_from_slice(magic);
        out.extend_from_slice(&VOLUME_VERSION.to_le_bytes());
        for d in self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for c in self.min {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&self.voxel_size.to_le_bytes());
    }

    fn decode(r: &mut ByteReader<'_>, magic: &[u8; 4]) -> Result<Self> {
        r.magic(magic)?;
        let at = r.offset();
        let version = r.u16("version")?;
        if version != VOLUME_VERSION {
            return Err(r.error(at, format!("unsupported volume version {version}")));
        }
        let dims = [r.u32("nx")?, r.u32("ny")?, r.u32("nz")?];
        let min = [r.f64("x_min")?, r.f64("y_min")?, r.f64("z_min")?];
        let voxel_size = r.f64("voxel_size")?;
        Ok(VolumeHeader { dims, min, voxel_size })
    }
}

pub(crate) fn encode_visibility<T: Scalar>(vol: &VisibilityVolume<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + vol.as_bytes().len());
    VolumeHeader::of(vol.config()).encode(VISIBILITY_MAGIC, &mut out);
    out.extend_from_slice(vol.as_bytes());
    out
}

pub fn write_visibility<T: Scalar>(path: impl AsRef<Path>, vol: &VisibilityVolume<T>) -> Result<()> {
    write_file(path.as_ref(), &encode_visibility(vol))
}

pub fn read_visibility<T: Scalar>(path: impl AsRef<Path>) -> Result<VisibilityVolume<T>> {
    let path = path.as_ref();
    let data = read_file(path)?;
    let mut r = ByteReader::new(path, &data);
    let header = VolumeHeader::decode(&mut r, VISIBILITY_MAGIC)?;
    let grid = header.grid::<T>()?;
    let at = r.offset();
    let states = r.take(header.num_voxels(), "state payload")?.to_vec();
    r.finish()?;
    VisibilityVolume::from_bytes(grid, states).map_err(|e| r.error(at, e.to_string()))
}

pub fn write_occupancy<T: Scalar>(path: impl AsRef<Path>, grid: &OccupancyGrid<T>) -> Result<()> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * grid.logodds().len());
    VolumeHeader::of(grid.config()).encode(OCCUPANCY_MAGIC, &mut out);
    for &v in grid.logodds() {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    write_file(path.as_ref(), &out)
}

/// Reads an `OVOL` file as its header plus raw `f32` log-odds.
pub fn read_occupancy(path: impl AsRef<Path>) -> Result<(VolumeHeader, Vec<f32>)> {
    let path = path.as_ref();
    let data = read_file(path)?;
    let mut r = ByteReader::new(path, &data);
    let header = VolumeHeader::decode(&mut r, OCCUPANCY_MAGIC)?;
    let n = header.num_voxels();
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(r.f32("log-odds payload")?);
    }
    r.finish()?;
    Ok((header, values))
}
