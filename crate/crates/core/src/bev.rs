//! Bird's-eye-view maps: the z axis of a volume becomes the channel axis.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::io::bytes::{read_file, write_file, ByteReader};
use crate::occupancy::OccupancyGrid;
use crate::raycast::{VisibilityVolume, VoxelState};
use crate::scalar::Scalar;

pub const BEV_MAGIC: &[u8; 4] = b"BEVF";

pub const FREE_VALUE: f32 = 0.0;
pub const UNKNOWN_VALUE: f32 = 0.5;
pub const OCCUPIED_VALUE: f32 = 1.0;

/// Dense `width x height x channels` map with values in `[0, 1]`, stored in
/// `(i, j, channel)` order with the channel fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct BevMap {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f32>,
}

impl BevMap {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height * channels {
            return Err(Error::argument(format!(
                "{} values do not fill a {width}x{height}x{channels} map",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::argument(format!("value {} at {pos} outside [0, 1]", values[pos])));
        }
        Ok(BevMap {
            width,
            height,
            channels,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(width, height, channels)`.
    pub fn shape(&self) -> [usize; 3] {
        [self.width, self.height, self.channels]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, channel: usize) -> f32 {
        self.values[(i * self.height + j) * self.channels + channel]
    }
}

fn encode_state(state: u8) -> f32 {
    match VoxelState::from_u8(state) {
        Some(VoxelState::Free) => FREE_VALUE,
        Some(VoxelState::Occupied) => OCCUPIED_VALUE,
        _ => UNKNOWN_VALUE,
    }
}

pub fn visibility_to_bev<T: Scalar>(vis: &VisibilityVolume<T>) -> BevMap {
    let [nx, ny, nz] = vis.config().dims();
    // grid linear order already is (i, j, k) with k fastest
    let values = vis.as_bytes().iter().map(|&s| encode_state(s)).collect();
    BevMap {
        width: nx,
        height: ny,
        channels: nz,
        values,
    }
}

/// Inverse of [`visibility_to_bev`]. Fails on any value other than the
/// three state encodings or on a shape mismatch.
pub fn bev_to_visibility<T: Scalar>(map: &BevMap, config: &GridConfig<T>) -> Result<VisibilityVolume<T>> {
    if map.shape() != config.dims() {
        return Err(Error::argument(format!(
            "map shape {:?} does not match grid dims {:?}",
            map.shape(),
            config.dims()
        )));
    }
    let states = map
        .values
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            if v == FREE_VALUE {
                Ok(VoxelState::Free as u8)
            } else if v == UNKNOWN_VALUE {
                Ok(VoxelState::Unknown as u8)
            } else if v == OCCUPIED_VALUE {
                Ok(VoxelState::Occupied as u8)
            } else {
                Err(Error::argument(format!("value {v} at {idx} is not a visibility encoding")))
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    VisibilityVolume::from_bytes(*config, states)
}

pub fn occupancy_to_bev<T: Scalar>(grid: &OccupancyGrid<T>) -> BevMap {
    let [nx, ny, nz] = grid.config().dims();
    let values = grid
        .posterior()
        .into_iter()
        .map(|p| p.as_f64() as f32)
        .collect();
    BevMap {
        width: nx,
        height: ny,
        channels: nz,
        values,
    }
}

/// `"BEVF"`, `u32` width/height/channels, then little-endian `f32` values.
pub fn write_bev(path: impl AsRef<Path>, map: &BevMap) -> Result<()> {
    let mut out = Vec::with_capacity(16 + 4 * map.values.len());
    out.extend_from_slice(BEV_MAGIC);
    for d in map.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in &map.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_file(path.as_ref(), &out)
}

pub fn read_bev(path: impl AsRef<Path>) -> Result<BevMap> {
    let path = path.as_ref();
    let data = read_file(path)?;
    let mut r = ByteReader::new(path, &data);
    r.magic(BEV_MAGIC)?;
    let shape = [r.u32("width")?, r.u32("height")?, r.u32("channels")?].map(|d| d as usize);
    let n = shape.iter().product::<usize>();
    let at = r.offset();
    if r.remaining() < n * 4 {
        return Err(r.error(at, format!("truncated payload: need {} bytes, {} left", n * 4, r.remaining())));
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(r.f32("value")?);
    }
    r.finish()?;
    BevMap::new(shape[0], shape[1], shape[2], values).map_err(|e| r.error(at, e.to_string()))
}

/// 8-bit grey level with round-half-up.
pub fn grey_level(value: f32) -> u8 {
    (255.0 * value as f64 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// One channel as a binary PGM: `height` rows (y) of `width` columns (x).
pub fn render_slice(map: &BevMap, channel: usize) -> Result<Vec<u8>> {
    if channel >= map.channels {
        return Err(Error::argument(format!(
            "channel {channel} out of range, map has {} channels",
            map.channels
        )));
    }
    let mut out = format!("P5\n{} {}\n255\n", map.width, map.height).into_bytes();
    out.reserve(map.width * map.height);
    for j in 0..map.height {
        for i in 0..map.width {
            out.push(grey_level(map.get(i, j, channel)));
        }
    }
    Ok(out)
}

pub fn bev_slice_render(map: &BevMap, channel: usize, out: impl AsRef<Path>) -> Result<()> {
    write_file(out.as_ref(), &render_slice(map, channel)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VoxelIndex;
    use crate::occupancy::OccupancyParams;
    use crate::raycast::compute_visibility;
    use crate::io::Sweep;

    #[test]
    fn unknown_volume_is_half() {
        let vis = VisibilityVolume::new(GridConfig::<f64>::default());
        let map = visibility_to_bev(&vis);
        assert_eq!(map.shape(), [400, 400, 32]);
        assert!(map.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn point_mass() {
        let g = GridConfig::<f64>::default();
        let mut vis = VisibilityVolume::new(g);
        vis.set(VoxelIndex::new(200, 200, 16), VoxelState::Occupied);
        let map = visibility_to_bev(&vis);
        assert_eq!(map.get(200, 200, 16), 1.0);
        assert_eq!(map.values().iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(map.get(200, 200, 15), 0.5);
    }

    #[test]
    fn round_trip_decodes() {
        let g = GridConfig::<f64>::new([-4.0, -4.0, -1.0], [4.0, 4.0, 1.0], 0.25).unwrap();
        let s = Sweep::from_positions([0.0; 3], 0.0, [[3.0, 1.0, 0.2], [-2.0, 3.5, -0.5], [10.0, 0.0, 0.0]]);
        let vis = compute_visibility(&s, &g, 1);
        let map = visibility_to_bev(&vis);
        assert_eq!(bev_to_visibility(&map, &g).unwrap().as_bytes(), vis.as_bytes());
        let other = GridConfig::<f64>::new([0.0; 3], [1.0; 3], 0.25).unwrap();
        assert!(bev_to_visibility(&map, &other).is_err());
    }

    #[test]
    fn occupancy_values() {
        let g = GridConfig::<f64>::new([0.0; 3], [1.0; 3], 0.25).unwrap();
        let p = OccupancyParams::default();
        let mut grid = OccupancyGrid::new(g, p).unwrap();
        assert!(occupancy_to_bev(&grid).values().iter().all(|&v| v == 0.5));
        let mut vis = VisibilityVolume::new(g);
        let a = VoxelIndex::new(1, 2, 3);
        let b = VoxelIndex::new(0, 0, 0);
        vis.set(a, VoxelState::Occupied);
        vis.set(b, VoxelState::Free);
        grid.update_with_sweep(&vis).unwrap();
        let map = occupancy_to_bev(&grid);
        assert!((map.get(1, 2, 3) - 0.7).abs() < 1e-6);
        for _ in 0..10 {
            grid.update_with_sweep(&vis).unwrap();
        }
        let map = occupancy_to_bev(&grid);
        assert!((map.get(1, 2, 3) - 0.97).abs() < 1e-6);
        assert!((map.get(0, 0, 0) - 0.12).abs() < 1e-6);
    }

    #[test]
    fn pgm_levels() {
        assert_eq!(grey_level(0.5), 128);
        assert_eq!(grey_level(1.0), 255);
        assert_eq!(grey_level(0.0), 0);
        let map = BevMap::new(3, 2, 2, vec![0.5, 0.0, 1.0, 0.5, 0.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let pgm = render_slice(&map, 0).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        // row j = 0: (0,0), (1,0), (2,0); row j = 1: (0,1), (1,1), (2,1)
        assert_eq!(&pgm[header.len()..], &[128, 0, 128, 255, 128, 128]);
        assert!(matches!(render_slice(&map, 2), Err(Error::Argument(_))));
    }

    #[test]
    fn bevf_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bevf");
        let map = BevMap::new(2, 1, 2, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        write_bev(&path, &map).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"BEVF");
        assert_eq!(&bytes[4..16], &[2, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &0.0f32.to_le_bytes());
        assert_eq!(read_bev(&path).unwrap(), map);
        std::fs::write(&path, &bytes[..18]).unwrap();
        assert!(matches!(read_bev(&path), Err(Error::Parse { offset: 16, .. })));
    }
}
