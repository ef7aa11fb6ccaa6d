//! Engine configuration: grid geometry, occupancy sensor model and the
//! culling drop fraction, loaded from `key=value` text.
//!
//! Recognised keys: `x_min x_max y_min y_max z_min z_max voxel_size p_hit
//! p_miss clamp_min clamp_max cull_drop_fraction`. Missing keys take the
//! defaults of [`EngineConfig::default`]; unknown or repeated keys are
//! errors. Blank lines and `#` comments are ignored.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::occupancy::OccupancyParams;
use crate::scalar::Scalar;

pub const DEFAULT_DROP_FRACTION: f64 = 0.5;

const KEYS: [&str; 12] = [
    "x_min",
    "x_max",
    "y_min",
    "y_max",
    "z_min",
    "z_max",
    "voxel_size",
    "p_hit",
    "p_miss",
    "clamp_min",
    "clamp_max",
    "cull_drop_fraction",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig<T: Scalar> {
    pub grid: GridConfig<T>,
    pub occupancy: OccupancyParams<T>,
    pub cull_drop_fraction: T,
}

impl<T: Scalar> Default for EngineConfig<T> {
    fn default() -> Self {
        EngineConfig {
            grid: GridConfig::default(),
            occupancy: OccupancyParams::default(),
            cull_drop_fraction: T::lit(DEFAULT_DROP_FRACTION),
        }
    }
}

impl<T: Scalar> EngineConfig<T> {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: HashMap<&str, T> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key=value", lineno + 1)))?;
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
                return Err(Error::config(format!("line {}: unknown key {key:?}", lineno + 1)));
            };
            let parsed: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("line {}: invalid number for {key}", lineno + 1)))?;
            if !parsed.is_finite() {
                return Err(Error::config(format!("line {}: {key} must be finite", lineno + 1)));
            }
            if values.insert(known, T::lit(parsed)).is_some() {
                return Err(Error::config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
        }

        let defaults = Self::default();
        let get = |key: &str, fallback: T| values.get(key).copied().unwrap_or(fallback);
        let (dmin, dmax) = (defaults.grid.min(), defaults.grid.max());
        let grid = GridConfig::new(
            [get("x_min", dmin[0]), get("y_min", dmin[1]), get("z_min", dmin[2])],
            [get("x_max", dmax[0]), get("y_max", dmax[1]), get("z_max", dmax[2])],
            get("voxel_size", defaults.grid.voxel_size()),
        )?;
        let d = defaults.occupancy;
        let occupancy = OccupancyParams::new(
            get("p_hit", d.p_hit),
            get("p_miss", d.p_miss),
            get("clamp_min", d.clamp_min),
            get("clamp_max", d.clamp_max),
        )?;
        let cull_drop_fraction = get("cull_drop_fraction", defaults.cull_drop_fraction);
        if !(cull_drop_fraction >= T::zero() && cull_drop_fraction <= T::one()) {
            return Err(Error::config(format!(
                "cull_drop_fraction must be in [0, 1], got {cull_drop_fraction}"
            )));
        }
        Ok(EngineConfig {
            grid,
            occupancy,
            cull_drop_fraction,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Renders every key, suitable for [`EngineConfig::parse`].
    pub fn to_text(&self) -> String {
        let (min, max) = (self.grid.min(), self.grid.max());
        let o = &self.occupancy;
        let vals = [
            min[0],
            max[0],
            min[1],
            max[1],
            min[2],
            max[2],
            self.grid.voxel_size(),
            o.p_hit,
            o.p_miss,
            o.clamp_min,
            o.clamp_max,
            self.cull_drop_fraction,
        ];
        KEYS.iter()
            .zip(vals)
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = EngineConfig::<f64>::parse("").unwrap();
        assert_eq!(c, EngineConfig::default());
        assert_eq!(c.grid.dims(), [400, 400, 32]);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let c = EngineConfig::<f64>::parse(
            "# small grid\nx_min=0\nx_max = 1\ny_min=0\ny_max=1\nz_min=0\nz_max=1 # top\nvoxel_size=0.25\np_hit=0.8\n",
        )
        .unwrap();
        assert_eq!(c.grid.dims(), [4, 4, 4]);
        assert_eq!(c.occupancy.p_hit, 0.8);
        assert_eq!(c.occupancy.p_miss, 0.4);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "foo=1",
            "voxel_size",
            "voxel_size=abc",
            "voxel_size=0.3",
            "p_hit=0.2",
            "cull_drop_fraction=1.5",
            "p_hit=0.7\np_hit=0.8",
            "voxel_size=inf",
        ] {
            assert!(matches!(EngineConfig::<f64>::parse(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn text_round_trip() {
        let c = EngineConfig::<f64>::default();
        assert_eq!(EngineConfig::<f64>::parse(&c.to_text()).unwrap(), c);
    }
}
