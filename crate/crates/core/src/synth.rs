//! Synthetic spinning-LiDAR sweeps for benchmarks and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::{Sweep, SweepPoint};
use crate::scalar::{Scalar, Vec3};

/// Ring layout of a multi-beam spinning sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPattern {
    pub beams: usize,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    pub range_min: f64,
    pub range_max: f64,
}

impl Default for BeamPattern {
    /// 32 rings between -30° and +10°, returns between 2 m and 70 m.
    fn default() -> Self {
        BeamPattern {
            beams: 32,
            elevation_min_deg: -30.0,
            elevation_max_deg: 10.0,
            range_min: 2.0,
            range_max: 70.0,
        }
    }
}

impl BeamPattern {
    /// `points` returns spread over the rings, each ring sampled at a uniform
    /// azimuth step with uniformly random ranges. Deterministic in `seed`.
    pub fn sweep<T: Scalar>(&self, points: usize, origin: Vec3<T>, seed: u64) -> Sweep<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beams = self.beams.max(1);
        let mut out = Vec::with_capacity(points);
        for beam in 0..beams {
            // spread the remainder over the first rings
            let count = points / beams + usize::from(beam < points % beams);
            if count == 0 {
                continue;
            }
            let frac = if beams == 1 { 0.5 } else { beam as f64 / (beams - 1) as f64 };
            let elevation = (self.elevation_min_deg + frac * (self.elevation_max_deg - self.elevation_min_deg)).to_radians();
            let step = std::f64::consts::TAU / count as f64;
            for a in 0..count {
                let azimuth = a as f64 * step;
                let range = rng.random_range(self.range_min..=self.range_max);
                let horizontal = range * elevation.cos();
                let p = [
                    horizontal * azimuth.cos(),
                    horizontal * azimuth.sin(),
                    range * elevation.sin(),
                ];
                out.push(SweepPoint::new(
                    origin[0] + T::lit(p[0]),
                    origin[1] + T::lit(p[1]),
                    origin[2] + T::lit(p[2]),
                    T::zero(),
                ));
            }
        }
        Sweep::new(origin, 0.0, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{norm_sq, sub};

    #[test]
    fn shape_and_determinism() {
        let pattern = BeamPattern::default();
        let a = pattern.sweep::<f64>(30_000, [0.0; 3], 7);
        assert_eq!(a.len(), 30_000);
        assert_eq!(a, pattern.sweep::<f64>(30_000, [0.0; 3], 7));
        assert_ne!(a, pattern.sweep::<f64>(30_000, [0.0; 3], 8));
        for p in &a.points {
            let r = norm_sq(sub(p.position(), a.sensor_origin)).sqrt();
            assert!((2.0 - 1e-9..=70.0 + 1e-9).contains(&r));
            let elev = (p.z / r).asin().to_degrees();
            assert!((-30.0 - 1e-6..=10.0 + 1e-6).contains(&elev));
        }
        assert_eq!(pattern.sweep::<f32>(0, [0.0; 3], 1).len(), 0);
        assert_eq!(pattern.sweep::<f32>(33, [0.0; 3], 1).len(), 33);
    }
}
