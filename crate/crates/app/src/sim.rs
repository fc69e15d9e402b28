//! Synthetic rooms for simulation, demos and tests.

use voxfield_core::field::{canonical_placement, Domain, PlacementScheme, SensorReading};
use voxfield_core::netsim::SimSensor;
use voxfield_core::solver::trilinear;
use voxfield_core::Point3;

use crate::csvio::SensorRegistry;

/// Corner temperatures (°C) of the reference room, indexed `x + 2y + 4z` with
/// 0 at the low end of each axis.
pub const REFERENCE_CORNERS: [f64; 8] = [19.0, 20.0, 26.0, 27.0, 20.0, 21.0, 25.0, 26.0];

const DAY_MS: f64 = 86_400_000.0;

/// Trilinear field through `corners` plus a daily sinusoidal swing of
/// amplitude `swing` shared by the whole room. Positions are in room
/// coordinates; points outside `domain` are clamped onto it.
pub fn reference_profile(domain: Domain, corners: [f64; 8], swing: f64) -> impl Fn(Point3, u64) -> f64 + Sync {
    move |p, t_ms| {
        let (lo, ext) = (domain.min_corner(), domain.extent());
        let q = std::array::from_fn(|a| ((p[a] - lo[a]) / ext[a]).clamp(0.0, 1.0));
        let phase = std::f64::consts::TAU * (t_ms as f64 % DAY_MS) / DAY_MS;
        trilinear(&corners, q) + swing * phase.sin()
    }
}

/// Readings of the static reference field at the canonical points of
/// `scheme`, all stamped `timestamp`. Ids follow [`SensorRegistry::canonical`].
pub fn reference_readings(domain: &Domain, scheme: PlacementScheme, timestamp: u64) -> Vec<SensorReading> {
    canonical_placement(scheme)
        .into_iter()
        .enumerate()
        .map(|(i, q)| {
            let id = format!("s{i:02}");
            SensorReading::new(&id, domain.denormalize_point(q), trilinear(&REFERENCE_CORNERS, q), timestamp)
                .expect("canonical reading is valid")
        })
        .collect()
}

pub fn sim_sensors(registry: &SensorRegistry) -> Vec<SimSensor> {
    registry.iter().map(|(id, position)| SimSensor { id: id.clone(), position }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_hits_corners() {
        let d = Domain::new([0.0; 3], [5.0, 3.0, 4.0]).unwrap();
        let f = reference_profile(d, REFERENCE_CORNERS, 0.0);
        assert_eq!(f([5.0, 3.0, 0.0], 0), 27.0);
        assert_eq!(f([9.0, -1.0, 4.0], 0), 21.0);
        let g = reference_profile(d, REFERENCE_CORNERS, 2.0);
        assert!((g([0.0; 3], 21_600_000) - 21.0).abs() < 1e-12);
    }

    #[test]
    fn reference_readings_match_registry() {
        let d = Domain::unit();
        let reg = SensorRegistry::canonical(PlacementScheme::S2CornersPlusCenters14, &d);
        let rs = reference_readings(&d, PlacementScheme::S2CornersPlusCenters14, 5);
        assert_eq!(rs.len(), 14);
        for r in &rs {
            assert_eq!(reg.position(&r.sensor_id), Some(r.position));
        }
    }
}
