//! Hand-built scenarios small enough to trace by hand.

use crate::channel::SyntheticChannel;
use crate::config::{ScenarioConfig, ValidatedConfig};
use crate::vehicles::VehicleState;

/// Six vehicles on two lanes 30 m apart, 10 m per slot, V2V range 20 m. In
/// range: V1–V2 (10 m), V2–V4 (20 m), V3–V5 (20 m), V5–V6 (10 m). RSU
/// downloads take 3, 3, 2, 3, 2, 3 slots and every V2V link takes 4.
///
/// The joint scheduler grants V1 then V3 (5 slots) and finishes with one
/// four-link pairing V1→V2→V4, V3→V5→V6 (4 slots); serving everyone from
/// the RSU takes 16.
pub fn two_lane_example() -> SyntheticChannel {
    let config = two_lane_config();
    let vehicles = vec![
        VehicleState::new(1, 1, 0),
        VehicleState::new(2, 1, 1),
        VehicleState::new(3, 2, 2),
        VehicleState::new(4, 1, 3),
        VehicleState::new(5, 2, 4),
        VehicleState::new(6, 2, 5),
    ];
    SyntheticChannel::from_geometry(config, vehicles, vec![3, 3, 2, 3, 2, 3], 4)
}

pub fn two_lane_config() -> ValidatedConfig {
    let mut c = ScenarioConfig::highway_default();
    c.road.lane_count = 2;
    c.road.lane_width_m = 30.0;
    c.road.speed_mps = 10.0;
    c.road.slot_s = 1.0;
    c.road.content_bits = 6.0;
    c.road.vehicle_count = 6;
    c.road.horizon_slots = 1000;
    c.validate().expect("example configuration is valid")
}
