//! Vehicle population and Poisson injection at the left end of the road.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::config::ValidatedConfig;

/// Slot index on the global simulation clock.
pub type Slot = u64;

/// 1-based vehicle identifier; ids follow road-entry order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId(pub u32);

impl VehicleId {
    /// Zero-based position in id-ordered vectors.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(idx: usize) -> Self {
        VehicleId(idx as u32 + 1)
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VehicleState {
    pub id: VehicleId,
    /// 1-based lane index, lane 1 nearest the RSU side of the road.
    pub lane: u32,
    /// Slot at which the vehicle is injected at the left end of the road.
    pub entry_slot: Slot,
}

impl VehicleState {
    pub fn new(id: u32, lane: u32, entry_slot: Slot) -> Self {
        VehicleState {
            id: VehicleId(id),
            lane,
            entry_slot,
        }
    }
}

/// Stream tag separating arrival draws from other seeded randomness.
const SPAWN_STREAM: u64 = 0x5350_4157_4e00;

/// Draws `N` vehicles with i.i.d. exponential inter-arrival times (rate `λ`),
/// uniform lanes, and arrival times rounded half-up onto the slot grid.
///
/// The first vehicle arrives at slot 0. Ids are assigned in entry order, ties
/// broken by ascending lane.
pub fn spawn_vehicles(config: &ValidatedConfig, seed: u64) -> Vec<VehicleState> {
    let road = &config.road;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPAWN_STREAM);
    let inter_arrival = Exp::new(road.arrival_rate_per_s).expect("validated arrival rate");

    let mut t = 0.0f64;
    let mut raw: Vec<(Slot, u32)> = Vec::with_capacity(road.vehicle_count as usize);
    for i in 0..road.vehicle_count {
        if i > 0 {
            t += inter_arrival.sample(&mut rng);
        }
        let lane = rng.random_range(1..=road.lane_count);
        let slot = (t / road.slot_s + 0.5).floor() as Slot;
        raw.push((slot, lane));
    }
    raw.sort();
    raw.into_iter()
        .enumerate()
        .map(|(idx, (entry_slot, lane))| VehicleState::new(idx as u32 + 1, lane, entry_slot))
        .collect()
}
