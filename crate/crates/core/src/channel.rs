//! What the schedulers and the auditor know about the world: coverage, V2I
//! rates per slot, V2V range, and concurrent-link SINR and rates.

use std::collections::BTreeMap;

use crate::config::ValidatedConfig;
use crate::geometry::{Point2D, RoadGeometry, SlotPoint};
use crate::radio::{self, ConcurrentSet, DirectionalLink, RateMode};
use crate::schedule::Link;
use crate::vehicles::{Slot, VehicleId, VehicleState};

pub trait Channel: Sync {
    fn config(&self) -> &ValidatedConfig;

    fn vehicles(&self) -> &[VehicleState];

    /// Inclusive slot range during which the RSU reaches `v`.
    fn coverage_window(&self, v: VehicleId) -> Option<(Slot, Slot)>;

    fn covers(&self, v: VehicleId, t: Slot) -> bool {
        self.coverage_window(v).is_some_and(|(a, b)| a <= t && t <= b)
    }

    /// Distance to the RSU at the slot midpoint.
    fn rsu_distance(&self, v: VehicleId, t: Slot) -> f64;

    fn v2i_snr(&self, v: VehicleId, t: Slot) -> f64;

    /// Average downlink rate during slot `t`, bits/s.
    fn v2i_rate(&self, v: VehicleId, t: Slot) -> f64;

    fn in_range(&self, a: VehicleId, b: VehicleId) -> bool;

    /// SINR of every link when all of `links` transmit together.
    fn link_sinrs(&self, links: &[Link]) -> Vec<f64>;

    /// Rate of every link when all of `links` transmit together, bits/s.
    fn link_rates(&self, links: &[Link]) -> Vec<f64>;

    fn content_bits(&self) -> f64 {
        self.config().road.content_bits
    }

    fn slot_s(&self) -> f64 {
        self.config().road.slot_s
    }

    fn sinr_threshold(&self) -> f64 {
        self.config().radio.sinr_threshold
    }

    fn horizon(&self) -> u64 {
        self.config().road.horizon_slots
    }

    fn vehicle_ids(&self) -> Vec<VehicleId> {
        self.vehicles().iter().map(|v| v.id).collect()
    }
}

/// Channel computed from road geometry and the radio model.
#[derive(Clone, Debug)]
pub struct PhysicalChannel {
    config: ValidatedConfig,
    geometry: RoadGeometry,
    vehicles: Vec<VehicleState>,
    windows: Vec<Option<(Slot, Slot)>>,
    /// Relative positions; fixed because all vehicles share one speed.
    anchors: Vec<Point2D>,
    mode: RateMode,
}

impl PhysicalChannel {
    pub fn new(config: ValidatedConfig, vehicles: Vec<VehicleState>, mode: RateMode) -> Self {
        let geometry = RoadGeometry::new(&config);
        let windows = vehicles.iter().map(|v| geometry.coverage_window(v)).collect();
        let anchors = vehicles.iter().map(|v| geometry.reference_position(v)).collect();
        PhysicalChannel {
            config,
            geometry,
            vehicles,
            windows,
            anchors,
            mode,
        }
    }

    pub fn geometry(&self) -> &RoadGeometry {
        &self.geometry
    }

    pub fn rate_mode(&self) -> RateMode {
        self.mode
    }

    fn state(&self, v: VehicleId) -> &VehicleState {
        &self.vehicles[v.index()]
    }

    fn directional(&self, l: &Link) -> DirectionalLink {
        DirectionalLink {
            tx: l.tx,
            rx: l.rx,
            tx_pos: self.anchors[l.tx.index()],
            rx_pos: self.anchors[l.rx.index()],
        }
    }
}

impl Channel for PhysicalChannel {
    fn config(&self) -> &ValidatedConfig {
        &self.config
    }

    fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    fn coverage_window(&self, v: VehicleId) -> Option<(Slot, Slot)> {
        self.windows[v.index()]
    }

    fn rsu_distance(&self, v: VehicleId, t: Slot) -> f64 {
        self.geometry
            .distance_to_rsu(self.state(v), t, SlotPoint::Midpoint)
            .unwrap_or(f64::INFINITY)
    }

    fn v2i_snr(&self, v: VehicleId, t: Slot) -> f64 {
        if !self.covers(v, t) {
            return 0.0;
        }
        radio::v2i_snr(self.rsu_distance(v, t), &self.config.radio)
    }

    fn v2i_rate(&self, v: VehicleId, t: Slot) -> f64 {
        radio::v2i_slot_rate(&self.config, &self.geometry, self.state(v), t, self.mode)
    }

    fn in_range(&self, a: VehicleId, b: VehicleId) -> bool {
        a != b && self.anchors[a.index()].distance(self.anchors[b.index()]) <= self.config.radio.v2v_range_m
    }

    fn link_sinrs(&self, links: &[Link]) -> Vec<f64> {
        let set = ConcurrentSet::new(links.iter().map(|l| self.directional(l)).collect());
        (0..links.len())
            .map(|i| radio::v2v_sinr(i, &set, &self.config.radio))
            .collect()
    }

    fn link_rates(&self, links: &[Link]) -> Vec<f64> {
        let w = self.config.radio.bandwidth_hz;
        self.link_sinrs(links)
            .into_iter()
            .map(|s| radio::shannon_rate(w, s))
            .collect()
    }
}

/// Channel with prescribed slot counts: each covered vehicle downloads at
/// `D / (m·Δ)` and each listed V2V link runs at `D / (m·Δ)` regardless of
/// what else transmits. Interference is absent, so SINR is unbounded.
#[derive(Clone, Debug)]
pub struct SyntheticChannel {
    config: ValidatedConfig,
    geometry: RoadGeometry,
    vehicles: Vec<VehicleState>,
    windows: Vec<Option<(Slot, Slot)>>,
    v2i_slots: Vec<u64>,
    v2v_slots: BTreeMap<Link, u64>,
}

impl SyntheticChannel {
    /// `v2v_slots` lists directed links; a missing link is out of range.
    pub fn new(
        config: ValidatedConfig,
        vehicles: Vec<VehicleState>,
        windows: Vec<Option<(Slot, Slot)>>,
        v2i_slots: Vec<u64>,
        v2v_slots: BTreeMap<Link, u64>,
    ) -> Self {
        assert_eq!(vehicles.len(), windows.len());
        assert_eq!(vehicles.len(), v2i_slots.len());
        let geometry = RoadGeometry::new(&config);
        SyntheticChannel {
            config,
            geometry,
            vehicles,
            windows,
            v2i_slots,
            v2v_slots,
        }
    }

    /// Coverage and V2V range taken from the road geometry; every in-range
    /// link needs `link_slots` slots.
    pub fn from_geometry(
        config: ValidatedConfig,
        vehicles: Vec<VehicleState>,
        v2i_slots: Vec<u64>,
        link_slots: u64,
    ) -> Self {
        let geometry = RoadGeometry::new(&config);
        let windows = vehicles.iter().map(|v| geometry.coverage_window(v)).collect();
        let range = config.radio.v2v_range_m;
        let mut table = BTreeMap::new();
        for a in &vehicles {
            for b in &vehicles {
                if a.id != b.id && geometry.vehicle_distance(a, b) <= range {
                    table.insert(Link::new(a.id, b.id), link_slots);
                }
            }
        }
        Self::new(config, vehicles, windows, v2i_slots, table)
    }

    fn per_slot_rate(&self, slots: u64) -> f64 {
        self.config.road.content_bits / (slots as f64 * self.config.road.slot_s)
    }
}

impl Channel for SyntheticChannel {
    fn config(&self) -> &ValidatedConfig {
        &self.config
    }

    fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    fn coverage_window(&self, v: VehicleId) -> Option<(Slot, Slot)> {
        self.windows[v.index()]
    }

    fn rsu_distance(&self, v: VehicleId, t: Slot) -> f64 {
        self.geometry
            .distance_to_rsu(&self.vehicles[v.index()], t, SlotPoint::Midpoint)
            .unwrap_or(f64::INFINITY)
    }

    fn v2i_snr(&self, v: VehicleId, t: Slot) -> f64 {
        if self.covers(v, t) {
            f64::INFINITY
        } else {
            0.0
        }
    }

    fn v2i_rate(&self, v: VehicleId, t: Slot) -> f64 {
        if self.covers(v, t) {
            self.per_slot_rate(self.v2i_slots[v.index()])
        } else {
            0.0
        }
    }

    fn in_range(&self, a: VehicleId, b: VehicleId) -> bool {
        self.v2v_slots.contains_key(&Link::new(a, b))
    }

    fn link_sinrs(&self, links: &[Link]) -> Vec<f64> {
        links
            .iter()
            .map(|l| if self.v2v_slots.contains_key(l) { f64::INFINITY } else { 0.0 })
            .collect()
    }

    fn link_rates(&self, links: &[Link]) -> Vec<f64> {
        links
            .iter()
            .map(|l| self.v2v_slots.get(l).map_or(0.0, |&m| self.per_slot_rate(m)))
            .collect()
    }
}
