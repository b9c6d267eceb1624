//! Schedule traces shared by every scheme, the auditor, and the metrics.

use std::fmt;
use std::str::FromStr;

use crate::vehicles::{Slot, VehicleId};

/// Relative slack when comparing accumulated bits against the content size,
/// so that `m` slots at exactly `D / m` per slot count as complete.
pub const DELIVERY_TOLERANCE: f64 = 1e-9;

pub fn is_delivered(bits: f64, content: f64) -> bool {
    bits >= content * (1.0 - DELIVERY_TOLERANCE)
}

/// Slots needed to move `bits` at a constant `rate` (bits/s); `None` when the
/// rate is zero.
pub fn slots_at_rate(bits: f64, rate: f64, slot_s: f64) -> Option<u64> {
    if bits <= 0.0 {
        return Some(0);
    }
    if rate.is_nan() || rate <= 0.0 {
        return None;
    }
    Some((bits / (rate * slot_s)).ceil().max(1.0) as u64)
}

/// A directed transmission between two vehicles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub tx: VehicleId,
    pub rx: VehicleId,
}

impl Link {
    pub fn new(tx: VehicleId, rx: VehicleId) -> Self {
        Link { tx, rx }
    }

    pub fn touches(&self, v: VehicleId) -> bool {
        self.tx == v || self.rx == v
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tx, self.rx)
    }
}

/// One RSU download: `slots` consecutive slots starting at `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct V2IGrant {
    pub vehicle: VehicleId,
    pub start: Slot,
    pub slots: u64,
}

impl V2IGrant {
    pub fn end(&self) -> Slot {
        self.start + self.slots
    }
}

/// Tentative two-hop forwarding plan attached to a granted vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainEstimate {
    pub first_hop: Option<VehicleId>,
    pub second_hop: Option<VehicleId>,
    /// Slots the slower hop of the chain needs.
    pub slots: u64,
}

/// Outcome of the V2I phase.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct V2ISelection {
    pub grants: Vec<V2IGrant>,
    /// Chain plan recorded with each grant, where the scheme computes one.
    pub chains: Vec<Option<ChainEstimate>>,
    /// Busy RSU slots.
    pub t_v2i: u64,
    /// Vehicles holding the content and not yet used as a V2V source.
    pub holders: Vec<VehicleId>,
    /// Vehicles still lacking the content.
    pub pending: Vec<VehicleId>,
    /// Set when the selection stopped before its termination rule held.
    pub incomplete: bool,
}

/// A link as executed inside a pairing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkTrace {
    pub link: Link,
    /// Slots the link was active, counted from the pairing start.
    pub slots: u64,
    pub delivered_bits: f64,
}

/// One round of concurrent V2V transmissions.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingTrace {
    /// Offset on the V2V clock.
    pub start: u64,
    pub duration: u64,
    pub links: Vec<LinkTrace>,
}

impl PairingTrace {
    /// `N × N` 0/1 matrix with rows indexing sources and columns receivers.
    pub fn adjacency(&self, vehicle_count: usize) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; vehicle_count]; vehicle_count];
        for l in &self.links {
            a[l.link.tx.index()][l.link.rx.index()] = 1;
        }
        a
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct V2VSchedule {
    pub pairings: Vec<PairingTrace>,
    pub t_v2v: u64,
    /// Vehicles left without the content.
    pub unserved: Vec<VehicleId>,
    /// Relays forward no more than they have received.
    pub strict_causality: bool,
    /// Why scheduling stopped early, if it did.
    pub stop_reason: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Proposed,
    Fcfs,
    Random,
    Noncoop,
    SerialTdma,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Proposed,
        Scheme::Fcfs,
        Scheme::Random,
        Scheme::Noncoop,
        Scheme::SerialTdma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Fcfs => "fcfs",
            Scheme::Random => "random",
            Scheme::Noncoop => "noncoop",
            Scheme::SerialTdma => "serial-tdma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected proposed|fcfs|random|noncoop|serial-tdma)"))
    }
}

/// Full trace of one scheme run.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub v2i: V2ISelection,
    pub v2v: V2VSchedule,
    pub unserved: Vec<VehicleId>,
}

impl SchemeResult {
    pub fn total_slots(&self) -> u64 {
        self.v2i.t_v2i + self.v2v.t_v2v
    }

    pub fn served_count(&self, vehicle_count: usize) -> usize {
        vehicle_count - self.unserved.len()
    }
}
