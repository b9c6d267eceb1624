//! Road geometry: vehicle positions, RSU distances, coverage windows, and
//! beam alignment angles.
//!
//! Coordinates: `x` runs along the road from its left (entry) end, `y` runs
//! across it from the road edge next to lane 1. The RSU sits at
//! `(rsu_longitudinal, -rsu_lateral)`.

use crate::config::ValidatedConfig;
use crate::vehicles::{Slot, VehicleState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("vehicle {vehicle} queried at slot {slot}, before its entry slot {entry}")]
    BeforeEntry { vehicle: u32, slot: Slot, entry: Slot },
    #[error("alignment angle undefined: probe coincides with transmitter")]
    CoincidentProbe,
    #[error("alignment angle undefined: boresight target coincides with transmitter")]
    DegenerateBoresight,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn distance(self, other: Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Where inside a slot a position is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotPoint {
    Start,
    Midpoint,
}

impl SlotPoint {
    fn offset(self) -> f64 {
        match self {
            SlotPoint::Start => 0.0,
            SlotPoint::Midpoint => 0.5,
        }
    }
}

/// Static road layout derived from a validated configuration.
#[derive(Clone, Debug)]
pub struct RoadGeometry {
    rsu: Point2D,
    lane_width: f64,
    rsu_range: f64,
    /// Meters travelled per slot.
    advance: f64,
}

impl RoadGeometry {
    pub fn new(config: &ValidatedConfig) -> Self {
        RoadGeometry {
            rsu: Point2D::new(config.road.rsu_longitudinal_m, -config.road.rsu_lateral_m),
            lane_width: config.road.lane_width_m,
            rsu_range: config.radio.rsu_range_m,
            advance: config.road.slot_advance_m(),
        }
    }

    pub fn rsu(&self) -> Point2D {
        self.rsu
    }

    pub fn lane_center_y(&self, lane: u32) -> f64 {
        (f64::from(lane) - 0.5) * self.lane_width
    }

    /// Perpendicular distance `d_lr` between the RSU and a lane center.
    pub fn lane_offset(&self, lane: u32) -> f64 {
        self.lane_center_y(lane) - self.rsu.y
    }

    pub fn position(&self, v: &VehicleState, t: Slot, at: SlotPoint) -> Result<Point2D, GeometryError> {
        if t < v.entry_slot {
            return Err(GeometryError::BeforeEntry {
                vehicle: v.id.0,
                slot: t,
                entry: v.entry_slot,
            });
        }
        let elapsed = (t - v.entry_slot) as f64 + at.offset();
        Ok(Point2D::new(elapsed * self.advance, self.lane_center_y(v.lane)))
    }

    /// Position extrapolated to slot 0. All vehicles share one speed, so the
    /// relative layout of these points is the same at every slot.
    pub fn reference_position(&self, v: &VehicleState) -> Point2D {
        Point2D::new(-(v.entry_slot as f64) * self.advance, self.lane_center_y(v.lane))
    }

    /// Vehicle-to-vehicle distance; identical at every slot.
    pub fn vehicle_distance(&self, a: &VehicleState, b: &VehicleState) -> f64 {
        self.reference_position(a).distance(self.reference_position(b))
    }

    pub fn distance_to_rsu(&self, v: &VehicleState, t: Slot, at: SlotPoint) -> Result<f64, GeometryError> {
        Ok(self.position(v, t, at)?.distance(self.rsu))
    }

    /// True when the slot-midpoint distance to the RSU is within `R_r`.
    pub fn covers(&self, v: &VehicleState, t: Slot) -> bool {
        self.distance_to_rsu(v, t, SlotPoint::Midpoint)
            .is_ok_and(|d| d <= self.rsu_range)
    }

    /// Closed-form time to cross the coverage disk on a lane, seconds.
    pub fn coverage_time(&self, lane: u32, speed: f64) -> f64 {
        let d = self.lane_offset(lane);
        if d >= self.rsu_range {
            return 0.0;
        }
        2.0 * (self.rsu_range * self.rsu_range - d * d).sqrt() / speed
    }

    /// The contiguous, inclusive slot range during which [`covers`](Self::covers) holds.
    pub fn coverage_window(&self, v: &VehicleState) -> Option<(Slot, Slot)> {
        let d = self.lane_offset(v.lane);
        if d >= self.rsu_range {
            return None;
        }
        let half = (self.rsu_range * self.rsu_range - d * d).sqrt();
        // slot-relative midpoint offsets bounding the chord
        let lo = ((self.rsu.x - half) / self.advance - 0.5).ceil().max(0.0);
        let hi = ((self.rsu.x + half) / self.advance - 0.5).floor();
        if hi < lo {
            return None;
        }
        let mut t_in = v.entry_slot + lo as Slot;
        let mut t_out = v.entry_slot + hi as Slot;
        // snap the closed form onto the exact predicate
        while t_in > v.entry_slot && self.covers(v, t_in - 1) {
            t_in -= 1;
        }
        while t_in <= t_out && !self.covers(v, t_in) {
            t_in += 1;
        }
        while self.covers(v, t_out + 1) {
            t_out += 1;
        }
        while t_out >= t_in && !self.covers(v, t_out) {
            t_out -= 1;
        }
        (t_in <= t_out).then_some((t_in, t_out))
    }
}

/// Angle at `tx` between the boresight direction `tx → boresight_target` and
/// the direction `tx → probe`, in `[0, π]`.
pub fn alignment_angle(tx: Point2D, boresight_target: Point2D, probe: Point2D) -> Result<f64, GeometryError> {
    let (bx, by) = (boresight_target.x - tx.x, boresight_target.y - tx.y);
    let (px, py) = (probe.x - tx.x, probe.y - tx.y);
    if bx == 0.0 && by == 0.0 {
        return Err(GeometryError::DegenerateBoresight);
    }
    if px == 0.0 && py == 0.0 {
        return Err(GeometryError::CoincidentProbe);
    }
    let cross = bx * py - by * px;
    let dot = bx * px + by * py;
    Ok(cross.atan2(dot).abs())
}
