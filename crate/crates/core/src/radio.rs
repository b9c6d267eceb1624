//! Physical-layer model: sectored antenna pattern, V2I link budget and
//! per-slot rate, V2V received power, cross-link interference, and
//! full-duplex SINR with residual self-interference.

use std::f64::consts::PI;

use crate::config::{RadioParams, ValidatedConfig};
use crate::geometry::{alignment_angle, Point2D, RoadGeometry, SlotPoint};
use crate::vehicles::{Slot, VehicleId, VehicleState};

/// Distances below this are clamped before evaluating the power law, so
/// co-located vehicles do not produce infinite power.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Panels used by the Simpson rule in [`RateMode::Quadrature`].
pub const QUADRATURE_PANELS: usize = 8;

/// Two-level sectored pattern: mainlobe `(2π − (2π − φ)g) / φ` for
/// `|θ| ≤ φ/2`, sidelobe `g` elsewhere.
pub fn antenna_gain(theta: f64, beamwidth: f64, sidelobe: f64) -> f64 {
    if theta.abs() <= beamwidth / 2.0 {
        (2.0 * PI - (2.0 * PI - beamwidth) * sidelobe) / beamwidth
    } else {
        sidelobe
    }
}

pub fn shannon_rate(bandwidth_hz: f64, sinr: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr).log2()
}

fn path_gain(params: &RadioParams, distance: f64) -> f64 {
    params.path_constant() * distance.max(MIN_LINK_DISTANCE_M).powf(-params.pathloss_exponent)
}

/// V2I SNR at distance `d` from the RSU with perfectly aligned beams; zero
/// outside the RSU range.
pub fn v2i_snr(distance: f64, params: &RadioParams) -> f64 {
    if distance > params.rsu_range_m {
        return 0.0;
    }
    let g = params.mainlobe_gain();
    params.tx_power_rsu_w * g * g * path_gain(params, distance) / params.noise_power_w()
}

/// How the average V2I rate over a slot is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RateMode {
    /// Instantaneous rate at the slot midpoint.
    #[default]
    Midpoint,
    /// Composite Simpson integral of the rate over the slot, parameterized
    /// by the angle between the RSU perpendicular and the line of sight.
    Quadrature,
}

impl std::str::FromStr for RateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "midpoint" => Ok(RateMode::Midpoint),
            "quadrature" => Ok(RateMode::Quadrature),
            other => Err(format!("unknown rate mode `{other}` (expected midpoint|quadrature)")),
        }
    }
}

/// Average V2I rate (bits/s) received by `vehicle` during slot `t`. Zero when
/// the slot is outside the vehicle's coverage window.
pub fn v2i_slot_rate(
    config: &ValidatedConfig,
    geometry: &RoadGeometry,
    vehicle: &VehicleState,
    t: Slot,
    mode: RateMode,
) -> f64 {
    if !geometry.covers(vehicle, t) {
        return 0.0;
    }
    let params = &config.radio;
    match mode {
        RateMode::Midpoint => {
            let d = geometry
                .distance_to_rsu(vehicle, t, SlotPoint::Midpoint)
                .expect("covered slots follow entry");
            shannon_rate(params.bandwidth_hz, v2i_snr(d, params))
        }
        RateMode::Quadrature => {
            let start = geometry.position(vehicle, t, SlotPoint::Start).expect("covered");
            let d_lr = geometry.lane_offset(vehicle.lane);
            let advance = config.road.slot_advance_m();
            let rsu_x = geometry.rsu().x;
            let phi0 = ((start.x - rsu_x) / d_lr).atan();
            let phi1 = ((start.x + advance - rsu_x) / d_lr).atan();
            let g = params.mainlobe_gain();
            let snr_scale = params.path_constant() * params.tx_power_rsu_w * g * g / params.noise_power_w();
            let speed = config.road.speed_mps;
            let integrand = |phi: f64| {
                let c = phi.cos();
                let d = (d_lr / c).max(MIN_LINK_DISTANCE_M);
                let snr = snr_scale * d.powf(-params.pathloss_exponent);
                params.bandwidth_hz * (1.0 + snr).log2() * d_lr / (speed * c * c)
            };
            simpson(integrand, phi0, phi1, QUADRATURE_PANELS) / config.road.slot_s
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    debug_assert!(panels.is_multiple_of(2));
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * i as f64);
    }
    sum * h / 3.0
}

/// A directional V2V link with both beams aimed at each other.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionalLink {
    pub tx: VehicleId,
    pub rx: VehicleId,
    pub tx_pos: Point2D,
    pub rx_pos: Point2D,
}

impl DirectionalLink {
    pub fn length(&self) -> f64 {
        self.tx_pos.distance(self.rx_pos)
    }
}

/// Links transmitting in the same slot.
#[derive(Clone, Debug, Default)]
pub struct ConcurrentSet {
    links: Vec<DirectionalLink>,
}

impl ConcurrentSet {
    pub fn new(links: Vec<DirectionalLink>) -> Self {
        debug_assert!(links.iter().all(|l| l.tx != l.rx));
        ConcurrentSet { links }
    }

    pub fn links(&self) -> &[DirectionalLink] {
        &self.links
    }

    /// `b_v`: whether `v` both receives and transmits in this set.
    pub fn is_full_duplex(&self, v: VehicleId) -> bool {
        self.links.iter().any(|l| l.tx == v) && self.links.iter().any(|l| l.rx == v)
    }
}

/// Desired-signal power at the receiver of `link` (aligned mainlobes).
pub fn v2v_received_power(link: &DirectionalLink, params: &RadioParams) -> f64 {
    let d = link.length();
    if d > params.v2v_range_m {
        return 0.0;
    }
    let g = params.mainlobe_gain();
    params.tx_power_vehicle_w * g * g * path_gain(params, d)
}

fn gain_towards(from: Point2D, boresight: Point2D, probe: Point2D, params: &RadioParams) -> f64 {
    // co-located endpoints fall back to the mainlobe
    let theta = alignment_angle(from, boresight, probe).unwrap_or(0.0);
    antenna_gain(theta, params.beamwidth_rad, params.sidelobe_gain)
}

/// Interference caused at `victim`'s receiver by the transmitter of `other`.
pub fn interference_power(victim: &DirectionalLink, other: &DirectionalLink, params: &RadioParams) -> f64 {
    let u = other.tx_pos;
    let j = victim.rx_pos;
    let d = u.distance(j);
    if d > params.v2v_range_m {
        return 0.0;
    }
    let gt = gain_towards(u, other.rx_pos, j, params);
    let gr = gain_towards(j, victim.tx_pos, u, params);
    params.mui_factor * params.tx_power_vehicle_w * gt * gr * path_gain(params, d)
}

/// Total interference at the receiver of `set.links()[victim]`. A link sent
/// by the victim's own receiver is self-interference, not counted here.
pub fn v2v_interference(victim: usize, set: &ConcurrentSet, params: &RadioParams) -> f64 {
    let links = set.links();
    let v = &links[victim];
    links
        .iter()
        .enumerate()
        .filter(|&(idx, l)| idx != victim && l.tx != v.rx)
        .map(|(_, l)| interference_power(v, l, params))
        .sum()
}

pub fn v2v_sinr(victim: usize, set: &ConcurrentSet, params: &RadioParams) -> f64 {
    let link = &set.links()[victim];
    let signal = v2v_received_power(link, params);
    if signal == 0.0 {
        return 0.0;
    }
    let rsi = if set.is_full_duplex(link.rx) {
        params.si_cancel * params.tx_power_vehicle_w
    } else {
        0.0
    };
    signal / (params.noise_power_w() + v2v_interference(victim, set, params) + rsi)
}

pub fn v2v_rate(victim: usize, set: &ConcurrentSet, params: &RadioParams) -> f64 {
    shannon_rate(params.bandwidth_hz, v2v_sinr(victim, set, params))
}
