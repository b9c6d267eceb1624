//! Scenario configuration: radio parameters, road layout, and the flat
//! `key=value` file format.
//!
//! Values are held in SI units (watts, hertz, meters, seconds, bits, linear
//! ratios). The file format uses engineering units (dBm, dB, degrees, Gbit,
//! milliseconds); conversion happens once, in [`ScenarioConfig::set`].

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::Deref;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::units::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm, SPEED_OF_LIGHT};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown config key `{key}`; valid keys: {}", CONFIG_KEYS.join(", "))]
    UnknownKey { key: String },
    #[error("missing config key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
}

/// Every key accepted by the config file, in canonical order.
pub const CONFIG_KEYS: &[&str] = &[
    "carrier_frequency_hz",
    "pt_dbm",
    "pv_dbm",
    "bandwidth_hz",
    "n0_dbm_per_mhz",
    "pathloss_exp",
    "mui_factor",
    "si_cancel_exp",
    "sinr_threshold_db",
    "beamwidth_deg",
    "sidelobe_gain",
    "rsu_range_m",
    "v2v_range_m",
    "lane_count",
    "lane_width_m",
    "road_length_m",
    "rsu_longitudinal_m",
    "rsu_lateral_m",
    "speed_mps",
    "arrival_rate_per_s",
    "vehicle_count",
    "content_gbit",
    "slot_ms",
    "horizon_slots",
    "seed",
];

/// Physical-layer parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RadioParams {
    pub carrier_frequency_hz: f64,
    /// RSU transmit power `Pt`, watts.
    pub tx_power_rsu_w: f64,
    /// Vehicle transmit power `Pv`, watts.
    pub tx_power_vehicle_w: f64,
    pub bandwidth_hz: f64,
    /// One-sided noise power spectral density `N0`, W/Hz.
    pub noise_density_w_per_hz: f64,
    pub pathloss_exponent: f64,
    /// Multi-user interference factor `ρ`.
    pub mui_factor: f64,
    /// Residual self-interference level `β` (linear).
    pub si_cancel: f64,
    /// Linear SINR threshold `th_min`.
    pub sinr_threshold: f64,
    /// Half-power beamwidth `φ`, radians.
    pub beamwidth_rad: f64,
    /// Sidelobe gain `g`, linear.
    pub sidelobe_gain: f64,
    /// RSU coverage radius `R_r`, meters.
    pub rsu_range_m: f64,
    /// V2V communication range `R`, meters.
    pub v2v_range_m: f64,
}

impl RadioParams {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// Free-space path constant `k = (λ / 4π)²`.
    pub fn path_constant(&self) -> f64 {
        let r = self.wavelength_m() / (4.0 * PI);
        r * r
    }

    /// `N0 · W`, watts.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_density_w_per_hz * self.bandwidth_hz
    }

    /// Gain inside the mainlobe of the sectored antenna.
    pub fn mainlobe_gain(&self) -> f64 {
        crate::radio::antenna_gain(0.0, self.beamwidth_rad, self.sidelobe_gain)
    }
}

/// Road layout, traffic, and simulation clock.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadConfig {
    pub lane_count: u32,
    pub lane_width_m: f64,
    pub road_length_m: f64,
    /// RSU position measured from the left (entry) end of the road.
    pub rsu_longitudinal_m: f64,
    /// RSU distance from the road edge next to lane 1.
    pub rsu_lateral_m: f64,
    pub speed_mps: f64,
    /// Aggregate vehicle arrival rate `λ` over all lanes.
    pub arrival_rate_per_s: f64,
    pub vehicle_count: u32,
    /// Content size `D`, bits.
    pub content_bits: f64,
    /// Slot duration `Δ`, seconds.
    pub slot_s: f64,
    /// Horizon `n`, slots.
    pub horizon_slots: u64,
}

impl RoadConfig {
    /// Perpendicular RSU distance `d_lr` for a 1-based lane index.
    pub fn lane_offset_m(&self, lane: u32) -> f64 {
        self.rsu_lateral_m + (f64::from(lane) - 0.5) * self.lane_width_m
    }

    /// Distance a vehicle travels in one slot.
    pub fn slot_advance_m(&self) -> f64 {
        self.speed_mps * self.slot_s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub radio: RadioParams,
    pub road: RoadConfig,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::highway_default()
    }
}

impl ScenarioConfig {
    /// The reference five-lane highway scenario at 28 GHz.
    pub fn highway_default() -> Self {
        ScenarioConfig {
            radio: RadioParams {
                carrier_frequency_hz: 28e9,
                tx_power_rsu_w: dbm_to_watts(30.0),
                tx_power_vehicle_w: dbm_to_watts(20.0),
                bandwidth_hz: 800e6,
                noise_density_w_per_hz: dbm_to_watts(-134.0) / 1e6,
                pathloss_exponent: 2.0,
                mui_factor: 1.0,
                si_cancel: 1e-8,
                sinr_threshold: db_to_linear(20.0),
                beamwidth_rad: 30f64.to_radians(),
                sidelobe_gain: 0.1,
                rsu_range_m: 200.0,
                v2v_range_m: 20.0,
            },
            road: RoadConfig {
                lane_count: 5,
                lane_width_m: 4.0,
                road_length_m: 2000.0,
                rsu_longitudinal_m: 500.0,
                rsu_lateral_m: 0.0,
                speed_mps: 20.0,
                arrival_rate_per_s: 2.0,
                vehicle_count: 100,
                content_bits: 3e9,
                slot_s: 1e-4,
                horizon_slots: 1_000_000,
            },
            seed: 1,
        }
    }

    /// Parses a config file. Every key in [`CONFIG_KEYS`] must appear exactly once.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::highway_default();
        let mut seen = vec![false; CONFIG_KEYS.len()];
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: idx + 1,
                reason: format!("expected key=value, got `{line}`"),
            })?;
            let key = key.trim();
            let pos = key_index(key)?;
            if seen[pos] {
                return Err(ConfigError::Parse {
                    line: idx + 1,
                    reason: format!("duplicate key `{key}`"),
                });
            }
            seen[pos] = true;
            cfg.set(key, value.trim())?;
        }
        if let Some(pos) = seen.iter().position(|s| !s) {
            return Err(ConfigError::MissingKey(CONFIG_KEYS[pos]));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one field from its file-format key and textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        let float = || value.parse::<f64>().map_err(|_| bad());
        let int = || value.parse::<u64>().map_err(|_| bad());
        let r = &mut self.radio;
        let road = &mut self.road;
        match key {
            "carrier_frequency_hz" => r.carrier_frequency_hz = float()?,
            "pt_dbm" => r.tx_power_rsu_w = dbm_to_watts(float()?),
            "pv_dbm" => r.tx_power_vehicle_w = dbm_to_watts(float()?),
            "bandwidth_hz" => r.bandwidth_hz = float()?,
            "n0_dbm_per_mhz" => r.noise_density_w_per_hz = dbm_to_watts(float()?) / 1e6,
            "pathloss_exp" => r.pathloss_exponent = float()?,
            "mui_factor" => r.mui_factor = float()?,
            "si_cancel_exp" => r.si_cancel = 10f64.powf(-float()?),
            "sinr_threshold_db" => r.sinr_threshold = db_to_linear(float()?),
            "beamwidth_deg" => r.beamwidth_rad = float()?.to_radians(),
            "sidelobe_gain" => r.sidelobe_gain = float()?,
            "rsu_range_m" => r.rsu_range_m = float()?,
            "v2v_range_m" => r.v2v_range_m = float()?,
            "lane_count" => road.lane_count = u32::try_from(int()?).map_err(|_| bad())?,
            "lane_width_m" => road.lane_width_m = float()?,
            "road_length_m" => road.road_length_m = float()?,
            "rsu_longitudinal_m" => road.rsu_longitudinal_m = float()?,
            "rsu_lateral_m" => road.rsu_lateral_m = float()?,
            "speed_mps" => road.speed_mps = float()?,
            "arrival_rate_per_s" => road.arrival_rate_per_s = float()?,
            "vehicle_count" => road.vehicle_count = u32::try_from(int()?).map_err(|_| bad())?,
            "content_gbit" => road.content_bits = float()? * 1e9,
            "slot_ms" => road.slot_s = float()? / 1e3,
            "horizon_slots" => road.horizon_slots = int()?,
            "seed" => self.seed = int()?,
            _ => return Err(ConfigError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }

    /// Serializes back into the file format, keys in canonical order.
    pub fn to_config_text(&self) -> String {
        let r = &self.radio;
        let road = &self.road;
        let values: [String; 25] = [
            r.carrier_frequency_hz.to_string(),
            watts_to_dbm(r.tx_power_rsu_w).to_string(),
            watts_to_dbm(r.tx_power_vehicle_w).to_string(),
            r.bandwidth_hz.to_string(),
            watts_to_dbm(r.noise_density_w_per_hz * 1e6).to_string(),
            r.pathloss_exponent.to_string(),
            r.mui_factor.to_string(),
            (-r.si_cancel.log10()).to_string(),
            linear_to_db(r.sinr_threshold).to_string(),
            r.beamwidth_rad.to_degrees().to_string(),
            r.sidelobe_gain.to_string(),
            r.rsu_range_m.to_string(),
            r.v2v_range_m.to_string(),
            road.lane_count.to_string(),
            road.lane_width_m.to_string(),
            road.road_length_m.to_string(),
            road.rsu_longitudinal_m.to_string(),
            road.rsu_lateral_m.to_string(),
            road.speed_mps.to_string(),
            road.arrival_rate_per_s.to_string(),
            road.vehicle_count.to_string(),
            (road.content_bits / 1e9).to_string(),
            (road.slot_s * 1e3).to_string(),
            road.horizon_slots.to_string(),
            self.seed.to_string(),
        ];
        let mut out = String::new();
        for (key, value) in CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(out, "{key}={value}");
        }
        out
    }

    /// Short content hash of every field except the seed.
    pub fn config_hash(&self) -> String {
        let mut unseeded = self.clone();
        unseeded.seed = 0;
        let digest = Sha256::digest(unseeded.to_config_text().as_bytes());
        digest[..8].iter().fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Checks every invariant, reporting the first one violated.
    // negated comparisons so that NaN fails every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(self) -> Result<ValidatedConfig, ConfigError> {
        let r = &self.radio;
        let road = &self.road;
        let positive: [(&str, f64); 12] = [
            ("carrier_frequency", r.carrier_frequency_hz),
            ("tx_power_rsu", r.tx_power_rsu_w),
            ("tx_power_vehicle", r.tx_power_vehicle_w),
            ("bandwidth", r.bandwidth_hz),
            ("noise_density", r.noise_density_w_per_hz),
            ("pathloss_exponent", r.pathloss_exponent),
            ("sinr_threshold", r.sinr_threshold),
            ("rsu_range", r.rsu_range_m),
            ("v2v_range", r.v2v_range_m),
            ("lane_width", road.lane_width_m),
            ("road_length", road.road_length_m),
            ("speed", road.speed_mps),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return invalid(format!("{name} must be finite and > 0 (got {value})"));
            }
        }
        if !(r.v2v_range_m < r.rsu_range_m) {
            return invalid(format!(
                "v2v_range must be below rsu_range (v2v_range = {} m, rsu_range = {} m)",
                r.v2v_range_m, r.rsu_range_m
            ));
        }
        if !(r.mui_factor >= 0.0 && r.mui_factor <= 1.0) {
            return invalid(format!("mui_factor must be in [0, 1] (got {})", r.mui_factor));
        }
        if !(r.si_cancel >= 0.0 && r.si_cancel.is_finite()) {
            return invalid(format!("si_cancel must be ≥ 0 (got {})", r.si_cancel));
        }
        if !(r.beamwidth_rad > 0.0 && r.beamwidth_rad < 2.0 * PI) {
            return invalid(format!("beamwidth must be in (0, 2π) (got {} rad)", r.beamwidth_rad));
        }
        if !(r.sidelobe_gain > 0.0 && r.sidelobe_gain < 1.0) {
            return invalid(format!("sidelobe_gain must be in (0, 1) (got {})", r.sidelobe_gain));
        }
        if road.lane_count == 0 {
            return invalid("lane_count must be ≥ 1 (got 0)".into());
        }
        if !(road.rsu_lateral_m >= 0.0 && road.rsu_lateral_m.is_finite()) {
            return invalid(format!("rsu_lateral must be ≥ 0 (got {})", road.rsu_lateral_m));
        }
        if !(road.rsu_longitudinal_m >= 0.0 && road.rsu_longitudinal_m <= road.road_length_m) {
            return invalid(format!(
                "rsu_longitudinal must be in [0, road_length] (got {})",
                road.rsu_longitudinal_m
            ));
        }
        if !(road.arrival_rate_per_s > 0.0) {
            return invalid(format!("arrival_rate must be > 0 (got {})", road.arrival_rate_per_s));
        }
        if road.vehicle_count == 0 {
            return invalid("vehicle_count must be ≥ 1 (got 0)".into());
        }
        if !(road.content_bits > 0.0 && road.content_bits.is_finite()) {
            return invalid(format!("content size D must be > 0 (got {})", road.content_bits));
        }
        if !(road.slot_s > 0.0 && road.slot_s.is_finite()) {
            return invalid(format!("slot duration must be > 0 (got {})", road.slot_s));
        }
        if road.horizon_slots == 0 {
            return invalid("horizon must be ≥ 1 slot (got 0)".into());
        }
        for lane in 1..=road.lane_count {
            let d = road.lane_offset_m(lane);
            if !(d < r.rsu_range_m) {
                return invalid(format!(
                    "lane {lane} lies outside RSU coverage (d_lr = {d} m, rsu_range = {} m)",
                    r.rsu_range_m
                ));
            }
        }
        Ok(ValidatedConfig(self))
    }
}

fn invalid<T>(msg: String) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg))
}

fn key_index(key: &str) -> Result<usize, ConfigError> {
    CONFIG_KEYS
        .iter()
        .position(|k| *k == key)
        .ok_or_else(|| ConfigError::UnknownKey { key: key.to_string() })
}

/// A [`ScenarioConfig`] that has passed [`ScenarioConfig::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedConfig(ScenarioConfig);

impl ValidatedConfig {
    pub fn into_inner(self) -> ScenarioConfig {
        self.0
    }
}

impl Deref for ValidatedConfig {
    type Target = ScenarioConfig;

    fn deref(&self) -> &ScenarioConfig {
        &self.0
    }
}
