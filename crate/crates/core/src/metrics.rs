//! Throughput and energy of a finished schedule.

use thiserror::Error;

use crate::config::ValidatedConfig;
use crate::schedule::{Scheme, SchemeResult};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("throughput is undefined for a schedule of zero slots with {served} vehicles served")]
    ZeroSlots { served: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub scheme: Scheme,
    pub seed: u64,
    pub config_hash: String,
    pub total_slots: u64,
    pub t_v2i: u64,
    pub t_v2v: u64,
    pub throughput_bps: f64,
    pub energy_j: f64,
    pub unserved: usize,
    /// Some vehicle never received the content.
    pub partial: bool,
}

/// Served vehicles times content size over the schedule length.
pub fn system_throughput(result: &SchemeResult, config: &ValidatedConfig) -> Result<f64, MetricsError> {
    let served = result.served_count(config.road.vehicle_count as usize);
    if served == 0 {
        return Ok(0.0);
    }
    let slots = result.total_slots();
    if slots == 0 {
        return Err(MetricsError::ZeroSlots { served });
    }
    Ok(served as f64 * config.road.content_bits / (slots as f64 * config.road.slot_s))
}

/// RSU airtime at `Pt` plus every V2V flow's airtime at `Pv`.
pub fn energy(result: &SchemeResult, config: &ValidatedConfig) -> f64 {
    let slot = config.road.slot_s;
    let v2v_slots: u64 = result
        .v2v
        .pairings
        .iter()
        .flat_map(|p| &p.links)
        .map(|l| l.slots)
        .sum();
    result.v2i.t_v2i as f64 * slot * config.radio.tx_power_rsu_w
        + v2v_slots as f64 * slot * config.radio.tx_power_vehicle_w
}

pub fn metrics_report(result: &SchemeResult, config: &ValidatedConfig, seed: u64) -> Result<MetricsReport, MetricsError> {
    Ok(MetricsReport {
        scheme: result.scheme,
        seed,
        config_hash: config.config_hash(),
        total_slots: result.total_slots(),
        t_v2i: result.v2i.t_v2i,
        t_v2v: result.v2v.t_v2v,
        throughput_bps: system_throughput(result, config)?,
        energy_j: energy(result, config),
        unserved: result.unserved.len(),
        partial: !result.unserved.is_empty(),
    })
}
