//! Scenario runs, parameter sweeps, and their CSV output.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::audit::{audit, AuditReport};
use crate::baselines::{run_scheme, SchemeOptions};
use crate::channel::{Channel, PhysicalChannel};
use crate::config::{ConfigError, ScenarioConfig, ValidatedConfig, CONFIG_KEYS};
use crate::metrics::{metrics_report, MetricsError, MetricsReport};
use crate::radio::RateMode;
use crate::schedule::{Scheme, SchemeResult};
use crate::vehicles::spawn_vehicles;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub rate_mode: RateMode,
    pub scheme: SchemeOptions,
}

#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub result: SchemeResult,
    pub metrics: MetricsReport,
    pub audit: AuditReport,
}

/// Spawn, schedule, measure, and audit one scenario.
pub fn run_scenario(
    config: &ValidatedConfig,
    seed: u64,
    scheme: Scheme,
    opts: RunOptions,
) -> Result<ScenarioOutcome, MetricsError> {
    let vehicles = spawn_vehicles(config, seed);
    let ch = PhysicalChannel::new(config.clone(), vehicles, opts.rate_mode);
    evaluate(&ch, scheme, seed, opts.scheme)
}

/// Schedule, measure, and audit on an existing channel.
pub fn evaluate(ch: &dyn Channel, scheme: Scheme, seed: u64, opts: SchemeOptions) -> Result<ScenarioOutcome, MetricsError> {
    let result = run_scheme(ch, scheme, seed, opts);
    let metrics = metrics_report(&result, ch.config(), seed)?;
    let audit = audit(&result, ch);
    Ok(ScenarioOutcome { result, metrics, audit })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepSpec {
    /// Config-file key to vary.
    pub axis: String,
    pub values: Vec<String>,
    pub schemes: Vec<Scheme>,
    pub replicas: u32,
    pub base_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub replica: u32,
    pub metrics: MetricsReport,
}

/// Run every (value, scheme, replica) cell. Replica `r` uses seed
/// `base_seed + r`. Rows come back in nested loop order whatever the
/// execution order.
pub fn sweep(base: &ScenarioConfig, spec: &SweepSpec, opts: RunOptions) -> Result<Vec<SweepRow>, ExperimentError> {
    if !CONFIG_KEYS.contains(&spec.axis.as_str()) {
        return Err(ConfigError::UnknownKey { key: spec.axis.clone() }.into());
    }
    let configs = spec
        .values
        .iter()
        .map(|v| {
            let mut c = base.clone();
            c.set(&spec.axis, v)?;
            c.validate()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let cells: Vec<(usize, Scheme, u32)> = (0..configs.len())
        .flat_map(|vi| {
            spec.schemes
                .iter()
                .flat_map(move |&s| (0..spec.replicas).map(move |r| (vi, s, r)))
        })
        .collect();

    cells
        .into_par_iter()
        .map(|(vi, scheme, replica)| {
            let seed = spec.base_seed + u64::from(replica);
            let outcome = run_scenario(&configs[vi], seed, scheme, opts)?;
            Ok(SweepRow {
                axis: spec.axis.clone(),
                value: spec.values[vi].clone(),
                replica,
                metrics: outcome.metrics,
            })
        })
        .collect()
}

/// Nine significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

pub const SWEEP_HEADER: [&str; 11] = [
    "axis",
    "value",
    "scheme",
    "replica",
    "seed",
    "total_slots",
    "t_v2i",
    "t_v2v",
    "throughput_bps",
    "energy_j",
    "unserved",
];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.axis.clone(),
            r.value.clone(),
            m.scheme.to_string(),
            r.replica.to_string(),
            m.seed.to_string(),
            m.total_slots.to_string(),
            m.t_v2i.to_string(),
            m.t_v2v.to_string(),
            format_float(m.throughput_bps),
            format_float(m.energy_j),
            m.unserved.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const METRICS_HEADER: [&str; 11] = [
    "scheme",
    "seed",
    "config_hash",
    "total_slots",
    "t_v2i",
    "t_v2v",
    "throughput_bps",
    "energy_j",
    "unserved",
    "partial",
    "audit",
];

/// One header and one row. The audit column is `pass`, `fail`, or
/// `skipped` when no report is given.
pub fn write_metrics_csv<W: Write>(m: &MetricsReport, audit: Option<&AuditReport>, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    let audit = match audit {
        None => "skipped",
        Some(a) if a.passed() => "pass",
        Some(_) => "fail",
    };
    w.write_record([
        m.scheme.to_string(),
        m.seed.to_string(),
        m.config_hash.clone(),
        m.total_slots.to_string(),
        m.t_v2i.to_string(),
        m.t_v2v.to_string(),
        format_float(m.throughput_bps),
        format_float(m.energy_j),
        m.unserved.to_string(),
        m.partial.to_string(),
        audit.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}
