//! Scheduling content distribution over a 28 GHz highway segment: an RSU
//! pushes a file to a few vehicles, which relay it to the rest over
//! full-duplex directional V2V links.
//!
//! The usual entry point is [`experiment::run_scenario`]; the pieces it wires
//! together (channel, schemes, metrics, audit) are usable on their own.

pub mod audit;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod experiment;
pub mod geometry;
pub mod instances;
pub mod metrics;
pub mod radio;
pub mod schedule;
pub mod units;
pub mod v2i;
pub mod v2v;
pub mod vehicles;

pub use audit::{audit, AuditReport, Constraint, Violation};
pub use baselines::{run_scheme, SchemeOptions};
pub use channel::{Channel, PhysicalChannel, SyntheticChannel};
pub use config::{ConfigError, ScenarioConfig, ValidatedConfig, CONFIG_KEYS};
pub use experiment::{run_scenario, sweep, ExperimentError, RunOptions, ScenarioOutcome, SweepSpec};
pub use metrics::{MetricsError, MetricsReport};
pub use radio::RateMode;
pub use schedule::{Link, Scheme, SchemeResult};
pub use v2i::V2ITermination;
pub use vehicles::{spawn_vehicles, VehicleId, VehicleState};
