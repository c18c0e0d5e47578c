//! Wave-packet revivals of an atom bouncing on a modulated atomic mirror.
//!
//! The pipeline runs from units and configuration ([`config`], [`units`])
//! through the unperturbed spectrum ([`spectrum`]), Mathieu characteristic
//! values ([`mathieu`]) and the resonance theory of the driven revival time
//! ([`secular`]), to split-step propagation ([`propagator`]) and revival
//! extraction ([`analysis`]).

pub mod airy;
pub mod analysis;
pub mod config;
pub mod error;
pub mod io;
pub mod mathieu;
pub mod propagator;
pub mod secular;
pub mod spectrum;
pub mod units;

pub use analysis::{
    compare, detect_revival, envelope, quick_profile, sweep_lambda, Comparison, RevivalMeasurement, SweepResult,
    SweepRow,
};
pub use config::{load_config, to_toml};
pub use error::{Error, Result};
pub use mathieu::{char_value, DerivativeMode};
pub use propagator::{propagate, AutocorrelationSeries, PropagateOptions, Propagation, WavePacket};
pub use secular::{QuasiEnergyMode, RevivalPrediction, SecularModel};
pub use spectrum::{airy_levels, SoftWallBouncer, SpectrumTable};
pub use units::{Bouncer, PhysicalParams, ScaleSet, SimulationConfig};
