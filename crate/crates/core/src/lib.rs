//! Simulation of collective atomic recoil on a momentum ladder.
//!
//! A cold gas driven by a strong pump and a weak probe exchanges photons
//! between the two beams while atoms climb a ladder of momentum classes. The
//! crate integrates the first-order ladder equations under a chirped
//! two-photon detuning and measures what an experiment would: gain spectra,
//! the hysteresis between chirp directions, thermalization of the momentum
//! distribution and its scaling with pump detuning.
//!
//! Everything runs in recoil units (`ω_r = 1`); [`units`] converts from
//! laboratory values.

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod model;
pub mod output;
pub mod schedule;
pub mod units;

pub use analysis::{
    fit_exponential_relaxation, fit_power_law, gain_of, hysteresis_ratio,
    linear_response_spectrum, FitResult, HysteresisPoint, SpectrumResult,
};
pub use error::{Error, Result};
pub use experiments::{
    chirped_sweep, hysteresis_map, power_sweep, static_spectrum, switching_metrics,
    thermalization_protocol,
};
pub use integrator::{integrate, step_fixed, Method, ProbeMode, SampleInterval, SolverOptions, Trajectory};
pub use model::{scaled_rates, thermal_distribution, EnsembleState, Model, ModelParams, MomentumGrid};
pub use schedule::{ChirpSchedule, ConstantDetuning, DetuningProfile};
