//! Conversion between laboratory units and recoil units.
//!
//! Detunings and scan rates are quoted as cyclic frequencies (Hz, MHz/ms) the
//! way they are read off a synthesizer. Relaxation rates and couplings are
//! quoted in s⁻¹. Everything is divided by the angular recoil frequency
//! `ω_r = 2π f_r`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::schedule::ChirpSchedule;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of ⁸⁷Rb.
pub const RB87_MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalUnits {
    pub recoil_frequency_hz: f64,
    pub wavelength_m: f64,
    pub atom_mass_kg: f64,
    /// Photon momenta `ħk` per ladder step.
    pub photon_momentum_step: f64,
}

impl Default for PhysicalUnits {
    /// Rb D2 line, two photon recoils per ladder step.
    fn default() -> Self {
        Self {
            recoil_frequency_hz: 3.77e3,
            wavelength_m: 780.241e-9,
            atom_mass_kg: RB87_MASS,
            photon_momentum_step: 2.0,
        }
    }
}

impl PhysicalUnits {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("recoil_frequency_hz", self.recoil_frequency_hz),
            ("wavelength_m", self.wavelength_m),
            ("atom_mass_kg", self.atom_mass_kg),
            ("photon_momentum_step", self.photon_momentum_step),
        ];
        for (name, v) in checks {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveUnit(name));
            }
        }
        Ok(())
    }

    /// Angular recoil frequency in rad/s.
    pub fn omega_r(&self) -> f64 {
        2.0 * PI * self.recoil_frequency_hz
    }

    pub fn detuning_from_hz(&self, f_hz: f64) -> f64 {
        f_hz / self.recoil_frequency_hz
    }

    pub fn detuning_to_hz(&self, delta: f64) -> f64 {
        delta * self.recoil_frequency_hz
    }

    pub fn rate_from_per_s(&self, gamma: f64) -> f64 {
        gamma / self.omega_r()
    }

    pub fn rate_to_per_s(&self, gamma: f64) -> f64 {
        gamma * self.omega_r()
    }

    /// Chirp rate in MHz/ms to `ω_r²` units.
    pub fn scan_rate_from_mhz_per_ms(&self, rate: f64) -> f64 {
        2.0 * PI * rate * 1e9 / (self.omega_r() * self.omega_r())
    }

    pub fn scan_rate_to_mhz_per_ms(&self, rate: f64) -> f64 {
        rate * self.omega_r() * self.omega_r() / (2.0 * PI * 1e9)
    }

    /// Momentum carried by one ladder step, in kg·m/s.
    pub fn ladder_momentum(&self) -> f64 {
        self.photon_momentum_step * HBAR * 2.0 * PI / self.wavelength_m
    }

    /// Thermal width `sqrt(m k_B T)` in ladder steps.
    pub fn sigma_p_from_temperature(&self, temperature_k: f64) -> f64 {
        (self.atom_mass_kg * BOLTZMANN * temperature_k).sqrt() / self.ladder_momentum()
    }

    pub fn temperature_from_sigma_p(&self, sigma_p: f64) -> f64 {
        let p = sigma_p * self.ladder_momentum();
        p * p / (self.atom_mass_kg * BOLTZMANN)
    }
}

/// Model parameters in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalModel {
    /// Coupling `β` as a complex rate in s⁻¹.
    pub beta_per_s: Complex64,
    pub n_atoms: f64,
    pub kappa_per_s: f64,
    pub gamma_pop_per_s: f64,
    pub gamma_coh_per_s: f64,
    pub a_in: Complex64,
    pub temperature_k: f64,
}

impl PhysicalModel {
    pub fn to_params(&self, units: &PhysicalUnits) -> Result<ModelParams> {
        units.validate()?;
        let params = ModelParams {
            beta: self.beta_per_s / units.omega_r(),
            n_atoms: self.n_atoms,
            kappa: units.rate_from_per_s(self.kappa_per_s),
            gamma_pop: units.rate_from_per_s(self.gamma_pop_per_s),
            gamma_coh: units.rate_from_per_s(self.gamma_coh_per_s),
            a_in: self.a_in,
            sigma_p: units.sigma_p_from_temperature(self.temperature_k),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_params(params: &ModelParams, units: &PhysicalUnits) -> Result<Self> {
        units.validate()?;
        Ok(Self {
            beta_per_s: params.beta * Complex64::new(units.omega_r(), 0.0),
            n_atoms: params.n_atoms,
            kappa_per_s: units.rate_to_per_s(params.kappa),
            gamma_pop_per_s: units.rate_to_per_s(params.gamma_pop),
            gamma_coh_per_s: units.rate_to_per_s(params.gamma_coh),
            a_in: params.a_in,
            temperature_k: units.temperature_from_sigma_p(params.sigma_p),
        })
    }
}

/// Model and sweep settings in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    /// Coupling `β` as a complex rate in s⁻¹.
    pub beta_per_s: Complex64,
    pub n_atoms: f64,
    pub kappa_per_s: f64,
    pub gamma_pop_per_s: f64,
    pub gamma_coh_per_s: f64,
    pub a_in: Complex64,
    pub temperature_k: f64,
    pub delta_start_hz: f64,
    pub delta_end_hz: f64,
    pub scan_rate_mhz_per_ms: f64,
}

impl PhysicalConfig {
    pub fn model(&self) -> PhysicalModel {
        PhysicalModel {
            beta_per_s: self.beta_per_s,
            n_atoms: self.n_atoms,
            kappa_per_s: self.kappa_per_s,
            gamma_pop_per_s: self.gamma_pop_per_s,
            gamma_coh_per_s: self.gamma_coh_per_s,
            a_in: self.a_in,
            temperature_k: self.temperature_k,
        }
    }
}

pub fn to_dimensionless(
    cfg: &PhysicalConfig,
    units: &PhysicalUnits,
) -> Result<(ModelParams, ChirpSchedule)> {
    let params = cfg.model().to_params(units)?;
    let schedule = ChirpSchedule::new(
        units.detuning_from_hz(cfg.delta_start_hz),
        units.detuning_from_hz(cfg.delta_end_hz),
        units.scan_rate_from_mhz_per_ms(cfg.scan_rate_mhz_per_ms),
    )?;
    Ok((params, schedule))
}

pub fn to_physical(
    params: &ModelParams,
    schedule: &ChirpSchedule,
    units: &PhysicalUnits,
) -> Result<PhysicalConfig> {
    let m = PhysicalModel::from_params(params, units)?;
    Ok(PhysicalConfig {
        beta_per_s: m.beta_per_s,
        n_atoms: m.n_atoms,
        kappa_per_s: m.kappa_per_s,
        gamma_pop_per_s: m.gamma_pop_per_s,
        gamma_coh_per_s: m.gamma_coh_per_s,
        a_in: m.a_in,
        temperature_k: m.temperature_k,
        delta_start_hz: units.detuning_to_hz(schedule.delta_start()),
        delta_end_hz: units.detuning_to_hz(schedule.delta_end()),
        scan_rate_mhz_per_ms: units.scan_rate_to_mhz_per_ms(schedule.rate()),
    })
}
