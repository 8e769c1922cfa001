//! Run configuration files.
//!
//! Configs are TOML. A file either states everything in recoil units
//! (`units = "dimensionless"`, the default) or gives the model in laboratory
//! units (`units = "physical"`). In physical mode the `[physical]` table
//! replaces `[model]`, detunings are in Hz, chirp rates in MHz/ms, times in
//! seconds and relaxation rates in s⁻¹. Solver settings are always in recoil
//! units.
//!
//! Loading resolves a physical file to recoil units, so a [`RunConfig`] is
//! always dimensionless and its TOML serialization can be fed back to
//! [`load_config`] unchanged.
//!
//! ```toml
//! output_dir = "out"
//!
//! [grid]
//! half_width = 64
//!
//! [model]
//! beta = 1.0
//! n_atoms = 4.0e4
//! kappa = 1.0e4
//! gamma_pop = 0.05
//! gamma_coh = 1.0
//! a_in = [1.0, 0.0]
//! sigma_p = 3.7
//!
//! [sweep]
//! span = [-60.0, 0.0]
//! rate = 10.0
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::experiments::{SteadyStateOptions, ThermalizationOptions};
use crate::integrator::SolverOptions;
use crate::model::{Model, ModelParams, MomentumGrid, RateReference};
use crate::schedule::ChirpSchedule;
use crate::units::{PhysicalModel, PhysicalUnits};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    #[default]
    Dimensionless,
    Physical,
}

/// A complex number written either as a real scalar or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Parts([f64; 2]),
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        match v {
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
            ComplexValue::Parts([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        ComplexValue::Parts([z.re, z.im])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: usize,
    pub edge_tolerance: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 64,
            edge_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub beta: ComplexValue,
    pub n_atoms: f64,
    pub kappa: f64,
    pub gamma_pop: f64,
    pub gamma_coh: f64,
    pub a_in: ComplexValue,
    pub sigma_p: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::from(ModelParams::default())
    }
}

impl From<ModelParams> for ModelConfig {
    fn from(p: ModelParams) -> Self {
        Self {
            beta: p.beta.into(),
            n_atoms: p.n_atoms,
            kappa: p.kappa,
            gamma_pop: p.gamma_pop,
            gamma_coh: p.gamma_coh,
            a_in: p.a_in.into(),
            sigma_p: p.sigma_p,
        }
    }
}

impl From<ModelConfig> for ModelParams {
    fn from(m: ModelConfig) -> Self {
        Self {
            beta: m.beta.into(),
            n_atoms: m.n_atoms,
            kappa: m.kappa,
            gamma_pop: m.gamma_pop,
            gamma_coh: m.gamma_coh,
            a_in: m.a_in.into(),
            sigma_p: m.sigma_p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalModelConfig {
    pub beta_per_s: ComplexValue,
    pub n_atoms: f64,
    pub kappa_per_s: f64,
    pub gamma_pop_per_s: f64,
    pub gamma_coh_per_s: f64,
    pub a_in: ComplexValue,
    pub temperature_k: f64,
}

impl From<PhysicalModelConfig> for PhysicalModel {
    fn from(m: PhysicalModelConfig) -> Self {
        Self {
            beta_per_s: m.beta_per_s.into(),
            n_atoms: m.n_atoms,
            kappa_per_s: m.kappa_per_s,
            gamma_pop_per_s: m.gamma_pop_per_s,
            gamma_coh_per_s: m.gamma_coh_per_s,
            a_in: m.a_in.into(),
            temperature_k: m.temperature_k,
        }
    }
}

/// A single chirp; `sweep` runs it in both directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub span: [f64; 2],
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HysteresisConfig {
    pub span: [f64; 2],
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub span: [f64; 2],
    pub rate: f64,
    /// Probe input amplitudes `|a_in|`.
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    /// Pump detunings in natural linewidths.
    pub pump_detunings: Vec<f64>,
    pub reference: RateReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalizeConfig {
    pub strong_a_in: f64,
    pub weak_a_in: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_strong: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_record: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_settle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
}

impl ThermalizeConfig {
    pub fn options(&self) -> ThermalizationOptions {
        ThermalizationOptions {
            delta: self.delta,
            t_strong: self.t_strong,
            t_record: self.t_record,
            t_settle: self.t_settle,
            points: self.points,
        }
    }
}

/// Uniform detuning grid with `points` samples from `start` to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetuningGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl DetuningGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| self.start + k as f64 * step)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(invalid("start", "grid bounds must be finite"));
        }
        if self.points == 0 {
            return Err(invalid("points", "must be positive"));
        }
        if self.points > 1 && self.start == self.stop {
            return Err(invalid("stop", "must differ from start"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    SteadyStateOptions::default().tolerance
}

impl SpectrumConfig {
    pub fn grid(&self) -> DetuningGrid {
        DetuningGrid {
            start: self.start,
            stop: self.stop,
            points: self.points,
        }
    }

    pub fn steady_state(&self) -> SteadyStateOptions {
        SteadyStateOptions {
            window: self.window,
            tolerance: self.tolerance,
        }
    }
}

/// Inputs of the photon-number estimate, always in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub power_w: f64,
    pub tau_s: f64,
    pub wavelength_m: f64,
    pub waist_m: f64,
}

/// A fully resolved configuration in recoil units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub units: UnitSystem,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical_units: Option<PhysicalUnits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hysteresis: Option<HysteresisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermalize: Option<ThermalizeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<DetuningGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            units: UnitSystem::Dimensionless,
            output_dir: default_output_dir(),
            grid: GridConfig::default(),
            solver: SolverOptions::default(),
            model: Some(ModelConfig::default()),
            physical: None,
            physical_units: None,
            sweep: None,
            hysteresis: None,
            power: None,
            thermalize: None,
            spectrum: None,
            oracle: None,
            metrics: None,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> ModelParams {
        self.model.unwrap_or_default().into()
    }

    pub fn grid(&self) -> Result<MomentumGrid> {
        MomentumGrid::with_edge_tolerance(self.grid.half_width, self.grid.edge_tolerance)
    }

    pub fn build_model(&self) -> Result<Model> {
        Model::new(self.grid()?, self.params())
    }

    /// TOML text that loads back to this configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid("config", e.to_string()))
    }

    /// Convert a physical-unit config to recoil units. Dimensionless configs
    /// pass through unchanged.
    pub fn resolve(mut self) -> Result<Self> {
        match self.units {
            UnitSystem::Dimensionless => {
                if self.physical.is_some() {
                    return Err(invalid("physical", "only allowed with units = \"physical\""));
                }
                if self.physical_units.is_some() {
                    return Err(invalid(
                        "physical_units",
                        "only allowed with units = \"physical\"",
                    ));
                }
                if self.model.is_none() {
                    self.model = Some(ModelConfig::default());
                }
            }
            UnitSystem::Physical => {
                if self.model.is_some() {
                    return Err(invalid("model", "use [physical] when units = \"physical\""));
                }
                let physical = self
                    .physical
                    .take()
                    .ok_or_else(|| invalid("physical", "required when units = \"physical\""))?;
                let u = self.physical_units.take().unwrap_or_default();
                let params = PhysicalModel::from(physical).to_params(&u)?;
                self.model = Some(params.into());
                self.convert_sections(&u);
                self.units = UnitSystem::Dimensionless;
            }
        }
        Ok(self)
    }

    fn convert_sections(&mut self, u: &PhysicalUnits) {
        let det = |x: f64| u.detuning_from_hz(x);
        let span = |s: [f64; 2]| [det(s[0]), det(s[1])];
        let chirp = |r: f64| u.scan_rate_from_mhz_per_ms(r);
        let time = |t: f64| t * u.omega_r();
        if let Some(s) = &mut self.sweep {
            s.span = span(s.span);
            s.rate = chirp(s.rate);
        }
        if let Some(h) = &mut self.hysteresis {
            h.span = span(h.span);
            h.rates.iter_mut().for_each(|r| *r = chirp(*r));
        }
        if let Some(p) = &mut self.power {
            p.span = span(p.span);
            p.rate = chirp(p.rate);
        }
        if let Some(t) = &mut self.thermalize {
            t.delta = t.delta.map(det);
            t.t_strong = t.t_strong.map(time);
            t.t_record = t.t_record.map(time);
            t.t_settle = t.t_settle.map(time);
            if let Some(sc) = &mut t.scaling {
                sc.reference.gamma_pop = u.rate_from_per_s(sc.reference.gamma_pop);
                sc.reference.gamma_coh = u.rate_from_per_s(sc.reference.gamma_coh);
            }
        }
        if let Some(s) = &mut self.spectrum {
            s.start = det(s.start);
            s.stop = det(s.stop);
            s.window = s.window.map(time);
        }
        if let Some(o) = &mut self.oracle {
            o.start = det(o.start);
            o.stop = det(o.stop);
        }
    }

    /// Check every section. Expects a resolved config.
    pub fn validate(&self) -> Result<()> {
        if self.units != UnitSystem::Dimensionless {
            return Err(invalid("units", "config has not been resolved"));
        }
        self.solver.validate()?;
        self.params().validate()?;
        self.build_model()?;
        if let Some(s) = &self.sweep {
            ChirpSchedule::downward(s.span[0], s.span[1], s.rate)?;
        }
        if let Some(h) = &self.hysteresis {
            if h.rates.is_empty() {
                return Err(invalid("rates", "at least one rate is required"));
            }
            if h.rates.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid("rates", "must be sorted ascending"));
            }
            for &r in &h.rates {
                ChirpSchedule::downward(h.span[0], h.span[1], r)?;
            }
        }
        if let Some(p) = &self.power {
            ChirpSchedule::downward(p.span[0], p.span[1], p.rate)?;
            if p.amplitudes.is_empty() {
                return Err(invalid("amplitudes", "at least one amplitude is required"));
            }
            if p.amplitudes.contains(&0.0) {
                return Err(Error::ZeroProbeInput);
            }
            if p.amplitudes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return Err(invalid("amplitudes", "must be positive"));
            }
        }
        if let Some(t) = &self.thermalize {
            if !(t.weak_a_in > 0.0) || !t.weak_a_in.is_finite() {
                return Err(invalid("weak_a_in", "must be positive"));
            }
            if !(t.strong_a_in >= t.weak_a_in) || !t.strong_a_in.is_finite() {
                return Err(invalid("strong_a_in", "must not be below weak_a_in"));
            }
            if let Some(sc) = &t.scaling {
                if sc.pump_detunings.len() < 2 {
                    return Err(invalid("pump_detunings", "at least two detunings are required"));
                }
                if sc.pump_detunings.contains(&0.0) || sc.reference.delta_pump == 0.0 {
                    return Err(Error::ZeroDetuning);
                }
            }
        }
        if let Some(s) = &self.spectrum {
            s.grid().validate()?;
            if !(s.tolerance > 0.0) {
                return Err(invalid("tolerance", "must be positive"));
            }
            if let Some(w) = s.window {
                if !(w > 0.0) {
                    return Err(invalid("window", "must be positive"));
                }
            }
        }
        if let Some(o) = &self.oracle {
            o.validate()?;
        }
        if let Some(m) = &self.metrics {
            let checks = [
                ("power_w", m.power_w),
                ("tau_s", m.tau_s),
                ("wavelength_m", m.wavelength_m),
                ("waist_m", m.waist_m),
            ];
            for (name, v) in checks {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::NonPositiveInput(name));
                }
            }
        }
        Ok(())
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parse, resolve and validate config text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        let message = e.message().to_string();
        match message
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split('`').next())
        {
            Some(key) => Error::UnknownKey {
                key: key.to_string(),
                line,
            },
            None => Error::Parse {
                line,
                column,
                message,
            },
        }
    })?;
    let cfg = raw.resolve()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
