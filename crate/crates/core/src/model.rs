//! Momentum-ladder model of a cold gas coupled to a pump and a probe field.
//!
//! Populations `Π_p` live on the integer ladder `p = -P..=P`, where one step is
//! one two-photon recoil. First-order coherences `η_p = ρ(p+1, p) e^{iδt}` live on
//! `p = -P..P-1`, and the probe amplitude `a₂` is a single complex number. Time is
//! measured in units of `1/ω_r`, so every rate and detuning below is in units of
//! the recoil frequency.
//!
//! Equations of motion, with `η` taken as zero outside the grid:
//!
//! ```text
//! dΠ_p/dt = [-i β* a₂ (η_{p-1} - η_p) + c.c.] - γ_pop (Π_p - Π_th,p)
//! dη_p/dt = i (4(p² - (p+1)²) - δ + i γ_coh) η_p - i β a₂* (Π_{p+1} - Π_p)
//! da₂/dt  = i β N Σ_p η*_p - κ/2 (a₂ - a_in)
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default half width of the momentum ladder.
pub const DEFAULT_HALF_WIDTH: usize = 64;
/// Default bound on the thermal population at the outermost ladder rung.
pub const DEFAULT_EDGE_TOLERANCE: f64 = 1e-8;

/// Truncated momentum ladder `p = -P..=P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    half_width: usize,
    edge_tolerance: f64,
}

impl MomentumGrid {
    pub fn new(half_width: usize) -> Result<Self> {
        Self::with_edge_tolerance(half_width, DEFAULT_EDGE_TOLERANCE)
    }

    pub fn with_edge_tolerance(half_width: usize, edge_tolerance: f64) -> Result<Self> {
        if half_width < 1 {
            return Err(invalid("half_width", "must be at least 1"));
        }
        if !(edge_tolerance > 0.0) {
            return Err(invalid("edge_tolerance", "must be positive"));
        }
        Ok(Self {
            half_width,
            edge_tolerance,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn edge_tolerance(&self) -> f64 {
        self.edge_tolerance
    }

    /// Number of population entries, `2P + 1`.
    pub fn population_len(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Number of coherence entries, `2P`.
    pub fn coherence_len(&self) -> usize {
        2 * self.half_width
    }

    /// Momentum label of population slot `index`.
    pub fn momentum(&self, index: usize) -> i64 {
        index as i64 - self.half_width as i64
    }

    /// Kinetic detuning `4(p² - (p+1)²) = -4(2p+1)` of coherence slot `index`.
    pub fn kinetic_frequency(&self, index: usize) -> f64 {
        let p = self.momentum(index) as f64;
        -4.0 * (2.0 * p + 1.0)
    }
}

/// Discrete Maxwell-Boltzmann distribution over the ladder.
///
/// Weights `exp(-p²/(2σ²))` are normalized by direct summation, and mirror
/// slots share one computed value so the result is exactly symmetric.
pub fn thermal_distribution(grid: &MomentumGrid, sigma_p: f64) -> Result<Vec<f64>> {
    if !(sigma_p > 0.0) || !sigma_p.is_finite() {
        return Err(invalid("sigma_p", "must be positive and finite"));
    }
    let half = grid.half_width();
    let mut weights = vec![0.0; grid.population_len()];
    for k in 0..=half {
        let p = k as f64;
        let w = (-p * p / (2.0 * sigma_p * sigma_p)).exp();
        weights[half + k] = w;
        weights[half - k] = w;
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let edge = weights[0];
    if edge > grid.edge_tolerance() {
        return Err(Error::EdgePopulationTooLarge {
            half_width: half,
            edge,
            tolerance: grid.edge_tolerance(),
        });
    }
    Ok(weights)
}

/// Scalar couplings and rates, all in recoil units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Two-photon coupling `β = g₁g₂a₁/Δ`.
    pub beta: Complex64,
    /// Collective atom number multiplying the medium response in the probe equation.
    pub n_atoms: f64,
    /// Probe decay rate.
    pub kappa: f64,
    pub gamma_pop: f64,
    pub gamma_coh: f64,
    /// Input probe amplitude.
    pub a_in: Complex64,
    /// Thermal momentum width in ladder units.
    pub sigma_p: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            beta: Complex64::new(1.0, 0.0),
            n_atoms: 1.0,
            kappa: 1.0e4,
            gamma_pop: 0.1,
            gamma_coh: 1.0,
            a_in: Complex64::new(1.0, 0.0),
            sigma_p: 3.7,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(self.beta) {
            return Err(invalid("beta", "must be finite"));
        }
        if !finite(self.a_in) {
            return Err(invalid("a_in", "must be finite"));
        }
        if !(self.n_atoms >= 0.0) || !self.n_atoms.is_finite() {
            return Err(invalid("n_atoms", "must be nonnegative and finite"));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(invalid("kappa", "must be positive and finite"));
        }
        if !(self.gamma_pop >= 0.0) || !self.gamma_pop.is_finite() {
            return Err(invalid("gamma_pop", "must be nonnegative and finite"));
        }
        if !(self.gamma_coh >= 0.0) || !self.gamma_coh.is_finite() {
            return Err(invalid("gamma_coh", "must be nonnegative and finite"));
        }
        if !(self.sigma_p > 0.0) || !self.sigma_p.is_finite() {
            return Err(invalid("sigma_p", "must be positive and finite"));
        }
        Ok(())
    }

    /// Non-fatal configuration remarks.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.gamma_coh < self.gamma_pop {
            out.push(format!(
                "gamma_coh ({}) is below gamma_pop ({}); momentum coherences are expected to decay faster than populations",
                self.gamma_coh, self.gamma_pop
            ));
        }
        out
    }

    /// Dimensionless collective coupling `G = 2N|β|²/(κ γ_coh)`.
    ///
    /// This is a diagnostic defined for this crate. It is not derived from any
    /// measured cooperativity.
    pub fn cooperativity(&self) -> f64 {
        2.0 * self.n_atoms * self.beta.norm_sqr() / (self.kappa * self.gamma_coh)
    }
}

/// Instantaneous state of the ensemble and the probe.
///
/// The same type doubles as the time derivative of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub populations: Vec<f64>,
    pub coherences: Vec<Complex64>,
    pub probe: Complex64,
}

impl EnsembleState {
    pub fn zeros(grid: &MomentumGrid) -> Self {
        Self {
            populations: vec![0.0; grid.population_len()],
            coherences: vec![Complex64::new(0.0, 0.0); grid.coherence_len()],
            probe: Complex64::new(0.0, 0.0),
        }
    }

    pub fn check_shape(&self, grid: &MomentumGrid) -> Result<()> {
        if self.populations.len() != grid.population_len() {
            return Err(Error::ShapeMismatch {
                what: "populations",
                expected: grid.population_len(),
                got: self.populations.len(),
            });
        }
        if self.coherences.len() != grid.coherence_len() {
            return Err(Error::ShapeMismatch {
                what: "coherences",
                expected: grid.coherence_len(),
                got: self.coherences.len(),
            });
        }
        Ok(())
    }

    pub fn population_sum(&self) -> f64 {
        self.populations.iter().sum()
    }

    pub fn min_population(&self) -> f64 {
        self.populations
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.populations.iter().all(|x| x.is_finite())
            && self
                .coherences
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite())
            && self.probe.re.is_finite()
            && self.probe.im.is_finite()
    }

    /// Sets `self = base + h · Σ cᵢ kᵢ`. All operands must share one shape.
    pub fn set_combination(&mut self, base: &Self, h: f64, terms: &[(f64, &Self)]) {
        self.populations.copy_from_slice(&base.populations);
        self.coherences.copy_from_slice(&base.coherences);
        self.probe = base.probe;
        self.accumulate(h, terms);
    }

    /// Sets `self = h · Σ cᵢ kᵢ`.
    pub fn set_sum(&mut self, h: f64, terms: &[(f64, &Self)]) {
        self.populations.fill(0.0);
        self.coherences.fill(Complex64::new(0.0, 0.0));
        self.probe = Complex64::new(0.0, 0.0);
        self.accumulate(h, terms);
    }

    fn accumulate(&mut self, h: f64, terms: &[(f64, &Self)]) {
        for &(c, k) in terms {
            if c == 0.0 {
                continue;
            }
            let w = h * c;
            for (y, dy) in self.populations.iter_mut().zip(&k.populations) {
                *y += w * dy;
            }
            for (y, dy) in self.coherences.iter_mut().zip(&k.coherences) {
                *y += dy * w;
            }
            self.probe += k.probe * w;
        }
    }
}

/// Validated model: grid, couplings and the thermal reference distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    grid: MomentumGrid,
    params: ModelParams,
    thermal: Vec<f64>,
}

impl Model {
    pub fn new(grid: MomentumGrid, params: ModelParams) -> Result<Self> {
        params.validate()?;
        let thermal = thermal_distribution(&grid, params.sigma_p)?;
        Ok(Self {
            grid,
            params,
            thermal,
        })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn thermal(&self) -> &[f64] {
        &self.thermal
    }

    /// Copy of this model with modified couplings; the grid is kept.
    pub fn with_params(&self, f: impl FnOnce(&mut ModelParams)) -> Result<Self> {
        let mut params = self.params;
        f(&mut params);
        Self::new(self.grid, params)
    }

    /// Thermal populations, zero coherences, probe at its input value.
    pub fn thermal_state(&self) -> EnsembleState {
        let mut state = EnsembleState::zeros(&self.grid);
        state.populations.copy_from_slice(&self.thermal);
        state.probe = self.params.a_in;
        state
    }

    /// Time derivative of `state` at detuning `delta`.
    pub fn rhs(&self, state: &EnsembleState, delta: f64) -> Result<EnsembleState> {
        state.check_shape(&self.grid)?;
        let mut out = EnsembleState::zeros(&self.grid);
        self.rhs_into(state, delta, &mut out);
        Ok(out)
    }

    /// Unchecked form of [`Model::rhs`] writing into a preallocated buffer.
    pub fn rhs_into(&self, state: &EnsembleState, delta: f64, out: &mut EnsembleState) {
        self.ladder_rhs(state, state.probe, delta, out);
        let p = &self.params;
        let source: Complex64 = state.coherences.iter().map(|e| e.conj()).sum();
        out.probe = I * p.beta * p.n_atoms * source - (state.probe - p.a_in) * (0.5 * p.kappa);
    }

    /// Derivative with the probe slaved to [`Model::adiabatic_probe`]; the probe
    /// component of `out` is zero.
    pub fn rhs_adiabatic_into(&self, state: &EnsembleState, delta: f64, out: &mut EnsembleState) {
        let probe = self.adiabatic_probe_unchecked(&state.coherences);
        self.ladder_rhs(state, probe, delta, out);
        out.probe = Complex64::new(0.0, 0.0);
    }

    /// Quasi-steady probe `a_in + (2iβN/κ) Σ_p η*_p` at frozen coherences.
    pub fn adiabatic_probe(&self, coherences: &[Complex64]) -> Result<Complex64> {
        if coherences.len() != self.grid.coherence_len() {
            return Err(Error::ShapeMismatch {
                what: "coherences",
                expected: self.grid.coherence_len(),
                got: coherences.len(),
            });
        }
        Ok(self.adiabatic_probe_unchecked(coherences))
    }

    fn adiabatic_probe_unchecked(&self, coherences: &[Complex64]) -> Complex64 {
        let p = &self.params;
        let source: Complex64 = coherences.iter().map(|e| e.conj()).sum();
        p.a_in + I * p.beta * (2.0 * p.n_atoms / p.kappa) * source
    }

    fn ladder_rhs(
        &self,
        state: &EnsembleState,
        probe: Complex64,
        delta: f64,
        out: &mut EnsembleState,
    ) {
        let p = &self.params;
        let pops = &state.populations;
        let eta = &state.coherences;
        let n_coh = eta.len();

        let pop_drive = -I * p.beta.conj() * probe;
        for (i, dpop) in out.populations.iter_mut().enumerate() {
            let upper = if i < n_coh { eta[i] } else { Complex64::new(0.0, 0.0) };
            let lower = if i > 0 { eta[i - 1] } else { Complex64::new(0.0, 0.0) };
            let coupling = pop_drive * (lower - upper);
            *dpop = 2.0 * coupling.re - p.gamma_pop * (pops[i] - self.thermal[i]);
        }

        let coh_drive = -I * p.beta * probe.conj();
        for (j, deta) in out.coherences.iter_mut().enumerate() {
            let detuning = Complex64::new(-p.gamma_coh, self.grid.kinetic_frequency(j) - delta);
            *deta = detuning * eta[j] + coh_drive * (pops[j + 1] - pops[j]);
        }
    }
}

/// Relaxation rates at a reference pump detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateReference {
    /// Pump detuning in natural linewidths.
    pub delta_pump: f64,
    pub gamma_pop: f64,
    pub gamma_coh: f64,
}

/// Lamb-Dicke suppressed rates `γ(Δ) = γ₀ |Δ/Δ₀|^{-3/2}`.
pub fn scaled_rates(delta_pump: f64, reference: &RateReference) -> Result<(f64, f64)> {
    if delta_pump == 0.0 || reference.delta_pump == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if !(reference.gamma_pop > 0.0) {
        return Err(invalid("gamma_pop", "reference rate must be positive"));
    }
    if !(reference.gamma_coh > 0.0) {
        return Err(invalid("gamma_coh", "reference rate must be positive"));
    }
    let factor = (delta_pump / reference.delta_pump).abs().powf(-1.5);
    Ok((reference.gamma_pop * factor, reference.gamma_coh * factor))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_temperature_limit_is_a_delta() {
        let grid = MomentumGrid::new(2).unwrap();
        let th = thermal_distribution(&grid, 1e-3).unwrap();
        assert_eq!(th[2], 1.0);
        for (i, &x) in th.iter().enumerate() {
            if i != 2 {
                assert!(x < 1e-300);
            }
        }
    }

    #[test]
    fn thermal_is_symmetric_and_normalized() {
        let grid = MomentumGrid::new(64).unwrap();
        let th = thermal_distribution(&grid, 3.7).unwrap();
        for k in 0..=64 {
            assert_eq!(th[64 + k], th[64 - k]);
        }
        assert!((th.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let ratio = th[64] / th[65];
        assert!((ratio - (1.0_f64 / (2.0 * 3.7 * 3.7)).exp()).abs() < 1e-14);
        assert!((ratio - 1.0372).abs() < 1e-4);
    }

    #[test]
    fn narrow_grid_trips_edge_guard() {
        let grid = MomentumGrid::new(5).unwrap();
        let err = thermal_distribution(&grid, 3.7).unwrap_err();
        assert!(matches!(err, Error::EdgePopulationTooLarge { .. }));
    }

    #[test]
    fn invalid_grid_and_params() {
        assert!(MomentumGrid::new(0).is_err());
        let grid = MomentumGrid::new(8).unwrap();
        let bad = ModelParams {
            kappa: 0.0,
            sigma_p: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            Model::new(grid, bad),
            Err(Error::Validation { field: "kappa", .. })
        ));
        let bad = ModelParams {
            sigma_p: -1.0,
            ..Default::default()
        };
        assert!(matches!(
            Model::new(grid, bad),
            Err(Error::Validation { field: "sigma_p", .. })
        ));
    }

    #[test]
    fn warns_when_coherences_outlive_populations() {
        let p = ModelParams {
            gamma_pop: 0.5,
            gamma_coh: 0.1,
            ..Default::default()
        };
        assert_eq!(p.warnings().len(), 1);
        assert!(ModelParams::default().warnings().is_empty());
    }

    #[test]
    fn fixed_point_has_zero_derivative() {
        let grid = MomentumGrid::new(64).unwrap();
        let params = ModelParams {
            a_in: c(0.0, 0.0),
            ..Default::default()
        };
        let model = Model::new(grid, params).unwrap();
        let mut state = model.thermal_state();
        state.probe = c(0.0, 0.0);
        let d = model.rhs(&state, 17.0).unwrap();
        assert!(d.populations.iter().all(|&x| x == 0.0));
        assert!(d.coherences.iter().all(|z| z.norm() == 0.0));
        assert_eq!(d.probe, c(0.0, 0.0));
    }

    #[test]
    fn decoupled_probe_relaxes_toward_input() {
        let grid = MomentumGrid::new(16).unwrap();
        let params = ModelParams {
            beta: c(0.0, 0.0),
            kappa: 6.0,
            sigma_p: 2.0,
            ..Default::default()
        };
        let model = Model::new(grid, params).unwrap();
        let mut state = model.thermal_state();
        state.probe = c(0.0, 0.0);
        let d = model.rhs(&state, 0.0).unwrap();
        assert!(d.populations.iter().all(|&x| x == 0.0));
        assert!(d.coherences.iter().all(|z| z.norm() == 0.0));
        assert_eq!(d.probe, c(3.0, 0.0));
    }

    #[test]
    fn single_coherence_terms() {
        let grid = MomentumGrid::new(4).unwrap();
        let params = ModelParams {
            beta: c(0.0, 1.0),
            n_atoms: 1.0,
            gamma_pop: 0.0,
            gamma_coh: 0.0,
            a_in: c(0.0, 0.0),
            sigma_p: 0.5,
            ..Default::default()
        };
        let model = Model::new(grid, params).unwrap();
        let mut state = EnsembleState::zeros(&grid);
        // coherence slot of p = 0 is index P
        state.coherences[4] = c(1.0, 0.0);
        let d = model.rhs(&state, 0.0).unwrap();
        // iβNη₀* = i·i·1 = -1
        assert_eq!(d.probe, c(-1.0, 0.0));
        assert_eq!(d.coherences[4], c(0.0, -4.0));
        assert!(d.populations.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let grid = MomentumGrid::new(8).unwrap();
        let model = Model::new(grid, ModelParams { sigma_p: 1.0, ..Default::default() }).unwrap();
        let state = EnsembleState::zeros(&MomentumGrid::new(7).unwrap());
        assert!(matches!(
            model.rhs(&state, 0.0),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(model.adiabatic_probe(&[c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn adiabatic_probe_examples() {
        let grid = MomentumGrid::new(8).unwrap();
        let params = ModelParams {
            beta: c(1.0, 0.0),
            n_atoms: 10.0,
            kappa: 100.0,
            a_in: c(1.0, 0.0),
            sigma_p: 1.0,
            ..Default::default()
        };
        let model = Model::new(grid, params).unwrap();
        let mut eta = vec![c(0.0, 0.0); grid.coherence_len()];
        assert_eq!(model.adiabatic_probe(&eta).unwrap(), c(1.0, 0.0));
        eta[8] = c(0.1, 0.0);
        let a2 = model.adiabatic_probe(&eta).unwrap();
        assert!((a2 - c(1.0, 0.02)).norm() < 1e-15);

        let uncoupled = model.with_params(|p| p.beta = c(0.0, 0.0)).unwrap();
        assert_eq!(uncoupled.adiabatic_probe(&eta).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn scaled_rate_examples() {
        let r = RateReference {
            delta_pump: -4.0,
            gamma_pop: 0.05,
            gamma_coh: 0.4,
        };
        assert_eq!(scaled_rates(-4.0, &r).unwrap(), (0.05, 0.4));
        let (gp, gc) = scaled_rates(-16.0, &r).unwrap();
        assert!((gp - 0.05 / 8.0).abs() < 1e-16);
        assert!((gc - 0.4 / 8.0).abs() < 1e-16);
        assert_eq!(scaled_rates(0.0, &r), Err(Error::ZeroDetuning));
    }

    #[test]
    fn cooperativity_definition() {
        let p = ModelParams {
            beta: c(0.0, 2.0),
            n_atoms: 5.0,
            kappa: 10.0,
            gamma_coh: 0.5,
            ..Default::default()
        };
        assert!((p.cooperativity() - 8.0).abs() < 1e-12);
    }
}
