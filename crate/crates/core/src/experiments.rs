//! Simulated measurement protocols: chirped sweeps, hysteresis maps, power
//! scans, the strong/weak probe thermalization measurement and static spectra.
//!
//! Drivers that loop over independent parameter points take a `jobs` count.
//! With `jobs > 1` points run on a dedicated thread pool; results always come
//! back in input order.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    find_peak, fit_exponential_relaxation, fit_power_law, gain_of, hysteresis_ratio,
    linear_response_spectrum, FitResult, HysteresisPoint, SpectrumResult,
};
use crate::error::{invalid, Error, Result};
use crate::integrator::{integrate, Diagnostics, SampleInterval, SolverOptions, Trajectory};
use crate::model::{scaled_rates, Model, RateReference};
use crate::schedule::{ChirpSchedule, ConstantDetuning, DetuningProfile};
use crate::units::{PLANCK, SPEED_OF_LIGHT};

fn fan_out<T, R, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid("jobs", e.to_string()))?;
    pool.install(|| items.par_iter().map(f).collect())
}

fn spectrum_from(model: &Model, traj: &Trajectory, sweep_rate: f64) -> Result<SpectrumResult> {
    let a_in = model.params().a_in;
    let mut deltas = Vec::with_capacity(traj.samples.len());
    let mut gains = Vec::with_capacity(traj.samples.len());
    let mut probes = Vec::with_capacity(traj.samples.len());
    let mut times = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        deltas.push(s.delta);
        gains.push(gain_of(s.probe, a_in)?);
        probes.push(s.probe);
        times.push(s.t);
    }
    SpectrumResult::new(deltas, gains, probes, times, sweep_rate)
}

/// Chirped sweep from the thermal state, returning the spectrum together with
/// the raw trajectory.
pub fn run_sweep(
    model: &Model,
    schedule: &ChirpSchedule,
    opts: &SolverOptions,
) -> Result<(SpectrumResult, Trajectory)> {
    let mut state0 = model.thermal_state();
    state0.probe = model.adiabatic_probe(&state0.coherences)?;
    let traj = integrate(model, &state0, schedule, opts)?;
    let spectrum = spectrum_from(model, &traj, schedule.sweep_rate())?;
    Ok((spectrum, traj))
}

/// Probe gain recorded while the two-photon detuning is chirped across the
/// resonance.
pub fn chirped_sweep(
    model: &Model,
    schedule: &ChirpSchedule,
    opts: &SolverOptions,
) -> Result<SpectrumResult> {
    run_sweep(model, schedule, opts).map(|(s, _)| s)
}

/// Downward and upward sweeps over one span at one rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPair {
    pub minus: SpectrumResult,
    pub plus: SpectrumResult,
    pub point: HysteresisPoint,
    pub diagnostics: [Diagnostics; 2],
}

pub fn sweep_pair(
    model: &Model,
    span: (f64, f64),
    rate: f64,
    opts: &SolverOptions,
) -> Result<SweepPair> {
    let down = ChirpSchedule::downward(span.0, span.1, rate)?;
    let (minus, tm) = run_sweep(model, &down, opts)?;
    let (plus, tp) = run_sweep(model, &down.reversed(), opts)?;
    let point = hysteresis_ratio(&minus, &plus)?;
    Ok(SweepPair {
        minus,
        plus,
        point,
        diagnostics: [tm.diagnostics, tp.diagnostics],
    })
}

/// Peak-gain ratio `g₋/g₊` as a function of chirp rate.
pub fn hysteresis_map(
    model: &Model,
    span: (f64, f64),
    rates: &[f64],
    opts: &SolverOptions,
    jobs: usize,
) -> Result<Vec<HysteresisPoint>> {
    if rates.is_empty() {
        return Err(invalid("rates", "at least one rate is required"));
    }
    if rates.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("rates", "must be sorted ascending"));
    }
    fan_out(jobs, rates, |&rate| {
        sweep_pair(model, span, rate, opts).map(|p| p.point)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub amplitude: f64,
    /// `|a_in|²`.
    pub input_power: f64,
    pub g_minus: f64,
    pub g_plus: f64,
    pub ratio: f64,
}

/// Hysteresis ratio across input probe amplitudes. The phase of the model's
/// `a_in` is kept; its magnitude is replaced by each grid value.
pub fn power_sweep(
    model: &Model,
    amplitudes: &[f64],
    schedule: &ChirpSchedule,
    opts: &SolverOptions,
    jobs: usize,
) -> Result<Vec<PowerPoint>> {
    if amplitudes.is_empty() {
        return Err(invalid("a_in", "at least one amplitude is required"));
    }
    for &a in amplitudes {
        if a == 0.0 {
            return Err(Error::ZeroProbeInput);
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(invalid("a_in", "amplitudes must be positive"));
        }
    }
    let phase = {
        let a = model.params().a_in;
        if a.norm() > 0.0 {
            a / a.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    let (lo, hi) = (schedule.delta_start(), schedule.delta_end());
    fan_out(jobs, amplitudes, |&amp| {
        let m = model.with_params(|p| p.a_in = phase * amp)?;
        let pair = sweep_pair(&m, (lo, hi), schedule.rate(), opts)?;
        Ok(PowerPoint {
            amplitude: amp,
            input_power: amp * amp,
            g_minus: pair.point.g_minus,
            g_plus: pair.point.g_plus,
            ratio: pair.point.ratio,
        })
    })
}

/// Detuning of maximum weak-probe gain, taken from the thermal-ladder response.
///
/// Candidates are the bare ladder resonances plus a uniform grid fine enough
/// to resolve the coherence linewidth.
pub fn peak_gain_detuning(model: &Model) -> Result<f64> {
    let grid = model.grid();
    let reach = 4.0 * (2 * grid.half_width() + 1) as f64;
    let step = (model.params().gamma_coh / 4.0).clamp(1e-3, 0.1);
    let n = (2.0 * reach / step).ceil() as usize;
    let mut deltas: Vec<f64> = (0..=n).map(|k| -reach + k as f64 * step).collect();
    deltas.extend((0..grid.coherence_len()).map(|j| grid.kinetic_frequency(j)));
    deltas.sort_by(f64::total_cmp);
    let pts = linear_response_spectrum(model, &deltas)?;
    let gains: Vec<f64> = pts.iter().map(|p| p.gain).collect();
    Ok(find_peak(&deltas, &gains).delta)
}

/// Timing of the two-phase thermalization measurement. Unset fields take
/// defaults derived from the model's rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalizationOptions {
    /// Fixed two-photon detuning; defaults to the weak-probe gain peak.
    pub delta: Option<f64>,
    /// Strong-probe phase length; defaults to `50/γ_pop`.
    pub t_strong: Option<f64>,
    /// Weak-probe recording length; defaults to `8/γ_pop`.
    pub t_record: Option<f64>,
    /// Initial part of the weak phase left out of the fit; defaults to
    /// `min(5/γ_coh, 0.5/γ_pop)`.
    pub t_settle: Option<f64>,
    /// Number of recorded points in the weak phase; defaults to 400.
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRecord {
    pub delta: f64,
    /// Time since the switch to the weak probe.
    pub times: Vec<f64>,
    pub gains: Vec<f64>,
    /// Fit of the recorded gain after the settle window.
    pub fit: FitResult,
    /// Fitted relaxation rate, an estimate of `γ_pop`.
    pub rate: f64,
    pub diagnostics: Vec<Diagnostics>,
}

/// Strong probe at fixed detuning until the momentum distribution saturates,
/// then a sudden drop to a weak probe; the weak-probe gain recovers at the
/// thermalization rate.
pub fn thermalization_protocol(
    model: &Model,
    strong_a_in: f64,
    weak_a_in: f64,
    topts: &ThermalizationOptions,
    opts: &SolverOptions,
) -> Result<RelaxationRecord> {
    if weak_a_in == 0.0 {
        return Err(Error::ZeroProbeInput);
    }
    if !(weak_a_in > 0.0) {
        return Err(invalid("weak_a_in", "must be positive"));
    }
    if !(strong_a_in >= weak_a_in) || !strong_a_in.is_finite() {
        return Err(invalid("strong_a_in", "must not be below weak_a_in"));
    }
    let p = *model.params();
    if !(p.gamma_pop > 0.0) {
        return Err(invalid("gamma_pop", "thermalization needs a positive rate"));
    }
    let weak = model.with_params(|q| q.a_in = Complex64::new(weak_a_in, 0.0))?;
    let strong = model.with_params(|q| q.a_in = Complex64::new(strong_a_in, 0.0))?;
    let delta = match topts.delta {
        Some(d) => d,
        None => peak_gain_detuning(&weak)?,
    };
    let t_strong = topts.t_strong.unwrap_or(50.0 / p.gamma_pop);
    let t_record = topts.t_record.unwrap_or(8.0 / p.gamma_pop);
    let t_settle = topts.t_settle.unwrap_or_else(|| {
        let coh = if p.gamma_coh > 0.0 { 5.0 / p.gamma_coh } else { f64::INFINITY };
        coh.min(0.5 / p.gamma_pop)
    });
    let points = topts.points.unwrap_or(400);
    if !(t_strong > 0.0) || !(t_record > t_settle) || !(t_settle >= 0.0) || points < 8 {
        return Err(invalid("thermalize", "inconsistent phase timing"));
    }

    let phase1 = ConstantDetuning {
        delta,
        duration: t_strong,
    };
    let o1 = SolverOptions {
        sample_interval: SampleInterval::Time(t_strong),
        ..*opts
    };
    let mut state = strong.thermal_state();
    state.probe = strong.adiabatic_probe(&state.coherences)?;
    let saturated = integrate(&strong, &state, &phase1, &o1)?;

    let phase2 = ConstantDetuning {
        delta,
        duration: t_record,
    };
    let o2 = SolverOptions {
        sample_interval: SampleInterval::Time(t_record / points as f64),
        ..*opts
    };
    let mut state = saturated.final_state.clone();
    state.probe = weak.adiabatic_probe(&state.coherences)?;
    let relax = integrate(&weak, &state, &phase2, &o2)?;

    let a_in = weak.params().a_in;
    let mut times = Vec::with_capacity(relax.samples.len());
    let mut gains = Vec::with_capacity(relax.samples.len());
    for s in &relax.samples {
        times.push(s.t);
        gains.push(gain_of(s.probe, a_in)?);
    }
    let start = times.partition_point(|&t| t < t_settle);
    let (ft, fg) = (&times[start..], &gains[start..]);
    let gmax = fg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gmin = fg.iter().copied().fold(f64::INFINITY, f64::min);
    let noise_floor = (1e3 * opts.rel_tol).max(1e-9);
    if gmax - gmin <= noise_floor * gmax.abs() {
        return Err(Error::FitDegenerate(format!(
            "gain transient {:.3e} is below the noise floor {:.1e}; strong phase did not deplete the ladder",
            (gmax - gmin) / gmax.abs(),
            noise_floor
        )));
    }
    let fit = fit_exponential_relaxation(ft, fg)?;
    let rate = fit.get("rate").map(|e| e.value).unwrap_or(f64::NAN);
    Ok(RelaxationRecord {
        delta,
        times,
        gains,
        fit,
        rate,
        diagnostics: vec![saturated.diagnostics, relax.diagnostics],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub delta_pump: f64,
    pub gamma_pop: f64,
    pub gamma_coh: f64,
    pub fitted_rate: f64,
    /// `1 / fitted_rate`.
    pub thermalization_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub points: Vec<ScalingPoint>,
    /// Power law of thermalization time against `|Δ|`.
    pub fit: FitResult,
}

/// Thermalization measurement repeated across pump detunings, with relaxation
/// rates following [`scaled_rates`]; the thermalization times are then fitted
/// to a power law in `|Δ|`.
pub fn thermalization_scaling(
    model: &Model,
    pump_detunings: &[f64],
    reference: &RateReference,
    strong_a_in: f64,
    weak_a_in: f64,
    topts: &ThermalizationOptions,
    opts: &SolverOptions,
    jobs: usize,
) -> Result<ScalingResult> {
    let points = fan_out(jobs, pump_detunings, |&d| {
        let (gamma_pop, gamma_coh) = scaled_rates(d, reference)?;
        let m = model.with_params(|p| {
            p.gamma_pop = gamma_pop;
            p.gamma_coh = gamma_coh;
        })?;
        let rec = thermalization_protocol(&m, strong_a_in, weak_a_in, topts, opts)?;
        Ok(ScalingPoint {
            delta_pump: d,
            gamma_pop,
            gamma_coh,
            fitted_rate: rec.rate,
            thermalization_time: 1.0 / rec.rate,
        })
    })?;
    let x: Vec<f64> = points.iter().map(|p| p.delta_pump.abs()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.thermalization_time).collect();
    let fit = fit_power_law(&x, &y)?;
    Ok(ScalingResult { points, fit })
}

/// Convergence control for [`static_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyStateOptions {
    /// Comparison window; defaults to the slowest relaxation time.
    pub window: Option<f64>,
    /// Relative gain change between consecutive windows that counts as settled.
    pub tolerance: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            window: None,
            tolerance: 1e-8,
        }
    }
}

const WINDOW_SAMPLES: f64 = 16.0;

/// Steady-state gain at each detuning, each point started from the thermal state.
pub fn static_spectrum(
    model: &Model,
    deltas: &[f64],
    sopts: &SteadyStateOptions,
    opts: &SolverOptions,
    jobs: usize,
) -> Result<SpectrumResult> {
    if deltas.is_empty() || deltas.iter().any(|d| !d.is_finite()) {
        return Err(invalid("deltas", "grid must be nonempty and finite"));
    }
    let p = model.params();
    let window = match sopts.window {
        Some(w) => w,
        None => {
            let slowest = [p.gamma_pop, p.gamma_coh]
                .into_iter()
                .filter(|g| *g > 0.0)
                .fold(f64::INFINITY, f64::min);
            if slowest.is_finite() {
                1.0 / slowest
            } else {
                return Err(invalid("window", "no relaxation rate to set a default window"));
            }
        }
    };
    if !(window > 0.0) {
        return Err(invalid("window", "must be positive"));
    }
    let a_in = p.a_in;
    let results = fan_out(jobs, deltas, |&delta| {
        let profile = ConstantDetuning {
            delta,
            duration: window,
        };
        let o = SolverOptions {
            sample_interval: SampleInterval::Time(window / WINDOW_SAMPLES),
            ..*opts
        };
        let mut state = model.thermal_state();
        state.probe = model.adiabatic_probe(&state.coherences)?;
        let mut steps = 0usize;
        let mut elapsed = 0.0;
        loop {
            let traj = integrate(model, &state, &profile, &o)?;
            steps += traj.diagnostics.steps;
            elapsed += window;
            // Judge the whole window so that a ringing gain cannot pass by
            // coinciding at the two ends.
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for sample in &traj.samples {
                let g = gain_of(sample.probe, a_in)?;
                lo = lo.min(g);
                hi = hi.max(g);
            }
            state = traj.final_state;
            let gain = gain_of(state.probe, a_in)?;
            if hi - lo <= sopts.tolerance * gain.abs() {
                return Ok((gain, state.probe, elapsed));
            }
            if steps > opts.max_steps {
                return Err(Error::SteadyStateNotReached {
                    delta,
                    max_steps: opts.max_steps,
                });
            }
        }
    })?;
    let gains = results.iter().map(|r| r.0).collect();
    let probes = results.iter().map(|r| r.1).collect();
    let times = results.iter().map(|r| r.2).collect();
    SpectrumResult::new(deltas.to_vec(), gains, probes, times, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingMetrics {
    /// `τP / (hc/λ)`.
    pub photon_number: f64,
    /// Photons per diffraction-limited area `λ²/2π` of the beam.
    pub photons_per_diffraction_area: f64,
}

/// Photon budget of an all-optical switch driven by a probe of power `power_w`
/// for a switching time `tau_s`.
pub fn switching_metrics(
    power_w: f64,
    tau_s: f64,
    wavelength_m: f64,
    waist_m: f64,
) -> Result<SwitchingMetrics> {
    if !(power_w >= 0.0) || !power_w.is_finite() {
        return Err(Error::NonPositiveInput("power_w"));
    }
    if !(tau_s >= 0.0) || !tau_s.is_finite() {
        return Err(Error::NonPositiveInput("tau_s"));
    }
    if !(wavelength_m > 0.0) || !wavelength_m.is_finite() {
        return Err(Error::NonPositiveInput("wavelength_m"));
    }
    if !(waist_m > 0.0) || !waist_m.is_finite() {
        return Err(Error::NonPositiveInput("waist_m"));
    }
    let photon_energy = PLANCK * SPEED_OF_LIGHT / wavelength_m;
    let photon_number = tau_s * power_w / photon_energy;
    let beam_area = std::f64::consts::PI * waist_m * waist_m;
    let diffraction_area = wavelength_m * wavelength_m / (2.0 * std::f64::consts::PI);
    Ok(SwitchingMetrics {
        photon_number,
        photons_per_diffraction_area: photon_number / (beam_area / diffraction_area),
    })
}

/// Detuning span `(lo, hi)` covered by a schedule.
pub fn span_of(schedule: &ChirpSchedule) -> (f64, f64) {
    let (a, b) = (schedule.delta_start(), schedule.delta_end());
    (a.min(b), a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switching_examples() {
        let m = switching_metrics(20e-12, 0.3e-6, 780e-9, 100e-6).unwrap();
        // 6e-18 J over 2.5467e-19 J per photon
        assert!((m.photon_number - 23.56).abs() < 0.01, "{}", m.photon_number);
        assert!((m.photons_per_diffraction_area - 7.26e-5).abs() < 0.01e-5);
        let z = switching_metrics(20e-12, 0.0, 780e-9, 100e-6).unwrap();
        assert_eq!(z.photon_number, 0.0);
        assert_eq!(
            switching_metrics(20e-12, 0.3e-6, 0.0, 100e-6),
            Err(Error::NonPositiveInput("wavelength_m"))
        );
        assert_eq!(
            switching_metrics(-1.0, 0.3e-6, 780e-9, 100e-6),
            Err(Error::NonPositiveInput("power_w"))
        );
    }

    #[test]
    fn fan_out_keeps_input_order() {
        let items: Vec<usize> = (0..64).collect();
        let out = fan_out(4, &items, |&i| Ok(i * i)).unwrap();
        assert_eq!(out, items.iter().map(|i| i * i).collect::<Vec<_>>());
    }
}
