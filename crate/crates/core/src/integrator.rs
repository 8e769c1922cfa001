//! Explicit Runge-Kutta time stepping of the ladder equations.
//!
//! Two methods are available: classical fixed-step RK4 and the Dormand-Prince
//! 5(4) embedded pair with PI step control. Steps are shortened so that every
//! sample time is hit exactly, which keeps recorded detunings on a uniform grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{EnsembleState, Model};
use crate::schedule::DetuningProfile;

/// How the probe amplitude is advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeMode {
    /// Integrate the probe equation alongside the ladder.
    FullStiff,
    /// Slave the probe to its quasi-steady value at every stage.
    AdiabaticProbe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FixedRk4,
    AdaptiveEmbedded,
}

/// Spacing of recorded samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleInterval {
    /// Uniform in detuning; requires a chirped profile.
    Detuning(f64),
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub mode: ProbeMode,
    pub method: Method,
    /// Initial step for the adaptive method, the step for RK4.
    pub dt_initial: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub sample_interval: SampleInterval,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mode: ProbeMode::AdiabaticProbe,
            method: Method::AdaptiveEmbedded,
            dt_initial: 1e-3,
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_steps: 20_000_000,
            sample_interval: SampleInterval::Detuning(0.5),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_initial > 0.0) || !self.dt_initial.is_finite() {
            return Err(invalid("dt_initial", "must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(invalid("rel_tol", "must be positive"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(invalid("abs_tol", "must be positive"));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be positive"));
        }
        let spacing = match self.sample_interval {
            SampleInterval::Detuning(x) | SampleInterval::Time(x) => x,
        };
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(invalid("sample_interval", "must be positive"));
        }
        Ok(())
    }
}

/// Reduced record of the state at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub delta: f64,
    pub probe: Complex64,
    pub population_sum: f64,
    pub min_population: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub rejected_steps: usize,
    /// Smallest population seen on any accepted step.
    pub min_population: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: EnsembleState,
    pub diagnostics: Diagnostics,
}

/// Populations below this value trigger a diagnostic warning.
pub const NEGATIVE_POPULATION_WARNING: f64 = -1e-3;

const MAX_NONFINITE_RETRIES: usize = 60;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI controller constants.
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

struct Stages {
    k: [EnsembleState; 7],
    tmp: EnsembleState,
    next: EnsembleState,
    err: EnsembleState,
}

impl Stages {
    fn new(model: &Model) -> Self {
        let z = EnsembleState::zeros(model.grid());
        Self {
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            next: z.clone(),
            err: z,
        }
    }
}

fn eval(model: &Model, mode: ProbeMode, state: &EnsembleState, delta: f64, out: &mut EnsembleState) {
    match mode {
        ProbeMode::FullStiff => model.rhs_into(state, delta, out),
        ProbeMode::AdiabaticProbe => model.rhs_adiabatic_into(state, delta, out),
    }
}

fn slave_probe(model: &Model, mode: ProbeMode, state: &mut EnsembleState) {
    if mode == ProbeMode::AdiabaticProbe {
        state.probe = model
            .adiabatic_probe(&state.coherences)
            .expect("state shape checked on entry");
    }
}

/// Classical RK4 step into `stages.next`, with δ evaluated at stage times.
fn rk4_into(
    model: &Model,
    mode: ProbeMode,
    y: &EnsembleState,
    delta_of_t: &dyn Fn(f64) -> f64,
    t: f64,
    dt: f64,
    s: &mut Stages,
) {
    let [k1, k2, k3, k4, ..] = &mut s.k;
    eval(model, mode, y, delta_of_t(t), k1);
    s.tmp.set_combination(y, dt, &[(0.5, k1)]);
    eval(model, mode, &s.tmp, delta_of_t(t + 0.5 * dt), k2);
    s.tmp.set_combination(y, dt, &[(0.5, k2)]);
    eval(model, mode, &s.tmp, delta_of_t(t + 0.5 * dt), k3);
    s.tmp.set_combination(y, dt, &[(1.0, k3)]);
    eval(model, mode, &s.tmp, delta_of_t(t + dt), k4);
    s.next.set_combination(
        y,
        dt,
        &[(1.0 / 6.0, k1), (1.0 / 3.0, k2), (1.0 / 3.0, k3), (1.0 / 6.0, k4)],
    );
    slave_probe(model, mode, &mut s.next);
}

/// One classical fourth-order Runge-Kutta step of size `dt` from time `t`.
pub fn step_fixed(
    model: &Model,
    state: &EnsembleState,
    delta_of_t: impl Fn(f64) -> f64,
    t: f64,
    dt: f64,
    mode: ProbeMode,
) -> Result<EnsembleState> {
    state.check_shape(model.grid())?;
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    let mut s = Stages::new(model);
    rk4_into(model, mode, state, &delta_of_t, t, dt, &mut s);
    if !s.next.is_finite() {
        return Err(Error::NonFiniteState(t + dt));
    }
    Ok(s.next)
}

/// Dormand-Prince step; `k[0]` must hold f(t, y). Returns the scaled error norm.
fn dopri_into(
    model: &Model,
    mode: ProbeMode,
    y: &EnsembleState,
    delta_of_t: &dyn Fn(f64) -> f64,
    t: f64,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
    s: &mut Stages,
) -> f64 {
    let [k1, k2, k3, k4, k5, k6, k7] = &mut s.k;
    s.tmp.set_combination(y, h, &[(A21, k1)]);
    eval(model, mode, &s.tmp, delta_of_t(t + C2 * h), k2);
    s.tmp.set_combination(y, h, &[(A31, k1), (A32, k2)]);
    eval(model, mode, &s.tmp, delta_of_t(t + C3 * h), k3);
    s.tmp.set_combination(y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
    eval(model, mode, &s.tmp, delta_of_t(t + C4 * h), k4);
    s.tmp
        .set_combination(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
    eval(model, mode, &s.tmp, delta_of_t(t + C5 * h), k5);
    s.tmp.set_combination(
        y,
        h,
        &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
    );
    eval(model, mode, &s.tmp, delta_of_t(t + h), k6);
    s.next.set_combination(
        y,
        h,
        &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)],
    );
    eval(model, mode, &s.next, delta_of_t(t + h), k7);

    s.err.set_sum(
        h,
        &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)],
    );
    error_norm(y, &s.next, &s.err, rel_tol, abs_tol, mode)
}

fn error_norm(
    y0: &EnsembleState,
    y1: &EnsembleState,
    err: &EnsembleState,
    rel_tol: f64,
    abs_tol: f64,
    mode: ProbeMode,
) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut acc = |e: f64, a: f64, b: f64| {
        let sc = abs_tol + rel_tol * a.abs().max(b.abs());
        let r = e / sc;
        sum += r * r;
        n += 1;
    };
    for i in 0..err.populations.len() {
        acc(err.populations[i], y0.populations[i], y1.populations[i]);
    }
    for i in 0..err.coherences.len() {
        let (e, a, b) = (err.coherences[i], y0.coherences[i], y1.coherences[i]);
        acc(e.re, a.re, b.re);
        acc(e.im, a.im, b.im);
    }
    if mode == ProbeMode::FullStiff {
        acc(err.probe.re, y0.probe.re, y1.probe.re);
        acc(err.probe.im, y0.probe.im, y1.probe.im);
    }
    (sum / n as f64).sqrt()
}

/// Sample times covering `[0, duration]`, both ends included.
fn sample_times(profile: &impl DetuningProfile, interval: SampleInterval) -> Result<Vec<f64>> {
    let duration = profile.duration();
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(invalid("duration", "must be positive and finite"));
    }
    let dt = match interval {
        SampleInterval::Time(dt) => dt,
        SampleInterval::Detuning(dd) => {
            let rate = profile.sweep_rate().abs();
            if rate == 0.0 {
                return Err(invalid(
                    "sample_interval",
                    "detuning spacing requires a chirped profile",
                ));
            }
            dd / rate
        }
    };
    let ratio = duration / dt;
    let whole = ratio.round();
    let n = if (ratio - whole).abs() < 1e-9 * ratio.max(1.0) {
        whole as usize
    } else {
        ratio.floor() as usize + 1
    };
    let mut times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    times.push(duration);
    Ok(times)
}

fn record(profile: &impl DetuningProfile, t: f64, y: &EnsembleState) -> Sample {
    Sample {
        t,
        delta: profile.delta_at(t),
        probe: y.probe,
        population_sum: y.population_sum(),
        min_population: y.min_population(),
    }
}

/// Integrates the ladder equations over the full duration of `profile`.
pub fn integrate(
    model: &Model,
    state0: &EnsembleState,
    profile: &impl DetuningProfile,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    state0.check_shape(model.grid())?;
    if !state0.is_finite() {
        return Err(Error::NonFiniteState(0.0));
    }
    let times = sample_times(profile, opts.sample_interval)?;
    let delta_of_t = |t: f64| profile.delta_at(t);

    let mut y = state0.clone();
    slave_probe(model, opts.mode, &mut y);
    let mut diag = Diagnostics {
        min_population: y.min_population(),
        ..Default::default()
    };
    let mut samples = Vec::with_capacity(times.len());
    samples.push(record(profile, 0.0, &y));

    let mut s = Stages::new(model);
    let mut t = 0.0;
    match opts.method {
        Method::FixedRk4 => {
            for &target in &times[1..] {
                let span = target - t;
                let n = ((span / opts.dt_initial) - 1e-9).ceil().max(1.0) as usize;
                let h = span / n as f64;
                for i in 0..n {
                    let t0 = t + i as f64 * h;
                    rk4_into(model, opts.mode, &y, &delta_of_t, t0, h, &mut s);
                    std::mem::swap(&mut y, &mut s.next);
                    diag.steps += 1;
                    if !y.is_finite() {
                        return Err(Error::NonFiniteState(t0 + h));
                    }
                    if diag.steps > opts.max_steps {
                        return Err(Error::StepLimitExceeded(opts.max_steps));
                    }
                    diag.min_population = diag.min_population.min(y.min_population());
                }
                t = target;
                samples.push(record(profile, t, &y));
            }
        }
        Method::AdaptiveEmbedded => {
            let duration = profile.duration();
            let h_floor = 1e-14 * duration.max(1.0);
            let mut h = opts.dt_initial.min(duration);
            let mut err_prev: f64 = 1e-4;
            let mut nonfinite = 0usize;
            eval(model, opts.mode, &y, delta_of_t(0.0), &mut s.k[0]);
            let mut next = 1;
            while next < times.len() {
                let target = times[next];
                let remaining = target - t;
                let landing = h >= remaining;
                let h_try = if landing { remaining } else { h };
                let err = dopri_into(
                    model,
                    opts.mode,
                    &y,
                    &delta_of_t,
                    t,
                    h_try,
                    opts.rel_tol,
                    opts.abs_tol,
                    &mut s,
                );
                diag.steps += 1;
                if diag.steps > opts.max_steps {
                    return Err(Error::StepLimitExceeded(opts.max_steps));
                }
                if !err.is_finite() || !s.next.is_finite() {
                    nonfinite += 1;
                    if nonfinite > MAX_NONFINITE_RETRIES {
                        return Err(Error::NonFiniteState(t));
                    }
                    diag.rejected_steps += 1;
                    h = h_try * FAC_MIN;
                } else if err <= 1.0 {
                    nonfinite = 0;
                    t = if landing { target } else { t + h_try };
                    std::mem::swap(&mut y, &mut s.next);
                    slave_probe(model, opts.mode, &mut y);
                    s.k.swap(0, 6);
                    diag.min_population = diag.min_population.min(y.min_population());
                    let fac = (SAFETY * err.max(1e-10).powf(-PI_ALPHA) * err_prev.powf(PI_BETA))
                        .clamp(FAC_MIN, FAC_MAX);
                    err_prev = err.max(1e-4);
                    let proposal = h_try * fac;
                    // a step shortened to land on a sample says little about h
                    h = if landing { proposal.max(h) } else { proposal };
                    if landing {
                        samples.push(record(profile, t, &y));
                        next += 1;
                    }
                } else {
                    diag.rejected_steps += 1;
                    h = h_try * (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
                }
                if h < h_floor {
                    return Err(Error::StepUnderflow { t, dt: h });
                }
            }
        }
    }

    if diag.min_population < NEGATIVE_POPULATION_WARNING {
        diag.warnings.push(format!(
            "population dipped to {:.3e}; first-order truncation is strained",
            diag.min_population
        ));
    }
    Ok(Trajectory {
        samples,
        final_state: y,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, MomentumGrid};
    use crate::schedule::{ChirpSchedule, ConstantDetuning};

    fn relaxation_model() -> Model {
        let grid = MomentumGrid::new(8).unwrap();
        let params = ModelParams {
            beta: Complex64::new(0.0, 0.0),
            kappa: 10.0,
            sigma_p: 1.0,
            ..Default::default()
        };
        Model::new(grid, params).unwrap()
    }

    #[test]
    fn sample_times_hit_both_ends() {
        let s = ChirpSchedule::new(10.0, -10.0, 2.0).unwrap();
        let t = sample_times(&s, SampleInterval::Detuning(0.5)).unwrap();
        assert_eq!(t.len(), 41);
        assert_eq!(*t.last().unwrap(), 10.0);
        let t = sample_times(&s, SampleInterval::Time(3.0)).unwrap();
        assert_eq!(t, vec![0.0, 3.0, 6.0, 9.0, 10.0]);
        let c = ConstantDetuning {
            delta: 0.0,
            duration: 1.0,
        };
        assert!(sample_times(&c, SampleInterval::Detuning(0.1)).is_err());
    }

    #[test]
    fn zero_rhs_leaves_state_unchanged() {
        let model = relaxation_model();
        let mut y = model.thermal_state();
        y.probe = model.params().a_in;
        let next = step_fixed(&model, &y, |_| 0.0, 0.0, 0.1, ProbeMode::FullStiff).unwrap();
        assert_eq!(next, y);
    }

    #[test]
    fn step_fixed_rejects_nonpositive_dt() {
        let model = relaxation_model();
        let y = model.thermal_state();
        assert!(step_fixed(&model, &y, |_| 0.0, 0.0, 0.0, ProbeMode::FullStiff).is_err());
    }

    #[test]
    fn step_limit_is_enforced() {
        let model = relaxation_model();
        let opts = SolverOptions {
            mode: ProbeMode::FullStiff,
            max_steps: 3,
            sample_interval: SampleInterval::Time(1.0),
            ..Default::default()
        };
        let profile = ConstantDetuning {
            delta: 0.0,
            duration: 100.0,
        };
        let err = integrate(&model, &model.thermal_state(), &profile, &opts).unwrap_err();
        assert_eq!(err, Error::StepLimitExceeded(3));
    }

    #[test]
    fn non_finite_initial_state_is_rejected() {
        let model = relaxation_model();
        let mut y = model.thermal_state();
        y.populations[0] = f64::NAN;
        let profile = ConstantDetuning {
            delta: 0.0,
            duration: 1.0,
        };
        let opts = SolverOptions {
            sample_interval: SampleInterval::Time(0.5),
            ..Default::default()
        };
        assert!(matches!(
            integrate(&model, &y, &profile, &opts),
            Err(Error::NonFiniteState(_))
        ));
    }

    #[test]
    fn fixed_rk4_blows_up_when_unstable() {
        let model = relaxation_model().with_params(|p| p.kappa = 1e4).unwrap();
        let opts = SolverOptions {
            mode: ProbeMode::FullStiff,
            method: Method::FixedRk4,
            dt_initial: 0.1,
            sample_interval: SampleInterval::Time(1000.0),
            ..Default::default()
        };
        let profile = ConstantDetuning {
            delta: 0.0,
            duration: 1000.0,
        };
        let mut y = model.thermal_state();
        y.probe = Complex64::new(0.0, 0.0);
        assert!(matches!(
            integrate(&model, &y, &profile, &opts),
            Err(Error::NonFiniteState(_))
        ));
    }
}
