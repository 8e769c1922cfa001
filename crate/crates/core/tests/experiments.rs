use collective_recoil::experiments::{
    hysteresis_map, power_sweep, static_spectrum, sweep_pair, thermalization_protocol,
    SteadyStateOptions, ThermalizationOptions,
};
use collective_recoil::integrator::{SampleInterval, SolverOptions};
use collective_recoil::{chirped_sweep, ChirpSchedule, Error, Model, ModelParams, MomentumGrid};
use num_complex::Complex64;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn weak_model() -> Model {
    let params = ModelParams {
        n_atoms: 3000.0,
        gamma_pop: 1.0,
        gamma_coh: 1.0,
        a_in: c(0.01),
        ..Default::default()
    };
    Model::new(MomentumGrid::new(32).unwrap(), params).unwrap()
}

fn strong_model() -> Model {
    let params = ModelParams {
        n_atoms: 2.9e5,
        gamma_pop: 0.05,
        gamma_coh: 3.0,
        a_in: c(0.1),
        ..Default::default()
    };
    Model::new(MomentumGrid::new(48).unwrap(), params).unwrap()
}

fn coarse() -> SolverOptions {
    SolverOptions {
        sample_interval: SampleInterval::Detuning(0.25),
        ..Default::default()
    }
}

#[test]
fn uncoupled_sweeps_are_flat_and_symmetric() {
    let m = weak_model().with_params(|p| p.beta = c(0.0)).unwrap();
    let pair = sweep_pair(&m, (-20.0, 20.0), 5.0, &coarse()).unwrap();
    assert!(pair.minus.gains.iter().all(|&g| g == 1.0));
    assert!(pair.plus.gains.iter().all(|&g| g == 1.0));
    assert!(pair.minus.flat && pair.plus.flat);
    assert_eq!(pair.point.ratio, 1.0);
    assert_eq!(pair.point.peak_shift, 0.0);

    let pts = hysteresis_map(&m, (-20.0, 20.0), &[1.0, 10.0], &coarse(), 2).unwrap();
    assert!(pts.iter().all(|p| p.ratio == 1.0));
}

#[test]
fn hysteresis_map_wants_ascending_rates() {
    let err = hysteresis_map(&weak_model(), (-10.0, 10.0), &[3.0, 1.0], &coarse(), 1).unwrap_err();
    assert!(matches!(err, Error::Validation { field: "rates", .. }));
}

#[test]
fn chirped_sweep_grid_runs_in_chirp_direction() {
    let sched = ChirpSchedule::new(10.0, -10.0, 4.0).unwrap();
    let s = chirped_sweep(&weak_model(), &sched, &coarse()).unwrap();
    assert!(s.deltas.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(s.direction(), -1.0);
    assert!(s.gains.iter().all(|g| g.is_finite() && *g > 0.0));
}

#[test]
fn power_sweep_rejects_zero_input() {
    let sched = ChirpSchedule::downward(-10.0, 10.0, 4.0).unwrap();
    let err = power_sweep(&weak_model(), &[0.1, 0.0], &sched, &coarse(), 1).unwrap_err();
    assert_eq!(err, Error::ZeroProbeInput);
}

#[test]
fn weak_probe_ratio_does_not_depend_on_probe_power() {
    let sched = ChirpSchedule::downward(-40.0, 0.0, 10.0).unwrap();
    let pts = power_sweep(&weak_model(), &[1e-4, 1e-3], &sched, &coarse(), 2).unwrap();
    assert!((pts[0].ratio - pts[1].ratio).abs() < 1e-6, "{pts:?}");
    assert!((pts[0].g_minus - pts[1].g_minus).abs() < 1e-6 * pts[0].g_minus);
}

#[test]
fn fast_chirp_ratio_stays_above_one_across_probe_powers() {
    let sched = ChirpSchedule::downward(-60.0, 0.0, 100.0).unwrap();
    let pts = power_sweep(&strong_model(), &[0.01, 0.1, 0.3], &sched, &coarse(), 3).unwrap();
    for p in &pts {
        assert!(p.ratio > 1.0, "{p:?}");
    }
}

#[test]
fn directions_converge_as_chirp_slows() {
    let m = weak_model().with_params(|p| p.a_in = c(0.3)).unwrap();
    let mut last = f64::INFINITY;
    for rate in [10.0, 1.0, 0.1] {
        let pair = sweep_pair(&m, (-30.0, 0.0), rate, &coarse()).unwrap();
        let mut plus = pair.plus.gains.clone();
        plus.reverse();
        let n = plus.len() as f64;
        let rms = (pair
            .minus
            .gains
            .iter()
            .zip(&plus)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        assert!(rms < last, "rate {rate}: rms {rms} vs {last}");
        last = rms;
    }
}

#[test]
fn equal_probe_powers_give_no_transient() {
    let topts = ThermalizationOptions {
        delta: Some(-28.0),
        t_strong: Some(20.0),
        t_record: Some(40.0),
        ..Default::default()
    };
    let m = weak_model().with_params(|p| p.gamma_pop = 0.1).unwrap();
    let err = thermalization_protocol(&m, 0.01, 0.01, &topts, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::FitDegenerate(_)), "{err:?}");
}

#[test]
fn weak_static_spectrum_is_antisymmetric_in_log_gain() {
    let deltas: Vec<f64> = (-8..=8).map(|k| 4.0 * k as f64).collect();
    let s = static_spectrum(
        &weak_model(),
        &deltas,
        &SteadyStateOptions::default(),
        &SolverOptions::default(),
        4,
    )
    .unwrap();
    let n = deltas.len();
    let scale = s.gains.iter().map(|g| g.ln().abs()).fold(0.0, f64::max);
    for i in 0..n {
        let (a, b) = (s.gains[i].ln(), s.gains[n - 1 - i].ln());
        assert!((a + b).abs() <= 0.02 * scale, "delta {}: {a} {b}", deltas[i]);
    }
    assert!(s.peak_delta < 0.0);
    let absorption = s.gains.iter().copied().fold(f64::INFINITY, f64::min);
    let at = s.gains.iter().position(|&g| g == absorption).unwrap();
    assert!(deltas[at] > 0.0);
}

#[test]
fn static_spectrum_ignores_settle_window() {
    let deltas = [-28.0, -12.0, 20.0];
    let run = |window| {
        let sopts = SteadyStateOptions {
            window: Some(window),
            tolerance: 1e-8,
        };
        static_spectrum(&weak_model(), &deltas, &sopts, &SolverOptions::default(), 1).unwrap()
    };
    let a = run(2.0);
    let b = run(4.0);
    for (x, y) in a.gains.iter().zip(&b.gains) {
        assert!((x - y).abs() < 1e-8 * x, "{x} vs {y}");
    }
}
