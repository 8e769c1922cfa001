use collective_recoil::integrator::{integrate, step_fixed, Method, ProbeMode, SampleInterval, SolverOptions};
use collective_recoil::{ChirpSchedule, ConstantDetuning, EnsembleState, Model, ModelParams, MomentumGrid};
use num_complex::Complex64;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn relaxation_model(kappa: f64) -> Model {
    let params = ModelParams {
        beta: c(0.0),
        kappa,
        a_in: c(1.0),
        ..Default::default()
    };
    Model::new(MomentumGrid::new(32).unwrap(), params).unwrap()
}

fn empty_probe_state(model: &Model) -> EnsembleState {
    let mut s = model.thermal_state();
    s.probe = c(0.0);
    s
}

fn rk4_relaxation_error(dt: f64) -> f64 {
    let kappa = 10.0;
    let model = relaxation_model(kappa);
    let mut state = empty_probe_state(&model);
    let t_end = 0.5;
    let n = (t_end / dt).round() as usize;
    for k in 0..n {
        state = step_fixed(&model, &state, |_| 0.0, k as f64 * dt, dt, ProbeMode::FullStiff).unwrap();
    }
    let exact = 1.0 - (-kappa * t_end / 2.0).exp();
    (state.probe - c(exact)).norm()
}

#[test]
fn rk4_error_drops_sixteenfold_per_halving() {
    let ratio = rk4_relaxation_error(0.02) / rk4_relaxation_error(0.01);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rk4_step_matches_hand_evaluation() {
    // Three populations, two coherences, probe integrated directly.
    let grid = MomentumGrid::with_edge_tolerance(1, 1.0).unwrap();
    let params = ModelParams {
        beta: Complex64::new(0.3, 0.1),
        n_atoms: 2.0,
        kappa: 0.5,
        gamma_pop: 0.2,
        gamma_coh: 0.7,
        a_in: Complex64::new(0.4, -0.2),
        sigma_p: 1.0,
    };
    let model = Model::new(grid, params).unwrap();
    let thermal = model.thermal().to_vec();
    let state = EnsembleState {
        populations: vec![0.2, 0.5, 0.3],
        coherences: vec![Complex64::new(0.05, 0.02), Complex64::new(-0.01, 0.03)],
        probe: Complex64::new(0.6, 0.1),
    };
    let delta = 1.3;
    let f = |y: &EnsembleState| -> EnsembleState {
        let i = Complex64::i();
        let b = params.beta;
        let a = y.probe;
        let n = y.populations.len();
        let mut out = EnsembleState::zeros(&grid);
        for p in 0..n {
            let lower = if p > 0 { y.coherences[p - 1] } else { c(0.0) };
            let upper = if p + 1 < n { y.coherences[p] } else { c(0.0) };
            let z = -i * b.conj() * a * (lower - upper);
            out.populations[p] = 2.0 * z.re - params.gamma_pop * (y.populations[p] - thermal[p]);
        }
        for j in 0..y.coherences.len() {
            let k = -4.0 * (2.0 * grid.momentum(j) as f64 + 1.0);
            out.coherences[j] = i * (k - delta + i * params.gamma_coh) * y.coherences[j]
                - i * b * a.conj() * (y.populations[j + 1] - y.populations[j]);
        }
        let sum: Complex64 = y.coherences.iter().map(|e| e.conj()).sum();
        out.probe = i * b * params.n_atoms * sum - params.kappa / 2.0 * (a - params.a_in);
        out
    };
    let axpy = |y: &EnsembleState, h: f64, k: &EnsembleState| -> EnsembleState {
        EnsembleState {
            populations: y.populations.iter().zip(&k.populations).map(|(a, b)| a + h * b).collect(),
            coherences: y.coherences.iter().zip(&k.coherences).map(|(a, b)| a + h * b).collect(),
            probe: y.probe + h * k.probe,
        }
    };
    let dt = 0.05;
    let k1 = f(&state);
    let k2 = f(&axpy(&state, dt / 2.0, &k1));
    let k3 = f(&axpy(&state, dt / 2.0, &k2));
    let k4 = f(&axpy(&state, dt, &k3));
    let mut expected = state.clone();
    for (w, k) in [(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)] {
        expected = axpy(&expected, dt * w / 6.0, k);
    }
    let got = step_fixed(&model, &state, |_| delta, 0.0, dt, ProbeMode::FullStiff).unwrap();
    for (a, b) in got.populations.iter().zip(&expected.populations) {
        assert!((a - b).abs() < 1e-14, "{a} vs {b}");
    }
    for (a, b) in got.coherences.iter().zip(&expected.coherences) {
        assert!((a - b).norm() < 1e-14, "{a} vs {b}");
    }
    assert!((got.probe - expected.probe).norm() < 1e-14);
}

#[test]
fn adaptive_relaxation_matches_closed_form() {
    let kappa = 10.0;
    let model = relaxation_model(kappa);
    let profile = ConstantDetuning {
        delta: 0.0,
        duration: 2.0,
    };
    let opts = SolverOptions {
        mode: ProbeMode::FullStiff,
        sample_interval: SampleInterval::Time(0.01),
        ..Default::default()
    };
    let traj = integrate(&model, &empty_probe_state(&model), &profile, &opts).unwrap();
    for s in traj.samples.iter().skip(1) {
        let exact = 1.0 - (-kappa * s.t / 2.0).exp();
        assert!((s.probe.re - exact).abs() / exact < 1e-6, "t = {}", s.t);
    }
}

#[test]
fn fixed_point_stays_put() {
    let params = ModelParams {
        a_in: c(0.0),
        n_atoms: 100.0,
        ..Default::default()
    };
    let model = Model::new(MomentumGrid::new(24).unwrap(), params).unwrap();
    let mut state = model.thermal_state();
    state.probe = c(0.0);
    let profile = ChirpSchedule::new(20.0, -20.0, 4.0).unwrap();
    let opts = SolverOptions {
        mode: ProbeMode::FullStiff,
        ..Default::default()
    };
    let traj = integrate(&model, &state, &profile, &opts).unwrap();
    assert_eq!(traj.final_state, state);
}

fn strong_model(half_width: usize) -> Model {
    let params = ModelParams {
        n_atoms: 2.0e5,
        gamma_pop: 0.05,
        gamma_coh: 1.0,
        a_in: c(1.0),
        ..Default::default()
    };
    Model::new(MomentumGrid::new(half_width).unwrap(), params).unwrap()
}

#[test]
fn populations_stay_normalized_through_a_strong_sweep() {
    let model = strong_model(48);
    let mut state = model.thermal_state();
    state.probe = model.adiabatic_probe(&state.coherences).unwrap();
    let sched = ChirpSchedule::new(60.0, -60.0, 5.0).unwrap();
    let traj = integrate(&model, &state, &sched, &SolverOptions::default()).unwrap();
    for s in &traj.samples {
        assert!((s.population_sum - 1.0).abs() < 1e-8, "sum {}", s.population_sum);
    }
    assert!(traj.diagnostics.steps > 0);
}

#[test]
fn recorded_detuning_follows_schedule() {
    let model = strong_model(32);
    let mut state = model.thermal_state();
    state.probe = model.adiabatic_probe(&state.coherences).unwrap();
    let sched = ChirpSchedule::new(-30.0, 10.0, 7.0).unwrap();
    let opts = SolverOptions {
        sample_interval: SampleInterval::Detuning(0.3),
        ..Default::default()
    };
    let traj = integrate(&model, &state, &sched, &opts).unwrap();
    let mut last = f64::NEG_INFINITY;
    for s in &traj.samples {
        assert!(s.t > last);
        last = s.t;
        assert!((s.delta - (-30.0 + 7.0 * s.t)).abs() < 1e-12);
    }
    assert!((traj.samples.last().unwrap().delta - 10.0).abs() < 1e-12);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let model = strong_model(32);
    let mut state = model.thermal_state();
    state.probe = model.adiabatic_probe(&state.coherences).unwrap();
    let sched = ChirpSchedule::new(30.0, -30.0, 3.0).unwrap();
    for method in [Method::AdaptiveEmbedded, Method::FixedRk4] {
        let opts = SolverOptions {
            method,
            dt_initial: 2e-3,
            ..Default::default()
        };
        let a = integrate(&model, &state, &sched, &opts).unwrap();
        let b = integrate(&model, &state, &sched, &opts).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.final_state, b.final_state);
    }
}

#[test]
fn fixed_and_adaptive_methods_agree() {
    let model = strong_model(24);
    let mut state = model.thermal_state();
    state.probe = model.adiabatic_probe(&state.coherences).unwrap();
    let sched = ChirpSchedule::new(20.0, -40.0, 6.0).unwrap();
    let adaptive = integrate(&model, &state, &sched, &SolverOptions::default()).unwrap();
    let fixed = integrate(
        &model,
        &state,
        &sched,
        &SolverOptions {
            method: Method::FixedRk4,
            dt_initial: 1e-3,
            ..Default::default()
        },
    )
    .unwrap();
    for (a, b) in adaptive.samples.iter().zip(&fixed.samples) {
        assert!((a.probe - b.probe).norm() < 1e-6 * a.probe.norm().max(1.0));
    }
}

#[test]
fn full_and_adiabatic_probe_agree_at_large_kappa() {
    let grid = MomentumGrid::new(16).unwrap();
    let kappa = 1e3 * 4.0 * 33.0;
    let params = ModelParams {
        n_atoms: 3e4 * kappa / 1e4,
        kappa,
        gamma_pop: 0.1,
        gamma_coh: 1.0,
        a_in: c(0.3),
        sigma_p: 2.0,
        ..Default::default()
    };
    let model = Model::new(grid, params).unwrap();
    let sched = ChirpSchedule::new(30.0, -30.0, 4.0).unwrap();
    let mut state = model.thermal_state();
    state.probe = model.adiabatic_probe(&state.coherences).unwrap();
    let run = |mode| {
        let opts = SolverOptions {
            mode,
            dt_initial: 1e-6,
            ..Default::default()
        };
        integrate(&model, &state, &sched, &opts).unwrap()
    };
    let full = run(ProbeMode::FullStiff);
    let slaved = run(ProbeMode::AdiabaticProbe);
    let n = full.samples.len() as f64;
    let rms = (full
        .samples
        .iter()
        .zip(&slaved.samples)
        .map(|(a, b)| {
            let (ga, gb) = (a.probe.norm_sqr(), b.probe.norm_sqr());
            ((ga - gb) / gb).powi(2)
        })
        .sum::<f64>()
        / n)
        .sqrt();
    assert!(rms < 5e-3, "rms {rms}");
}
