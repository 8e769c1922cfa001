//! Hysteresis ratio against probe amplitude at a fixed chirp rate.

use collective_recoil::{power_sweep, ChirpSchedule, Model, ModelParams, MomentumGrid, SampleInterval, SolverOptions};
use num_complex::Complex64;

fn main() -> collective_recoil::Result<()> {
    let params = ModelParams {
        n_atoms: 2.9e5,
        gamma_pop: 0.05,
        gamma_coh: 3.0,
        a_in: Complex64::new(0.1, 0.0),
        ..Default::default()
    };
    let model = Model::new(MomentumGrid::new(48)?, params)?;
    let opts = SolverOptions {
        sample_interval: SampleInterval::Detuning(0.25),
        ..Default::default()
    };
    let sched = ChirpSchedule::downward(-60.0, 0.0, 100.0)?;
    let amplitudes = [0.01, 0.03, 0.1, 0.3, 1.0];

    println!("{:>8} {:>10} {:>10} {:>8}", "a_in", "g_minus", "g_plus", "ratio");
    for p in power_sweep(&model, &amplitudes, &sched, &opts, 4)? {
        println!("{:>8} {:>10.4} {:>10.4} {:>8.4}", p.amplitude, p.g_minus, p.g_plus, p.ratio);
    }
    Ok(())
}
