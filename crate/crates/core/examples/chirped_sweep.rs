//! One chirp rate, both directions. The downward chirp rides the gain feature
//! and peaks higher than the upward one.

use collective_recoil::experiments::sweep_pair;
use collective_recoil::{Model, ModelParams, MomentumGrid, SampleInterval, SolverOptions};
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

    let pair = sweep_pair(&model, (-60.0, 0.0), 100.0, &opts)?;
    println!("downward: peak {:.4} at {:.2}", pair.minus.peak_gain, pair.minus.peak_delta);
    println!("upward:   peak {:.4} at {:.2}", pair.plus.peak_gain, pair.plus.peak_delta);
    println!("g_minus/g_plus = {:.4}", pair.point.ratio);
    println!("steps {} / {}", pair.diagnostics[0].steps, pair.diagnostics[1].steps);
    Ok(())
}
