//! Weak-probe gain spectrum: closed-form linear response against the
//! integrated steady state at a few detunings.

use collective_recoil::experiments::SteadyStateOptions;
use collective_recoil::{linear_response_spectrum, static_spectrum, Model, ModelParams, MomentumGrid, SolverOptions};
use num_complex::Complex64;

fn main() -> collective_recoil::Result<()> {
    let params = ModelParams {
        n_atoms: 3000.0,
        gamma_pop: 1.0,
        gamma_coh: 1.0,
        a_in: Complex64::new(0.01, 0.0),
        ..Default::default()
    };
    let model = Model::new(MomentumGrid::new(32)?, params)?;
    let deltas: Vec<f64> = (-5..=5).map(|k| 8.0 * k as f64).collect();

    let oracle = linear_response_spectrum(&model, &deltas)?;
    let integrated = static_spectrum(&model, &deltas, &SteadyStateOptions::default(), &SolverOptions::default(), 4)?;

    println!("{:>8} {:>12} {:>12}", "delta", "oracle", "integrated");
    for (o, g) in oracle.iter().zip(&integrated.gains) {
        println!("{:>8.1} {:>12.6} {:>12.6}", o.delta, o.gain, g);
    }
    println!("gain peak at delta = {}", integrated.peak_delta);
    Ok(())
}
