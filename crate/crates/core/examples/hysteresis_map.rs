//! Peak-gain ratio of the two chirp directions across chirp rates.

use collective_recoil::{hysteresis_map, Model, ModelParams, MomentumGrid, SampleInterval, SolverOptions};
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
    let rates = [1.0, 3.0, 10.0, 30.0, 100.0, 300.0];
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());

    println!("{:>8} {:>10} {:>10} {:>8} {:>8}", "rate", "g_minus", "g_plus", "ratio", "shift");
    for p in hysteresis_map(&model, (-60.0, 0.0), &rates, &opts, jobs)? {
        println!(
            "{:>8} {:>10.4} {:>10.4} {:>8.4} {:>8.2}",
            p.rate, p.g_minus, p.g_plus, p.ratio, p.peak_shift
        );
    }
    Ok(())
}
