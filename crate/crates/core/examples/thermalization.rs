//! Deplete the ladder with a strong probe, switch to a weak one and fit the
//! gain recovery. Then repeat across pump detunings with rates scaled as
//! `|Δ|^-3/2` and fit the thermalization time.

use collective_recoil::experiments::{thermalization_scaling, ThermalizationOptions};
use collective_recoil::model::RateReference;
use collective_recoil::{thermalization_protocol, Model, ModelParams, MomentumGrid, SolverOptions};
use num_complex::Complex64;

fn main() -> collective_recoil::Result<()> {
    let params = ModelParams {
        n_atoms: 3000.0,
        gamma_pop: 0.05,
        gamma_coh: 1.0,
        a_in: Complex64::new(0.01, 0.0),
        ..Default::default()
    };
    let model = Model::new(MomentumGrid::new(32)?, params)?;
    let topts = ThermalizationOptions::default();
    let opts = SolverOptions::default();

    let rec = thermalization_protocol(&model, 1.0, 0.01, &topts, &opts)?;
    let tau = rec.fit.get("tau").expect("relaxation fit has tau");
    println!("delta {:.2}: fitted rate {:.5} (configured 0.05), tau {:.2} +/- {:.2}", rec.delta, rec.rate, tau.value, tau.stderr);

    let reference = RateReference {
        delta_pump: 10.0,
        gamma_pop: 0.2,
        gamma_coh: 5.0,
    };
    let detunings = [10.0, 14.0, 20.0, 28.0, 40.0, 56.0];
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let scaling = thermalization_scaling(&model, &detunings, &reference, 1.0, 0.01, &topts, &opts, jobs)?;
    for p in &scaling.points {
        println!("pump detuning {:>5}: gamma_pop {:.5}, thermalization time {:.2}", p.delta_pump, p.gamma_pop, p.thermalization_time);
    }
    let e = scaling.fit.get("exponent").expect("power-law fit has an exponent");
    println!("exponent {:.3} +/- {:.3}", e.value, e.stderr);
    Ok(())
}
