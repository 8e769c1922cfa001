//! Laboratory parameters to recoil units and back.

use collective_recoil::units::{to_dimensionless, to_physical, PhysicalConfig, PhysicalUnits};
use collective_recoil::DetuningProfile;
use num_complex::Complex64;

fn main() -> collective_recoil::Result<()> {
    // 85Rb on the D2 line, counter-propagating pump and probe.
    let units = PhysicalUnits {
        recoil_frequency_hz: 3770.0,
        wavelength_m: 780.241e-9,
        atom_mass_kg: 1.443160648e-25,
        photon_momentum_step: 2.0,
    };
    let lab = PhysicalConfig {
        beta_per_s: Complex64::new(2.3687e4, 0.0),
        n_atoms: 2.9e5,
        kappa_per_s: 2.3687e8,
        gamma_pop_per_s: 1.184e3,
        gamma_coh_per_s: 7.106e4,
        a_in: Complex64::new(0.1, 0.0),
        temperature_k: 20e-6,
        delta_start_hz: 0.0,
        delta_end_hz: -226.2e3,
        scan_rate_mhz_per_ms: 8.93,
    };

    let (params, schedule) = to_dimensionless(&lab, &units)?;
    println!("omega_r = {:.1} rad/s", units.omega_r());
    println!("{params:#?}");
    println!(
        "chirp {:.2} -> {:.2} at {:.3} per recoil time ({:.3} recoil times)",
        schedule.delta_start(),
        schedule.delta_end(),
        schedule.rate(),
        schedule.duration()
    );

    let back = to_physical(&params, &schedule, &units)?;
    println!("round trip: T = {:.3e} K, scan rate {:.4} MHz/ms", back.temperature_k, back.scan_rate_mhz_per_ms);
    Ok(())
}
