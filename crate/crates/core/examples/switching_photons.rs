use collective_recoil::switching_metrics;

fn main() -> collective_recoil::Result<()> {
    let m = switching_metrics(20e-12, 0.3e-6, 780e-9, 100e-6)?;
    println!("photons per switching event: {:.2}", m.photon_number);
    println!("photons per diffraction area: {:.3e}", m.photons_per_diffraction_area);
    Ok(())
}
