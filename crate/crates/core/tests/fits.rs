use collective_recoil::{fit_exponential_relaxation, fit_power_law};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

#[test]
fn relaxation_fit_covers_truth_under_additive_noise() {
    let tau = 2.0;
    let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
    let clean: Vec<f64> = t.iter().map(|&x| 1.0 - 0.5 * (-x / tau).exp()).collect();
    let noise = Normal::new(0.0, 0.01).unwrap();
    let seeds = 200;
    let mut covered = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = clean.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let fit = fit_exponential_relaxation(&t, &y).unwrap();
        let e = fit.get("tau").unwrap();
        if (e.value - tau).abs() <= 3.0 * e.stderr {
            covered += 1;
        }
    }
    assert!(covered as f64 >= 0.95 * seeds as f64, "{covered}/{seeds}");
}

#[test]
fn power_law_fit_covers_truth_under_lognormal_noise() {
    let alpha = 1.5;
    let x: Vec<f64> = (0..20).map(|k| 10f64.powf(1.0 + k as f64 / 19.0)).collect();
    let noise = LogNormal::new(0.0, 0.05).unwrap();
    let seeds = 200;
    let mut covered = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = x.iter().map(|v| 0.3 * v.powf(alpha) * noise.sample(&mut rng)).collect();
        let fit = fit_power_law(&x, &y).unwrap();
        let e = fit.get("exponent").unwrap();
        if (e.value - alpha).abs() <= 3.0 * e.stderr {
            covered += 1;
        }
    }
    assert!(covered as f64 >= 0.95 * seeds as f64, "{covered}/{seeds}");
}

#[test]
fn exact_exponential_recovers_time_constant() {
    let t: Vec<f64> = (0..60).map(|k| k as f64 * 0.2).collect();
    let y: Vec<f64> = t.iter().map(|&x| 3.0 - 1.2 * (-x / 2.0).exp()).collect();
    let fit = fit_exponential_relaxation(&t, &y).unwrap();
    assert!((fit.get("tau").unwrap().value - 2.0).abs() < 1e-8);
    assert!((fit.get("y_inf").unwrap().value - 3.0).abs() < 1e-8);
}
