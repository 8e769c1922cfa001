//! Gain observables, the perturbative response oracle, and curve fits.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Model;

/// Intensity transmission `|a₂/a_in|²` of the probe.
///
/// This is the same quantity a propagation picture writes as `exp(-2 Re[α] L)`.
pub fn gain_of(a2: Complex64, a_in: Complex64) -> Result<f64> {
    if a_in.norm_sqr() == 0.0 {
        return Err(Error::ZeroProbeInput);
    }
    Ok(a2.norm_sqr() / a_in.norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    pub delta: f64,
    /// Medium susceptibility `S(δ)` of the thermal ladder.
    pub response: Complex64,
    pub probe: Complex64,
    pub gain: f64,
}

/// Steady probe transmission with populations frozen at the thermal distribution.
///
/// ```text
/// S(δ) = Σ_p (Π_th,p+1 - Π_th,p) / (4(p² - (p+1)²) - δ - iγ_coh)
/// a₂   = (κ/2) a_in / (κ/2 - i N |β|² S(δ))
/// ```
///
/// Closed form only; nothing here touches the time integrator.
pub fn linear_response_spectrum(model: &Model, deltas: &[f64]) -> Result<Vec<ResponsePoint>> {
    let p = model.params();
    if !(p.gamma_coh > 0.0) {
        return Err(invalid("gamma_coh", "must be positive for the linear response"));
    }
    let grid = model.grid();
    let th = model.thermal();
    let half_kappa = 0.5 * p.kappa;
    let collective = p.n_atoms * p.beta.norm_sqr();
    deltas
        .iter()
        .map(|&delta| {
            let response: Complex64 = (0..grid.coherence_len())
                .map(|j| {
                    let denom = Complex64::new(grid.kinetic_frequency(j) - delta, -p.gamma_coh);
                    (th[j + 1] - th[j]) / denom
                })
                .sum();
            let probe = p.a_in * half_kappa
                / (Complex64::new(half_kappa, 0.0) - Complex64::i() * collective * response);
            let gain = gain_of(probe, p.a_in)?;
            Ok(ResponsePoint {
                delta,
                response,
                probe,
                gain,
            })
        })
        .collect()
}

/// Gain spectrum recorded on a detuning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Detunings in acquisition order.
    pub deltas: Vec<f64>,
    pub gains: Vec<f64>,
    pub probes: Vec<Complex64>,
    /// Acquisition time of each point.
    pub times: Vec<f64>,
    /// Signed `dδ/dt`; zero for a static spectrum.
    pub sweep_rate: f64,
    pub peak_gain: f64,
    pub peak_delta: f64,
    /// No gain feature at all; the peak then sits at the lowest detuning.
    pub flat: bool,
}

impl SpectrumResult {
    pub fn new(
        deltas: Vec<f64>,
        gains: Vec<f64>,
        probes: Vec<Complex64>,
        times: Vec<f64>,
        sweep_rate: f64,
    ) -> Result<Self> {
        let n = deltas.len();
        if n == 0 {
            return Err(invalid("deltas", "spectrum is empty"));
        }
        for (what, len) in [("gains", gains.len()), ("probes", probes.len()), ("times", times.len())] {
            if len != n {
                return Err(Error::ShapeMismatch {
                    what,
                    expected: n,
                    got: len,
                });
            }
        }
        if gains.iter().any(|g| !g.is_finite() || *g <= 0.0) {
            return Err(invalid("gains", "must be finite and positive"));
        }
        let peak = find_peak(&deltas, &gains);
        Ok(Self {
            deltas,
            gains,
            probes,
            times,
            sweep_rate,
            peak_gain: peak.gain,
            peak_delta: peak.delta,
            flat: peak.flat,
        })
    }

    /// Sign of the chirp, or zero for a static spectrum.
    pub fn direction(&self) -> f64 {
        if self.sweep_rate == 0.0 {
            0.0
        } else {
            self.sweep_rate.signum()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub delta: f64,
    pub gain: f64,
    pub flat: bool,
}

const FLAT_TOLERANCE: f64 = 1e-12;

/// Global gain maximum with three-point parabolic refinement in log-gain.
///
/// Ties go to the detuning of smaller magnitude. A flat spectrum reports its
/// lowest detuning.
pub fn find_peak(deltas: &[f64], gains: &[f64]) -> Peak {
    let max = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = gains.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min <= FLAT_TOLERANCE * max.abs() {
        let lowest = deltas.iter().copied().fold(f64::INFINITY, f64::min);
        return Peak {
            delta: lowest,
            gain: max,
            flat: true,
        };
    }
    let mut best = 0;
    for i in 1..gains.len() {
        if gains[i] > gains[best] || (gains[i] == gains[best] && deltas[i].abs() < deltas[best].abs())
        {
            best = i;
        }
    }
    let mut peak = Peak {
        delta: deltas[best],
        gain: gains[best],
        flat: false,
    };
    if best == 0 || best + 1 == gains.len() {
        return peak;
    }
    let (x0, x1, x2) = (deltas[best - 1], deltas[best], deltas[best + 1]);
    let (y0, y1, y2) = (gains[best - 1].ln(), gains[best].ln(), gains[best + 1].ln());
    // vertex of the Lagrange parabola through three points
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature < 0.0 {
        let slope = d01 - curvature * (x0 + x1);
        let vertex = -slope / (2.0 * curvature);
        let lo = x0.min(x2);
        let hi = x0.max(x2);
        if vertex > lo && vertex < hi {
            let value = y1 + (vertex - x1) * (d01 + curvature * (vertex - x0));
            peak.delta = vertex;
            peak.gain = value.exp().max(gains[best]);
        }
    }
    peak
}

/// Peak-gain comparison of a downward and an upward chirp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisPoint {
    pub rate: f64,
    pub g_minus: f64,
    pub g_plus: f64,
    pub ratio: f64,
    /// `δ_peak(-) - δ_peak(+)`.
    pub peak_shift: f64,
}

/// Ratio `g₋/g₊` of refined peak gains and the shift between the two peaks.
pub fn hysteresis_ratio(minus: &SpectrumResult, plus: &SpectrumResult) -> Result<HysteresisPoint> {
    if !same_grid(&minus.deltas, &plus.deltas) {
        return Err(Error::GridMismatch);
    }
    let peak_shift = if minus.flat && plus.flat {
        0.0
    } else {
        minus.peak_delta - plus.peak_delta
    };
    Ok(HysteresisPoint {
        rate: minus.sweep_rate.abs().max(plus.sweep_rate.abs()),
        g_minus: minus.peak_gain,
        g_plus: plus.peak_gain,
        ratio: minus.peak_gain / plus.peak_gain,
        peak_shift,
    })
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    sorted(a)
        .iter()
        .zip(sorted(b).iter())
        .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

/// Fitted parameters; the first entry is the headline estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<Estimate>,
    pub residual_rms: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn primary(&self) -> &Estimate {
        &self.params[0]
    }

    pub fn get(&self, name: &str) -> Option<&Estimate> {
        self.params.iter().find(|e| e.name == name)
    }
}

fn estimate(name: &str, value: f64, stderr: f64) -> Estimate {
    Estimate {
        name: name.to_string(),
        value,
        stderr,
    }
}

const RELAXATION_MIN_POINTS: usize = 8;
const LM_MAX_ITER: usize = 500;

/// Least-squares fit of `y(t) = y_∞ + (y₀ - y_∞) e^{-(t - t₀)/τ}`.
///
/// Seeded from a log-linear fit against the last sample, then refined by
/// Levenberg-Marquardt in the decay rate `1/τ`. Parameters: `tau`, `rate`,
/// `y_inf`, `amplitude` (`y₀ - y_∞`).
pub fn fit_exponential_relaxation(t: &[f64], y: &[f64]) -> Result<FitResult> {
    let n = t.len();
    if n != y.len() {
        return Err(Error::ShapeMismatch {
            what: "samples",
            expected: n,
            got: y.len(),
        });
    }
    if n < RELAXATION_MIN_POINTS {
        return Err(invalid("t", format!("need at least {RELAXATION_MIN_POINTS} points")));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("t", "must be strictly increasing"));
    }
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if ymax - ymin <= 1e-9 * scale {
        return Err(Error::FitDegenerate("transient amplitude below 1e-9 relative".into()));
    }

    let t0 = t[0];
    let ts: Vec<f64> = t.iter().map(|x| x - t0).collect();
    let span = ts[n - 1];

    // seed: log-linear fit of |y - y_last| over the part well above the tail
    let tail = y[n - 1];
    let amp0 = y[0] - tail;
    let (mut xs, mut ls) = (Vec::new(), Vec::new());
    for i in 0..n - 1 {
        let d = (y[i] - tail) * amp0.signum();
        if d > 0.05 * amp0.abs() {
            xs.push(ts[i]);
            ls.push(d.ln());
        }
    }
    let mut rate = match ols(&xs, &ls) {
        Some(line) if line.slope < 0.0 => -line.slope,
        _ => 3.0 / span,
    };
    let (mut y_inf, mut amp) = linear_given_rate(&ts, y, rate);

    let ssr = |y_inf: f64, amp: f64, rate: f64| -> f64 {
        ts.iter()
            .zip(y)
            .map(|(&ti, &yi)| {
                let r = yi - y_inf - amp * (-rate * ti).exp();
                r * r
            })
            .sum()
    };

    let mut lambda = 1e-3;
    let mut current = ssr(y_inf, amp, rate);
    let mut converged = false;
    for _ in 0..LM_MAX_ITER {
        let (jtj, jtr) = normal_equations(&ts, y, y_inf, amp, rate);
        let mut accepted = false;
        for _ in 0..60 {
            let mut damped = jtj;
            for d in 0..3 {
                damped[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let (ny, na, nk) = (y_inf + step[0], amp + step[1], rate + step[2]);
            let trial = ssr(ny, na, nk);
            if trial.is_finite() && trial <= current {
                let small = step[2].abs() <= 1e-13 * nk.abs()
                    && step[1].abs() <= 1e-13 * na.abs().max(scale)
                    && step[0].abs() <= 1e-13 * ny.abs().max(scale);
                y_inf = ny;
                amp = na;
                rate = nk;
                let gain = current - trial;
                current = trial;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if small || gain <= 1e-30 * current.max(f64::MIN_POSITIVE) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step left: at a minimum to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::FitDegenerate("Levenberg-Marquardt did not converge".into()));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::FitDegenerate("fitted transient does not decay".into()));
    }

    let dof = (n - 3) as f64;
    let sigma2 = current / dof;
    let (jtj, _) = normal_equations(&ts, y, y_inf, amp, rate);
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::FitDegenerate("singular Jacobian".into()))?
        * sigma2;
    let se = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let tau = 1.0 / rate;
    Ok(FitResult {
        params: vec![
            estimate("tau", tau, se(2) / (rate * rate)),
            estimate("rate", rate, se(2)),
            estimate("y_inf", y_inf, se(0)),
            estimate("amplitude", amp, se(1)),
        ],
        residual_rms: (current / n as f64).sqrt(),
        n_points: n,
    })
}

fn linear_given_rate(ts: &[f64], y: &[f64], rate: f64) -> (f64, f64) {
    let e: Vec<f64> = ts.iter().map(|&t| (-rate * t).exp()).collect();
    match ols(&e, y) {
        Some(line) => (line.intercept, line.slope),
        None => (y[y.len() - 1], y[0] - y[y.len() - 1]),
    }
}

/// `JᵀJ` and `Jᵀr` for the residual `r = y - model`, with `J = ∂model/∂(y_∞, A, k)`.
fn normal_equations(
    ts: &[f64],
    y: &[f64],
    y_inf: f64,
    amp: f64,
    rate: f64,
) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for (&t, &yi) in ts.iter().zip(y) {
        let e = (-rate * t).exp();
        let j = Vector3::new(1.0, e, -amp * t * e);
        let r = yi - y_inf - amp * e;
        jtj += j * j.transpose();
        jtr += j * r;
    }
    (jtj, jtr)
}

struct Line {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    intercept_se: f64,
    ssr: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Option<Line> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let (slope_se, intercept_se) = if n > 2 {
        let s2 = ssr / (nf - 2.0);
        let slope_se = (s2 / sxx).sqrt();
        (slope_se, (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Some(Line {
        slope,
        intercept,
        slope_se,
        intercept_se,
        ssr,
    })
}

/// Power law `y = c · x^α` by ordinary least squares on `(ln x, ln y)`.
///
/// Parameters: `exponent`, `prefactor`. The prefactor error is propagated from
/// the intercept.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch {
            what: "samples",
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(invalid("x", "need at least 3 points"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveData);
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let line = ols(&lx, &ly).ok_or(Error::DegenerateAbscissa)?;
    let prefactor = line.intercept.exp();
    Ok(FitResult {
        params: vec![
            estimate("exponent", line.slope, line.slope_se),
            estimate("prefactor", prefactor, prefactor * line.intercept_se),
        ],
        residual_rms: (line.ssr / x.len() as f64).sqrt(),
        n_points: x.len(),
    })
}
