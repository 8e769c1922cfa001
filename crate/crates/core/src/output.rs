//! Running a configured experiment and writing its CSV tables and manifest.
//!
//! Every table starts with a header row and stores numbers with 17
//! significant digits. Files are staged under temporary names and renamed
//! into place; if anything fails, files already written by the run are
//! removed again. `manifest.json` is written last.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::analysis::{linear_response_spectrum, FitResult, HysteresisPoint, SpectrumResult};
use crate::config::RunConfig;
use crate::error::{invalid, Error, Result};
use crate::experiments::{
    hysteresis_map, power_sweep, static_spectrum, sweep_pair, switching_metrics,
    thermalization_protocol, thermalization_scaling, PowerPoint, ScalingPoint,
};
use crate::integrator::Diagnostics;
use crate::schedule::ChirpSchedule;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Spectrum,
    Sweep,
    Hysteresis,
    Power,
    Thermalize,
    Metrics,
    Oracle,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Spectrum,
        Subcommand::Sweep,
        Subcommand::Hysteresis,
        Subcommand::Power,
        Subcommand::Thermalize,
        Subcommand::Metrics,
        Subcommand::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Spectrum => "spectrum",
            Subcommand::Sweep => "sweep",
            Subcommand::Hysteresis => "hysteresis",
            Subcommand::Power => "power",
            Subcommand::Thermalize => "thermalize",
            Subcommand::Metrics => "metrics",
            Subcommand::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid("subcommand", format!("unknown subcommand `{s}`")))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `output_dir`.
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabeledDiagnostics {
    pub label: String,
    #[serde(flatten)]
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub created_unix_s: u64,
    pub subcommand: String,
    pub outputs: Vec<String>,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    pub diagnostics: Vec<LabeledDiagnostics>,
    /// Resolved config; loading this text reproduces the run.
    pub config_toml: String,
    pub config: RunConfig,
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Human-readable result lines.
    pub summary: Vec<String>,
}

/// Process exit code for a failed run: 1 for bad input, 2 for run failures.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config_error() {
        1
    } else {
        2
    }
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV table buffered in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| fmt_num(v)).collect());
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let wrap = |e: csv::Error| invalid("csv", e.to_string());
        w.write_record(&self.header).map_err(wrap)?;
        for row in &self.rows {
            w.write_record(row).map_err(wrap)?;
        }
        w.into_inner().map_err(|e| invalid("csv", e.to_string()))
    }
}

pub fn spectrum_table(name: &str, s: &SpectrumResult) -> Table {
    let mut t = Table::new(name, &["delta", "gain", "re_a2", "im_a2", "t"]);
    for i in 0..s.deltas.len() {
        t.push_numbers(&[s.deltas[i], s.gains[i], s.probes[i].re, s.probes[i].im, s.times[i]]);
    }
    t
}

pub fn hysteresis_table(points: &[HysteresisPoint]) -> Table {
    let mut t = Table::new(
        "hysteresis.csv",
        &["rate", "g_minus", "g_plus", "ratio", "peak_shift"],
    );
    for p in points {
        t.push_numbers(&[p.rate, p.g_minus, p.g_plus, p.ratio, p.peak_shift]);
    }
    t
}

pub fn power_table(points: &[PowerPoint]) -> Table {
    let mut t = Table::new(
        "power.csv",
        &["amplitude", "input_power", "g_minus", "g_plus", "ratio"],
    );
    for p in points {
        t.push_numbers(&[p.amplitude, p.input_power, p.g_minus, p.g_plus, p.ratio]);
    }
    t
}

pub fn scaling_table(points: &[ScalingPoint]) -> Table {
    let mut t = Table::new(
        "scaling.csv",
        &["delta_pump", "gamma_pop", "gamma_coh", "fitted_rate", "thermalization_time"],
    );
    for p in points {
        t.push_numbers(&[
            p.delta_pump,
            p.gamma_pop,
            p.gamma_coh,
            p.fitted_rate,
            p.thermalization_time,
        ]);
    }
    t
}

fn append_fit(t: &mut Table, fit: &FitResult) {
    for e in &fit.params {
        t.rows
            .push(vec![e.name.clone(), fmt_num(e.value), fmt_num(e.stderr)]);
    }
}

/// Files are renamed into place one by one; `rollback` deletes those already
/// committed.
struct Staging {
    dir: PathBuf,
    committed: Vec<PathBuf>,
}

impl Staging {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            committed: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, &target)
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(Error::io(&target, e));
        }
        self.committed.push(target);
        Ok(())
    }

    fn rollback(&mut self) {
        for p in self.committed.drain(..) {
            let _ = fs::remove_file(p);
        }
    }
}

struct Outcome {
    tables: Vec<Table>,
    summary: Vec<String>,
    diagnostics: Vec<LabeledDiagnostics>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            tables: Vec::new(),
            summary: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn diag(&mut self, label: impl Into<String>, d: &Diagnostics) {
        self.diagnostics.push(LabeledDiagnostics {
            label: label.into(),
            diagnostics: d.clone(),
        });
    }
}

fn missing(section: &'static str) -> Error {
    invalid(section, "section is required by this subcommand")
}

fn compute(sub: Subcommand, cfg: &RunConfig, jobs: usize) -> Result<Outcome> {
    let mut out = Outcome::new();
    let opts = &cfg.solver;
    match sub {
        Subcommand::Metrics => {
            let m = cfg.metrics.as_ref().ok_or_else(|| missing("metrics"))?;
            let r = switching_metrics(m.power_w, m.tau_s, m.wavelength_m, m.waist_m)?;
            let mut t = Table::new("metrics.csv", &["name", "value"]);
            t.rows.push(vec!["photon_number".into(), fmt_num(r.photon_number)]);
            t.rows.push(vec![
                "photons_per_diffraction_area".into(),
                fmt_num(r.photons_per_diffraction_area),
            ]);
            out.tables.push(t);
            out.summary.push(format!("photon_number = {:.4}", r.photon_number));
            out.summary.push(format!(
                "photons_per_diffraction_area = {:.4e}",
                r.photons_per_diffraction_area
            ));
        }
        Subcommand::Oracle => {
            let g = cfg.oracle.as_ref().ok_or_else(|| missing("oracle"))?;
            let model = cfg.build_model()?;
            let deltas = g.values();
            let pts = linear_response_spectrum(&model, &deltas)?;
            let s = SpectrumResult::new(
                deltas,
                pts.iter().map(|p| p.gain).collect(),
                pts.iter().map(|p| p.probe).collect(),
                vec![0.0; pts.len()],
                0.0,
            )?;
            out.summary.push(format!(
                "peak gain {:.6} at delta = {:.4}",
                s.peak_gain, s.peak_delta
            ));
            out.tables.push(spectrum_table("oracle.csv", &s));
        }
        Subcommand::Spectrum => {
            let sc = cfg.spectrum.as_ref().ok_or_else(|| missing("spectrum"))?;
            let model = cfg.build_model()?;
            let s = static_spectrum(&model, &sc.grid().values(), &sc.steady_state(), opts, jobs)?;
            out.summary.push(format!(
                "peak gain {:.6} at delta = {:.4}",
                s.peak_gain, s.peak_delta
            ));
            out.tables.push(spectrum_table("spectrum.csv", &s));
        }
        Subcommand::Sweep => {
            let sw = cfg.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
            let model = cfg.build_model()?;
            let pair = sweep_pair(&model, (sw.span[0], sw.span[1]), sw.rate, opts)?;
            out.diag("negative chirp", &pair.diagnostics[0]);
            out.diag("positive chirp", &pair.diagnostics[1]);
            out.summary.push(format!(
                "g_minus = {:.6}, g_plus = {:.6}",
                pair.point.g_minus, pair.point.g_plus
            ));
            out.summary
                .push(format!("g_minus/g_plus = {:.6}", pair.point.ratio));
            out.tables.push(spectrum_table("spectrum.csv", &pair.minus));
            out.tables.push(spectrum_table("spectrum_plus.csv", &pair.plus));
            out.tables.push(hysteresis_table(&[pair.point]));
        }
        Subcommand::Hysteresis => {
            let h = cfg.hysteresis.as_ref().ok_or_else(|| missing("hysteresis"))?;
            let model = cfg.build_model()?;
            let pts = hysteresis_map(&model, (h.span[0], h.span[1]), &h.rates, opts, jobs)?;
            for p in &pts {
                out.summary
                    .push(format!("rate {:.6e}: g_minus/g_plus = {:.6}", p.rate, p.ratio));
            }
            out.tables.push(hysteresis_table(&pts));
        }
        Subcommand::Power => {
            let p = cfg.power.as_ref().ok_or_else(|| missing("power"))?;
            let model = cfg.build_model()?;
            let schedule = ChirpSchedule::downward(p.span[0], p.span[1], p.rate)?;
            let pts = power_sweep(&model, &p.amplitudes, &schedule, opts, jobs)?;
            for q in &pts {
                out.summary.push(format!(
                    "|a_in|^2 {:.6e}: g_minus/g_plus = {:.6}",
                    q.input_power, q.ratio
                ));
            }
            out.tables.push(power_table(&pts));
        }
        Subcommand::Thermalize => {
            let th = cfg.thermalize.as_ref().ok_or_else(|| missing("thermalize"))?;
            let model = cfg.build_model()?;
            let topts = th.options();
            let rec = thermalization_protocol(&model, th.strong_a_in, th.weak_a_in, &topts, opts)?;
            out.diag("strong phase", &rec.diagnostics[0]);
            out.diag("weak phase", &rec.diagnostics[1]);
            out.summary.push(format!(
                "fitted rate {:.6e} (configured gamma_pop {:.6e}) at delta = {:.4}",
                rec.rate,
                model.params().gamma_pop,
                rec.delta
            ));
            let mut t = Table::new("thermalize.csv", &["t", "gain"]);
            for (time, gain) in rec.times.iter().zip(&rec.gains) {
                t.push_numbers(&[*time, *gain]);
            }
            out.tables.push(t);
            let mut fits = Table::new("fits.csv", &["name", "estimate", "stderr"]);
            append_fit(&mut fits, &rec.fit);
            if let Some(sc) = &th.scaling {
                let res = thermalization_scaling(
                    &model,
                    &sc.pump_detunings,
                    &sc.reference,
                    th.strong_a_in,
                    th.weak_a_in,
                    &topts,
                    opts,
                    jobs,
                )?;
                let e = res.fit.primary();
                out.summary.push(format!(
                    "thermalization time exponent {:.4} +/- {:.4}",
                    e.value, e.stderr
                ));
                append_fit(&mut fits, &res.fit);
                out.tables.push(scaling_table(&res.points));
            }
            out.tables.push(fits);
        }
    }
    Ok(out)
}

/// Run one subcommand and write its outputs.
pub fn run(sub: Subcommand, cfg: &RunConfig, ropts: &RunOptions) -> Result<RunReport> {
    let mut cfg = cfg.clone();
    if let Some(dir) = &ropts.out_dir {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;
    let outcome = compute(sub, &cfg, ropts.jobs.max(1))?;

    let mut warnings = cfg.params().warnings();
    for d in &outcome.diagnostics {
        warnings.extend(d.diagnostics.warnings.iter().map(|w| format!("{}: {w}", d.label)));
    }
    let mut staging = Staging::new(&cfg.output_dir)?;
    let written = (|| {
        for t in &outcome.tables {
            staging.write(&t.name, &t.to_bytes()?)?;
        }
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            subcommand: sub.to_string(),
            outputs: outcome.tables.iter().map(|t| t.name.clone()).collect(),
            summary: outcome.summary.clone(),
            warnings: warnings.clone(),
            diagnostics: outcome.diagnostics.clone(),
            config_toml: cfg.to_toml()?,
            config: cfg.clone(),
        };
        let json = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| invalid("manifest", e.to_string()))?;
        staging.write(MANIFEST_FILE, &json)
    })();
    if let Err(e) = written {
        staging.rollback();
        return Err(e);
    }
    let mut summary = outcome.summary;
    summary.extend(warnings.into_iter().map(|w| format!("warning: {w}")));
    Ok(RunReport {
        out_dir: cfg.output_dir.clone(),
        files: staging.committed,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        let x = 0.1 + 0.2;
        let s = fmt_num(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(fmt_num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn subcommand_names_round_trip() {
        for c in Subcommand::ALL {
            assert_eq!(c.name().parse::<Subcommand>().unwrap(), c);
        }
        assert!("plot".parse::<Subcommand>().is_err());
    }

    #[test]
    fn table_has_header_row() {
        let mut t = Table::new("x.csv", &["a", "b"]);
        t.push_numbers(&[1.0, 2.0]);
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(text.lines().next(), Some("a,b"));
        assert_eq!(text.lines().count(), 2);
    }
}
