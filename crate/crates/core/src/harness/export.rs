//! CSV and manifest artifacts of a run.
//!
//! Floats are written with 17 significant digits so that every value parses
//! back to the identical `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{magnitude_spectrum, SimTrace, ThdWindow, TraceSample};
use crate::nsga2::GenerationRecord;

use super::config::ExperimentConfig;
use super::pareto::ParetoRecord;
use super::tune::TuneOutcome;

pub const PARETO_FILE: &str = "pareto.csv";
pub const FRONT_HISTORY_FILE: &str = "front_history.csv";
pub const MANIFEST_FILE: &str = "run_manifest.toml";

const PARETO_HEADER: [&str; 7] = ["solution_index", "scheme", "kp", "ki", "kd", "f1_iae", "f2_thd"];
const TRACE_HEADER: [&str; 9] = [
    "time", "theta_ref", "theta_mech", "omega", "torque", "ia", "ib", "ic", "actuation",
];
const HISTORY_HEADER: [&str; 8] = [
    "generation", "kp", "ki", "kd", "f1_iae", "f2_thd", "rank", "crowding_distance",
];
const SPECTRUM_HEADER: [&str; 2] = ["frequency", "magnitude"];

pub fn trace_file(index: usize) -> String {
    format!("trace_{index}.csv")
}

pub fn spectrum_file(index: usize) -> String {
    format!("spectrum_{index}.csv")
}

/// `{:.16e}`: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, format!("{other:?}")),
        }
    } else {
        Error::parse(path, e)
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn check_header(path: &Path, reader: &mut csv::Reader<fs::File>, expected: &[&str]) -> Result<()> {
    let got = reader.headers().map_err(|e| csv_error(path, e))?;
    if got.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            path,
            format!("unexpected header {:?}, expected {expected:?}", got.iter().collect::<Vec<_>>()),
        ));
    }
    Ok(())
}

pub fn write_pareto(path: &Path, records: &[ParetoRecord]) -> Result<()> {
    write_rows(
        path,
        &PARETO_HEADER,
        records.iter().map(|r| {
            vec![
                r.solution_index.to_string(),
                r.scheme.to_string(),
                format_float(r.kp),
                format_float(r.ki),
                format_float(r.kd),
                format_float(r.f1_iae),
                format_float(r.f2_thd),
            ]
        }),
    )
}

pub fn read_pareto(path: &Path) -> Result<Vec<ParetoRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    check_header(path, &mut r, &PARETO_HEADER)?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

pub fn write_trace(path: &Path, trace: &SimTrace) -> Result<()> {
    let cols = trace.columns();
    write_rows(
        path,
        &TRACE_HEADER,
        (0..trace.len()).map(|k| cols.iter().map(|c| format_float(c[k])).collect()),
    )
}

/// Reads a trace written by [`write_trace`]. The sample time is not stored
/// in the file and must be supplied.
pub fn read_trace(path: &Path, sample_time: f64) -> Result<SimTrace> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    check_header(path, &mut r, &TRACE_HEADER)?;
    let mut trace = SimTrace::with_capacity(sample_time, 0);
    for (line, row) in r.deserialize::<[f64; 9]>().enumerate() {
        let v = row.map_err(|e| csv_error(path, e))?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::parse(path, format!("non-finite value on data row {}", line + 1)));
        }
        trace.push(TraceSample {
            time: v[0],
            position_ref: v[1],
            position: v[2],
            speed: v[3],
            torque: v[4],
            currents: [v[5], v[6], v[7]],
            actuation: v[8],
        });
    }
    Ok(trace)
}

pub fn write_front_history(path: &Path, history: &[GenerationRecord]) -> Result<()> {
    let rows = history.iter().flat_map(|g| {
        g.population.iter().map(move |ind| {
            let [f1, f2] = ind.objectives();
            let mut row = vec![g.generation.to_string()];
            row.extend(ind.genes.iter().map(|v| format_float(*v)));
            row.extend([
                format_float(f1),
                format_float(f2),
                ind.rank.to_string(),
                format_float(ind.crowding_distance),
            ]);
            row
        })
    });
    write_rows(path, &HISTORY_HEADER, rows)
}

pub fn write_spectrum(path: &Path, spectrum: &[(f64, f64)]) -> Result<()> {
    write_rows(
        path,
        &SPECTRUM_HEADER,
        spectrum.iter().map(|(f, m)| vec![format_float(*f), format_float(*m)]),
    )
}

/// Torque spectrum over the THD window; empty for diverged or too-short
/// traces.
pub fn torque_spectrum(trace: &SimTrace, window: ThdWindow) -> Vec<(f64, f64)> {
    if trace.diverged {
        return Vec::new();
    }
    magnitude_spectrum(window.select(&trace.torque), trace.sample_time).unwrap_or_default()
}

/// Everything needed to reproduce a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.tuning.nsga2.rng_seed,
            config: config.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads a manifest; the recorded seed overrides the one inside the
    /// config if the two were edited apart.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Self = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        m.config.tuning.nsga2.rng_seed = m.seed;
        m.config.validate()?;
        Ok(m)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the campaign artifacts into `out_dir`. `input` is the config the
/// campaign was started from and goes into the manifest. Returns the paths
/// written.
pub fn export_tune(outcome: &TuneOutcome, input: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut written = Vec::new();
    let path = out_dir.join(PARETO_FILE);
    write_pareto(&path, &outcome.pareto)?;
    written.push(path);

    let window = outcome.config.tuning.thd_window;
    for (rec, trace) in outcome.pareto.iter().zip(&outcome.traces) {
        let path = out_dir.join(trace_file(rec.solution_index));
        write_trace(&path, trace)?;
        written.push(path);
        let path = out_dir.join(spectrum_file(rec.solution_index));
        write_spectrum(&path, &torque_spectrum(trace, window))?;
        written.push(path);
    }

    let path = out_dir.join(FRONT_HISTORY_FILE);
    write_front_history(&path, &outcome.evolution.history)?;
    written.push(path);

    let path = out_dir.join(MANIFEST_FILE);
    RunManifest::new(input).write(&path)?;
    written.push(path);
    Ok(written)
}
