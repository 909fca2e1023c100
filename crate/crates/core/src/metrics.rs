//! Fitness metrics computed from a closed-loop trace: integrated absolute
//! position error and total harmonic distortion of the torque.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Penalty fitness assigned to runs that diverged.
pub const PENALTY_IAE: f64 = 1e6;
pub const PENALTY_THD: f64 = 1e6;

/// Minimum samples accepted by the spectral routines.
pub const MIN_SPECTRUM_LEN: usize = 16;

/// Half-width, in bins, of the Hann main lobe that is attributed to the
/// fundamental.
const HANN_MAIN_LOBE_HALF_WIDTH: usize = 2;

/// One simulation run, sampled at a fixed period.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub sample_time: f64,
    pub time: Vec<f64>,
    pub position_ref: Vec<f64>,
    pub position: Vec<f64>,
    pub speed: Vec<f64>,
    pub torque: Vec<f64>,
    pub ia: Vec<f64>,
    pub ib: Vec<f64>,
    pub ic: Vec<f64>,
    /// Duty for six-step control, q-axis voltage for FOC.
    pub actuation: Vec<f64>,
    /// Set when the run was cut short by the blow-up detector.
    pub diverged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub time: f64,
    pub position_ref: f64,
    pub position: f64,
    pub speed: f64,
    pub torque: f64,
    pub currents: [f64; 3],
    pub actuation: f64,
}

impl SimTrace {
    pub fn with_capacity(sample_time: f64, n: usize) -> Self {
        let col = || Vec::with_capacity(n);
        Self {
            sample_time,
            time: col(),
            position_ref: col(),
            position: col(),
            speed: col(),
            torque: col(),
            ia: col(),
            ib: col(),
            ic: col(),
            actuation: col(),
            diverged: false,
        }
    }

    pub fn push(&mut self, s: TraceSample) {
        self.time.push(s.time);
        self.position_ref.push(s.position_ref);
        self.position.push(s.position);
        self.speed.push(s.speed);
        self.torque.push(s.torque);
        self.ia.push(s.currents[0]);
        self.ib.push(s.currents[1]);
        self.ic.push(s.currents[2]);
        self.actuation.push(s.actuation);
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn columns(&self) -> [&[f64]; 9] {
        [
            &self.time,
            &self.position_ref,
            &self.position,
            &self.speed,
            &self.torque,
            &self.ia,
            &self.ib,
            &self.ic,
            &self.actuation,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n < 2 {
            return Err(Error::Config(format!("trace needs at least 2 samples, got {n}")));
        }
        if self.columns().iter().any(|c| c.len() != n) {
            return Err(Error::Config("trace columns differ in length".into()));
        }
        if self.sample_time.is_nan() || self.sample_time <= 0.0 {
            return Err(Error::Config("trace sample_time must be > 0".into()));
        }
        let tol = 1e-9 * self.sample_time;
        for w in self.time.windows(2) {
            let dt = w[1] - w[0];
            if dt.is_nan() || dt <= 0.0 || (dt - self.sample_time).abs() > tol.max(1e-12 * w[1].abs()) {
                return Err(Error::Config("trace time is not uniform at sample_time".into()));
            }
        }
        Ok(())
    }
}

/// The pair of objectives, both minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessPair {
    pub f1_iae: f64,
    pub f2_thd: f64,
    #[serde(default)]
    pub diverged: bool,
}

impl FitnessPair {
    pub fn new(f1_iae: f64, f2_thd: f64) -> Self {
        Self {
            f1_iae,
            f2_thd,
            diverged: false,
        }
    }

    pub fn penalty() -> Self {
        Self {
            f1_iae: PENALTY_IAE,
            f2_thd: PENALTY_THD,
            diverged: true,
        }
    }

    pub fn objectives(&self) -> [f64; 2] {
        [self.f1_iae, self.f2_thd]
    }
}

/// Integrated absolute position error, rectangular rule.
pub fn iae(trace: &SimTrace) -> f64 {
    trace.sample_time
        * trace
            .position_ref
            .iter()
            .zip(&trace.position)
            .map(|(r, y)| (r - y).abs())
            .sum::<f64>()
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 0.5 * (1.0 - (TAU * k as f64 / n as f64).cos()))
        .collect()
}

fn windowed_dft(signal: &[f64]) -> Result<(Vec<Complex<f64>>, f64)> {
    let n = signal.len();
    if n < MIN_SPECTRUM_LEN {
        return Err(Error::SignalTooShort {
            len: n,
            min: MIN_SPECTRUM_LEN,
        });
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let window = hann_window(n);
    let gain: f64 = window.iter().sum();
    let mut buf: Vec<Complex<f64>> = signal
        .iter()
        .zip(&window)
        .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok((buf, gain))
}

/// Single-sided amplitude spectrum `(frequency, magnitude)` for bins
/// `0..=n/2`, after mean removal and a Hann window. Magnitudes are corrected
/// for the window's coherent gain, so a bin-centered sinusoid of amplitude `A`
/// reads `A` at its bin.
pub fn magnitude_spectrum(signal: &[f64], sample_time: f64) -> Result<Vec<(f64, f64)>> {
    let (bins, gain) = windowed_dft(signal)?;
    let n = signal.len();
    let df = 1.0 / (n as f64 * sample_time);
    Ok((0..=n / 2)
        .map(|k| {
            let single_sided = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                1.0
            } else {
                2.0
            };
            (k as f64 * df, single_sided * bins[k].norm() / gain)
        })
        .collect())
}

/// Portion of the torque record analysed for THD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThdWindow {
    Full,
    /// The trailing fraction of the record, e.g. `0.5` for the last half.
    SteadyStateFraction { fraction: f64 },
}

impl Default for ThdWindow {
    fn default() -> Self {
        ThdWindow::SteadyStateFraction { fraction: 0.5 }
    }
}

impl ThdWindow {
    pub fn select<'a>(&self, signal: &'a [f64]) -> &'a [f64] {
        match *self {
            ThdWindow::Full => signal,
            ThdWindow::SteadyStateFraction { fraction } => {
                let keep = ((signal.len() as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
                &signal[signal.len() - keep.min(signal.len())..]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ThdWindow::SteadyStateFraction { fraction } = *self {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::Config(format!(
                    "steady-state fraction must lie in (0, 1], got {fraction}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThdStatus {
    Measured,
    /// No ripple above the numerical floor; reported as zero.
    BelowFloor,
    /// The run diverged; the value is the penalty.
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thd {
    pub value: f64,
    pub status: ThdStatus,
}

/// THD of an arbitrary signal: non-fundamental spectral energy over the
/// fundamental's, after DC removal.
///
/// The fundamental is the dominant non-DC bin together with the rest of its
/// Hann main lobe (±2 bins), so a pure tone reads zero regardless of where the
/// window cuts it.
pub fn signal_thd(signal: &[f64]) -> Result<Thd> {
    let (bins, _) = windowed_dft(signal)?;
    let n = signal.len();
    let power: Vec<f64> = (0..=n / 2).map(|k| bins[k].norm_sqr()).collect();

    let peak = (1..power.len())
        .max_by(|&a, &b| power[a].total_cmp(&power[b]))
        .unwrap_or(1);
    let lo = peak.saturating_sub(HANN_MAIN_LOBE_HALF_WIDTH).max(1);
    let hi = (peak + HANN_MAIN_LOBE_HALF_WIDTH).min(power.len() - 1);

    let fundamental: f64 = power[lo..=hi].iter().sum();
    let total: f64 = power[1..].iter().sum();
    let harmonics = (total - fundamental).max(0.0);

    let rms = (signal.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    // compare amplitudes in signal units
    let window_gain = n as f64 / 2.0;
    let fundamental_amp = fundamental.sqrt() / window_gain;
    if fundamental_amp == 0.0 || fundamental_amp <= 1e-12 * rms {
        return Ok(Thd {
            value: 0.0,
            status: ThdStatus::BelowFloor,
        });
    }
    Ok(Thd {
        value: (harmonics / fundamental).sqrt(),
        status: ThdStatus::Measured,
    })
}

/// Torque THD over the selected window of `trace`.
pub fn torque_thd(trace: &SimTrace, window: ThdWindow) -> Result<Thd> {
    if trace.diverged {
        return Ok(Thd {
            value: PENALTY_THD,
            status: ThdStatus::Diverged,
        });
    }
    signal_thd(window.select(&trace.torque))
}

/// Both objectives for a trace; diverged traces map to the penalty pair.
pub fn fitness(trace: &SimTrace, window: ThdWindow) -> Result<FitnessPair> {
    if trace.diverged {
        return Ok(FitnessPair::penalty());
    }
    let thd = torque_thd(trace, window)?;
    Ok(FitnessPair::new(iae(trace), thd.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn trace_from(reference: Vec<f64>, position: Vec<f64>, ts: f64) -> SimTrace {
        let n = reference.len();
        let mut t = SimTrace::with_capacity(ts, n);
        for k in 0..n {
            t.push(TraceSample {
                time: k as f64 * ts,
                position_ref: reference[k],
                position: position[k],
                speed: 0.0,
                torque: 0.0,
                currents: [0.0; 3],
                actuation: 0.0,
            });
        }
        t
    }

    #[test]
    fn iae_examples() {
        let ts = 0.001;
        let perfect = trace_from(vec![1.0; 100], vec![1.0; 100], ts);
        assert_eq!(iae(&perfect), 0.0);

        let constant = trace_from(vec![0.5; 2000], vec![0.0; 2000], ts);
        assert_relative_eq!(iae(&constant), 1.0, max_relative = 1e-12);

        let n = 1000;
        let decay: Vec<f64> = (0..n).map(|k| 1.0 - k as f64 / n as f64).collect();
        let tri = trace_from(decay, vec![0.0; n], ts);
        assert!((iae(&tri) - 0.5).abs() <= ts);
    }

    #[test]
    fn constant_signal_has_empty_spectrum() {
        let s = magnitude_spectrum(&[3.25; 64], 1e-3).unwrap();
        assert!(s.iter().all(|&(_, m)| m < 1e-12));
        assert_eq!(signal_thd(&[3.25; 64]).unwrap().value, 0.0);
    }

    #[test]
    fn bin_centered_tone_amplitude() {
        let n = 512;
        let ts = 1e-3;
        let bin = 37;
        let x: Vec<f64> = (0..n)
            .map(|k| 1.0 + 0.8 * (TAU * bin as f64 * k as f64 / n as f64).sin())
            .collect();
        let s = magnitude_spectrum(&x, ts).unwrap();
        let (f, m) = s[bin];
        assert_relative_eq!(f, bin as f64 / (n as f64 * ts), max_relative = 1e-12);
        assert!((m - 0.8).abs() < 0.008);
        let dominant = (0..s.len()).max_by(|&a, &b| s[a].1.total_cmp(&s[b].1)).unwrap();
        assert_eq!(dominant, bin);
    }

    #[test]
    fn short_signal_rejected() {
        assert!(matches!(
            magnitude_spectrum(&[1.0; 15], 1.0),
            Err(Error::SignalTooShort { len: 15, .. })
        ));
    }

    #[test]
    fn thd_of_tone_and_two_tone() {
        let n = 4096;
        let tone = |k: usize, bin: f64| (TAU * bin * k as f64 / n as f64).sin();
        let pure: Vec<f64> = (0..n).map(|k| 0.3 + tone(k, 20.0)).collect();
        assert!(signal_thd(&pure).unwrap().value < 0.02);
        let two: Vec<f64> = (0..n).map(|k| tone(k, 20.0) + 0.5 * tone(k, 40.0)).collect();
        assert!((signal_thd(&two).unwrap().value - 0.5).abs() < 0.02);
    }

    #[test]
    fn steady_state_window() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let w = ThdWindow::SteadyStateFraction { fraction: 0.5 };
        assert_eq!(w.select(&x), &[5.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(ThdWindow::Full.select(&x).len(), 10);
        assert!(ThdWindow::SteadyStateFraction { fraction: 0.0 }.validate().is_err());
    }

    #[test]
    fn diverged_trace_is_penalized() {
        let mut t = trace_from(vec![1.0; 32], vec![0.0; 32], 1e-3);
        t.diverged = true;
        assert_eq!(fitness(&t, ThdWindow::Full).unwrap(), FitnessPair::penalty());
        assert_eq!(torque_thd(&t, ThdWindow::Full).unwrap().status, ThdStatus::Diverged);
    }
}
