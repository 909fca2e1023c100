use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parallel-form PID gains with output limits.
///
/// The derivative acts on the measurement through a first-order filter whose
/// time constant is `Td / N` with `Td = kd / kp`. `kd = 0` gives a PI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub output_min: f64,
    pub output_max: f64,
    #[serde(default = "default_filter")]
    pub derivative_filter: f64,
}

fn default_filter() -> f64 {
    PidGains::DEFAULT_DERIVATIVE_FILTER
}

impl PidGains {
    pub const DEFAULT_DERIVATIVE_FILTER: f64 = 20.0;

    pub fn new(kp: f64, ki: f64, kd: f64, output_min: f64, output_max: f64) -> Self {
        Self {
            kp,
            ki,
            kd,
            output_min,
            output_max,
            derivative_filter: Self::DEFAULT_DERIVATIVE_FILTER,
        }
    }

    pub fn pi(kp: f64, ki: f64, limit: f64) -> Self {
        Self::new(kp, ki, 0.0, -limit, limit)
    }

    pub fn with_gains(self, kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let gains = [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)];
        for (name, g) in gains {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {g}")));
            }
        }
        if !(self.output_min.is_finite()
            && self.output_max.is_finite()
            && self.output_min < self.output_max)
        {
            return Err(Error::Config(format!(
                "output limits must satisfy min < max, got [{}, {}]",
                self.output_min, self.output_max
            )));
        }
        if !(self.derivative_filter.is_finite() && self.derivative_filter > 0.0) {
            return Err(Error::Config("derivative_filter must be > 0".into()));
        }
        Ok(())
    }

    fn filter_time_constant(&self) -> f64 {
        if self.kp > 0.0 && self.kd > 0.0 {
            self.kd / (self.kp * self.derivative_filter)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    /// Integral contribution, already scaled by `ki`.
    pub integrator: f64,
    /// `None` until the first sample; the first derivative is taken as zero.
    pub prev_measurement: Option<f64>,
    pub filtered_derivative: f64,
}

/// One controller update.
///
/// Integration is skipped when the unclamped output already saturates in the
/// direction of the error, and the integrator itself is held inside the
/// output limits.
pub fn pid_step(
    gains: &PidGains,
    state: PidState,
    reference: f64,
    measurement: f64,
    dt: f64,
) -> (f64, PidState) {
    debug_assert!(dt > 0.0);
    let error = reference - measurement;

    let raw_derivative = match state.prev_measurement {
        Some(prev) => -(measurement - prev) / dt,
        None => 0.0,
    };
    let tf = gains.filter_time_constant();
    let derivative = (tf * state.filtered_derivative + dt * raw_derivative) / (tf + dt);

    let proportional = gains.kp * error;
    let damping = gains.kd * derivative;
    let candidate = state.integrator + gains.ki * error * dt;
    let unclamped = proportional + candidate + damping;
    let winding_up = (unclamped > gains.output_max && error > 0.0)
        || (unclamped < gains.output_min && error < 0.0);
    let integrator = if winding_up {
        state.integrator
    } else {
        candidate
    }
    .clamp(gains.output_min, gains.output_max);

    let output = (proportional + integrator + damping).clamp(gains.output_min, gains.output_max);
    let next = PidState {
        integrator,
        prev_measurement: Some(measurement),
        filtered_derivative: derivative,
    };
    (output, next)
}
