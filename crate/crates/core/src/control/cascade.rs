use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::pid::{pid_step, PidGains, PidState};
use super::transforms::{clarke, inverse_clarke, inverse_park, park};
use crate::error::{Error, Result};
use crate::motor::{wrap_angle, MotorState};
use crate::power_stage::clamp_modulation;

/// Angle of the rotor d-axis for a given electrical angle.
///
/// Phase A back-EMF peaks at θ = π/2, i.e. it behaves like `sin θ`, so the
/// flux axis sits at `θ + π`. With this offset a positive q current produces
/// positive torque.
pub fn rotor_flux_angle(theta: f64) -> f64 {
    wrap_angle(theta + PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    /// Outer loop: mechanical angle → speed reference (rad/s).
    pub position: PidGains,
    /// Middle loop: speed → duty (six-step) or q-current reference (FOC).
    pub speed: PidGains,
    /// dq current loops, FOC only.
    pub current: PidGains,
    pub speed_loop_divisor: u32,
    pub position_loop_divisor: u32,
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        self.position.validate()?;
        self.speed.validate()?;
        self.current.validate()?;
        if self.speed_loop_divisor == 0 || self.position_loop_divisor == 0 {
            return Err(Error::Config("loop divisors must be >= 1".into()));
        }
        Ok(())
    }
}

/// Controller memory threaded through the cascade. Outer loops hold their
/// last output between decimated ticks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CascadeState {
    pub position: PidState,
    pub speed: PidState,
    pub d_current: PidState,
    pub q_current: PidState,
    pub tick: u64,
    pub speed_ref: f64,
    /// Held output of the speed loop: duty or q-current reference.
    pub speed_output: f64,
}

impl CascadeState {
    fn update_position(&mut self, cfg: &CascadeConfig, position_ref: f64, m: &MotorState, ts: f64) {
        let div = u64::from(cfg.position_loop_divisor);
        if self.tick.is_multiple_of(div) {
            let (out, s) = pid_step(&cfg.position, self.position, position_ref, m.position, ts * div as f64);
            self.position = s;
            self.speed_ref = out;
        }
    }

    fn update_speed(&mut self, cfg: &CascadeConfig, m: &MotorState, ts: f64) {
        let div = u64::from(cfg.speed_loop_divisor);
        if self.tick.is_multiple_of(div) {
            let (out, s) = pid_step(&cfg.speed, self.speed, self.speed_ref, m.omega, ts * div as f64);
            self.speed = s;
            self.speed_output = out;
        }
    }
}

/// Six-step cascade: position PID → speed PI → duty in `[−1, 1]`.
pub fn trapezoidal_control_step(
    cfg: &CascadeConfig,
    state: &mut CascadeState,
    position_ref: f64,
    measured: &MotorState,
    ts: f64,
) -> f64 {
    state.update_position(cfg, position_ref, measured, ts);
    state.update_speed(cfg, measured, ts);
    state.tick += 1;
    state.speed_output.clamp(-1.0, 1.0)
}

/// Six-step speed loop alone, for inner-loop tuning.
pub fn trapezoidal_speed_step(
    cfg: &CascadeConfig,
    state: &mut CascadeState,
    speed_ref: f64,
    measured: &MotorState,
    ts: f64,
) -> f64 {
    state.speed_ref = speed_ref;
    state.update_speed(cfg, measured, ts);
    state.tick += 1;
    state.speed_output.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FocOutput {
    pub voltages: [f64; 3],
    pub vd: f64,
    pub vq: f64,
    pub id: f64,
    pub iq: f64,
    pub iq_ref: f64,
}

/// FOC cascade: position PID → speed PI → iq reference; id reference is zero;
/// two current PIs produce `(vd, vq)`, limited to `Vdc/√3` and mapped back to
/// phase voltages.
pub fn foc_control_step(
    cfg: &CascadeConfig,
    state: &mut CascadeState,
    position_ref: f64,
    measured: &MotorState,
    vdc: f64,
    ts: f64,
) -> FocOutput {
    state.update_position(cfg, position_ref, measured, ts);
    state.update_speed(cfg, measured, ts);
    state.tick += 1;
    let iq_ref = state.speed_output;
    foc_current_step(cfg, state, iq_ref, measured, vdc, ts)
}

/// FOC without the position loop.
pub fn foc_speed_step(
    cfg: &CascadeConfig,
    state: &mut CascadeState,
    speed_ref: f64,
    measured: &MotorState,
    vdc: f64,
    ts: f64,
) -> FocOutput {
    state.speed_ref = speed_ref;
    state.update_speed(cfg, measured, ts);
    state.tick += 1;
    let iq_ref = state.speed_output;
    foc_current_step(cfg, state, iq_ref, measured, vdc, ts)
}

/// dq current loops for a given q-current reference.
pub fn foc_current_step(
    cfg: &CascadeConfig,
    state: &mut CascadeState,
    iq_ref: f64,
    measured: &MotorState,
    vdc: f64,
    ts: f64,
) -> FocOutput {
    let angle = rotor_flux_angle(measured.theta);
    let (alpha, beta) = clarke(measured.ia, measured.ib, measured.ic);
    let (id, iq) = park(alpha, beta, angle);

    let (vd, ds) = pid_step(&cfg.current, state.d_current, 0.0, id, ts);
    let (vq, qs) = pid_step(&cfg.current, state.q_current, iq_ref, iq, ts);
    state.d_current = ds;
    state.q_current = qs;

    let (vd, vq) = clamp_modulation(vd, vq, vdc);
    let (va, vb) = inverse_park(vd, vq, angle);
    let (a, b, c) = inverse_clarke(va, vb);
    FocOutput {
        voltages: [a, b, c],
        vd,
        vq,
        id,
        iq,
        iq_ref,
    }
}
