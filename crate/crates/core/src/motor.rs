//! Discrete-time state-space model of a three-phase BLDC motor.
//!
//! State `x = [ia, ib, ic, ω, θ]` (phase currents, mechanical speed, electrical
//! angle), input `u = [Va, Vb, Vc, Tl]`. The continuous matrices depend on the
//! electrical angle through the back-EMF shape, so they are rebuilt at every
//! step and discretized with forward Euler: `Ad = Ts·A + I`, `Bd = Ts·B`.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI, TAU};

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type StateMatrix = SMatrix<f64, 5, 5>;
pub type InputMatrix = SMatrix<f64, 5, 4>;
pub type StateVector = SVector<f64, 5>;
pub type InputVector = SVector<f64, 4>;

/// Magnitude above which any state component is treated as a blow-up.
pub const DEFAULT_BLOWUP_BOUND: f64 = 1e6;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        match self {
            Phase::A => 0,
            Phase::B => 1,
            Phase::C => 2,
        }
    }

    /// Electrical lag of this phase relative to phase A.
    pub fn lag(self) -> f64 {
        match self {
            Phase::A => 0.0,
            Phase::B => 2.0 * PI / 3.0,
            Phase::C => 4.0 * PI / 3.0,
        }
    }
}

/// Unit trapezoidal back-EMF waveform of `phase` at electrical angle `theta`.
///
/// Phase A is flat at +1 on `[π/6, 5π/6]` (centered at π/2), ramps down over
/// 60°, is flat at −1 on `[7π/6, 11π/6]` and ramps back up. Phases B and C are
/// the same shape delayed by 120° and 240°.
pub fn back_emf_shape(theta: f64, phase: Phase) -> f64 {
    let phi = wrap_angle(theta - phase.lag());
    const FALL_START: f64 = 5.0 * FRAC_PI_6;
    const LOW_START: f64 = 7.0 * FRAC_PI_6;
    const RISE_START: f64 = 11.0 * FRAC_PI_6;

    if (FRAC_PI_6..=FALL_START).contains(&phi) {
        1.0
    } else if phi > FALL_START && phi < LOW_START {
        1.0 - 2.0 * (phi - FALL_START) / FRAC_PI_3
    } else if (LOW_START..=RISE_START).contains(&phi) {
        -1.0
    } else {
        // rising ramp straddles the wrap point
        let rel = wrap_angle(phi - RISE_START);
        -1.0 + 2.0 * rel / FRAC_PI_3
    }
}

/// Back-EMF shapes `[fa, fb, fc]` at `theta`.
pub fn back_emf_shapes(theta: f64) -> [f64; 3] {
    Phase::ALL.map(|p| back_emf_shape(theta, p))
}

/// Electrical and mechanical constants of the motor, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    /// Phase resistance R, ohm.
    pub resistance: f64,
    /// Effective phase inductance L − M, henry.
    pub inductance: f64,
    /// Back-EMF constant ke, V·s/rad (mechanical).
    pub back_emf_const: f64,
    /// Torque constant kt, N·m/A. Stored for reference; torque is computed
    /// from `back_emf_const`.
    pub torque_const: f64,
    /// Rotor inertia J, kg·m².
    pub inertia: f64,
    /// Viscous friction B, N·m·s.
    pub friction: f64,
    /// Number of poles P (not pole pairs).
    pub pole_count: u32,
    /// DC-link voltage, V.
    pub dc_link_voltage: f64,
    /// Simulation and control sample time Ts, s.
    pub sample_time: f64,
    /// Divergence threshold on any state magnitude.
    pub blowup_bound: f64,
}

impl MotorParams {
    /// GBM2804H-100T gimbal motor constants, 7 pole pairs, 12 V link, 20 kHz.
    pub fn gimbal_2804() -> Self {
        Self {
            resistance: 5.6,
            inductance: 0.92e-3,
            back_emf_const: 0.047,
            torque_const: 0.07,
            inertia: 480e-9,
            friction: 550e-9,
            pole_count: 14,
            dc_link_voltage: 12.0,
            sample_time: 5e-5,
            blowup_bound: DEFAULT_BLOWUP_BOUND,
        }
    }

    pub fn pole_pairs(&self) -> f64 {
        f64::from(self.pole_count) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("resistance", self.resistance),
            ("inductance", self.inductance),
            ("back_emf_const", self.back_emf_const),
            ("inertia", self.inertia),
            ("dc_link_voltage", self.dc_link_voltage),
            ("sample_time", self.sample_time),
            ("blowup_bound", self.blowup_bound),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if !(self.friction.is_finite() && self.friction >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "friction must be finite and >= 0, got {}",
                self.friction
            )));
        }
        if !self.torque_const.is_finite() {
            return Err(Error::InvalidParams("torque_const must be finite".into()));
        }
        if self.pole_count < 2 || !self.pole_count.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "pole_count must be even and >= 2, got {} (a 7-pole-pair machine has 14 poles)",
                self.pole_count
            )));
        }
        Ok(())
    }
}

impl Default for MotorParams {
    fn default() -> Self {
        Self::gimbal_2804()
    }
}

/// Motor state. `theta` is electrical and wrapped to `[0, 2π)`; `position` is
/// the unwrapped mechanical shaft angle used by the position loop.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MotorState {
    pub ia: f64,
    pub ib: f64,
    pub ic: f64,
    /// Mechanical speed, rad/s.
    pub omega: f64,
    /// Electrical angle, rad.
    pub theta: f64,
    /// Unwrapped mechanical angle, rad.
    pub position: f64,
}

impl MotorState {
    pub fn currents(&self) -> [f64; 3] {
        [self.ia, self.ib, self.ic]
    }

    pub fn to_vector(&self) -> StateVector {
        StateVector::new(self.ia, self.ib, self.ic, self.omega, self.theta)
    }

    pub fn is_finite(&self) -> bool {
        [self.ia, self.ib, self.ic, self.omega, self.theta, self.position]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn kinetic_energy(&self, params: &MotorParams) -> f64 {
        0.5 * params.inertia * self.omega * self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorInput {
    pub va: f64,
    pub vb: f64,
    pub vc: f64,
    pub load_torque: f64,
}

impl MotorInput {
    pub fn from_voltages(v: [f64; 3], load_torque: f64) -> Self {
        Self {
            va: v[0],
            vb: v[1],
            vc: v[2],
            load_torque,
        }
    }

    pub fn to_vector(&self) -> InputVector {
        InputVector::new(self.va, self.vb, self.vc, self.load_torque)
    }
}

/// Continuous-time matrices `(A, B)` at electrical angle `theta`.
///
/// `B` keeps only the four physical input columns. The speed row carries no
/// angle term and the angle row is `dθ/dt = +(P/2)·ω`.
pub fn build_state_matrices(params: &MotorParams, theta: f64) -> Result<(StateMatrix, InputMatrix)> {
    params.validate()?;
    Ok(state_matrices_unchecked(params, theta))
}

fn state_matrices_unchecked(params: &MotorParams, theta: f64) -> (StateMatrix, InputMatrix) {
    let f = back_emf_shapes(theta);
    let l = params.inductance;
    let j = params.inertia;
    let ke = params.back_emf_const;

    let mut a = StateMatrix::zeros();
    for (k, fk) in f.iter().enumerate() {
        a[(k, k)] = -params.resistance / l;
        a[(k, 3)] = -ke * fk / l;
        a[(3, k)] = ke * fk / j;
    }
    a[(3, 3)] = -params.friction / j;
    a[(4, 3)] = params.pole_pairs();

    let mut b = InputMatrix::zeros();
    for k in 0..3 {
        b[(k, k)] = 1.0 / l;
    }
    b[(3, 3)] = -1.0 / j;
    (a, b)
}

/// Forward-Euler discretization `(Ts·A + I, Ts·B)` at `theta`.
pub fn discrete_matrices(params: &MotorParams, theta: f64) -> (StateMatrix, InputMatrix) {
    let (a, b) = state_matrices_unchecked(params, theta);
    let ts = params.sample_time;
    (a * ts + StateMatrix::identity(), b * ts)
}

/// Advances the motor by one sample period.
///
/// Parameters are assumed validated (see [`MotorParams::validate`]). Returns
/// [`Error::Diverged`] when any state component leaves the blow-up bound.
pub fn step(state: &MotorState, input: &MotorInput, params: &MotorParams) -> Result<MotorState> {
    let (ad, bd) = discrete_matrices(params, state.theta);
    let next = ad * state.to_vector() + bd * input.to_vector();
    let out = MotorState {
        ia: next[0],
        ib: next[1],
        ic: next[2],
        omega: next[3],
        theta: wrap_angle(next[4]),
        position: state.position + params.sample_time * state.omega,
    };
    let bound = params.blowup_bound;
    let blown = !out.is_finite()
        || [out.ia, out.ib, out.ic, out.omega, out.position]
            .iter()
            .any(|v| v.abs() > bound);
    if blown {
        return Err(Error::Diverged { bound });
    }
    Ok(out)
}

/// Electromagnetic torque `ke·(fa·ia + fb·ib + fc·ic)`.
///
/// This is the power balance `Σ e·i / ω` with the speed cancelled, so it is
/// defined at standstill.
pub fn electromagnetic_torque(state: &MotorState, params: &MotorParams) -> f64 {
    let f = back_emf_shapes(state.theta);
    params.back_emf_const * (f[0] * state.ia + f[1] * state.ib + f[2] * state.ic)
}

/// Phase back-EMF voltages `ke·f(θ)·ω`.
pub fn back_emf(state: &MotorState, params: &MotorParams) -> [f64; 3] {
    back_emf_shapes(state.theta).map(|f| params.back_emf_const * f * state.omega)
}
