//! Closed-loop assembly: controller → inverter → motor, one sample at a time.

use crate::control::{foc_control_step, trapezoidal_control_step, CascadeConfig, CascadeState};
use crate::error::{Error, Result};
use crate::metrics::{self, FitnessPair, SimTrace, ThdWindow, TraceSample};
use crate::motor::{self, back_emf, electromagnetic_torque, wrap_angle, MotorInput, MotorParams, MotorState};
use crate::power_stage::{hall_sector, six_step_voltages};

use super::config::{ControlScheme, ExperimentConfig};
use super::trajectory::{LoadProfile, Reference};

/// Phase voltages and the logged actuation for one control tick.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Actuation {
    pub voltages: [f64; 3],
    /// Duty (six-step) or vq (FOC).
    pub logged: f64,
}

/// Runs the scheme's position cascade for one tick.
pub(crate) fn position_tick(
    scheme: ControlScheme,
    cascade: &CascadeConfig,
    state: &mut CascadeState,
    position_ref: f64,
    m: &MotorState,
    params: &MotorParams,
) -> Actuation {
    let ts = params.sample_time;
    match scheme {
        ControlScheme::Trapezoidal => {
            let duty = trapezoidal_control_step(cascade, state, position_ref, m, ts);
            six_step_actuation(duty, m, params)
        }
        ControlScheme::Foc => {
            let out = foc_control_step(cascade, state, position_ref, m, params.dc_link_voltage, ts);
            Actuation {
                voltages: out.voltages,
                logged: out.vq,
            }
        }
    }
}

pub(crate) fn six_step_actuation(duty: f64, m: &MotorState, params: &MotorParams) -> Actuation {
    let drive = six_step_voltages(hall_sector(m.theta), duty, params.dc_link_voltage)
        .with_floating_emf(back_emf(m, params));
    Actuation {
        voltages: drive.voltages,
        logged: duty,
    }
}

/// A fully resolved closed loop ready to run.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub params: MotorParams,
    pub scheme: ControlScheme,
    pub cascade: CascadeConfig,
    reference: Reference,
    load: LoadProfile,
    samples: usize,
    initial_theta: f64,
}

impl Simulator {
    /// Builds the loop from `config`; `position_genes` replaces the position
    /// PID's `[kp, ki, kd]` when given.
    pub fn new(config: &ExperimentConfig, position_genes: Option<&[f64]>) -> Result<Self> {
        let params = config.params();
        params.validate()?;
        if let Some(g) = position_genes {
            if g.len() != 3 {
                return Err(Error::Config(format!(
                    "position genes must be [kp, ki, kd], got {} values",
                    g.len()
                )));
            }
        }
        let cascade = config.cascade(position_genes);
        cascade.validate()?;
        Ok(Self {
            params,
            scheme: config.scheme,
            cascade,
            reference: config.trajectory.reference(),
            load: config.load.clone(),
            samples: config.samples(),
            initial_theta: wrap_angle(config.initial_electrical_angle),
        })
    }

    pub fn run(&self) -> SimTrace {
        let p = &self.params;
        let ts = p.sample_time;
        let mut trace = SimTrace::with_capacity(ts, self.samples);
        let mut m = MotorState {
            theta: self.initial_theta,
            ..Default::default()
        };
        let mut ctl = CascadeState::default();

        for k in 0..self.samples {
            let t = k as f64 * ts;
            let position_ref = self.reference.at(t);
            let act = position_tick(self.scheme, &self.cascade, &mut ctl, position_ref, &m, p);
            trace.push(TraceSample {
                time: t,
                position_ref,
                position: m.position,
                speed: m.omega,
                torque: electromagnetic_torque(&m, p),
                currents: m.currents(),
                actuation: act.logged,
            });
            let input = MotorInput::from_voltages(act.voltages, self.load.at(t));
            match motor::step(&m, &input, p) {
                Ok(next) => m = next,
                Err(_) => {
                    trace.diverged = true;
                    break;
                }
            }
        }
        trace
    }
}

/// Simulates `config` with the position PID set to `genes` (`[kp, ki, kd]`).
pub fn run_simulation(config: &ExperimentConfig, genes: &[f64]) -> Result<SimTrace> {
    Ok(Simulator::new(config, Some(genes))?.run())
}

/// Fitness of one candidate; any failure maps to the penalty pair.
pub fn evaluate_candidate(config: &ExperimentConfig, genes: &[f64]) -> FitnessPair {
    run_simulation(config, genes)
        .and_then(|trace| fitness_of(&trace, config.tuning.thd_window))
        .unwrap_or_else(|_| FitnessPair::penalty())
}

pub fn fitness_of(trace: &SimTrace, window: ThdWindow) -> Result<FitnessPair> {
    metrics::fitness(trace, window)
}
