//! Two-stage tuning campaign: optional single-objective tuning of the inner
//! loops, then NSGA-II over the position PID.

use crate::control::{foc_current_step, foc_speed_step, trapezoidal_speed_step, CascadeState, PidGains};
use crate::error::Result;
use crate::metrics::{SimTrace, PENALTY_IAE};
use crate::motor::{self, wrap_angle, MotorInput, MotorParams, MotorState};
use crate::nsga2::{evolve, Bounds, Evolution};

use super::config::{ControlScheme, ExperimentConfig};
use super::pareto::ParetoRecord;
use super::simulate::{evaluate_candidate, run_simulation, six_step_actuation};

/// Inner-loop gains chosen by stage one, with the IAE each achieved.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerTuning {
    pub speed: PidGains,
    pub speed_iae: f64,
    /// FOC only.
    pub current: Option<(PidGains, f64)>,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    /// The configuration stage two ran with, inner gains frozen.
    pub config: ExperimentConfig,
    pub inner: Option<InnerTuning>,
    pub evolution: Evolution,
    /// Final non-dominated set, ordered by IAE.
    pub pareto: Vec<ParetoRecord>,
    /// Re-simulated trace of each Pareto record, same order.
    pub traces: Vec<SimTrace>,
}

/// Runs the full campaign for `config`.
pub fn tune(config: &ExperimentConfig) -> Result<TuneOutcome> {
    config.validate()?;
    let mut resolved = config.clone();
    let inner = if config.tuning.stage_one.enabled {
        let inner = tune_inner_loops(config)?;
        apply_inner(&mut resolved, &inner);
        Some(inner)
    } else {
        None
    };

    let evolution = evolve(
        |genes| evaluate_candidate(&resolved, genes),
        &resolved.tuning.bounds,
        &resolved.tuning.nsga2,
    )?;
    let pareto = ParetoRecord::from_front(&evolution.pareto_front(), resolved.scheme);
    let traces = pareto
        .iter()
        .map(|r| run_simulation(&resolved, &r.genes()))
        .collect::<Result<Vec<_>>>()?;
    Ok(TuneOutcome {
        config: resolved,
        inner,
        evolution,
        pareto,
        traces,
    })
}

fn apply_inner(config: &mut ExperimentConfig, inner: &InnerTuning) {
    match config.scheme {
        ControlScheme::Trapezoidal => config.trapezoidal.speed = inner.speed,
        ControlScheme::Foc => {
            config.foc.speed = inner.speed;
            if let Some((current, _)) = inner.current {
                config.foc.current = current;
            }
        }
    }
}

/// Stage one: FOC current PI first (q-current step), then the speed PI with
/// the current loop frozen. Six-step control only has the speed PI.
pub fn tune_inner_loops(config: &ExperimentConfig) -> Result<InnerTuning> {
    config.validate()?;
    let s1 = &config.tuning.stage_one;
    match config.scheme {
        ControlScheme::Trapezoidal => {
            let base = config.trapezoidal.speed;
            let (g, speed_iae) = compass_search(&s1.trapezoidal_speed_bounds, s1.iterations, |x| {
                speed_step_iae(config, ControlScheme::Trapezoidal, base.with_gains(x[0], x[1], 0.0), config.foc.current)
            });
            Ok(InnerTuning {
                speed: base.with_gains(g[0], g[1], 0.0),
                speed_iae,
                current: None,
            })
        }
        ControlScheme::Foc => {
            let cur_base = config.foc.current;
            let (c, current_iae) = compass_search(&s1.current_bounds, s1.iterations, |x| {
                current_step_iae(config, cur_base.with_gains(x[0], x[1], 0.0))
            });
            let current = cur_base.with_gains(c[0], c[1], 0.0);
            let base = config.foc.speed;
            let (g, speed_iae) = compass_search(&s1.foc_speed_bounds, s1.iterations, |x| {
                speed_step_iae(config, ControlScheme::Foc, base.with_gains(x[0], x[1], 0.0), current)
            });
            Ok(InnerTuning {
                speed: base.with_gains(g[0], g[1], 0.0),
                speed_iae,
                current: Some((current, current_iae)),
            })
        }
    }
}

fn initial_state(config: &ExperimentConfig) -> MotorState {
    MotorState {
        theta: wrap_angle(config.initial_electrical_angle),
        ..Default::default()
    }
}

fn steps(duration: f64, params: &MotorParams) -> usize {
    (duration / params.sample_time).round() as usize
}

/// IAE of the speed loop alone after a step of `stage_one.speed_step`.
pub fn speed_step_iae(config: &ExperimentConfig, scheme: ControlScheme, speed: PidGains, current: PidGains) -> f64 {
    let p = config.params();
    let ts = p.sample_time;
    let target = config.tuning.stage_one.speed_step;
    let mut cascade = config.cascade(None);
    cascade.speed = speed;
    cascade.current = current;
    let mut ctl = CascadeState::default();
    let mut m = initial_state(config);
    let mut iae = 0.0;
    for k in 0..steps(config.tuning.stage_one.speed_duration, &p) {
        iae += ts * (target - m.omega).abs();
        let voltages = match scheme {
            ControlScheme::Trapezoidal => {
                let duty = trapezoidal_speed_step(&cascade, &mut ctl, target, &m, ts);
                six_step_actuation(duty, &m, &p).voltages
            }
            ControlScheme::Foc => foc_speed_step(&cascade, &mut ctl, target, &m, p.dc_link_voltage, ts).voltages,
        };
        let load = config.load.at(k as f64 * ts);
        match motor::step(&m, &MotorInput::from_voltages(voltages, load), &p) {
            Ok(next) => m = next,
            Err(_) => return PENALTY_IAE,
        }
    }
    iae
}

/// IAE of the dq current loops after a q-current step, summed over both axes.
pub fn current_step_iae(config: &ExperimentConfig, current: PidGains) -> f64 {
    let p = config.params();
    let ts = p.sample_time;
    let target = config.tuning.stage_one.current_step;
    let mut cascade = config.cascade(None);
    cascade.current = current;
    let mut ctl = CascadeState::default();
    let mut m = initial_state(config);
    let mut iae = 0.0;
    for _ in 0..steps(config.tuning.stage_one.current_duration, &p) {
        let out = foc_current_step(&cascade, &mut ctl, target, &m, p.dc_link_voltage, ts);
        iae += ts * ((target - out.iq).abs() + out.id.abs());
        match motor::step(&m, &MotorInput::from_voltages(out.voltages, 0.0), &p) {
            Ok(next) => m = next,
            Err(_) => return PENALTY_IAE,
        }
    }
    iae
}

/// Deterministic compass search in log space over a positive box. Starts at
/// the box's geometric centre with a quarter-range step and halves the step
/// whenever no axis move improves. Returns the best point and its cost.
pub fn compass_search<F>(bounds: &Bounds, iterations: usize, cost: F) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let lo: Vec<f64> = bounds.lower.iter().map(|v| v.ln()).collect();
    let hi: Vec<f64> = bounds.upper.iter().map(|v| v.ln()).collect();
    let eval = |x: &[f64]| {
        let mut g: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        bounds.clip(&mut g);
        let c = cost(&g);
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    };
    let mut x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut step: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.25 * (b - a)).collect();
    let mut best = eval(&x);

    for _ in 0..iterations {
        let mut improved: Option<(Vec<f64>, f64)> = None;
        for d in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + dir * step[d]).clamp(lo[d], hi[d]);
                if y[d] == x[d] {
                    continue;
                }
                let c = eval(&y);
                let bar = improved.as_ref().map_or(best, |(_, b)| *b);
                if c < bar {
                    improved = Some((y, c));
                }
            }
        }
        match improved {
            Some((y, c)) => {
                x = y;
                best = c;
            }
            None => step.iter_mut().for_each(|s| *s *= 0.5),
        }
    }
    let mut g: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    // exp(ln v) can land an ulp outside the box
    bounds.clip(&mut g);
    (g, best)
}
