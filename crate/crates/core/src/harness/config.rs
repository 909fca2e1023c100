use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::control::{CascadeConfig, PidGains};
use crate::error::{Error, Result};
use crate::metrics::ThdWindow;
use crate::motor::{MotorParams, DEFAULT_BLOWUP_BOUND};
use crate::nsga2::{Bounds, Nsga2Config};

use super::trajectory::{LoadProfile, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlScheme {
    Trapezoidal,
    Foc,
}

impl ControlScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlScheme::Trapezoidal => "trapezoidal",
            ControlScheme::Foc => "foc",
        }
    }
}

impl fmt::Display for ControlScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ControlScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoidal" => Ok(ControlScheme::Trapezoidal),
            "foc" => Ok(ControlScheme::Foc),
            other => Err(Error::Config(format!(
                "unknown control scheme {other:?}, expected trapezoidal or foc"
            ))),
        }
    }
}

/// Motor constants as written on the datasheet. Converted to SI by
/// [`MotorSpec::to_params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorSpec {
    pub resistance_ohm: f64,
    pub inductance_mh: f64,
    /// V·s/rad
    pub back_emf_const: f64,
    /// N·m/A, informational
    pub torque_const: f64,
    /// nN·m·s²
    pub inertia_nnms2: f64,
    /// nN·m·s
    pub friction_nnms: f64,
    /// Poles, not pole pairs.
    pub pole_count: u32,
    pub dc_link_voltage: f64,
    pub sample_time_s: f64,
    #[serde(default = "default_blowup")]
    pub blowup_bound: f64,
}

fn default_blowup() -> f64 {
    DEFAULT_BLOWUP_BOUND
}

impl Default for MotorSpec {
    fn default() -> Self {
        Self {
            resistance_ohm: 5.6,
            inductance_mh: 0.92,
            back_emf_const: 0.047,
            torque_const: 0.07,
            inertia_nnms2: 480.0,
            friction_nnms: 550.0,
            pole_count: 14,
            dc_link_voltage: 12.0,
            sample_time_s: 5e-5,
            blowup_bound: DEFAULT_BLOWUP_BOUND,
        }
    }
}

impl MotorSpec {
    pub fn to_params(&self) -> MotorParams {
        MotorParams {
            resistance: self.resistance_ohm,
            inductance: self.inductance_mh * 1e-3,
            back_emf_const: self.back_emf_const,
            torque_const: self.torque_const,
            inertia: self.inertia_nnms2 * 1e-9,
            friction: self.friction_nnms * 1e-9,
            pole_count: self.pole_count,
            dc_link_voltage: self.dc_link_voltage,
            sample_time: self.sample_time_s,
            blowup_bound: self.blowup_bound,
        }
    }
}

/// Outer position loop, shared by both schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionLoop {
    pub gains: PidGains,
    pub speed_loop_divisor: u32,
    pub position_loop_divisor: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidalLoops {
    /// Speed PI, output is duty.
    pub speed: PidGains,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocLoops {
    /// Speed PI, output is the q-current reference in amperes.
    pub speed: PidGains,
    /// d- and q-current PIs, output in volts.
    pub current: PidGains,
}

/// Inner-loop tuning run that precedes the position-controller search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOneConfig {
    pub enabled: bool,
    /// Speed step for the speed-loop IAE, rad/s.
    pub speed_step: f64,
    pub speed_duration: f64,
    /// q-current step for the current-loop IAE (FOC), A.
    pub current_step: f64,
    pub current_duration: f64,
    /// `[kp, ki]` search box for the six-step speed PI.
    pub trapezoidal_speed_bounds: Bounds,
    /// `[kp, ki]` search box for the FOC speed PI.
    pub foc_speed_bounds: Bounds,
    /// `[kp, ki]` search box for the FOC current PIs.
    pub current_bounds: Bounds,
    /// Pattern-search refinement passes.
    pub iterations: usize,
}

impl Default for StageOneConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            speed_step: 50.0,
            speed_duration: 0.05,
            current_step: 0.5,
            current_duration: 0.005,
            trapezoidal_speed_bounds: Bounds {
                lower: vec![1e-4, 1e-3],
                upper: vec![1.0, 1e3],
            },
            foc_speed_bounds: Bounds {
                lower: vec![1e-4, 1e-3],
                upper: vec![1.0, 1e3],
            },
            current_bounds: Bounds {
                lower: vec![0.1, 10.0],
                upper: vec![100.0, 1e6],
            },
            iterations: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    pub nsga2: Nsga2Config,
    /// `[kp, ki, kd]` search box for the position PID.
    pub bounds: Bounds,
    pub thd_window: ThdWindow,
    pub stage_one: StageOneConfig,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            nsga2: Nsga2Config::default(),
            bounds: Bounds {
                lower: vec![0.0, 0.0, 0.0],
                upper: vec![50.0, 200.0, 5.0],
            },
            thd_window: ThdWindow::default(),
            stage_one: StageOneConfig::default(),
        }
    }
}

/// Everything a run needs. Serialized verbatim as the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scheme: ControlScheme,
    /// Simulated horizon, s.
    pub sim_duration: f64,
    /// Electrical angle of the rotor at t = 0, rad.
    #[serde(default)]
    pub initial_electrical_angle: f64,
    pub motor: MotorSpec,
    pub position_loop: PositionLoop,
    pub trapezoidal: TrapezoidalLoops,
    pub foc: FocLoops,
    pub trajectory: Trajectory,
    pub load: LoadProfile,
    pub tuning: TuningConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: ControlScheme::Trapezoidal,
            sim_duration: 0.5,
            initial_electrical_angle: 0.0,
            motor: MotorSpec::default(),
            position_loop: PositionLoop {
                gains: PidGains::new(30.0, 5.0, 0.1, -100.0, 100.0),
                speed_loop_divisor: 1,
                position_loop_divisor: 1,
            },
            // inner loops: stage-one results at the default stage-one
            // settings, rounded to four significant digits
            trapezoidal: TrapezoidalLoops {
                speed: PidGains::pi(0.01715, 28.46, 1.0),
            },
            foc: FocLoops {
                speed: PidGains::pi(0.0618, 595.4, 1.0),
                current: PidGains::pi(16.62, 3.771e5, 6.928),
            },
            trajectory: Trajectory::Step {
                amplitude: 1.0,
                start_time: 0.0,
            },
            load: LoadProfile::Constant { torque: 0.0 },
            tuning: TuningConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> MotorParams {
        self.motor.to_params()
    }

    /// Cascade for the configured scheme, optionally with the position PID
    /// gains replaced by `[kp, ki, kd]`.
    pub fn cascade(&self, position_genes: Option<&[f64]>) -> CascadeConfig {
        let mut position = self.position_loop.gains;
        if let Some(g) = position_genes {
            position = position.with_gains(g[0], g[1], g.get(2).copied().unwrap_or(0.0));
        }
        let (speed, current) = match self.scheme {
            ControlScheme::Trapezoidal => (self.trapezoidal.speed, self.foc.current),
            ControlScheme::Foc => (self.foc.speed, self.foc.current),
        };
        CascadeConfig {
            position,
            speed,
            current,
            speed_loop_divisor: self.position_loop.speed_loop_divisor,
            position_loop_divisor: self.position_loop.position_loop_divisor,
        }
    }

    pub fn fixture_genes(&self) -> Vec<f64> {
        let g = &self.position_loop.gains;
        vec![g.kp, g.ki, g.kd]
    }

    pub fn samples(&self) -> usize {
        (self.sim_duration / self.motor.sample_time_s).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if !(self.sim_duration.is_finite() && self.sim_duration > 0.0) {
            return Err(Error::Config("sim_duration must be > 0".into()));
        }
        if self.samples() < 2 {
            return Err(Error::Config("sim_duration covers fewer than 2 samples".into()));
        }
        if !self.initial_electrical_angle.is_finite() {
            return Err(Error::Config("initial_electrical_angle must be finite".into()));
        }
        self.cascade(None).validate()?;
        self.trapezoidal.speed.validate()?;
        self.foc.speed.validate()?;
        self.trajectory.validate()?;
        self.load.validate()?;
        self.tuning.nsga2.validate()?;
        self.tuning.bounds.validate()?;
        if self.tuning.bounds.dims() != 3 {
            return Err(Error::Config("position PID bounds must have 3 entries".into()));
        }
        if self.tuning.bounds.lower.iter().any(|v| *v < 0.0) {
            return Err(Error::Config("position PID bounds must be non-negative".into()));
        }
        self.tuning.thd_window.validate()?;
        let s1 = &self.tuning.stage_one;
        for b in [
            &s1.trapezoidal_speed_bounds,
            &s1.foc_speed_bounds,
            &s1.current_bounds,
        ] {
            b.validate()?;
            if b.dims() != 2 || b.lower.iter().any(|v| *v <= 0.0) {
                return Err(Error::Config(
                    "stage-one bounds must be [kp, ki] with positive lower limits".into(),
                ));
            }
        }
        Ok(())
    }

    /// Non-fatal observations about the configuration, such as a trajectory
    /// that cannot be reached at the motor's no-load speed.
    pub fn warnings(&self) -> Vec<String> {
        let p = self.params();
        // six-step no-load speed: the driven pair sees 2·ke·ω of back-EMF
        let max_speed = p.dc_link_voltage / (2.0 * p.back_emf_const);
        let mut out = Vec::new();
        for (t, travel) in self.trajectory.moves(self.sim_duration) {
            let needed = travel.abs() / max_speed;
            if t + needed > self.sim_duration {
                out.push(format!(
                    "move of {travel:.3} rad at t = {t:.4} s needs at least {needed:.4} s at the \
                     {max_speed:.1} rad/s no-load speed and cannot finish within {:.4} s",
                    self.sim_duration
                ));
            }
        }
        out
    }
}
