//! Discrete controllers, reference-frame transforms and the two cascaded
//! position control laws.

mod cascade;
mod pid;
mod transforms;

pub use cascade::{
    foc_control_step, foc_current_step, foc_speed_step, rotor_flux_angle,
    trapezoidal_control_step, trapezoidal_speed_step, CascadeConfig, CascadeState, FocOutput,
};
pub use pid::{pid_step, PidGains, PidState};
pub use transforms::{clarke, inverse_clarke, inverse_park, park};
