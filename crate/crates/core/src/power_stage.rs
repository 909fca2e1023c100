//! Average-value voltage-source inverter.
//!
//! Six-step mode energizes one phase pair per 60° sector; the idle phase is
//! driven with its own back-EMF so the linear motor model sees no current
//! forced into it. FOC mode applies the inverse-transformed voltages directly
//! (sinusoidal modulation), limited to the linear region `Vdc/√3`.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

use crate::error::{Error, Result};
use crate::motor::{wrap_angle, Phase};

/// Electrical angle where sector 0 begins: phase A enters its positive flat
/// top while phase B sits on its negative one.
pub const SECTOR_OFFSET: f64 = FRAC_PI_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommutationSector(u8);

impl CommutationSector {
    pub fn new(sector: u8) -> Result<Self> {
        if sector > 5 {
            return Err(Error::InvalidSector(sector));
        }
        Ok(Self(sector))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// `(high, low, floating)` phases for positive duty.
    pub fn phases(self) -> (Phase, Phase, Phase) {
        use Phase::*;
        match self.0 {
            0 => (A, B, C),
            1 => (A, C, B),
            2 => (B, C, A),
            3 => (B, A, C),
            4 => (C, A, B),
            _ => (C, B, A),
        }
    }
}

/// Ideal Hall decoding of the electrical angle into a 60° sector.
pub fn hall_sector(theta: f64) -> CommutationSector {
    let rel = wrap_angle(theta - SECTOR_OFFSET);
    let s = (rel / FRAC_PI_3).floor() as u8;
    CommutationSector(s.min(5))
}

/// Phase voltages produced by one six-step drive command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixStepDrive {
    pub voltages: [f64; 3],
    pub high: Phase,
    pub low: Phase,
    pub floating: Phase,
    vdc: f64,
}

impl SixStepDrive {
    /// Sets the idle phase to its instantaneous back-EMF, limited to the
    /// half-link rail.
    pub fn with_floating_emf(mut self, emf: [f64; 3]) -> Self {
        let k = self.floating.index();
        let rail = 0.5 * self.vdc;
        self.voltages[k] = emf[k].clamp(-rail, rail);
        self
    }
}

/// Applies `±duty·Vdc/2` to the sector's high/low pair. The floating phase is
/// left at 0 V until [`SixStepDrive::with_floating_emf`] fills it in.
pub fn six_step_voltages(sector: CommutationSector, duty: f64, vdc: f64) -> SixStepDrive {
    let duty = duty.clamp(-1.0, 1.0);
    let (high, low, floating) = sector.phases();
    let mut voltages = [0.0; 3];
    voltages[high.index()] = 0.5 * duty * vdc;
    voltages[low.index()] = -0.5 * duty * vdc;
    SixStepDrive {
        voltages,
        high,
        low,
        floating,
        vdc,
    }
}

/// Peak phase voltage reachable with sinusoidal modulation in the linear region.
pub fn modulation_limit(vdc: f64) -> f64 {
    vdc / 3f64.sqrt()
}

/// Scales `(vd, vq)` down onto the `Vdc/√3` circle when it lies outside,
/// preserving the vector angle.
pub fn clamp_modulation(vd: f64, vq: f64, vdc: f64) -> (f64, f64) {
    let limit = modulation_limit(vdc);
    let mag = vd.hypot(vq);
    // a few ulps of slack keeps the clamp idempotent after rescaling
    if mag <= limit * (1.0 + 4.0 * f64::EPSILON) {
        (vd, vq)
    } else {
        let k = limit / mag;
        (vd * k, vq * k)
    }
}
