//! Position reference trajectories and load-torque profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// Single step to `amplitude` (rad, mechanical) at `start_time`.
    Step { amplitude: f64, start_time: f64 },
    /// Seeded sequence of `count` steps. Each target is drawn uniformly from
    /// `amplitude_range` with a random sign and held for a dwell drawn from
    /// `dwell_range`. The first step happens at t = 0.
    MultiStep {
        seed: u64,
        count: usize,
        amplitude_range: [f64; 2],
        dwell_range: [f64; 2],
    },
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        match self {
            Trajectory::Step {
                amplitude,
                start_time,
            } => {
                if !amplitude.is_finite() || !(start_time.is_finite() && *start_time >= 0.0) {
                    return Err(Error::Config(
                        "step needs a finite amplitude and start_time >= 0".into(),
                    ));
                }
            }
            Trajectory::MultiStep {
                count,
                amplitude_range,
                dwell_range,
                ..
            } => {
                if *count == 0 {
                    return Err(Error::Config("multi_step count must be >= 1".into()));
                }
                let [a0, a1] = *amplitude_range;
                let [d0, d1] = *dwell_range;
                if !(a0.is_finite() && a1.is_finite() && 0.0 <= a0 && a0 <= a1) {
                    return Err(Error::Config("amplitude_range must be 0 <= lo <= hi".into()));
                }
                if !(d0.is_finite() && d1.is_finite() && 0.0 < d0 && d0 <= d1) {
                    return Err(Error::Config("dwell_range must be 0 < lo <= hi".into()));
                }
            }
        }
        Ok(())
    }

    /// Breakpoints `(time, level)`; the reference is zero before the first.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        match *self {
            Trajectory::Step {
                amplitude,
                start_time,
            } => vec![(start_time, amplitude)],
            Trajectory::MultiStep {
                seed,
                count,
                amplitude_range,
                dwell_range,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut t = 0.0;
                let mut out = Vec::with_capacity(count);
                for _ in 0..count {
                    let mag = draw(&mut rng, amplitude_range);
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    out.push((t, sign * mag));
                    t += draw(&mut rng, dwell_range);
                }
                out
            }
        }
    }

    /// `(time, travel)` of every move that starts before `horizon`.
    pub fn moves(&self, horizon: f64) -> Vec<(f64, f64)> {
        let mut level = 0.0;
        self.breakpoints()
            .into_iter()
            .filter(|(t, _)| *t < horizon)
            .map(|(t, target)| {
                let travel = target - level;
                level = target;
                (t, travel)
            })
            .collect()
    }

    pub fn reference(&self) -> Reference {
        Reference {
            points: self.breakpoints(),
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..range[1])
    }
}

/// Piecewise-constant reference evaluated sample by sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    points: Vec<(f64, f64)>,
}

impl Reference {
    pub fn at(&self, t: f64) -> f64 {
        hold(&self.points, t)
    }
}

fn hold(points: &[(f64, f64)], t: f64) -> f64 {
    let k = points.partition_point(|(tp, _)| *tp <= t);
    if k == 0 {
        0.0
    } else {
        points[k - 1].1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadProfile {
    Constant { torque: f64 },
    /// Zero-order hold over `[time, torque]` points; zero before the first.
    Piecewise { points: Vec<[f64; 2]> },
}

impl LoadProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            LoadProfile::Constant { torque } if !torque.is_finite() => {
                Err(Error::Config("load torque must be finite".into()))
            }
            LoadProfile::Piecewise { points } => {
                if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                    return Err(Error::Config("load points must be finite".into()));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Config("load point times must increase".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            LoadProfile::Constant { torque } => *torque,
            LoadProfile::Piecewise { points } => {
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                hold(&pts, t)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_reference() {
        let r = Trajectory::Step {
            amplitude: 1.0,
            start_time: 0.01,
        }
        .reference();
        assert_eq!(r.at(0.0), 0.0);
        assert_eq!(r.at(0.01), 1.0);
        assert_eq!(r.at(5.0), 1.0);
    }

    #[test]
    fn multi_step_is_seeded() {
        let tr = Trajectory::MultiStep {
            seed: 7,
            count: 5,
            amplitude_range: [0.5, 2.0],
            dwell_range: [0.05, 0.1],
        };
        tr.validate().unwrap();
        let a = tr.breakpoints();
        assert_eq!(a, tr.breakpoints());
        assert_eq!(a.len(), 5);
        assert_eq!(a[0].0, 0.0);
        for w in a.windows(2) {
            let dwell = w[1].0 - w[0].0;
            assert!((0.05..0.1).contains(&dwell));
        }
        assert!(a.iter().all(|(_, l)| (0.5..2.0).contains(&l.abs())));
    }

    #[test]
    fn piecewise_load_holds() {
        let l = LoadProfile::Piecewise {
            points: vec![[0.1, 1e-3], [0.2, -2e-3]],
        };
        l.validate().unwrap();
        assert_eq!(l.at(0.05), 0.0);
        assert_eq!(l.at(0.15), 1e-3);
        assert_eq!(l.at(0.25), -2e-3);
        let bad = LoadProfile::Piecewise {
            points: vec![[0.2, 0.0], [0.1, 0.0]],
        };
        assert!(bad.validate().is_err());
    }
}
