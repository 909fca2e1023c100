//! Reference implementations used as test oracles. Written from the model
//! equations, not from the library code.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_6, PI, TAU};

use bldc_tune::metrics::FitnessPair;
use bldc_tune::motor::MotorParams;

/// Phase-A back-EMF shape by linear interpolation through its corner points.
pub fn trapezoid(theta: f64) -> f64 {
    let knots = [
        (0.0, 0.0),
        (FRAC_PI_6, 1.0),
        (5.0 * FRAC_PI_6, 1.0),
        (7.0 * FRAC_PI_6, -1.0),
        (11.0 * FRAC_PI_6, -1.0),
        (TAU, 0.0),
    ];
    let t = theta.rem_euclid(TAU);
    for w in knots.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if t <= x1 {
            return y0 + (y1 - y0) * (t - x0) / (x1 - x0);
        }
    }
    0.0
}

pub fn shapes(theta: f64) -> [f64; 3] {
    [
        trapezoid(theta),
        trapezoid(theta - 2.0 * PI / 3.0),
        trapezoid(theta - 4.0 * PI / 3.0),
    ]
}

/// Continuous-time right-hand side; x = [ia, ib, ic, ω, θ, position].
pub fn motor_rhs(p: &MotorParams, x: &[f64; 6], v: [f64; 3], load: f64) -> [f64; 6] {
    let f = shapes(x[4]);
    let w = x[3];
    let mut dx = [0.0; 6];
    let mut te = 0.0;
    for k in 0..3 {
        dx[k] = (v[k] - p.resistance * x[k] - p.back_emf_const * f[k] * w) / p.inductance;
        te += p.back_emf_const * f[k] * x[k];
    }
    dx[3] = (te - p.friction * w - load) / p.inertia;
    dx[4] = p.pole_count as f64 / 2.0 * w;
    dx[5] = w;
    dx
}

/// Classical RK4 over `horizon` with constant input.
pub fn rk4(p: &MotorParams, x0: [f64; 6], v: [f64; 3], load: f64, horizon: f64, h: f64) -> [f64; 6] {
    let n = (horizon / h).round() as usize;
    let mut x = x0;
    let add = |a: &[f64; 6], b: &[f64; 6], s: f64| {
        let mut o = *a;
        for i in 0..6 {
            o[i] += s * b[i];
        }
        o
    };
    for _ in 0..n {
        let k1 = motor_rhs(p, &x, v, load);
        let k2 = motor_rhs(p, &add(&x, &k1, h / 2.0), v, load);
        let k3 = motor_rhs(p, &add(&x, &k2, h / 2.0), v, load);
        let k4 = motor_rhs(p, &add(&x, &k3, h), v, load);
        for i in 0..6 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// Fronts by repeated extraction of the non-dominated subset, O(n³).
pub fn brute_force_fronts(points: &[[f64; 2]]) -> Vec<Vec<usize>> {
    let dom = |a: [f64; 2], b: [f64; 2]| a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dom(points[j], points[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Naive two-sided DFT.
pub fn direct_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, v) in x.iter().enumerate() {
                let a = -TAU * (k * j) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            (re, im)
        })
        .collect()
}

/// Plain PI with clamping anti-windup.
pub struct PiOracle {
    pub kp: f64,
    pub ki: f64,
    pub lo: f64,
    pub hi: f64,
    pub integral: f64,
}

impl PiOracle {
    pub fn update(&mut self, e: f64, dt: f64) -> f64 {
        let trial = self.integral + self.ki * e * dt;
        let u = self.kp * e + trial;
        let saturating = (u > self.hi && e > 0.0) || (u < self.lo && e < 0.0);
        if !saturating {
            self.integral = trial;
        }
        self.integral = self.integral.max(self.lo).min(self.hi);
        (self.kp * e + self.integral).max(self.lo).min(self.hi)
    }
}

/// Schaffer's problem N.1 over a single gene x: (x², (x − 2)²).
pub fn schaffer(genes: &[f64]) -> FitnessPair {
    let x = genes[0];
    FitnessPair::new(x * x, (x - 2.0) * (x - 2.0))
}

/// Two-objective problem with a convex front f2 = (1 − √f1)² on f1 ∈ [0, 1].
pub fn sphere_pair(genes: &[f64]) -> FitnessPair {
    let x = genes[0];
    let rest: f64 = genes[1..].iter().map(|g| g * g).sum();
    FitnessPair::new(x * x + rest, (1.0 - x).powi(2) + rest)
}
