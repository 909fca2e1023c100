mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI, TAU};

use approx::assert_relative_eq;
use bldc_tune::motor::{
    back_emf, back_emf_shape, back_emf_shapes, build_state_matrices, electromagnetic_torque, step, wrap_angle,
    MotorInput, MotorParams, MotorState, Phase,
};
use bldc_tune::power_stage::{clamp_modulation, hall_sector, modulation_limit, six_step_voltages};
use proptest::prelude::*;

fn table() -> MotorParams {
    MotorParams::gimbal_2804()
}

fn state(x: [f64; 6]) -> MotorState {
    MotorState {
        ia: x[0],
        ib: x[1],
        ic: x[2],
        omega: x[3],
        theta: x[4],
        position: x[5],
    }
}

fn simulate(p: &MotorParams, x0: MotorState, v: [f64; 3], horizon: f64) -> MotorState {
    let n = (horizon / p.sample_time).round() as usize;
    let u = MotorInput::from_voltages(v, 0.0);
    (0..n).fold(x0, |m, _| step(&m, &u, p).unwrap())
}

#[test]
fn single_step_phase_current() {
    let p = table();
    let next = step(&MotorState::default(), &MotorInput::from_voltages([12.0, 0.0, 0.0], 0.0), &p).unwrap();
    let expected = 5e-5 * 12.0 / 0.92e-3;
    assert_relative_eq!(next.ia, expected, max_relative = 1e-12);
    assert_relative_eq!(next.ia, 0.6522, epsilon = 1e-4);
    assert_eq!([next.ib, next.ic, next.omega, next.theta, next.position], [0.0; 5]);
}

#[test]
fn friction_decay_row() {
    let p = table();
    let m = MotorState {
        omega: 10.0,
        ..Default::default()
    };
    let next = step(&m, &MotorInput::default(), &p).unwrap();
    assert_relative_eq!(next.omega, 10.0 * (1.0 - 5e-5 * 550e-9 / 480e-9), max_relative = 1e-12);
    assert_relative_eq!(next.theta, 5e-5 * 7.0 * 10.0, max_relative = 1e-12);
    assert_relative_eq!(next.position, 5e-5 * 10.0, max_relative = 1e-12);
}

#[test]
fn zero_is_a_fixed_point() {
    let next = step(&MotorState::default(), &MotorInput::default(), &table()).unwrap();
    assert_eq!(next, MotorState::default());
}

#[test]
fn euler_error_shrinks_first_order() {
    let coarse = table();
    let fine = MotorParams {
        sample_time: 5e-6,
        ..coarse
    };
    let x0 = [0.0, 0.0, 0.0, 100.0, 0.3, 0.0];
    let horizon = 0.1;
    let reference = common::rk4(&coarse, x0, [0.0; 3], 0.0, horizon, 5e-7);
    let err = |p: &MotorParams| {
        let m = simulate(p, state(x0), [0.0; 3], horizon);
        (m.omega - reference[3]).abs() + (m.position - reference[5]).abs()
    };
    let (e1, e2) = (err(&coarse), err(&fine));
    let ratio = e1 / e2;
    assert!((5.0..20.0).contains(&ratio), "errors {e1:e} {e2:e}, ratio {ratio}");
}

#[test]
fn back_emf_matches_interpolated_trapezoid() {
    for k in 0..3600 {
        let theta = TAU * k as f64 / 3600.0;
        let got = back_emf_shapes(theta);
        let want = common::shapes(theta);
        for i in 0..3 {
            assert!((got[i] - want[i]).abs() < 1e-12, "theta {theta} phase {i}");
        }
    }
    assert_eq!(back_emf_shape(FRAC_PI_2, Phase::A), 1.0);
    assert_eq!(back_emf_shape(FRAC_PI_2 + 2.0 * PI / 3.0, Phase::B), 1.0);
}

#[test]
fn back_emf_sum_band() {
    for k in 0..6000 {
        let theta = TAU * (k as f64 + 0.5) / 6000.0;
        let s: f64 = back_emf_shapes(theta).iter().sum();
        assert!(s.abs() <= 1.0 + 1e-12);
    }
    // two phases always sit on opposite flat tops, so the sum is the ramping
    // phase's value, zero at each ramp midpoint
    for k in 0..6 {
        let c = k as f64 * FRAC_PI_3;
        let s: f64 = back_emf_shapes(c).iter().sum();
        assert!(s.abs() < 1e-12, "theta {c}: {s}");
    }
    for k in 0..600 {
        let theta = TAU * (k as f64 + 0.5) / 600.0;
        let f = back_emf_shapes(theta);
        let ramping: Vec<f64> = f.iter().copied().filter(|v| v.abs() < 1.0).collect();
        let s: f64 = f.iter().sum();
        if let [r] = ramping[..] {
            assert!((s - r).abs() < 1e-12);
        }
    }
}

#[test]
fn state_matrices_match_continuous_equations() {
    let p = table();
    let x = [0.3, -0.1, -0.2, 40.0, 2.0, 0.0];
    let v = [1.5, -2.0, 0.25];
    let (a, b) = build_state_matrices(&p, x[4]).unwrap();
    let xv = nalgebra::SVector::<f64, 5>::from_column_slice(&x[..5]);
    let uv = nalgebra::SVector::<f64, 4>::new(v[0], v[1], v[2], 1e-4);
    let got = a * xv + b * uv;
    let want = common::motor_rhs(&p, &x, v, 1e-4);
    for i in 0..5 {
        assert_relative_eq!(got[i], want[i], max_relative = 1e-12, epsilon = 1e-9);
    }
    assert_relative_eq!(a[(3, 3)], -1.1458333333333333, max_relative = 1e-12);
}

#[test]
fn friction_alone_never_adds_kinetic_energy() {
    // with no back-EMF coupling only the friction row acts on ω
    let p = MotorParams {
        back_emf_const: 0.0,
        ..table()
    };
    for omega in [1.0, 50.0, -200.0, 800.0] {
        let mut m = MotorState {
            omega,
            theta: 0.7,
            ..Default::default()
        };
        for _ in 0..20_000 {
            let next = step(&m, &MotorInput::default(), &p).unwrap();
            assert!(next.kinetic_energy(&p) <= m.kinetic_energy(&p));
            m = next;
        }
    }
}

#[test]
fn coupled_decay_loses_energy_overall() {
    // energy sloshes between windings and rotor, so it is not monotone per
    // step; the continuous equations are dissipative and the discrete run
    // ends far below its start
    let p = table();
    let stored = |i: &[f64], w: f64| 0.5 * p.inductance * i.iter().map(|x| x * x).sum::<f64>() + 0.5 * p.inertia * w * w;
    let mut x = [0.0, 0.0, 0.0, 200.0, 0.7, 0.0];
    let mut last = stored(&x[..3], x[3]);
    for _ in 0..200 {
        x = common::rk4(&p, x, [0.0; 3], 0.0, 1e-4, 1e-7);
        let e = stored(&x[..3], x[3]);
        assert!(e <= last * (1.0 + 1e-12));
        last = e;
    }
    let end = simulate(&p, state([0.0, 0.0, 0.0, 200.0, 0.7, 0.0]), [0.0; 3], 0.02);
    assert!(end.kinetic_energy(&p) < 1e-3 * 0.5 * p.inertia * 200.0 * 200.0);
}

#[test]
fn euler_energy_identity() {
    // E = ½L·Σi² + ½J·ω²; one Euler step changes it by Ts·P + ½Ts²·ẋᵀQẋ,
    // where P is supply power minus copper, friction and load losses.
    let p = table();
    let x = [0.4, -0.3, 0.1, 120.0, 1.1, 0.0];
    let v = [3.0, -1.0, 0.5];
    let load = 2e-4;
    let m = state(x);
    let next = step(&m, &MotorInput::from_voltages(v, load), &p).unwrap();
    let energy = |s: &MotorState| {
        0.5 * p.inductance * (s.ia * s.ia + s.ib * s.ib + s.ic * s.ic) + 0.5 * p.inertia * s.omega * s.omega
    };
    let i = [x[0], x[1], x[2]];
    let power: f64 = (0..3).map(|k| v[k] * i[k] - p.resistance * i[k] * i[k]).sum::<f64>()
        - p.friction * x[3] * x[3]
        - load * x[3];
    let d = common::motor_rhs(&p, &x, v, load);
    let q = (0..3).map(|k| p.inductance * d[k] * d[k]).sum::<f64>() + p.inertia * d[3] * d[3];
    let ts = p.sample_time;
    assert_relative_eq!(energy(&next) - energy(&m), ts * power + 0.5 * ts * ts * q, max_relative = 1e-9);
}

#[test]
fn torque_example_and_zero_currents() {
    let p = table();
    let m = MotorState {
        ia: 1.0,
        ib: -1.0,
        theta: FRAC_PI_3,
        ..Default::default()
    };
    assert_relative_eq!(electromagnetic_torque(&m, &p), 0.094, max_relative = 1e-12);
    assert_eq!(electromagnetic_torque(&MotorState { theta: 1.0, ..Default::default() }, &p), 0.0);
}

#[test]
fn six_step_voltage_table() {
    let mut roles = [[0usize; 3]; 3];
    for s in 0..6u8 {
        let sector = bldc_tune::power_stage::CommutationSector::new(s).unwrap();
        let d = six_step_voltages(sector, 1.0, 12.0);
        assert_relative_eq!(d.voltages[d.high.index()] - d.voltages[d.low.index()], 12.0);
        roles[d.high.index()][0] += 1;
        roles[d.low.index()][1] += 1;
        roles[d.floating.index()][2] += 1;
    }
    assert_eq!(roles, [[2; 3]; 3]);
    assert!(bldc_tune::power_stage::CommutationSector::new(6).is_err());
}

#[test]
fn forward_six_step_torque_is_positive_in_sector_interiors() {
    let p = table();
    for k in 0..600 {
        // stay 1° clear of each sector edge
        let sector_pos = (k % 100) as f64 / 100.0;
        if !(0.02..0.98).contains(&sector_pos) {
            continue;
        }
        let theta = FRAC_PI_6 + FRAC_PI_3 * ((k / 100) as f64 + sector_pos);
        let d = six_step_voltages(hall_sector(theta), 0.8, 12.0);
        // steady driven-pair current in the direction the voltage pushes
        let mut m = MotorState {
            theta: wrap_angle(theta),
            ..Default::default()
        };
        m.ia = d.voltages[0].signum() * (d.voltages[0] != 0.0) as i32 as f64;
        m.ib = d.voltages[1].signum() * (d.voltages[1] != 0.0) as i32 as f64;
        m.ic = d.voltages[2].signum() * (d.voltages[2] != 0.0) as i32 as f64;
        assert!(electromagnetic_torque(&m, &p) > 0.0, "theta {theta}");
    }
}

#[test]
fn floating_phase_follows_its_back_emf() {
    let p = table();
    let m = MotorState {
        omega: 50.0,
        theta: 0.9,
        ..Default::default()
    };
    let emf = back_emf(&m, &p);
    let d = six_step_voltages(hall_sector(m.theta), 0.5, 12.0).with_floating_emf(emf);
    let k = d.floating.index();
    assert_eq!(d.voltages[k], emf[k]);
    // no voltage across the idle winding, so its current stays at zero
    let next = step(&m, &MotorInput::from_voltages(d.voltages, 0.0), &p).unwrap();
    assert!(next.currents()[k].abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shapes_are_periodic_and_bounded(theta in -50.0f64..50.0) {
        for ph in Phase::ALL {
            let f = back_emf_shape(theta, ph);
            prop_assert!((-1.0..=1.0).contains(&f));
            prop_assert!((f - back_emf_shape(theta + TAU, ph)).abs() < 1e-9);
        }
        let a = back_emf_shape(theta, Phase::A);
        prop_assert!((a - back_emf_shape(theta + 2.0 * PI / 3.0, Phase::B)).abs() < 1e-9);
        prop_assert!((a - back_emf_shape(theta + 4.0 * PI / 3.0, Phase::C)).abs() < 1e-9);
    }

    #[test]
    fn step_is_linear_at_frozen_theta(
        x in prop::array::uniform4(-5.0f64..5.0),
        v in prop::array::uniform4(-6.0f64..6.0),
        theta in 0.0f64..TAU,
        alpha in -3.0f64..3.0,
    ) {
        let p = table();
        let m = MotorState { ia: x[0], ib: x[1], ic: x[2], omega: 50.0 * x[3], theta, position: 0.0 };
        let u = MotorInput { va: v[0], vb: v[1], vc: v[2], load_torque: 1e-4 * v[3] };
        let scaled_m = MotorState { ia: alpha * m.ia, ib: alpha * m.ib, ic: alpha * m.ic, omega: alpha * m.omega, ..m };
        let scaled_u = MotorInput { va: alpha * u.va, vb: alpha * u.vb, vc: alpha * u.vc, load_torque: alpha * u.load_torque };
        let a = step(&scaled_m, &scaled_u, &p).unwrap();
        let b = step(&m, &u, &p).unwrap();
        for (got, want) in [(a.ia, b.ia), (a.ib, b.ib), (a.ic, b.ic), (a.omega, b.omega)] {
            prop_assert!((got - alpha * want).abs() <= 1e-9 * (1.0 + want.abs() * alpha.abs()));
        }
        // the angle increment scales too
        let da = wrap_angle(a.theta - theta + PI) - PI;
        let db = wrap_angle(b.theta - theta + PI) - PI;
        prop_assert!((da - alpha * db).abs() < 1e-9);
    }

    #[test]
    fn torque_times_speed_is_electrical_power(
        i in prop::array::uniform3(-3.0f64..3.0),
        theta in 0.0f64..TAU,
        omega in prop_oneof![-500.0f64..-0.1, 0.1f64..500.0],
    ) {
        let p = table();
        let m = MotorState { ia: i[0], ib: i[1], ic: i[2], omega, theta, position: 0.0 };
        let e = back_emf(&m, &p);
        let pe: f64 = (0..3).map(|k| e[k] * i[k]).sum();
        let te = electromagnetic_torque(&m, &p);
        prop_assert!((te * omega - pe).abs() <= 1e-12 * (1.0 + pe.abs()));
    }

    #[test]
    fn six_step_never_exceeds_half_link(theta in 0.0f64..TAU, duty in -2.0f64..2.0, omega in -2000.0f64..2000.0) {
        let p = table();
        let m = MotorState { omega, theta, ..Default::default() };
        let d = six_step_voltages(hall_sector(theta), duty, 12.0).with_floating_emf(back_emf(&m, &p));
        prop_assert!(d.voltages.iter().all(|v| v.abs() <= 6.0));
    }

    #[test]
    fn clamp_modulation_is_idempotent_and_keeps_angle(vd in -50.0f64..50.0, vq in -50.0f64..50.0) {
        let (a, b) = clamp_modulation(vd, vq, 12.0);
        prop_assert!(a.hypot(b) <= modulation_limit(12.0) * (1.0 + 1e-12));
        prop_assert_eq!(clamp_modulation(a, b, 12.0), (a, b));
        if vd.hypot(vq) > 1e-9 {
            prop_assert!((a.atan2(b) - vd.atan2(vq)).abs() < 1e-12);
        }
    }
}
