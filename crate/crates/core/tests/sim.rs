mod common;

use blimp_core::mapping::{parse_command, JoystickInput, Plant, Stage};
use blimp_core::sim::csv::{format_sig6, to_csv_string, HEADER};
use blimp_core::sim::session::{Pacing, HISTORY_LIMIT};
use blimp_core::sim::{run, Actuation, Integrator, SessionError, SessionManager, SimError, Simulator, Trajectory};
use blimp_core::{SimConfig, SimState, Vec3};

use common::{analytic_speed, axis_design, with_net_lift};

const RHO: f64 = 1.225;

fn config(integrator: Integrator, dt: f64) -> SimConfig {
    SimConfig { integrator, dt, ..SimConfig::default() }
}

fn hold(duties: [f64; 3]) -> impl Fn(f64) -> Actuation {
    move |_| Actuation::from_duties(duties.to_vec())
}

fn forward_run(duty: f64, cfg: &SimConfig, duration: f64) -> Trajectory {
    run(&axis_design(), SimState::default(), hold([duty, 0.0, 0.0]), duration, cfg).unwrap()
}

#[test]
fn neutral_idle_stays_put_exactly() {
    for integrator in [Integrator::SemiImplicitEuler, Integrator::Rk4] {
        for name in ["case1", "case2", "reference"] {
            let d = common::fixture(name);
            let n = d.thrusters.len();
            let t = run(&d, SimState::default(), |_| Actuation::idle(n), 20.0, &config(integrator, 0.02)).unwrap();
            for s in &t.samples {
                assert_eq!(s.velocity, Vec3::zeros(), "{name}");
                assert_eq!(s.position, Vec3::zeros(), "{name}");
                assert_eq!(s.yaw_rate, 0.0);
            }
        }
    }
}

#[test]
fn forward_speed_approaches_closed_form() {
    let t = forward_run(0.147, &SimConfig::default(), 30.0);
    let v = t.last().velocity.x;
    let expected = analytic_speed(0.147, 0.47, 0.1, RHO);
    assert!((v / expected - 1.0).abs() < 0.01, "{v} vs {expected}");
    assert!(t.steady_at.is_some());
}

#[test]
fn buoyant_design_rises() {
    let d = with_net_lift(axis_design(), 0.02);
    let t = run(&d, SimState::default(), |_| Actuation::idle(3), 30.0, &SimConfig::default()).unwrap();
    let vz = t.last().velocity.z;
    // Up is negative z.
    assert!(vz < 0.0);
    assert!((-vz / analytic_speed(0.02, 0.47, 0.1, RHO) - 1.0).abs() < 0.01);
}

#[test]
fn integrators_agree_at_small_step() {
    let euler = forward_run(0.1, &config(Integrator::SemiImplicitEuler, 0.01), 20.0);
    let rk4 = forward_run(0.1, &config(Integrator::Rk4, 0.01), 20.0);
    let (a, b) = (euler.last().velocity.x, rk4.last().velocity.x);
    assert!(((a - b) / b).abs() < 0.005);
}

#[test]
fn halving_step_barely_moves_terminal_speed() {
    for integrator in [Integrator::SemiImplicitEuler, Integrator::Rk4] {
        let coarse = forward_run(0.147, &config(integrator, 0.02), 30.0).last().velocity.x;
        let fine = forward_run(0.147, &config(integrator, 0.01), 30.0).last().velocity.x;
        assert!(((coarse - fine) / fine).abs() < 0.002);
    }
}

#[test]
fn drag_slows_a_coasting_blimp() {
    let initial = SimState { velocity: Vec3::new(1.5, -0.8, 0.4), ..SimState::default() };
    let t = run(&axis_design(), initial, hold([0.0; 3]), 10.0, &SimConfig::default()).unwrap();
    for pair in t.samples.windows(2) {
        assert!(pair[1].speed() < pair[0].speed());
        for axis in 0..3 {
            // Never overshoots through zero.
            assert!(pair[1].velocity[axis] * initial.velocity[axis] > 0.0);
        }
    }
}

#[test]
fn step_response_is_monotone() {
    let t = forward_run(0.2, &SimConfig::default(), 15.0);
    for pair in t.samples.windows(2) {
        assert!(pair[1].velocity.x >= pair[0].velocity.x);
    }
}

#[test]
fn yaw_rate_settles_at_drag_balance() {
    let d = common::fixture("reference");
    let cfg = SimConfig::default();
    // Motors at y = ±0.1 m face opposite ways, so equal duties make a pure couple.
    let t = run(&d, SimState::default(), |_| Actuation::from_duties(vec![-1.0, -1.0, 0.0, 0.0]), 20.0, &cfg).unwrap();
    let s = t.last();
    let moment = 0.1 * 0.14715 * 2.0;
    let expected = (moment / cfg.yaw_drag_coeff).sqrt();
    assert!(s.velocity.norm() < 1e-12);
    assert!((s.yaw_rate / expected - 1.0).abs() < 0.01, "{} vs {expected}", s.yaw_rate);
}

#[test]
fn runaway_state_is_reported() {
    let d = axis_design();
    let sim = Simulator::new(&d, SimConfig::default()).unwrap();
    let wild = SimState { velocity: Vec3::new(1e200, 0.0, 0.0), ..SimState::default() };
    match sim.step(&wild, &Actuation::idle(3)) {
        Err(SimError::NonFinite { quantity, .. }) => assert!(quantity.starts_with("velocity")),
        other => panic!("expected non-finite error, got {other:?}"),
    }
}

#[test]
fn bad_configs_rejected() {
    let d = axis_design();
    for dt in [0.0, -0.01, 0.2, f64::NAN] {
        assert!(matches!(Simulator::new(&d, config(Integrator::Rk4, dt)), Err(SimError::InvalidConfig(_))));
    }
    assert!(matches!(
        Simulator::new(&d, SimConfig::default()).unwrap().step(&SimState::default(), &Actuation::idle(2)),
        Err(SimError::ActuationLength { .. })
    ));
    assert!(matches!(
        run(&d, SimState::default(), hold([0.0; 3]), 0.0, &SimConfig::default()),
        Err(SimError::NonPositiveDuration)
    ));
}

#[test]
fn csv_layout() {
    let t = forward_run(0.1, &SimConfig::default(), 0.1);
    let text = to_csv_string(&t);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0], "0,0,0,0,0,0,0");
    for row in rows {
        assert_eq!(row.split(',').count(), 7);
    }
}

#[test]
fn sig6_formatting() {
    assert_eq!(format_sig6(2.2590071), "2.25901");
    assert_eq!(format_sig6(0.02), "0.02");
    assert_eq!(format_sig6(-1.5), "-1.5");
    assert_eq!(format_sig6(1234567.0), "1.23457e+06");
    assert_eq!(format_sig6(0.0000123456789), "1.23457e-05");
    assert_eq!(format_sig6(9.9999996), "10");
    assert_eq!(format_sig6(100000.0), "100000");
}

fn case1_session(mgr: &SessionManager) -> u64 {
    let d = common::fixture("case1");
    let plant = Plant::identity(&d);
    mgr.create(d, plant, SimConfig::default()).unwrap()
}

#[test]
fn session_ignores_sticks_until_mapped() {
    let mgr = SessionManager::new(Pacing::Stepped);
    let id = case1_session(&mgr);
    mgr.input(id, JoystickInput { x: 0.0, y: 1.0, z: 0.0, slider: 1.0 }).unwrap();
    let snap = mgr.step(id, 50).unwrap();
    assert_eq!(snap.state.velocity, Vec3::zeros());
    assert_eq!(snap.stage, Stage::Init);
}

#[test]
fn session_flies_forward_once_mapped() {
    let mgr = SessionManager::new(Pacing::Stepped);
    let id = case1_session(&mgr);
    let verdicts = mgr.remap(id, parse_command("1F2U3U4FC4L1R").unwrap()).unwrap();
    assert!(verdicts.all());
    mgr.input(id, JoystickInput { x: 0.0, y: 1.0, z: 0.0, slider: 1.0 }).unwrap();
    let snap = mgr.step(id, 100).unwrap();
    assert!(snap.state.velocity.x > 0.5);
    assert!(snap.state.velocity.z.abs() < 1e-12);
    assert_eq!(snap.stage, Stage::Done);
    assert_eq!(snap.command.as_deref(), Some("1F2U3U4FC4L1R"));
    assert!((snap.state.time - 2.0).abs() < 1e-9);
}

#[test]
fn session_yaws_in_place() {
    let mgr = SessionManager::new(Pacing::Stepped);
    let id = case1_session(&mgr);
    mgr.remap(id, parse_command("1F2U3U4FC4L1R").unwrap()).unwrap();
    mgr.input(id, JoystickInput { x: 1.0, y: 0.0, z: 0.0, slider: 1.0 }).unwrap();
    let snap = mgr.step(id, 100).unwrap();
    assert!(snap.state.yaw_rate > 0.1);
    assert!(snap.state.velocity.norm() < 1e-12);
}

#[test]
fn idle_session_reports_steady() {
    let mgr = SessionManager::new(Pacing::Stepped);
    let id = case1_session(&mgr);
    assert!(!mgr.step(id, 10).unwrap().steady);
    assert!(mgr.step(id, 200).unwrap().steady);
}

#[test]
fn session_errors() {
    let mgr = SessionManager::new(Pacing::Stepped);
    let id = case1_session(&mgr);
    assert!(matches!(mgr.state(id + 7), Err(SessionError::UnknownSession(_))));
    assert!(matches!(
        mgr.input(id, JoystickInput { x: 0.0, y: 1.5, z: 0.0, slider: 1.0 }),
        Err(SessionError::Input(_))
    ));
    assert!(matches!(
        mgr.input(id, JoystickInput { x: 0.0, y: 0.0, z: 0.0, slider: -0.1 }),
        Err(SessionError::Input(_))
    ));
    mgr.remove(id).unwrap();
    assert!(matches!(mgr.step(id, 1), Err(SessionError::UnknownSession(_))));
    assert_eq!(mgr.ids(), Vec::<u64>::new());
}

#[test]
fn real_time_sessions_advance_on_their_own() {
    let mgr = SessionManager::new(Pacing::RealTime);
    let id = case1_session(&mgr);
    std::thread::sleep(std::time::Duration::from_millis(200));
    let t = mgr.state(id).unwrap().state.time;
    assert!(t > 0.0, "no ticks after 200 ms");
}

#[test]
fn session_trajectory_matches_offline_run() {
    let mgr = SessionManager::new(Pacing::Stepped);
    let id = case1_session(&mgr);
    mgr.remap(id, parse_command("1F2U3U4FC4L1R").unwrap()).unwrap();
    mgr.input(id, JoystickInput { x: 0.0, y: 1.0, z: 0.0, slider: 1.0 }).unwrap();
    mgr.step(id, 100).unwrap();
    let recorded = mgr.trajectory(id).unwrap();

    let d = common::fixture("case1");
    let full_forward = Actuation { duties: vec![1.0, 0.0, 0.0, 1.0], deflections: vec![0.0; 4] };
    let offline = run(&d, SimState::default(), |_| full_forward.clone(), 2.0, &SimConfig::default()).unwrap();
    assert_eq!(recorded.samples.len(), offline.samples.len());
    for (a, b) in recorded.samples.iter().zip(&offline.samples) {
        assert!((a.time - b.time).abs() < 1e-9);
        assert!((a.velocity - b.velocity).norm() < 1e-12, "{a:?} vs {b:?}");
    }
    assert!(matches!(mgr.trajectory(id + 1), Err(SessionError::UnknownSession(_))));
}

#[test]
fn session_history_is_capped() {
    let mgr = SessionManager::new(Pacing::Stepped);
    let id = case1_session(&mgr);
    let extra = 25;
    let snap = mgr.step(id, HISTORY_LIMIT + extra).unwrap();
    let recorded = mgr.trajectory(id).unwrap();
    assert_eq!(recorded.samples.len(), HISTORY_LIMIT);
    assert_eq!(recorded.last().time, snap.state.time);
    // Oldest samples are dropped first.
    assert!(recorded.samples[0].time > 0.0);
}
