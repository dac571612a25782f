//! Time-stepped flight dynamics.
//!
//! Translation follows `m·v̇ = [0, 0, m·g − F_B] + R_wb·(F_p − D)` in a z-down
//! world frame, with per-axis quadratic drag `D` opposing body velocity.
//! Yaw is a single rotor: `I·ψ̈ = M_z − c·sign(ψ̇)·ψ̇²`. Roll and pitch are
//! held at their configured values.

pub mod csv;
pub mod session;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignSpec, ModelError};
use crate::feasibility::envelope::{EnvelopeError, LiftBudget};
use crate::feasibility::{thruster_wrench, Wrench};
use crate::performance::Attitude;
use crate::Vec3;

pub use session::{SessionError, SessionId, SessionManager, SessionSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    SemiImplicitEuler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// s
    pub dt: f64,
    pub integrator: Integrator,
    /// kg·m²
    pub yaw_inertia: f64,
    /// N·m·s²/rad²
    pub yaw_drag_coeff: f64,
    /// s
    pub steady_state_window: f64,
    /// m/s
    pub steady_state_eps: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            integrator: Integrator::Rk4,
            yaw_inertia: 0.01,
            yaw_drag_coeff: 0.005,
            steady_state_window: 3.0,
            steady_state_eps: 0.01,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(SimError::InvalidConfig("dt must lie in (0, 0.1]"));
        }
        if !(self.yaw_inertia > 0.0) {
            return Err(SimError::InvalidConfig("yaw_inertia must be positive"));
        }
        if !(self.yaw_drag_coeff > 0.0) {
            return Err(SimError::InvalidConfig("yaw_drag_coeff must be positive"));
        }
        if !(self.steady_state_window > 0.0 && self.steady_state_eps > 0.0) {
            return Err(SimError::InvalidConfig("steady-state window and eps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimState {
    /// s
    pub time: f64,
    /// World frame, z down, m.
    pub position: Vec3,
    /// World frame, m/s.
    pub velocity: Vec3,
    /// rad
    pub yaw: f64,
    /// rad/s
    pub yaw_rate: f64,
    /// Held constant, rad.
    pub roll: f64,
    pub pitch: f64,
}

impl SimState {
    pub fn attitude(&self) -> Attitude {
        Attitude { roll: self.roll, pitch: self.pitch, yaw: self.yaw }
    }

    pub fn body_velocity(&self) -> Vec3 {
        self.attitude().world_to_body() * self.velocity
    }

    /// Speed in the world horizontal plane.
    pub fn horizontal_speed(&self) -> f64 {
        self.velocity.x.hypot(self.velocity.y)
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Per-thruster duties and servo deflections, in design thruster order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Actuation {
    pub duties: Vec<f64>,
    /// rad
    pub deflections: Vec<f64>,
}

impl Actuation {
    pub fn idle(n: usize) -> Self {
        Self { duties: vec![0.0; n], deflections: vec![0.0; n] }
    }

    pub fn from_duties(duties: Vec<f64>) -> Self {
        let n = duties.len();
        Self { duties, deflections: vec![0.0; n] }
    }

    /// Body wrench produced on `design`.
    pub fn wrench(&self, design: &DesignSpec) -> Result<Wrench, SimError> {
        let n = design.thrusters.len();
        if self.duties.len() != n || self.deflections.len() != n {
            return Err(SimError::ActuationLength {
                expected: n,
                duties: self.duties.len(),
                deflections: self.deflections.len(),
            });
        }
        let mut total = Wrench::default();
        for ((t, &duty), &deflection) in design.thrusters.iter().zip(&self.duties).zip(&self.deflections) {
            let thrust = t.model().duty_to_thrust(duty)?;
            let limit = t.servo.map_or(0.0, |s| s.deflection_limit);
            total = total + thruster_wrench(t, thrust, deflection.clamp(-limit, limit));
        }
        Ok(total)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("expected {expected} actuators, got {duties} duties and {deflections} deflections")]
    ActuationLength { expected: usize, duties: usize, deflections: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error("{quantity} became non-finite at t = {time} s")]
    NonFinite { quantity: &'static str, time: f64 },
    #[error("duration must be positive")]
    NonPositiveDuration,
}

/// A design prepared for stepping: mass, lift and drag constants resolved once.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    pub design: &'a DesignSpec,
    pub lift: LiftBudget,
    pub config: SimConfig,
}

#[derive(Debug, Clone, Copy)]
struct Derivative {
    velocity: Vec3,
    acceleration: Vec3,
    yaw_rate: f64,
    yaw_accel: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(design: &'a DesignSpec, config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        Ok(Self { design, lift: LiftBudget::of(design)?, config })
    }

    fn derivative(&self, s: &SimState, wrench: &Wrench) -> Derivative {
        let env = &self.design.env;
        let r_wb = s.attitude().body_to_world();
        let v_body = r_wb.inverse() * s.velocity;
        let mut drag = Vec3::zeros();
        for axis in 0..3 {
            let (cd, area) = self.design.drag.axis(axis);
            let v = v_body[axis];
            drag[axis] = 0.5 * env.air_density * cd * area * v * v.abs();
        }
        let gravity = Vec3::new(0.0, 0.0, self.lift.weight(env) - self.lift.buoyancy);
        let force = gravity + r_wb * (wrench.force - drag);
        let yaw_drag = self.config.yaw_drag_coeff * s.yaw_rate * s.yaw_rate.abs();
        Derivative {
            velocity: s.velocity,
            acceleration: force / self.lift.inertial_mass,
            yaw_rate: s.yaw_rate,
            yaw_accel: (wrench.moment.z - yaw_drag) / self.config.yaw_inertia,
        }
    }

    /// Advances one `dt` under constant actuation.
    pub fn step(&self, state: &SimState, actuation: &Actuation) -> Result<SimState, SimError> {
        let wrench = actuation.wrench(self.design)?;
        self.step_wrench(state, &wrench)
    }

    pub fn step_wrench(&self, state: &SimState, wrench: &Wrench) -> Result<SimState, SimError> {
        let dt = self.config.dt;
        let mut next = match self.config.integrator {
            Integrator::SemiImplicitEuler => {
                let d = self.derivative(state, wrench);
                let velocity = state.velocity + d.acceleration * dt;
                let yaw_rate = state.yaw_rate + d.yaw_accel * dt;
                SimState {
                    position: state.position + velocity * dt,
                    velocity,
                    yaw: state.yaw + yaw_rate * dt,
                    yaw_rate,
                    ..*state
                }
            }
            Integrator::Rk4 => {
                let advance = |d: &Derivative, h: f64| SimState {
                    position: state.position + d.velocity * h,
                    velocity: state.velocity + d.acceleration * h,
                    yaw: state.yaw + d.yaw_rate * h,
                    yaw_rate: state.yaw_rate + d.yaw_accel * h,
                    ..*state
                };
                let k1 = self.derivative(state, wrench);
                let k2 = self.derivative(&advance(&k1, dt / 2.0), wrench);
                let k3 = self.derivative(&advance(&k2, dt / 2.0), wrench);
                let k4 = self.derivative(&advance(&k3, dt), wrench);
                let blend = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| (a + (b + c) * 2.0 + d) * (dt / 6.0);
                let blend1 = |a: f64, b: f64, c: f64, d: f64| (a + 2.0 * (b + c) + d) * (dt / 6.0);
                SimState {
                    position: state.position
                        + blend(k1.velocity, k2.velocity, k3.velocity, k4.velocity),
                    velocity: state.velocity
                        + blend(k1.acceleration, k2.acceleration, k3.acceleration, k4.acceleration),
                    yaw: state.yaw + blend1(k1.yaw_rate, k2.yaw_rate, k3.yaw_rate, k4.yaw_rate),
                    yaw_rate: state.yaw_rate
                        + blend1(k1.yaw_accel, k2.yaw_accel, k3.yaw_accel, k4.yaw_accel),
                    ..*state
                }
            }
        };
        next.time = state.time + dt;
        check_finite(&next)?;
        Ok(next)
    }
}

fn check_finite(s: &SimState) -> Result<(), SimError> {
    let fields: [(&'static str, f64); 8] = [
        ("velocity.x", s.velocity.x),
        ("velocity.y", s.velocity.y),
        ("velocity.z", s.velocity.z),
        ("position.x", s.position.x),
        ("position.y", s.position.y),
        ("position.z", s.position.z),
        ("yaw_rate", s.yaw_rate),
        ("yaw", s.yaw),
    ];
    match fields.iter().find(|(_, v)| !v.is_finite()) {
        Some((quantity, _)) => Err(SimError::NonFinite { quantity, time: s.time }),
        None => Ok(()),
    }
}

/// One-shot step without building a [`Simulator`].
pub fn step(
    state: &SimState,
    design: &DesignSpec,
    actuation: &Actuation,
    config: &SimConfig,
) -> Result<SimState, SimError> {
    Simulator::new(design, *config)?.step(state, actuation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<SimState>,
    /// First time at which speed stayed within `steady_state_eps` over a full window.
    pub steady_at: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &SimState {
        self.samples.last().expect("trajectory holds the initial state")
    }
}

/// Integrates from `initial` for `duration`, querying `schedule` at each step start.
pub fn run(
    design: &DesignSpec,
    initial: SimState,
    schedule: impl Fn(f64) -> Actuation,
    duration: f64,
    config: &SimConfig,
) -> Result<Trajectory, SimError> {
    if !(duration > 0.0) {
        return Err(SimError::NonPositiveDuration);
    }
    let sim = Simulator::new(design, *config)?;
    let steps = (duration / config.dt).round().max(1.0) as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(initial);
    let mut detector = SteadyDetector::new(config);
    detector.push(&initial);
    let mut state = initial;
    for _ in 0..steps {
        state = sim.step(&state, &schedule(state.time))?;
        samples.push(state);
        detector.push(&state);
    }
    Ok(Trajectory { samples, steady_at: detector.steady_at })
}

/// Tracks the speed range over a trailing window.
#[derive(Debug, Clone)]
pub struct SteadyDetector {
    window: f64,
    eps: f64,
    recent: std::collections::VecDeque<(f64, f64)>,
    start: Option<f64>,
    steady: bool,
    pub steady_at: Option<f64>,
}

impl SteadyDetector {
    pub fn new(config: &SimConfig) -> Self {
        Self {
            window: config.steady_state_window,
            eps: config.steady_state_eps,
            recent: Default::default(),
            start: None,
            steady: false,
            steady_at: None,
        }
    }

    /// Whether the most recent window was steady.
    pub fn is_steady(&self) -> bool {
        self.steady
    }

    /// Records a sample; returns whether the trailing window is currently steady.
    pub fn push(&mut self, s: &SimState) -> bool {
        let start = *self.start.get_or_insert(s.time);
        self.recent.push_back((s.time, s.speed()));
        // Keep exactly one sample at or before the window start.
        while self.recent.len() > 1 && self.recent[1].0 <= s.time - self.window + 1e-9 {
            self.recent.pop_front();
        }
        if s.time - start < self.window - 1e-9 {
            self.steady = false;
            return false;
        }
        let (lo, hi) = self
            .recent
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
        let steady = hi - lo < self.eps;
        self.steady = steady;
        if steady && self.steady_at.is_none() {
            self.steady_at = Some(s.time);
        }
        steady
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_bounds() {
        assert!(SimConfig::default().validate().is_ok());
        let bad = SimConfig { dt: 0.2, ..SimConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SimConfig { dt: 0.0, ..SimConfig::default() };
        assert!(bad.validate().is_err());
    }
}
