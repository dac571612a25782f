//! Steady-state drag and terminal velocity.
//!
//! At terminal velocity the acceleration is zero on every axis, so the drag
//! on each body axis equals the net non-drag force along it: propulsion plus
//! the body-frame image of the weight/buoyancy imbalance. The speed then
//! follows from the quadratic drag law.

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignSpec, EnvironmentConstants};
use crate::feasibility::envelope::{EnvelopeError, LiftBudget};
use crate::feasibility::{
    check_design, net_wrench_steered, Primitive, ThrusterCommand, WrenchError, DEFAULT_TOL,
};
use crate::Vec3;

/// Roll, pitch, yaw in radians; body-to-world rotation is `Rz(ψ)·Ry(θ)·Rx(φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Attitude {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Attitude {
    pub const LEVEL: Attitude = Attitude { roll: 0.0, pitch: 0.0, yaw: 0.0 };

    /// `R_wb`, body to world.
    pub fn body_to_world(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.roll, self.pitch, self.yaw)
    }

    /// `R_bw`, world to body.
    pub fn world_to_body(&self) -> Rotation3<f64> {
        self.body_to_world().inverse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    /// `[f_x, f_y, f_z]` with `f_z` positive for drag on a rising blimp, N.
    pub terminal_drag: Vec3,
    /// Terminal speed along each body axis, m/s.
    pub v_max_body: Vec3,
    /// Sense of motion per axis (+1 or −1, body frame) the speeds refer to.
    pub direction: Vec3,
    /// Axes whose net force does not push in the commanded sense.
    pub stalled: [bool; 3],
    pub attitude_used: Attitude,
    /// `(F_X, F_Y, F_Z)`, N.
    pub net_propulsion: Vec3,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerformanceError {
    #[error("design fails motion primitive(s): {}", .0.iter().map(|p| p.name()).collect::<Vec<_>>().join(", "))]
    Infeasible(Vec<Primitive>),
    #[error(transparent)]
    Wrench(#[from] WrenchError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

/// `½·ρ·v²·C_D·A`, always non-negative.
pub fn drag_force(cd: f64, csa: f64, air_density: f64, v: f64) -> f64 {
    0.5 * air_density * v * v * cd * csa
}

/// Speed at which quadratic drag equals `force`.
pub fn speed_for_drag(cd: f64, csa: f64, air_density: f64, force: f64) -> f64 {
    (2.0 * force.abs() / (air_density * cd * csa)).sqrt()
}

/// Net non-drag body-frame force: propulsion plus `R_bw·[0, 0, m·g − F_B]`.
fn net_body_force(propulsion: Vec3, lift: &LiftBudget, env: &EnvironmentConstants, attitude: &Attitude) -> Vec3 {
    let world = Vec3::new(0.0, 0.0, lift.weight(env) - lift.buoyancy);
    propulsion + attitude.world_to_body() * world
}

/// Terminal drag `[f_x, f_y, f_z]` for fixed thrusters at `thrusts`.
pub fn terminal_drag(
    design: &DesignSpec,
    thrusts: &[f64],
    attitude: &Attitude,
) -> Result<Vec3, PerformanceError> {
    Ok(terminal_velocity(design, thrusts, attitude)?.terminal_drag)
}

pub fn terminal_velocity(
    design: &DesignSpec,
    thrusts: &[f64],
    attitude: &Attitude,
) -> Result<PerformanceReport, PerformanceError> {
    let commands: Vec<ThrusterCommand> = thrusts
        .iter()
        .map(|&thrust| ThrusterCommand { thrust, deflection: 0.0 })
        .collect();
    terminal_velocity_steered(design, &commands, attitude)
}

pub fn terminal_velocity_steered(
    design: &DesignSpec,
    commands: &[ThrusterCommand],
    attitude: &Attitude,
) -> Result<PerformanceReport, PerformanceError> {
    let propulsion = net_wrench_steered(&design.thrusters, commands)?.force;
    let lift = LiftBudget::of(design)?;
    let net = net_body_force(propulsion, &lift, &design.env, attitude);

    let mut v_max = Vec3::zeros();
    let mut direction = Vec3::zeros();
    let mut stalled = [false; 3];
    for axis in 0..3 {
        // With no propulsion on an axis, look at forward, rightward and climbing motion.
        let sense = if propulsion[axis] != 0.0 {
            propulsion[axis].signum()
        } else if axis == 2 {
            -1.0
        } else {
            1.0
        };
        direction[axis] = sense;
        let drag = net[axis] * sense;
        if drag > 0.0 {
            let (cd, area) = design.drag.axis(axis);
            v_max[axis] = speed_for_drag(cd, area, design.env.air_density, drag);
        } else {
            stalled[axis] = true;
        }
    }
    Ok(PerformanceReport {
        terminal_drag: Vec3::new(net.x, net.y, -net.z),
        v_max_body: v_max,
        direction,
        stalled,
        attitude_used: *attitude,
        net_propulsion: propulsion,
    })
}

/// Best horizontal and vertical terminal speeds in level flight.
///
/// The x and y entries come from the forward witness, the z entry from the
/// altitude witness; each is the allocation maximising its target force.
pub fn max_performance(design: &DesignSpec) -> Result<PerformanceReport, PerformanceError> {
    let report = check_design(design, DEFAULT_TOL)?;
    let failed: Vec<Primitive> = Primitive::ALL
        .into_iter()
        .filter(|p| !report.certificate(*p).achievable)
        .collect();
    if !failed.is_empty() {
        return Err(PerformanceError::Infeasible(failed));
    }
    let witness = |p: Primitive| {
        report
            .certificate(p)
            .witness_commands()
            .expect("achievable certificates carry a witness")
    };
    let level = Attitude::LEVEL;
    let horizontal = terminal_velocity_steered(design, &witness(Primitive::Forward), &level)?;
    let vertical = terminal_velocity_steered(design, &witness(Primitive::Altitude), &level)?;

    let pick = |h: Vec3, v: Vec3| Vec3::new(h.x, h.y, v.z);
    Ok(PerformanceReport {
        terminal_drag: pick(horizontal.terminal_drag, vertical.terminal_drag),
        v_max_body: pick(horizontal.v_max_body, vertical.v_max_body),
        direction: pick(horizontal.direction, vertical.direction),
        stalled: [horizontal.stalled[0], horizontal.stalled[1], vertical.stalled[2]],
        attitude_used: level,
        net_propulsion: pick(horizontal.net_propulsion, vertical.net_propulsion),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drag_examples() {
        assert_eq!(drag_force(0.47, 0.1, 1.225, 0.0), 0.0);
        assert!((drag_force(0.47, 0.1, 1.225, 2.26) - 0.14703).abs() < 1e-5);
        let (one, two) = (drag_force(0.47, 0.1, 1.225, 1.0), drag_force(0.47, 0.1, 1.225, 2.0));
        assert!((two - 4.0 * one).abs() < 1e-15);
    }

    #[test]
    fn speed_example() {
        let v = speed_for_drag(0.47, 0.1, 1.225, 0.147);
        assert!((v - 2.259).abs() < 1e-3);
    }

    #[test]
    fn rotations_are_orthonormal() {
        let a = Attitude { roll: 0.3, pitch: -0.2, yaw: 1.1 };
        let p = a.body_to_world() * a.world_to_body();
        assert!((p.matrix() - nalgebra::Matrix3::identity()).abs().max() < 1e-12);
    }
}
