//! Motion-primitive and payload feasibility.
//!
//! A design must be able to (1) push forward without climbing or turning,
//! (2) change altitude without moving forward or turning, and (3) turn in
//! place. Each is decided as a linear program over the box of admissible
//! thrusts: maximise the wanted wrench component with the two coupled
//! components held at zero. Lateral force and roll/pitch moments are left
//! free.

pub mod envelope;

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignSpec, ThrusterSpec};
use crate::Vec3;

pub use envelope::{EnvelopeError, LiftBudget};

/// Default decoupling tolerance (N and N·m); also the minimum useful effect.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Arc segments of the inner polygon that stands in for a steerable thruster's sector.
const SECTOR_SEGMENTS: usize = 16;

/// Force and moment about the body origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vec3,
    pub moment: Vec3,
}

impl std::ops::Add for Wrench {
    type Output = Wrench;

    fn add(self, rhs: Wrench) -> Wrench {
        Wrench {
            force: self.force + rhs.force,
            moment: self.moment + rhs.moment,
        }
    }
}

impl std::ops::Mul<f64> for Wrench {
    type Output = Wrench;

    fn mul(self, s: f64) -> Wrench {
        Wrench {
            force: self.force * s,
            moment: self.moment * s,
        }
    }
}

/// Thrust and servo deflection for one thruster.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThrusterCommand {
    /// N
    pub thrust: f64,
    /// rad, about body z; ignored for fixed thrusters.
    pub deflection: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WrenchError {
    #[error("expected {expected} thrust values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("thruster {id}: thrust {thrust} N outside [{min}, {max}] N")]
    ThrustOutOfBounds { id: u8, thrust: f64, min: f64, max: f64 },
    #[error("thruster {id}: deflection {deflection} rad beyond its servo limit")]
    DeflectionOutOfBounds { id: u8, deflection: f64 },
}

/// `F = Σ fᵢ·Kᵢ`, `M = Σ pᵢ × (fᵢ·Kᵢ)` with servos at rest.
pub fn net_wrench(thrusters: &[ThrusterSpec], thrusts: &[f64]) -> Result<Wrench, WrenchError> {
    let commands: Vec<ThrusterCommand> = thrusts
        .iter()
        .map(|&thrust| ThrusterCommand { thrust, deflection: 0.0 })
        .collect();
    net_wrench_steered(thrusters, &commands)
}

pub fn net_wrench_steered(
    thrusters: &[ThrusterSpec],
    commands: &[ThrusterCommand],
) -> Result<Wrench, WrenchError> {
    if thrusters.len() != commands.len() {
        return Err(WrenchError::LengthMismatch {
            expected: thrusters.len(),
            got: commands.len(),
        });
    }
    let mut total = Wrench::default();
    for (t, c) in thrusters.iter().zip(commands) {
        if !(t.thrust_min..=t.thrust_max).contains(&c.thrust) {
            return Err(WrenchError::ThrustOutOfBounds {
                id: t.id,
                thrust: c.thrust,
                min: t.thrust_min,
                max: t.thrust_max,
            });
        }
        let limit = t.servo.map_or(0.0, |s| s.deflection_limit);
        if c.deflection.abs() > limit && c.deflection != 0.0 {
            return Err(WrenchError::DeflectionOutOfBounds {
                id: t.id,
                deflection: c.deflection,
            });
        }
        total = total + thruster_wrench(t, c.thrust, c.deflection);
    }
    Ok(total)
}

/// Wrench of a single thruster, without bounds checks.
pub fn thruster_wrench(t: &ThrusterSpec, thrust: f64, deflection: f64) -> Wrench {
    let force = t.direction(deflection) * thrust;
    Wrench {
        force,
        moment: t.position.cross(&force),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    Forward,
    Altitude,
    Yaw,
}

impl Primitive {
    pub const ALL: [Primitive; 3] = [Primitive::Forward, Primitive::Altitude, Primitive::Yaw];

    /// Index into the `[F_x, F_z, M_z]` triple of the component this primitive drives.
    fn target(self) -> usize {
        match self {
            Primitive::Forward => 0,
            Primitive::Altitude => 1,
            Primitive::Yaw => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Forward => "forward",
            Primitive::Altitude => "altitude",
            Primitive::Yaw => "yaw",
        }
    }
}

/// The three planar components the primitives constrain.
fn planar(w: &Wrench) -> [f64; 3] {
    [w.force.x, w.force.z, w.moment.z]
}

/// Outcome of checking one motion primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveCertificate {
    pub primitive: Primitive,
    pub achievable: bool,
    /// Largest decoupled target component reachable in the positive sense
    /// (forward, descend, yaw right), N or N·m.
    pub reach_positive: f64,
    /// Same for the negative sense (ascend, yaw left). Not evaluated for `Forward`.
    pub reach_negative: f64,
    /// Per-thruster thrusts achieving the larger reach; present iff achievable.
    pub witness_thrusts: Option<Vec<f64>>,
    /// Matching servo deflections, radians (zero for fixed thrusters).
    pub witness_deflections: Option<Vec<f64>>,
}

impl PrimitiveCertificate {
    pub fn witness_commands(&self) -> Option<Vec<ThrusterCommand>> {
        let thrusts = self.witness_thrusts.as_ref()?;
        let deflections = self.witness_deflections.as_ref()?;
        Some(
            thrusts
                .iter()
                .zip(deflections)
                .map(|(&thrust, &deflection)| ThrusterCommand { thrust, deflection })
                .collect(),
        )
    }

    /// Altitude only: whether a climb is possible.
    pub fn can_ascend(&self, tol: f64) -> bool {
        self.primitive == Primitive::Altitude && self.reach_negative >= tol
    }

    pub fn can_descend(&self, tol: f64) -> bool {
        self.primitive == Primitive::Altitude && self.reach_positive >= tol
    }
}

/// Decides whether `primitive` is achievable within the thrust bounds.
///
/// `tol` is the decoupling tolerance and the minimum target magnitude.
pub fn check_primitive(
    thrusters: &[ThrusterSpec],
    primitive: Primitive,
    tol: f64,
) -> PrimitiveCertificate {
    let allocator = Allocator::new(thrusters);
    let positive = allocator.maximize(primitive.target(), 1.0);
    let negative = match primitive {
        Primitive::Forward => None,
        _ => allocator.maximize(primitive.target(), -1.0),
    };
    let reach = |s: &Option<Allocation>| s.as_ref().map_or(0.0, |a| a.objective.max(0.0));
    let (reach_positive, reach_negative) = (reach(&positive), reach(&negative));

    // Larger reach wins. Ties go to ascent for altitude and to yaw right.
    let chosen = match primitive {
        Primitive::Altitude if reach_negative >= reach_positive => negative,
        Primitive::Yaw if reach_negative > reach_positive => negative,
        _ => positive,
    };
    let chosen = chosen.filter(|a| a.objective >= tol);

    let witness = chosen.map(|a| a.commands);
    PrimitiveCertificate {
        primitive,
        achievable: witness.is_some(),
        reach_positive,
        reach_negative,
        witness_thrusts: witness.as_ref().map(|w| w.iter().map(|c| c.thrust).collect()),
        witness_deflections: witness.map(|w| w.iter().map(|c| c.deflection).collect()),
    }
}

/// Literal componentwise test at full positive thrust on every thruster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaiveCheck {
    pub forward: bool,
    pub altitude: bool,
    pub yaw: bool,
}

pub fn naive_motion_check(thrusters: &[ThrusterSpec], tol: f64) -> NaiveCheck {
    let w = thrusters
        .iter()
        .map(|t| thruster_wrench(t, t.thrust_max, 0.0))
        .fold(Wrench::default(), |acc, w| acc + w);
    let [fx, fz, mz] = planar(&w);
    NaiveCheck {
        forward: fx.abs() > tol,
        altitude: fz.abs() > tol,
        yaw: mz.abs() > tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub forward: PrimitiveCertificate,
    pub altitude: PrimitiveCertificate,
    pub yaw: PrimitiveCertificate,
    pub naive_check: NaiveCheck,
    pub envelope_volume: f64,
    pub buoyancy: f64,
    pub payload_mass: f64,
    pub payload_ok: bool,
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    pub fn motion_ok(&self) -> bool {
        self.forward.achievable && self.altitude.achievable && self.yaw.achievable
    }

    pub fn passes(&self) -> bool {
        self.motion_ok() && self.payload_ok
    }

    pub fn certificate(&self, primitive: Primitive) -> &PrimitiveCertificate {
        match primitive {
            Primitive::Forward => &self.forward,
            Primitive::Altitude => &self.altitude,
            Primitive::Yaw => &self.yaw,
        }
    }
}

/// Runs every motion and payload check on a design.
pub fn check_design(design: &DesignSpec, tol: f64) -> Result<FeasibilityReport, EnvelopeError> {
    let thrusters = &design.thrusters;
    let forward = check_primitive(thrusters, Primitive::Forward, tol);
    let altitude = check_primitive(thrusters, Primitive::Altitude, tol);
    let yaw = check_primitive(thrusters, Primitive::Yaw, tol);

    let mut notes = Vec::new();
    if let Some(cmds) = forward.witness_commands() {
        let w = net_wrench_steered(thrusters, &cmds).expect("witness respects bounds");
        if w.force.y.abs() > tol {
            notes.push(format!(
                "forward witness carries {:.6} N of unconstrained lateral force",
                w.force.y
            ));
        }
    }

    let volume = envelope::envelope_volume(&design.balloon)?;
    let payload =
        envelope::payload_mass(&design.env, volume, &design.masses, design.balloon.envelope_mass);
    Ok(FeasibilityReport {
        naive_check: naive_motion_check(thrusters, tol),
        forward,
        altitude,
        yaw,
        envelope_volume: volume,
        buoyancy: envelope::buoyancy(&design.env, volume),
        payload_mass: payload,
        payload_ok: payload >= 0.0,
        notes,
    })
}

struct Allocation {
    objective: f64,
    commands: Vec<ThrusterCommand>,
}

/// LP variables standing for one thruster.
enum Slot {
    Fixed(Variable),
    /// Convex weights over the vertices of the sector polygon, one sense of thrust.
    Sector {
        sense: f64,
        radius: f64,
        weights: Vec<(Variable, f64)>,
    },
    Idle,
}

struct Allocator<'a> {
    thrusters: &'a [ThrusterSpec],
    /// Indices of thrusters a servo can steer.
    steerable: Vec<usize>,
}

impl<'a> Allocator<'a> {
    fn new(thrusters: &'a [ThrusterSpec]) -> Self {
        let steerable = (0..thrusters.len())
            .filter(|&i| thrusters[i].is_steerable())
            .collect();
        Self { thrusters, steerable }
    }

    /// Best decoupled value of `sense · component[target]` over every
    /// forward/reverse branch of the steerable thrusters.
    fn maximize(&self, target: usize, sense: f64) -> Option<Allocation> {
        let branches = 1usize << self.steerable.len();
        let mut best: Option<(f64, usize)> = None;
        for branch in 0..branches {
            if let Some(value) = self.solve(target, sense, branch, None) {
                if best.is_none_or(|(v, _)| value.objective > v + 1e-12) {
                    best = Some((value.objective, branch));
                }
            }
        }
        let (objective, branch) = best?;
        // Among optimal allocations prefer small thrusts on low-index channels.
        self.solve(target, sense, branch, Some(objective))
            .or_else(|| self.solve(target, sense, branch, None))
    }

    fn solve(
        &self,
        target: usize,
        sense: f64,
        branch: usize,
        optimum: Option<f64>,
    ) -> Option<Allocation> {
        let direction = if optimum.is_some() {
            OptimizationDirection::Minimize
        } else {
            OptimizationDirection::Maximize
        };
        let mut problem = Problem::new(direction);
        let mut rows: [Vec<(Variable, f64)>; 3] = Default::default();
        let mut slots = Vec::with_capacity(self.thrusters.len());

        for (i, t) in self.thrusters.iter().enumerate() {
            let weight = if optimum.is_some() { 1.0 + 0.01 * i as f64 } else { 0.0 };
            if let Some(bit) = self.steerable.iter().position(|&s| s == i) {
                let forward = branch & (1 << bit) == 0;
                let (s, radius) = if forward {
                    (1.0, t.thrust_max.max(0.0))
                } else {
                    (-1.0, (-t.thrust_min).max(0.0))
                };
                if radius == 0.0 {
                    slots.push(Slot::Idle);
                    continue;
                }
                let limit = t.servo.map_or(0.0, |m| m.deflection_limit);
                let mut weights = Vec::with_capacity(SECTOR_SEGMENTS + 1);
                let mut total = LinearExpr::empty();
                for j in 0..=SECTOR_SEGMENTS {
                    let angle = -limit + 2.0 * limit * j as f64 / SECTOR_SEGMENTS as f64;
                    let lambda = problem.add_var(weight * radius, (0.0, f64::INFINITY));
                    let coeffs = planar(&thruster_wrench(t, s * radius, angle));
                    for (row, c) in rows.iter_mut().zip(coeffs) {
                        row.push((lambda, c));
                    }
                    total.add(lambda, 1.0);
                    weights.push((lambda, angle));
                }
                problem.add_constraint(total, ComparisonOp::Le, 1.0);
                slots.push(Slot::Sector { sense: s, radius, weights });
            } else {
                let thrust = problem.add_var(0.0, (t.thrust_min, t.thrust_max));
                // |f| through an epigraph variable, only priced in the tie-break.
                let magnitude = problem.add_var(weight, (0.0, f64::INFINITY));
                problem.add_constraint([(magnitude, 1.0), (thrust, -1.0)], ComparisonOp::Ge, 0.0);
                problem.add_constraint([(magnitude, 1.0), (thrust, 1.0)], ComparisonOp::Ge, 0.0);
                let coeffs = planar(&thruster_wrench(t, 1.0, 0.0));
                for (row, c) in rows.iter_mut().zip(coeffs) {
                    row.push((thrust, c));
                }
                slots.push(Slot::Fixed(thrust));
            }
        }

        let value = problem.add_var(
            if optimum.is_some() { 0.0 } else { 1.0 },
            (f64::NEG_INFINITY, f64::INFINITY),
        );
        for (k, row) in rows.into_iter().enumerate() {
            if k == target {
                let mut link: Vec<(Variable, f64)> =
                    row.into_iter().map(|(v, c)| (v, sense * c)).collect();
                link.push((value, -1.0));
                problem.add_constraint(link, ComparisonOp::Eq, 0.0);
            } else {
                problem.add_constraint(row, ComparisonOp::Eq, 0.0);
            }
        }
        if let Some(opt) = optimum {
            let slack = 1e-12 * opt.abs().max(1.0);
            problem.add_constraint([(value, 1.0)], ComparisonOp::Ge, opt - slack);
        }

        let solution = problem.solve().ok()?;
        let commands = slots
            .iter()
            .zip(self.thrusters)
            .map(|(slot, t)| match slot {
                Slot::Fixed(thrust) => ThrusterCommand {
                    thrust: solution[*thrust].clamp(t.thrust_min, t.thrust_max),
                    deflection: 0.0,
                },
                Slot::Sector { sense, radius, weights } => {
                    let (mut a, mut b) = (0.0, 0.0);
                    for (var, angle) in weights {
                        let l = solution[*var];
                        a += l * radius * angle.cos();
                        b += l * radius * angle.sin();
                    }
                    let magnitude = a.hypot(b).min(*radius);
                    let limit = t.servo.map_or(0.0, |m| m.deflection_limit);
                    let deflection = if magnitude > 0.0 {
                        b.atan2(a).clamp(-limit, limit)
                    } else {
                        0.0
                    };
                    ThrusterCommand {
                        thrust: (sense * magnitude).clamp(t.thrust_min, t.thrust_max),
                        deflection,
                    }
                }
                Slot::Idle => ThrusterCommand::default(),
            })
            .collect();
        Some(Allocation {
            objective: solution[value],
            commands,
        })
    }
}
