//! Blimp design description.
//!
//! A [`DesignSpec`] is the validated, SI-unit form of a design file. Thrust
//! bounds are written in grams-force in files and held in newtons here; the
//! body frame is forward-right-down (x forward, y to starboard, z down) with
//! its origin at the balloon's geometric centre.

mod file;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

pub use file::{parse_design, DesignFile};

/// Maximum number of servo-vectored thrusters in one design.
pub const MAX_VECTORED_THRUSTERS: usize = 8;

/// Default mechanical deflection limit of a thrust-vectoring servo.
pub const DEFAULT_DEFLECTION_LIMIT_DEG: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConstants {
    /// kg/m³
    pub air_density: f64,
    /// kg/m³
    pub helium_density: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for EnvironmentConstants {
    fn default() -> Self {
        Self {
            air_density: 1.225,
            helium_density: 0.1786,
            gravity: 9.81,
        }
    }
}

impl EnvironmentConstants {
    /// Converts grams-force to newtons.
    pub fn grams_to_newtons(&self, grams: f64) -> f64 {
        grams * self.gravity / 1000.0
    }

    pub fn newtons_to_grams(&self, newtons: f64) -> f64 {
        newtons * 1000.0 / self.gravity
    }
}

/// Unit-axis selector for a thruster: exactly one entry is ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i8; 3]", into = "[i8; 3]")]
pub struct Orientation([i8; 3]);

impl Orientation {
    pub const FORWARD: Orientation = Orientation([1, 0, 0]);
    pub const RIGHT: Orientation = Orientation([0, 1, 0]);
    pub const DOWN: Orientation = Orientation([0, 0, 1]);
    pub const UP: Orientation = Orientation([0, 0, -1]);

    pub fn new(entries: [i8; 3]) -> Result<Self, &'static str> {
        if entries.iter().any(|k| !(-1..=1).contains(k)) {
            return Err("entries must be -1, 0 or +1");
        }
        if entries.iter().filter(|k| **k != 0).count() != 1 {
            return Err("must have exactly one nonzero entry");
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> [i8; 3] {
        self.0
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.0[0] as f64, self.0[1] as f64, self.0[2] as f64)
    }

    /// True when the thrust line lies in the body x-y plane.
    pub fn is_horizontal(&self) -> bool {
        self.0[2] == 0
    }
}

impl TryFrom<[i8; 3]> for Orientation {
    type Error = &'static str;

    fn try_from(value: [i8; 3]) -> Result<Self, Self::Error> {
        Orientation::new(value)
    }
}

impl From<Orientation> for [i8; 3] {
    fn from(value: Orientation) -> Self {
        value.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuatorKind {
    DcMotor,
    ServoVectored,
}

/// Servo that rotates a thruster's line of action about the body z axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoMount {
    /// Physical servo channel, 1-based.
    pub channel: u8,
    /// Mechanical deflection limit in radians (symmetric).
    pub deflection_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrusterSpec {
    /// Physical DC motor channel, 1-based.
    pub id: u8,
    /// Body-frame mounting point in metres.
    pub position: Vec3,
    pub orientation: Orientation,
    /// Newtons; negative values are reverse thrust.
    pub thrust_min: f64,
    pub thrust_max: f64,
    pub kind: ActuatorKind,
    pub servo: Option<ServoMount>,
}

impl ThrusterSpec {
    pub fn model(&self) -> ThrusterModel {
        ThrusterModel {
            thrust_min: self.thrust_min,
            thrust_max: self.thrust_max,
        }
    }

    /// Whether a servo can redirect this thruster's force.
    pub fn is_steerable(&self) -> bool {
        self.servo.is_some() && self.orientation.is_horizontal()
    }

    /// Line of action after rotating the mount by `deflection` radians about body z.
    pub fn direction(&self, deflection: f64) -> Vec3 {
        let k = self.orientation.vector();
        if deflection == 0.0 || !self.is_steerable() {
            return k;
        }
        let side = Vec3::z().cross(&k);
        k * deflection.cos() + side * deflection.sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalloonShape {
    Sphere,
    Saucer,
    Oval,
    IrregularOval,
}

impl BalloonShape {
    /// Polar-to-equatorial axis ratio used when inflating a flat envelope.
    pub fn default_flatness(&self) -> f64 {
        match self {
            BalloonShape::Sphere => 1.0,
            BalloonShape::Saucer => 0.6,
            BalloonShape::Oval | BalloonShape::IrregularOval => 0.75,
        }
    }
}

impl fmt::Display for BalloonShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BalloonShape::Sphere => "sphere",
            BalloonShape::Saucer => "saucer",
            BalloonShape::Oval => "oval",
            BalloonShape::IrregularOval => "irregular_oval",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalloonSpec {
    pub shape: BalloonShape,
    /// Semi-axes (a, b) of the flat, deflated envelope in metres.
    pub envelope_2d: (f64, f64),
    /// Measured inflated semi-axes, when known.
    pub inflated_semi_axes: Option<Vec3>,
    /// kg
    pub envelope_mass: f64,
    pub flatness_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBudget {
    /// kg
    pub electronics_mass: f64,
    /// kg
    pub support_mass: f64,
    /// Carried payload in kg. `None` trims the blimp to neutral buoyancy.
    pub payload_mass: Option<f64>,
}

/// Drag coefficients and the cross-sectional area facing each body axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DragConfig {
    pub cd_x: f64,
    pub cd_y: f64,
    pub cd_z: f64,
    /// Faces motion along x.
    pub csa_yz: f64,
    /// Faces motion along y.
    pub csa_xz: f64,
    /// Faces motion along z.
    pub csa_xy: f64,
}

impl DragConfig {
    /// `(C_D, A)` for body axis 0, 1 or 2.
    pub fn axis(&self, axis: usize) -> (f64, f64) {
        match axis {
            0 => (self.cd_x, self.csa_yz),
            1 => (self.cd_y, self.csa_xz),
            2 => (self.cd_z, self.csa_xy),
            _ => panic!("body axis index out of range: {axis}"),
        }
    }
}

/// Gondola hardware dimensions. Informational only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareDims {
    pub propeller_diameter: f64,
    pub motor_length: f64,
    pub motor_diameter: f64,
    pub board_dims: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub name: String,
    pub thrusters: Vec<ThrusterSpec>,
    pub balloon: BalloonSpec,
    pub masses: MassBudget,
    pub drag: DragConfig,
    pub env: EnvironmentConstants,
    pub hardware: Option<HardwareDims>,
}

impl DesignSpec {
    pub fn thruster_index(&self, id: u8) -> Option<usize> {
        self.thrusters.iter().position(|t| t.id == id)
    }

    /// Checks every invariant, reporting all violations at once.
    pub fn validate(&self) -> Result<(), DesignError> {
        let mut v = Violations::default();
        let env = &self.env;
        v.positive("env.air_density", env.air_density);
        v.positive("env.helium_density", env.helium_density);
        v.positive("env.gravity", env.gravity);
        if env.air_density <= env.helium_density {
            v.push("env.helium_density", "must be less than air_density");
        }

        if self.name.trim().is_empty() {
            v.push("name", "must not be empty");
        }

        let b = &self.balloon;
        v.positive("balloon.envelope_2d[0]", b.envelope_2d.0);
        v.positive("balloon.envelope_2d[1]", b.envelope_2d.1);
        if b.shape == BalloonShape::Sphere && b.envelope_2d.0 != b.envelope_2d.1 {
            v.push("balloon.envelope_2d", "sphere envelopes must be circular");
        }
        if let Some(axes) = b.inflated_semi_axes {
            for i in 0..3 {
                v.positive(&format!("balloon.inflated_semi_axes[{i}]"), axes[i]);
            }
        }
        v.non_negative("balloon.envelope_mass", b.envelope_mass);
        v.positive("balloon.flatness_ratio", b.flatness_ratio);

        v.non_negative("masses.electronics_mass", self.masses.electronics_mass);
        v.non_negative("masses.support_mass", self.masses.support_mass);
        if let Some(p) = self.masses.payload_mass {
            v.non_negative("masses.payload_mass", p);
        }

        let d = &self.drag;
        for (name, value) in [
            ("cd_x", d.cd_x),
            ("cd_y", d.cd_y),
            ("cd_z", d.cd_z),
            ("csa_yz", d.csa_yz),
            ("csa_xz", d.csa_xz),
            ("csa_xy", d.csa_xy),
        ] {
            v.positive(&format!("drag.{name}"), value);
        }

        if let Some(h) = &self.hardware {
            v.positive("hardware.propeller_diameter", h.propeller_diameter);
            v.positive("hardware.motor_length", h.motor_length);
            v.positive("hardware.motor_diameter", h.motor_diameter);
            for i in 0..3 {
                v.positive(&format!("hardware.board_dims[{i}]"), h.board_dims[i]);
            }
        }

        if self.thrusters.is_empty() {
            v.push("thrusters", "at least one thruster is required");
        }
        let mut seen = Vec::new();
        for (i, t) in self.thrusters.iter().enumerate() {
            let path = |field: &str| format!("thrusters[{i}].{field}");
            if t.id == 0 {
                v.push(&path("id"), "channel ids are 1-based");
            }
            if seen.contains(&t.id) {
                v.push(&path("id"), &format!("duplicate channel id {}", t.id));
            }
            seen.push(t.id);
            if !t.position.iter().all(|x| x.is_finite()) {
                v.push(&path("position"), "must be finite");
            }
            if !t.thrust_min.is_finite() || !t.thrust_max.is_finite() {
                v.push(&path("thrust_range_g"), "must be finite");
            } else if t.thrust_min > t.thrust_max {
                v.push(&path("thrust_range_g"), "minimum must not exceed maximum");
            }
            match (t.kind, t.servo) {
                (ActuatorKind::ServoVectored, None) => {
                    v.push(&path("servo_channel"), "required for servo_vectored thrusters")
                }
                (ActuatorKind::DcMotor, Some(_)) => {
                    v.push(&path("servo_channel"), "only servo_vectored thrusters take a servo")
                }
                (_, Some(servo)) => {
                    if servo.channel == 0 {
                        v.push(&path("servo_channel"), "servo channels are 1-based");
                    }
                    let limit = servo.deflection_limit;
                    if !(limit > 0.0 && limit <= std::f64::consts::FRAC_PI_2) {
                        v.push(&path("deflection_limit_deg"), "must be in (0, 90]");
                    }
                    if t.thrust_min > 0.0 || t.thrust_max < 0.0 {
                        v.push(&path("thrust_range_g"), "servo_vectored thrusters must be able to idle at zero thrust");
                    }
                }
                _ => {}
            }
        }
        let vectored = self.thrusters.iter().filter(|t| t.servo.is_some()).count();
        if vectored > MAX_VECTORED_THRUSTERS {
            v.push(
                "thrusters",
                &format!("at most {MAX_VECTORED_THRUSTERS} servo_vectored thrusters are supported"),
            );
        }

        v.finish()
    }
}

/// One failed invariant, addressed by a field path such as `thrusters[2].orientation`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldViolation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for FieldViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` {}", self.field, self.rule)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid design: {}", join_violations(.0))]
    Invalid(Vec<FieldViolation>),
}

impl DesignError {
    pub fn violations(&self) -> Vec<FieldViolation> {
        match self {
            DesignError::Invalid(v) => v.clone(),
            DesignError::Schema { path, message } => vec![FieldViolation {
                field: path.clone(),
                rule: message.clone(),
            }],
            DesignError::Syntax { .. } => Vec::new(),
        }
    }
}

fn join_violations(v: &[FieldViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Default)]
struct Violations(Vec<FieldViolation>);

impl Violations {
    fn push(&mut self, field: &str, rule: &str) {
        self.0.push(FieldViolation {
            field: field.to_string(),
            rule: rule.to_string(),
        });
    }

    fn positive(&mut self, field: &str, value: f64) {
        if !(value > 0.0 && value.is_finite()) {
            self.push(field, "must be strictly positive");
        }
    }

    fn non_negative(&mut self, field: &str, value: f64) {
        if !(value >= 0.0 && value.is_finite()) {
            self.push(field, "must be non-negative");
        }
    }

    fn finish(self) -> Result<(), DesignError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(DesignError::Invalid(self.0))
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum ModelError {
    #[error("duty {0} outside [-1, 1]")]
    DutyOutOfRange(f64),
    #[error("thrust {thrust} N outside [{min}, {max}] N")]
    ThrustOutOfRange { thrust: f64, min: f64, max: f64 },
}

/// Normalised duty to thrust map of a motor and propeller.
///
/// Piecewise linear through `(-1, thrust_min)`, `(0, idle)` and
/// `(1, thrust_max)`, where `idle` is zero clamped into the thrust range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrusterModel {
    pub thrust_min: f64,
    pub thrust_max: f64,
}

impl ThrusterModel {
    pub fn idle(&self) -> f64 {
        0.0f64.clamp(self.thrust_min, self.thrust_max)
    }

    pub fn duty_to_thrust(&self, duty: f64) -> Result<f64, ModelError> {
        if !(-1.0..=1.0).contains(&duty) {
            return Err(ModelError::DutyOutOfRange(duty));
        }
        let idle = self.idle();
        let thrust = if duty >= 0.0 {
            idle + duty * (self.thrust_max - idle)
        } else {
            idle - duty * (self.thrust_min - idle)
        };
        Ok(thrust)
    }

    /// Inverse of [`duty_to_thrust`](Self::duty_to_thrust); flat segments map to duty 0.
    pub fn thrust_to_duty(&self, thrust: f64) -> Result<f64, ModelError> {
        let out_of_range = ModelError::ThrustOutOfRange {
            thrust,
            min: self.thrust_min,
            max: self.thrust_max,
        };
        if !(self.thrust_min..=self.thrust_max).contains(&thrust) {
            return Err(out_of_range);
        }
        let idle = self.idle();
        let duty = if thrust > idle {
            (thrust - idle) / (self.thrust_max - idle)
        } else if thrust < idle {
            -(thrust - idle) / (self.thrust_min - idle)
        } else {
            0.0
        };
        Ok(duty.clamp(-1.0, 1.0))
    }
}
