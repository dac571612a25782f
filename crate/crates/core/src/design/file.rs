//! Design file format.
//!
//! Design files are TOML documents with `[env]`, `[balloon]`, `[masses]`,
//! `[[thrusters]]`, `[drag]` and `[hardware]` sections. Lengths are metres
//! unless the key ends in `_mm`; thrust bounds are grams-force
//! (`thrust_range_g = [min, max]`); masses are kilograms.
//!
//! ```toml
//! name = "two-motor"
//!
//! [balloon]
//! shape = "sphere"
//! envelope_2d_mm = [450, 450]
//! envelope_mass = 0.02
//!
//! [masses]
//! electronics_mass = 0.03
//! support_mass = 0.01
//!
//! [[thrusters]]
//! id = 1
//! position = [0.0, 0.1, 0.15]
//! orientation = [1, 0, 0]
//! thrust_range_g = [-15, 15]
//!
//! [drag]
//! cd_x = 0.47
//! cd_y = 0.47
//! cd_z = 0.47
//! csa_yz = 0.1
//! csa_xz = 0.1
//! csa_xy = 0.1
//! ```

use serde::{Deserialize, Serialize};

use super::{
    ActuatorKind, BalloonShape, BalloonSpec, DesignError, DesignSpec, DragConfig,
    EnvironmentConstants, HardwareDims, MassBudget, Orientation, ServoMount, ThrusterSpec,
    Violations, DEFAULT_DEFLECTION_LIMIT_DEG,
};
use crate::Vec3;

/// Parses and validates a design file.
pub fn parse_design(text: &str) -> Result<DesignSpec, DesignError> {
    let de = toml::Deserializer::parse(text).map_err(|e| syntax_error(text, &e))?;
    let file: DesignFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        DesignError::Schema {
            path,
            message: inner.message().trim().to_string(),
        }
    })?;
    file.into_spec()
}

fn syntax_error(text: &str, e: &toml::de::Error) -> DesignError {
    let offset = e.span().map(|s| s.start).unwrap_or(0).min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
    DesignError::Syntax {
        line,
        column,
        message: e.message().trim().to_string(),
    }
}

/// Serialised form of a design, mirroring the file layout one-to-one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<EnvSection>,
    pub balloon: BalloonSection,
    pub masses: MassSection,
    pub thrusters: Vec<ThrusterSection>,
    pub drag: DragSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardware: Option<HardwareSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub air_density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helium_density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalloonSection {
    pub shape: BalloonShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_2d: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_2d_mm: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inflated_semi_axes: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inflated_semi_axes_mm: Option<[f64; 3]>,
    pub envelope_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flatness_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassSection {
    pub electronics_mass: f64,
    pub support_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThrusterSection {
    pub id: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_mm: Option<[f64; 3]>,
    pub orientation: [i64; 3],
    pub thrust_range_g: [f64; 2],
    #[serde(default = "default_kind")]
    pub kind: ActuatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub servo_channel: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deflection_limit_deg: Option<f64>,
}

fn default_kind() -> ActuatorKind {
    ActuatorKind::DcMotor
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragSection {
    pub cd_x: f64,
    pub cd_y: f64,
    pub cd_z: f64,
    pub csa_yz: f64,
    pub csa_xz: f64,
    pub csa_xy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propeller_diameter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propeller_diameter_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motor_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motor_length_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motor_diameter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motor_diameter_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub board_dims: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub board_dims_mm: Option<[f64; 3]>,
}

/// Resolves a length given either in metres or, with the `_mm` key, millimetres.
fn length<const N: usize>(
    v: &mut Violations,
    path: &str,
    metres: Option<[f64; N]>,
    millimetres: Option<[f64; N]>,
) -> Option<[f64; N]> {
    match (metres, millimetres) {
        (Some(m), None) => Some(m),
        (None, Some(mm)) => Some(mm.map(|x| x / 1000.0)),
        (Some(_), Some(_)) => {
            v.push(path, &format!("give either `{path}` or `{path}_mm`, not both"));
            None
        }
        (None, None) => None,
    }
}

fn required<const N: usize>(
    v: &mut Violations,
    path: &str,
    metres: Option<[f64; N]>,
    millimetres: Option<[f64; N]>,
) -> [f64; N] {
    let both = metres.is_some() && millimetres.is_some();
    match length(v, path, metres, millimetres) {
        Some(x) => x,
        None => {
            if !both {
                v.push(path, "is required");
            }
            [f64::NAN; N]
        }
    }
}

impl DesignFile {
    /// Converts to SI units and validates every invariant.
    pub fn into_spec(self) -> Result<DesignSpec, DesignError> {
        let mut v = Violations::default();
        let defaults = EnvironmentConstants::default();
        let env_section = self.env.unwrap_or_default();
        let env = EnvironmentConstants {
            air_density: env_section.air_density.unwrap_or(defaults.air_density),
            helium_density: env_section.helium_density.unwrap_or(defaults.helium_density),
            gravity: env_section.gravity.unwrap_or(defaults.gravity),
        };

        let b = self.balloon;
        let [a2, b2] = required(&mut v, "balloon.envelope_2d", b.envelope_2d, b.envelope_2d_mm);
        let inflated = length(
            &mut v,
            "balloon.inflated_semi_axes",
            b.inflated_semi_axes,
            b.inflated_semi_axes_mm,
        )
        .map(Vec3::from);
        let balloon = BalloonSpec {
            shape: b.shape,
            envelope_2d: (a2, b2),
            inflated_semi_axes: inflated,
            envelope_mass: b.envelope_mass,
            flatness_ratio: b.flatness_ratio.unwrap_or_else(|| b.shape.default_flatness()),
        };

        let mut thrusters = Vec::with_capacity(self.thrusters.len());
        for (i, t) in self.thrusters.into_iter().enumerate() {
            let path = format!("thrusters[{i}].position");
            let position = Vec3::from(required(&mut v, &path, t.position, t.position_mm));
            let entries = t.orientation.map(|k| k.clamp(-2, 2) as i8);
            let orientation = match Orientation::new(entries) {
                Ok(o) => o,
                Err(rule) => {
                    v.push(&format!("thrusters[{i}].orientation"), rule);
                    Orientation::FORWARD
                }
            };
            let servo = t.servo_channel.map(|channel| ServoMount {
                channel,
                deflection_limit: t
                    .deflection_limit_deg
                    .unwrap_or(DEFAULT_DEFLECTION_LIMIT_DEG)
                    .to_radians(),
            });
            if t.servo_channel.is_none() && t.deflection_limit_deg.is_some() {
                v.push(
                    &format!("thrusters[{i}].deflection_limit_deg"),
                    "requires servo_channel",
                );
            }
            thrusters.push(ThrusterSpec {
                id: t.id,
                position,
                orientation,
                thrust_min: env.grams_to_newtons(t.thrust_range_g[0]),
                thrust_max: env.grams_to_newtons(t.thrust_range_g[1]),
                kind: t.kind,
                servo,
            });
        }

        let hardware = self.hardware.map(|h| {
            let one = |v: &mut Violations, name: &str, m: Option<f64>, mm: Option<f64>| {
                required(v, &format!("hardware.{name}"), m.map(|x| [x]), mm.map(|x| [x]))[0]
            };
            HardwareDims {
                propeller_diameter: one(
                    &mut v,
                    "propeller_diameter",
                    h.propeller_diameter,
                    h.propeller_diameter_mm,
                ),
                motor_length: one(&mut v, "motor_length", h.motor_length, h.motor_length_mm),
                motor_diameter: one(&mut v, "motor_diameter", h.motor_diameter, h.motor_diameter_mm),
                board_dims: Vec3::from(required(
                    &mut v,
                    "hardware.board_dims",
                    h.board_dims,
                    h.board_dims_mm,
                )),
            }
        });

        let d = self.drag;
        let spec = DesignSpec {
            name: self.name,
            thrusters,
            balloon,
            masses: MassBudget {
                electronics_mass: self.masses.electronics_mass,
                support_mass: self.masses.support_mass,
                payload_mass: self.masses.payload_mass,
            },
            drag: DragConfig {
                cd_x: d.cd_x,
                cd_y: d.cd_y,
                cd_z: d.cd_z,
                csa_yz: d.csa_yz,
                csa_xz: d.csa_xz,
                csa_xy: d.csa_xy,
            },
            env,
            hardware,
        };

        // Structural problems found above shadow the derived invariant checks
        // on the same fields, so report them first and skip duplicates.
        if let Err(DesignError::Invalid(more)) = spec.validate() {
            for m in more {
                if !v.0.iter().any(|x| x.field == m.field) {
                    v.0.push(m);
                }
            }
        }
        v.finish().map(|_| spec)
    }
}

impl From<&DesignSpec> for DesignFile {
    fn from(spec: &DesignSpec) -> Self {
        let env = spec.env;
        DesignFile {
            name: spec.name.clone(),
            env: Some(EnvSection {
                air_density: Some(env.air_density),
                helium_density: Some(env.helium_density),
                gravity: Some(env.gravity),
            }),
            balloon: BalloonSection {
                shape: spec.balloon.shape,
                envelope_2d: Some([spec.balloon.envelope_2d.0, spec.balloon.envelope_2d.1]),
                envelope_2d_mm: None,
                inflated_semi_axes: spec.balloon.inflated_semi_axes.map(|a| [a.x, a.y, a.z]),
                inflated_semi_axes_mm: None,
                envelope_mass: spec.balloon.envelope_mass,
                flatness_ratio: Some(spec.balloon.flatness_ratio),
            },
            masses: MassSection {
                electronics_mass: spec.masses.electronics_mass,
                support_mass: spec.masses.support_mass,
                payload_mass: spec.masses.payload_mass,
            },
            thrusters: spec
                .thrusters
                .iter()
                .map(|t| ThrusterSection {
                    id: t.id,
                    position: Some([t.position.x, t.position.y, t.position.z]),
                    position_mm: None,
                    orientation: t.orientation.entries().map(i64::from),
                    thrust_range_g: [
                        env.newtons_to_grams(t.thrust_min),
                        env.newtons_to_grams(t.thrust_max),
                    ],
                    kind: t.kind,
                    servo_channel: t.servo.map(|s| s.channel),
                    deflection_limit_deg: t.servo.map(|s| s.deflection_limit.to_degrees()),
                })
                .collect(),
            drag: DragSection {
                cd_x: spec.drag.cd_x,
                cd_y: spec.drag.cd_y,
                cd_z: spec.drag.cd_z,
                csa_yz: spec.drag.csa_yz,
                csa_xz: spec.drag.csa_xz,
                csa_xy: spec.drag.csa_xy,
            },
            hardware: spec.hardware.map(|h| HardwareSection {
                propeller_diameter: Some(h.propeller_diameter),
                propeller_diameter_mm: None,
                motor_length: Some(h.motor_length),
                motor_length_mm: None,
                motor_diameter: Some(h.motor_diameter),
                motor_diameter_mm: None,
                board_dims: Some([h.board_dims.x, h.board_dims.y, h.board_dims.z]),
                board_dims_mm: None,
            }),
        }
    }
}

impl DesignSpec {
    /// Canonical design file text: metres, grams-force, all defaults spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(&DesignFile::from(self)).expect("design file schema is always serialisable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"

[balloon]
shape = "sphere"
envelope_2d_mm = [500, 500]
envelope_mass = 0.02

[masses]
electronics_mass = 0.03
support_mass = 0.01

[[thrusters]]
id = 1
position = [0.0, 0.0, 0.1]
orientation = [1, 0, 0]
thrust_range_g = [-15, 15]

[drag]
cd_x = 0.47
cd_y = 0.47
cd_z = 0.47
csa_yz = 0.1
csa_xz = 0.1
csa_xy = 0.1
"#;

    #[test]
    fn minimal_file_parses_with_defaults() {
        let d = parse_design(MINIMAL).unwrap();
        assert_eq!(d.env, EnvironmentConstants::default());
        assert_eq!(d.balloon.envelope_2d, (0.5, 0.5));
        assert_eq!(d.thrusters.len(), 1);
        assert_eq!(d.thrusters[0].kind, ActuatorKind::DcMotor);
        assert!((d.thrusters[0].thrust_min - -0.14715).abs() < 1e-12);
        assert!((d.thrusters[0].thrust_max - 0.14715).abs() < 1e-12);
    }

    #[test]
    fn bad_orientation_names_the_field() {
        let text = MINIMAL.replace("orientation = [1, 0, 0]", "orientation = [1, 1, 0]");
        let err = parse_design(&text).unwrap_err();
        let v = err.violations();
        assert_eq!(v[0].field, "thrusters[0].orientation");
        assert!(v[0].rule.contains("exactly one nonzero"), "{err}");
    }

    #[test]
    fn unknown_key_is_a_schema_error() {
        let text = MINIMAL.replace("support_mass = 0.01", "support_mass = 0.01\nballast = 2");
        match parse_design(&text).unwrap_err() {
            DesignError::Schema { path, message } => {
                assert_eq!(path, "masses.ballast");
                assert!(message.contains("ballast"));
            }
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn missing_key_is_a_schema_error() {
        let text = MINIMAL.replace("cd_z = 0.47\n", "");
        assert!(matches!(parse_design(&text), Err(DesignError::Schema { .. })));
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = MINIMAL.replace("support_mass = 0.01", "support_mass = = 0.01");
        match parse_design(&text).unwrap_err() {
            DesignError::Syntax { line, column, .. } => {
                assert_eq!(line, 11);
                assert!(column > 1);
            }
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn metres_and_millimetres_are_exclusive() {
        let text = MINIMAL.replace(
            "envelope_2d_mm = [500, 500]",
            "envelope_2d_mm = [500, 500]\nenvelope_2d = [0.5, 0.5]",
        );
        let err = parse_design(&text).unwrap_err();
        assert_eq!(err.violations()[0].field, "balloon.envelope_2d");
    }

    #[test]
    fn reversed_thrust_bounds_are_rejected() {
        let text = MINIMAL.replace("[-15, 15]", "[15, -15]");
        let err = parse_design(&text).unwrap_err();
        assert_eq!(err.violations()[0].field, "thrusters[0].thrust_range_g");
    }

    #[test]
    fn servo_thruster_needs_a_servo() {
        let text = MINIMAL.replace(
            "thrust_range_g = [-15, 15]",
            "thrust_range_g = [-15, 15]\nkind = \"servo_vectored\"",
        );
        let err = parse_design(&text).unwrap_err();
        assert_eq!(err.violations()[0].field, "thrusters[0].servo_channel");
    }

    #[test]
    fn canonical_text_round_trips() {
        let d = parse_design(MINIMAL).unwrap();
        let again = parse_design(&d.to_toml()).unwrap();
        assert_eq!(again.balloon, d.balloon);
        assert_eq!(again.masses, d.masses);
        let (a, b) = (&again.thrusters[0], &d.thrusters[0]);
        assert_eq!(a.position, b.position);
        assert!((a.thrust_max - b.thrust_max).abs() <= 1e-12 * b.thrust_max.abs());
    }
}
