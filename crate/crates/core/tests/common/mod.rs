#![allow(dead_code)]

pub mod grid;

use std::path::PathBuf;

use blimp_core::{parse_design, DesignSpec};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.toml"))
}

pub fn fixture(name: &str) -> DesignSpec {
    let path = fixture_path(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_design(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const FIXTURES: [&str; 9] = [
    "case1",
    "case2",
    "case2_65mm",
    "case2_31mm",
    "group3_saucer",
    "group3_oval",
    "reference",
    "prose",
    "single_motor",
];

/// One thruster per body axis at the origin, each good for ±1 N, under a
/// 0.47 / 0.1 m² drag profile on every axis. Starts trimmed to neutral.
pub fn axis_design() -> DesignSpec {
    use blimp_core::design::{ActuatorKind, Orientation};
    use blimp_core::{ThrusterSpec, Vec3};

    let mut d = fixture("case1");
    d.thrusters = (0..3)
        .map(|axis| {
            let mut k = [0i8; 3];
            k[axis] = 1;
            ThrusterSpec {
                id: axis as u8 + 1,
                position: Vec3::zeros(),
                orientation: Orientation::new(k).unwrap(),
                thrust_min: -1.0,
                thrust_max: 1.0,
                kind: ActuatorKind::DcMotor,
                servo: None,
            }
        })
        .collect();
    d.drag.cd_x = 0.47;
    d.drag.cd_y = 0.47;
    d.drag.cd_z = 0.47;
    d.drag.csa_yz = 0.1;
    d.drag.csa_xz = 0.1;
    d.drag.csa_xy = 0.1;
    d
}

/// Carries ballast so that buoyancy exceeds weight by `excess` newtons.
pub fn with_net_lift(mut d: DesignSpec, excess: f64) -> DesignSpec {
    let lift = blimp_core::feasibility::envelope::LiftBudget::of(&d).unwrap();
    d.masses.payload_mass = Some(lift.payload_capacity - excess / d.env.gravity);
    d
}

/// Closed-form terminal speed under quadratic drag.
pub fn analytic_speed(force: f64, cd: f64, area: f64, rho: f64) -> f64 {
    (2.0 * force / (rho * cd * area)).sqrt()
}
