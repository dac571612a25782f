//! Joystick and slider to per-channel duties.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::command::CHANNELS;
use super::{ChannelMapping, YawRouting};

/// Servo deflection at full yaw stick, degrees.
pub const SERVO_DEFLECTION_MAX_DEG: f64 = 60.0;

/// `x` yaw (positive right), `y` forward, `z` climb, `slider` overall power.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JoystickInput {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub slider: f64,
}

impl JoystickInput {
    pub fn validate(&self) -> Result<(), MixError> {
        for (name, v, lo) in [("x", self.x, -1.0), ("y", self.y, -1.0), ("z", self.z, -1.0), ("slider", self.slider, 0.0)] {
            if !(lo..=1.0).contains(&v) {
                return Err(MixError::OutOfRange { input: name, value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixError {
    #[error("input {input} = {value} out of range")]
    OutOfRange { input: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MixOutput {
    /// Duty per software channel, index = channel − 1.
    pub duties: [f64; CHANNELS],
    /// Deflection per servo channel, radians (positive rotates thrust toward body +y).
    pub servos: BTreeMap<u8, f64>,
}

pub fn mix(mapping: &ChannelMapping, input: &JoystickInput) -> Result<MixOutput, MixError> {
    input.validate()?;
    let base = input.slider;
    let mut out = MixOutput::default();
    for (i, role) in mapping.roles.iter().enumerate() {
        use super::Role::*;
        out.duties[i] = match role {
            Forward | Backward => role.polarity() * base * input.y,
            Up | Down => role.polarity() * base * input.z,
            Unassigned => 0.0,
        };
    }
    match mapping.yaw {
        YawRouting::None => {}
        YawRouting::Dc { left, right } => {
            let l = left as usize - 1;
            let r = right as usize - 1;
            out.duties[l] += mapping.roles[l].polarity() * base * input.x;
            out.duties[r] -= mapping.roles[r].polarity() * base * input.x;
        }
        YawRouting::Servo { left, right } => {
            let delta = input.x * SERVO_DEFLECTION_MAX_DEG.to_radians();
            out.servos.insert(left, delta);
            out.servos.insert(right, -delta);
        }
    }
    for d in &mut out.duties {
        *d = d.clamp(-1.0, 1.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::parse_command;

    fn mapping(s: &str) -> ChannelMapping {
        ChannelMapping::from(&parse_command(s).unwrap())
    }

    #[test]
    fn full_forward() {
        let out = mix(&mapping("1F2U3U4BC4L1R"), &JoystickInput { y: 1.0, slider: 1.0, ..Default::default() }).unwrap();
        assert_eq!(out.duties, [1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn dc_yaw_is_differential() {
        let out = mix(&mapping("1F2U3U4FC4L1R"), &JoystickInput { x: 1.0, slider: 1.0, ..Default::default() }).unwrap();
        assert_eq!(out.duties, [-1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn slider_gates_everything() {
        let out = mix(&mapping("1F2F3U4DC1L2R"), &JoystickInput { x: 1.0, y: -1.0, z: 0.5, slider: 0.0 }).unwrap();
        assert!(out.duties.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn servo_yaw() {
        let out = mix(&mapping("1U2F3N4NS21MRL"), &JoystickInput { x: 0.5, slider: 1.0, ..Default::default() }).unwrap();
        assert!((out.servos[&1] - 30f64.to_radians()).abs() < 1e-12);
        assert!((out.servos[&2] + 30f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        let m = mapping("1F2B3U4DN");
        assert!(mix(&m, &JoystickInput { slider: 1.5, ..Default::default() }).is_err());
        assert!(mix(&m, &JoystickInput { x: f64::NAN, ..Default::default() }).is_err());
    }
}
