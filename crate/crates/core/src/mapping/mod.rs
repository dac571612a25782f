//! Control-channel mapping: command strings, the joystick mixer and the
//! remap procedure that aligns software channels with the real wiring.

pub mod command;
pub mod mixer;
pub mod plant;
pub mod remap;

use serde::{Deserialize, Serialize};

pub use command::{parse_command, MappingCommand, ParseError, ParseErrorKind, Role, ServoOrder, Tail};
pub use mixer::{mix, JoystickInput, MixError, MixOutput, SERVO_DEFLECTION_MAX_DEG};
pub use plant::{Plant, PlantError};
pub use remap::{evaluate, RemapError, RemapSession, Stage, Verdicts};

/// How yaw commands are routed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum YawRouting {
    None,
    Dc { left: u8, right: u8 },
    Servo { left: u8, right: u8 },
}

/// Role sets derived from a [`MappingCommand`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMapping {
    pub forward_channels: Vec<u8>,
    pub backward_channels: Vec<u8>,
    pub up_channels: Vec<u8>,
    pub down_channels: Vec<u8>,
    pub yaw: YawRouting,
    /// Role of every channel, indexed by channel − 1.
    pub roles: [Role; command::CHANNELS],
}

impl ChannelMapping {
    pub fn servo_mode(&self) -> bool {
        matches!(self.yaw, YawRouting::Servo { .. })
    }

    pub fn role(&self, channel: u8) -> Role {
        self.roles[channel as usize - 1]
    }
}

impl From<&MappingCommand> for ChannelMapping {
    fn from(cmd: &MappingCommand) -> Self {
        let mut roles = [Role::Unassigned; command::CHANNELS];
        for (channel, role) in cmd.roles {
            roles[channel as usize - 1] = role;
        }
        let with = |want: Role| -> Vec<u8> {
            (1..=command::CHANNELS as u8).filter(|c| roles[*c as usize - 1] == want).collect()
        };
        let yaw = match cmd.tail {
            Tail::Unconfirmed => YawRouting::None,
            Tail::Dc { left, right } => YawRouting::Dc { left, right },
            Tail::Servo { servo_a, servo_b, order } => match order {
                ServoOrder::LR => YawRouting::Servo { left: servo_a, right: servo_b },
                ServoOrder::RL => YawRouting::Servo { left: servo_b, right: servo_a },
            },
        };
        Self {
            forward_channels: with(Role::Forward),
            backward_channels: with(Role::Backward),
            up_channels: with(Role::Up),
            down_channels: with(Role::Down),
            yaw,
            roles,
        }
    }
}
