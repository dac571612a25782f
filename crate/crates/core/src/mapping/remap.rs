//! The three-iteration remap procedure.
//!
//! 1. Send any command; the rotation tail stays `N`.
//! 2. Fix the roles until the forward stick moves the blimp forward and the
//!    vertical stick makes it climb.
//! 3. Pick the rotation channels (or servos) until the yaw stick turns right.
//!
//! Each check drives the hidden plant with a test input and inspects the
//! resulting body wrench.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::command::{MappingCommand, Tail};
use super::mixer::{mix, JoystickInput};
use super::plant::Plant;
use super::ChannelMapping;
use crate::design::DesignSpec;
use crate::feasibility::Wrench;
use crate::sim::SimError;

/// Off-axis force allowed in a test motion, relative to the on-axis effect.
pub const COUPLING_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Init,
    HorizontalVertical,
    Rotation,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Verdicts {
    pub horizontal: bool,
    pub vertical: bool,
    pub rotation: bool,
}

impl Verdicts {
    pub fn all(&self) -> bool {
        self.horizontal && self.vertical && self.rotation
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemapError {
    #[error("channel {0} is not wired to any thruster of the design")]
    UnwiredChannel(u8),
    #[error("neither servo {0} nor servo {1} is fitted to the design")]
    UnwiredServos(u8, u8),
    #[error("remap session already complete")]
    AlreadyDone,
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn wrench_for(
    design: &DesignSpec,
    plant: &Plant,
    mapping: &ChannelMapping,
    input: JoystickInput,
) -> Result<Wrench, RemapError> {
    let mixed = mix(mapping, &input).expect("test inputs are in range");
    Ok(plant.actuate(design, &mixed).wrench(design)?)
}

/// Runs the three test motions of `command` against `plant`.
pub fn evaluate(design: &DesignSpec, plant: &Plant, command: &MappingCommand) -> Result<Verdicts, RemapError> {
    // Roles on empty channels are harmless (the default command names all
    // four), but a rotation tail must reach real hardware.
    match command.tail {
        Tail::Unconfirmed => {}
        Tail::Dc { left, right } => {
            if let Some(c) = [left, right].into_iter().find(|c| !plant.is_wired(*c)) {
                return Err(RemapError::UnwiredChannel(c));
            }
        }
        Tail::Servo { servo_a, servo_b, .. } => {
            if !plant.servos.contains_key(&servo_a) && !plant.servos.contains_key(&servo_b) {
                return Err(RemapError::UnwiredServos(servo_a, servo_b));
            }
        }
    }
    let mapping = ChannelMapping::from(command);
    let stick = |x, y, z| JoystickInput { x, y, z, slider: 1.0 };

    let h = wrench_for(design, plant, &mapping, stick(0.0, 1.0, 0.0))?;
    let horizontal = h.force.x > 0.0 && h.force.z.abs() <= COUPLING_RATIO * h.force.x;

    let v = wrench_for(design, plant, &mapping, stick(0.0, 0.0, 1.0))?;
    let climb = -v.force.z;
    let vertical = climb > 0.0 && v.force.x.abs() <= COUPLING_RATIO * climb;

    let rotation = match command.tail {
        Tail::Unconfirmed => false,
        Tail::Dc { .. } => {
            let r = wrench_for(design, plant, &mapping, stick(1.0, 0.0, 0.0))?;
            let scale = design
                .thrusters
                .iter()
                .map(|t| t.thrust_min.abs().max(t.thrust_max.abs()))
                .fold(0.0, f64::max);
            r.moment.z > 0.0
                && r.force.x.abs() <= COUPLING_RATIO * scale
                && r.force.z.abs() <= COUPLING_RATIO * scale
        }
        // Vectored thrust only turns while the thrusters push.
        Tail::Servo { .. } => {
            let r = wrench_for(design, plant, &mapping, stick(1.0, 1.0, 0.0))?;
            r.moment.z > 0.0
        }
    };
    Ok(Verdicts { horizontal, vertical, rotation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemapAttempt {
    pub command: String,
    pub stage_before: Stage,
    pub verdicts: Verdicts,
}

/// Remap state for one design and one hidden plant.
#[derive(Debug, Clone)]
pub struct RemapSession {
    stage: Stage,
    command: Option<MappingCommand>,
    verdicts: Option<Verdicts>,
    history: Vec<RemapAttempt>,
    plant: Plant,
}

impl RemapSession {
    pub fn new(plant: Plant) -> Self {
        Self { stage: Stage::Init, command: None, verdicts: None, history: Vec::new(), plant }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn command(&self) -> Option<&MappingCommand> {
        self.command.as_ref()
    }

    pub fn verdicts(&self) -> Option<Verdicts> {
        self.verdicts
    }

    pub fn history(&self) -> &[RemapAttempt] {
        &self.history
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn is_done(&self) -> bool {
        self.stage == Stage::Done
    }

    /// Applies `command` and advances as far as its verdicts allow.
    pub fn submit(&mut self, design: &DesignSpec, command: MappingCommand) -> Result<Verdicts, RemapError> {
        if self.is_done() {
            return Err(RemapError::AlreadyDone);
        }
        let verdicts = evaluate(design, &self.plant, &command)?;
        let before = self.stage;
        if self.stage == Stage::Init {
            self.stage = Stage::HorizontalVertical;
        }
        if self.stage == Stage::HorizontalVertical && verdicts.horizontal && verdicts.vertical {
            self.stage = Stage::Rotation;
        }
        if self.stage == Stage::Rotation && verdicts.all() {
            self.stage = Stage::Done;
        }
        self.history.push(RemapAttempt { command: command.render(), stage_before: before, verdicts });
        self.command = Some(command);
        self.verdicts = Some(verdicts);
        Ok(verdicts)
    }
}
