//! The physical wiring behind the software channels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::command::CHANNELS;
use super::mixer::MixOutput;
use crate::design::DesignSpec;
use crate::sim::Actuation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wire {
    /// Thruster id in the design.
    pub thruster: u8,
    /// +1 or −1; −1 means the motor leads are swapped.
    pub polarity: i8,
}

/// Software channel → physical thruster, and servo channel → steered thruster.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Plant {
    pub channels: BTreeMap<u8, Wire>,
    pub servos: BTreeMap<u8, u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlantError {
    #[error("channel {channel} is wired to thruster {thruster}, which the design lacks")]
    UnknownThruster { channel: u8, thruster: u8 },
    #[error("polarity of channel {0} must be +1 or -1")]
    BadPolarity(u8),
}

impl Plant {
    /// Channel `c` drives thruster `c` with normal polarity; servos as declared in the design.
    pub fn identity(design: &DesignSpec) -> Self {
        let channels = design
            .thrusters
            .iter()
            .filter(|t| (1..=CHANNELS as u8).contains(&t.id))
            .map(|t| (t.id, Wire { thruster: t.id, polarity: 1 }))
            .collect();
        Self { channels, servos: Self::design_servos(design) }
    }

    /// Explicit wiring: `(channel, thruster, polarity)` triples; servos as in the design.
    pub fn wired(design: &DesignSpec, wires: &[(u8, u8, i8)]) -> Result<Self, PlantError> {
        let plant = Self {
            channels: wires
                .iter()
                .map(|&(c, thruster, polarity)| (c, Wire { thruster, polarity }))
                .collect(),
            servos: Self::design_servos(design),
        };
        plant.check(design)?;
        Ok(plant)
    }

    fn design_servos(design: &DesignSpec) -> BTreeMap<u8, u8> {
        design
            .thrusters
            .iter()
            .filter_map(|t| t.servo.map(|s| (s.channel, t.id)))
            .collect()
    }

    pub fn check(&self, design: &DesignSpec) -> Result<(), PlantError> {
        for (&channel, wire) in &self.channels {
            if wire.polarity != 1 && wire.polarity != -1 {
                return Err(PlantError::BadPolarity(channel));
            }
            if design.thruster_index(wire.thruster).is_none() {
                return Err(PlantError::UnknownThruster { channel, thruster: wire.thruster });
            }
        }
        Ok(())
    }

    pub fn is_wired(&self, channel: u8) -> bool {
        self.channels.contains_key(&channel)
    }

    /// Routes mixer output through the wiring onto the design's thrusters.
    ///
    /// Servo deflections are clamped to each thruster's mechanical limit;
    /// unwired channels and servos are dropped.
    pub fn actuate(&self, design: &DesignSpec, mixed: &MixOutput) -> Actuation {
        let mut act = Actuation::idle(design.thrusters.len());
        for (&channel, wire) in &self.channels {
            if let Some(i) = design.thruster_index(wire.thruster) {
                let duty = mixed.duties[channel as usize - 1] * f64::from(wire.polarity);
                act.duties[i] = (act.duties[i] + duty).clamp(-1.0, 1.0);
            }
        }
        for (servo, &delta) in &mixed.servos {
            let Some(&thruster) = self.servos.get(servo) else { continue };
            if let Some(i) = design.thruster_index(thruster) {
                let limit = design.thrusters[i].servo.map_or(0.0, |s| s.deflection_limit);
                act.deflections[i] = delta.clamp(-limit, limit);
            }
        }
        act
    }
}
