//! Envelope volume, buoyancy and payload budget.
//!
//! A flat Mylar envelope is two sheets, so its area is `2·π·a·b` for
//! semi-axes `(a, b)`. Mylar barely stretches, so the inflated shape keeps
//! that area: a sphere of the same area for spherical balloons, and an
//! oblate ellipsoid with polar axis `flatness · min(a₃, b₃)` otherwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{BalloonShape, BalloonSpec, DesignSpec, EnvironmentConstants, MassBudget};
use crate::Vec3;

/// Exponent of the Knud Thomsen ellipsoid surface-area approximation.
pub const THOMSEN_P: f64 = 1.6075;

/// Semi-axis tolerance of the inflation bisection, metres.
pub const INFLATION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("`{0}` must be strictly positive")]
    NonPositiveDimension(&'static str),
    #[error("inflation scale could not be bracketed (area {area} m² still short at scale {scale})")]
    NonBracketing { area: f64, scale: f64 },
}

/// Area of both sheets of a flat elliptical envelope.
pub fn flat_envelope_area(a: f64, b: f64) -> f64 {
    2.0 * PI * a * b
}

pub fn sphere_radius_for_area(area: f64) -> f64 {
    (area / (4.0 * PI)).sqrt()
}

/// Radius of the flat circular envelope that inflates to a sphere of `radius`.
pub fn deflate_sphere(radius: f64) -> f64 {
    radius * 2f64.sqrt()
}

pub fn thomsen_surface_area(a: f64, b: f64, c: f64) -> f64 {
    let p = THOMSEN_P;
    let mean = ((a * b).powf(p) + (a * c).powf(p) + (b * c).powf(p)) / 3.0;
    4.0 * PI * mean.powf(1.0 / p)
}

pub fn ellipsoid_volume(axes: &Vec3) -> f64 {
    4.0 / 3.0 * PI * axes.x * axes.y * axes.z
}

/// Inflated semi-axes of a balloon, measured or inferred from the flat envelope.
pub fn inflated_semi_axes(balloon: &BalloonSpec) -> Result<Vec3, EnvelopeError> {
    if let Some(axes) = balloon.inflated_semi_axes {
        if axes.iter().any(|x| !(*x > 0.0)) {
            return Err(EnvelopeError::NonPositiveDimension("inflated_semi_axes"));
        }
        return Ok(axes);
    }
    let (a2, b2) = balloon.envelope_2d;
    if !(a2 > 0.0 && b2 > 0.0) {
        return Err(EnvelopeError::NonPositiveDimension("envelope_2d"));
    }
    let area = flat_envelope_area(a2, b2);
    if balloon.shape == BalloonShape::Sphere {
        let r = sphere_radius_for_area(area);
        return Ok(Vec3::new(r, r, r));
    }
    if !(balloon.flatness_ratio > 0.0) {
        return Err(EnvelopeError::NonPositiveDimension("flatness_ratio"));
    }
    let k = inflation_scale(a2, b2, balloon.flatness_ratio, area)?;
    Ok(Vec3::new(k * a2, k * b2, k * balloon.flatness_ratio * a2.min(b2)))
}

/// Bisects for the scale `k` at which the oblate ellipsoid `k·(a, b, f·min(a, b))`
/// has surface area `area`.
fn inflation_scale(a: f64, b: f64, flatness: f64, area: f64) -> Result<f64, EnvelopeError> {
    let c = flatness * a.min(b);
    let excess = |k: f64| thomsen_surface_area(k * a, k * b, k * c) - area;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut doublings = 0;
    while excess(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(EnvelopeError::NonBracketing { area, scale: hi });
        }
    }
    let span = a.max(b).max(c);
    while (hi - lo) * span > INFLATION_TOL {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn envelope_volume(balloon: &BalloonSpec) -> Result<f64, EnvelopeError> {
    inflated_semi_axes(balloon).map(|axes| ellipsoid_volume(&axes))
}

/// Archimedes lift of the displaced air, newtons.
pub fn buoyancy(env: &EnvironmentConstants, volume: f64) -> f64 {
    env.air_density * volume * env.gravity
}

/// Mass the envelope can carry beyond its own structure, kg. Negative means it sinks.
pub fn payload_mass(
    env: &EnvironmentConstants,
    volume: f64,
    masses: &MassBudget,
    envelope_mass: f64,
) -> f64 {
    volume * (env.air_density - env.helium_density)
        - (masses.electronics_mass + envelope_mass + masses.support_mass)
}

/// `|actual − calculated| / calculated`, in percent.
pub fn percent_error(actual: f64, calculated: f64) -> f64 {
    (actual - calculated).abs() / calculated * 100.0
}

/// Mass and lift bookkeeping for a whole design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftBudget {
    /// m³
    pub volume: f64,
    /// N
    pub buoyancy: f64,
    /// Spare lifting capacity, kg.
    pub payload_capacity: f64,
    /// Payload actually carried, kg.
    pub carried_payload: f64,
    /// Structure plus carried payload, kg (no lifting gas).
    pub total_mass: f64,
    /// Everything that moves with the hull, lifting gas included, kg.
    pub inertial_mass: f64,
    /// `F_B − m·g`, positive when the blimp rises unpowered, N.
    pub net_lift: f64,
}

impl LiftBudget {
    pub fn of(design: &DesignSpec) -> Result<Self, EnvelopeError> {
        let env = &design.env;
        let volume = envelope_volume(&design.balloon)?;
        let lift = buoyancy(env, volume);
        let capacity = payload_mass(env, volume, &design.masses, design.balloon.envelope_mass);
        let structure = design.masses.electronics_mass
            + design.balloon.envelope_mass
            + design.masses.support_mass;
        let (carried, inertial_mass) = match design.masses.payload_mass {
            // Trimmed with ballast to exactly the displaced air mass.
            None if capacity >= 0.0 => (capacity, env.air_density * volume),
            None => (0.0, structure + env.helium_density * volume),
            Some(p) => (p, structure + p + env.helium_density * volume),
        };
        Ok(Self {
            volume,
            buoyancy: lift,
            payload_capacity: capacity,
            carried_payload: carried,
            total_mass: structure + carried,
            inertial_mass,
            net_lift: lift - inertial_mass * env.gravity,
        })
    }

    pub fn weight(&self, env: &EnvironmentConstants) -> f64 {
        self.inertial_mass * env.gravity
    }
}
