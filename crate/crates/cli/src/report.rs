//! Evaluation shared by the CLI and the HTTP service, plus its text rendering.

use std::fmt::Write;

use blimp_core::feasibility::envelope::EnvelopeError;
use blimp_core::feasibility::DEFAULT_TOL;
use blimp_core::performance::PerformanceError;
use blimp_core::{check_design, max_performance, DesignSpec, FeasibilityReport, PerformanceReport, Primitive, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub feasibility: FeasibilityReport,
    /// Absent when a motion primitive fails.
    pub performance: Option<PerformanceReport>,
    pub performance_error: Option<String>,
}

impl Evaluation {
    pub fn passes(&self) -> bool {
        self.feasibility.passes()
    }
}

pub fn evaluate(design: &DesignSpec) -> Result<Evaluation, EnvelopeError> {
    let feasibility = check_design(design, DEFAULT_TOL)?;
    let (performance, performance_error) = match max_performance(design) {
        Ok(p) => (Some(p), None),
        Err(PerformanceError::Envelope(e)) => return Err(e),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Evaluation { feasibility, performance, performance_error })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn vec3(v: &Vec3) -> String {
    format!("[{}, {}, {}]", v.x, v.y, v.z)
}

fn list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub fn check_text(design: &DesignSpec, r: &FeasibilityReport) -> String {
    let mut out = String::new();
    writeln!(out, "design: {}", design.name).unwrap();
    for p in Primitive::ALL {
        let cert = r.certificate(p);
        write!(out, "{}: {}", p.name(), verdict(cert.achievable)).unwrap();
        if p == Primitive::Altitude {
            write!(
                out,
                " (ascend {}, descend {})",
                if cert.can_ascend(DEFAULT_TOL) { "yes" } else { "no" },
                if cert.can_descend(DEFAULT_TOL) { "yes" } else { "no" },
            )
            .unwrap();
        }
        if let Some(thrusts) = &cert.witness_thrusts {
            write!(out, " witness thrusts {} N", list(thrusts)).unwrap();
            let deflections = cert.witness_deflections.as_deref().unwrap_or_default();
            if deflections.iter().any(|d| *d != 0.0) {
                write!(out, " deflections {} rad", list(deflections)).unwrap();
            }
        }
        out.push('\n');
    }
    writeln!(out, "motion: {}", verdict(r.motion_ok())).unwrap();
    writeln!(out, "payload: {} (m_payload = {} kg)", verdict(r.payload_ok), r.payload_mass).unwrap();
    for note in &r.notes {
        writeln!(out, "note: {note}").unwrap();
    }
    out
}

pub fn payload_text(design: &DesignSpec, r: &FeasibilityReport) -> String {
    let mut out = String::new();
    writeln!(out, "design: {}", design.name).unwrap();
    writeln!(out, "volume_m3 = {}", r.envelope_volume).unwrap();
    writeln!(out, "buoyancy_n = {}", r.buoyancy).unwrap();
    writeln!(out, "payload_kg = {}", r.payload_mass).unwrap();
    writeln!(out, "payload: {}", verdict(r.payload_ok)).unwrap();
    out
}

pub fn perf_text(design: &DesignSpec, p: &PerformanceReport) -> String {
    let mut out = String::new();
    writeln!(out, "design: {}", design.name).unwrap();
    writeln!(out, "net_propulsion_n = {}", vec3(&p.net_propulsion)).unwrap();
    writeln!(out, "terminal_drag_n = {}", vec3(&p.terminal_drag)).unwrap();
    writeln!(out, "v_max_body_mps = {}", vec3(&p.v_max_body)).unwrap();
    writeln!(out, "direction = {}", vec3(&p.direction)).unwrap();
    writeln!(out, "stalled = {:?}", p.stalled).unwrap();
    let a = p.attitude_used;
    writeln!(out, "attitude_rad = [{}, {}, {}]", a.roll, a.pitch, a.yaw).unwrap();
    out
}
