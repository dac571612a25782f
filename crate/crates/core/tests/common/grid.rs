//! Brute-force reference for the motion-primitive checks.

use blimp_core::design::{ActuatorKind, Orientation};
use blimp_core::{Primitive, ThrusterSpec, Vec3};
use rand::Rng;

pub fn thruster(id: u8, p: [f64; 3], k: [i8; 3], lo: f64, hi: f64) -> ThrusterSpec {
    ThrusterSpec {
        id,
        position: Vec3::from(p),
        orientation: Orientation::new(k).unwrap(),
        thrust_min: lo,
        thrust_max: hi,
        kind: ActuatorKind::DcMotor,
        servo: None,
    }
}

/// Hand-expanded `p × (f·K)` summed over thrusters: `(F_x, F_z, M_z)`.
pub fn planar_by_hand(ts: &[ThrusterSpec], f: &[f64]) -> (f64, f64, f64) {
    let (mut fx, mut fz, mut mz) = (0.0, 0.0, 0.0);
    for (t, &fi) in ts.iter().zip(f) {
        let k = t.orientation.entries();
        let (kx, ky, kz) = (k[0] as f64 * fi, k[1] as f64 * fi, k[2] as f64 * fi);
        fx += kx;
        fz += kz;
        mz += t.position.x * ky - t.position.y * kx;
    }
    (fx, fz, mz)
}

/// Exhaustive search over an 11-level grid per channel.
pub fn grid_achievable(ts: &[ThrusterSpec], primitive: Primitive, tol: f64) -> bool {
    const LEVELS: usize = 11;
    let n = ts.len();
    let mut idx = vec![0usize; n];
    loop {
        let f: Vec<f64> = ts
            .iter()
            .zip(&idx)
            .map(|(t, &i)| t.thrust_min + (t.thrust_max - t.thrust_min) * i as f64 / (LEVELS - 1) as f64)
            .collect();
        let (fx, fz, mz) = planar_by_hand(ts, &f);
        let ok = match primitive {
            Primitive::Forward => fx >= tol && fz.abs() <= tol && mz.abs() <= tol,
            Primitive::Altitude => fz.abs() >= tol && fx.abs() <= tol && mz.abs() <= tol,
            Primitive::Yaw => mz.abs() >= tol && fx.abs() <= tol && fz.abs() <= tol,
        };
        if ok {
            return true;
        }
        let mut k = 0;
        loop {
            if k == n {
                return false;
            }
            idx[k] += 1;
            if idx[k] < LEVELS {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn random_grid_config(rng: &mut impl Rng) -> Vec<ThrusterSpec> {
    let n = rng.gen_range(1..=3);
    let b = [0.05, 0.1, 0.15][rng.gen_range(0..3)];
    (0..n)
        .map(|i| {
            let p = [0; 3].map(|_: i32| [-0.1, 0.0, 0.1][rng.gen_range(0..3)]);
            let mut k = [0i8; 3];
            k[rng.gen_range(0..3)] = if rng.gen_bool(0.5) { 1 } else { -1 };
            thruster(i as u8 + 1, p, k, -b, b)
        })
        .collect()
}
