//! Trajectory export as CSV.

use std::io::{self, Write};

use super::{SimState, Trajectory};

pub const HEADER: &str = "t,vx,vy,vz,speed_h,psi,psidot";

/// Formats `x` like C's `%g`: six significant digits, trailing zeros dropped.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // Round first so the exponent reflects carries such as 9.999995 -> 10.
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn row(s: &SimState) -> String {
    [s.time, s.velocity.x, s.velocity.y, s.velocity.z, s.horizontal_speed(), s.yaw, s.yaw_rate]
        .iter()
        .map(|v| format_sig6(*v))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_csv(trajectory: &Trajectory, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for s in &trajectory.samples {
        writeln!(out, "{}", row(s))?;
    }
    Ok(())
}

pub fn to_csv_string(trajectory: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_csv(trajectory, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ASCII output")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_g_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(0.02), "0.02");
        assert_eq!(format_sig6(2.2587654321), "2.25877");
        assert_eq!(format_sig6(-123456.7), "-123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(0.0000123456789), "1.23457e-05");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
        assert_eq!(format_sig6(9.9999996), "10");
        assert_eq!(format_sig6(999999.6), "1e+06");
    }
}
