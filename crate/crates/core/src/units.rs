//! Unit conversions. Everything internal is SI (meters, seconds, radians);
//! knots and deg/s are accepted at configuration boundaries only.

/// Meters per second in one knot.
pub const KNOT_MPS: f64 = 0.514444;

pub fn knots_to_mps(knots: f64) -> f64 {
    knots * KNOT_MPS
}

pub fn mps_to_knots(mps: f64) -> f64 {
    mps / KNOT_MPS
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

/// Wrap an angle difference into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % std::f64::consts::TAU;
    if x <= -std::f64::consts::PI {
        x += std::f64::consts::TAU;
    } else if x > std::f64::consts::PI {
        x -= std::f64::consts::TAU;
    }
    x
}
