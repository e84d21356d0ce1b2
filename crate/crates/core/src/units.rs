//! Angle unit conversions. Everything inside the crate is radians.

use std::f64::consts::PI;

/// One arcsecond in radians.
pub const ARCSEC: f64 = PI / 648_000.0;

/// One milliarcsecond in radians.
pub const MILLIARCSEC: f64 = ARCSEC / 1000.0;

pub fn arcsec_to_rad(arcsec: f64) -> f64 {
    arcsec * ARCSEC
}

pub fn rad_to_arcsec(rad: f64) -> f64 {
    rad / ARCSEC
}

pub fn mas_to_rad(mas: f64) -> f64 {
    mas * MILLIARCSEC
}

pub fn rad_to_mas(rad: f64) -> f64 {
    rad / MILLIARCSEC
}
