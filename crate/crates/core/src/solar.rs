//! Solar geometry on the NOAA / Meeus low-precision series (arcminute accuracy).

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

/// Solar constant used for extraterrestrial irradiance, W m-2.
pub const SOLAR_CONSTANT: f64 = 1361.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolarPosition {
    /// Degrees from vertical.
    pub zenith: f64,
    /// Degrees clockwise from north, in `[0, 360)`.
    pub azimuth: f64,
    /// Extraterrestrial irradiance on a horizontal plane, W m-2.
    pub extraterrestrial_ghi: f64,
    /// Extraterrestrial irradiance normal to the beam, W m-2.
    pub extraterrestrial_dni: f64,
}

impl SolarPosition {
    pub fn cos_zenith(&self) -> f64 {
        self.zenith.to_radians().cos()
    }
}

fn julian_day(t: &NaiveDateTime) -> f64 {
    let secs = t.and_utc().timestamp() as f64 + f64::from(t.nanosecond()) * 1e-9;
    secs / 86_400.0 + 2_440_587.5
}

/// Spencer's Earth-Sun distance correction `(r0 / r)^2`.
pub fn distance_factor(day_of_year: u32) -> f64 {
    let b = 2.0 * std::f64::consts::PI * (f64::from(day_of_year) - 1.0) / 365.0;
    1.000_11 + 0.034_221 * b.cos() + 0.001_28 * b.sin() + 0.000_719 * (2.0 * b).cos()
        + 0.000_077 * (2.0 * b).sin()
}

/// Declination and equation of time (minutes) at an instant.
pub fn declination_and_eot(t: &NaiveDateTime) -> (f64, f64) {
    let jc = (julian_day(t) - 2_451_545.0) / 36_525.0;
    let l0 = (280.466_46 + jc * (36_000.769_83 + jc * 0.000_303_2)).rem_euclid(360.0);
    let m = 357.529_11 + jc * (35_999.050_29 - 0.000_153_7 * jc);
    let e = 0.016_708_634 - jc * (0.000_042_037 + 0.000_000_126_7 * jc);
    let mr = m.to_radians();
    let c = mr.sin() * (1.914_602 - jc * (0.004_817 + 0.000_014 * jc))
        + (2.0 * mr).sin() * (0.019_993 - 0.000_101 * jc)
        + (3.0 * mr).sin() * 0.000_289;
    let omega = (125.04 - 1934.136 * jc).to_radians();
    let apparent_long = (l0 + c - 0.005_69 - 0.004_78 * omega.sin()).to_radians();
    let mean_obliq = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.000_59 - jc * 0.001_813))) / 60.0) / 60.0;
    let obliq = (mean_obliq + 0.002_56 * omega.cos()).to_radians();
    let decl = (obliq.sin() * apparent_long.sin()).asin();

    let y = (obliq / 2.0).tan().powi(2);
    let l0r = l0.to_radians();
    let eot = y * (2.0 * l0r).sin() - 2.0 * e * mr.sin() + 4.0 * e * y * mr.sin() * (2.0 * l0r).cos()
        - 0.5 * y * y * (4.0 * l0r).sin()
        - 1.25 * e * e * (2.0 * mr).sin();
    (decl.to_degrees(), 4.0 * eot.to_degrees())
}

/// Sun position for a UTC instant at the given site.
pub fn solar_position(t: &NaiveDateTime, latitude: f64, longitude: f64) -> SolarPosition {
    let (decl, eot) = declination_and_eot(t);
    let utc_minutes = f64::from(t.hour()) * 60.0 + f64::from(t.minute()) + f64::from(t.second()) / 60.0;
    let true_solar_minutes = utc_minutes + eot + 4.0 * longitude;
    let hour_angle = (true_solar_minutes / 4.0 - 180.0).to_radians();

    let (lat, dec) = (latitude.to_radians(), decl.to_radians());
    let cos_zen = (lat.sin() * dec.sin() + lat.cos() * dec.cos() * hour_angle.cos()).clamp(-1.0, 1.0);
    let zenith = cos_zen.acos().to_degrees();
    let az_south = hour_angle
        .sin()
        .atan2(hour_angle.cos() * lat.sin() - dec.tan() * lat.cos());
    let azimuth = (az_south.to_degrees() + 180.0).rem_euclid(360.0);

    let e0n = SOLAR_CONSTANT * distance_factor(t.ordinal());
    SolarPosition {
        zenith,
        azimuth,
        extraterrestrial_ghi: e0n * cos_zen.max(0.0),
        extraterrestrial_dni: e0n,
    }
}
