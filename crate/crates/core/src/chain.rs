//! Irradiance-to-power model chain.
//!
//! solar position -> Erbs separation -> Reindl transposition -> Sandia cell
//! temperature -> linear temperature-coefficient power model, applied to each
//! ensemble member independently.

use serde::{Deserialize, Serialize};

use crate::data::{Covariate, EnsembleSeries, Site, TimeStamp, Variable};
use crate::error::{Error, Result};
use crate::solar::{self, SolarPosition};

pub const TEMPERATURE: &str = "t2m";
pub const WIND_SPEED: &str = "wind10m";

/// Sandia module temperature model coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SapmParams {
    pub a: f64,
    pub b: f64,
    pub delta_t: f64,
}

impl Default for SapmParams {
    /// Open-rack glass/polymer module.
    fn default() -> Self {
        SapmParams {
            a: -3.56,
            b: -0.075,
            delta_t: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub latitude: f64,
    pub longitude: f64,
    pub utc_offset: i32,
    pub capacity_mw: f64,
    pub tilt_deg: f64,
    /// Degrees clockwise from north; 180 faces south.
    pub azimuth_deg: f64,
    pub albedo: f64,
    pub gamma_pdc: f64,
    pub temp_model: SapmParams,
}

impl PlantSpec {
    /// Plant at `site` with latitude tilt, facing south, and default component constants.
    pub fn for_site(site: Site) -> Self {
        PlantSpec {
            latitude: site.latitude,
            longitude: site.longitude,
            utc_offset: site.utc_offset,
            capacity_mw: site.capacity_mw,
            tilt_deg: site.latitude.abs(),
            azimuth_deg: 180.0,
            albedo: 0.25,
            gamma_pdc: -0.004,
            temp_model: SapmParams::default(),
        }
    }

    pub fn jacumba() -> Self {
        Self::for_site(Site {
            latitude: 32.62,
            longitude: -116.13,
            utc_offset: -8,
            capacity_mw: 20.0,
        })
    }

    pub fn site(&self) -> Site {
        Site {
            latitude: self.latitude,
            longitude: self.longitude,
            utc_offset: self.utc_offset,
            capacity_mw: self.capacity_mw,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidPlant(msg.to_string()));
        if !(0.0..=90.0).contains(&self.tilt_deg) {
            return bad("tilt must lie in [0, 90] degrees");
        }
        if !(0.0..=1.0).contains(&self.albedo) {
            return bad("albedo must lie in [0, 1]");
        }
        if !(self.capacity_mw > 0.0) {
            return bad("capacity must be positive");
        }
        if !(self.gamma_pdc < 0.0) {
            return bad("power temperature coefficient must be negative");
        }
        if !(-90.0..=90.0).contains(&self.latitude) {
            return bad("latitude out of range");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IrradianceComponents {
    pub ghi: f64,
    pub dni: f64,
    pub dhi: f64,
    pub poa_global: f64,
}

/// Sun position at the middle of the hour that ends at `t`.
pub fn solar_position(t: &TimeStamp, plant: &PlantSpec) -> SolarPosition {
    let mid = t.shifted_minutes(-30);
    solar::solar_position(&mid.instant(), plant.latitude, plant.longitude)
}

const MAX_ZENITH_DNI: f64 = 87.0;

/// Erbs diffuse fraction as a function of the clearness index.
pub fn erbs_diffuse_fraction(kt: f64) -> f64 {
    if kt <= 0.22 {
        1.0 - 0.09 * kt
    } else if kt <= 0.80 {
        0.9511 - 0.1604 * kt + 4.388 * kt.powi(2) - 16.638 * kt.powi(3) + 12.336 * kt.powi(4)
    } else {
        0.165
    }
}

/// Splits GHI into `(dni, dhi)`.
pub fn erbs_separation(ghi: f64, zenith: f64, extraterrestrial: f64) -> (f64, f64) {
    erbs_with_cap(ghi, zenith, extraterrestrial, f64::INFINITY)
}

fn erbs_with_cap(ghi: f64, zenith: f64, extraterrestrial: f64, dni_cap: f64) -> (f64, f64) {
    if !(ghi > 0.0) {
        return (0.0, 0.0);
    }
    if zenith >= 90.0 {
        // sun below the horizon: all remaining light is diffuse
        return (0.0, ghi);
    }
    let kt = (ghi / extraterrestrial.max(1.0)).clamp(0.0, 1.0);
    let dhi = (erbs_diffuse_fraction(kt) * ghi).max(0.0);
    let cos_z = zenith.to_radians().cos().max(MAX_ZENITH_DNI.to_radians().cos());
    let dni = ((ghi - dhi) / cos_z).clamp(0.0, dni_cap);
    (dni, dhi)
}

/// Cosine of the angle of incidence of the beam on the module plane.
pub fn cos_aoi(sp: &SolarPosition, plant: &PlantSpec) -> f64 {
    let (z, t) = (sp.zenith.to_radians(), plant.tilt_deg.to_radians());
    let daz = (sp.azimuth - plant.azimuth_deg).to_radians();
    (z.cos() * t.cos() + z.sin() * t.sin() * daz.cos()).clamp(-1.0, 1.0)
}

/// Plane-of-array irradiance with the Reindl anisotropic sky model.
pub fn poa_transposition(c: &IrradianceComponents, sp: &SolarPosition, plant: &PlantSpec) -> f64 {
    let tilt = plant.tilt_deg.to_radians();
    let cos_inc = cos_aoi(sp, plant).max(0.0);
    let beam = (c.dni * cos_inc).max(0.0);

    let cos_z = sp.cos_zenith();
    let rb = cos_inc / cos_z.max(0.017_45);
    let ai = if sp.extraterrestrial_dni > 0.0 {
        (c.dni / sp.extraterrestrial_dni).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let hb = (c.dni * cos_z).max(0.0);
    let horizon = if c.ghi > 0.0 {
        1.0 + (hb / c.ghi).sqrt() * (0.5 * tilt).sin().powi(3)
    } else {
        1.0
    };
    let sky = (c.dhi * (ai * rb + (1.0 - ai) * 0.5 * (1.0 + tilt.cos()) * horizon)).max(0.0);
    let ground = (c.ghi * plant.albedo * (1.0 - tilt.cos()) * 0.5).max(0.0);
    beam + sky + ground
}

/// Sandia cell temperature in degrees C.
pub fn cell_temperature(poa: f64, temp_air: f64, wind: f64, params: &SapmParams) -> f64 {
    let module = poa * (params.a + params.b * wind).exp() + temp_air;
    module + poa / 1000.0 * params.delta_t
}

/// AC power in MW, clamped to `[0, capacity]`.
pub fn pv_power(poa: f64, t_cell: f64, plant: &PlantSpec) -> f64 {
    let p = plant.capacity_mw * (poa / 1000.0) * (1.0 + plant.gamma_pdc * (t_cell - 25.0));
    p.clamp(0.0, plant.capacity_mw)
}

/// Converts one GHI value at a known sun position to PV power.
pub fn convert(ghi: f64, temp_air: f64, wind: f64, sp: &SolarPosition, plant: &PlantSpec) -> f64 {
    trace(ghi, temp_air, wind, sp, plant).1
}

/// Intermediate irradiance components alongside the converted power.
pub fn trace(
    ghi: f64,
    temp_air: f64,
    wind: f64,
    sp: &SolarPosition,
    plant: &PlantSpec,
) -> (IrradianceComponents, f64) {
    let ghi = ghi.max(0.0);
    let (dni, dhi) = erbs_with_cap(ghi, sp.zenith, sp.extraterrestrial_ghi, sp.extraterrestrial_dni);
    let mut c = IrradianceComponents {
        ghi,
        dni,
        dhi,
        poa_global: 0.0,
    };
    c.poa_global = poa_transposition(&c, sp, plant);
    let t_cell = cell_temperature(c.poa_global, temp_air, wind, &plant.temp_model);
    (c, pv_power(c.poa_global, t_cell, plant))
}

fn covariate<'a>(series: &'a EnsembleSeries, name: &str) -> Result<&'a [f64]> {
    let values = series.covariate(name).ok_or_else(|| Error::MissingCovariate {
        name: name.to_string(),
        time: series.times.first().map(|t| t.to_string()).unwrap_or_default(),
    })?;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::MissingCovariate {
            name: name.to_string(),
            time: series.times[i].to_string(),
        });
    }
    Ok(values)
}

/// Applies the chain to every member of a GHI ensemble.
pub fn run_chain(forecast: &EnsembleSeries, plant: &PlantSpec) -> Result<EnsembleSeries> {
    plant.validate()?;
    let temp = covariate(forecast, TEMPERATURE)?;
    let wind = covariate(forecast, WIND_SPEED)?;
    let members = forecast
        .times
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let sp = solar_position(t, plant);
            forecast.members[i]
                .iter()
                .map(|&g| convert(g, temp[i], wind[i], &sp, plant))
                .collect()
        })
        .collect();
    Ok(EnsembleSeries {
        variable: Variable::Pv,
        times: forecast.times.clone(),
        members,
        covariates: forecast
            .covariates
            .iter()
            .map(|c| Covariate {
                name: c.name.clone(),
                values: c.values.clone(),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sun(zenith: f64, azimuth: f64, e0n: f64) -> SolarPosition {
        SolarPosition {
            zenith,
            azimuth,
            extraterrestrial_ghi: e0n * zenith.to_radians().cos().max(0.0),
            extraterrestrial_dni: e0n,
        }
    }

    #[test]
    fn erbs_examples() {
        assert_eq!(erbs_separation(0.0, 30.0, 1000.0), (0.0, 0.0));
        let (dni, dhi) = erbs_separation(50.0, 60.0, 500.0);
        assert!((dhi - 49.55).abs() < 1e-10, "{dhi}");
        assert!((dni - 0.9).abs() < 1e-10, "{dni}");
        let (_, dhi) = erbs_separation(900.0, 20.0, 1000.0);
        assert!((dhi - 0.165 * 900.0).abs() < 1e-10);
    }

    #[test]
    fn erbs_polynomial_is_continuous() {
        assert!((erbs_diffuse_fraction(0.22) - erbs_diffuse_fraction(0.220_000_1)).abs() < 2e-3);
        assert!((erbs_diffuse_fraction(0.80) - 0.165).abs() < 1e-3);
    }

    #[test]
    fn horizontal_plane_recovers_ghi() {
        let mut plant = PlantSpec::jacumba();
        plant.tilt_deg = 0.0;
        let sp = sun(40.0, 150.0, 1361.1);
        let (dni, dhi) = erbs_separation(600.0, sp.zenith, sp.extraterrestrial_ghi);
        let c = IrradianceComponents {
            ghi: 600.0,
            dni,
            dhi,
            poa_global: 0.0,
        };
        let poa = poa_transposition(&c, &sp, &plant);
        assert!((poa - (dhi + dni * sp.cos_zenith())).abs() < 1e-9);
        assert!((poa - 600.0).abs() < 1.0);
    }

    #[test]
    fn night_gives_zero_poa() {
        let plant = PlantSpec::jacumba();
        let poa = poa_transposition(&IrradianceComponents::default(), &sun(120.0, 0.0, 1361.1), &plant);
        assert_eq!(poa, 0.0);
    }

    #[test]
    fn cell_temperature_examples() {
        let p = SapmParams::default();
        assert_eq!(cell_temperature(0.0, 17.0, 2.0, &p), 17.0);
        let t = cell_temperature(1000.0, 20.0, 1.0, &p);
        assert!((t - (23.0 + 1000.0 * (-3.635f64).exp())).abs() < 1e-12);
        assert!((t - 49.38).abs() < 0.01, "{t}");
        let windy = cell_temperature(800.0, 10.0, 1e4, &p);
        assert!((windy - (10.0 + 0.8 * 3.0)).abs() < 1e-9);
    }

    #[test]
    fn pv_power_examples() {
        let plant = PlantSpec::jacumba();
        assert_eq!(pv_power(0.0, 30.0, &plant), 0.0);
        assert_eq!(pv_power(1000.0, 25.0, &plant), 20.0);
        assert!((pv_power(600.0, 45.0, &plant) - 11.04).abs() < 1e-12);
        assert_eq!(pv_power(1500.0, 25.0, &plant), 20.0);
    }

    #[test]
    fn plant_validation() {
        let mut p = PlantSpec::jacumba();
        assert!(p.validate().is_ok());
        p.tilt_deg = 95.0;
        assert!(matches!(p.validate(), Err(Error::InvalidPlant(_))));
        let mut p = PlantSpec::jacumba();
        p.gamma_pdc = 0.001;
        assert!(p.validate().is_err());
    }
}
