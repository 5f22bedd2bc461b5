//! Browser demo bindings: a censored-normal CRPS explorer, a model-chain
//! diurnal curve and a PIT calibration demo.
//!
//! Each export returns a JSON string. The `*_json` functions hold the logic
//! and are plain Rust, so they run and test natively too.

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use pvpp_core::chain::{cos_aoi, solar_position, trace, PlantSpec};
use pvpp_core::data::{ObservationSeries, TimeStamp, Variable};
use pvpp_core::dist::{Bounds, CensoredNormal};
use pvpp_core::eval::{nominal_level, score_distribution_forecasts};
use pvpp_core::seed;
use pvpp_core::synthetic::clear_sky;

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
pub struct CrpsView {
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
    pub crps: f64,
    pub d_mu: f64,
    pub d_sigma: f64,
    pub mean: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    pub mass_lower: f64,
    pub mass_upper: f64,
}

/// CDF curve and score of a censored normal against one observation.
///
/// `upper` that is not finite or not above `lower` means no upper bound.
pub fn crps_json(mu: f64, sigma: f64, lower: f64, upper: f64, y: f64, points: usize) -> Result<String, String> {
    if !(sigma > 0.0) || !mu.is_finite() || !lower.is_finite() || !y.is_finite() {
        return Err("mu, lower and y must be finite and sigma positive".into());
    }
    let bounds = Bounds {
        lower,
        upper: (upper.is_finite() && upper > lower).then_some(upper),
    };
    let d = CensoredNormal::new(mu, sigma, bounds);
    let y = bounds.clamp(y);
    let hi = bounds.upper.unwrap_or(mu.max(lower) + 4.0 * sigma);
    let lo = lower - 0.05 * (hi - lower);
    let hi = hi + 0.05 * (hi - lower);
    let n = points.clamp(2, 2000);
    let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let (crps, d_mu, d_sigma) = d.crps_with_gradient(y);
    let q = |p: f64| d.quantile(p).map_err(|e| e.to_string());
    to_json(&CrpsView {
        cdf: x.iter().map(|&v| d.cdf(v)).collect(),
        x,
        crps,
        d_mu,
        d_sigma,
        mean: d.mean(),
        median: d.median(),
        q05: q(0.05)?,
        q95: q(0.95)?,
        mass_lower: d.cdf(lower),
        mass_upper: bounds.upper.map_or(0.0, |u| 1.0 - d.cdf_left(u)),
    })
}

#[derive(Serialize)]
pub struct HourPoint {
    /// Local hour at the end of the averaging window.
    pub local_hour: u8,
    pub zenith: f64,
    pub cos_aoi: f64,
    pub ghi: f64,
    pub dni: f64,
    pub dhi: f64,
    pub poa: f64,
    pub power_mw: f64,
}

/// Hourly GHI, its components and PV power over one local day.
///
/// GHI is clear-sky irradiance scaled by `clearness`; the plant is the
/// 20 MW reference plant with the given tilt.
pub fn diurnal_json(date: &str, clearness: f64, temp_air: f64, wind: f64, tilt_deg: f64) -> Result<String, String> {
    let day = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| format!("date {date:?}: {e}"))?;
    let mut plant = PlantSpec::jacumba();
    plant.tilt_deg = tilt_deg;
    plant.validate().map_err(|e| e.to_string())?;
    let midnight_utc = day.and_hms_opt(0, 0, 0).ok_or("invalid date")? - Duration::hours(i64::from(plant.utc_offset));
    let hours = (1..=24)
        .map(|h| {
            let t = TimeStamp::new(midnight_utc + Duration::hours(h));
            let sp = solar_position(&t, &plant);
            let ghi = clearness.clamp(0.0, 1.2) * clear_sky(sp.cos_zenith());
            let (c, power) = trace(ghi, temp_air, wind, &sp, &plant);
            HourPoint {
                local_hour: t.local_hour(plant.utc_offset),
                zenith: sp.zenith,
                cos_aoi: cos_aoi(&sp, &plant),
                ghi: c.ghi,
                dni: c.dni,
                dhi: c.dhi,
                poa: c.poa_global,
                power_mw: power,
            }
        })
        .collect::<Vec<_>>();
    to_json(&hours)
}

#[derive(Serialize)]
pub struct CalibrationView {
    pub pit_counts: Vec<usize>,
    pub coverage: f64,
    pub nominal: f64,
    pub mean_crps: f64,
    /// Mean CRPS of the true distributions on the same observations.
    pub ideal_crps: f64,
}

/// Scores forecasts that are shifted by `bias` and scaled by `spread`
/// (both relative to the true spread) against draws from the truth.
pub fn calibration_json(bias: f64, spread: f64, n: usize, seed_value: u64) -> Result<String, String> {
    if !(spread > 0.0) || !bias.is_finite() {
        return Err("spread must be positive and bias finite".into());
    }
    let n = n.clamp(100, 200_000);
    let mut rng = seed::rng(seed_value);
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).and_then(|d| d.and_hms_opt(1, 0, 0)).ok_or("invalid date")?;
    let bounds = Bounds::nonnegative();
    let mut times = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut forecasts = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        times.push(TimeStamp::new(start + Duration::hours(i as i64)));
        let d = CensoredNormal::new(rng.random_range(50.0..600.0), rng.random_range(20.0..120.0), bounds);
        let z: f64 = rng.sample(StandardNormal);
        values.push(bounds.clamp(d.mu + d.sigma * z));
        forecasts.push(CensoredNormal::new(d.mu + bias * d.sigma, spread * d.sigma, bounds));
        truth.push(d);
    }
    let obs = ObservationSeries {
        variable: Variable::Ghi,
        times: times.clone(),
        values,
    };
    let nominal = nominal_level(50);
    let (report, _) = score_distribution_forecasts(&times, &forecasts, &obs, 0, nominal, seed_value)
        .map_err(|e| e.to_string())?;
    let ideal = truth.iter().zip(&obs.values).map(|(d, &y)| d.crps(y)).sum::<f64>() / n as f64;
    to_json(&CalibrationView {
        pit_counts: report.histogram.counts,
        coverage: report.aggregate.coverage,
        nominal: 100.0 * nominal,
        mean_crps: report.aggregate.crps,
        ideal_crps: ideal,
    })
}

#[wasm_bindgen]
pub fn crps_explorer(mu: f64, sigma: f64, lower: f64, upper: f64, y: f64, points: usize) -> Result<String, JsValue> {
    crps_json(mu, sigma, lower, upper, y, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn diurnal_curve(date: &str, clearness: f64, temp_air: f64, wind: f64, tilt_deg: f64) -> Result<String, JsValue> {
    diurnal_json(date, clearness, temp_air, wind, tilt_deg).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn calibration_demo(bias: f64, spread: f64, n: usize, seed_value: u64) -> Result<String, JsValue> {
    calibration_json(bias, spread, n, seed_value).map_err(|e| JsValue::from_str(&e))
}
