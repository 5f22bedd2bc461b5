//! Synthetic but physically plausible datasets for demos and tests.
//!
//! Truth is clear-sky GHI times a persistent cloud factor; the ensemble is
//! biased and underdispersed around it, and PV observations are the chain
//! output of the true GHI with an extra loss factor and noise, so both
//! post-processing stages have something to correct.

use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use rand_distr::{Distribution, Normal};

use crate::chain::{convert, solar_position, PlantSpec, TEMPERATURE, WIND_SPEED};
use crate::config::{DataConfig, NnOverrides, RunConfig, SiteConfig, SplitConfig};
use crate::data::{
    write_ensemble_csv, write_observation_csv, Covariate, Dataset, EnsembleSchema, EnsembleSeries, ObservationSeries,
    StampConvention, TimeStamp, Variable,
};
use crate::error::{Error, Result};
use crate::pipeline::{Method, StrategyTag};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub start: NaiveDate,
    /// Number of days, starting at 00:00 UTC of `start`.
    pub days: i64,
    pub members: usize,
    pub plant: PlantSpec,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(start: NaiveDate, days: i64, seed: u64) -> Self {
        SyntheticSpec {
            start,
            days,
            members: 50,
            plant: PlantSpec::jacumba(),
            seed,
        }
    }
}

/// Haurwitz clear-sky GHI.
pub fn clear_sky(cos_zenith: f64) -> f64 {
    if cos_zenith <= 0.0 {
        0.0
    } else {
        1098.0 * cos_zenith * (-0.057 / cos_zenith).exp()
    }
}

/// Generates a dataset with hour-end stamps on every series.
pub fn generate(spec: &SyntheticSpec) -> Dataset {
    let mut rng = seed::rng(seed::derive(spec.seed, &["synthetic"]));
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let plant = &spec.plant;
    let n = (spec.days * 24) as usize;
    let t0 = spec.start.and_hms_opt(1, 0, 0).expect("valid time");

    let mut times = Vec::with_capacity(n);
    let mut members = Vec::with_capacity(n);
    let mut t2m = Vec::with_capacity(n);
    let mut wind = Vec::with_capacity(n);
    let mut ghi_obs = Vec::with_capacity(n);
    let mut pv_obs = Vec::with_capacity(n);
    let mut latent = 0.0f64;
    for i in 0..n {
        let t = TimeStamp::new(t0 + Duration::hours(i as i64));
        let sp = solar_position(&t, plant);
        let cs = clear_sky(sp.zenith.to_radians().cos());
        latent = 0.9 * latent + 0.44 * std.sample(&mut rng);
        let k = (0.75 + 0.25 * latent.tanh()).clamp(0.05, 1.0);
        let truth = cs * k;

        let local = (t.local_hour(plant.utc_offset) as f64 - 15.0) * std::f64::consts::PI / 12.0;
        let temp = 18.0 + 8.0 * local.cos() + 2.0 * std.sample(&mut rng);
        let w = (3.0 + 1.5 * std.sample(&mut rng)).abs();

        // shared forecast error plus a too-narrow member spread
        let k_fc = k + 0.08 + 0.15 * std.sample(&mut rng);
        let row: Vec<f64> = (0..spec.members)
            .map(|_| (cs * (k_fc + 0.05 * std.sample(&mut rng)).clamp(0.0, 1.1)).max(0.0))
            .collect();

        let pv = 0.9 * convert(truth, temp, w, &sp, plant) * (1.0 + 0.03 * std.sample(&mut rng));
        times.push(t);
        members.push(row);
        t2m.push(temp);
        wind.push(w);
        ghi_obs.push((truth * (1.0 + 0.02 * std.sample(&mut rng))).max(0.0));
        pv_obs.push(pv.clamp(0.0, plant.capacity_mw));
    }
    Dataset {
        ghi_forecast: EnsembleSeries {
            variable: Variable::Ghi,
            times: times.clone(),
            members,
            covariates: vec![
                Covariate {
                    name: TEMPERATURE.into(),
                    values: t2m,
                },
                Covariate {
                    name: WIND_SPEED.into(),
                    values: wind,
                },
            ],
        },
        ghi_obs: ObservationSeries {
            variable: Variable::Ghi,
            times: times.clone(),
            values: ghi_obs,
        },
        pv_obs: ObservationSeries {
            variable: Variable::Pv,
            times,
            values: pv_obs,
        },
        site: plant.site(),
    }
}

fn shifted(series: &ObservationSeries, conv: StampConvention) -> ObservationSeries {
    ObservationSeries {
        times: series.times.iter().map(|t| t.shifted_minutes(-conv.shift_minutes())).collect(),
        ..series.clone()
    }
}

fn write_csv(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes the three input files and a matching `config.json` into `dir`.
///
/// Observations are written with the native stamp conventions of the
/// benchmark sources (GHI mid-hour, PV hour-start), so loading exercises the
/// alignment step. Returns the path of the config.
pub fn write_dataset(dir: &Path, ds: &Dataset, split: SplitConfig, seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let schema = EnsembleSchema {
        members: ds.ghi_forecast.member_count(),
        ..EnsembleSchema::default()
    };
    write_csv(&dir.join("ghi_forecast.csv"), |b| write_ensemble_csv(b, &ds.ghi_forecast, &schema))?;
    write_csv(&dir.join("ghi_obs.csv"), |b| {
        write_observation_csv(b, &shifted(&ds.ghi_obs, StampConvention::MidHour))
    })?;
    write_csv(&dir.join("pv_obs.csv"), |b| {
        write_observation_csv(b, &shifted(&ds.pv_obs, StampConvention::HourStart))
    })?;
    let cfg = RunConfig {
        data: DataConfig {
            ghi_forecast: "ghi_forecast.csv".into(),
            ghi_obs: "ghi_obs.csv".into(),
            pv_obs: "pv_obs.csv".into(),
            ghi_forecast_convention: StampConvention::HourEnd,
            ghi_obs_convention: StampConvention::MidHour,
            pv_obs_convention: StampConvention::HourStart,
            schema,
        },
        site: SiteConfig {
            latitude: ds.site.latitude,
            longitude: ds.site.longitude,
            utc_offset: ds.site.utc_offset,
            capacity_mw: ds.site.capacity_mw,
            tilt_deg: None,
            azimuth_deg: None,
            albedo: None,
            gamma_pdc: None,
            temp_model: None,
        },
        split,
        strategies: StrategyTag::ALL.to_vec(),
        methods: Method::ALL.to_vec(),
        nn_embedding: NnOverrides::default(),
        nn_hourly: NnOverrides::default(),
        seed,
        output_dir: None,
        save_models: true,
    };
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg)?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
