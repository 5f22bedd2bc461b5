use serde::{Deserialize, Serialize};

use super::{FeatureVector, N_FEATURES};
use crate::error::{Error, Result};

pub const SD_FLOOR: f64 = 1e-8;

/// Per-feature standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: [f64; N_FEATURES],
    pub sd: [f64; N_FEATURES],
}

impl Scaler {
    pub fn fit<'a, I>(rows: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a FeatureVector>,
    {
        let values: Vec<[f64; N_FEATURES]> = rows.into_iter().map(FeatureVector::values).collect();
        if values.len() < 2 {
            return None;
        }
        let n = values.len() as f64;
        let mut mean = [0.0; N_FEATURES];
        let mut sd = [0.0; N_FEATURES];
        for k in 0..N_FEATURES {
            mean[k] = values.iter().map(|v| v[k]).sum::<f64>() / n;
            let ss: f64 = values.iter().map(|v| (v[k] - mean[k]).powi(2)).sum();
            sd[k] = (ss / (n - 1.0)).sqrt().max(SD_FLOOR);
        }
        Some(Scaler { mean, sd })
    }

    pub fn transform(&self, x: &FeatureVector) -> [f64; N_FEATURES] {
        let v = x.values();
        std::array::from_fn(|k| (v[k] - self.mean[k]) / self.sd[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalerMode {
    Global,
    PerHour,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedScaler {
    Global(Scaler),
    PerHour(Vec<Scaler>),
}

impl FittedScaler {
    pub fn for_hour(&self, hour: u8) -> &Scaler {
        match self {
            FittedScaler::Global(s) => s,
            FittedScaler::PerHour(v) => &v[usize::from(hour % 24)],
        }
    }
}

pub fn fit_scaler(rows: &[FeatureVector], mode: ScalerMode) -> Result<FittedScaler> {
    match mode {
        ScalerMode::Global => Scaler::fit(rows)
            .map(FittedScaler::Global)
            .ok_or(Error::TooFewRows {
                needed: 2,
                found: rows.len(),
            }),
        ScalerMode::PerHour => (0..24u8)
            .map(|h| Scaler::fit(rows.iter().filter(|r| r.hour == h)).ok_or(Error::EmptyGroup(h)))
            .collect::<Result<Vec<_>>>()
            .map(FittedScaler::PerHour),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: f64, hour: u8) -> FeatureVector {
        FeatureVector {
            ens_mean: v,
            ens_sd: 2.0,
            t2m: v * 0.5,
            wind: 3.0,
            hour,
        }
    }

    #[test]
    fn constant_feature_hits_floor() {
        let s = Scaler::fit(&[fv(0.0, 1), fv(10.0, 1)]).unwrap();
        assert_eq!(s.mean[0], 5.0);
        assert!((s.sd[0] - 50f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.sd[1], SD_FLOOR);
        assert_eq!(s.transform(&fv(3.0, 1))[1], 0.0);
    }

    #[test]
    fn per_hour_groups_are_independent() {
        let mut rows: Vec<FeatureVector> = (0..24u8).flat_map(|h| [fv(1.0, h), fv(4.0, h), fv(9.0, h)]).collect();
        let before = fit_scaler(&rows, ScalerMode::PerHour).unwrap();
        for r in rows.iter_mut().filter(|r| r.hour == 10) {
            r.ens_mean *= 100.0;
            r.wind = -7.0;
        }
        let after = fit_scaler(&rows, ScalerMode::PerHour).unwrap();
        assert_eq!(before.for_hour(14), after.for_hour(14));
        assert_ne!(before.for_hour(10), after.for_hour(10));
    }

    #[test]
    fn missing_hour_is_an_error() {
        let rows: Vec<FeatureVector> = (0..23u8).flat_map(|h| [fv(1.0, h), fv(4.0, h)]).collect();
        assert!(matches!(fit_scaler(&rows, ScalerMode::PerHour), Err(Error::EmptyGroup(23))));
    }
}
