//! Neural-network distributional regression for GHI and PV power.
//!
//! Networks take the ensemble mean and standard deviation of the target's
//! forecast, 2 m temperature and 10 m wind speed, and output the location and
//! scale of a censored normal. Diurnal effects enter either through a learned
//! 2-d hour embedding or by training one network per local hour.

mod adam;
pub mod network;
pub mod scaler;
mod train;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use network::{Batch, Network, Params, ScaleHead};
pub use scaler::{fit_scaler, FittedScaler, Scaler, ScalerMode};
pub use train::{
    predict_averaged, train, train_direct, AveragedModel, EpochRecord, ModelFile, NetworkModel, NnMode,
    RepeatReport, Target, TrainConfig, TrainRow, TrainedModel,
};

pub const N_FEATURES: usize = 4;

/// Network predictors for one forecast case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub ens_mean: f64,
    pub ens_sd: f64,
    pub t2m: f64,
    pub wind: f64,
    pub hour: u8,
}

impl FeatureVector {
    pub fn values(&self) -> [f64; N_FEATURES] {
        [self.ens_mean, self.ens_sd, self.t2m, self.wind]
    }
}
