use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::network::{Batch, Network, Params, ScaleHead};
use super::scaler::Scaler;
use super::FeatureVector;
use crate::dist::{Bounds, CensoredNormal};
use crate::error::{Error, Result};
use crate::seed;

/// What the network forecasts; fixes the scale head and censoring bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Target {
    Ghi,
    Pv { capacity: f64 },
}

impl Target {
    pub fn head(&self) -> ScaleHead {
        match self {
            Target::Ghi => ScaleHead::ReluOffset,
            Target::Pv { .. } => ScaleHead::Softplus,
        }
    }

    pub fn bounds(&self) -> Bounds {
        match *self {
            Target::Ghi => Bounds::nonnegative(),
            Target::Pv { capacity } => Bounds::unit_range(capacity),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NnMode {
    /// One network over all hours with a learned hour embedding.
    Embedding,
    /// One network per local hour, each with its own scaler.
    Hourly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Early-stopping patience in epochs.
    pub patience: usize,
    /// Patience for local hours 23:00-05:00 in hourly mode.
    pub night_patience: usize,
    pub max_epochs: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    pub repeats: usize,
    pub hidden_units: usize,
}

impl TrainConfig {
    pub fn embedding(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 1000,
            patience: 10,
            night_patience: 10,
            max_epochs: 50,
            validation_fraction: 0.2,
            seed,
            repeats: 10,
            hidden_units: 256,
        }
    }

    pub fn hourly(seed: u64) -> Self {
        TrainConfig {
            batch_size: 256,
            patience: 30,
            night_patience: 5,
            max_epochs: 300,
            ..Self::embedding(seed)
        }
    }

    pub fn for_mode(mode: NnMode, seed: u64) -> Self {
        match mode {
            NnMode::Embedding => Self::embedding(seed),
            NnMode::Hourly => Self::hourly(seed),
        }
    }

    pub fn patience_for_hour(&self, hour: u8) -> usize {
        if hour >= 23 || hour <= 5 {
            self.night_patience
        } else {
            self.patience
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRow {
    pub features: FeatureVector,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_crps: f64,
    pub val_crps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub hour: Option<u8>,
    pub seed: u64,
    pub best_epoch: usize,
    /// Validation CRPS never improved on the first epoch.
    pub no_improvement: bool,
    pub epochs: Vec<EpochRecord>,
}

impl RepeatReport {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "networks")]
pub enum NetworkModel {
    Embedding(Network),
    Hourly(Vec<Network>),
}

impl NetworkModel {
    fn network_for(&self, hour: u8) -> &Network {
        match self {
            NetworkModel::Embedding(n) => n,
            NetworkModel::Hourly(v) => &v[usize::from(hour % 24)],
        }
    }

    /// Raw `(mu, sigma)` for each row.
    pub fn parameters(&self, rows: &[FeatureVector]) -> Vec<(f64, f64)> {
        match self {
            NetworkModel::Embedding(n) => {
                let refs: Vec<&FeatureVector> = rows.iter().collect();
                n.parameters(&Batch::new(&n.scaler, &refs))
            }
            NetworkModel::Hourly(nets) => {
                let mut out = vec![(0.0, 0.0); rows.len()];
                for (h, net) in nets.iter().enumerate() {
                    let idx: Vec<usize> = (0..rows.len()).filter(|&i| usize::from(rows[i].hour % 24) == h).collect();
                    if idx.is_empty() {
                        continue;
                    }
                    let refs: Vec<&FeatureVector> = idx.iter().map(|&i| &rows[i]).collect();
                    for (i, p) in idx.iter().zip(net.parameters(&Batch::new(&net.scaler, &refs))) {
                        out[*i] = p;
                    }
                }
                out
            }
        }
    }

    pub fn forward(&self, x: &FeatureVector) -> CensoredNormal {
        self.network_for(x.hour).forward(x)
    }
}

/// Ensemble of independently trained networks; predictions average the
/// distribution parameters, not the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedModel {
    pub bounds: Bounds,
    pub repeats: Vec<NetworkModel>,
}

impl AveragedModel {
    pub fn predict_many(&self, rows: &[FeatureVector]) -> Vec<CensoredNormal> {
        let k = self.repeats.len() as f64;
        let Some((first, rest)) = self.repeats.split_first() else {
            return Vec::new();
        };
        // mean taken as offsets from the first repeat, exact when repeats agree
        let base = first.parameters(rows);
        let mut offsets = vec![(0.0, 0.0); rows.len()];
        for model in rest {
            for ((o, b), (mu, sigma)) in offsets.iter_mut().zip(&base).zip(model.parameters(rows)) {
                o.0 += mu - b.0;
                o.1 += sigma - b.1;
            }
        }
        base.into_iter()
            .zip(offsets)
            .map(|(b, o)| CensoredNormal::new(b.0 + o.0 / k, b.1 + o.1 / k, self.bounds))
            .collect()
    }

    pub fn predict(&self, x: &FeatureVector) -> CensoredNormal {
        self.predict_many(std::slice::from_ref(x))[0]
    }
}

pub fn predict_averaged(am: &AveragedModel, x: &FeatureVector) -> CensoredNormal {
    am.predict(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: AveragedModel,
    pub reports: Vec<RepeatReport>,
}

/// Versioned on-disk form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub target: Target,
    pub mode: NnMode,
    pub config: TrainConfig,
    pub model: AveragedModel,
}

impl ModelFile {
    pub const VERSION: u32 = 1;

    pub fn new(target: Target, mode: NnMode, config: TrainConfig, model: AveragedModel) -> Self {
        ModelFile {
            format_version: Self::VERSION,
            target,
            mode,
            config,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(s)?;
        if f.format_version != Self::VERSION {
            return Err(Error::Config(format!("unsupported model format {}", f.format_version)));
        }
        Ok(f)
    }
}

struct Job<'a> {
    rows: Vec<&'a TrainRow>,
    scaler: Scaler,
    patience: usize,
    with_embedding: bool,
    hour: Option<u8>,
}

fn fit_network(job: &Job<'_>, cfg: &TrainConfig, target: Target, repeat: usize, seed: u64) -> Result<(Network, RepeatReport)> {
    let n = job.rows.len();
    let n_val = ((n as f64) * cfg.validation_fraction).round() as usize;
    let n_train = n - n_val;
    if n_val == 0 || n_train == 0 {
        return Err(Error::TooFewRows { needed: 5, found: n });
    }
    let features: Vec<&FeatureVector> = job.rows.iter().map(|r| &r.features).collect();
    let all = Batch::new(&job.scaler, &features);
    let y: Vec<f64> = job.rows.iter().map(|r| r.y).collect();
    // chronological split: the most recent rows validate
    let train_idx: Vec<usize> = (0..n_train).collect();
    let val_idx: Vec<usize> = (n_train..n).collect();
    let train_batch = all.select(&train_idx);
    let val_batch = all.select(&val_idx);
    let (y_train, y_val) = y.split_at(n_train);

    let mut rng = seed::rng(seed);
    let mut net = Network {
        params: Params::init(cfg.hidden_units, job.with_embedding, &mut rng),
        scaler: job.scaler,
        head: target.head(),
        bounds: target.bounds(),
    };
    let mut opt = Adam::new(&net.params, cfg.learning_rate);
    let mut order = train_idx;
    let mut best: Option<(f64, Params, usize)> = None;
    let mut since_best = 0;
    let mut epochs = Vec::new();

    for epoch in 1..=cfg.max_epochs.max(1) {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch = train_batch.select(chunk);
            let yb: Vec<f64> = chunk.iter().map(|&i| y_train[i]).collect();
            let (_, grad) = net.loss_and_gradient(&batch, &yb);
            opt.step(&mut net.params, &grad);
        }
        let record = EpochRecord {
            epoch,
            train_crps: net.mean_crps(&train_batch, y_train),
            val_crps: net.mean_crps(&val_batch, y_val),
        };
        epochs.push(record);
        let improved = record.val_crps.is_finite() && best.as_ref().map_or(true, |b| record.val_crps < b.0);
        if improved {
            best = Some((record.val_crps, net.params.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= job.patience {
                break;
            }
        }
    }

    let (_, params, best_epoch) = best.ok_or_else(|| Error::NonConvergence("validation CRPS is not finite".into()))?;
    net.params = params;
    Ok((
        net,
        RepeatReport {
            repeat,
            hour: job.hour,
            seed,
            best_epoch,
            no_improvement: best_epoch == 1,
            epochs,
        },
    ))
}

fn train_repeat(rows: &[TrainRow], cfg: &TrainConfig, mode: NnMode, target: Target, repeat: usize) -> Result<(NetworkModel, Vec<RepeatReport>)> {
    let repeat_seed = seed::derive(cfg.seed, &["nn-repeat", &repeat.to_string()]);
    match mode {
        NnMode::Embedding => {
            let refs: Vec<&TrainRow> = rows.iter().collect();
            let scaler = Scaler::fit(refs.iter().map(|r| &r.features)).ok_or(Error::TooFewRows {
                needed: 2,
                found: rows.len(),
            })?;
            let job = Job {
                rows: refs,
                scaler,
                patience: cfg.patience,
                with_embedding: true,
                hour: None,
            };
            let (net, report) = fit_network(&job, cfg, target, repeat, repeat_seed)?;
            Ok((NetworkModel::Embedding(net), vec![report]))
        }
        NnMode::Hourly => {
            let mut nets = Vec::with_capacity(24);
            let mut reports = Vec::with_capacity(24);
            for h in 0..24u8 {
                let subset: Vec<&TrainRow> = rows.iter().filter(|r| r.features.hour == h).collect();
                if subset.len() < 5 {
                    return Err(Error::InsufficientHourData(h));
                }
                let scaler = Scaler::fit(subset.iter().map(|r| &r.features)).ok_or(Error::EmptyGroup(h))?;
                let job = Job {
                    rows: subset,
                    scaler,
                    patience: cfg.patience_for_hour(h),
                    with_embedding: false,
                    hour: Some(h),
                };
                let s = seed::derive(repeat_seed, &["hour", &h.to_string()]);
                let (net, report) = fit_network(&job, cfg, target, repeat, s)?;
                nets.push(net);
                reports.push(report);
            }
            Ok((NetworkModel::Hourly(nets), reports))
        }
    }
}

/// Trains `config.repeats` networks on chronologically ordered rows.
pub fn train(rows: &[TrainRow], config: &TrainConfig, mode: NnMode, target: Target) -> Result<TrainedModel> {
    if rows.is_empty() {
        return Err(Error::TooFewRows { needed: 5, found: 0 });
    }
    if config.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let run = |r: usize| train_repeat(rows, config, mode, target, r);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<_>> = {
        use rayon::prelude::*;
        (0..config.repeats).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<_>> = (0..config.repeats).map(run).collect();

    let mut repeats = Vec::with_capacity(config.repeats);
    let mut reports = Vec::new();
    for r in results {
        let (m, rep) = r?;
        repeats.push(m);
        reports.extend(rep);
    }
    Ok(TrainedModel {
        model: AveragedModel {
            bounds: target.bounds(),
            repeats,
        },
        reports,
    })
}

/// PV power straight from weather predictors, without the model chain.
pub fn train_direct(rows: &[TrainRow], config: &TrainConfig, mode: NnMode, capacity: f64) -> Result<TrainedModel> {
    train(rows, config, mode, Target::Pv { capacity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::N_FEATURES;

    fn constant_model(mu_bias: f64, sigma_bias: f64) -> NetworkModel {
        let mut p = Params::zeros(4, true);
        p.b3[0] = mu_bias;
        p.b3[1] = sigma_bias;
        NetworkModel::Embedding(Network {
            params: p,
            scaler: Scaler {
                mean: [0.0; N_FEATURES],
                sd: [1.0; N_FEATURES],
            },
            head: ScaleHead::ReluOffset,
            bounds: Bounds::nonnegative(),
        })
    }

    fn x() -> FeatureVector {
        FeatureVector {
            ens_mean: 1.0,
            ens_sd: 0.5,
            t2m: 10.0,
            wind: 1.0,
            hour: 3,
        }
    }

    #[test]
    fn averaging_uses_distribution_parameters() {
        let am = AveragedModel {
            bounds: Bounds::nonnegative(),
            repeats: (1..=10).map(|k| constant_model(k as f64, 2.0 - 1e-3)).collect(),
        };
        let d = predict_averaged(&am, &x());
        assert!((d.mu - 5.5).abs() < 1e-12);
        assert!((d.sigma - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_repeats_match_single_model() {
        let single = constant_model(3.0, 1.5);
        let am = AveragedModel {
            bounds: Bounds::nonnegative(),
            repeats: vec![single.clone(); 10],
        };
        assert_eq!(am.predict(&x()), single.forward(&x()));
    }

    #[test]
    fn patience_schedule() {
        let c = TrainConfig::hourly(0);
        for h in [23, 0, 3, 5] {
            assert_eq!(c.patience_for_hour(h), 5);
        }
        for h in [6, 12, 22] {
            assert_eq!(c.patience_for_hour(h), 30);
        }
        assert_eq!(c.batch_size, 256);
        let e = TrainConfig::embedding(0);
        assert_eq!((e.batch_size, e.patience, e.max_epochs, e.repeats), (1000, 10, 50, 10));
    }
}
