//! End-to-end experiment runner: GHI post-processing, the model chain, PV
//! post-processing, the direct model, verification and run-directory output.
//!
//! Every strategy is a path through
//! `GHI ensemble -> [GHI pp] -> chain per member -> [PV pp] -> PV forecast`,
//! except `direct`, which maps the GHI ensemble straight to PV power.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{run_chain, PlantSpec, TEMPERATURE, WIND_SPEED};
use crate::config::RunConfig;
use crate::data::{
    join_and_split, load_ensemble_csv, load_observation_csv, shift_stamp_to_hour_end, Dataset, EnsembleSeries,
    JoinStats, ObservationSeries, StampConvention, Variable,
};
use crate::dist::CensoredNormal;
use crate::emos::{fit_emos_global, fit_emos_hourly, stats_of, EmosFit, EmosModel, EmosRow};
use crate::error::{Error, Result};
use crate::eval::{nominal_level, score_distribution_forecasts, score_ensemble_forecasts, EvaluationReport};
use crate::nn::{train, FeatureVector, ModelFile, NnMode, Target, TrainRow};
use crate::seed;

/// Post-processing method applied at one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    None,
    Emos,
    EmosHourly,
    Nn,
    NnHourly,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Emos, Method::EmosHourly, Method::Nn, Method::NnHourly];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Emos => "emos",
            Method::EmosHourly => "emos_hourly",
            Method::Nn => "nn",
            Method::NnHourly => "nn_hourly",
        }
    }

    pub fn is_nn(self) -> bool {
        matches!(self, Method::Nn | Method::NnHourly)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Method::None, Method::Emos, Method::EmosHourly, Method::Nn, Method::NnHourly]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidStrategy(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyTag {
    RawRaw,
    PpRaw,
    RawPp,
    PpPp,
    Direct,
}

impl StrategyTag {
    pub const ALL: [StrategyTag; 5] = [
        StrategyTag::RawRaw,
        StrategyTag::PpRaw,
        StrategyTag::RawPp,
        StrategyTag::PpPp,
        StrategyTag::Direct,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyTag::RawRaw => "raw_raw",
            StrategyTag::PpRaw => "pp_raw",
            StrategyTag::RawPp => "raw_pp",
            StrategyTag::PpPp => "pp_pp",
            StrategyTag::Direct => "direct",
        }
    }
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidStrategy(format!("unknown strategy `{s}`")))
    }
}

/// Which stages are post-processed, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub tag: StrategyTag,
    pub ghi_method: Method,
    pub pv_method: Method,
}

impl Strategy {
    pub fn new(tag: StrategyTag, ghi_method: Method, pv_method: Method) -> Result<Self> {
        use Method::None as N;
        let ok = match tag {
            StrategyTag::RawRaw => ghi_method == N && pv_method == N,
            StrategyTag::PpRaw => ghi_method != N && pv_method == N,
            StrategyTag::RawPp => ghi_method == N && pv_method != N,
            StrategyTag::PpPp => ghi_method != N && ghi_method == pv_method,
            StrategyTag::Direct => ghi_method == N && pv_method.is_nn(),
        };
        if ok {
            Ok(Strategy {
                tag,
                ghi_method,
                pv_method,
            })
        } else {
            Err(Error::InvalidStrategy(format!(
                "{tag} with GHI method {ghi_method} and PV method {pv_method}"
            )))
        }
    }

    /// The strategy of `tag` that uses `method` wherever post-processing happens.
    pub fn with_method(tag: StrategyTag, method: Method) -> Result<Self> {
        use Method::None as N;
        match tag {
            StrategyTag::RawRaw => Strategy::new(tag, N, N),
            StrategyTag::PpRaw => Strategy::new(tag, method, N),
            StrategyTag::RawPp | StrategyTag::Direct => Strategy::new(tag, N, method),
            StrategyTag::PpPp => Strategy::new(tag, method, method),
        }
    }

    /// All valid combinations of the selected tags and methods, in table order.
    pub fn expand(tags: &[StrategyTag], methods: &[Method]) -> Vec<Strategy> {
        let mut out = Vec::new();
        for &tag in StrategyTag::ALL.iter().filter(|t| tags.contains(t)) {
            if tag == StrategyTag::RawRaw {
                out.push(Strategy::new(tag, Method::None, Method::None).expect("valid"));
                continue;
            }
            for &m in Method::ALL.iter().filter(|m| methods.contains(m)) {
                if let Ok(s) = Strategy::with_method(tag, m) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Method label used in directory names and the comparison table.
    pub fn method(&self) -> Method {
        if self.pv_method != Method::None {
            self.pv_method
        } else {
            self.ghi_method
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.tag, self.method())
    }
}

/// Seed for one purpose of one job.
pub fn job_seed(master: u64, tag: &str, method: Method, purpose: &str) -> u64 {
    seed::derive(master, &[tag, method.as_str(), purpose])
}

/// Predictors and ensemble statistics for every row of `ens`.
fn features(ens: &EnsembleSeries, hours: &[u8]) -> Result<Vec<FeatureVector>> {
    let cov = |name: &str| -> Result<&[f64]> {
        ens.covariate(name).ok_or_else(|| Error::MissingCovariate {
            name: name.to_string(),
            time: ens.times.first().map(|t| t.to_string()).unwrap_or_default(),
        })
    };
    let t2m = cov(TEMPERATURE)?;
    let wind = cov(WIND_SPEED)?;
    ens.members
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let s = stats_of(m)?;
            Ok(FeatureVector {
                ens_mean: s.mean,
                ens_sd: s.variance.sqrt(),
                t2m: t2m[i],
                wind: wind[i],
                hour: hours[i],
            })
        })
        .collect()
}

/// Diagnostics from fitting one post-processing model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub emos: Vec<EmosFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nn: Vec<RepeatSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub repeat: usize,
    pub hour: Option<u8>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_crps: f64,
    /// Validation loss never improved on the first epoch.
    pub no_improvement: bool,
}

/// A fitted map from an ensemble (plus covariates) to a censored normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PpModel {
    Emos(EmosModel),
    Nn(ModelFile),
}

impl PpModel {
    /// Fits `method` on training rows; `obs` must share the index of `input`.
    pub fn fit(
        method: Method,
        input: &EnsembleSeries,
        obs: &ObservationSeries,
        hours: &[u8],
        target: Target,
        cfg: &RunConfig,
        seed: u64,
    ) -> Result<(Self, FitSummary)> {
        if input.times != obs.times || hours.len() != input.len() {
            return Err(Error::IndexMismatch("training forecast and observation rows differ".into()));
        }
        let bounds = target.bounds();
        match method {
            Method::None => Err(Error::InvalidStrategy("nothing to fit for method none".into())),
            Method::Emos | Method::EmosHourly => {
                let rows = input
                    .members
                    .iter()
                    .zip(&obs.values)
                    .map(|(m, &y)| Ok(EmosRow { stats: stats_of(m)?, obs: y }))
                    .collect::<Result<Vec<_>>>()?;
                let (model, fits) = if method == Method::Emos {
                    let (m, f) = fit_emos_global(&rows, bounds, seed)?;
                    (m, vec![f])
                } else {
                    fit_emos_hourly(&rows, hours, bounds, seed)?
                };
                Ok((PpModel::Emos(model), FitSummary { emos: fits, nn: Vec::new() }))
            }
            Method::Nn | Method::NnHourly => {
                let mode = if method == Method::Nn { NnMode::Embedding } else { NnMode::Hourly };
                let rows: Vec<TrainRow> = features(input, hours)?
                    .into_iter()
                    .zip(&obs.values)
                    .map(|(features, &y)| TrainRow { features, y })
                    .collect();
                let tc = cfg.train_config(mode, seed);
                let trained = train(&rows, &tc, mode, target)?;
                let nn = trained
                    .reports
                    .iter()
                    .map(|r| RepeatSummary {
                        repeat: r.repeat,
                        hour: r.hour,
                        best_epoch: r.best_epoch,
                        epochs_run: r.epochs.len(),
                        best_val_crps: r.best().val_crps,
                        no_improvement: r.no_improvement,
                    })
                    .collect();
                Ok((
                    PpModel::Nn(ModelFile::new(target, mode, tc, trained.model)),
                    FitSummary { emos: Vec::new(), nn },
                ))
            }
        }
    }

    pub fn predict(&self, input: &EnsembleSeries, hours: &[u8]) -> Result<Vec<CensoredNormal>> {
        match self {
            PpModel::Emos(m) => input
                .members
                .iter()
                .zip(hours)
                .map(|(members, &h)| m.predict(&stats_of(members)?, h))
                .collect(),
            PpModel::Nn(f) => {
                if f.model.repeats.is_empty() {
                    return Err(Error::UnfittedModel);
                }
                Ok(f.model.predict_many(&features(input, hours)?))
            }
        }
    }

    /// File name used when saving; neural networks are stored as CBOR.
    pub fn file_name(&self, stem: &str) -> String {
        match self {
            PpModel::Emos(_) => format!("{stem}.json"),
            PpModel::Nn(_) => format!("{stem}.cbor"),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        match path.extension().and_then(|e| e.to_str()) {
            Some("cbor") => ciborium::into_writer(self, &mut w).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
            _ => serde_json::to_writer_pretty(&mut w, self).map_err(Error::from),
        }?;
        use std::io::Write;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let r = std::io::BufReader::new(file);
        let m: PpModel = match path.extension().and_then(|e| e.to_str()) {
            Some("cbor") => ciborium::from_reader(r).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            _ => serde_json::from_reader(r)?,
        };
        if let PpModel::Nn(f) = &m {
            if f.format_version != ModelFile::VERSION {
                return Err(Error::Config(format!("unsupported model format {}", f.format_version)));
            }
        }
        Ok(m)
    }
}

/// Quantiles at levels `(i - 0.5) / m`, `i = 1..=m`.
pub fn quantile_members(d: &CensoredNormal, m: usize) -> Result<Vec<f64>> {
    (1..=m)
        .map(|i| {
            let q = d.quantile((i as f64 - 0.5) / m as f64)?;
            Ok(d.bounds.clamp(q))
        })
        .collect()
}

/// Replaces each raw GHI ensemble by `m` equidistant quantiles of its
/// post-processed distribution, keeping `m`, the times and the covariates.
pub fn ghi_pp_to_ensemble(model: &PpModel, forecast: &EnsembleSeries, hours: &[u8]) -> Result<EnsembleSeries> {
    let m = forecast.member_count();
    let dists = model.predict(forecast, hours)?;
    let members = dists
        .iter()
        .map(|d| quantile_members(d, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleSeries {
        variable: Variable::Ghi,
        times: forecast.times.clone(),
        members,
        covariates: forecast.covariates.clone(),
    })
}

fn shift_ensemble(series: EnsembleSeries, conv: StampConvention) -> EnsembleSeries {
    let shift = conv.shift_minutes();
    if shift == 0 {
        return series;
    }
    EnsembleSeries {
        times: series.times.iter().map(|t| t.shifted_minutes(shift)).collect(),
        ..series
    }
}

/// Reads the three input files and aligns every stamp to the end of its hour.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let d = &cfg.data;
    let cap = cfg.site.capacity_mw;
    let ghi_forecast = shift_ensemble(
        load_ensemble_csv(&d.ghi_forecast, &d.schema, Variable::Ghi)?,
        d.ghi_forecast_convention,
    );
    ghi_forecast.validate()?;
    let ghi_obs = shift_stamp_to_hour_end(load_observation_csv(&d.ghi_obs, Variable::Ghi, None)?, d.ghi_obs_convention);
    let pv_obs = shift_stamp_to_hour_end(load_observation_csv(&d.pv_obs, Variable::Pv, Some(cap))?, d.pv_obs_convention);
    Ok(Dataset {
        ghi_forecast,
        ghi_obs,
        pv_obs,
        site: cfg.site.plant().site(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

pub fn fingerprint(path: &Path) -> Result<Fingerprint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(Fingerprint {
        path: path.to_path_buf(),
        bytes: bytes.len() as u64,
        sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

/// Forecast level a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Ghi,
    Pv,
}

/// One unit of work in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "lowercase")]
pub enum Job {
    /// GHI forecast verification; `Method::None` scores the raw ensemble.
    Ghi { method: Method },
    Pv { strategy: Strategy },
}

impl Job {
    pub fn level(&self) -> Level {
        match self {
            Job::Ghi { .. } => Level::Ghi,
            Job::Pv { .. } => Level::Pv,
        }
    }

    /// Strategy label and method label.
    pub fn labels(&self) -> (&'static str, Method) {
        match self {
            Job::Ghi { method } => ("ghi", *method),
            Job::Pv { strategy } => (strategy.tag.as_str(), strategy.method()),
        }
    }

    /// Output directory relative to the run root.
    pub fn dir(&self) -> PathBuf {
        let (s, m) = self.labels();
        let m = match (self, m) {
            (Job::Ghi { .. }, Method::None) => "raw",
            _ => m.as_str(),
        };
        Path::new(s).join(m)
    }
}

/// The fitted pieces behind a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobModels {
    pub plant: Option<PlantSpec>,
    /// Run-relative path of the GHI model used as the first stage.
    pub ghi_model: Option<PathBuf>,
    #[serde(skip)]
    pub pv_model: Option<PpModel>,
    pub pv_model_file: Option<String>,
    pub fit: FitSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    pub job: Job,
    pub report: EvaluationReport,
    pub models: JobModels,
    pub seeds: BTreeMap<String, u64>,
}

/// Prepared data plus caches of everything shared between jobs.
pub struct Experiment {
    pub cfg: RunConfig,
    pub plant: PlantSpec,
    pub train: Dataset,
    pub test: Dataset,
    pub stats: JoinStats,
    pub train_hours: Vec<u8>,
    pub test_hours: Vec<u8>,
    raw_chain: Option<(EnsembleSeries, EnsembleSeries)>,
    ghi_models: BTreeMap<Method, (PpModel, FitSummary)>,
    pp_chain: BTreeMap<Method, (EnsembleSeries, EnsembleSeries)>,
}

impl Experiment {
    pub fn prepare(cfg: RunConfig) -> Result<Self> {
        let ds = load_dataset(&cfg)?;
        Self::from_dataset(cfg, &ds)
    }

    pub fn from_dataset(cfg: RunConfig, ds: &Dataset) -> Result<Self> {
        let plant = cfg.site.plant();
        plant.validate()?;
        let (train, test, stats) = join_and_split(ds, &cfg.split.into())?;
        let train_hours = train.local_hours();
        let test_hours = test.local_hours();
        Ok(Experiment {
            cfg,
            plant,
            train,
            test,
            stats,
            train_hours,
            test_hours,
            raw_chain: None,
            ghi_models: BTreeMap::new(),
            pp_chain: BTreeMap::new(),
        })
    }

    fn master(&self) -> u64 {
        self.cfg.seed
    }

    /// Raw chain outputs for the training and test periods.
    pub fn raw_chain(&mut self) -> Result<&(EnsembleSeries, EnsembleSeries)> {
        if self.raw_chain.is_none() {
            let tr = run_chain(&self.train.ghi_forecast, &self.plant)?;
            let te = run_chain(&self.test.ghi_forecast, &self.plant)?;
            self.raw_chain = Some((tr, te));
        }
        Ok(self.raw_chain.as_ref().expect("just set"))
    }

    /// The GHI post-processing model for `method`, fitted on the training period.
    pub fn ghi_model(&mut self, method: Method) -> Result<&(PpModel, FitSummary)> {
        if !self.ghi_models.contains_key(&method) {
            let seed = job_seed(self.master(), "ghi", method, "fit");
            let fitted = PpModel::fit(
                method,
                &self.train.ghi_forecast,
                &self.train.ghi_obs,
                &self.train_hours,
                Target::Ghi,
                &self.cfg,
                seed,
            )?;
            self.ghi_models.insert(method, fitted);
        }
        Ok(&self.ghi_models[&method])
    }

    /// Chain outputs driven by post-processed GHI for both periods.
    pub fn pp_chain(&mut self, method: Method) -> Result<&(EnsembleSeries, EnsembleSeries)> {
        if !self.pp_chain.contains_key(&method) {
            self.ghi_model(method)?;
            let model = &self.ghi_models[&method].0;
            let tr = ghi_pp_to_ensemble(model, &self.train.ghi_forecast, &self.train_hours)?;
            let te = ghi_pp_to_ensemble(model, &self.test.ghi_forecast, &self.test_hours)?;
            let chains = (run_chain(&tr, &self.plant)?, run_chain(&te, &self.plant)?);
            self.pp_chain.insert(method, chains);
        }
        Ok(&self.pp_chain[&method])
    }

    fn nominal(&self) -> f64 {
        nominal_level(self.test.ghi_forecast.member_count())
    }

    fn pv_target(&self) -> Target {
        Target::Pv {
            capacity: self.plant.capacity_mw,
        }
    }

    pub fn run_job(&mut self, job: Job) -> Result<JobResult> {
        match job {
            Job::Ghi { method } => self.run_ghi(method),
            Job::Pv { strategy } => self.run_strategy(strategy),
        }
    }

    fn run_ghi(&mut self, method: Method) -> Result<JobResult> {
        let job = Job::Ghi { method };
        let offset = self.plant.utc_offset;
        let mut seeds = BTreeMap::new();
        if method == Method::None {
            let s = job_seed(self.master(), "ghi", method, "ties");
            seeds.insert("ties".into(), s);
            let (report, _) = score_ensemble_forecasts(&self.test.ghi_forecast, &self.test.ghi_obs, offset, s)?;
            return Ok(JobResult {
                job,
                report,
                models: JobModels {
                    plant: None,
                    ghi_model: None,
                    pv_model: None,
                    pv_model_file: None,
                    fit: FitSummary::default(),
                },
                seeds,
            });
        }
        let fit_seed = job_seed(self.master(), "ghi", method, "fit");
        let pit_seed = job_seed(self.master(), "ghi", method, "pit");
        seeds.insert("fit".into(), fit_seed);
        seeds.insert("pit".into(), pit_seed);
        let nominal = self.nominal();
        let (model, fit) = self.ghi_model(method)?.clone();
        let dists = model.predict(&self.test.ghi_forecast, &self.test_hours)?;
        let (report, _) =
            score_distribution_forecasts(&self.test.ghi_forecast.times, &dists, &self.test.ghi_obs, offset, nominal, pit_seed)?;
        Ok(JobResult {
            job,
            report,
            models: JobModels {
                plant: None,
                ghi_model: None,
                pv_model_file: Some(model.file_name("model")),
                pv_model: Some(model),
                fit,
            },
            seeds,
        })
    }

    /// Runs one PV strategy and scores it on the test period.
    pub fn run_strategy(&mut self, s: Strategy) -> Result<JobResult> {
        let s = Strategy::new(s.tag, s.ghi_method, s.pv_method)?;
        let job = Job::Pv { strategy: s };
        let tag = s.tag.as_str();
        let offset = self.plant.utc_offset;
        let master = self.master();
        let nominal = self.nominal();
        let mut seeds = BTreeMap::new();
        let ghi_ref = (s.ghi_method != Method::None).then(|| Job::Ghi { method: s.ghi_method }.dir());

        // ensemble-valued strategies: the chain output is the forecast
        if s.pv_method == Method::None {
            let ties = job_seed(master, tag, s.method(), "ties");
            seeds.insert("ties".into(), ties);
            if s.ghi_method != Method::None {
                seeds.insert("ghi_fit".into(), job_seed(master, "ghi", s.ghi_method, "fit"));
            }
            let test_obs = self.test.pv_obs.clone();
            let forecast = if s.ghi_method == Method::None {
                &self.raw_chain()?.1
            } else {
                &self.pp_chain(s.ghi_method)?.1
            };
            let (report, _) = score_ensemble_forecasts(forecast, &test_obs, offset, ties)?;
            return Ok(JobResult {
                job,
                report,
                models: JobModels {
                    plant: Some(self.plant),
                    ghi_model: ghi_ref,
                    pv_model: None,
                    pv_model_file: None,
                    fit: FitSummary::default(),
                },
                seeds,
            });
        }

        let fit_seed = job_seed(master, tag, s.pv_method, "fit");
        let pit_seed = job_seed(master, tag, s.pv_method, "pit");
        seeds.insert("fit".into(), fit_seed);
        seeds.insert("pit".into(), pit_seed);
        let target = self.pv_target();
        let (train_in, test_in) = match s.tag {
            StrategyTag::RawPp => self.raw_chain()?.clone(),
            StrategyTag::PpPp => {
                seeds.insert("ghi_fit".into(), job_seed(master, "ghi", s.ghi_method, "fit"));
                self.pp_chain(s.ghi_method)?.clone()
            }
            StrategyTag::Direct => (self.train.ghi_forecast.clone(), self.test.ghi_forecast.clone()),
            StrategyTag::RawRaw | StrategyTag::PpRaw => unreachable!("validated above"),
        };
        let (model, fit) = PpModel::fit(
            s.pv_method,
            &train_in,
            &self.train.pv_obs,
            &self.train_hours,
            target,
            &self.cfg,
            fit_seed,
        )?;
        let dists = model.predict(&test_in, &self.test_hours)?;
        let (report, _) = score_distribution_forecasts(&test_in.times, &dists, &self.test.pv_obs, offset, nominal, pit_seed)?;
        Ok(JobResult {
            job,
            report,
            models: JobModels {
                plant: (s.tag != StrategyTag::Direct).then_some(self.plant),
                ghi_model: ghi_ref,
                pv_model_file: Some(model.file_name("pv_model")),
                pv_model: Some(model),
                fit,
            },
            seeds,
        })
    }

    /// Jobs implied by the configuration: GHI reports first, then PV strategies.
    pub fn jobs(&self) -> Vec<Job> {
        let methods = &self.cfg.methods;
        let mut jobs = vec![Job::Ghi { method: Method::None }];
        jobs.extend(Method::ALL.iter().filter(|m| methods.contains(m)).map(|&method| Job::Ghi { method }));
        jobs.extend(
            Strategy::expand(&self.cfg.strategies, methods)
                .into_iter()
                .map(|strategy| Job::Pv { strategy }),
        );
        jobs
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes `report.json`, `per_hour.csv`, `histogram.csv`, `model.json` and
/// any fitted model file under `root/<strategy>/<method>/`.
pub fn write_job(root: &Path, r: &JobResult, save_models: bool) -> Result<()> {
    let dir = root.join(r.job.dir());
    create_dir(&dir)?;
    write_file(&dir.join("report.json"), r.report.to_json()?)?;
    let mut buf = Vec::new();
    r.report.write_per_hour_csv(&mut buf)?;
    write_file(&dir.join("per_hour.csv"), &buf)?;
    buf.clear();
    r.report.write_histogram_csv(&mut buf)?;
    write_file(&dir.join("histogram.csv"), &buf)?;
    if let (Some(m), Some(name), true) = (&r.models.pv_model, &r.models.pv_model_file, save_models) {
        m.save(&dir.join(name))?;
    }
    // for GHI jobs the fitted model itself is model.*; otherwise describe the stages
    if !(matches!(r.job, Job::Ghi { .. }) && r.models.pv_model.is_some()) {
        write_file(&dir.join("model.json"), serde_json::to_string_pretty(&r.models)?)?;
    } else if !r.models.fit.emos.is_empty() || !r.models.fit.nn.is_empty() {
        write_file(&dir.join("fit.json"), serde_json::to_string_pretty(&r.models.fit)?)?;
    }
    Ok(())
}

/// One line of the ranked comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub level: Level,
    pub rank: usize,
    pub strategy: String,
    pub method: Method,
    pub n: usize,
    pub crps: f64,
    pub mae: f64,
    pub bias: f64,
    pub coverage: f64,
    pub width: f64,
    pub daytime_coverage: Option<f64>,
    pub daytime_width: Option<f64>,
    pub nominal: f64,
    /// Percent mean-CRPS improvement over the raw forecast of the same level.
    pub skill: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    /// Ranks results by mean CRPS within each level (GHI rows first).
    pub fn build(results: &[JobResult]) -> Self {
        let reference = |level: Level| {
            results.iter().find(|r| match r.job {
                Job::Ghi { method } => level == Level::Ghi && method == Method::None,
                Job::Pv { strategy } => level == Level::Pv && strategy.tag == StrategyTag::RawRaw,
            })
        };
        let mut rows: Vec<ComparisonRow> = results
            .iter()
            .map(|r| {
                let (s, m) = r.job.labels();
                let a = &r.report.aggregate;
                let skill = reference(r.job.level())
                    .and_then(|rf| crate::eval::skill_summary(&r.report, &rf.report).ok());
                ComparisonRow {
                    level: r.job.level(),
                    rank: 0,
                    strategy: s.to_string(),
                    method: m,
                    n: a.n,
                    crps: a.crps,
                    mae: a.mae,
                    bias: a.bias,
                    coverage: a.coverage,
                    width: a.width,
                    daytime_coverage: r.report.daytime.map(|d| d.coverage),
                    daytime_width: r.report.daytime.map(|d| d.width),
                    nominal: r.report.nominal,
                    skill,
                }
            })
            .collect();
        rows.sort_by(|a, b| {
            a.level
                .cmp(&b.level)
                .then(a.crps.total_cmp(&b.crps))
                .then_with(|| a.strategy.cmp(&b.strategy))
                .then(a.method.cmp(&b.method))
        });
        let mut last = None;
        let mut rank = 0;
        for r in &mut rows {
            if last != Some(r.level) {
                rank = 0;
                last = Some(r.level);
            }
            rank += 1;
            r.rank = rank;
        }
        Comparison { rows }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        wtr.write_record([
            "level",
            "rank",
            "strategy",
            "method",
            "n",
            "crps",
            "mae",
            "bias",
            "coverage",
            "width",
            "daytime_coverage",
            "daytime_width",
            "nominal",
            "skill_pct",
        ])?;
        for r in &self.rows {
            wtr.write_record([
                match r.level {
                    Level::Ghi => "ghi".to_string(),
                    Level::Pv => "pv".to_string(),
                },
                r.rank.to_string(),
                r.strategy.clone(),
                r.method.to_string(),
                r.n.to_string(),
                r.crps.to_string(),
                r.mae.to_string(),
                r.bias.to_string(),
                r.coverage.to_string(),
                r.width.to_string(),
                opt(r.daytime_coverage),
                opt(r.daytime_width),
                r.nominal.to_string(),
                opt(r.skill),
            ])?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn find(&self, level: Level, strategy: &str, method: Method) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.level == level && r.strategy == strategy && r.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestJob {
    pub job: Job,
    pub dir: PathBuf,
    pub seeds: BTreeMap<String, u64>,
    pub mean_crps: f64,
}

/// Provenance of a run: versions, seeds, inputs and the join summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub master_seed: u64,
    pub inputs: Vec<Fingerprint>,
    pub join: JoinStats,
    pub plant: PlantSpec,
    pub config: RunConfig,
    pub jobs: Vec<ManifestJob>,
}

/// Everything produced by [`run_all`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub comparison: Comparison,
    pub manifest: Manifest,
    pub results: Vec<JobResult>,
}

/// Runs every configured job and writes the run directory.
pub fn run_all(cfg: RunConfig, out: &Path) -> Result<RunSummary> {
    let inputs = [&cfg.data.ghi_forecast, &cfg.data.ghi_obs, &cfg.data.pv_obs]
        .into_iter()
        .map(|p| fingerprint(p))
        .collect::<Result<Vec<_>>>()?;
    let mut exp = Experiment::prepare(cfg)?;
    let jobs = exp.jobs();
    run_jobs(&mut exp, &jobs, out, inputs)
}

/// Runs `jobs` on a prepared experiment and writes their outputs plus the
/// comparison table and manifest.
pub fn run_jobs(exp: &mut Experiment, jobs: &[Job], out: &Path, inputs: Vec<Fingerprint>) -> Result<RunSummary> {
    create_dir(out)?;
    let save = exp.cfg.save_models;
    let mut results = Vec::with_capacity(jobs.len());
    for &job in jobs {
        let r = exp.run_job(job)?;
        write_job(out, &r, save)?;
        results.push(r);
    }
    let comparison = Comparison::build(&results);
    write_file(&out.join("comparison.csv"), comparison.to_csv()?)?;
    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: exp.cfg.seed,
        inputs,
        join: exp.stats,
        plant: exp.plant,
        config: exp.cfg.clone(),
        jobs: results
            .iter()
            .map(|r| ManifestJob {
                job: r.job,
                dir: r.job.dir(),
                seeds: r.seeds.clone(),
                mean_crps: r.report.aggregate.crps,
            })
            .collect(),
    };
    write_file(&out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunSummary {
        comparison,
        manifest,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_invariants() {
        use Method::*;
        use StrategyTag::*;
        assert!(Strategy::new(RawRaw, None, None).is_ok());
        assert!(Strategy::new(RawRaw, Emos, None).is_err());
        assert!(Strategy::new(PpRaw, Emos, None).is_ok());
        assert!(Strategy::new(PpRaw, None, Emos).is_err());
        assert!(Strategy::new(RawPp, None, NnHourly).is_ok());
        assert!(Strategy::new(PpPp, Emos, Emos).is_ok());
        assert!(Strategy::new(PpPp, Emos, Nn).is_err());
        assert!(Strategy::new(Direct, None, Nn).is_ok());
        assert!(Strategy::new(Direct, None, Emos).is_err());
    }

    #[test]
    fn strategy_counts() {
        assert_eq!(Strategy::expand(&StrategyTag::ALL, &Method::ALL).len(), 15);
        assert_eq!(Strategy::expand(&StrategyTag::ALL, &[Method::Emos, Method::EmosHourly]).len(), 7);
    }

    #[test]
    fn labels_round_trip() {
        for m in [Method::None, Method::Emos, Method::EmosHourly, Method::Nn, Method::NnHourly] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        for t in StrategyTag::ALL {
            assert_eq!(t.as_str().parse::<StrategyTag>().unwrap(), t);
        }
    }

    #[test]
    fn quantile_members_of_point_mass_are_zero() {
        let d = CensoredNormal::new(-1e4, 1.0, crate::Bounds::nonnegative());
        assert!(quantile_members(&d, 50).unwrap().iter().all(|&v| v == 0.0));
    }
}
