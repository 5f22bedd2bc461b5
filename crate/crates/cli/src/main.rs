//! `pvpp`: command-line runner for the PV forecasting experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use chrono::{Datelike, NaiveDate};
use clap::{Parser, Subcommand, ValueEnum};

use pvpp_core::config::{RunConfig, SplitConfig};
use pvpp_core::data::{
    load_ensemble_csv, load_observation_csv, shift_stamp_to_hour_end, write_ensemble_csv, write_observation_csv,
    Dataset, StampConvention, Variable,
};
use pvpp_core::eval::score_ensemble_forecasts;
use pvpp_core::pipeline::{fingerprint, run_jobs, Comparison, Experiment, Fingerprint, Job, Method, StrategyTag};
use pvpp_core::synthetic::{generate, write_dataset, SyntheticSpec};
use pvpp_core::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "pvpp", version, about = "Probabilistic PV power forecasts from ensemble GHI forecasts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Run directory; defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariableArg {
    Ghi,
    Pv,
}

#[derive(Subcommand)]
enum Command {
    /// Load, align and split the inputs; write the joined tables.
    Ingest(Common),
    /// Convert the raw GHI ensemble to PV power with the model chain.
    Chain(Common),
    /// Fit and score every configured GHI post-processing method.
    FitGhi(Common),
    /// Fit and score PV post-processing on raw chain output.
    FitPv(Common),
    /// Fit and score the direct GHI-to-PV networks.
    FitDirect(Common),
    /// Score an ensemble forecast file against observations on the test period.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Ensemble CSV in the configured schema, hour-end stamps.
        #[arg(long)]
        forecast: PathBuf,
        /// Observation CSV (`time,value`).
        #[arg(long)]
        observations: PathBuf,
        #[arg(long, value_enum, default_value = "pv")]
        variable: VariableArg,
        /// Stamp convention of the observation file.
        #[arg(long, default_value = "hour-end")]
        obs_convention: String,
    },
    /// Run every configured strategy and method and write the comparison.
    RunAll(Common),
    /// Write a synthetic dataset and matching config for trying the tools.
    Synth {
        /// Output directory for the CSV files and config.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// First day of the training period.
        #[arg(long, default_value = "2019-01-01")]
        start: NaiveDate,
        /// Days of data; the test year is the one after `start`.
        #[arg(long, default_value_t = 425)]
        days: i64,
    },
}

fn out_dir(cfg: &RunConfig, common: &Common) -> Result<PathBuf, Error> {
    common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))
}

fn load(common: &Common) -> anyhow::Result<(RunConfig, PathBuf)> {
    let cfg = RunConfig::load(&common.config)?;
    let out = out_dir(&cfg, common)?;
    Ok((cfg, out))
}

fn inputs(cfg: &RunConfig) -> Result<Vec<Fingerprint>, Error> {
    [&cfg.data.ghi_forecast, &cfg.data.ghi_obs, &cfg.data.pv_obs]
        .into_iter()
        .map(|p| fingerprint(p))
        .collect()
}

fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<(), Error>) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn print_table(c: &Comparison) {
    println!("{:<5} {:>4}  {:<8} {:<12} {:>12} {:>9} {:>9}", "level", "rank", "strategy", "method", "crps", "cover%", "skill%");
    for r in &c.rows {
        let level = format!("{:?}", r.level).to_lowercase();
        let skill = r.skill.map(|s| format!("{s:.1}")).unwrap_or_default();
        println!(
            "{:<5} {:>4}  {:<8} {:<12} {:>12.4} {:>9.1} {:>9}",
            level,
            r.rank,
            r.strategy,
            r.method.to_string(),
            r.crps,
            r.coverage,
            skill
        );
    }
}

fn run_selected(common: &Common, select: impl Fn(&Job) -> bool) -> anyhow::Result<()> {
    let (cfg, out) = load(common)?;
    let inputs = inputs(&cfg)?;
    let mut exp = Experiment::prepare(cfg)?;
    let jobs: Vec<Job> = exp.jobs().into_iter().filter(|j| select(j)).collect();
    if jobs.is_empty() {
        return Err(Error::Config("no jobs selected by this configuration".into()).into());
    }
    let summary = run_jobs(&mut exp, &jobs, &out, inputs)?;
    print_table(&summary.comparison);
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn write_split(dir: &Path, name: &str, ds: &Dataset, cfg: &RunConfig) -> anyhow::Result<()> {
    write_with(&dir.join(format!("{name}_ghi_forecast.csv")), |b| {
        write_ensemble_csv(b, &ds.ghi_forecast, &cfg.data.schema)
    })?;
    write_with(&dir.join(format!("{name}_ghi_obs.csv")), |b| write_observation_csv(b, &ds.ghi_obs))?;
    write_with(&dir.join(format!("{name}_pv_obs.csv")), |b| write_observation_csv(b, &ds.pv_obs))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest(common) => {
            let (cfg, out) = load(&common)?;
            let dir = out.join("ingest");
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let fps = inputs(&cfg)?;
            let exp = Experiment::prepare(cfg)?;
            write_split(&dir, "train", &exp.train, &exp.cfg)?;
            write_split(&dir, "test", &exp.test, &exp.cfg)?;
            let summary = serde_json::json!({ "join": exp.stats, "inputs": fps });
            std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            println!(
                "train rows {} (dropped {}), test rows {} (dropped {})",
                exp.stats.train_rows, exp.stats.dropped_train, exp.stats.test_rows, exp.stats.dropped_test
            );
        }
        Command::Chain(common) => {
            let (cfg, out) = load(&common)?;
            let dir = out.join("chain");
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut exp = Experiment::prepare(cfg)?;
            let schema = exp.cfg.data.schema.clone();
            let (train, test) = exp.raw_chain()?.clone();
            write_with(&dir.join("train_pv_ensemble.csv"), |b| write_ensemble_csv(b, &train, &schema))?;
            write_with(&dir.join("test_pv_ensemble.csv"), |b| write_ensemble_csv(b, &test, &schema))?;
            println!("wrote {} and {} chain rows to {}", train.len(), test.len(), dir.display());
        }
        Command::FitGhi(common) => run_selected(&common, |j| matches!(j, Job::Ghi { .. }))?,
        Command::FitPv(common) => run_selected(&common, |j| {
            matches!(j, Job::Pv { strategy } if strategy.tag == StrategyTag::RawPp || strategy.tag == StrategyTag::RawRaw)
        })?,
        Command::FitDirect(common) => {
            let (cfg, _) = load(&common)?;
            if !cfg.methods.iter().any(|m| m.is_nn()) {
                return Err(Error::Config("direct models need nn or nn_hourly in `methods`".into()).into());
            }
            run_selected(&common, |j| match j {
                Job::Pv { strategy } => strategy.tag == StrategyTag::Direct || strategy.tag == StrategyTag::RawRaw,
                Job::Ghi { .. } => false,
            })?
        }
        Command::Evaluate {
            common,
            forecast,
            observations,
            variable,
            obs_convention,
        } => {
            let (cfg, out) = load(&common)?;
            let conv: StampConvention = obs_convention.parse()?;
            let (var, cap) = match variable {
                VariableArg::Ghi => (Variable::Ghi, None),
                VariableArg::Pv => (Variable::Pv, Some(cfg.site.capacity_mw)),
            };
            let fc = load_ensemble_csv(&forecast, &cfg.data.schema, var)?;
            let obs = shift_stamp_to_hour_end(load_observation_csv(&observations, var, cap)?, conv);
            // score the stamps present in both files
            let keep: Vec<usize> = (0..fc.len())
                .filter(|&i| {
                    obs.times
                        .binary_search(&fc.times[i])
                        .is_ok_and(|j| obs.values[j].is_finite())
                })
                .collect();
            let mut fc_sub = fc.clone();
            fc_sub.times = keep.iter().map(|&i| fc.times[i]).collect();
            fc_sub.members = keep.iter().map(|&i| fc.members[i].clone()).collect();
            fc_sub.covariates.clear();
            let mut obs_sub = obs.clone();
            obs_sub.times = fc_sub.times.clone();
            obs_sub.values = fc_sub
                .times
                .iter()
                .map(|t| obs.values[obs.times.binary_search(t).expect("kept")])
                .collect();
            if fc_sub.is_empty() {
                return Err(Error::EmptySplit("evaluation").into());
            }
            let seed = pvpp_core::pipeline::job_seed(cfg.seed, "evaluate", Method::None, "ties");
            let (report, _) = score_ensemble_forecasts(&fc_sub, &obs_sub, cfg.site.utc_offset, seed)?;
            let dir = out.join("evaluate");
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            std::fs::write(dir.join("report.json"), report.to_json()?)?;
            write_with(&dir.join("per_hour.csv"), |b| report.write_per_hour_csv(b))?;
            write_with(&dir.join("histogram.csv"), |b| report.write_histogram_csv(b))?;
            println!(
                "n {}  crps {:.4}  mae {:.4}  bias {:.4}  coverage {:.1}%",
                report.aggregate.n, report.aggregate.crps, report.aggregate.mae, report.aggregate.bias, report.aggregate.coverage
            );
        }
        Command::RunAll(common) => {
            let (cfg, out) = load(&common)?;
            let summary = pvpp_core::pipeline::run_all(cfg, &out)?;
            print_table(&summary.comparison);
            eprintln!("wrote {}", out.display());
        }
        Command::Synth { out, seed, start, days } => {
            let ds = generate(&SyntheticSpec::new(start, days, seed));
            let year = start.year();
            let split = SplitConfig {
                train_start: start,
                train_end: NaiveDate::from_ymd_opt(year, 12, 31).expect("valid date"),
                test_year: year + 1,
            };
            let path = write_dataset(&out, &ds, split, seed)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let class = err
        .chain()
        .find_map(|e| e.downcast_ref::<Error>())
        .map(Error::class)
        .unwrap_or(ErrorClass::Data);
    class.exit_code() as u8
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already include their cause in the message
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
