//! Forecast verification: CRPS, MAE of the median, bias of the mean,
//! central prediction intervals, randomized PIT and rank histograms.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{EnsembleSeries, ObservationSeries, TimeStamp};
use crate::dist::{CensoredNormal, EmpiricalEnsemble};
use crate::error::{Error, Result};
use crate::seed;

pub const PIT_BINS: usize = 20;
/// Local hours counted as daytime (inclusive).
pub const DAYTIME: std::ops::RangeInclusive<u8> = 6..=20;

/// Nominal level of the range of an `m`-member ensemble.
pub fn nominal_level(members: usize) -> f64 {
    (members as f64 - 1.0) / (members as f64 + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub time: TimeStamp,
    pub hour: u8,
    pub obs: f64,
    pub crps: f64,
    pub abs_err_median: f64,
    /// Forecast mean minus observation.
    pub signed_err_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    pub pi_lower: f64,
    pub pi_upper: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub crps: f64,
    pub mae: f64,
    pub bias: f64,
    /// Percent of observations inside the prediction interval.
    pub coverage: f64,
    pub width: f64,
}

impl Aggregate {
    pub fn of<'a, I>(rows: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a ScoreRow>,
    {
        let mut a = Aggregate {
            n: 0,
            crps: 0.0,
            mae: 0.0,
            bias: 0.0,
            coverage: 0.0,
            width: 0.0,
        };
        for r in rows {
            a.n += 1;
            a.crps += r.crps;
            a.mae += r.abs_err_median;
            a.bias += r.signed_err_mean;
            a.coverage += if r.covered { 1.0 } else { 0.0 };
            a.width += r.pi_upper - r.pi_lower;
        }
        if a.n == 0 {
            return None;
        }
        let n = a.n as f64;
        a.crps /= n;
        a.mae /= n;
        a.bias /= n;
        a.coverage *= 100.0 / n;
        a.width /= n;
        Some(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistogramKind {
    Pit,
    Rank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub kind: HistogramKind,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn pit<I: IntoIterator<Item = f64>>(values: I, bins: usize) -> Self {
        let mut counts = vec![0; bins];
        for v in values {
            let b = ((v * bins as f64).floor() as usize).min(bins - 1);
            counts[b] += 1;
        }
        Histogram {
            kind: HistogramKind::Pit,
            counts,
        }
    }

    pub fn ranks<I: IntoIterator<Item = usize>>(ranks: I, members: usize) -> Self {
        let mut counts = vec![0; members + 1];
        for r in ranks {
            counts[r - 1] += 1;
        }
        Histogram {
            kind: HistogramKind::Rank,
            counts,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub seed: u64,
    pub nominal: f64,
    pub aggregate: Aggregate,
    pub daytime: Option<Aggregate>,
    pub per_hour: Vec<Option<Aggregate>>,
    pub histogram: Histogram,
    /// Histograms restricted to single local hours.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hourly_histograms: Vec<Histogram>,
}

impl EvaluationReport {
    pub fn mean_crps(&self) -> f64 {
        self.aggregate.crps
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_per_hour_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["hour", "n", "crps", "mae", "bias", "coverage", "width"])?;
        for (h, a) in self.per_hour.iter().enumerate() {
            if let Some(a) = a {
                wtr.write_record([
                    h.to_string(),
                    a.n.to_string(),
                    a.crps.to_string(),
                    a.mae.to_string(),
                    a.bias.to_string(),
                    a.coverage.to_string(),
                    a.width.to_string(),
                ])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let bins = self.histogram.counts.len();
        match self.histogram.kind {
            HistogramKind::Pit => {
                wtr.write_record(["bin", "lower", "upper", "count"])?;
                for (i, c) in self.histogram.counts.iter().enumerate() {
                    wtr.write_record([
                        i.to_string(),
                        (i as f64 / bins as f64).to_string(),
                        ((i + 1) as f64 / bins as f64).to_string(),
                        c.to_string(),
                    ])?;
                }
            }
            HistogramKind::Rank => {
                wtr.write_record(["rank", "count"])?;
                for (i, c) in self.histogram.counts.iter().enumerate() {
                    wtr.write_record([(i + 1).to_string(), c.to_string()])?;
                }
            }
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Per-hour means; hours without rows are `None`.
pub fn hourly_breakdown(rows: &[ScoreRow]) -> Vec<Option<Aggregate>> {
    (0..24u8)
        .map(|h| Aggregate::of(rows.iter().filter(|r| r.hour == h)))
        .collect()
}

fn assemble(rows: &[ScoreRow], histogram: Histogram, hourly_histograms: Vec<Histogram>, nominal: f64, seed: u64) -> Result<EvaluationReport> {
    let aggregate = Aggregate::of(rows).ok_or_else(|| Error::IndexMismatch("no rows to score".into()))?;
    Ok(EvaluationReport {
        seed,
        nominal,
        aggregate,
        daytime: Aggregate::of(rows.iter().filter(|r| DAYTIME.contains(&r.hour))),
        per_hour: hourly_breakdown(rows),
        histogram,
        hourly_histograms,
    })
}

fn check_index(forecast: &[TimeStamp], obs: &ObservationSeries) -> Result<()> {
    if forecast.len() != obs.times.len() {
        return Err(Error::IndexMismatch(format!(
            "{} forecasts vs {} observations",
            forecast.len(),
            obs.times.len()
        )));
    }
    if let Some((a, b)) = forecast.iter().zip(&obs.times).find(|(a, b)| a != b) {
        return Err(Error::IndexMismatch(format!("forecast {a} vs observation {b}")));
    }
    Ok(())
}

/// Scores parametric forecasts; also returns the per-row scores.
pub fn score_distribution_forecasts(
    times: &[TimeStamp],
    forecasts: &[CensoredNormal],
    obs: &ObservationSeries,
    utc_offset: i32,
    nominal: f64,
    seed: u64,
) -> Result<(EvaluationReport, Vec<ScoreRow>)> {
    check_index(times, obs)?;
    if forecasts.len() != times.len() {
        return Err(Error::IndexMismatch("forecast count differs from time index".into()));
    }
    let (lo_p, hi_p) = ((1.0 - nominal) / 2.0, (1.0 + nominal) / 2.0);
    let mut rng = seed::rng(seed);
    let rows: Vec<ScoreRow> = times
        .iter()
        .zip(forecasts)
        .zip(&obs.values)
        .map(|((t, d), &y)| {
            let pi_lower = d.quantile(lo_p)?;
            let pi_upper = d.quantile(hi_p)?;
            let u: f64 = rng.random();
            Ok(ScoreRow {
                time: *t,
                hour: t.local_hour(utc_offset),
                obs: y,
                crps: d.crps(y),
                abs_err_median: (d.median() - y).abs(),
                signed_err_mean: d.mean() - y,
                pit: Some(d.randomized_pit(y, u)),
                rank: None,
                pi_lower,
                pi_upper,
                covered: pi_lower <= y && y <= pi_upper,
            })
        })
        .collect::<Result<_>>()?;
    let hist = Histogram::pit(rows.iter().filter_map(|r| r.pit), PIT_BINS);
    let hourly = (0..24u8)
        .map(|h| Histogram::pit(rows.iter().filter(|r| r.hour == h).filter_map(|r| r.pit), PIT_BINS))
        .collect();
    let report = assemble(&rows, hist, hourly, nominal, seed)?;
    Ok((report, rows))
}

/// Rank of `y` among `members` (1-based), ties broken uniformly at random.
pub fn ensemble_rank<R: Rng>(e: &EmpiricalEnsemble, y: f64, rng: &mut R) -> usize {
    let below = e.members().iter().filter(|&&x| x < y).count();
    let ties = e.members().iter().filter(|&&x| x == y).count();
    1 + below + rng.random_range(0..=ties)
}

/// Scores raw ensembles; the prediction interval is the ensemble range.
pub fn score_ensemble_forecasts(
    forecast: &EnsembleSeries,
    obs: &ObservationSeries,
    utc_offset: i32,
    seed: u64,
) -> Result<(EvaluationReport, Vec<ScoreRow>)> {
    check_index(&forecast.times, obs)?;
    let m = forecast.member_count();
    let mut rng = seed::rng(seed);
    let rows: Vec<ScoreRow> = forecast
        .times
        .iter()
        .zip(&forecast.members)
        .zip(&obs.values)
        .map(|((t, members), &y)| {
            let e = EmpiricalEnsemble::new(members.clone())?;
            let (lo, hi) = (e.min(), e.max());
            Ok(ScoreRow {
                time: *t,
                hour: t.local_hour(utc_offset),
                obs: y,
                crps: e.crps(y),
                abs_err_median: (e.median() - y).abs(),
                signed_err_mean: e.mean() - y,
                pit: None,
                rank: Some(ensemble_rank(&e, y, &mut rng)),
                pi_lower: lo,
                pi_upper: hi,
                covered: lo <= y && y <= hi,
            })
        })
        .collect::<Result<_>>()?;
    let hist = Histogram::ranks(rows.iter().filter_map(|r| r.rank), m);
    let hourly = (0..24u8)
        .map(|h| Histogram::ranks(rows.iter().filter(|r| r.hour == h).filter_map(|r| r.rank), m))
        .collect();
    let report = assemble(&rows, hist, hourly, nominal_level(m), seed)?;
    Ok((report, rows))
}

/// Relative mean-CRPS improvement of `candidate` over `reference`, in percent.
pub fn skill_summary(candidate: &EvaluationReport, reference: &EvaluationReport) -> Result<f64> {
    skill(candidate.mean_crps(), reference.mean_crps())
}

pub fn skill(candidate_crps: f64, reference_crps: f64) -> Result<f64> {
    if reference_crps == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * (1.0 - candidate_crps / reference_crps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Variable;
    use crate::dist::Bounds;

    fn obs(times: &[TimeStamp], values: Vec<f64>) -> ObservationSeries {
        ObservationSeries {
            variable: Variable::Ghi,
            times: times.to_vec(),
            values,
        }
    }

    fn hours(n: usize) -> Vec<TimeStamp> {
        (0..n)
            .map(|i| TimeStamp::from_ymd_h(2020, 1, 1 + (i / 24) as u32, (i % 24) as u32))
            .collect()
    }

    #[test]
    fn nominal_for_fifty_members() {
        assert!((nominal_level(50) - 0.960_784_313_725_490_2).abs() < 1e-15);
        assert!((100.0 * nominal_level(50) - 96.1).abs() < 0.05);
    }

    #[test]
    fn perfect_point_forecasts() {
        let t = hours(48);
        let y: Vec<f64> = (0..48).map(|i| (i % 24) as f64 * 10.0 + 5.0).collect();
        let f: Vec<CensoredNormal> = y.iter().map(|&v| CensoredNormal::new(v, 0.0, Bounds::nonnegative())).collect();
        let (r, _) = score_distribution_forecasts(&t, &f, &obs(&t, y), 0, nominal_level(50), 1).unwrap();
        assert!(r.aggregate.crps < 1e-3);
        assert!(r.aggregate.mae < 1e-12);
        assert!(r.aggregate.bias.abs() < 1e-12);
        assert!(r.aggregate.width < 0.01);
        assert_eq!(r.aggregate.coverage, 100.0);
    }

    #[test]
    fn index_mismatch() {
        let t = hours(3);
        let f = vec![CensoredNormal::new(1.0, 1.0, Bounds::nonnegative()); 3];
        let o = obs(&hours(4)[1..], vec![0.0; 3]);
        assert!(matches!(
            score_distribution_forecasts(&t, &f, &o, 0, 0.9, 0),
            Err(Error::IndexMismatch(_))
        ));
    }

    #[test]
    fn observation_below_all_members_has_rank_one() {
        let e = EmpiricalEnsemble::new(vec![2.0, 3.0, 4.0]).unwrap();
        let mut rng = seed::rng(0);
        assert_eq!(ensemble_rank(&e, 1.0, &mut rng), 1);
        assert_eq!(ensemble_rank(&e, 5.0, &mut rng), 4);
    }

    #[test]
    fn night_ties_spread_over_all_ranks() {
        let e = EmpiricalEnsemble::new(vec![0.0; 50]).unwrap();
        let mut rng = seed::rng(3);
        let ranks: Vec<usize> = (0..51_000).map(|_| ensemble_rank(&e, 0.0, &mut rng)).collect();
        let h = Histogram::ranks(ranks, 50);
        assert_eq!(h.counts.len(), 51);
        // each bin expects 1000; 5 sigma band
        assert!(h.counts.iter().all(|&c| (c as f64 - 1000.0).abs() < 5.0 * 31.4), "{:?}", h.counts);
    }

    #[test]
    fn hourly_breakdown_of_single_hour() {
        let t: Vec<TimeStamp> = (0..5).map(|d| TimeStamp::from_ymd_h(2020, 1, 1 + d, 12)).collect();
        let f = vec![CensoredNormal::new(3.0, 1.0, Bounds::nonnegative()); 5];
        let (r, rows) = score_distribution_forecasts(&t, &f, &obs(&t, vec![2.0; 5]), 0, 0.9, 0).unwrap();
        assert_eq!(r.per_hour.iter().filter(|a| a.is_none()).count(), 23);
        assert_eq!(hourly_breakdown(&rows)[12].unwrap().n, 5);
    }

    #[test]
    fn skill_examples() {
        assert!((skill(11.046, 14.676).unwrap() - 24.734).abs() < 1e-3);
        assert!((skill(0.294, 0.689).unwrap() - 57.33).abs() < 1e-2);
        assert_eq!(skill(1.0, 1.0).unwrap(), 0.0);
        assert!(matches!(skill(1.0, 0.0), Err(Error::ZeroReference)));
    }

    #[test]
    fn median_and_mean_are_not_interchangeable() {
        // heavy mass at zero: median 0, mean well above it
        let t = hours(1);
        let f = vec![CensoredNormal::new(-0.5, 2.0, Bounds::nonnegative())];
        let (r, _) = score_distribution_forecasts(&t, &f, &obs(&t, vec![0.0]), 0, 0.9, 0).unwrap();
        assert_eq!(r.aggregate.mae, 0.0);
        assert!(r.aggregate.bias > 0.5);
    }
}
