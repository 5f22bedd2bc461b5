mod common;

use common::{ks_uniform, max_bin_z};
use pvpp_core::data::{EnsembleSeries, ObservationSeries, TimeStamp, Variable};
use pvpp_core::dist::{Bounds, CensoredNormal};
use pvpp_core::eval::{
    nominal_level, score_distribution_forecasts, score_ensemble_forecasts, skill, Aggregate, HistogramKind, DAYTIME,
};
use pvpp_core::{seed, Error};
use rand::Rng;
use rand_distr::StandardNormal;

fn hourly_times(n: usize) -> Vec<TimeStamp> {
    let t0 = chrono::NaiveDate::from_ymd_opt(2019, 1, 1).unwrap().and_hms_opt(1, 0, 0).unwrap();
    (0..n).map(|i| TimeStamp::new(t0 + chrono::Duration::hours(i as i64))).collect()
}

fn draw<R: Rng>(d: &CensoredNormal, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    d.bounds.clamp(d.mu + d.sigma * z)
}

/// Forecasts and observations drawn from the forecasts themselves.
fn calibrated(n: usize, seed: u64) -> (Vec<TimeStamp>, Vec<CensoredNormal>, ObservationSeries) {
    calibrated_in(n, seed, -2.0..22.0)
}

fn calibrated_in(n: usize, seed: u64, mu: std::ops::Range<f64>) -> (Vec<TimeStamp>, Vec<CensoredNormal>, ObservationSeries) {
    let mut rng = seed::rng(seed);
    let times = hourly_times(n);
    let dists: Vec<CensoredNormal> = (0..n)
        .map(|_| CensoredNormal::new(rng.random_range(mu.clone()), rng.random_range(0.5..4.0), Bounds::unit_range(20.0)))
        .collect();
    let values = dists.iter().map(|d| draw(d, &mut rng)).collect();
    let obs = ObservationSeries {
        variable: Variable::Pv,
        times: times.clone(),
        values,
    };
    (times, dists, obs)
}

#[test]
fn calibrated_forecasts_cover_at_the_nominal_rate() {
    // centres far from both bounds, so censoring is negligible
    let (times, dists, obs) = calibrated_in(100_000, 1, 8.0..12.0);
    let nominal = nominal_level(50);
    let (report, rows) = score_distribution_forecasts(&times, &dists, &obs, -8, nominal, 2).unwrap();
    assert!((report.aggregate.coverage - 100.0 * nominal).abs() <= 1.0, "{}", report.aggregate.coverage);
    assert_eq!(report.histogram.kind, HistogramKind::Pit);
    assert_eq!(report.histogram.total(), 100_000);
    assert!(max_bin_z(&report.histogram.counts) <= 3.0, "{:?}", report.histogram.counts);
    let pits: Vec<f64> = rows.iter().filter_map(|r| r.pit).collect();
    assert!(ks_uniform(&pits) < 0.01);
}

/// With mass on the bounds, an observation at a bound is covered whenever the
/// interval reaches it, so coverage exceeds the nominal level by a known amount.
#[test]
fn censored_coverage_matches_its_exact_expectation() {
    let (times, dists, obs) = calibrated(100_000, 10);
    let nominal = nominal_level(50);
    let (report, _) = score_distribution_forecasts(&times, &dists, &obs, -8, nominal, 11).unwrap();
    let (lo_p, hi_p) = ((1.0 - nominal) / 2.0, (1.0 + nominal) / 2.0);
    let expected: Vec<f64> = dists
        .iter()
        .map(|d| d.cdf(d.quantile(hi_p).unwrap()) - d.cdf_left(d.quantile(lo_p).unwrap()))
        .collect();
    let n = expected.len() as f64;
    let mean = expected.iter().sum::<f64>() / n;
    let sd = (expected.iter().map(|p| p * (1.0 - p)).sum::<f64>()).sqrt() / n;
    assert!(mean > nominal + 0.005);
    assert!((report.aggregate.coverage / 100.0 - mean).abs() <= 4.0 * sd, "{} vs {mean}", report.aggregate.coverage);
    assert!(max_bin_z(&report.histogram.counts) <= 3.5, "{:?}", report.histogram.counts);
}

#[test]
fn overconfident_forecasts_undercover() {
    let (times, dists, obs) = calibrated(20_000, 3);
    let narrow: Vec<CensoredNormal> = dists
        .iter()
        .map(|d| CensoredNormal::new(d.mu, 0.5 * d.sigma, d.bounds))
        .collect();
    let nominal = nominal_level(50);
    let (report, _) = score_distribution_forecasts(&times, &narrow, &obs, -8, nominal, 4).unwrap();
    assert!(report.aggregate.coverage < 100.0 * nominal - 5.0);
    // a U-shaped histogram: outer bins overfull
    let c = &report.histogram.counts;
    assert!(c[0] > 2 * c[10] && c[19] > 2 * c[10]);
}

#[test]
fn aggregate_is_the_count_weighted_mean_of_hours() {
    let (times, dists, obs) = calibrated(5_000, 5);
    let (report, rows) = score_distribution_forecasts(&times, &dists, &obs, -8, 0.9, 6).unwrap();
    let (mut n, mut crps, mut cover) = (0usize, 0.0, 0.0);
    for a in report.per_hour.iter().flatten() {
        n += a.n;
        crps += a.crps * a.n as f64;
        cover += a.coverage * a.n as f64;
    }
    assert_eq!(n, report.aggregate.n);
    assert!((crps / n as f64 - report.aggregate.crps).abs() < 1e-12);
    assert!((cover / n as f64 - report.aggregate.coverage).abs() < 1e-9);
    let day = Aggregate::of(rows.iter().filter(|r| DAYTIME.contains(&r.hour))).unwrap();
    assert_eq!(report.daytime, Some(day));
    assert!(rows.iter().all(|r| r.hour == r.time.local_hour(-8)));
}

#[test]
fn exchangeable_ensemble_has_flat_rank_histogram() {
    let mut rng = seed::rng(7);
    let n = 100_000;
    let m = 20;
    let times = hourly_times(n);
    let mut members = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let d = CensoredNormal::new(rng.random_range(-1.0..5.0), 2.0, Bounds::nonnegative());
        members.push((0..m).map(|_| draw(&d, &mut rng)).collect::<Vec<f64>>());
        values.push(draw(&d, &mut rng));
    }
    let fc = EnsembleSeries {
        variable: Variable::Ghi,
        times: times.clone(),
        members,
        covariates: vec![],
    };
    let obs = ObservationSeries {
        variable: Variable::Ghi,
        times,
        values,
    };
    // many exact ties at zero: random tie breaking keeps the histogram flat
    let (report, _) = score_ensemble_forecasts(&fc, &obs, -8, 8).unwrap();
    assert_eq!(report.histogram.kind, HistogramKind::Rank);
    assert_eq!(report.histogram.counts.len(), m + 1);
    assert!(max_bin_z(&report.histogram.counts) <= 3.5, "{:?}", report.histogram.counts);
    assert!((report.nominal - 19.0 / 21.0).abs() < 1e-15);
}

#[test]
fn misaligned_inputs_are_rejected() {
    let (times, dists, mut obs) = calibrated(10, 9);
    obs.times.swap(2, 3);
    assert!(matches!(
        score_distribution_forecasts(&times, &dists, &obs, -8, 0.9, 1),
        Err(Error::IndexMismatch(_))
    ));
}

#[test]
fn skill_examples() {
    assert!((skill(0.8, 1.0).unwrap() - 20.0).abs() < 1e-12);
    assert!(skill(1.2, 1.0).unwrap() < 0.0);
    assert!(matches!(skill(1.0, 0.0), Err(Error::ZeroReference)));
}
