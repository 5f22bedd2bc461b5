use chrono::NaiveDate;
use pvpp_core::config::{RunConfig, SplitConfig};
use pvpp_core::data::{
    join_and_split, read_ensemble_csv, read_observation_csv, shift_stamp_to_hour_end, write_ensemble_csv,
    write_observation_csv, Dataset, EnsembleSchema, ObservationSeries, SplitSpec, StampConvention, TimeStamp,
    Variable,
};
use pvpp_core::pipeline::load_dataset;
use pvpp_core::synthetic::{generate, write_dataset, SyntheticSpec};
use pvpp_core::{Error, ErrorClass};

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn two_years() -> Dataset {
    generate(&SyntheticSpec {
        members: 5,
        ..SyntheticSpec::new(date(2018, 1, 1), 730, 3)
    })
}

fn split_2018_2019() -> SplitSpec {
    SplitSpec {
        train_start: date(2018, 1, 1),
        train_end: date(2018, 12, 31),
        test_year: 2019,
    }
}

fn remove(series: &mut ObservationSeries, t: TimeStamp) {
    let i = series.times.iter().position(|x| *x == t).unwrap();
    series.times.remove(i);
    series.values.remove(i);
}

#[test]
fn missing_pv_row_is_dropped_and_counted() {
    let mut ds = two_years();
    let (_, _, full) = join_and_split(&ds, &split_2018_2019()).unwrap();
    assert_eq!(full.dropped(), 0);
    let gone = TimeStamp::from_ymd_h(2018, 3, 5, 14);
    remove(&mut ds.pv_obs, gone);
    let (train, test, stats) = join_and_split(&ds, &split_2018_2019()).unwrap();
    assert_eq!(stats.dropped_train, 1);
    assert_eq!(stats.dropped_test, 0);
    assert_eq!(stats.train_rows, full.train_rows - 1);
    assert!(!train.times().contains(&gone));
    assert_eq!(test.len(), full.test_rows);
    // the three series stay aligned row by row
    assert_eq!(train.ghi_forecast.times, train.ghi_obs.times);
    assert_eq!(train.ghi_forecast.times, train.pv_obs.times);
}

#[test]
fn non_finite_observation_is_dropped() {
    let mut ds = two_years();
    let i = ds.ghi_obs.times.iter().position(|t| *t == TimeStamp::from_ymd_h(2019, 7, 1, 20)).unwrap();
    ds.ghi_obs.values[i] = f64::NAN;
    let (_, _, stats) = join_and_split(&ds, &split_2018_2019()).unwrap();
    assert_eq!((stats.dropped_train, stats.dropped_test), (0, 1));
}

#[test]
fn data_outside_both_periods_gives_empty_split() {
    let ds = generate(&SyntheticSpec {
        members: 5,
        ..SyntheticSpec::new(date(2020, 1, 1), 60, 4)
    });
    let err = join_and_split(&ds, &split_2018_2019()).unwrap_err();
    assert!(matches!(err, Error::EmptySplit("train")));
    assert_eq!(err.class(), ErrorClass::Data);
}

#[test]
fn stamps_shift_to_the_end_of_their_window() {
    let at = |h: u32, m: u32| TimeStamp::new(date(2018, 3, 5).and_hms_opt(h, m, 0).unwrap());
    let series = |t: TimeStamp| ObservationSeries {
        variable: Variable::Ghi,
        times: vec![t],
        values: vec![1.0],
    };
    let end = at(11, 0);
    assert_eq!(shift_stamp_to_hour_end(series(at(10, 30)), StampConvention::MidHour).times, vec![end]);
    assert_eq!(shift_stamp_to_hour_end(series(at(10, 0)), StampConvention::HourStart).times, vec![end]);
    assert_eq!(shift_stamp_to_hour_end(series(end), StampConvention::HourEnd).times, vec![end]);
    // crossing midnight
    assert_eq!(
        shift_stamp_to_hour_end(series(at(23, 30)), StampConvention::MidHour).times,
        vec![TimeStamp::new(date(2018, 3, 6).and_hms_opt(0, 0, 0).unwrap())]
    );
}

#[test]
fn unaligned_stamps_are_rejected() {
    let mut ds = two_years();
    ds.ghi_obs.times[100] = ds.ghi_obs.times[100].shifted_minutes(30);
    assert!(matches!(join_and_split(&ds, &split_2018_2019()), Err(Error::Config(_))));
}

#[test]
fn loaded_files_align_with_the_generated_truth() {
    let ds = two_years();
    let dir = tempfile::tempdir().unwrap();
    let split = SplitConfig {
        train_start: date(2018, 1, 1),
        train_end: date(2018, 12, 31),
        test_year: 2019,
    };
    let path = write_dataset(dir.path(), &ds, split, 5).unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    let loaded = load_dataset(&cfg).unwrap();
    assert_eq!(loaded.ghi_obs.times, ds.ghi_obs.times);
    assert_eq!(loaded.pv_obs.times, ds.pv_obs.times);
    assert_eq!(loaded.ghi_forecast.times, ds.ghi_forecast.times);
    for (a, b) in loaded.ghi_obs.values.iter().zip(&ds.ghi_obs.values) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
    }
    // local night (UTC-8): every aligned GHI observation is zero
    let (train, _, _) = join_and_split(&loaded, &split.into()).unwrap();
    for (h, v) in train.local_hours().iter().zip(&train.ghi_obs.values) {
        if (0..=3).contains(h) || *h >= 21 {
            assert_eq!(*v, 0.0, "local hour {h}");
        }
    }
}

#[test]
fn csv_round_trip() {
    let ds = generate(&SyntheticSpec {
        members: 7,
        ..SyntheticSpec::new(date(2018, 6, 1), 3, 6)
    });
    let schema = EnsembleSchema {
        members: 7,
        ..EnsembleSchema::default()
    };
    let mut buf = Vec::new();
    write_ensemble_csv(&mut buf, &ds.ghi_forecast, &schema).unwrap();
    let back = read_ensemble_csv(buf.as_slice(), &schema, Variable::Ghi).unwrap();
    assert_eq!(back, ds.ghi_forecast);

    let mut buf = Vec::new();
    write_observation_csv(&mut buf, &ds.pv_obs).unwrap();
    let back = read_observation_csv(buf.as_slice(), Variable::Pv, Some(20.0)).unwrap();
    assert_eq!(back, ds.pv_obs);
}

#[test]
fn config_errors_are_config_class() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, r#"{"surprise": 1}"#).unwrap();
    let err = RunConfig::load(&path).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Config);
    assert_eq!(err.class().exit_code(), 2);

    let ds = two_years();
    let split = SplitConfig {
        train_start: date(2018, 1, 1),
        train_end: date(2019, 6, 30),
        test_year: 2019,
    };
    let path = write_dataset(dir.path(), &ds, split, 5).unwrap();
    assert!(matches!(RunConfig::load(&path), Err(Error::Config(_))));
}
