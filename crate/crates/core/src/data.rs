//! Loading, validating, time-aligning and splitting forecast and observation series.
//!
//! Every series handed to the rest of the crate is stamped at the END of its
//! hourly averaging window. Sources using other conventions are moved with
//! [`shift_stamp_to_hour_end`] exactly once after loading.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A UTC instant on the hourly grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeStamp(NaiveDateTime);

impl TimeStamp {
    pub fn new(instant: NaiveDateTime) -> Self {
        TimeStamp(instant)
    }

    pub fn from_ymd_h(year: i32, month: u32, day: u32, hour: u32) -> Self {
        let t = NaiveDate::from_ymd_opt(year, month, day)
            .and_then(|d| d.and_hms_opt(hour, 0, 0))
            .expect("valid calendar time");
        TimeStamp(t)
    }

    pub fn instant(&self) -> NaiveDateTime {
        self.0
    }

    pub fn date(&self) -> NaiveDate {
        self.0.date()
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn is_on_hour(&self) -> bool {
        self.0.minute() == 0 && self.0.second() == 0 && self.0.nanosecond() == 0
    }

    /// Local clock hour for a fixed offset from UTC (no daylight saving).
    pub fn local_hour(&self, utc_offset_hours: i32) -> u8 {
        (self.0.hour() as i32 + utc_offset_hours).rem_euclid(24) as u8
    }

    pub fn shifted_minutes(&self, minutes: i64) -> Self {
        TimeStamp(self.0 + Duration::minutes(minutes))
    }
}

impl fmt::Display for TimeStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%dT%H:%M:%SZ"))
    }
}

impl FromStr for TimeStamp {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        let s = s.trim();
        let s = s
            .strip_suffix('Z')
            .or_else(|| s.strip_suffix("+00:00"))
            .unwrap_or(s);
        const FORMATS: [&str; 4] = [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M",
        ];
        FORMATS
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
            .map(TimeStamp)
            .ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    /// Global horizontal irradiance, W m-2.
    Ghi,
    /// PV power, MW.
    Pv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    pub values: Vec<f64>,
}

/// Hourly `m`-member forecasts of one variable plus deterministic covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries {
    pub variable: Variable,
    pub times: Vec<TimeStamp>,
    pub members: Vec<Vec<f64>>,
    pub covariates: Vec<Covariate>,
}

impl EnsembleSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn member_count(&self) -> usize {
        self.members.first().map_or(0, Vec::len)
    }

    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        self.covariates
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    fn take_rows(&self, idx: &[usize]) -> Self {
        EnsembleSeries {
            variable: self.variable,
            times: idx.iter().map(|&i| self.times[i]).collect(),
            members: idx.iter().map(|&i| self.members[i].clone()).collect(),
            covariates: self
                .covariates
                .iter()
                .map(|c| Covariate {
                    name: c.name.clone(),
                    values: idx.iter().map(|&i| c.values[i]).collect(),
                })
                .collect(),
        }
    }

    fn row_complete(&self, i: usize) -> bool {
        self.members[i].iter().all(|v| v.is_finite())
            && self.covariates.iter().all(|c| c.values[i].is_finite())
    }

    /// Checks member count, time ordering and value ranges.
    pub fn validate(&self) -> Result<()> {
        let m = self.member_count();
        for row in &self.members {
            if row.len() != m {
                return Err(Error::MemberCount {
                    expected: m,
                    found: row.len(),
                });
            }
        }
        check_times(&self.times)?;
        if self.variable == Variable::Ghi {
            for (t, row) in self.times.iter().zip(&self.members) {
                if let Some(&v) = row.iter().find(|v| **v < 0.0) {
                    return Err(Error::NegativeGhi {
                        time: t.to_string(),
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub variable: Variable,
    pub times: Vec<TimeStamp>,
    pub values: Vec<f64>,
}

impl ObservationSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn take_rows(&self, idx: &[usize]) -> Self {
        ObservationSeries {
            variable: self.variable,
            times: idx.iter().map(|&i| self.times[i]).collect(),
            values: idx.iter().map(|&i| self.values[i]).collect(),
        }
    }

    /// `capacity` bounds PV observations from above when given.
    pub fn validate(&self, capacity: Option<f64>) -> Result<()> {
        check_times(&self.times)?;
        let upper = capacity.unwrap_or(f64::INFINITY);
        for (t, &v) in self.times.iter().zip(&self.values) {
            // missing values are tolerated here and dropped at join time
            if v.is_nan() {
                continue;
            }
            if v < 0.0 || v > upper {
                return Err(Error::InvalidObservation {
                    time: t.to_string(),
                    value: v,
                });
            }
        }
        Ok(())
    }
}

fn check_times(times: &[TimeStamp]) -> Result<()> {
    for w in times.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateTime(w[0].to_string()));
        }
        if w[0] > w[1] {
            return Err(Error::Config(format!("times not increasing at {}", w[1])));
        }
    }
    Ok(())
}

/// Column layout of an ensemble CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSchema {
    #[serde(default = "default_time_column")]
    pub time_column: String,
    #[serde(default = "default_member_prefix")]
    pub member_prefix: String,
    #[serde(default = "default_members")]
    pub members: usize,
    #[serde(default = "default_covariates")]
    pub covariates: Vec<String>,
}

fn default_time_column() -> String {
    "time".into()
}
fn default_member_prefix() -> String {
    "member_".into()
}
fn default_members() -> usize {
    50
}
fn default_covariates() -> Vec<String> {
    vec!["t2m".into(), "wind10m".into()]
}

impl Default for EnsembleSchema {
    fn default() -> Self {
        EnsembleSchema {
            time_column: default_time_column(),
            member_prefix: default_member_prefix(),
            members: default_members(),
            covariates: default_covariates(),
        }
    }
}

impl EnsembleSchema {
    pub fn member_column(&self, i: usize) -> String {
        let width = self.members.to_string().len().max(2);
        format!("{}{:0width$}", self.member_prefix, i + 1, width = width)
    }
}

fn parse_cell(raw: &str, row: usize, col: &str) -> Result<f64> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    s.parse::<f64>().map_err(|_| Error::NonNumericCell {
        row,
        col: col.to_string(),
    })
}

fn parse_time(raw: &str, row: usize) -> Result<TimeStamp> {
    raw.parse().map_err(|_| Error::InvalidTime {
        row,
        value: raw.to_string(),
    })
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

pub fn load_ensemble_csv(path: &Path, schema: &EnsembleSchema, variable: Variable) -> Result<EnsembleSeries> {
    read_ensemble_csv(open(path)?, schema, variable)
}

pub fn read_ensemble_csv<R: Read>(reader: R, schema: &EnsembleSchema, variable: Variable) -> Result<EnsembleSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let time_idx = column_index(&headers, &schema.time_column)?;
    let member_cols: Vec<(String, usize)> = (0..schema.members)
        .map(|i| {
            let name = schema.member_column(i);
            column_index(&headers, &name).map(|j| (name, j))
        })
        .collect::<Result<_>>()?;
    let cov_cols: Vec<(String, usize)> = schema
        .covariates
        .iter()
        .map(|name| column_index(&headers, name).map(|j| (name.clone(), j)))
        .collect::<Result<_>>()?;

    let mut rows: Vec<(TimeStamp, Vec<f64>, Vec<f64>)> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let t = parse_time(&record[time_idx], row)?;
        let members = member_cols
            .iter()
            .map(|(name, j)| parse_cell(&record[*j], row, name))
            .collect::<Result<Vec<_>>>()?;
        let covs = cov_cols
            .iter()
            .map(|(name, j)| parse_cell(&record[*j], row, name))
            .collect::<Result<Vec<_>>>()?;
        rows.push((t, members, covs));
    }
    rows.sort_by_key(|r| r.0);

    let mut covariates: Vec<Covariate> = cov_cols
        .iter()
        .map(|(name, _)| Covariate {
            name: name.clone(),
            values: Vec::with_capacity(rows.len()),
        })
        .collect();
    let mut times = Vec::with_capacity(rows.len());
    let mut members = Vec::with_capacity(rows.len());
    for (t, m, c) in rows {
        times.push(t);
        members.push(m);
        for (col, v) in covariates.iter_mut().zip(c) {
            col.values.push(v);
        }
    }
    let series = EnsembleSeries {
        variable,
        times,
        members,
        covariates,
    };
    series.validate()?;
    Ok(series)
}

pub fn write_ensemble_csv<W: Write>(writer: W, series: &EnsembleSeries, schema: &EnsembleSchema) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![schema.time_column.clone()];
    header.extend((0..series.member_count()).map(|i| schema.member_column(i)));
    header.extend(series.covariates.iter().map(|c| c.name.clone()));
    wtr.write_record(&header)?;
    for (i, t) in series.times.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(series.members[i].iter().map(|v| format_value(*v)));
        rec.extend(series.covariates.iter().map(|c| format_value(c.values[i])));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub(crate) fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Loads a `time,value` file. PV files are range-checked against `capacity`.
pub fn load_observation_csv(path: &Path, variable: Variable, capacity: Option<f64>) -> Result<ObservationSeries> {
    read_observation_csv(open(path)?, variable, capacity)
}

pub fn read_observation_csv<R: Read>(reader: R, variable: Variable, capacity: Option<f64>) -> Result<ObservationSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let time_idx = column_index(&headers, "time")?;
    let value_idx = column_index(&headers, "value")?;
    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let t = parse_time(&record[time_idx], r + 1)?;
        let v = parse_cell(&record[value_idx], r + 1, "value")?;
        rows.push((t, v));
    }
    rows.sort_by_key(|r| r.0);
    let (times, values) = rows.into_iter().unzip();
    let series = ObservationSeries {
        variable,
        times,
        values,
    };
    series.validate(capacity)?;
    Ok(series)
}

pub fn write_observation_csv<W: Write>(writer: W, series: &ObservationSeries) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["time", "value"])?;
    for (t, v) in series.times.iter().zip(&series.values) {
        wtr.write_record([t.to_string(), format_value(*v)])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Where within its averaging window a source places the time stamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StampConvention {
    MidHour,
    HourStart,
    HourEnd,
}

impl StampConvention {
    /// Minutes to add to reach the end of the averaging window.
    pub fn shift_minutes(self) -> i64 {
        match self {
            StampConvention::MidHour => 30,
            StampConvention::HourStart => 60,
            StampConvention::HourEnd => 0,
        }
    }
}

impl FromStr for StampConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "mid-hour" | "middle" => Ok(StampConvention::MidHour),
            "hour-start" | "start" => Ok(StampConvention::HourStart),
            "hour-end" | "end" => Ok(StampConvention::HourEnd),
            _ => Err(Error::UnknownConvention(s.to_string())),
        }
    }
}

/// Moves every stamp to the end of its averaging window. Values are untouched.
///
/// This is a pure shift: a series that is already hour-end stamped is moved
/// again if passed with a non-zero convention.
pub fn shift_stamp_to_hour_end(series: ObservationSeries, original: StampConvention) -> ObservationSeries {
    let shift = original.shift_minutes();
    ObservationSeries {
        times: series.times.iter().map(|t| t.shifted_minutes(shift)).collect(),
        ..series
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub latitude: f64,
    pub longitude: f64,
    pub utc_offset: i32,
    pub capacity_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ghi_forecast: EnsembleSeries,
    pub ghi_obs: ObservationSeries,
    pub pv_obs: ObservationSeries,
    pub site: Site,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.ghi_forecast.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ghi_forecast.is_empty()
    }

    pub fn times(&self) -> &[TimeStamp] {
        &self.ghi_forecast.times
    }

    pub fn local_hours(&self) -> Vec<u8> {
        self.times()
            .iter()
            .map(|t| t.local_hour(self.site.utc_offset))
            .collect()
    }
}

/// Calendar ranges of the training and test periods (inclusive, by UTC date of the stamp).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_year: i32,
}

impl SplitSpec {
    fn in_train(&self, t: &TimeStamp) -> bool {
        let d = t.date();
        d >= self.train_start && d <= self.train_end
    }

    fn in_test(&self, t: &TimeStamp) -> bool {
        t.year() == self.test_year
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinStats {
    pub train_rows: usize,
    pub test_rows: usize,
    /// Stamps inside either period missing from, or incomplete in, at least one series.
    pub dropped_train: usize,
    pub dropped_test: usize,
}

impl JoinStats {
    pub fn dropped(&self) -> usize {
        self.dropped_train + self.dropped_test
    }
}

/// Inner-joins the three series on time and splits into training and test periods.
pub fn join_and_split(ds: &Dataset, split: &SplitSpec) -> Result<(Dataset, Dataset, JoinStats)> {
    let test_start = NaiveDate::from_ymd_opt(split.test_year, 1, 1)
        .ok_or_else(|| Error::Config(format!("bad test year {}", split.test_year)))?;
    if split.train_end >= test_start {
        return Err(Error::Config(format!(
            "training period ends {} but test year {} starts earlier",
            split.train_end, split.test_year
        )));
    }
    if let Some(t) = ds
        .ghi_forecast
        .times
        .iter()
        .chain(&ds.ghi_obs.times)
        .chain(&ds.pv_obs.times)
        .find(|t| !t.is_on_hour())
    {
        return Err(Error::Config(format!("time stamp {t} is not on the hour")));
    }

    let index = |times: &[TimeStamp]| -> BTreeMap<TimeStamp, usize> {
        times.iter().enumerate().map(|(i, t)| (*t, i)).collect()
    };
    let fc = index(&ds.ghi_forecast.times);
    let go = index(&ds.ghi_obs.times);
    let po = index(&ds.pv_obs.times);
    let all: BTreeSet<TimeStamp> = fc.keys().chain(go.keys()).chain(po.keys()).copied().collect();

    let mut stats = JoinStats::default();
    let mut train = (Vec::new(), Vec::new(), Vec::new());
    let mut test = (Vec::new(), Vec::new(), Vec::new());
    for t in all {
        let (target, dropped) = if split.in_train(&t) {
            (&mut train, &mut stats.dropped_train)
        } else if split.in_test(&t) {
            (&mut test, &mut stats.dropped_test)
        } else {
            continue;
        };
        let row = match (fc.get(&t), go.get(&t), po.get(&t)) {
            (Some(&i), Some(&j), Some(&k))
                if ds.ghi_forecast.row_complete(i)
                    && ds.ghi_obs.values[j].is_finite()
                    && ds.pv_obs.values[k].is_finite() =>
            {
                Some((i, j, k))
            }
            _ => None,
        };
        if let Some((i, j, k)) = row {
            target.0.push(i);
            target.1.push(j);
            target.2.push(k);
        } else {
            *dropped += 1;
        }
    }
    stats.train_rows = train.0.len();
    stats.test_rows = test.0.len();
    if stats.train_rows == 0 {
        return Err(Error::EmptySplit("train"));
    }
    if stats.test_rows == 0 {
        return Err(Error::EmptySplit("test"));
    }
    let build = |(f, g, p): (Vec<usize>, Vec<usize>, Vec<usize>)| Dataset {
        ghi_forecast: ds.ghi_forecast.take_rows(&f),
        ghi_obs: ds.ghi_obs.take_rows(&g),
        pv_obs: ds.pv_obs.take_rows(&p),
        site: ds.site,
    };
    Ok((build(train), build(test), stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(m: usize) -> EnsembleSchema {
        EnsembleSchema {
            members: m,
            ..Default::default()
        }
    }

    fn ensemble_csv(times: &[&str], m: usize, skip_member: Option<usize>) -> String {
        let s = schema(m);
        let mut out = String::from("time");
        for i in 0..m {
            if Some(i) != skip_member {
                out.push(',');
                out.push_str(&s.member_column(i));
            }
        }
        out.push_str(",t2m,wind10m\n");
        for (r, t) in times.iter().enumerate() {
            out.push_str(t);
            for i in 0..m {
                if Some(i) != skip_member {
                    out.push_str(&format!(",{}", (r * 10 + i) as f64 * 0.5));
                }
            }
            out.push_str(",21.5,3.2\n");
        }
        out
    }

    #[test]
    fn member_columns_are_zero_padded() {
        let s = schema(50);
        assert_eq!(s.member_column(0), "member_01");
        assert_eq!(s.member_column(49), "member_50");
        assert_eq!(schema(120).member_column(6), "member_007");
    }

    #[test]
    fn loads_well_formed_file() {
        let csv = ensemble_csv(
            &["2020-01-01T03:00:00Z", "2020-01-01T01:00:00Z", "2020-01-01T02:00:00Z"],
            50,
            None,
        );
        let e = read_ensemble_csv(csv.as_bytes(), &schema(50), Variable::Ghi).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e.member_count(), 50);
        assert!(e.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(e.covariate("t2m").unwrap(), &[21.5, 21.5, 21.5]);
    }

    #[test]
    fn duplicate_time_is_rejected() {
        let csv = ensemble_csv(&["2020-01-01T01:00:00Z", "2020-01-01T01:00:00Z"], 50, None);
        let err = read_ensemble_csv(csv.as_bytes(), &schema(50), Variable::Ghi).unwrap_err();
        assert!(matches!(err, Error::DuplicateTime(_)));
    }

    #[test]
    fn missing_member_column_is_rejected() {
        let csv = ensemble_csv(&["2020-01-01T01:00:00Z"], 50, Some(6));
        let err = read_ensemble_csv(csv.as_bytes(), &schema(50), Variable::Ghi).unwrap_err();
        match err {
            Error::MissingColumn(c) => assert_eq!(c, "member_07"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_and_negative_cells() {
        let csv = "time,member_01,member_02,t2m,wind10m\n2020-01-01T01:00:00Z,1,abc,2,3\n";
        let err = read_ensemble_csv(csv.as_bytes(), &schema(2), Variable::Ghi).unwrap_err();
        assert!(matches!(err, Error::NonNumericCell { row: 1, ref col } if col == "member_02"));
        let csv = "time,member_01,member_02,t2m,wind10m\n2020-01-01T01:00:00Z,1,-2,2,3\n";
        let err = read_ensemble_csv(csv.as_bytes(), &schema(2), Variable::Ghi).unwrap_err();
        assert!(matches!(err, Error::NegativeGhi { .. }));
    }

    #[test]
    fn csv_round_trip() {
        let csv = ensemble_csv(&["2020-01-01T01:00:00Z", "2020-01-01T02:00:00Z"], 3, None);
        let e = read_ensemble_csv(csv.as_bytes(), &schema(3), Variable::Ghi).unwrap();
        let mut out = Vec::new();
        write_ensemble_csv(&mut out, &e, &schema(3)).unwrap();
        let back = read_ensemble_csv(out.as_slice(), &schema(3), Variable::Ghi).unwrap();
        assert_eq!(e, back);
    }

    #[test]
    fn stamp_shifts() {
        let obs = ObservationSeries {
            variable: Variable::Ghi,
            times: vec!["2017-01-01 00:30".parse().unwrap()],
            values: vec![0.0],
        };
        let s = shift_stamp_to_hour_end(obs.clone(), StampConvention::MidHour);
        assert_eq!(s.times[0], TimeStamp::from_ymd_h(2017, 1, 1, 1));
        let pv = ObservationSeries {
            times: vec![TimeStamp::from_ymd_h(2017, 7, 30, 0)],
            ..obs
        };
        let s = shift_stamp_to_hour_end(pv, StampConvention::HourStart);
        assert_eq!(s.times[0], TimeStamp::from_ymd_h(2017, 7, 30, 1));
        // a second application shifts again
        let s = shift_stamp_to_hour_end(s, StampConvention::HourStart);
        assert_eq!(s.times[0], TimeStamp::from_ymd_h(2017, 7, 30, 2));
        assert!(matches!(
            "quarter-past".parse::<StampConvention>(),
            Err(Error::UnknownConvention(_))
        ));
    }

    #[test]
    fn local_hour_uses_fixed_offset() {
        let t = TimeStamp::from_ymd_h(2020, 6, 21, 3);
        assert_eq!(t.local_hour(-8), 19);
        assert_eq!(t.local_hour(0), 3);
        assert_eq!(TimeStamp::from_ymd_h(2020, 6, 21, 23).local_hour(2), 1);
    }
}
