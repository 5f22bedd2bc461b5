//! Ensemble model output statistics with censored normal predictive distributions.
//!
//! Location is affine in the ensemble mean and the variance is affine in the
//! ensemble variance. The four coefficients are estimated by minimizing the
//! mean CRPS, either pooled over all hours or separately per local hour.


use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dist::{Bounds, CensoredNormal, EmpiricalEnsemble, SCALE_FLOOR};
use crate::error::{Error, Result};
use crate::optim::{self, OptimOptions};
use crate::seed;

/// Floor applied to the ensemble variance before it enters the scale link.
pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const MIN_GLOBAL_ROWS: usize = 100;
pub const MIN_HOURLY_ROWS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: f64,
    pub variance: f64,
}

pub fn ensemble_stats(e: &EmpiricalEnsemble) -> EnsembleStats {
    EnsembleStats {
        mean: e.mean(),
        variance: e.variance(),
    }
}

/// Summary statistics of a raw member slice.
pub fn stats_of(members: &[f64]) -> Result<EnsembleStats> {
    Ok(ensemble_stats(&EmpiricalEnsemble::new(members.to_vec())?))
}

/// One training case: ensemble summary and verifying observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmosRow {
    pub stats: EnsembleStats,
    pub obs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmosCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl EmosCoefficients {
    pub const INITIAL: EmosCoefficients = EmosCoefficients {
        a: 0.0,
        b: 1.0,
        c: 1.0,
        d: 1.0,
    };

    /// Trusts the raw ensemble: no bias correction and no added spread.
    pub const IDENTITY: EmosCoefficients = EmosCoefficients {
        a: 0.0,
        b: 1.0,
        c: 1e-12,
        d: 1.0,
    };

    pub fn predict(&self, stats: &EnsembleStats, bounds: Bounds) -> CensoredNormal {
        let var = self.c + self.d * stats.variance.max(VARIANCE_FLOOR);
        CensoredNormal::new(self.a + self.b * stats.mean, var.max(0.0).sqrt(), bounds)
    }

    fn to_params(self) -> [f64; 4] {
        [self.a, self.b, self.c.max(0.0).sqrt(), self.d.max(0.0).sqrt()]
    }

    fn from_params(p: &[f64]) -> Self {
        EmosCoefficients {
            a: p[0],
            b: p[1],
            c: p[2] * p[2],
            d: p[3] * p[3],
        }
    }
}

pub fn mean_crps(coef: &EmosCoefficients, rows: &[EmosRow], bounds: Bounds) -> f64 {
    rows.iter()
        .map(|r| coef.predict(&r.stats, bounds).crps(r.obs))
        .sum::<f64>()
        / rows.len() as f64
}

// Mean CRPS and its gradient in the (a, b, sqrt c, sqrt d) parameterization.
fn objective(p: &[f64], rows: &[EmosRow], bounds: Bounds) -> (f64, Vec<f64>) {
    let (a, b, sc, sd) = (p[0], p[1], p[2], p[3]);
    let mut total = 0.0;
    let mut g = vec![0.0; 4];
    for r in rows {
        let v = r.stats.variance.max(VARIANCE_FLOOR);
        let sigma = (sc * sc + sd * sd * v).sqrt();
        let d = CensoredNormal::new(a + b * r.stats.mean, sigma, bounds);
        let (crps, d_mu, d_sigma) = d.crps_with_gradient(r.obs);
        total += crps;
        g[0] += d_mu;
        g[1] += d_mu * r.stats.mean;
        if sigma > SCALE_FLOOR {
            g[2] += d_sigma * sc / sigma;
            g[3] += d_sigma * sd * v / sigma;
        }
    }
    let n = rows.len() as f64;
    g.iter_mut().for_each(|x| *x /= n);
    (total / n, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmosFit {
    pub coefficients: EmosCoefficients,
    pub mean_crps: f64,
    /// Every observation and every ensemble summary identical; the fit tends to a point mass.
    pub degenerate: bool,
    pub converged: bool,
    pub iterations: usize,
    /// Mean train CRPS at each accepted iterate of the winning start.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Minimum-CRPS fit. Requires at least [`MIN_GLOBAL_ROWS`] rows.
pub fn fit_emos(rows: &[EmosRow], bounds: Bounds, init: EmosCoefficients, seed: u64) -> Result<EmosFit> {
    if rows.len() < MIN_GLOBAL_ROWS {
        return Err(Error::TooFewRows {
            needed: MIN_GLOBAL_ROWS,
            found: rows.len(),
        });
    }
    fit_rows(rows, bounds, init, seed)
}

fn fit_rows(rows: &[EmosRow], bounds: Bounds, init: EmosCoefficients, seed: u64) -> Result<EmosFit> {
    if rows.is_empty() {
        return Err(Error::TooFewRows { needed: 1, found: 0 });
    }
    if let Some(r) = rows.iter().find(|r| !bounds.contains(r.obs)) {
        return Err(Error::ObservationOutOfBounds {
            value: r.obs,
            lower: bounds.lower,
            upper: bounds.upper_or_inf(),
        });
    }
    let degenerate = {
        let first = rows[0];
        rows.iter().all(|r| r.obs == first.obs && r.stats == first.stats)
    };

    let opts = OptimOptions::default();
    let starts = [init.to_params(), restart_point(rows, seed)];
    let mut best: Option<(EmosCoefficients, f64, bool, usize, Vec<f64>)> = None;
    for start in starts {
        let result = optim::bfgs(|p| objective(p, rows, bounds), &start, &opts)
            .filter(|r| r.value.is_finite())
            .unwrap_or_else(|| optim::nelder_mead(|p| objective(p, rows, bounds).0, &start, &opts));
        let coef = EmosCoefficients::from_params(&result.x);
        let score = mean_crps(&coef, rows, bounds);
        if score.is_finite() && best.as_ref().map_or(true, |b| score < b.1) {
            best = Some((coef, score, result.converged, result.iterations, result.history));
        }
    }
    // never do worse than the starting point or the raw ensemble
    for fallback in [init, EmosCoefficients::IDENTITY] {
        let score = mean_crps(&fallback, rows, bounds);
        if best.as_ref().map_or(true, |b| score < b.1) {
            best = Some((fallback, score, false, 0, vec![score]));
        }
    }
    let (coefficients, mean_crps, converged, iterations, history) =
        best.ok_or_else(|| Error::NonConvergence("objective is not finite".into()))?;
    Ok(EmosFit {
        coefficients,
        mean_crps,
        degenerate,
        converged,
        iterations,
        history,
    })
}

// Least-squares location with seeded jitter; spread split between both variance terms.
fn restart_point(rows: &[EmosRow], seed: u64) -> [f64; 4] {
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.stats.mean).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.obs).sum::<f64>() / n;
    let sxx: f64 = rows.iter().map(|r| (r.stats.mean - mx).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.stats.mean - mx) * (r.obs - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 1.0 };
    let a = my - b * mx;
    let resid_var = rows
        .iter()
        .map(|r| (r.obs - a - b * r.stats.mean).powi(2))
        .sum::<f64>()
        / n;
    let mean_var = rows.iter().map(|r| r.stats.variance).sum::<f64>() / n;

    let mut rng = seed::rng(seed);
    let mut jitter = || (0.2 * rng.sample::<f64, _>(StandardNormal)).exp();
    let c = (0.5 * resid_var).max(1e-6);
    let d = if mean_var > 0.0 {
        (0.5 * resid_var / mean_var).max(1e-3)
    } else {
        1.0
    };
    [a, b * jitter(), c.sqrt() * jitter(), d.sqrt() * jitter()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmosMode {
    Global,
    Hourly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSet {
    Global(EmosCoefficients),
    /// Indexed by local hour.
    Hourly(Vec<EmosCoefficients>),
}

/// A fitted EMOS model; serializes as `{mode, bounds, coefficients}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmosModel {
    pub mode: EmosMode,
    pub bounds: Bounds,
    pub coefficients: CoefficientSet,
}

impl EmosModel {
    pub fn global(coefficients: EmosCoefficients, bounds: Bounds) -> Self {
        EmosModel {
            mode: EmosMode::Global,
            bounds,
            coefficients: CoefficientSet::Global(coefficients),
        }
    }

    pub fn coefficients_for(&self, hour: u8) -> Result<&EmosCoefficients> {
        match (&self.mode, &self.coefficients) {
            (EmosMode::Global, CoefficientSet::Global(c)) => Ok(c),
            (EmosMode::Hourly, CoefficientSet::Hourly(set)) => set.get(usize::from(hour)).ok_or(Error::UnfittedModel),
            _ => Err(Error::UnfittedModel),
        }
    }

    pub fn predict(&self, stats: &EnsembleStats, hour: u8) -> Result<CensoredNormal> {
        Ok(self.coefficients_for(hour)?.predict(stats, self.bounds))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: EmosModel = serde_json::from_str(s)?;
        if let CoefficientSet::Hourly(set) = &m.coefficients {
            if m.mode != EmosMode::Hourly || set.len() != 24 {
                return Err(Error::UnfittedModel);
            }
        }
        Ok(m)
    }
}

pub fn predict_emos(model: &EmosModel, stats: &EnsembleStats, hour: u8) -> Result<CensoredNormal> {
    model.predict(stats, hour)
}

/// Seed used for the fit of one local hour.
pub fn hourly_seed(seed: u64, hour: u8) -> u64 {
    seed::derive(seed, &["emos-hour", &hour.to_string()])
}

/// Fits the pooled model.
pub fn fit_emos_global(rows: &[EmosRow], bounds: Bounds, seed: u64) -> Result<(EmosModel, EmosFit)> {
    let fit = fit_emos(rows, bounds, EmosCoefficients::INITIAL, seed)?;
    Ok((EmosModel::global(fit.coefficients, bounds), fit))
}

/// Fits 24 independent models, one per local hour.
pub fn fit_emos_hourly(rows: &[EmosRow], hours: &[u8], bounds: Bounds, seed: u64) -> Result<(EmosModel, Vec<EmosFit>)> {
    assert_eq!(rows.len(), hours.len(), "one hour per row");
    let mut groups: Vec<Vec<EmosRow>> = vec![Vec::new(); 24];
    for (r, &h) in rows.iter().zip(hours) {
        groups[usize::from(h % 24)].push(*r);
    }
    if let Some(h) = groups.iter().position(|g| g.len() < MIN_HOURLY_ROWS) {
        return Err(Error::InsufficientHourData(h as u8));
    }
    let mut set = Vec::with_capacity(24);
    let mut fits = Vec::with_capacity(24);
    for (h, group) in groups.iter().enumerate() {
        let h = h as u8;
        let fit = fit_rows(group, bounds, EmosCoefficients::INITIAL, hourly_seed(seed, h))?;
        set.push(fit.coefficients);
        fits.push(fit);
    }
    Ok((
        EmosModel {
            mode: EmosMode::Hourly,
            bounds,
            coefficients: CoefficientSet::Hourly(set),
        },
        fits,
    ))
}
