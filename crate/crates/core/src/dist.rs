//! Censored normal forecast distributions and empirical ensembles.
//!
//! A censored normal puts the probability mass that a normal law assigns
//! beyond a bound onto the bound itself. GHI forecasts are censored below at
//! zero; PV forecasts are censored at zero and at plant capacity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{self, INV_SQRT_PI};

/// Smallest scale a forecast distribution is allowed to take.
pub const SCALE_FLOOR: f64 = 1e-3;

/// Censoring bounds of a forecast distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

impl Bounds {
    /// Left-censored at zero (GHI).
    pub const fn nonnegative() -> Self {
        Bounds {
            lower: 0.0,
            upper: None,
        }
    }

    /// Censored at zero and `capacity` (PV power).
    pub const fn unit_range(capacity: f64) -> Self {
        Bounds {
            lower: 0.0,
            upper: Some(capacity),
        }
    }

    pub fn upper_or_inf(&self) -> f64 {
        self.upper.unwrap_or(f64::INFINITY)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lower).min(self.upper_or_inf())
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper_or_inf()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredNormal {
    pub mu: f64,
    pub sigma: f64,
    pub bounds: Bounds,
}

impl CensoredNormal {
    /// Builds a distribution, flooring `sigma` at [`SCALE_FLOOR`].
    pub fn new(mu: f64, sigma: f64, bounds: Bounds) -> Self {
        debug_assert!(bounds.upper.map_or(true, |u| bounds.lower < u));
        CensoredNormal {
            mu,
            sigma: floor_scale(sigma),
            bounds,
        }
    }

    pub fn lower(&self) -> f64 {
        self.bounds.lower
    }

    pub fn upper(&self) -> f64 {
        self.bounds.upper_or_inf()
    }

    fn standardize(&self, x: f64) -> f64 {
        (x - self.mu) / self.sigma
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z < self.lower() {
            0.0
        } else if z >= self.upper() {
            1.0
        } else {
            normal::cdf(self.standardize(z))
        }
    }

    /// Left limit `F(z-)`.
    pub fn cdf_left(&self, z: f64) -> f64 {
        if z <= self.lower() {
            0.0
        } else if z > self.upper() {
            1.0
        } else {
            normal::cdf(self.standardize(z))
        }
    }

    /// Generalized inverse of the CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(self
            .bounds
            .clamp(self.mu + self.sigma * normal::quantile(p)))
    }

    pub fn median(&self) -> f64 {
        self.bounds.clamp(self.mu)
    }

    pub fn mean(&self) -> f64 {
        let (lo, hi) = (self.lower(), self.upper());
        let alpha = self.standardize(lo);
        let beta = self.standardize(hi);
        let (p_lo, p_hi) = (normal::cdf(alpha), normal::cdf(beta));
        let mut m = self.mu * (p_hi - p_lo) + self.sigma * (normal::pdf(alpha) - normal::pdf(beta));
        if lo.is_finite() {
            m += lo * p_lo;
        }
        if hi.is_finite() {
            m += hi * (1.0 - p_hi);
        }
        m
    }

    /// Closed-form continuous ranked probability score.
    pub fn crps(&self, y: f64) -> f64 {
        let parts = self.standardized_crps(y);
        (self.sigma * parts.value).max(0.0)
    }

    /// Closed-form CRPS together with its partial derivatives in `mu` and `sigma`.
    pub fn crps_with_gradient(&self, y: f64) -> (f64, f64, f64) {
        let p = self.standardized_crps(y);
        let (a, b, w) = (p.a, p.b, p.w);
        let mut d_mu = -p.d_w;
        let mut d_sigma = p.value - w * p.d_w;
        if a.is_finite() {
            d_mu -= p.d_a;
            d_sigma -= a * p.d_a;
        }
        if b.is_finite() {
            d_mu -= p.d_b;
            d_sigma -= b * p.d_b;
        }
        ((self.sigma * p.value).max(0.0), d_mu, d_sigma)
    }

    pub fn crps_gradient(&self, y: f64) -> (f64, f64) {
        let (_, d_mu, d_sigma) = self.crps_with_gradient(y);
        (d_mu, d_sigma)
    }

    /// Randomized probability integral transform for a uniform draw `u`.
    pub fn randomized_pit(&self, y: f64, u: f64) -> f64 {
        let hi = self.cdf(y);
        let lo = self.cdf_left(y);
        lo + u * (hi - lo)
    }

    fn standardized_crps(&self, y: f64) -> StdCrps {
        let a = self.standardize(self.lower());
        let b = self.standardize(self.upper());
        let w = self.standardize(y);
        standardized_crps(a, b, w)
    }
}

pub fn floor_scale(sigma: f64) -> f64 {
    if sigma.is_nan() {
        return SCALE_FLOOR;
    }
    sigma.max(SCALE_FLOOR)
}

/// CRPS of the standard normal censored to `[a, b]` at `w`, with partials.
struct StdCrps {
    a: f64,
    b: f64,
    w: f64,
    value: f64,
    d_a: f64,
    d_b: f64,
    d_w: f64,
}

// Antiderivative of Phi(z)^2.
fn int_cdf_sq(z: f64) -> f64 {
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    let p = normal::cdf(z);
    z * p * p + 2.0 * normal::pdf(z) * p - INV_SQRT_PI * normal::cdf(std::f64::consts::SQRT_2 * z)
}

// Antiderivative of (1 - Phi(z))^2.
fn int_sf_sq(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 0.0;
    }
    let q = normal::cdf(-z);
    z * q * q - 2.0 * normal::pdf(z) * q + INV_SQRT_PI * normal::cdf(-std::f64::consts::SQRT_2 * z)
}

fn standardized_crps(a: f64, b: f64, w: f64) -> StdCrps {
    let (pa, pb) = (normal::cdf(a), normal::cdf(b));
    let (value, d_a, d_b, d_w);
    if w < a {
        value = (a - w) + int_sf_sq(b) - int_sf_sq(a);
        d_a = 1.0 - (1.0 - pa).powi(2);
        d_b = (1.0 - pb).powi(2);
        d_w = -1.0;
    } else if w > b {
        value = (w - b) + int_cdf_sq(b) - int_cdf_sq(a);
        d_a = -pa * pa;
        d_b = pb * pb - 1.0;
        d_w = 1.0;
    } else {
        value = int_cdf_sq(w) - int_cdf_sq(a) + int_sf_sq(b) - int_sf_sq(w);
        d_a = -pa * pa;
        d_b = (1.0 - pb).powi(2);
        d_w = 2.0 * normal::cdf(w) - 1.0;
    }
    StdCrps {
        a,
        b,
        w,
        value,
        d_a,
        d_b,
        d_w,
    }
}

/// An ensemble forecast with members stored in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalEnsemble {
    members: Vec<f64>,
}

impl EmpiricalEnsemble {
    pub fn new(mut members: Vec<f64>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::TooFewMembers(members.len()));
        }
        members.sort_by(f64::total_cmp);
        Ok(EmpiricalEnsemble { members })
    }

    pub fn members(&self) -> &[f64] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.members.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance (denominator `m - 1`), via Welford's update.
    pub fn variance(&self) -> f64 {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &x) in self.members.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        m2 / (self.len() - 1) as f64
    }

    pub fn median(&self) -> f64 {
        let m = self.len();
        if m % 2 == 1 {
            self.members[m / 2]
        } else {
            0.5 * (self.members[m / 2 - 1] + self.members[m / 2])
        }
    }

    pub fn min(&self) -> f64 {
        self.members[0]
    }

    pub fn max(&self) -> f64 {
        self.members[self.len() - 1]
    }

    /// CRPS of the empirical step CDF.
    pub fn crps(&self, y: f64) -> f64 {
        let m = self.len() as f64;
        let abs_err: f64 = self.members.iter().map(|x| (x - y).abs()).sum::<f64>() / m;
        // sum_{i,j} |x_i - x_j| / 2 = sum_i (2i - m - 1) x_(i) for sorted members
        let spread: f64 = self
            .members
            .iter()
            .enumerate()
            .map(|(i, x)| (2.0 * (i + 1) as f64 - m - 1.0) * x)
            .sum::<f64>()
            / (m * m);
        (abs_err - spread).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn left(mu: f64, sigma: f64) -> CensoredNormal {
        CensoredNormal::new(mu, sigma, Bounds::nonnegative())
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(left(0.0, 1.0).cdf(0.0), 0.5);
        let pv = CensoredNormal::new(10.0, 2.0, Bounds::unit_range(20.0));
        assert_eq!(pv.cdf(20.0), 1.0);
        assert_eq!(left(5.0, 3.0).cdf(-1.0), 0.0);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(left(0.0, 1.0).quantile(0.25).unwrap(), 0.0);
        let pv = CensoredNormal::new(10.0, 1.0, Bounds::unit_range(20.0));
        assert_eq!(pv.quantile(0.5).unwrap(), 10.0);
        let q = left(3.0, 2.0).quantile(0.9).unwrap();
        // frozen from bisection on the CDF
        assert!(close(q, 5.563_103_131_089_201, 1e-9), "{q}");
        assert!(matches!(
            left(0.0, 1.0).quantile(1.0),
            Err(Error::InvalidProbability(_))
        ));
        assert!(left(0.0, 1.0).quantile(0.0).is_err());
    }

    #[test]
    fn mean_examples() {
        let point = CensoredNormal::new(10.0, 1e-9, Bounds::unit_range(20.0));
        assert!(close(point.mean(), 10.0, 1e-12));
        assert!(close(left(0.0, 1.0).mean(), 0.398_942_280_401_432_7, 1e-14));
        let sym = CensoredNormal::new(10.0, 1.0, Bounds::unit_range(20.0));
        assert!(close(sym.mean(), 10.0, 1e-12));
    }

    #[test]
    fn crps_point_forecast() {
        let d = left(0.0, 1e-12);
        // floored scale of 1e-3 leaves a residual of order 1e-3
        assert!(close(d.crps(3.0), 3.0, 1e-3));
    }

    #[test]
    fn crps_uncensored_limit_matches_gaussian_formula() {
        let d = CensoredNormal::new(
            1.0,
            2.0,
            Bounds {
                lower: f64::NEG_INFINITY,
                upper: None,
            },
        );
        let y: f64 = 2.5;
        let z = (y - 1.0) / 2.0;
        let expected =
            2.0 * (z * (2.0 * normal::cdf(z) - 1.0) + 2.0 * normal::pdf(z) - INV_SQRT_PI);
        assert!(close(d.crps(y), expected, 1e-14));
    }

    #[test]
    fn gradient_far_above_location() {
        let d = left(5.0, 1.0);
        let (d_mu, _) = d.crps_gradient(15.0);
        assert!(close(d_mu, -1.0, 1e-9), "{d_mu}");
    }

    #[test]
    fn randomized_pit_examples() {
        let d = left(0.0, 1.0);
        assert_eq!(d.randomized_pit(2.0, 0.1), normal::cdf(2.0));
        assert_eq!(d.randomized_pit(2.0, 0.9), normal::cdf(2.0));
        assert!(close(d.randomized_pit(0.0, 0.5), 0.25, 1e-15));
        let pv = CensoredNormal::new(19.0, 2.0, Bounds::unit_range(20.0));
        let jump_lo = normal::cdf(0.5);
        assert!(close(pv.randomized_pit(20.0, 0.0), jump_lo, 1e-15));
        assert_eq!(pv.randomized_pit(20.0, 1.0), 1.0);
    }

    #[test]
    fn empirical_examples() {
        let e = EmpiricalEnsemble::new(vec![4.0, 4.0]).unwrap();
        assert_eq!(e.crps(4.0), 0.0);
        let e = EmpiricalEnsemble::new(vec![2.0, 0.0]).unwrap();
        assert!(close(e.crps(1.0), 0.5, 1e-15));
        assert!(matches!(
            EmpiricalEnsemble::new(vec![1.0]),
            Err(Error::TooFewMembers(1))
        ));
    }

    #[test]
    fn empirical_crps_matches_double_sum() {
        let xs: [f64; 6] = [3.0, -1.0, 7.5, 0.25, 2.0, 2.0];
        let y = 1.5;
        let m = xs.len() as f64;
        let mut a = 0.0;
        let mut b = 0.0;
        for xi in xs {
            a += (xi - y).abs();
            for xj in xs {
                b += (xi - xj).abs();
            }
        }
        let brute = a / m - b / (2.0 * m * m);
        let e = EmpiricalEnsemble::new(xs.to_vec()).unwrap();
        assert!(close(e.crps(y), brute, 1e-14));
    }
}
