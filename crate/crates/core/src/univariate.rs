//! Univariate bounded Gaussian mechanism on an interval `[a, b]`.
//!
//! The mechanism releases a draw from `N(s, sigma^2)` conditioned on `[a, b]`.
//! It is epsilon-DP whenever
//!
//! ```text
//! sigma^2 >= [(b - a) + dq/2] * dq / (epsilon - ln dC(sigma))
//! ```
//!
//! where `dC(sigma) = mass(a + c) / mass(a)` is the worst-case ratio of the
//! normalizers of two adjacent outputs and `c = min(dq, (b - a)/2)`. Since
//! `sigma` appears on both sides, the smallest admissible variance is found by
//! bisection on the residual `f(sigma) = sigma^2 - rhs(sigma)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::privacy::{bisect_fixed_point, residual_tolerance, BracketStep, PrivacySpec};
use crate::special::{ln_interval_mass, Interval, TruncatedNormal};

/// Result of calibrating the univariate mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniCalibration {
    pub sigma_star_sq: f64,
    pub sigma0_sq: f64,
    /// `f(sigma*)`
    pub residual: f64,
    pub iterations: usize,
    pub bracket_width: f64,
    pub trace: Vec<BracketStep>,
}

impl UniCalibration {
    pub fn sigma_star(&self) -> f64 {
        self.sigma_star_sq.sqrt()
    }
}

/// Adjacency shift that maximizes the normalizer ratio: `min(dq, (b - a)/2)`.
pub fn effective_shift(d: &Interval, spec: &PrivacySpec) -> f64 {
    spec.delta_q().min(0.5 * d.width())
}

/// Numerator of the variance bound, `[(b - a) + dq/2] * dq`.
fn variance_numerator(d: &Interval, spec: &PrivacySpec) -> f64 {
    (d.width() + 0.5 * spec.delta_q()) * spec.delta_q()
}

/// `ln dC(sigma)`.
pub fn ln_delta_c(sigma: f64, d: &Interval, spec: &PrivacySpec) -> Result<f64> {
    let c = effective_shift(d, spec);
    Ok(ln_interval_mass(d.a() + c, sigma, d)? - ln_interval_mass(d.a(), sigma, d)?)
}

/// Worst-case normalizer ratio `dC(sigma)`. Always > 1.
pub fn delta_c(sigma: f64, d: &Interval, spec: &PrivacySpec) -> Result<f64> {
    ln_delta_c(sigma, d, spec).map(f64::exp)
}

/// Closed-form lower bracket `sigma_0 = sqrt([(b - a) + dq/2] dq / epsilon)`.
pub fn sigma0(d: &Interval, spec: &PrivacySpec) -> f64 {
    (variance_numerator(d, spec) / spec.epsilon()).sqrt()
}

/// Right-hand side of the variance bound evaluated at `sigma`.
fn variance_bound(sigma: f64, d: &Interval, spec: &PrivacySpec) -> Result<f64> {
    let denom = spec.epsilon() - ln_delta_c(sigma, d, spec)?;
    if denom <= 0.0 || denom.is_nan() {
        return Err(Error::DenominatorNotPositive(denom));
    }
    Ok(variance_numerator(d, spec) / denom)
}

/// `f(sigma) = sigma^2 - [(b - a) + dq/2] dq / (epsilon - ln dC(sigma))`.
pub fn f_residual(sigma: f64, d: &Interval, spec: &PrivacySpec) -> Result<f64> {
    Ok(sigma * sigma - variance_bound(sigma, d, spec)?)
}

/// Smallest variance satisfying the univariate privacy bound.
pub fn calibrate(d: &Interval, spec: &PrivacySpec) -> Result<UniCalibration> {
    let s0 = sigma0(d, spec);
    let left = variance_numerator(d, spec) / spec.epsilon();
    let right = match variance_bound(s0, d, spec) {
        Ok(r) => r,
        Err(Error::DenominatorNotPositive(v)) => {
            return Err(Error::InternalBracketError(format!(
                "epsilon - ln dC(sigma_0) = {v} at sigma_0 = {s0}"
            )))
        }
        Err(e) => return Err(e),
    };
    let (sigma_star_sq, iterations, trace) =
        bisect_fixed_point(left, right, |v| variance_bound(v.sqrt(), d, spec))?;
    let residual = f_residual(sigma_star_sq.sqrt(), d, spec)?;
    let bracket_width = trace.last().map_or(right - left, |s| s.right - s.left);
    if residual.abs() > residual_tolerance(sigma_star_sq) {
        return Err(Error::NonConvergence {
            what: "univariate variance bisection",
            iterations,
            residual,
        });
    }
    Ok(UniCalibration {
        sigma_star_sq,
        sigma0_sq: left,
        residual,
        iterations,
        bracket_width,
        trace,
    })
}

/// Draw one private output for the true answer `s`.
pub fn release<R: Rng + ?Sized>(
    s: f64,
    d: &Interval,
    cal: &UniCalibration,
    rng: &mut R,
) -> Result<f64> {
    let t = TruncatedNormal::new(s, cal.sigma_star(), *d)?;
    Ok(t.sample(rng))
}

/// Calibrated univariate mechanism bound to one domain and privacy spec.
#[derive(Debug, Clone)]
pub struct UnivariateMechanism {
    domain: Interval,
    spec: PrivacySpec,
    calibration: UniCalibration,
}

impl UnivariateMechanism {
    pub fn new(domain: Interval, spec: PrivacySpec) -> Result<Self> {
        let calibration = calibrate(&domain, &spec)?;
        Ok(Self {
            domain,
            spec,
            calibration,
        })
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn spec(&self) -> &PrivacySpec {
        &self.spec
    }

    pub fn calibration(&self) -> &UniCalibration {
        &self.calibration
    }

    pub fn release<R: Rng + ?Sized>(&self, s: f64, rng: &mut R) -> Result<f64> {
        release(s, &self.domain, &self.calibration, rng)
    }
}
