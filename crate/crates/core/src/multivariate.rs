//! Multivariate bounded Gaussian mechanism on a box `[a, b] ⊂ R^m` with
//! isotropic covariance `sigma^2 I`.
//!
//! With an isotropic covariance the box normalizer factorizes into a product
//! of one-dimensional masses, so every ratio here is a sum of 1-D log masses
//! and costs O(m). The worst adjacency shift `c*` solves
//!
//! ```text
//! max  ln dC_m(sigma, c)   s.t.  0 <= c_i <= b_i - a_i,  ||c||_2 <= dq
//! ```
//!
//! a concave problem handled by projected gradient ascent. `c*` depends on
//! sigma, so it is re-solved (warm-started) at every bisection step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{projected_gradient_ascent, AscentOptions, BoxBall};
use crate::privacy::{bisect_fixed_point, residual_tolerance, BracketStep, PrivacySpec};
use crate::special::{interval_mass, std_normal_pdf, Interval, TruncatedNormal};

/// Axis-aligned box `[a_1, b_1] x ... x [a_m, b_m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBox("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidBox(format!(
                    "coordinate {i}: need finite a < b, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn from_intervals(intervals: &[Interval]) -> Result<Self> {
        Self::new(
            intervals.iter().map(Interval::a).collect(),
            intervals.iter().map(Interval::b).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn interval(&self, i: usize) -> Interval {
        // bounds were validated in the constructor
        Interval::new(self.lower[i], self.upper[i]).expect("validated box")
    }

    pub fn intervals(&self) -> impl Iterator<Item = Interval> + '_ {
        (0..self.dim()).map(|i| self.interval(i))
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| b - a)
            .collect()
    }

    /// `||b - a||_2`
    pub fn diagonal(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&a, &b))| a <= v && v <= b)
    }
}

/// Per-coordinate adjacency shift `c`, with its l2 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftVector {
    pub c: Vec<f64>,
    pub norm2: f64,
}

impl ShiftVector {
    pub fn new(c: Vec<f64>) -> Self {
        let norm2 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self { c, norm2 }
    }

    pub fn zeros(m: usize) -> Self {
        Self::new(vec![0.0; m])
    }

    /// Box and ball constraints of the shift problem, up to `tol`.
    pub fn is_feasible(&self, domain: &BoxDomain, delta_q: f64, tol: f64) -> bool {
        self.c.len() == domain.dim()
            && self
                .c
                .iter()
                .zip(domain.widths())
                .all(|(&c, w)| c >= -tol && c <= w + tol)
            && self.norm2 <= delta_q + tol
    }
}

fn check_dim(domain: &BoxDomain, got: usize) -> Result<()> {
    if got == domain.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got,
        })
    }
}

/// `sum_i ln mass_i(s_i)`: log of the box mass captured by `N(s, sigma^2 I)`.
pub fn ln_box_mass_at(s: &[f64], sigma: f64, domain: &BoxDomain) -> Result<f64> {
    check_dim(domain, s.len())?;
    domain
        .intervals()
        .zip(s)
        .map(|(d, &si)| interval_mass(si, sigma, &d).map(f64::ln))
        .sum()
}

/// Log box mass of the Gaussian centred at the corner shifted by `c`, i.e.
/// `-ln C_m(a + c, sigma)` without the `(sigma sqrt(2 pi))^m` factor.
pub fn log_box_mass(shift: &ShiftVector, sigma: f64, domain: &BoxDomain) -> Result<f64> {
    check_dim(domain, shift.c.len())?;
    let s: Vec<f64> = domain
        .lower()
        .iter()
        .zip(&shift.c)
        .map(|(a, c)| a + c)
        .collect();
    ln_box_mass_at(&s, sigma, domain)
}

/// `ln dC_m(sigma, c)`.
pub fn ln_delta_c_m(sigma: f64, shift: &ShiftVector, domain: &BoxDomain) -> Result<f64> {
    Ok(log_box_mass(shift, sigma, domain)?
        - log_box_mass(&ShiftVector::zeros(domain.dim()), sigma, domain)?)
}

/// `dC_m(sigma, c) = C_m(a, sigma) / C_m(a + c, sigma)`.
pub fn delta_c_m(sigma: f64, shift: &ShiftVector, domain: &BoxDomain) -> Result<f64> {
    ln_delta_c_m(sigma, shift, domain).map(f64::exp)
}

/// Value and gradient of `c -> ln dC_m(sigma, c)`.
fn shift_objective(c: &[f64], sigma: f64, widths: &[f64], base: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(c.len());
    for ((&ci, &w), &b) in c.iter().zip(widths).zip(base) {
        let d = Interval::new(0.0, w)?;
        let mass = interval_mass(ci, sigma, &d)?;
        value += mass.ln() - b;
        grad.push((std_normal_pdf(ci / sigma) - std_normal_pdf((w - ci) / sigma)) / (sigma * mass));
    }
    Ok((value, grad))
}

/// `c*` together with diagnostics from the inner solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSolution {
    pub shift: ShiftVector,
    pub ln_delta_c: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub projection_sweeps: usize,
}

fn default_start(domain: &BoxDomain, delta_q: f64) -> Vec<f64> {
    let per = delta_q / (domain.dim() as f64).sqrt();
    domain.widths().iter().map(|w| (0.5 * w).min(per)).collect()
}

/// Solve for the worst-case shift, optionally warm-started.
pub fn solve_c_star(
    sigma: f64,
    domain: &BoxDomain,
    delta_q: f64,
    warm: Option<&[f64]>,
) -> Result<ShiftSolution> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if !(delta_q.is_finite() && delta_q > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta_q must be > 0, got {delta_q}"
        )));
    }
    let widths = domain.widths();
    // ln mass at c = 0, subtracted per coordinate so the objective is ln dC_m itself
    let base = widths
        .iter()
        .map(|&w| interval_mass(0.0, sigma, &Interval::new(0.0, w)?).map(f64::ln))
        .collect::<Result<Vec<_>>>()?;
    let set = BoxBall {
        upper: widths.clone(),
        radius: delta_q,
    };
    let start = match warm {
        Some(c) if c.len() == domain.dim() => c.to_vec(),
        _ => default_start(domain, delta_q),
    };
    let opts = AscentOptions {
        initial_step: sigma * sigma,
        ..AscentOptions::default()
    };
    let r = projected_gradient_ascent(
        |c| shift_objective(c, sigma, &widths, &base),
        &set,
        &start,
        opts,
    )?;
    Ok(ShiftSolution {
        shift: ShiftVector::new(r.x),
        ln_delta_c: r.value,
        kkt_residual: r.kkt_residual,
        iterations: r.iterations,
        projection_sweeps: r.projection_sweeps,
    })
}

/// Worst-case adjacency shift `c*` maximizing `ln dC_m(sigma, .)` over box ∩ ball.
pub fn optimize_c_star(sigma: f64, domain: &BoxDomain, delta_q: f64) -> Result<ShiftVector> {
    solve_c_star(sigma, domain, delta_q, None).map(|s| s.shift)
}

/// `[||b - a||_2 + dq/2] * dq`
fn variance_numerator(domain: &BoxDomain, spec: &PrivacySpec) -> f64 {
    (domain.diagonal() + 0.5 * spec.delta_q()) * spec.delta_q()
}

/// `sigma_{m,0} = sqrt([||b - a||_2 + dq/2] dq / epsilon)`.
pub fn sigma0_m(domain: &BoxDomain, spec: &PrivacySpec) -> f64 {
    (variance_numerator(domain, spec) / spec.epsilon()).sqrt()
}

/// Right-hand side of the variance bound at `sigma`, with `c*` re-solved there.
fn variance_bound(
    sigma: f64,
    domain: &BoxDomain,
    spec: &PrivacySpec,
    warm: Option<&[f64]>,
) -> Result<(f64, ShiftSolution)> {
    let sol = solve_c_star(sigma, domain, spec.delta_q(), warm)?;
    let denom = spec.epsilon() - sol.ln_delta_c;
    if denom <= 0.0 || denom.is_nan() {
        return Err(Error::DenominatorNotPositive(denom));
    }
    Ok((variance_numerator(domain, spec) / denom, sol))
}

/// `f_m(sigma) = sigma^2 - [||b - a|| + dq/2] dq / (epsilon - ln dC_m(sigma, c*(sigma)))`.
pub fn f_m_residual(sigma: f64, domain: &BoxDomain, spec: &PrivacySpec) -> Result<f64> {
    Ok(sigma * sigma - variance_bound(sigma, domain, spec, None)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSolverStats {
    pub kkt_residual: f64,
    pub ascent_iterations: usize,
    pub projection_sweeps: usize,
}

/// Result of calibrating the multivariate mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiCalibration {
    pub sigma_star_sq: f64,
    pub sigma0_sq: f64,
    pub c_star: ShiftVector,
    pub residual: f64,
    pub iterations: usize,
    pub bracket_width: f64,
    pub inner_solver_stats: InnerSolverStats,
    pub trace: Vec<BracketStep>,
}

impl MultiCalibration {
    pub fn sigma_star(&self) -> f64 {
        self.sigma_star_sq.sqrt()
    }
}

/// Smallest variance satisfying the multivariate privacy bound.
pub fn calibrate_multi(domain: &BoxDomain, spec: &PrivacySpec) -> Result<MultiCalibration> {
    let s0 = sigma0_m(domain, spec);
    let left = variance_numerator(domain, spec) / spec.epsilon();
    let (right, sol0) = match variance_bound(s0, domain, spec, None) {
        Ok(v) => v,
        Err(Error::DenominatorNotPositive(v)) => {
            return Err(Error::InternalBracketError(format!(
                "epsilon - ln dC_m(sigma_m0, c*) = {v} at sigma_m0 = {s0}"
            )))
        }
        Err(e) => return Err(e),
    };
    let mut warm = sol0.shift.c;
    let (sigma_star_sq, iterations, trace) = bisect_fixed_point(left, right, |v| {
        let (bound, sol) = variance_bound(v.sqrt(), domain, spec, Some(&warm))?;
        warm = sol.shift.c;
        Ok(bound)
    })?;
    let (bound, sol) = variance_bound(sigma_star_sq.sqrt(), domain, spec, Some(&warm))?;
    let residual = sigma_star_sq - bound;
    if residual.abs() > residual_tolerance(sigma_star_sq) {
        return Err(Error::NonConvergence {
            what: "multivariate variance bisection",
            iterations,
            residual,
        });
    }
    let bracket_width = trace.last().map_or(right - left, |s| s.right - s.left);
    Ok(MultiCalibration {
        sigma_star_sq,
        sigma0_sq: left,
        residual,
        iterations,
        bracket_width,
        inner_solver_stats: InnerSolverStats {
            kkt_residual: sol.kkt_residual,
            ascent_iterations: sol.iterations,
            projection_sweeps: sol.projection_sweeps,
        },
        c_star: sol.shift,
        trace,
    })
}

/// One private release for the true answer `s`: independent truncated draws
/// per coordinate, in coordinate order.
pub fn release_multi<R: Rng + ?Sized>(
    s: &[f64],
    domain: &BoxDomain,
    cal: &MultiCalibration,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dim(domain, s.len())?;
    if !domain.contains(s) {
        return Err(Error::QueryValueOutsideDomain { value: s.to_vec() });
    }
    let sigma = cal.sigma_star();
    domain
        .intervals()
        .zip(s)
        .map(|(d, &si)| TruncatedNormal::new(si, sigma, d).map(|t| t.sample(rng)))
        .collect()
}

/// Calibrated multivariate mechanism bound to one box and privacy spec.
#[derive(Debug, Clone)]
pub struct MultivariateMechanism {
    domain: BoxDomain,
    spec: PrivacySpec,
    calibration: MultiCalibration,
}

impl MultivariateMechanism {
    pub fn new(domain: BoxDomain, spec: PrivacySpec) -> Result<Self> {
        let calibration = calibrate_multi(&domain, &spec)?;
        Ok(Self {
            domain,
            spec,
            calibration,
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn spec(&self) -> &PrivacySpec {
        &self.spec
    }

    pub fn calibration(&self) -> &MultiCalibration {
        &self.calibration
    }

    pub fn release<R: Rng + ?Sized>(&self, s: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        release_multi(s, &self.domain, &self.calibration, rng)
    }
}
