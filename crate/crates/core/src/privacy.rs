use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Privacy budget and the l2 sensitivity of the query being released.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacySpec {
    epsilon: f64,
    delta_q: f64,
}

impl PrivacySpec {
    pub fn new(epsilon: f64, delta_q: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(epsilon) && ok(delta_q) {
            Ok(Self { epsilon, delta_q })
        } else {
            Err(Error::InvalidPrivacySpec { epsilon, delta_q })
        }
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// l2 sensitivity, in query units.
    #[inline]
    pub fn delta_q(&self) -> f64 {
        self.delta_q
    }
}

/// One step of a variance bisection: the bracket on sigma^2 after the update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketStep {
    pub left: f64,
    pub right: f64,
}

/// Upper bound on bisection steps. Halving from any finite bracket reaches
/// floating-point resolution long before this.
pub(crate) const MAX_BISECTION_STEPS: usize = 200;
/// Relative bracket width at which the bisection stops.
pub(crate) const BRACKET_RTOL: f64 = 1e-12;

/// Tolerance on `|f(sigma*)|` accepted from either calibrator.
pub fn residual_tolerance(sigma_sq: f64) -> f64 {
    1e-9 * sigma_sq.max(1.0)
}

/// Bisection on sigma^2 for the fixed point `sigma^2 = rhs(sigma^2)`.
///
/// `rhs` must be decreasing in its argument with `rhs(left) >= left` and
/// `rhs(right) <= right`. The returned value is the final right endpoint,
/// the side on which the privacy inequality holds.
pub(crate) fn bisect_fixed_point<F>(
    left: f64,
    right: f64,
    mut rhs: F,
) -> Result<(f64, usize, Vec<BracketStep>)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(left.is_finite() && right.is_finite() && left <= right) {
        return Err(Error::InternalBracketError(format!(
            "left={left}, right={right}"
        )));
    }
    let (mut left, mut right) = (left, right);
    let mut trace = Vec::new();
    // The first pass always runs; afterwards continue while the bracket still shrinks.
    let mut interval_size = f64::INFINITY;
    let mut steps = 0;
    while steps < MAX_BISECTION_STEPS && interval_size > right - left {
        interval_size = right - left;
        let mid = 0.5 * (left + right);
        let target = rhs(mid)?;
        if target >= mid {
            left = mid;
        }
        if target <= mid {
            right = mid;
        }
        steps += 1;
        trace.push(BracketStep { left, right });
        if right - left <= BRACKET_RTOL * right {
            break;
        }
    }
    Ok((right, steps, trace))
}
