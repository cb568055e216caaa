//! Variance comparison on the two-query graph benchmark: algebraic
//! connectivity of a 10-node connected graph in `[0, 10]` and one node
//! degree in `[1, 9]`, released jointly under `k`-edge adjacency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{gg_variance, query_sensitivity};
use crate::multivariate::{calibrate_multi, BoxDomain};
use crate::privacy::PrivacySpec;

/// Epsilon values of the published comparison.
pub const BENCHMARK_EPSILONS: [f64; 7] = [0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub epsilon: f64,
    pub sigma_gg_sq: f64,
    pub sigma_bg_sq: f64,
    pub percent_reduction: f64,
}

/// `[0, 10] x [1, 9]`
pub fn benchmark_box() -> BoxDomain {
    BoxDomain::new(vec![0.0, 1.0], vec![10.0, 9.0]).expect("static box")
}

pub fn percent_reduction(gg: f64, bg: f64) -> f64 {
    (gg - bg) / gg * 100.0
}

/// One row per epsilon, sorted ascending.
pub fn run_experiment(eps_list: &[f64], k: u32) -> Result<Vec<ExperimentRow>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let domain = benchmark_box();
    let dq = query_sensitivity(k);
    let mut eps = eps_list.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.into_iter()
        .map(|e| {
            let cal = calibrate_multi(&domain, &PrivacySpec::new(e, dq)?)?;
            let gg = gg_variance(e)?.value;
            Ok(ExperimentRow {
                epsilon: e,
                sigma_gg_sq: gg,
                sigma_bg_sq: cal.sigma_star_sq,
                percent_reduction: percent_reduction(gg, cal.sigma_star_sq),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_sorted_and_reduction_consistent() {
        let rows = run_experiment(&[3.0, 0.5, 1.0], 2).unwrap();
        let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        assert_eq!(eps, vec![0.5, 1.0, 3.0]);
        for r in &rows {
            let want = (r.sigma_gg_sq - r.sigma_bg_sq) / r.sigma_gg_sq * 100.0;
            assert_eq!(r.percent_reduction, want);
            assert!(r.sigma_bg_sq < r.sigma_gg_sq);
        }
        assert_eq!(rows[1].sigma_gg_sq, 132.0);
        assert!((rows[1].sigma_bg_sq - 84.3).abs() / 84.3 < 0.02);
        assert!((rows[1].percent_reduction - 36.1).abs() < 1.0);
    }

    #[test]
    fn trends_over_published_grid() {
        let rows = run_experiment(&BENCHMARK_EPSILONS, 2).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].sigma_bg_sq < w[0].sigma_bg_sq);
            assert!(w[1].percent_reduction > w[0].percent_reduction);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(run_experiment(&[1.0], 0).is_err());
        assert!(run_experiment(&[-1.0], 2).is_err());
    }
}
