//! Projection onto `{0 <= c <= u} ∩ {||c||_2 <= r}` and a projected-gradient
//! ascent driver with backtracking.

use crate::error::{Error, Result};

/// Inner iteration cap for Dykstra's alternating projections.
pub const DYKSTRA_MAX_ITER: usize = 500;
/// Stop Dykstra once successive iterates move less than this (l2).
pub const DYKSTRA_TOL: f64 = 1e-12;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn project_ball(x: &mut [f64], radius: f64) {
    let n = norm(x);
    if n > radius {
        let k = radius / n;
        x.iter_mut().for_each(|v| *v *= k);
    }
}

fn project_box(x: &mut [f64], upper: &[f64]) {
    for (v, &u) in x.iter_mut().zip(upper) {
        *v = v.clamp(0.0, u);
    }
}

/// Box `[0, upper]` intersected with the origin-centred ball of `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBall {
    pub upper: Vec<f64>,
    pub radius: f64,
}

impl BoxBall {
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(&self.upper)
            .all(|(&v, &u)| v >= -tol && v <= u + tol)
            && norm(x) <= self.radius + tol
    }

    /// Euclidean projection by Dykstra's algorithm. Returns the point and the
    /// number of sweeps used.
    pub fn project(&self, z: &[f64]) -> (Vec<f64>, usize) {
        let m = z.len();
        let mut x = z.to_vec();
        let mut p = vec![0.0; m];
        let mut q = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut sweeps = 0;
        while sweeps < DYKSTRA_MAX_ITER {
            sweeps += 1;
            for i in 0..m {
                y[i] = x[i] + p[i];
            }
            project_ball(&mut y, self.radius);
            for i in 0..m {
                p[i] += x[i] - y[i];
            }
            let mut next: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
            project_box(&mut next, &self.upper);
            for i in 0..m {
                q[i] += y[i] - next[i];
            }
            let moved = norm(&next.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
            x = next;
            if moved <= DYKSTRA_TOL {
                break;
            }
        }
        // Ball then box keeps the result feasible; clipping toward a box that
        // holds the origin never increases the norm.
        project_ball(&mut x, self.radius);
        project_box(&mut x, &self.upper);
        (x, sweeps)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AscentOptions {
    pub max_iter: usize,
    /// Tolerance on `||x - P(x + grad)||`.
    pub kkt_tol: f64,
    pub initial_step: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            kkt_tol: 1e-8,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub projection_sweeps: usize,
    pub final_step: f64,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Maximize a smooth concave `objective` (value and gradient) over `set`.
pub fn projected_gradient_ascent<F>(
    objective: F,
    set: &BoxBall,
    x0: &[f64],
    opts: AscentOptions,
) -> Result<AscentResult>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (mut x, mut sweeps) = set.project(x0);
    let (mut value, mut grad) = objective(&x)?;
    let mut step = opts.initial_step;
    let mut kkt = f64::INFINITY;
    for iter in 0..opts.max_iter {
        let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + g).collect();
        let (unit, s) = set.project(&trial);
        sweeps += s;
        kkt = dist(&x, &unit);
        if kkt <= opts.kkt_tol {
            return Ok(AscentResult {
                x,
                value,
                kkt_residual: kkt,
                iterations: iter,
                projection_sweeps: sweeps,
                final_step: step,
            });
        }

        // Backtracking until the step is below the inverse local Lipschitz
        // constant of the gradient. Function values are not compared: near the
        // optimum their increments fall under rounding and stop discriminating.
        loop {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            let (y, s) = set.project(&trial);
            sweeps += s;
            let (vy, gy) = objective(&y)?;
            if step * dist(&gy, &grad) <= dist(&y, &x) {
                x = y;
                value = vy;
                grad = gy;
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                return Err(Error::NonConvergence {
                    what: "projected gradient line search",
                    iterations: iter,
                    residual: kkt,
                });
            }
        }
        step = (step * 2.0).min(1e12);
    }
    Err(Error::NonConvergence {
        what: "projected gradient ascent",
        iterations: opts.max_iter,
        residual: kkt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact projection via the KKT form `clip(z / (1 + lambda), 0, u)` with
    /// `lambda >= 0` chosen by bisection so the norm meets the radius.
    fn kkt_projection(set: &BoxBall, z: &[f64]) -> Vec<f64> {
        let at = |lam: f64| -> Vec<f64> {
            z.iter()
                .zip(&set.upper)
                .map(|(&v, &u)| (v / (1.0 + lam)).clamp(0.0, u))
                .collect()
        };
        if norm(&at(0.0)) <= set.radius {
            return at(0.0);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while norm(&at(hi)) > set.radius {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm(&at(mid)) > set.radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(hi)
    }

    #[test]
    fn dykstra_matches_kkt_projection() {
        let cases: Vec<(Vec<f64>, f64, Vec<f64>)> = vec![
            (vec![1.0, 100.0], 5.0, vec![10.0, 10.0]),
            (vec![1.0, 1.0], 1.0, vec![10.0, 0.5]),
            (vec![10.0, 8.0], 4.472, vec![-3.0, 7.0]),
            (vec![2.0, 3.0, 0.5], 2.0, vec![4.0, -1.0, 3.0]),
            (vec![2.0, 3.0, 0.5], 20.0, vec![4.0, -1.0, 3.0]),
            (vec![0.3], 0.2, vec![0.25]),
        ];
        for (upper, radius, z) in cases {
            let set = BoxBall { upper, radius };
            let (p, _) = set.project(&z);
            let q = kkt_projection(&set, &z);
            assert!(set.contains(&p, 1e-15));
            assert!(dist(&p, &q) < 1e-9, "{p:?} vs {q:?}");
        }
    }

    #[test]
    fn ascent_on_separable_quadratic() {
        // maximize -(x-3)^2 - (y-3)^2 over [0,1]x[0,5] ∩ ball(2): optimum (1, sqrt 3)
        let set = BoxBall {
            upper: vec![1.0, 5.0],
            radius: 2.0,
        };
        let obj = |x: &[f64]| {
            let v = -(x[0] - 3.0).powi(2) - (x[1] - 3.0).powi(2);
            Ok((v, vec![-2.0 * (x[0] - 3.0), -2.0 * (x[1] - 3.0)]))
        };
        let r =
            projected_gradient_ascent(obj, &set, &[0.0, 0.0], AscentOptions::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-8);
        assert!((r.x[1] - 3f64.sqrt()).abs() < 1e-7);
        assert!(r.kkt_residual <= 1e-8);
    }
}
