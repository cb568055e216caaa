//! Graph queries for the spectral experiment: Laplacian, algebraic
//! connectivity and node degree on small undirected graphs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple undirected graph on nodes `0..n`. Edges are stored as `(i, j)`
/// with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndirectedGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    /// Rejects self-loops, duplicate edges (in either orientation) and
    /// endpoints outside `0..n`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange { node: i.max(j), n });
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            if !set.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(Self { n, edges: set })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self { n, edges }
    }

    pub fn path(n: usize) -> Self {
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        Self { n, edges }
    }

    /// Node 0 joined to every other node.
    pub fn star(n: usize) -> Self {
        let edges = (1..n).map(|i| (0, i)).collect();
        Self { n, edges }
    }

    /// Disjoint union; nodes of `other` are renumbered after those of `self`.
    pub fn disjoint_union(&self, other: &Self) -> Self {
        let off = self.n;
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(i, j)| (i + off, j + off)))
            .collect();
        Self {
            n: self.n + other.n,
            edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    acc += self.get(i, j).powi(2);
                }
            }
        }
        acc.sqrt()
    }
}

/// `L = D - A`.
pub fn laplacian(g: &UndirectedGraph) -> SymMatrix {
    let mut l = SymMatrix::zeros(g.n);
    for (i, j) in g.edges() {
        l.set(i, j, -1.0);
        l.set(j, i, -1.0);
        l.set(i, i, l.get(i, i) + 1.0);
        l.set(j, j, l.get(j, j) + 1.0);
    }
    l
}

/// Rotation sweeps allowed before giving up.
const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    let n = m.n;
    let mut a = m.clone();
    let mut sweeps = 0;
    while a.off_diagonal_norm() >= JACOBI_TOL {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NonConvergence {
                what: "Jacobi eigenvalue sweeps",
                iterations: sweeps,
                residual: a.off_diagonal_norm(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Values below this are rounding residue of a zero eigenvalue. A connected
/// graph on `n` nodes has `lambda_2 >= 4 / n^2`, far above it for any graph
/// small enough for a dense solver.
const ZERO_EIGENVALUE: f64 = 1e-10;

/// Second-smallest Laplacian eigenvalue; exactly 0 for disconnected graphs.
pub fn fiedler_value(g: &UndirectedGraph) -> Result<f64> {
    if g.n < 2 {
        return Err(Error::InvalidGraph("need at least 2 nodes".into()));
    }
    let ev = symmetric_eigenvalues(&laplacian(g))?;
    Ok(if ev[1] < ZERO_EIGENVALUE { 0.0 } else { ev[1] })
}

pub fn degree(g: &UndirectedGraph, i: usize) -> Result<usize> {
    if i >= g.n {
        return Err(Error::NodeOutOfRange { node: i, n: g.n });
    }
    Ok(g.edges().filter(|&(a, b)| a == i || b == i).count())
}

/// Sensitivity of the (algebraic connectivity, degree) query pair under
/// `k`-edge adjacency: `||(2k, k)||_2`.
pub fn query_sensitivity(k: u32) -> f64 {
    5f64.sqrt() * f64::from(k)
}

/// Baseline variances published for the comparison mechanism.
pub const GG_TABLE: [(f64, f64); 7] = [
    (0.1, 1320.0),
    (0.5, 264.0),
    (1.0, 132.0),
    (1.5, 88.0),
    (2.0, 66.0),
    (2.5, 52.8),
    (3.0, 44.0),
];

/// Every published baseline equals `GG_SCALE / epsilon`.
pub const GG_SCALE: f64 = 132.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineVariance {
    pub value: f64,
    /// True when `epsilon` is not one of the published points.
    pub extrapolated: bool,
}

pub fn gg_variance(epsilon: f64) -> Result<BaselineVariance> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    Ok(match GG_TABLE.iter().find(|&&(e, _)| e == epsilon) {
        Some(&(_, v)) => BaselineVariance {
            value: v,
            extrapolated: false,
        },
        None => BaselineVariance {
            value: GG_SCALE / epsilon,
            extrapolated: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_validation() {
        assert!(UndirectedGraph::new(3, [(0, 0)]).is_err());
        assert!(UndirectedGraph::new(3, [(0, 1), (1, 0)]).is_err());
        assert_eq!(
            UndirectedGraph::new(3, [(0, 3)]),
            Err(Error::NodeOutOfRange { node: 3, n: 3 })
        );
        assert_eq!(
            UndirectedGraph::new(3, [(2, 0)]).unwrap().edges().next(),
            Some((0, 2))
        );
    }

    #[test]
    fn laplacian_small_cases() {
        let z = laplacian(&UndirectedGraph::empty(3));
        assert!((0..3).all(|i| z.row(i).iter().all(|&v| v == 0.0)));
        let k3 = laplacian(&UndirectedGraph::complete(3));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k3.get(i, j), if i == j { 2.0 } else { -1.0 });
            }
        }
        let l = laplacian(&UndirectedGraph::star(6).disjoint_union(&UndirectedGraph::path(4)));
        for i in 0..l.dim() {
            assert_eq!(l.row(i).iter().sum::<f64>(), 0.0);
            for j in 0..l.dim() {
                assert_eq!(l.get(i, j), l.get(j, i));
            }
        }
    }

    #[test]
    fn fiedler_closed_forms() {
        assert!((fiedler_value(&UndirectedGraph::complete(10)).unwrap() - 10.0).abs() < 1e-9);
        let k5 = UndirectedGraph::complete(5);
        assert!(fiedler_value(&k5.disjoint_union(&k5)).unwrap().abs() < 1e-9);
        let p10 = fiedler_value(&UndirectedGraph::path(10)).unwrap();
        let pi = std::f64::consts::PI;
        assert!((p10 - 0.097886967409692855767).abs() < 1e-12);
        assert!((p10 - 4.0 * (pi / 20.0).sin().powi(2)).abs() < 1e-12);
        // star S_n has spectrum {0, 1 (n-2 times), n}
        assert!((fiedler_value(&UndirectedGraph::star(10)).unwrap() - 1.0).abs() < 1e-12);
        assert!(fiedler_value(&UndirectedGraph::empty(1)).is_err());
    }

    #[test]
    fn eigenvalues_of_path_match_closed_form() {
        let n = 10;
        let ev = symmetric_eigenvalues(&laplacian(&UndirectedGraph::path(n))).unwrap();
        for (k, v) in ev.iter().enumerate() {
            let want = 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos();
            assert!((v - want).abs() < 1e-12, "{k}: {v} vs {want}");
        }
    }

    #[test]
    fn degrees() {
        let k10 = UndirectedGraph::complete(10);
        assert!((0..10).all(|i| degree(&k10, i).unwrap() == 9));
        let s = UndirectedGraph::star(10);
        assert_eq!(degree(&s, 0).unwrap(), 9);
        assert_eq!(degree(&s, 4).unwrap(), 1);
        assert_eq!(
            degree(&s, 10),
            Err(Error::NodeOutOfRange { node: 10, n: 10 })
        );
    }

    #[test]
    fn sensitivity_values() {
        assert!((query_sensitivity(2) - 4.4721359549995793928).abs() < 1e-15);
        assert_eq!(query_sensitivity(1), 5f64.sqrt());
        assert_eq!(query_sensitivity(6), 2.0 * query_sensitivity(3));
    }

    #[test]
    fn baseline_table_is_inverse_epsilon() {
        for &(e, v) in &GG_TABLE {
            assert!((GG_SCALE / e - v).abs() <= 1e-12 * v, "{e}");
            assert_eq!(
                gg_variance(e).unwrap(),
                BaselineVariance {
                    value: v,
                    extrapolated: false
                }
            );
        }
        assert_eq!(gg_variance(0.1).unwrap().value, 1320.0);
        assert_eq!(gg_variance(2.0).unwrap().value, 66.0);
        let x = gg_variance(0.25).unwrap();
        assert_eq!(x.value, 528.0);
        assert!(x.extrapolated);
        assert!(gg_variance(0.0).is_err());
    }
}
