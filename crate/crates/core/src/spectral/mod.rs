//! Stationary distribution, absolute second eigenvalue, and the drift
//! functionals of the simple random walk.
//!
//! For a graph with transition matrix `P = D^-1 A` the walk is reversible
//! with `pi(x) = d(x) / vol`, where `vol` is the sum of degrees. The
//! spectrum of `P` equals that of the symmetric matrix `D^1/2 P D^-1/2`,
//! which is what both eigensolvers work on.

mod functionals;
mod inequalities;
mod sets;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub use functionals::{
    drift_r, drift_s, expected_change, expected_change_all, flow_q, flow_q2, neighbor_fraction,
};
pub use inequalities::{
    check_instance, check_section2, random_partition, random_subset, CheckKind, InequalityCheck,
    InequalityReport, InequalitySummary, IDENTITY_TOLERANCE, INEQUALITY_TOLERANCE,
};
pub use sets::{Partition, VertexSet};
pub(crate) use functionals::agreement_probability;

/// Graphs up to this size use the dense eigensolver by default.
pub const DEFAULT_DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub tol: f64,
    pub dense_limit: usize,
    pub max_iterations: usize,
    /// Force one solver regardless of size.
    pub method: Option<EigenMethod>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-12,
            dense_limit: DEFAULT_DENSE_LIMIT,
            max_iterations: 200_000,
            method: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub pi: Vec<f64>,
    pub lambda: f64,
    pub method: EigenMethod,
    pub residual: f64,
}

impl SpectralProfile {
    pub fn compute(g: &Graph, opts: &EigenOptions) -> Result<Self> {
        let pi = stationary(g)?;
        let est = second_eigenvalue_with(g, opts)?;
        Ok(SpectralProfile {
            pi,
            lambda: est.lambda,
            method: est.method,
            residual: est.residual,
        })
    }
}

/// `pi(x) = d(x) / sum_y d(y)`.
pub fn stationary(g: &Graph) -> Result<Vec<f64>> {
    if !g.validate().connected {
        return Err(Error::Disconnected);
    }
    let vol = g.volume() as f64;
    Ok((0..g.n()).map(|x| g.degree(x) as f64 / vol).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lambda: f64,
    pub method: EigenMethod,
    pub residual: f64,
    pub iterations: usize,
}

/// `lambda = max(|lambda_2|, |lambda_n|)` with the default solver choice.
pub fn second_eigenvalue(g: &Graph, tol: f64) -> Result<f64> {
    let opts = EigenOptions {
        tol,
        ..EigenOptions::default()
    };
    second_eigenvalue_with(g, &opts).map(|e| e.lambda)
}

pub fn second_eigenvalue_with(g: &Graph, opts: &EigenOptions) -> Result<LambdaEstimate> {
    let report = g.validate();
    if !report.connected {
        return Err(Error::Disconnected);
    }
    if report.bipartite {
        return Err(Error::Bipartite);
    }
    let method = opts.method.unwrap_or(if g.n() <= opts.dense_limit {
        EigenMethod::Dense
    } else {
        EigenMethod::Iterative
    });
    match method {
        EigenMethod::Dense => Ok(dense_lambda(g)),
        EigenMethod::Iterative => iterative_lambda(g, opts.tol, opts.max_iterations),
    }
}

/// Dense symmetric matrix `D^-1/2 A D^-1/2`.
pub fn symmetrized_walk_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n).map(|x| 1.0 / (g.degree(x) as f64).sqrt()).collect();
    let mut s = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in g.neighbors(x) {
            s[(x, y)] = inv_sqrt[x] * inv_sqrt[y];
        }
    }
    s
}

/// Full eigendecomposition; the residual is the distance of the top
/// eigenvalue from 1.
pub fn dense_lambda(g: &Graph) -> LambdaEstimate {
    let n = g.n();
    let mut evals: Vec<f64> = SymmetricEigen::new(symmetrized_walk_matrix(g))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    evals.sort_by(f64::total_cmp);
    let top = evals[n - 1];
    let lambda = if n == 1 {
        0.0
    } else {
        evals[n - 2].abs().max(evals[0].abs())
    };
    LambdaEstimate {
        lambda,
        method: EigenMethod::Dense,
        residual: (top - 1.0).abs(),
        iterations: 0,
    }
}

/// `y = S x` for `S = D^-1/2 A D^-1/2`.
fn apply_symmetrized(g: &Graph, inv_sqrt: &[f64], x: &[f64], y: &mut [f64]) {
    if g.is_complete_with_loops() {
        let mean = x.iter().sum::<f64>() / g.n() as f64;
        y.fill(mean);
        return;
    }
    for (u, out) in y.iter_mut().enumerate() {
        let acc: f64 = g.neighbors(u).map(|v| x[v] * inv_sqrt[v]).sum();
        *out = acc * inv_sqrt[u];
    }
}

fn deflate(x: &mut [f64], top: &[f64]) {
    let c: f64 = x.iter().zip(top).map(|(a, b)| a * b).sum();
    for (xi, ti) in x.iter_mut().zip(top) {
        *xi -= c * ti;
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Power iteration on `S^2` restricted to the complement of the top
/// eigenvector `sqrt(d)/|sqrt(d)|`. The Rayleigh quotient converges to
/// `lambda^2` from below; iteration stops when two successive quotients
/// differ by less than `tol`.
pub fn iterative_lambda(g: &Graph, tol: f64, max_iterations: usize) -> Result<LambdaEstimate> {
    let n = g.n();
    if n == 1 {
        return Ok(LambdaEstimate {
            lambda: 0.0,
            method: EigenMethod::Iterative,
            residual: 0.0,
            iterations: 0,
        });
    }
    let inv_sqrt: Vec<f64> = (0..n).map(|x| 1.0 / (g.degree(x) as f64).sqrt()).collect();
    let vol = g.volume() as f64;
    let top: Vec<f64> = (0..n).map(|x| (g.degree(x) as f64 / vol).sqrt()).collect();

    let mut rng = crate::rng::stream(0x5eed_1a4b_da00, n as u64);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    deflate(&mut x, &top);
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut sx = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut last_change = f64::INFINITY;
    for it in 1..=max_iterations {
        apply_symmetrized(g, &inv_sqrt, &x, &mut sx);
        apply_symmetrized(g, &inv_sqrt, &sx, &mut y);
        deflate(&mut y, &top);
        // x is a unit vector, so x.S^2 x = |S x|^2 up to the deflated part.
        let theta: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ny = norm(&y);
        let converged = (theta - prev).abs() < tol;
        last_change = (theta - prev).abs();
        if ny == 0.0 || converged {
            let residual = if ny == 0.0 {
                0.0
            } else {
                y.iter()
                    .zip(&x)
                    .map(|(a, b)| (a - theta * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            return Ok(LambdaEstimate {
                lambda: theta.max(0.0).sqrt(),
                method: EigenMethod::Iterative,
                residual,
                iterations: it,
            });
        }
        prev = theta;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iterations,
        last_change,
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::graph::{new_complete_with_loops, new_odd_cycle, new_random_regular};
    use approx::assert_abs_diff_eq;

    fn k3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    /// Eigenvalues of the symmetric walk matrix by cyclic Jacobi rotations;
    /// independent of nalgebra and of the power iteration.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn oracle_lambda(g: &Graph) -> f64 {
        let n = g.n();
        let mut a = vec![vec![0.0; n]; n];
        for x in 0..n {
            for y in g.neighbors(x) {
                a[x][y] = 1.0 / ((g.degree(x) * g.degree(y)) as f64).sqrt();
            }
        }
        let ev = jacobi_eigenvalues(a);
        ev[n - 2].abs().max(ev[0].abs())
    }

    #[test]
    fn stationary_examples() {
        for p in stationary(&k3()).unwrap() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let pi = stationary(&star).unwrap();
        assert_eq!(pi, vec![0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
        let pi = stationary(&new_complete_with_loops(4).unwrap()).unwrap();
        assert!(pi.iter().all(|&p| p == 0.25));
        let two = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(stationary(&two), Err(Error::Disconnected)));
    }

    #[test]
    fn triangle_lambda_is_half() {
        // spectrum of P for K3 is {1, -1/2, -1/2}
        assert_abs_diff_eq!(oracle_lambda(&k3()), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(second_eigenvalue(&k3(), 1e-12).unwrap(), 0.5, epsilon = 1e-12);
        let it = iterative_lambda(&k3(), 1e-14, 1000).unwrap();
        assert_abs_diff_eq!(it.lambda, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn cycle_closed_form() {
        for n in [5usize, 7, 9, 15] {
            let g = new_odd_cycle(n).unwrap();
            // circulant spectrum cos(2 pi k / n); the largest modulus below 1
            // is |cos(pi (n-1) / n)| = cos(pi / n)
            let closed = (std::f64::consts::PI / n as f64).cos();
            assert_abs_diff_eq!(oracle_lambda(&g), closed, epsilon = 1e-10);
            assert_abs_diff_eq!(dense_lambda(&g).lambda, closed, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(
            second_eigenvalue(&new_odd_cycle(5).unwrap(), 1e-12).unwrap(),
            0.809_016_994_374_947_5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn complete_with_loops_has_zero_lambda() {
        for n in [1usize, 2, 5, 20] {
            let g = new_complete_with_loops(n).unwrap();
            assert!(dense_lambda(&g).lambda < 1e-12);
            assert!(iterative_lambda(&g, 1e-12, 100).unwrap().lambda < 1e-12);
        }
    }

    #[test]
    fn bipartite_and_disconnected_rejected() {
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(matches!(second_eigenvalue(&c4, 1e-9), Err(Error::Bipartite)));
        let two = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        assert!(matches!(second_eigenvalue(&two, 1e-9), Err(Error::Disconnected)));
    }

    #[test]
    fn solvers_agree_with_jacobi_on_small_regular_graphs() {
        for seed in 0..4 {
            let g = new_random_regular(40, 4, seed).unwrap();
            let oracle = oracle_lambda(&g);
            assert_abs_diff_eq!(dense_lambda(&g).lambda, oracle, epsilon = 1e-10);
            let it = iterative_lambda(&g, 1e-14, 200_000).unwrap();
            assert_abs_diff_eq!(it.lambda, oracle, epsilon = 1e-8);
        }
    }

    #[test]
    fn non_regular_graph_lambda() {
        // triangle with a pendant vertex: irregular, non-bipartite
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (0, 2), (0, 3)]).unwrap();
        let oracle = oracle_lambda(&g);
        assert_abs_diff_eq!(dense_lambda(&g).lambda, oracle, epsilon = 1e-10);
        assert_abs_diff_eq!(iterative_lambda(&g, 1e-15, 100_000).unwrap().lambda, oracle, epsilon = 1e-8);
    }

    #[test]
    fn iteration_cap_reported() {
        let g = new_random_regular(60, 3, 2).unwrap();
        assert!(matches!(
            iterative_lambda(&g, 0.0, 5),
            Err(Error::NoConvergence { iterations: 5, .. })
        ));
    }
}
