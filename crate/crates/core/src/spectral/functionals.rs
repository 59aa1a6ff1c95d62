//! Flow and drift functionals, evaluated exactly from adjacency counts.
//!
//! * `Q(A,B)  = sum_{x in A} pi(x) P(x,B)`
//! * `Q2(A,B) = sum_{x in A} pi(x) P^2(x,B)`
//! * `R(A,B)  = sum_{x in A} pi(x) P(x,B)^2`
//! * `S_C(A)  = sum_i R(A, A_i)` for a partition `C = (A_1, ..., A_k)`

use super::{Partition, VertexSet};
use crate::graph::Graph;

/// `P(x, B) = |adj(x) & B| / d(x)`.
#[inline]
pub fn neighbor_fraction(g: &Graph, x: usize, b: &VertexSet) -> f64 {
    let hits = if g.is_complete_with_loops() {
        b.len()
    } else {
        g.neighbors(x).filter(|&y| b.contains(y)).count()
    };
    hits as f64 / g.degree(x) as f64
}

pub fn flow_q(g: &Graph, pi: &[f64], a: &VertexSet, b: &VertexSet) -> f64 {
    a.iter().map(|x| pi[x] * neighbor_fraction(g, x, b)).sum()
}

/// Two-hop evaluation: tabulate `P(z, B)` once, then average it over the
/// neighbours of each `x in A`. Never forms `P^2`.
pub fn flow_q2(g: &Graph, pi: &[f64], a: &VertexSet, b: &VertexSet) -> f64 {
    if g.is_complete_with_loops() {
        let frac = b.len() as f64 / g.n() as f64;
        return a.measure(pi) * frac;
    }
    let one_step: Vec<f64> = (0..g.n()).map(|z| neighbor_fraction(g, z, b)).collect();
    a.iter()
        .map(|x| {
            let two_step: f64 = g.neighbors(x).map(|z| one_step[z]).sum::<f64>() / g.degree(x) as f64;
            pi[x] * two_step
        })
        .sum()
}

pub fn drift_r(g: &Graph, pi: &[f64], a: &VertexSet, b: &VertexSet) -> f64 {
    a.iter()
        .map(|x| {
            let p = neighbor_fraction(g, x, b);
            pi[x] * p * p
        })
        .sum()
}

/// Per-vertex class histogram of the neighbourhood; returns
/// `sum_i P(x, A_i)^2`. `scratch` must have length `k` and be all zeros;
/// it is left zeroed.
pub(crate) fn agreement_probability(
    g: &Graph,
    labels: &[u32],
    x: usize,
    scratch: &mut [u32],
    touched: &mut Vec<u32>,
) -> f64 {
    let d = g.degree(x) as f64;
    touched.clear();
    for y in g.neighbors(x) {
        let l = labels[y];
        if scratch[l as usize] == 0 {
            touched.push(l);
        }
        scratch[l as usize] += 1;
    }
    let mut acc = 0.0;
    for &l in touched.iter() {
        let c = scratch[l as usize] as f64;
        acc += c * c;
        scratch[l as usize] = 0;
    }
    acc / (d * d)
}

/// `S_C(A)` in one pass over the adjacency of `A`.
pub fn drift_s(g: &Graph, pi: &[f64], partition: &Partition, a: &VertexSet) -> f64 {
    if g.is_complete_with_loops() {
        let n = g.n() as f64;
        let sq: f64 = partition
            .classes()
            .iter()
            .map(|c| (c.len() as f64 / n).powi(2))
            .sum();
        return a.measure(pi) * sq;
    }
    let labels = partition.labels();
    let mut scratch = vec![0u32; partition.k()];
    let mut touched = Vec::new();
    a.iter()
        .map(|x| pi[x] * agreement_probability(g, labels, x, &mut scratch, &mut touched))
        .sum()
}

/// Expected measure of class `j` after one two-sample round:
/// `pi(A_j) + R(V, A_j) - S_C(A_j)`.
pub fn expected_change(g: &Graph, pi: &[f64], partition: &Partition, j: usize) -> f64 {
    let aj = partition.class(j);
    let everything = VertexSet::full(g.n());
    aj.measure(pi) + drift_r(g, pi, &everything, aj) - drift_s(g, pi, partition, aj)
}

pub fn expected_change_all(g: &Graph, pi: &[f64], partition: &Partition) -> Vec<f64> {
    (0..partition.k())
        .map(|j| expected_change(g, pi, partition, j))
        .collect()
}
