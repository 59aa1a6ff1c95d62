//! Mechanical check of the mixing inequalities and drift bounds on concrete
//! subsets and partitions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::functionals::{drift_r, drift_s, flow_q, flow_q2};
use super::{Partition, VertexSet};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{derive, stream, StreamRng};

/// An inequality fails when its slack is below `-INEQUALITY_TOLERANCE`.
pub const INEQUALITY_TOLERANCE: f64 = 1e-9;
/// An identity fails when its two sides differ by more than this.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `lhs <= rhs`
    Upper,
    /// `lhs >= rhs`
    Lower,
    /// `lhs == rhs`
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    /// Non-negative when the relation holds exactly; for identities `-|lhs - rhs|`.
    pub slack: f64,
    pub instance_seed: u64,
    pub passed: bool,
}

impl InequalityCheck {
    fn new(name: &str, kind: CheckKind, lhs: f64, rhs: f64, instance_seed: u64) -> Self {
        let (slack, passed) = match kind {
            CheckKind::Upper => (rhs - lhs, rhs - lhs >= -INEQUALITY_TOLERANCE),
            CheckKind::Lower => (lhs - rhs, lhs - rhs >= -INEQUALITY_TOLERANCE),
            CheckKind::Identity => {
                let d = (lhs - rhs).abs();
                (-d, d <= IDENTITY_TOLERANCE)
            }
        };
        InequalityCheck {
            name: name.to_string(),
            kind,
            lhs,
            rhs,
            slack,
            instance_seed,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySummary {
    pub name: String,
    pub evaluated: usize,
    pub violations: usize,
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub n: usize,
    pub lambda: f64,
    pub samples: usize,
    pub seed: u64,
    pub inequality_tolerance: f64,
    pub identity_tolerance: f64,
    pub violations: usize,
    pub summary: Vec<InequalitySummary>,
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn from_checks(n: usize, lambda: f64, samples: usize, seed: u64, checks: Vec<InequalityCheck>) -> Self {
        let mut summary: Vec<InequalitySummary> = Vec::new();
        for c in &checks {
            let entry = match summary.iter_mut().find(|s| s.name == c.name) {
                Some(s) => s,
                None => {
                    summary.push(InequalitySummary {
                        name: c.name.clone(),
                        evaluated: 0,
                        violations: 0,
                        min_slack: f64::INFINITY,
                    });
                    summary.last_mut().unwrap()
                }
            };
            entry.evaluated += 1;
            entry.violations += usize::from(!c.passed);
            entry.min_slack = entry.min_slack.min(c.slack);
        }
        InequalityReport {
            n,
            lambda,
            samples,
            seed,
            inequality_tolerance: INEQUALITY_TOLERANCE,
            identity_tolerance: IDENTITY_TOLERANCE,
            violations: checks.iter().filter(|c| !c.passed).count(),
            summary,
            checks,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.violations == 0
    }

    /// Turn the first violation into an error.
    pub fn ensure_clean(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => Err(Error::Violation(format!(
                "{} (lhs {:.6e}, rhs {:.6e}, slack {:.3e}, instance seed {})",
                c.name, c.lhs, c.rhs, c.slack, c.instance_seed
            ))),
        }
    }
}

/// Each vertex joins independently with a probability drawn from {0.1, ..., 0.9}.
pub fn random_subset(n: usize, rng: &mut StreamRng) -> VertexSet {
    let p = rng.random_range(1..=9) as f64 / 10.0;
    VertexSet::from_indices(n, (0..n).filter(|_| rng.random_bool(p)))
}

/// `k` uniform in `1..=min(6, n)`; class weights are normalised Exp(1)
/// draws (a flat Dirichlet), vertices assigned independently by weight.
pub fn random_partition(n: usize, rng: &mut StreamRng) -> Partition {
    let k = rng.random_range(1..=n.clamp(1, 6));
    let weights: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = weights.iter().sum();
    let labels: Vec<u32> = (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    return i as u32;
                }
                u -= w;
            }
            (k - 1) as u32
        })
        .collect();
    Partition::from_labels(&labels)
}

/// Every relation on one instance `(A, B, C)`.
pub fn check_instance(
    g: &Graph,
    pi: &[f64],
    lambda: f64,
    a: &VertexSet,
    b: &VertexSet,
    c: &Partition,
    instance_seed: u64,
) -> Vec<InequalityCheck> {
    use CheckKind::*;
    let n = g.n();
    let v = VertexSet::full(n);
    let ac = a.complement();
    let bc = b.complement();
    let (pa, pb, pac, pbc) = (a.measure(pi), b.measure(pi), ac.measure(pi), bc.measure(pi));
    let l2 = lambda * lambda;
    let mut out = Vec::with_capacity(16);
    let mut push = |name: &str, kind, lhs, rhs| out.push(InequalityCheck::new(name, kind, lhs, rhs, instance_seed));

    let q_ab = flow_q(g, pi, a, b);
    let q_aac = flow_q(g, pi, a, &ac);
    push("flow-row-sum", Identity, flow_q(g, pi, a, &v), pa);
    push("reversibility", Identity, q_ab, flow_q(g, pi, b, a));

    push("mixing-cut", Upper, (q_aac - pa * pac).abs(), lambda * pa * pac);
    push("mixing", Upper, (q_ab - pa * pb).abs(), lambda * (pa * pb * pac * pbc).sqrt());

    let papb = pa * pb;
    push(
        "flow-squared-lower",
        Lower,
        q_ab * q_ab,
        papb * papb - 2.0 * lambda * papb.powf(1.5) * (pac * pbc).sqrt(),
    );

    let r_va = drift_r(g, pi, &v, a);
    let q2_aa = flow_q2(g, pi, a, a);
    let q2_aac = flow_q2(g, pi, a, &ac);
    push("drift-equals-two-step-flow", Identity, r_va, q2_aa);
    push("two-step-row-sum", Identity, q2_aa + q2_aac, pa);
    push(
        "drift-deviation-identity",
        Identity,
        (r_va - pa * pa).abs(),
        (q2_aac - pa * pac).abs(),
    );
    push("drift-deviation", Upper, (r_va - pa * pa).abs(), l2 * pa * pac);

    let r_ab = drift_r(g, pi, a, b);
    let convex = if pa > 0.0 { q_ab * q_ab / pa } else { 0.0 };
    push("drift-convexity-lower", Lower, r_ab, convex);
    push(
        "drift-lower",
        Lower,
        r_ab,
        pa * pb * pb - 2.0 * lambda * pa.sqrt() * pb.powf(1.5) * pac.sqrt() * pbc.sqrt(),
    );

    let class_pi = c.measures(pi);
    let sq: f64 = class_pi.iter().map(|p| p * p).sum();
    let three_halves: f64 = class_pi.iter().map(|p| p.powf(1.5)).sum();
    let s_v = drift_s(g, pi, c, &v);
    let s_a = drift_s(g, pi, c, a);
    let s_ac = drift_s(g, pi, c, &ac);
    push("agreement-additivity", Identity, s_a + s_ac, s_v);
    push("agreement-total", Upper, (s_v - sq).abs(), l2 * (1.0 - sq));

    let centre = pa * sq;
    let spread = 2.0 * lambda * pa.sqrt() * pac.sqrt() * three_halves;
    push("agreement-lower", Lower, s_a, centre - spread);
    push("agreement-upper", Upper, s_a, centre + spread + l2 * (1.0 - sq));
    push("agreement-upper-loose", Upper, s_a, centre + spread + l2);
    out
}

/// Draw `samples` random instances and check every relation on each.
/// Instance `i` uses seed `derive(seed, i)`, recorded on each check.
pub fn check_section2(g: &Graph, pi: &[f64], lambda: f64, samples: usize, seed: u64) -> InequalityReport {
    let n = g.n();
    let mut checks = Vec::new();
    for i in 0..samples {
        let instance_seed = derive(seed, i as u64);
        let mut rng = stream(instance_seed, 0);
        let a = random_subset(n, &mut rng);
        let b = random_subset(n, &mut rng);
        let c = random_partition(n, &mut rng);
        checks.extend(check_instance(g, pi, lambda, &a, &b, &c, instance_seed));
    }
    InequalityReport::from_checks(n, lambda, samples, seed, checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{new_complete_with_loops, new_odd_cycle, new_random_regular};
    use crate::spectral::{second_eigenvalue, stationary};

    fn k3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn find<'a>(checks: &'a [InequalityCheck], name: &str) -> &'a InequalityCheck {
        checks.iter().find(|c| c.name == name).unwrap()
    }

    #[test]
    fn triangle_cut_is_tight() {
        let g = k3();
        let pi = stationary(&g).unwrap();
        let a = VertexSet::from_indices(3, [0]);
        let c = Partition::from_labels(&[0, 1, 1]);
        let checks = check_instance(&g, &pi, 0.5, &a, &a.complement(), &c, 0);
        let cut = find(&checks, "mixing-cut");
        assert!((cut.lhs - 1.0 / 9.0).abs() < 1e-15);
        assert!((cut.rhs - 1.0 / 9.0).abs() < 1e-15);
        assert!(cut.passed);
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
    }

    #[test]
    fn complete_graph_is_exact_at_zero_lambda() {
        let g = new_complete_with_loops(20).unwrap();
        let pi = stationary(&g).unwrap();
        let rep = check_section2(&g, &pi, 0.0, 50, 3);
        assert!(rep.is_clean());
        for c in rep.checks.iter().filter(|c| c.name == "drift-deviation") {
            assert!(c.lhs.abs() < 1e-15);
        }
    }

    #[test]
    fn regular_graph_has_no_violations() {
        let g = new_random_regular(50, 4, 11).unwrap();
        let pi = stationary(&g).unwrap();
        let lambda = second_eigenvalue(&g, 1e-12).unwrap();
        let rep = check_section2(&g, &pi, lambda, 100, 5);
        rep.ensure_clean().unwrap();
        assert_eq!(rep.checks.len(), 100 * rep.summary.len());
    }

    #[test]
    fn wrong_lambda_is_caught() {
        let g = k3();
        let pi = stationary(&g).unwrap();
        let rep = check_section2(&g, &pi, 0.0, 100, 1);
        assert!(!rep.is_clean());
        assert!(rep.ensure_clean().is_err());
        let g = new_odd_cycle(5).unwrap();
        let pi = stationary(&g).unwrap();
        assert!(check_section2(&g, &pi, 0.8090169943749475, 100, 1).is_clean());
    }

    #[test]
    fn partitions_cover() {
        let mut rng = stream(1, 2);
        for _ in 0..20 {
            let p = random_partition(17, &mut rng);
            let total: usize = p.classes().iter().map(VertexSet::len).sum();
            assert_eq!(total, 17);
            assert!(p.k() >= 1 && p.k() <= 6);
        }
    }
}
