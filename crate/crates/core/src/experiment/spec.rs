use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::GraphDescriptor;
use crate::voting::{Placement, ProtocolSpec};

/// The separation constant `C = 240 sqrt(2)` of the one-step drift bound.
pub const SEPARATION_CONSTANT: f64 = 240.0 * std::f64::consts::SQRT_2;
/// `lambda <= (A1 - A2) / (LAMBDA_GAP_DIVISOR * n)` in the one-step drift bound.
pub const LAMBDA_GAP_DIVISOR: f64 = 32.0;
/// The plurality phase runs while `A1 <= (2/3) n`.
pub const GROWTH_PHASE_LIMIT: f64 = 2.0 / 3.0;
/// Endgame requires `lambda <= 1/4`.
pub const ENDGAME_LAMBDA: f64 = 0.25;
/// Endgame per-round contraction of the minority measure.
pub const ENDGAME_CONTRACTION: f64 = 7.0 / 8.0;

/// `K = 4 / ln(8/7)`: the endgame finishes within `K ln n` rounds.
pub fn endgame_round_factor() -> f64 {
    4.0 / (8.0f64 / 7.0).ln()
}

/// `ceil(K ln n)`.
pub fn endgame_round_bound(n: usize) -> u64 {
    (endgame_round_factor() * (n as f64).ln()).ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CampaignKind {
    WinProbability,
    ConsensusTime,
    OneStepDrift,
    EndgameContraction,
    #[serde(rename = "coupling-3v2")]
    Coupling3v2,
    EllSweep,
}

/// Initial opinion sizes, either absolute or as proportions of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proportions: Option<Vec<f64>>,
    #[serde(default)]
    pub placement: Placement,
}

impl InitialSpec {
    pub fn sizes(sizes: Vec<usize>) -> Self {
        InitialSpec {
            sizes: Some(sizes),
            proportions: None,
            placement: Placement::Random,
        }
    }

    pub fn proportions(p: Vec<f64>) -> Self {
        InitialSpec {
            sizes: None,
            proportions: Some(p),
            placement: Placement::Random,
        }
    }

    /// Concrete class sizes for an `n`-vertex graph. Proportions are
    /// normalised and rounded by largest remainder (ties to the lower index).
    pub fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        match (&self.sizes, &self.proportions) {
            (Some(s), None) => {
                let total: usize = s.iter().sum();
                if total != n {
                    return Err(Error::SizeMismatch { expected: n, got: total });
                }
                Ok(s.clone())
            }
            (None, Some(p)) => {
                if p.is_empty() || p.iter().any(|&x| x.is_nan() || x < 0.0) || p.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::InvalidExperiment(format!("bad proportions {p:?}")));
                }
                let total: f64 = p.iter().sum();
                let exact: Vec<f64> = p.iter().map(|x| x / total * n as f64).collect();
                let mut sizes: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
                let mut order: Vec<usize> = (0..p.len()).collect();
                order.sort_by(|&a, &b| {
                    let ra = exact[a] - exact[a].floor();
                    let rb = exact[b] - exact[b].floor();
                    rb.total_cmp(&ra).then(a.cmp(&b))
                });
                let missing = n - sizes.iter().sum::<usize>();
                for &i in order.iter().take(missing) {
                    sizes[i] += 1;
                }
                Ok(sizes)
            }
            _ => Err(Error::InvalidExperiment(
                "initial needs exactly one of `sizes` or `proportions`".into(),
            )),
        }
    }
}

fn default_trials() -> usize {
    100
}

fn default_max_rounds() -> u64 {
    1000
}

fn default_relaxed() -> f64 {
    1.0
}

fn default_dense_limit() -> usize {
    crate::spectral::DEFAULT_DENSE_LIMIT
}

/// Everything needed to reproduce a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub campaign: CampaignKind,
    pub graph: GraphDescriptor,
    pub initial: InitialSpec,
    pub protocol: ProtocolSpec,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Single-round samples for the drift and coupling estimates; defaults to `trials`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u64,
    pub seed: u64,
    /// Vertex counts for the consensus-time sweep; empty means the graph's own `n`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep_n: Vec<usize>,
    /// Walk lengths for the ell sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub walk_lengths: Vec<usize>,
    /// Two-class split for the `S_C(B') >= pi(B)/4` check in the coupling campaign.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_class_sizes: Option<Vec<usize>>,
    /// Separation constant used for the practical-regime hypothesis check.
    #[serde(default = "default_relaxed")]
    pub relaxed_constant: f64,
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
    #[serde(default)]
    pub execution: Execution,
}

impl ExperimentSpec {
    pub fn new(campaign: CampaignKind, graph: GraphDescriptor, initial: InitialSpec, protocol: ProtocolSpec, seed: u64) -> Self {
        ExperimentSpec {
            campaign,
            graph,
            initial,
            protocol,
            trials: default_trials(),
            samples: None,
            max_rounds: default_max_rounds(),
            seed,
            sweep_n: Vec::new(),
            walk_lengths: Vec::new(),
            two_class_sizes: None,
            relaxed_constant: default_relaxed(),
            dense_limit: default_dense_limit(),
            execution: Execution::default(),
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = Some(samples);
        self
    }

    pub fn with_max_rounds(mut self, max_rounds: u64) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    pub fn sample_count(&self) -> usize {
        self.samples.unwrap_or(self.trials)
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        self.graph.check()?;
        if self.trials == 0 {
            return Err(Error::InvalidExperiment("trials must be at least 1".into()));
        }
        if self.samples == Some(0) {
            return Err(Error::InvalidExperiment("samples must be at least 1".into()));
        }
        if self.walk_lengths.contains(&0) {
            return Err(Error::InvalidExperiment("walk lengths must be at least 1".into()));
        }
        if self.relaxed_constant <= 0.0 {
            return Err(Error::InvalidExperiment("relaxed_constant must be positive".into()));
        }
        Ok(())
    }
}

/// Which preconditions of the convergence bounds hold on this instance.
/// Logarithms are natural.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisBlock {
    pub n: usize,
    pub a1: usize,
    pub a2: usize,
    pub gap: usize,
    /// `Delta = pi(A1) - pi(A2)` on a regular graph.
    pub delta: f64,
    pub lambda: Option<f64>,
    pub walk_length: usize,
    /// `lambda^ell`, the spectral quantity the sampling walk sees.
    pub effective_lambda: Option<f64>,
    pub separation_constant: f64,
    pub relaxed_constant: f64,
    pub a1_at_most_two_thirds: bool,
    /// `C n sqrt(ln n / A1)` with the literal constant.
    pub gap_bound: f64,
    pub gap_ok: bool,
    pub relaxed_gap_bound: f64,
    pub relaxed_gap_ok: bool,
    /// `(A1 - A2) / (32 n)`.
    pub lambda_bound: f64,
    pub lambda_ok: Option<bool>,
    /// `A1 - A2 >= C n max(sqrt(ln n / A1), lambda^ell)` with the literal constant.
    pub separation_ok: Option<bool>,
    pub relaxed_separation_ok: Option<bool>,
    pub endgame_lambda_ok: Option<bool>,
    pub a1_at_least_two_thirds: bool,
    /// `"literal"` when every literal precondition holds, otherwise
    /// `"practical (constants relaxed)"`.
    pub regime: String,
}

impl HypothesisBlock {
    pub fn evaluate(n: usize, sizes: &[usize], lambda: Option<f64>, walk_length: usize, relaxed_constant: f64) -> Self {
        let mut sorted = sizes.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let a1 = sorted.first().copied().unwrap_or(0);
        let a2 = sorted.get(1).copied().unwrap_or(a1);
        let gap = a1 - a2;
        let nf = n as f64;
        let root = if a1 > 0 { (nf.ln() / a1 as f64).sqrt() } else { f64::INFINITY };
        let gap_bound = SEPARATION_CONSTANT * nf * root;
        let relaxed_gap_bound = relaxed_constant * nf * root;
        let lambda_bound = gap as f64 / (LAMBDA_GAP_DIVISOR * nf);
        let effective = lambda.map(|l| l.powi(walk_length as i32));
        let separation = |c: f64| effective.map(|e| gap as f64 >= c * nf * root.max(e));
        let lambda_ok = effective.map(|e| e <= lambda_bound);
        let a1_at_most = a1 as f64 <= GROWTH_PHASE_LIMIT * nf;
        let gap_ok = gap as f64 >= gap_bound;
        let literal = a1_at_most && gap_ok && lambda_ok == Some(true);
        HypothesisBlock {
            n,
            a1,
            a2,
            gap,
            delta: gap as f64 / nf,
            lambda,
            walk_length,
            effective_lambda: effective,
            separation_constant: SEPARATION_CONSTANT,
            relaxed_constant,
            a1_at_most_two_thirds: a1_at_most,
            gap_bound,
            gap_ok,
            relaxed_gap_bound,
            relaxed_gap_ok: gap as f64 >= relaxed_gap_bound,
            lambda_bound,
            lambda_ok,
            separation_ok: separation(SEPARATION_CONSTANT),
            relaxed_separation_ok: separation(relaxed_constant),
            endgame_lambda_ok: effective.map(|e| e <= ENDGAME_LAMBDA),
            a1_at_least_two_thirds: a1 as f64 >= GROWTH_PHASE_LIMIT * nf,
            regime: if literal {
                "literal".into()
            } else {
                "practical (constants relaxed)".into()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportions_round_by_largest_remainder() {
        let s = InitialSpec::proportions(vec![0.5, 0.3, 0.2]);
        assert_eq!(s.resolve(1000).unwrap(), vec![500, 300, 200]);
        assert_eq!(s.resolve(7).unwrap().iter().sum::<usize>(), 7);
        assert_eq!(s.resolve(7).unwrap(), vec![4, 2, 1]);
        assert!(InitialSpec::sizes(vec![3, 3]).resolve(7).is_err());
        assert!(InitialSpec::proportions(vec![]).resolve(7).is_err());
    }

    #[test]
    fn constants() {
        assert!((SEPARATION_CONSTANT - 339.411_254_969_542_8).abs() < 1e-9);
        assert_eq!(endgame_round_bound(1000), 207);
    }

    #[test]
    fn hypotheses_on_complete_graph() {
        // lambda = 0: the spectral conditions hold, the separation needs huge n
        let h = HypothesisBlock::evaluate(10_000, &[4000, 3000, 3000], Some(0.0), 1, 1.0);
        assert!(h.a1_at_most_two_thirds);
        assert_eq!(h.lambda_ok, Some(true));
        assert!(!h.gap_ok);
        assert!(h.relaxed_gap_ok);
        assert_eq!(h.regime, "practical (constants relaxed)");
        let h = HypothesisBlock::evaluate(1000, &[700, 300], Some(0.6), 2, 1.0);
        assert!((h.effective_lambda.unwrap() - 0.36).abs() < 1e-15);
        assert_eq!(h.endgame_lambda_ok, Some(false));
        assert!(h.a1_at_least_two_thirds);
    }
}
