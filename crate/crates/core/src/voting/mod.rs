//! Round-synchronous pull voting.
//!
//! In a round every vertex draws its samples from the current configuration
//! and all vertices switch at once. Samples are independent and with
//! replacement; a sample is the endpoint of a walk of `walk_length` uniform
//! neighbour steps (one step = plain neighbour sampling). A vertex only
//! samples itself through a self-loop.
//!
//! Vertex `v` in round `t` of a run seeded with `s` draws from
//! [`crate::rng::vertex_stream`]`(s, t, v)`, so a run is a pure function of
//! its seed whatever the execution mode.

mod trace;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{bfs_order, Graph};
use crate::rng::{stream, vertex_stream, StreamRng};

pub use trace::{Outcome, RunTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Adopt the opinion of one sampled vertex.
    OneSample,
    /// Adopt the common opinion of two samples if they agree, else keep.
    TwoSample,
    /// Adopt the majority of three samples; without a majority apply the tie-break.
    ThreeSample,
}

/// What a three-sample vertex does when all three samples differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Take the first sample's opinion (the standard rule).
    #[default]
    FirstSample,
    /// Keep the current opinion. Experimental variant, off by default.
    KeepOwn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub rule: Rule,
    #[serde(default = "one")]
    pub walk_length: usize,
    #[serde(default)]
    pub tie_break: TieBreak,
}

fn one() -> usize {
    1
}

impl ProtocolSpec {
    pub fn new(rule: Rule) -> Self {
        ProtocolSpec {
            rule,
            walk_length: 1,
            tie_break: TieBreak::FirstSample,
        }
    }

    pub fn one_sample() -> Self {
        Self::new(Rule::OneSample)
    }

    pub fn two_sample() -> Self {
        Self::new(Rule::TwoSample)
    }

    pub fn three_sample() -> Self {
        Self::new(Rule::ThreeSample)
    }

    pub fn with_walk_length(self, walk_length: usize) -> Self {
        ProtocolSpec { walk_length, ..self }
    }

    pub fn with_tie_break(self, tie_break: TieBreak) -> Self {
        ProtocolSpec { tie_break, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.walk_length == 0 {
            return Err(Error::InvalidExperiment("walk_length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Opinion of every vertex plus per-class counts. Labels are `0..k` and are
/// never renumbered; a class may become empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpinionConfig {
    opinion: Vec<u32>,
    sizes: Vec<usize>,
    round: u64,
}

impl OpinionConfig {
    /// `k` is the number of labels, which may exceed the number present.
    pub fn new(opinion: Vec<u32>, k: usize) -> Result<Self> {
        let mut sizes = vec![0usize; k];
        for &o in &opinion {
            let slot = sizes.get_mut(o as usize).ok_or_else(|| {
                Error::InvalidExperiment(format!("opinion label {o} outside 0..{k}"))
            })?;
            *slot += 1;
        }
        Ok(OpinionConfig {
            opinion,
            sizes,
            round: 0,
        })
    }

    pub fn unanimous(n: usize) -> Self {
        OpinionConfig {
            opinion: vec![0; n],
            sizes: vec![n],
            round: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.opinion.len()
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn opinions(&self) -> &[u32] {
        &self.opinion
    }

    pub fn opinion(&self, v: usize) -> u32 {
        self.opinion[v]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// The winning label once one class holds every vertex.
    pub fn consensus(&self) -> Option<u32> {
        let n = self.n();
        self.sizes.iter().position(|&s| s == n).map(|i| i as u32)
    }
}

/// Initial arrangement of opinions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Uniformly random labelling with exactly the requested class sizes.
    #[default]
    Random,
    /// Each class grown as a breadth-first ball inside the still unassigned
    /// vertices; clusters opinions as tightly as the graph allows.
    AdversarialBall,
}

pub fn place_opinions(g: &Graph, sizes: &[usize], placement: Placement, seed: u64) -> Result<OpinionConfig> {
    let n = g.n();
    let total: usize = sizes.iter().sum();
    if total != n {
        return Err(Error::SizeMismatch { expected: n, got: total });
    }
    let opinion = match placement {
        Placement::Random => {
            let mut labels: Vec<u32> = sizes
                .iter()
                .enumerate()
                .flat_map(|(i, &s)| std::iter::repeat_n(i as u32, s))
                .collect();
            let mut rng = stream(seed, 0x706c_6163_6500);
            rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
            labels
        }
        Placement::AdversarialBall => ball_labels(g, sizes),
    };
    OpinionConfig::new(opinion, sizes.len())
}

fn ball_labels(g: &Graph, sizes: &[usize]) -> Vec<u32> {
    let n = g.n();
    let mut label = vec![u32::MAX; n];
    let global = bfs_order(g, 0);
    let mut cursor = 0;
    let mut queue = std::collections::VecDeque::new();
    let mut queued = vec![false; n];
    for (class, &size) in sizes.iter().enumerate() {
        let mut placed = 0;
        queue.clear();
        while placed < size {
            let u = match queue.pop_front() {
                Some(u) => u,
                None => {
                    // grow a fresh ball from the next free vertex in global BFS order
                    while label[global[cursor]] != u32::MAX || queued[global[cursor]] {
                        cursor += 1;
                    }
                    queued[global[cursor]] = true;
                    global[cursor]
                }
            };
            if label[u] != u32::MAX {
                continue;
            }
            label[u] = class as u32;
            placed += 1;
            for v in g.neighbors(u) {
                if label[v] == u32::MAX && !queued[v] {
                    queued[v] = true;
                    queue.push_back(v);
                }
            }
        }
        // vertices queued but not used by this class become free again
        for &v in queue.iter() {
            queued[v] = false;
        }
    }
    label
}

/// Endpoint of a walk of `walk_length` uniform neighbour steps from `v`.
#[inline]
pub fn sample_endpoint(g: &Graph, v: usize, walk_length: usize, rng: &mut impl Rng) -> usize {
    let mut at = v;
    for _ in 0..walk_length {
        at = g.neighbor(at, rng.random_range(0..g.degree(at)));
    }
    at
}

/// New opinion of `v` and the opinion of its first sample.
#[inline]
fn update_vertex(g: &Graph, opinion: &[u32], v: usize, protocol: &ProtocolSpec, rng: &mut StreamRng) -> (u32, u32) {
    let ell = protocol.walk_length;
    let first = opinion[sample_endpoint(g, v, ell, rng)];
    let next = match protocol.rule {
        Rule::OneSample => first,
        Rule::TwoSample => {
            let second = opinion[sample_endpoint(g, v, ell, rng)];
            if first == second {
                first
            } else {
                opinion[v]
            }
        }
        Rule::ThreeSample => {
            let second = opinion[sample_endpoint(g, v, ell, rng)];
            let third = opinion[sample_endpoint(g, v, ell, rng)];
            if second == third {
                second
            } else if first == second || first == third {
                first
            } else {
                match protocol.tie_break {
                    TieBreak::FirstSample => first,
                    TieBreak::KeepOwn => opinion[v],
                }
            }
        }
    };
    (next, first)
}

fn recount(prev: &OpinionConfig, opinion: Vec<u32>) -> OpinionConfig {
    let mut sizes = prev.sizes.clone();
    for (old, new) in prev.opinion.iter().zip(&opinion) {
        if old != new {
            sizes[*old as usize] -= 1;
            sizes[*new as usize] += 1;
        }
    }
    OpinionConfig {
        opinion,
        sizes,
        round: prev.round + 1,
    }
}

/// One synchronous round. Reads only `config`, writes a fresh configuration.
pub fn step(g: &Graph, config: &OpinionConfig, protocol: &ProtocolSpec, seed: u64, exec: Execution) -> OpinionConfig {
    let round = config.round;
    let current = &config.opinion;
    let mut next = vec![0u32; config.n()];
    exec.fill(&mut next, |v| {
        let mut rng = vertex_stream(seed, round, v as u64);
        update_vertex(g, current, v, protocol, &mut rng).0
    });
    recount(config, next)
}

/// One round that also returns each vertex's first-sample opinion, the
/// one-sample layer `A_j'` inside a three-sample round.
pub fn step_with_first_samples(
    g: &Graph,
    config: &OpinionConfig,
    protocol: &ProtocolSpec,
    seed: u64,
    exec: Execution,
) -> (OpinionConfig, Vec<u32>) {
    let round = config.round;
    let current = &config.opinion;
    let mut pairs = vec![(0u32, 0u32); config.n()];
    exec.fill(&mut pairs, |v| {
        let mut rng = vertex_stream(seed, round, v as u64);
        update_vertex(g, current, v, protocol, &mut rng)
    });
    let (next, first): (Vec<u32>, Vec<u32>) = pairs.into_iter().unzip();
    (recount(config, next), first)
}

/// Iterate rounds until consensus or `max_rounds`, recording class sizes
/// after every round (round 0 included).
pub fn run(
    g: &Graph,
    initial: &OpinionConfig,
    protocol: &ProtocolSpec,
    max_rounds: u64,
    seed: u64,
    exec: Execution,
) -> RunTrace {
    let mut sizes = vec![initial.sizes.clone()];
    let mut config = initial.clone();
    while config.consensus().is_none() && config.round - initial.round < max_rounds {
        config = step(g, &config, protocol, seed, exec);
        sizes.push(config.sizes.clone());
    }
    let outcome = match config.consensus() {
        Some(winner) => Outcome::Consensus { winner },
        None => Outcome::Timeout,
    };
    RunTrace {
        seed,
        protocol: *protocol,
        sizes,
        outcome,
        rounds_used: config.round - initial.round,
    }
}
