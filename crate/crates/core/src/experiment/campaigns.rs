use super::cancel_requested;
use super::report::*;
use super::spec::*;
use super::stats::{LinearFit, MeanEstimate, Proportion, Quantiles};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{Graph, GraphFamily};
use crate::rng::{derive, trial_seed};
use crate::spectral::{
    self, drift_r, expected_change, agreement_probability, EigenOptions, Partition, VertexSet,
};
use crate::voting::{self, place_opinions, OpinionConfig, ProtocolSpec, Rule};

const PLACEMENT: u64 = 0x706c_6163_6500_0001;
const FIXED_START: u64 = 0x706c_6163_6500_0002;
const TWO_CLASS_START: u64 = 0x706c_6163_6500_0003;

/// `(n / A1) ln(A1 / (A1 - A2)) + ln n`; infinite when `A1 = A2`.
pub fn round_count_scale(n: usize, sizes: &[usize]) -> f64 {
    let mut s = sizes.to_vec();
    s.sort_unstable_by(|a, b| b.cmp(a));
    let a1 = s.first().copied().unwrap_or(0) as f64;
    let a2 = s.get(1).copied().unwrap_or(0) as f64;
    let nf = n as f64;
    if a1 <= a2 {
        return f64::INFINITY;
    }
    nf / a1 * (a1 / (a1 - a2)).ln() + nf.ln()
}

pub fn run_campaign(spec: &ExperimentSpec) -> Result<CampaignReport> {
    match spec.campaign {
        CampaignKind::WinProbability => run_win_probability(spec),
        CampaignKind::ConsensusTime => run_consensus_time(spec),
        CampaignKind::OneStepDrift => run_one_step_drift(spec),
        CampaignKind::EndgameContraction => run_endgame_contraction(spec),
        CampaignKind::Coupling3v2 => run_coupling_3v2(spec),
        CampaignKind::EllSweep => run_ell_sweep(spec),
    }
}

struct Prepared {
    graph: Graph,
    pi: Vec<f64>,
    summary: GraphSummary,
}

impl Prepared {
    fn lambda(&self) -> Option<f64> {
        self.summary.lambda
    }
}

fn expect_kind(spec: &ExperimentSpec, kind: CampaignKind) -> Result<()> {
    spec.validate()?;
    if spec.campaign != kind {
        return Err(Error::InvalidExperiment(format!(
            "spec is for {:?}, not {:?}",
            spec.campaign, kind
        )));
    }
    Ok(())
}

fn prepare(spec: &ExperimentSpec, graph: Graph) -> Result<Prepared> {
    let report = graph.validate();
    let pi = spectral::stationary(&graph)?;
    let (lambda, method) = if report.bipartite {
        (None, None)
    } else {
        let opts = EigenOptions {
            dense_limit: spec.dense_limit,
            ..EigenOptions::default()
        };
        let est = spectral::second_eigenvalue_with(&graph, &opts)?;
        (Some(est.lambda), Some(est.method))
    };
    let summary = GraphSummary {
        n: graph.n(),
        m: graph.m(),
        regular_degree: report.regular_degree,
        bipartite: report.bipartite,
        lambda,
        eigen_method: method,
    };
    Ok(Prepared { graph, pi, summary })
}

/// Index of the largest entry, lowest index on ties.
fn plurality(sizes: &[usize]) -> u32 {
    let mut best = 0;
    for (i, &s) in sizes.iter().enumerate() {
        if s > sizes[best] {
            best = i;
        }
    }
    best as u32
}

fn class_measures(pi: &[f64], labels: &[u32], k: usize) -> Vec<f64> {
    let mut m = vec![0.0; k];
    for (x, &l) in labels.iter().enumerate() {
        m[l as usize] += pi[x];
    }
    m
}

/// Run `f(i)` for `i < count` until cancelled. Returns the finished results
/// in index order and whether anything was skipped.
fn run_trials<T, F>(exec: Execution, count: usize, f: F) -> Result<(Vec<T>, bool)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let out = exec.map_range(count, |i| if cancel_requested() { None } else { Some(f(i)) });
    let mut done = Vec::with_capacity(count);
    let mut interrupted = false;
    for r in out {
        match r {
            Some(r) => done.push(r?),
            None => interrupted = true,
        }
    }
    Ok((done, interrupted))
}

fn rounds_of(rounds: impl Iterator<Item = u64>) -> Quantiles {
    let xs: Vec<f64> = rounds.map(|r| r as f64).collect();
    Quantiles::from_samples(&xs)
}

#[allow(clippy::too_many_arguments)]
fn base_report(
    spec: &ExperimentSpec,
    prep: &Prepared,
    hypotheses: HypothesisBlock,
    hypotheses_met: bool,
    interrupted: bool,
    aggregates: Aggregates,
    checks: Vec<ReportCheck>,
    records: Records,
) -> CampaignReport {
    CampaignReport {
        campaign: spec.campaign,
        spec: spec.clone(),
        generated_at: None,
        graph: prep.summary.clone(),
        hypotheses,
        hypotheses_met,
        interrupted,
        aggregates,
        checks,
        records,
    }
}

/// Per-class win frequencies over `trials` runs. Timeouts are losses for
/// every class and are reported separately.
pub fn run_win_probability(spec: &ExperimentSpec) -> Result<CampaignReport> {
    expect_kind(spec, CampaignKind::WinProbability)?;
    let prep = prepare(spec, spec.graph.build()?)?;
    let g = &prep.graph;
    let sizes = spec.initial.resolve(g.n())?;
    let k = sizes.len();
    let vol = g.volume() as f64;
    let (records, interrupted) = run_trials(spec.execution, spec.trials, |t| {
        let seed = trial_seed(spec.seed, t as u64);
        let start = place_opinions(g, &sizes, spec.initial.placement, derive(seed, PLACEMENT))?;
        let mut share = vec![0.0; k];
        for (x, &l) in start.opinions().iter().enumerate() {
            share[l as usize] += g.degree(x) as f64 / vol;
        }
        let trace = voting::run(g, &start, &spec.protocol, spec.max_rounds, seed, Execution::Sequential);
        Ok(WinRecord {
            trial: t,
            seed,
            winner: trace.winner(),
            rounds: trace.rounds_used,
            degree_share: share,
        })
    })?;

    let done = records.len();
    let top = plurality(&sizes);
    let class_wins: Vec<Proportion> = (0..k as u32)
        .map(|c| Proportion::new(records.iter().filter(|r| r.winner == Some(c)).count(), done))
        .collect();
    let mean_share: Vec<f64> = (0..k)
        .map(|c| records.iter().map(|r| r.degree_share[c]).sum::<f64>() / done.max(1) as f64)
        .collect();
    let aggregates = WinAggregates {
        plurality_class: top,
        plurality_wins: class_wins[top as usize],
        class_wins: class_wins.clone(),
        timeouts: Proportion::new(records.iter().filter(|r| r.winner.is_none()).count(), done),
        mean_degree_share: mean_share.clone(),
        rounds: rounds_of(records.iter().map(|r| r.rounds)),
    };

    let mut checks = Vec::new();
    if spec.protocol.rule == Rule::OneSample {
        // one-sample voting: class i wins with probability d(A_i) / vol
        for (c, p) in class_wins.iter().enumerate() {
            let p0 = mean_share[c];
            checks.push(ReportCheck::close(
                format!("degree-share-class-{c}"),
                p.frequency,
                p0,
                3.0 * p.sigma_at(p0),
            ));
        }
    }

    let hyp = HypothesisBlock::evaluate(g.n(), &sizes, prep.lambda(), spec.protocol.walk_length, spec.relaxed_constant);
    let met = hyp.regime == "literal";
    Ok(base_report(
        spec,
        &prep,
        hyp,
        met,
        interrupted,
        Aggregates::Win(aggregates),
        checks,
        Records::Win(records),
    ))
}

/// Round-count distribution at every `n` of the sweep, with least-squares
/// fits of the median against `ln n` and against the round-count scale.
pub fn run_consensus_time(spec: &ExperimentSpec) -> Result<CampaignReport> {
    expect_kind(spec, CampaignKind::ConsensusTime)?;
    let ns: Vec<usize> = if spec.sweep_n.is_empty() {
        vec![spec.graph.build()?.n()]
    } else {
        if spec.graph.family == GraphFamily::File {
            return Err(Error::InvalidExperiment("a file graph cannot be swept over n".into()));
        }
        spec.sweep_n.clone()
    };

    let mut points = Vec::new();
    let mut all_records = Vec::new();
    let mut interrupted = false;
    let mut first: Option<(Prepared, Vec<usize>)> = None;
    for &n in &ns {
        let graph = if spec.sweep_n.is_empty() {
            spec.graph.build()?
        } else {
            spec.graph.with_n(n).build()?
        };
        let prep = prepare(spec, graph)?;
        let g = &prep.graph;
        let sizes = spec.initial.resolve(g.n())?;
        let (records, cut) = run_trials(spec.execution, spec.trials, |t| {
            let seed = trial_seed(spec.seed, t as u64);
            let start = place_opinions(g, &sizes, spec.initial.placement, derive(seed, PLACEMENT))?;
            let trace = voting::run(g, &start, &spec.protocol, spec.max_rounds, seed, Execution::Sequential);
            Ok(SweepRecord {
                n: g.n(),
                trial: t,
                seed,
                winner: trace.winner(),
                rounds: trace.rounds_used,
            })
        })?;
        interrupted |= cut;
        let top = plurality(&sizes);
        let done = records.len();
        points.push(SweepPoint {
            n: g.n(),
            sizes: sizes.clone(),
            lambda: prep.lambda(),
            scale: round_count_scale(g.n(), &sizes),
            rounds: rounds_of(records.iter().map(|r| r.rounds)),
            plurality_wins: Proportion::new(records.iter().filter(|r| r.winner == Some(top)).count(), done),
            timeouts: Proportion::new(records.iter().filter(|r| r.winner.is_none()).count(), done),
        });
        all_records.extend(records);
        if first.is_none() {
            first = Some((prep, sizes));
        }
        if interrupted {
            break;
        }
    }

    let medians: Vec<f64> = points.iter().map(|p| p.rounds.median).collect();
    let monotone = medians.windows(2).all(|w| w[1] >= w[0]);
    let fits = points.len() >= 2 && medians.iter().all(|m| m.is_finite());
    let log_fit = fits.then(|| {
        let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
        LinearFit::fit(&xs, &medians)
    });
    let scale_fit = (fits && points.iter().all(|p| p.scale.is_finite())).then(|| {
        let xs: Vec<f64> = points.iter().map(|p| p.scale).collect();
        LinearFit::fit(&xs, &medians)
    });

    let mut checks = Vec::new();
    if let Some(fit) = log_fit {
        let mut slope = ReportCheck::at_least("log-fit-slope-positive", fit.slope, 0.0, 0.0);
        slope.passed = fit.slope > 0.0;
        checks.push(slope);
        // medians are whole or half rounds; one round covers the rounding
        checks.push(ReportCheck::at_most("log-fit-dominates-medians", fit.max_residual, 0.0, 1.0));
        let mut mono = ReportCheck::at_least("medians-monotone", f64::from(u8::from(monotone)), 1.0, 0.0);
        mono.passed = monotone;
        checks.push(mono);
    }

    let (prep, sizes) = first.expect("sweep has at least one point");
    let hyp = HypothesisBlock::evaluate(prep.graph.n(), &sizes, prep.lambda(), spec.protocol.walk_length, spec.relaxed_constant);
    let met = hyp.regime == "literal";
    let aggregates = SweepAggregates {
        points,
        log_fit,
        scale_fit,
        medians_monotone: monotone,
    };
    Ok(base_report(
        spec,
        &prep,
        hyp,
        met,
        interrupted,
        Aggregates::Sweep(aggregates),
        checks,
        Records::Sweep(all_records),
    ))
}

fn fixed_start(spec: &ExperimentSpec, g: &Graph, sizes: &[usize], purpose: u64) -> Result<OpinionConfig> {
    place_opinions(g, sizes, spec.initial.placement, derive(spec.seed, purpose))
}

/// `expected_change` for every class, zero for empty classes.
fn expected_by_class(g: &Graph, pi: &[f64], start: &OpinionConfig) -> Vec<f64> {
    let partition = Partition::from_labels(start.opinions());
    let mut out = vec![0.0; start.k()];
    let nonempty: Vec<usize> = (0..start.k()).filter(|&c| start.sizes()[c] > 0).collect();
    for (j, &c) in nonempty.iter().enumerate() {
        out[c] = expected_change(g, pi, &partition, j);
    }
    out
}

/// Many independent single rounds from one fixed start.
pub fn run_one_step_drift(spec: &ExperimentSpec) -> Result<CampaignReport> {
    expect_kind(spec, CampaignKind::OneStepDrift)?;
    let prep = prepare(spec, spec.graph.build()?)?;
    let g = &prep.graph;
    let pi = &prep.pi;
    let sizes = spec.initial.resolve(g.n())?;
    let k = sizes.len();
    let start = fixed_start(spec, g, &sizes, FIXED_START)?;
    let initial = class_measures(pi, start.opinions(), k);

    let (records, interrupted) = run_trials(spec.execution, spec.sample_count(), |s| {
        let seed = trial_seed(spec.seed, s as u64);
        let next = voting::step(g, &start, &spec.protocol, seed, Execution::Sequential);
        Ok(RoundRecord {
            sample: s,
            seed,
            measures: class_measures(pi, next.opinions(), k),
            sizes: next.sizes().to_vec(),
        })
    })?;

    let top = plurality(&sizes) as usize;
    let x1 = initial[top];
    let x2 = (0..k).filter(|&c| c != top).map(|c| initial[c]).fold(f64::NEG_INFINITY, f64::max);
    let x2 = if x2.is_finite() { x2 } else { x1 };
    let delta = x1 - x2;
    let growth_bound = x1 * (1.0 + delta / 5.0);
    let gap_bound = delta * (1.0 + x1 / 10.0);
    let mean_growth_bound = x1 * (1.0 + delta / 4.0);
    let min_gap_of = |m: &[f64]| {
        (0..k)
            .filter(|&c| c != top)
            .map(|c| m[top] - m[c])
            .fold(m[top], f64::min)
    };
    let done = records.len();
    let growth = records.iter().filter(|r| r.measures[top] >= growth_bound - 1e-12).count();
    let gap = records.iter().filter(|r| min_gap_of(&r.measures) >= gap_bound - 1e-12).count();
    let gaps: Vec<f64> = records.iter().map(|r| min_gap_of(&r.measures)).collect();
    let means: Vec<MeanEstimate> = (0..k)
        .map(|c| MeanEstimate::from_samples(&records.iter().map(|r| r.measures[c]).collect::<Vec<_>>()))
        .collect();
    let expected = match (spec.protocol.rule, spec.protocol.walk_length) {
        (Rule::TwoSample, 1) => Some(expected_by_class(g, pi, &start)),
        (Rule::OneSample, _) => Some(initial.clone()),
        _ => None,
    };

    let hyp = HypothesisBlock::evaluate(g.n(), &sizes, prep.lambda(), spec.protocol.walk_length, spec.relaxed_constant);
    let met = hyp.regime == "literal";
    let mut checks = Vec::new();
    if let Some(e) = &expected {
        for c in 0..k {
            checks.push(ReportCheck::close(
                format!("mean-measure-class-{c}"),
                means[c].mean,
                e[c],
                3.0 * means[c].std_error,
            ));
        }
    }
    let growth_p = Proportion::new(growth, done);
    let gap_p = Proportion::new(gap, done);
    // the drift bounds are only claimed under the literal hypotheses
    let tag = |c: ReportCheck| if met { c } else { c.descriptive() };
    checks.push(tag(ReportCheck::at_least("mean-growth", means[top].mean, mean_growth_bound, 3.0 * means[top].std_error)));
    checks.push(tag(ReportCheck::at_least("growth-frequency", growth_p.frequency, 1.0 - 1.0 / (g.n() as f64).powi(2), 3.0 * growth_p.std_error)));
    checks.push(tag(ReportCheck::at_least("gap-frequency", gap_p.frequency, 1.0 - 1.0 / (g.n() as f64).powi(2), 3.0 * gap_p.std_error)));

    let aggregates = DriftAggregates {
        plurality_class: top as u32,
        initial_measures: initial,
        expected_measures: expected,
        mean_measures: means,
        growth_holds: growth_p,
        gap_holds: gap_p,
        growth_bound,
        gap_bound,
        mean_growth_bound,
        min_gap: MeanEstimate::from_samples(&gaps),
    };
    Ok(base_report(
        spec,
        &prep,
        hyp,
        met,
        interrupted,
        Aggregates::Drift(aggregates),
        checks,
        Records::Round(records),
    ))
}

/// Minority measure `pi(B)` round by round, `B` everything outside the
/// initial majority class.
pub fn run_endgame_contraction(spec: &ExperimentSpec) -> Result<CampaignReport> {
    expect_kind(spec, CampaignKind::EndgameContraction)?;
    let prep = prepare(spec, spec.graph.build()?)?;
    let g = &prep.graph;
    let pi = &prep.pi;
    let sizes = spec.initial.resolve(g.n())?;
    let top = plurality(&sizes);
    let (records, interrupted) = run_trials(spec.execution, spec.trials, |t| {
        let seed = trial_seed(spec.seed, t as u64);
        let mut config = place_opinions(g, &sizes, spec.initial.placement, derive(seed, PLACEMENT))?;
        let minority_of = |c: &OpinionConfig| -> f64 {
            c.opinions()
                .iter()
                .enumerate()
                .filter(|(_, &l)| l != top)
                .map(|(x, _)| pi[x])
                .sum()
        };
        let mut minority = vec![minority_of(&config)];
        let mut rounds = 0;
        while config.consensus().is_none() && rounds < spec.max_rounds {
            config = voting::step(g, &config, &spec.protocol, seed, Execution::Sequential);
            minority.push(minority_of(&config));
            rounds += 1;
        }
        Ok(EndgameRecord {
            trial: t,
            seed,
            winner: config.consensus(),
            rounds,
            minority,
        })
    })?;

    let longest = records.iter().map(|r| r.minority.len()).max().unwrap_or(0);
    let mut contraction = Vec::new();
    for round in 0..longest.saturating_sub(1) {
        let ratios: Vec<f64> = records
            .iter()
            .filter(|r| round + 1 < r.minority.len() && r.minority[round] > 0.0)
            .map(|r| r.minority[round + 1] / r.minority[round])
            .collect();
        if ratios.is_empty() {
            continue;
        }
        contraction.push(ContractionRound {
            round,
            alive: ratios.len(),
            ratio: MeanEstimate::from_samples(&ratios),
        });
    }

    let n = g.n();
    let bound = endgame_round_bound(n);
    let hyp = HypothesisBlock::evaluate(n, &sizes, prep.lambda(), spec.protocol.walk_length, spec.relaxed_constant);
    let met = hyp.a1_at_least_two_thirds && hyp.endgame_lambda_ok == Some(true);
    let tag = |c: ReportCheck| if met { c } else { c.descriptive() };
    let mut checks = Vec::new();
    // a standard error needs at least two surviving trials
    for c in contraction.iter().filter(|c| c.alive >= 2) {
        checks.push(tag(ReportCheck::at_most(
            format!("contraction-round-{}", c.round),
            c.ratio.mean,
            ENDGAME_CONTRACTION,
            3.0 * c.ratio.std_error,
        )));
    }
    let done = records.len();
    let finished = records.iter().filter(|r| r.winner.is_some()).count();
    let slowest = records.iter().map(|r| r.rounds).max().unwrap_or(0);
    let mut within = ReportCheck::at_most("finish-within-round-bound", slowest as f64, bound as f64, 0.0);
    within.passed &= finished == done;
    checks.push(tag(within));

    let aggregates = EndgameAggregates {
        majority_class: top,
        max_mean_ratio: contraction.iter().map(|c| c.ratio.mean).fold(f64::NEG_INFINITY, f64::max),
        contraction,
        round_bound: bound,
        rounds: rounds_of(records.iter().map(|r| r.rounds)),
        consensus: Proportion::new(finished, done),
        majority_wins: Proportion::new(records.iter().filter(|r| r.winner == Some(top)).count(), done),
    };
    Ok(base_report(
        spec,
        &prep,
        hyp,
        met,
        interrupted,
        Aggregates::Endgame(aggregates),
        checks,
        Records::Endgame(records),
    ))
}

/// `sum_i P(x, A_i)^2` for every vertex under the given labelling.
fn agreement_vector(g: &Graph, labels: &[u32], k: usize) -> Vec<f64> {
    if g.is_complete_with_loops() {
        let n = g.n() as f64;
        let mut counts = vec![0usize; k];
        for &l in labels {
            counts[l as usize] += 1;
        }
        let a: f64 = counts.iter().map(|&c| (c as f64 / n).powi(2)).sum();
        return vec![a; g.n()];
    }
    let mut scratch = vec![0u32; k];
    let mut touched = Vec::new();
    (0..g.n())
        .map(|x| agreement_probability(g, labels, x, &mut scratch, &mut touched))
        .collect()
}

/// `S_C(A_j')` for every class `j` of the first-sample layer.
fn first_layer_s(pi: &[f64], agreement: &[f64], first: &[u32], k: usize) -> Vec<f64> {
    let mut s = vec![0.0; k];
    for (x, &l) in first.iter().enumerate() {
        s[l as usize] += pi[x] * agreement[x];
    }
    s
}

/// The first-sample layer of the three-sample protocol against the bounds
/// inherited from two-sample voting, plus matched two- and three-sample runs.
pub fn run_coupling_3v2(spec: &ExperimentSpec) -> Result<CampaignReport> {
    expect_kind(spec, CampaignKind::Coupling3v2)?;
    if spec.protocol.walk_length != 1 {
        return Err(Error::InvalidExperiment("coupling needs walk_length = 1".into()));
    }
    let prep = prepare(spec, spec.graph.build()?)?;
    let g = &prep.graph;
    let pi = &prep.pi;
    let n = g.n();
    let sizes = spec.initial.resolve(n)?;
    let k = sizes.len();
    let three = ProtocolSpec {
        rule: Rule::ThreeSample,
        ..spec.protocol
    };
    let two = ProtocolSpec {
        rule: Rule::TwoSample,
        ..spec.protocol
    };
    let lambda = prep.lambda().unwrap_or(1.0);

    let start = fixed_start(spec, g, &sizes, FIXED_START)?;
    let measures = class_measures(pi, start.opinions(), k);
    let agreement = agreement_vector(g, start.opinions(), k);
    let total_s: f64 = pi.iter().zip(&agreement).map(|(p, a)| p * a).sum();
    let (samples, cut_a) = run_trials(spec.execution, spec.sample_count(), |s| {
        let seed = trial_seed(spec.seed, s as u64);
        let (next, first) = voting::step_with_first_samples(g, &start, &three, seed, Execution::Sequential);
        let layer = first_layer_s(pi, &agreement, &first, k);
        Ok(CouplingRecord {
            sample: s,
            seed,
            next_measures: class_measures(pi, next.opinions(), k),
            first_layer_complement_s: layer.iter().map(|v| total_s - v).collect(),
            first_layer_s: layer,
        })
    })?;

    let sq: f64 = measures.iter().map(|m| m * m).sum();
    let cube_half: f64 = measures.iter().map(|m| m.powf(1.5)).sum();
    let full = VertexSet::full(n);
    let mut classes = Vec::new();
    let mut checks = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for j in 0..k {
        let aj = VertexSet::from_indices(n, (0..n).filter(|&x| start.opinion(x) == j as u32));
        let col = |f: &dyn Fn(&CouplingRecord) -> f64| MeanEstimate::from_samples(&samples.iter().map(f).collect::<Vec<_>>());
        let layer = col(&|r| r.first_layer_s[j]);
        let comp = col(&|r| r.first_layer_complement_s[j]);
        let sum = col(&|r| r.next_measures[j] + r.first_layer_s[j]);
        let pj = measures[j];
        let first_bound = pj * sq - 2.0 * lambda * pj.sqrt() * cube_half;
        let comp_bound = (1.0 - pj) * sq - 2.0 * lambda * (1.0 - pj).max(0.0).sqrt() * cube_half;
        let target = pj + drift_r(g, pi, &full, &aj);
        checks.push(ReportCheck::at_least(format!("first-layer-lower-class-{j}"), layer.mean, first_bound, 3.0 * layer.std_error));
        checks.push(ReportCheck::at_least(format!("first-layer-complement-lower-class-{j}"), comp.mean, comp_bound, 3.0 * comp.std_error));
        checks.push(ReportCheck::close(format!("three-sample-identity-class-{j}"), sum.mean, target, 3.0 * sum.std_error));
        classes.push(CouplingClass {
            class: j as u32,
            measure: pj,
            mean_first_layer_s: layer,
            first_layer_bound: first_bound,
            mean_complement_s: comp,
            complement_bound: comp_bound,
            identity_sum: sum,
            identity_target: target,
        });
    }

    let mut two_class = Vec::new();
    let mut two_class_minority = None;
    let mut two_class_s = None;
    let mut cut_b = false;
    if let Some(split) = &spec.two_class_sizes {
        if split.len() != 2 {
            return Err(Error::InvalidExperiment("two_class_sizes needs exactly two entries".into()));
        }
        let total: usize = split.iter().sum();
        if total != n {
            return Err(Error::SizeMismatch { expected: n, got: total });
        }
        let b = if split[1] <= split[0] { 1 } else { 0 };
        let start2 = fixed_start(spec, g, split, TWO_CLASS_START)?;
        let agree2 = agreement_vector(g, start2.opinions(), 2);
        let (vals, cut) = run_trials(spec.execution, spec.sample_count(), |s| {
            let seed = trial_seed(derive(spec.seed, TWO_CLASS_START), s as u64);
            let (_, first) = voting::step_with_first_samples(g, &start2, &three, seed, Execution::Sequential);
            Ok(first_layer_s(pi, &agree2, &first, 2)[b])
        })?;
        cut_b = cut;
        let pb = class_measures(pi, start2.opinions(), 2)[b];
        let est = MeanEstimate::from_samples(&vals);
        checks.push(ReportCheck::at_least("two-class-minority-lower", est.mean, pb / 4.0, 3.0 * est.std_error));
        two_class = vals;
        two_class_minority = Some(pb);
        two_class_s = Some(est);
    }

    let top = plurality(&sizes);
    let (pairs, cut_c) = run_trials(spec.execution, spec.trials, |t| {
        let seed = trial_seed(spec.seed, t as u64);
        let start = place_opinions(g, &sizes, spec.initial.placement, derive(seed, PLACEMENT))?;
        let a = voting::run(g, &start, &two, spec.max_rounds, seed, Execution::Sequential);
        let b = voting::run(g, &start, &three, spec.max_rounds, seed, Execution::Sequential);
        Ok([
            MatchedRecord { trial: t, seed, variant: 2, winner: a.winner(), rounds: a.rounds_used },
            MatchedRecord { trial: t, seed, variant: 3, winner: b.winner(), rounds: b.rounds_used },
        ])
    })?;
    let matched: Vec<MatchedRecord> = pairs.into_iter().flatten().collect();
    let wins = |v: usize| {
        let rows: Vec<&MatchedRecord> = matched.iter().filter(|r| r.variant == v).collect();
        (
            Proportion::new(rows.iter().filter(|r| r.winner == Some(top)).count(), rows.len()),
            rounds_of(rows.iter().map(|r| r.rounds)),
        )
    };
    let (w2, r2) = wins(2);
    let (w3, r3) = wins(3);
    let sigma = (w2.std_error.powi(2) + w3.std_error.powi(2)).sqrt();
    checks.push(ReportCheck::at_least("three-vs-two-sample-wins", w3.frequency, w2.frequency, 3.0 * sigma).descriptive());

    let hyp = HypothesisBlock::evaluate(n, &sizes, prep.lambda(), 1, spec.relaxed_constant);
    let met = prep.lambda().is_some();
    let aggregates = CouplingAggregates {
        classes,
        two_class_minority,
        two_class_s,
        plurality_class: top,
        two_sample_wins: w2,
        three_sample_wins: w3,
        two_sample_rounds: r2,
        three_sample_rounds: r3,
    };
    Ok(base_report(
        spec,
        &prep,
        hyp,
        met,
        cut_a || cut_b || cut_c,
        Aggregates::Coupling(aggregates),
        checks,
        Records::Coupling {
            samples,
            two_class,
            matched,
        },
    ))
}

/// Matched-seed sweep over walk lengths: trial `t` starts from the same
/// placement and uses the same run seed at every `ell`.
pub fn run_ell_sweep(spec: &ExperimentSpec) -> Result<CampaignReport> {
    expect_kind(spec, CampaignKind::EllSweep)?;
    let prep = prepare(spec, spec.graph.build()?)?;
    let g = &prep.graph;
    let n = g.n();
    let sizes = spec.initial.resolve(n)?;
    let ells = if spec.walk_lengths.is_empty() {
        vec![1, 2, 4, 8]
    } else {
        spec.walk_lengths.clone()
    };
    let top = plurality(&sizes);
    let lambda = prep.lambda();

    let mut points = Vec::new();
    let mut records = Vec::new();
    let mut interrupted = false;
    let mut checks = Vec::new();
    for &ell in &ells {
        let protocol = spec.protocol.with_walk_length(ell);
        let (rows, cut) = run_trials(spec.execution, spec.trials, |t| {
            let seed = trial_seed(spec.seed, t as u64);
            let start = place_opinions(g, &sizes, spec.initial.placement, derive(seed, PLACEMENT))?;
            let trace = voting::run(g, &start, &protocol, spec.max_rounds, seed, Execution::Sequential);
            Ok(MatchedRecord {
                trial: t,
                seed,
                variant: ell,
                winner: trace.winner(),
                rounds: trace.rounds_used,
            })
        })?;
        interrupted |= cut;
        let done = rows.len();
        let hyp = HypothesisBlock::evaluate(n, &sizes, lambda, ell, spec.relaxed_constant);
        if let (Some(l), Some(e)) = (lambda, hyp.effective_lambda) {
            let mut power = 1.0;
            for _ in 0..ell {
                power *= l;
            }
            checks.push(ReportCheck::close(format!("effective-lambda-ell-{ell}"), e, power, 1e-9));
        }
        points.push(EllPoint {
            walk_length: ell,
            effective_lambda: hyp.effective_lambda,
            hypotheses: hyp,
            plurality_wins: Proportion::new(rows.iter().filter(|r| r.winner == Some(top)).count(), done),
            timeouts: Proportion::new(rows.iter().filter(|r| r.winner.is_none()).count(), done),
            rounds: rounds_of(rows.iter().map(|r| r.rounds)),
        });
        records.extend(rows);
        if interrupted {
            break;
        }
    }
    if let (Some(lo), Some(hi)) = (
        points.iter().min_by_key(|p| p.walk_length),
        points.iter().max_by_key(|p| p.walk_length),
    ) {
        if lo.walk_length < hi.walk_length {
            let mut c = ReportCheck::at_least(
                format!("ell-{}-beats-ell-{}", hi.walk_length, lo.walk_length),
                hi.plurality_wins.frequency,
                lo.plurality_wins.frequency,
                0.0,
            )
            .descriptive();
            c.passed = hi.plurality_wins.frequency > lo.plurality_wins.frequency;
            checks.push(c);
        }
    }

    let longest = ells.iter().copied().max().unwrap_or(1);
    let hyp = HypothesisBlock::evaluate(n, &sizes, lambda, longest, spec.relaxed_constant);
    let met = hyp.regime == "literal";
    Ok(base_report(
        spec,
        &prep,
        hyp,
        met,
        interrupted,
        Aggregates::Ell(EllAggregates {
            plurality_class: top,
            points,
        }),
        checks,
        Records::Matched(records),
    ))
}
