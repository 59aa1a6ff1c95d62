use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::Args;
use serde::Serialize;

use pullvote::experiment::{
    cancel_requested, request_cancel, run_campaign, Aggregates, CampaignReport, HypothesisBlock, Proportion,
};
use pullvote::graph::{random_regular_with_stats, write_edge_list};
use pullvote::rng::derive;
use pullvote::spectral::{
    check_section2, second_eigenvalue_with, stationary, EigenMethod, EigenOptions, DEFAULT_DENSE_LIMIT,
};
use pullvote::voting::{place_opinions, run};
use pullvote::{Execution, Graph, GraphDescriptor, GraphFamily, ProtocolSpec, RunTrace};

use crate::config::{descriptor, parse_family, Config, Override};
use crate::output::{timestamp, write_file, write_text, Header};

const VOTE_PLACEMENT: u64 = 0x766f_7465_0000_0001;

/// How a command finished, short of an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    VerificationFailed,
    Interrupted,
}

pub struct Context {
    pub timestamps: bool,
}

fn parse_method(s: &str) -> Result<EigenMethod, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown method {s:?}; expected dense or iterative"))
}

/// Graph selection shared by `spectral` and `verify-lemmas`.
#[derive(Args, Debug)]
pub struct GraphArgs {
    /// Edge-list file.
    #[arg(long, value_name = "FILE", conflicts_with = "family")]
    graph: Option<PathBuf>,
    /// Generator family instead of a file.
    #[arg(long, value_parser = parse_family)]
    family: Option<GraphFamily>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Seed for the random-regular generator.
    #[arg(long)]
    graph_seed: Option<u64>,
    #[arg(long)]
    cliques: Option<usize>,
    #[arg(long)]
    clique_size: Option<usize>,
}

impl GraphArgs {
    fn descriptor(&self) -> Result<GraphDescriptor> {
        match (&self.graph, self.family) {
            (Some(p), _) => Ok(GraphDescriptor::file(p)),
            (None, Some(f)) => Ok(descriptor(
                f,
                self.n,
                self.d,
                self.graph_seed,
                self.cliques,
                self.clique_size,
                None,
            )),
            (None, None) => bail!("pass --graph FILE or --family"),
        }
    }
}

#[derive(Args, Debug)]
pub struct EigenArgs {
    /// Force the dense or the iterative eigensolver.
    #[arg(long, value_parser = parse_method)]
    method: Option<EigenMethod>,
    /// Largest n handled by the dense solver when no method is forced.
    #[arg(long, default_value_t = DEFAULT_DENSE_LIMIT)]
    dense_limit: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

impl EigenArgs {
    fn options(&self) -> EigenOptions {
        EigenOptions {
            tol: self.tol,
            dense_limit: self.dense_limit,
            method: self.method,
            ..EigenOptions::default()
        }
    }
}

// ---------------------------------------------------------------- gen

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_family)]
    family: GraphFamily,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cliques: Option<usize>,
    #[arg(long)]
    clique_size: Option<usize>,
    /// Source edge list for `--family file` (re-validated and rewritten).
    #[arg(long, value_name = "FILE")]
    path: Option<PathBuf>,
    /// Edge-list destination; without it the graph goes to stdout and the
    /// summary to stderr.
    #[arg(long, short, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also report the absolute second eigenvalue.
    #[arg(long)]
    spectral: bool,
    #[command(flatten)]
    eigen: EigenArgs,
}

#[derive(Debug, Serialize)]
struct GenSummary {
    n: usize,
    m: usize,
    d: Option<usize>,
    connected: bool,
    bipartite: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigen_method: Option<EigenMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    attempts: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regenerations: Option<u64>,
}

/// `lambda` of an ergodic graph, exactly 1 for a bipartite one, `None` when disconnected.
fn lambda_of(g: &Graph, opts: &EigenOptions) -> Result<Option<(f64, Option<EigenMethod>)>> {
    let v = g.validate();
    if !v.connected {
        return Ok(None);
    }
    if v.bipartite {
        return Ok(Some((1.0, None)));
    }
    let est = second_eigenvalue_with(g, opts)?;
    Ok(Some((est.lambda, Some(est.method))))
}

pub fn gen(args: &GenArgs, ctx: &Context) -> Result<Status> {
    let desc = descriptor(args.family, args.n, args.d, args.seed, args.cliques, args.clique_size, args.path.clone());
    desc.check()?;
    let (g, stats) = if args.family == GraphFamily::RandomRegular {
        let (g, s) = random_regular_with_stats(desc.n.unwrap(), desc.d.unwrap(), desc.seed.unwrap())?;
        (g, Some(s))
    } else {
        (desc.build()?, None)
    };
    let v = g.validate();
    let spectral = if args.spectral { lambda_of(&g, &args.eigen.options())? } else { None };
    let summary = GenSummary {
        n: g.n(),
        m: g.m(),
        d: v.regular_degree,
        connected: v.connected,
        bipartite: v.bipartite,
        lambda: spectral.map(|s| s.0),
        eigen_method: spectral.and_then(|s| s.1),
        attempts: stats.map(|s| s.attempts),
        regenerations: stats.map(|s| s.regenerations),
    };
    let header = Header::new("gen", &desc, timestamp(ctx.timestamps))?;
    let mut body = header.comment().into_bytes();
    write_edge_list(&g, &mut body)?;
    let summary = serde_json::to_string_pretty(&summary)?;
    match &args.out {
        Some(path) => {
            write_file(path, |w| Ok(w.write_all(&body)?))?;
            println!("{summary}");
        }
        None => {
            std::io::stdout().write_all(&body)?;
            eprintln!("{summary}");
        }
    }
    if args.spectral && !v.connected {
        eprintln!("warning: graph is disconnected; lambda is undefined");
    }
    Ok(Status::Success)
}

// ---------------------------------------------------------------- spectral

#[derive(Args, Debug)]
pub struct SpectralArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    eigen: EigenArgs,
    /// Write the report here instead of stdout.
    #[arg(long, short, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SpectralSummary {
    n: usize,
    m: usize,
    regular_degree: Option<usize>,
    connected: bool,
    bipartite: bool,
    volume: usize,
    pi_min: f64,
    pi_max: f64,
    lambda: f64,
    spectral_gap: f64,
    method: EigenMethod,
    residual: f64,
    iterations: usize,
}

pub fn spectral(args: &SpectralArgs, ctx: &Context) -> Result<Status> {
    let desc = args.graph.descriptor()?;
    let g = desc.build()?;
    let v = g.validate();
    let pi = stationary(&g)?;
    let est = second_eigenvalue_with(&g, &args.eigen.options())?;
    let summary = SpectralSummary {
        n: g.n(),
        m: g.m(),
        regular_degree: v.regular_degree,
        connected: v.connected,
        bipartite: v.bipartite,
        volume: g.volume(),
        pi_min: pi.iter().copied().fold(f64::INFINITY, f64::min),
        pi_max: pi.iter().copied().fold(0.0, f64::max),
        lambda: est.lambda,
        spectral_gap: 1.0 - est.lambda,
        method: est.method,
        residual: est.residual,
        iterations: est.iterations,
    };
    let header = Header::new("spectral", &desc, timestamp(ctx.timestamps))?;
    let doc = header.document("spectral", &summary)?;
    match &args.out {
        Some(path) => {
            write_text(path, &doc)?;
            println!("lambda = {:.10} ({:?}, n = {})", est.lambda, est.method, g.n());
        }
        None => print!("{doc}"),
    }
    Ok(Status::Success)
}

// ---------------------------------------------------------------- verify-lemmas

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Random subsets and partitions to test.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use this value for lambda instead of computing it.
    #[arg(long, value_name = "LAMBDA")]
    lambda_override: Option<f64>,
    #[command(flatten)]
    eigen: EigenArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct VerifyConfig<'a> {
    graph: &'a GraphDescriptor,
    samples: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_override: Option<f64>,
}

pub fn verify_lemmas(args: &VerifyArgs, ctx: &Context) -> Result<Status> {
    if args.samples == 0 {
        bail!("--samples must be at least 1");
    }
    let desc = args.graph.descriptor()?;
    let g = desc.build()?;
    let pi = stationary(&g)?;
    let lambda = match args.lambda_override {
        Some(l) => l,
        None => lambda_of(&g, &args.eigen.options())?.map(|s| s.0).unwrap_or(1.0),
    };
    let report = check_section2(&g, &pi, lambda, args.samples, args.seed);
    let config = VerifyConfig {
        graph: &desc,
        samples: args.samples,
        seed: args.seed,
        lambda_override: args.lambda_override,
    };
    let header = Header::new("verify-lemmas", &config, timestamp(ctx.timestamps))?;
    let doc = header.document("report", &report)?;
    match &args.out {
        Some(path) => write_text(path, &doc)?,
        None => print!("{doc}"),
    }
    eprintln!(
        "{} checks on n = {} with lambda = {:.6}: {} violations",
        report.checks.len(),
        report.n,
        lambda,
        report.violations
    );
    for s in report.summary.iter().filter(|s| s.violations > 0) {
        eprintln!("  {}: {} of {} violated (min slack {:.3e})", s.name, s.violations, s.evaluated, s.min_slack);
    }
    Ok(if report.is_clean() { Status::Success } else { Status::VerificationFailed })
}

// ---------------------------------------------------------------- vote / experiment

/// Config file plus the flags every config-driven command accepts.
#[derive(Args, Debug)]
pub struct ConfigArgs {
    /// TOML config with [graph] [initial] [protocol] [campaign] [output] sections.
    #[arg(long, short, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set campaign.trials=50`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Run every trial on the calling thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long, value_name = "FILE")]
    out_json: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_csv: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self, extra: Vec<Override>) -> Result<Config> {
        let mut overrides = self
            .set
            .iter()
            .map(|s| Override::parse(s))
            .collect::<Result<Vec<_>>>()?;
        if let Some(s) = self.seed {
            overrides.push(Override::new("campaign.seed", to_toml_int(s)?));
        }
        if let Some(r) = self.max_rounds {
            overrides.push(Override::new("campaign.max_rounds", to_toml_int(r)?));
        }
        if self.sequential {
            overrides.push(Override::new("campaign.execution", "sequential"));
        }
        overrides.extend(extra);
        let mut config = Config::load(self.config.as_deref(), &overrides)?;
        if let Some(p) = &self.out_json {
            config.output.json = Some(p.clone());
        }
        if let Some(p) = &self.out_csv {
            config.output.csv = Some(p.clone());
        }
        Ok(config)
    }
}

fn to_toml_int(x: u64) -> Result<i64> {
    i64::try_from(x).map_err(|_| anyhow!("{x} does not fit a config integer"))
}

#[derive(Args, Debug)]
pub struct VoteArgs {
    #[command(flatten)]
    common: ConfigArgs,
}

/// Everything that determines a single run.
#[derive(Debug, Serialize)]
struct VoteSpec {
    graph: GraphDescriptor,
    initial: pullvote::experiment::InitialSpec,
    protocol: ProtocolSpec,
    seed: u64,
    max_rounds: u64,
    execution: Execution,
}

pub fn vote(args: &VoteArgs, ctx: &Context) -> Result<Status> {
    let config = args.common.load(Vec::new())?;
    let spec = VoteSpec {
        graph: config.graph()?.clone(),
        initial: config.initial()?.clone(),
        protocol: *config.protocol()?,
        seed: config.seed()?,
        max_rounds: config.campaign.max_rounds.unwrap_or(1000),
        execution: config.campaign.execution.unwrap_or_default(),
    };
    spec.protocol.validate()?;
    let g = spec.graph.build()?;
    let sizes = spec.initial.resolve(g.n())?;
    let start = place_opinions(&g, &sizes, spec.initial.placement, derive(spec.seed, VOTE_PLACEMENT))?;
    let trace = run(&g, &start, &spec.protocol, spec.max_rounds, spec.seed, spec.execution);

    let header = Header::new("vote", &spec, timestamp(ctx.timestamps))?;
    if let Some(path) = &config.output.json {
        let head = serde_json::to_string(&serde_json::json!({ "header": header }))?;
        write_file(path, |w| {
            writeln!(w, "{head}")?;
            RunTrace::write_json_lines([&trace], w)?;
            Ok(())
        })?;
    }
    if let Some(path) = &config.output.csv {
        write_file(path, |w| {
            w.write_all(header.comment().as_bytes())?;
            trace.write_csv(w)?;
            Ok(())
        })?;
    }
    match trace.winner() {
        Some(w) => println!("consensus at round {} (winner: class {w})", trace.rounds_used),
        None => println!("timeout after {} rounds (sizes {:?})", trace.rounds_used, trace.final_sizes()),
    }
    Ok(Status::Success)
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[command(flatten)]
    common: ConfigArgs,
    #[arg(long)]
    trials: Option<usize>,
    /// Exit 1 when any non-descriptive check fails.
    #[arg(long)]
    strict: bool,
}

pub fn experiment(args: &ExperimentArgs, ctx: &Context) -> Result<Status> {
    let mut extra = Vec::new();
    if let Some(t) = args.trials {
        extra.push(Override::new("campaign.trials", to_toml_int(t as u64)?));
    }
    let config = args.common.load(extra)?;
    let spec = config.experiment_spec()?;
    let kind = serde_json::to_value(spec.campaign)?;
    let kind = kind.as_str().unwrap_or("campaign");
    let json_path = config.output.json.clone().unwrap_or_else(|| PathBuf::from(format!("{kind}.json")));
    let csv_path = config.output.csv.clone().unwrap_or_else(|| PathBuf::from(format!("{kind}.csv")));

    // a second Ctrl-C aborts without flushing
    let _ = ctrlc::set_handler(|| {
        if cancel_requested() {
            std::process::exit(130);
        }
        eprintln!("interrupt: finishing started trials, then writing partial results");
        request_cancel();
    });

    let generated_at = timestamp(ctx.timestamps);
    let mut report = run_campaign(&spec)?;
    report.generated_at = generated_at.clone();
    let header = Header::new("experiment", &spec, generated_at)?;
    write_text(&json_path, &header.document("report", &report)?)?;
    write_file(&csv_path, |w| {
        w.write_all(header.comment().as_bytes())?;
        report.write_flat_csv(w)?;
        Ok(())
    })?;

    let mut out = std::io::stdout().lock();
    print_report(&mut out, &report)?;
    writeln!(out, "wrote {} and {}", json_path.display(), csv_path.display())?;
    if report.interrupted {
        writeln!(out, "interrupted: the report covers only completed trials")?;
        return Ok(Status::Interrupted);
    }
    Ok(if args.strict && !report.passed() { Status::VerificationFailed } else { Status::Success })
}

// ---------------------------------------------------------------- printing

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn opt(b: Option<bool>) -> &'static str {
    b.map_or("n/a", yes)
}

fn proportion(p: &Proportion) -> String {
    format!(
        "{}/{} = {:.3} (95% Wilson [{:.3}, {:.3}])",
        p.successes, p.trials, p.frequency, p.wilson_low, p.wilson_high
    )
}

fn print_hypotheses(w: &mut impl Write, h: &HypothesisBlock) -> std::io::Result<()> {
    writeln!(w, "hypotheses (regime: {}):", h.regime)?;
    writeln!(w, "  A1 = {}, A2 = {}, gap = {}, delta = {:.4}", h.a1, h.a2, h.gap, h.delta)?;
    writeln!(w, "  A1 <= 2n/3: {}", yes(h.a1_at_most_two_thirds))?;
    writeln!(
        w,
        "  gap >= C n sqrt(ln n / A1), C = {:.2}: {} (bound {:.1})",
        h.separation_constant,
        yes(h.gap_ok),
        h.gap_bound
    )?;
    writeln!(
        w,
        "  gap >= c n sqrt(ln n / A1), c = {}: {} (bound {:.1})",
        h.relaxed_constant,
        yes(h.relaxed_gap_ok),
        h.relaxed_gap_bound
    )?;
    match h.effective_lambda {
        Some(e) => writeln!(
            w,
            "  lambda^ell <= gap / (32 n): {} (lambda^{} = {:.6}, bound {:.6})",
            opt(h.lambda_ok),
            h.walk_length,
            e,
            h.lambda_bound
        )?,
        None => writeln!(w, "  lambda: undefined (bipartite or disconnected graph)")?,
    }
    writeln!(
        w,
        "  separation: literal {}, relaxed {}; endgame lambda^ell <= 1/4: {}",
        opt(h.separation_ok),
        opt(h.relaxed_separation_ok),
        opt(h.endgame_lambda_ok)
    )
}

fn print_headline(w: &mut impl Write, a: &Aggregates) -> std::io::Result<()> {
    match a {
        Aggregates::Win(a) => {
            writeln!(w, "plurality (class {}) wins {}", a.plurality_class, proportion(&a.plurality_wins))?;
            writeln!(
                w,
                "timeouts {}; rounds median {} (max {})",
                a.timeouts.successes, a.rounds.median, a.rounds.max
            )
        }
        Aggregates::Sweep(a) => {
            writeln!(w, "{:>8} {:>10} {:>10} {:>10}", "n", "median", "p90", "wins")?;
            for p in &a.points {
                writeln!(
                    w,
                    "{:>8} {:>10} {:>10} {:>10.3}",
                    p.n, p.rounds.median, p.rounds.p90, p.plurality_wins.frequency
                )?;
            }
            if let Some(f) = &a.log_fit {
                writeln!(
                    w,
                    "median ~ {:.3} + {:.3} ln n (max residual {:.3})",
                    f.intercept, f.slope, f.max_residual
                )?;
            }
            Ok(())
        }
        Aggregates::Drift(a) => {
            writeln!(w, "growth holds {}", proportion(&a.growth_holds))?;
            writeln!(w, "gap holds {}", proportion(&a.gap_holds))
        }
        Aggregates::Endgame(a) => {
            writeln!(w, "max mean minority ratio {:.4} (target 7/8)", a.max_mean_ratio)?;
            writeln!(
                w,
                "rounds max {} (bound {}); consensus {}",
                a.rounds.max,
                a.round_bound,
                proportion(&a.consensus)
            )
        }
        Aggregates::Coupling(a) => {
            writeln!(w, "three-sample wins {}", proportion(&a.three_sample_wins))?;
            writeln!(w, "two-sample wins {}", proportion(&a.two_sample_wins))
        }
        Aggregates::Ell(a) => {
            writeln!(w, "{:>6} {:>14} {:>10} {:>10}", "ell", "lambda^ell", "wins", "timeouts")?;
            for p in &a.points {
                let e = p.effective_lambda.map_or("n/a".to_string(), |e| format!("{e:.6}"));
                writeln!(
                    w,
                    "{:>6} {:>14} {:>10.3} {:>10.3}",
                    p.walk_length, e, p.plurality_wins.frequency, p.timeouts.frequency
                )?;
            }
            Ok(())
        }
    }
}

pub fn print_report(w: &mut impl Write, r: &CampaignReport) -> std::io::Result<()> {
    let g = &r.graph;
    let lambda = g.lambda.map_or("n/a".to_string(), |l| format!("{l:.6}"));
    let degree = g.regular_degree.map_or("irregular".to_string(), |d| format!("{d}-regular"));
    let kind = serde_json::to_value(r.campaign).ok();
    let kind = kind.as_ref().and_then(|k| k.as_str()).unwrap_or("?");
    writeln!(w, "campaign {kind}: n = {}, m = {}, {degree}, lambda = {lambda}", g.n, g.m)?;
    print_hypotheses(w, &r.hypotheses)?;
    print_headline(w, &r.aggregates)?;
    writeln!(w, "checks:")?;
    for c in &r.checks {
        let tag = match (c.passed, c.descriptive) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (true, true) => "pass*",
            (false, true) => "fail*",
        };
        writeln!(w, "  {tag:<5} {} (observed {:.6}, bound {:.6})", c.name, c.observed + 0.0, c.bound)?;
    }
    if r.checks.iter().any(|c| c.descriptive) {
        writeln!(w, "  (* descriptive: the literal hypotheses do not hold here)")?;
    }
    Ok(())
}
