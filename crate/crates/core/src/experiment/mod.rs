//! Seeded Monte Carlo campaigns and their reports.
//!
//! Trial `t` of a campaign with master seed `s` runs with
//! `rng::trial_seed(s, t)` and draws its initial placement from a seed
//! derived from that, so trials are independent of each other and of the
//! order they are executed in. Campaigns that study a single fixed start
//! (drift, coupling) place it once from the master seed.

mod campaigns;
mod report;
mod spec;
mod stats;

use std::sync::atomic::{AtomicBool, Ordering};

pub use campaigns::{
    run_campaign, run_consensus_time, run_coupling_3v2, run_ell_sweep, run_endgame_contraction,
    run_one_step_drift, run_win_probability, round_count_scale,
};
pub use report::{
    Aggregates, CampaignReport, ContractionRound, CouplingAggregates, CouplingClass,
    CouplingRecord, DriftAggregates, EllAggregates, EllPoint, EndgameAggregates, EndgameRecord,
    GraphSummary, MatchedRecord, Records, ReportCheck, RoundRecord, SweepAggregates, SweepPoint,
    SweepRecord, WinAggregates, WinRecord,
};
pub use spec::{
    endgame_round_bound, endgame_round_factor, CampaignKind, ExperimentSpec, HypothesisBlock,
    InitialSpec, ENDGAME_CONTRACTION, ENDGAME_LAMBDA, GROWTH_PHASE_LIMIT, LAMBDA_GAP_DIVISOR,
    SEPARATION_CONSTANT,
};
pub use stats::{wilson_interval, LinearFit, MeanEstimate, Proportion, Quantiles, Z95};

static CANCEL: AtomicBool = AtomicBool::new(false);

/// Ask running campaigns to stop after their current trials. Reports built
/// from the finished trials are marked `interrupted`.
pub fn request_cancel() {
    CANCEL.store(true, Ordering::SeqCst);
}

pub fn cancel_requested() -> bool {
    CANCEL.load(Ordering::Relaxed)
}

pub fn reset_cancel() {
    CANCEL.store(false, Ordering::SeqCst);
}
