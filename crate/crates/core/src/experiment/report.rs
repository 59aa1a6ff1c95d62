use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::spec::{CampaignKind, ExperimentSpec, HypothesisBlock};
use super::stats::{LinearFit, MeanEstimate, Proportion, Quantiles};
use crate::error::Result;
use crate::spectral::EigenMethod;

/// A named pass/fail comparison inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCheck {
    pub name: String,
    pub observed: f64,
    pub bound: f64,
    /// Allowed statistical margin (already multiplied out, e.g. `3 * se`).
    pub margin: f64,
    pub passed: bool,
    /// Descriptive checks compare quantities without a claimed ordering.
    pub descriptive: bool,
}

impl ReportCheck {
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64, margin: f64) -> Self {
        ReportCheck {
            name: name.into(),
            observed,
            bound,
            margin,
            passed: observed >= bound - margin - 1e-12,
            descriptive: false,
        }
    }

    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64, margin: f64) -> Self {
        ReportCheck {
            name: name.into(),
            observed,
            bound,
            margin,
            passed: observed <= bound + margin + 1e-12,
            descriptive: false,
        }
    }

    pub fn close(name: impl Into<String>, observed: f64, target: f64, margin: f64) -> Self {
        ReportCheck {
            name: name.into(),
            observed,
            bound: target,
            margin,
            passed: (observed - target).abs() <= margin + 1e-12,
            descriptive: false,
        }
    }

    pub fn descriptive(mut self) -> Self {
        self.descriptive = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub regular_degree: Option<usize>,
    pub bipartite: bool,
    pub lambda: Option<f64>,
    pub eigen_method: Option<EigenMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRecord {
    pub trial: usize,
    pub seed: u64,
    pub winner: Option<u32>,
    pub rounds: u64,
    /// `d(A_i) / vol` of every class in this trial's initial placement.
    pub degree_share: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub winner: Option<u32>,
    pub rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub sample: usize,
    pub seed: u64,
    /// `pi(A_j')` for every class after one round from the fixed start.
    pub measures: Vec<f64>,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndgameRecord {
    pub trial: usize,
    pub seed: u64,
    pub winner: Option<u32>,
    pub rounds: u64,
    /// `pi(B)` after every round, starting at round 0.
    pub minority: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub sample: usize,
    pub seed: u64,
    /// `pi(A_j'')` per class.
    pub next_measures: Vec<f64>,
    /// `S_C(A_j')` per class, `A_j'` the first-sample layer.
    pub first_layer_s: Vec<f64>,
    /// `S_C(V \ A_j')` per class.
    pub first_layer_complement_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedRecord {
    pub trial: usize,
    pub seed: u64,
    /// Walk length for the ell sweep, number of samples for the coupling run.
    pub variant: usize,
    pub winner: Option<u32>,
    pub rounds: u64,
}

/// Per-trial records, tagged by campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rows", rename_all = "kebab-case")]
pub enum Records {
    Win(Vec<WinRecord>),
    Sweep(Vec<SweepRecord>),
    Round(Vec<RoundRecord>),
    Endgame(Vec<EndgameRecord>),
    Coupling {
        samples: Vec<CouplingRecord>,
        two_class: Vec<f64>,
        matched: Vec<MatchedRecord>,
    },
    Matched(Vec<MatchedRecord>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinAggregates {
    pub plurality_class: u32,
    pub class_wins: Vec<Proportion>,
    pub plurality_wins: Proportion,
    pub timeouts: Proportion,
    /// Mean over trials of `d(A_i) / vol`, the one-sample win probability.
    pub mean_degree_share: Vec<f64>,
    pub rounds: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub sizes: Vec<usize>,
    pub lambda: Option<f64>,
    /// `(n / A1) ln(A1 / (A1 - A2)) + ln n`.
    pub scale: f64,
    pub rounds: Quantiles,
    pub plurality_wins: Proportion,
    pub timeouts: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregates {
    pub points: Vec<SweepPoint>,
    /// Median rounds against `ln n`.
    pub log_fit: Option<LinearFit>,
    /// Median rounds against the round-count scale.
    pub scale_fit: Option<LinearFit>,
    pub medians_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftAggregates {
    pub plurality_class: u32,
    pub initial_measures: Vec<f64>,
    /// Exact one-round expectation when the rule has a closed form.
    pub expected_measures: Option<Vec<f64>>,
    pub mean_measures: Vec<MeanEstimate>,
    /// Frequency of `A1' >= A1 (1 + (A1 - A2) / 5n)`.
    pub growth_holds: Proportion,
    /// Frequency of `min_j (A1' - Aj') >= (A1 - A2)(1 + A1 / 10n)`.
    pub gap_holds: Proportion,
    pub growth_bound: f64,
    pub gap_bound: f64,
    /// `pi(A1) (1 + Delta / 4)`.
    pub mean_growth_bound: f64,
    pub min_gap: MeanEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionRound {
    pub round: usize,
    pub alive: usize,
    pub ratio: MeanEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndgameAggregates {
    pub majority_class: u32,
    pub contraction: Vec<ContractionRound>,
    pub max_mean_ratio: f64,
    pub round_bound: u64,
    pub rounds: Quantiles,
    pub consensus: Proportion,
    pub majority_wins: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingClass {
    pub class: u32,
    pub measure: f64,
    pub mean_first_layer_s: MeanEstimate,
    pub first_layer_bound: f64,
    pub mean_complement_s: MeanEstimate,
    pub complement_bound: f64,
    /// `pi(A_j'') + S_C(A_j')`, whose mean should be `pi(A_j) + R(V, A_j)`.
    pub identity_sum: MeanEstimate,
    pub identity_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingAggregates {
    pub classes: Vec<CouplingClass>,
    pub two_class_minority: Option<f64>,
    pub two_class_s: Option<MeanEstimate>,
    pub plurality_class: u32,
    pub two_sample_wins: Proportion,
    pub three_sample_wins: Proportion,
    pub two_sample_rounds: Quantiles,
    pub three_sample_rounds: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllPoint {
    pub walk_length: usize,
    pub effective_lambda: Option<f64>,
    pub hypotheses: HypothesisBlock,
    pub plurality_wins: Proportion,
    pub timeouts: Proportion,
    pub rounds: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllAggregates {
    pub plurality_class: u32,
    pub points: Vec<EllPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Aggregates {
    Win(WinAggregates),
    Sweep(SweepAggregates),
    Drift(DriftAggregates),
    Endgame(EndgameAggregates),
    Coupling(CouplingAggregates),
    Ell(EllAggregates),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub campaign: CampaignKind,
    pub spec: ExperimentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub graph: GraphSummary,
    pub hypotheses: HypothesisBlock,
    /// False when any literal precondition of the bound under test fails.
    pub hypotheses_met: bool,
    pub interrupted: bool,
    pub aggregates: Aggregates,
    pub checks: Vec<ReportCheck>,
    pub records: Records,
}

impl CampaignReport {
    /// Every non-descriptive check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.descriptive)
    }

    pub fn check(&self, name: &str) -> Option<&ReportCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `key,value` rows flattening everything except the per-trial records.
    pub fn write_flat_csv(&self, w: &mut impl Write) -> Result<()> {
        let mut value = serde_json::to_value(self)?;
        if let Value::Object(map) = &mut value {
            map.remove("records");
        }
        let mut rows = Vec::new();
        flatten("", &value, &mut rows);
        writeln!(w, "key,value")?;
        for (k, v) in rows {
            writeln!(w, "{k},{}", csv_field(&v))?;
        }
        Ok(())
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let join = |key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_nests_keys() {
        let v: Value = serde_json::json!({"a": {"b": [1, 2]}, "c": "x,y", "d": null});
        let mut rows = Vec::new();
        flatten("", &v, &mut rows);
        assert!(rows.contains(&("a.b.0".into(), "1".into())));
        assert!(rows.contains(&("a.b.1".into(), "2".into())));
        assert!(rows.contains(&("d".into(), String::new())));
        assert_eq!(csv_field("x,y"), "\"x,y\"");
    }

    #[test]
    fn check_constructors() {
        assert!(ReportCheck::at_least("a", 0.9, 1.0, 0.1).passed);
        assert!(!ReportCheck::at_least("a", 0.8, 1.0, 0.1).passed);
        assert!(ReportCheck::at_most("b", 1.05, 1.0, 0.1).passed);
        assert!(!ReportCheck::close("c", 1.2, 1.0, 0.1).passed);
    }
}
