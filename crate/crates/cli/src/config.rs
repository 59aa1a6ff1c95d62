//! TOML run configuration with `--set` overrides.
//!
//! ```toml
//! [graph]
//! family = "random-regular"
//! n = 1000
//! d = 10
//! seed = 5
//!
//! [initial]
//! proportions = [0.5, 0.3, 0.2]
//!
//! [protocol]
//! rule = "two-sample"
//!
//! [campaign]
//! kind = "win-probability"
//! trials = 100
//! seed = 1
//!
//! [output]
//! json = "report.json"
//! csv = "report.csv"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use pullvote::experiment::{CampaignKind, ExperimentSpec, InitialSpec};
use pullvote::{Execution, GraphDescriptor, GraphFamily, ProtocolSpec};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default)]
    pub campaign: CampaignSection,
    /// Output locations are not part of the hashed configuration.
    #[serde(default, skip_serializing)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<CampaignKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk_lengths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_class_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxed_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution: Option<Execution>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

/// One `section.key = value` assignment applied on top of the file.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub key: Vec<String>,
    pub value: toml::Value,
}

impl Override {
    pub fn new(key: &str, value: impl Into<toml::Value>) -> Self {
        Override {
            key: key.split('.').map(str::to_string).collect(),
            value: value.into(),
        }
    }

    /// Parse `section.key=value`. The value is read as a TOML value when it
    /// parses as one and taken as a bare string otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        let (key, raw) = text
            .split_once('=')
            .ok_or_else(|| anyhow!("override {text:?} is not of the form section.key=value"))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            bail!("override {text:?} has an empty key");
        }
        let raw = raw.trim();
        let value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").unwrap(),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        Ok(Override::new(key, value))
    }

    fn apply(&self, table: &mut toml::Table) -> Result<()> {
        let (last, parents) = self.key.split_last().unwrap();
        let mut cur = table;
        for part in parents {
            let entry = cur
                .entry(part.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry
                .as_table_mut()
                .ok_or_else(|| anyhow!("cannot set {}: `{part}` is not a section", self.key.join(".")))?;
        }
        cur.insert(last.clone(), self.value.clone());
        Ok(())
    }
}

impl Config {
    /// Read `path` (if any), resolve a relative graph path against the file's
    /// directory, then apply `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[Override]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let mut t: toml::Table = text.parse().with_context(|| format!("parsing {}", p.display()))?;
                if let Some(dir) = p.parent() {
                    rebase_graph_path(&mut t, dir);
                }
                t
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            o.apply(&mut table)?;
        }
        let config: Config = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            match path {
                Some(p) => anyhow!("{}: {}", p.display(), e.message()),
                None => anyhow!("{}", e.message()),
            }
        })?;
        Ok(config)
    }

    fn require<'a, T>(value: &'a Option<T>, what: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| anyhow!("missing {what}"))
    }

    pub fn graph(&self) -> Result<&GraphDescriptor> {
        Self::require(&self.graph, "[graph] section")
    }

    pub fn initial(&self) -> Result<&InitialSpec> {
        Self::require(&self.initial, "[initial] section")
    }

    pub fn protocol(&self) -> Result<&ProtocolSpec> {
        Self::require(&self.protocol, "[protocol] section")
    }

    pub fn seed(&self) -> Result<u64> {
        self.campaign
            .seed
            .ok_or_else(|| anyhow!("missing [campaign] seed (set it in the file or pass --seed)"))
    }

    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        let kind = *Self::require(&self.campaign.kind, "[campaign] kind")?;
        let c = &self.campaign;
        let mut spec = ExperimentSpec::new(
            kind,
            self.graph()?.clone(),
            self.initial()?.clone(),
            *self.protocol()?,
            self.seed()?,
        );
        if let Some(t) = c.trials {
            spec.trials = t;
        }
        spec.samples = c.samples;
        if let Some(r) = c.max_rounds {
            spec.max_rounds = r;
        }
        spec.sweep_n = c.sweep_n.clone().unwrap_or_default();
        spec.walk_lengths = c.walk_lengths.clone().unwrap_or_default();
        spec.two_class_sizes = c.two_class_sizes.clone();
        if let Some(r) = c.relaxed_constant {
            spec.relaxed_constant = r;
        }
        if let Some(d) = c.dense_limit {
            spec.dense_limit = d;
        }
        if let Some(e) = c.execution {
            spec.execution = e;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn rebase_graph_path(table: &mut toml::Table, dir: &Path) {
    let Some(graph) = table.get_mut("graph").and_then(toml::Value::as_table_mut) else {
        return;
    };
    if graph.get("family").and_then(toml::Value::as_str) != Some("file") {
        return;
    }
    if let Some(toml::Value::String(p)) = graph.get_mut("path") {
        let rel = Path::new(p.as_str());
        if rel.is_relative() && !dir.as_os_str().is_empty() {
            *p = dir.join(rel).to_string_lossy().into_owned();
        }
    }
}

/// Build a descriptor from command-line graph flags.
pub fn descriptor(
    family: GraphFamily,
    n: Option<usize>,
    d: Option<usize>,
    seed: Option<u64>,
    cliques: Option<usize>,
    clique_size: Option<usize>,
    path: Option<PathBuf>,
) -> GraphDescriptor {
    GraphDescriptor {
        n,
        d,
        seed,
        path,
        cliques,
        clique_size,
        ..GraphDescriptor::new(family)
    }
}

pub fn parse_family(s: &str) -> Result<GraphFamily, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        format!(
            "unknown family {s:?}; expected one of complete-with-loops, odd-cycle, random-regular, torus-grid, ring-of-cliques, file"
        )
    })
}
