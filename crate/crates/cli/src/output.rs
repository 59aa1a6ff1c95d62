//! Header block and file writers shared by the subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// `sha256:<hex>` of the compact JSON encoding of `value`.
pub fn config_hash(value: &impl Serialize) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    let digest = Sha256::digest(&bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("sha256:{hex}"))
}

pub fn timestamp(enabled: bool) -> Option<String> {
    enabled.then(|| humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub config: Value,
}

impl Header {
    pub fn new(command: &'static str, config: &impl Serialize, generated_at: Option<String>) -> Result<Self> {
        Ok(Header {
            tool: "pullvote",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config_hash(config)?,
            generated_at,
            config: serde_json::to_value(config)?,
        })
    }

    /// `#` comment lines for text outputs (CSV, edge lists).
    pub fn comment(&self) -> String {
        let mut s = format!("# {} {} {}\n# config_hash={}\n", self.tool, self.version, self.command, self.config_hash);
        if let Some(t) = &self.generated_at {
            s.push_str(&format!("# generated_at={t}\n"));
        }
        s
    }

    /// `{"header": ..., key: body}` pretty printed, with a trailing newline.
    pub fn document(&self, key: &str, body: &impl Serialize) -> Result<String> {
        let mut map = serde_json::Map::new();
        map.insert("header".into(), serde_json::to_value(self)?);
        map.insert(key.into(), serde_json::to_value(body)?);
        let mut s = serde_json::to_string_pretty(&Value::Object(map))?;
        s.push('\n');
        Ok(s)
    }
}

/// Create `path` (and missing parent directories) and fill it via `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, |w| Ok(w.write_all(text.as_bytes())?))
}
