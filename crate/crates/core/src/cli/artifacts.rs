use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const TOOL: &str = "multippi";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The configuration a run was invoked with, embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub seed: u64,
    /// Resolved settings; keys are sorted so artifacts are byte-stable.
    pub settings: Value,
}

#[derive(Debug, Clone, Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a RunConfig,
}

/// Writes artifacts into one output directory.
pub struct Artifacts {
    dir: PathBuf,
    config: RunConfig,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path, config: RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Artifacts { dir: dir.to_path_buf(), config, written: Vec::new() })
    }

    fn meta(&self) -> Value {
        json!(Meta { tool: TOOL, version: VERSION, seed: self.config.seed, config: &self.config })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// `{"meta": ..., "report": payload}`.
    pub fn json<T: Serialize>(&mut self, name: &str, payload: &T) -> Result<()> {
        let doc = json!({ "meta": self.meta(), "report": serde_json::to_value(payload)? });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// A JSON document whose top level is `payload` itself with a `meta` key added.
    pub fn json_inline<T: Serialize>(&mut self, name: &str, payload: &T) -> Result<()> {
        let mut doc = serde_json::to_value(payload)?;
        match doc.as_object_mut() {
            Some(map) => {
                map.insert("meta".into(), self.meta());
            }
            None => return Err(Error::Shape("inline artifact must be a JSON object".into())),
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// CSV text preceded by a `#` metadata line.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<()> {
        let mut text = format!(
            "# {TOOL} {VERSION} seed={} config={}\n",
            self.config.seed,
            serde_json::to_string(&self.config)?
        );
        text.push_str(body);
        self.write(name, text.as_bytes())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// Renders rows through the csv writer so fields are quoted when needed.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// File-name-safe form of a site name.
pub fn file_stem(site: &str) -> String {
    site.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}
