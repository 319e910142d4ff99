//! Run metadata embedded in every artifact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

/// Fully resolved settings of one invocation. Worker counts and output paths
/// are left out: they never change an artifact's content.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub settings: BTreeMap<&'static str, Value>,
    pub inputs: Vec<InputDigest>,
}

impl RunConfig {
    pub fn new(subcommand: &'static str) -> Self {
        RunConfig {
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            settings: BTreeMap::new(),
            inputs: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &'static str, value: impl Serialize) -> &mut Self {
        let value = serde_json::to_value(value).expect("setting serializes");
        self.settings.insert(key, value);
        self
    }

    pub fn input(&mut self, path: &Path) -> std::io::Result<&mut Self> {
        self.inputs.push(InputDigest::of(path)?);
        Ok(self)
    }

    /// `# `-prefixed header lines for CSV and text artifacts.
    pub fn comment_header(&self) -> String {
        let mut out = format!(
            "# run: {}\n",
            serde_json::to_string(&RunHeader {
                tool: self.tool,
                version: self.version,
                subcommand: self.subcommand,
                settings: &self.settings,
            })
            .expect("header serializes")
        );
        for input in &self.inputs {
            out.push_str(&format!("# input: {} sha256={}\n", input.path, input.sha256));
        }
        out
    }
}

#[derive(Serialize)]
struct RunHeader<'a> {
    tool: &'a str,
    version: &'a str,
    subcommand: &'a str,
    settings: &'a BTreeMap<&'static str, Value>,
}
