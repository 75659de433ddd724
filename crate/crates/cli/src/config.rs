use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use planeseg::{CannyConfig, RefineConfig};
use serde::{Deserialize, Serialize};

/// Where edge maps come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeSource {
    /// Adaptive Canny on the input image.
    AdaptiveCanny,
    /// A precomputed edge-strength map at image resolution. The template may
    /// use `{stem}` (image file stem) and `{dir}` (image directory).
    External(String),
    /// Like `External`, but the map may have any size and is resized to the image.
    ExternalResized(String),
}

impl EdgeSource {
    pub fn resolve(template: &str, image: &Path) -> PathBuf {
        let stem = image.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
        let dir = image.parent().map(|d| d.to_string_lossy()).unwrap_or_default();
        let dir = if dir.is_empty() { ".".into() } else { dir };
        PathBuf::from(template.replace("{stem}", &stem).replace("{dir}", &dir))
    }
}

impl FromStr for EdgeSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "adaptive-canny" {
            return Ok(EdgeSource::AdaptiveCanny);
        }
        if let Some(t) = s.strip_prefix("external-resized:") {
            return Ok(EdgeSource::ExternalResized(t.to_string()));
        }
        if let Some(t) = s.strip_prefix("external:") {
            return Ok(EdgeSource::External(t.to_string()));
        }
        Err(format!(
            "unknown edge source `{s}` (expected adaptive-canny, external:<template> or external-resized:<template>)"
        ))
    }
}

impl fmt::Display for EdgeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeSource::AdaptiveCanny => f.write_str("adaptive-canny"),
            EdgeSource::External(t) => write!(f, "external:{t}"),
            EdgeSource::ExternalResized(t) => write!(f, "external-resized:{t}"),
        }
    }
}

impl Serialize for EdgeSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EdgeSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Worker threads for masks and scenes.
    pub jobs: usize,
    pub edge_source: EdgeSource,
    /// Gray level at or above which an edge-strength map counts as edge.
    pub edge_threshold: u8,
    /// Run Canny on the image downscaled to `lowres_size` and scale the result back.
    pub canny_lowres: bool,
    pub lowres_size: [u32; 2],
    pub canny: CannyConfig,
    pub refine: RefineConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            jobs: 1,
            edge_source: EdgeSource::AdaptiveCanny,
            edge_threshold: 128,
            canny_lowres: false,
            lowres_size: [640, 480],
            canny: CannyConfig::default(),
            refine: RefineConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads an optional TOML file, applies `key=value` overrides (dotted
    /// keys address nested tables) and validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                text.parse::<toml::Table>()
                    .with_context(|| format!("invalid TOML in {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: PipelineConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let origin = path.map_or_else(|| "overrides".to_string(), |p| p.display().to_string());
            anyhow::anyhow!("invalid configuration ({origin}) at `{}`: {}", e.path(), e.inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.jobs == 0 {
            bail!("jobs must be at least 1");
        }
        if self.lowres_size.contains(&0) {
            bail!("lowres_size must be positive");
        }
        self.refine.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> anyhow::Result<()> {
    let Some((key, raw)) = spec.split_once('=') else {
        bail!("override `{spec}` is not of the form key=value");
    };
    let key = key.trim();
    let raw = raw.trim();
    // Values parse as TOML; anything else is taken as a bare string.
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key `{key}` is malformed");
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("override key `{key}`: `{p}` is not a table"),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
