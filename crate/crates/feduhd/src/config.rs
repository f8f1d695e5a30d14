//! Experiment configuration.
//!
//! A config is a TOML file, or JSON when the file name ends in `.json`.
//! Unknown keys are rejected. After parsing, [`ExperimentConfig::validate`]
//! checks every range and reports the offending key by its dotted path.

use std::path::{Path, PathBuf};

use feduhd_core::{ChannelModel, Links, Mapping};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Overrides all four seeds when set to an integer.
pub const SEED_OVERRIDE_ENV: &str = "FEDUHD_SEED_OVERRIDE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub output_dir: PathBuf,
    /// Worker threads for client rounds; defaults to the client count capped at
    /// the available parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub federation: FederationConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    pub seeds: Seeds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Synthetic Gaussian blobs.
    Blobs,
    /// CSV in the native format.
    Csv,
    /// An unpacked UCI HAR directory; it carries its own test split.
    UciHar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Separate held-out CSV; when absent the data is split by `test_fraction`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_path: Option<PathBuf>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Z-score features with statistics of the training split.
    #[serde(default)]
    pub standardize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blobs: Option<BlobsConfig>,
}

fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobsConfig {
    pub num_classes: usize,
    pub per_class: usize,
    pub feature_dim: usize,
    pub separation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccMapping {
    #[default]
    OneToOne,
    ManyToOne,
}

impl From<AccMapping> for Mapping {
    fn from(m: AccMapping) -> Self {
        match m {
            AccMapping::OneToOne => Mapping::OneToOne,
            AccMapping::ManyToOne => Mapping::ManyToOne,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hdc_dim: usize,
    pub num_clusters: usize,
    pub local_epochs: usize,
    pub knn_k: usize,
    pub rounds: usize,
    #[serde(default)]
    pub acc_mapping: AccMapping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FederationConfig {
    pub num_clients: usize,
    pub dirichlet_alpha: f64,
    #[serde(default = "default_participation")]
    pub participation: f64,
}

fn default_participation() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKindName {
    #[default]
    Noiseless,
    PacketLoss,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinksName {
    #[default]
    Both,
    Uplink,
    Downlink,
}

impl From<LinksName> for Links {
    fn from(l: LinksName) -> Self {
        match l {
            LinksName::Both => Links::Both,
            LinksName::Uplink => Links::UplinkOnly,
            LinksName::Downlink => Links::DownlinkOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default)]
    pub kind: ChannelKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub links: LinksName,
}

impl ChannelConfig {
    pub fn noiseless() -> Self {
        ChannelConfig::default()
    }

    pub fn packet_loss(p: f64) -> Self {
        ChannelConfig { kind: ChannelKindName::PacketLoss, loss_rate: Some(p), ..Default::default() }
    }

    pub fn gaussian(sigma: f64) -> Self {
        ChannelConfig { kind: ChannelKindName::Gaussian, sigma: Some(sigma), ..Default::default() }
    }

    /// Checks the parameters; `at` is the dotted path used in messages.
    pub fn validate(&self, at: &str) -> Result<()> {
        match self.kind {
            ChannelKindName::Noiseless => {
                if self.loss_rate.is_some() || self.sigma.is_some() {
                    return Err(CliError::schema(at, "a noiseless channel takes no parameters"));
                }
            }
            ChannelKindName::PacketLoss => {
                let p = self
                    .loss_rate
                    .ok_or_else(|| CliError::schema(format!("{at}.loss_rate"), "required for packet_loss"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(CliError::schema(format!("{at}.loss_rate"), format!("must lie in [0, 1], got {p}")));
                }
                if self.sigma.is_some() {
                    return Err(CliError::schema(format!("{at}.sigma"), "not used by packet_loss"));
                }
            }
            ChannelKindName::Gaussian => {
                let s = self.sigma.ok_or_else(|| CliError::schema(format!("{at}.sigma"), "required for gaussian"))?;
                if !(s.is_finite() && s >= 0.0) {
                    return Err(CliError::schema(format!("{at}.sigma"), format!("must be finite and ≥ 0, got {s}")));
                }
                if self.loss_rate.is_some() {
                    return Err(CliError::schema(format!("{at}.loss_rate"), "not used by gaussian"));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self, seed: u64) -> Result<ChannelModel> {
        let model = match self.kind {
            ChannelKindName::Noiseless => ChannelModel::noiseless(),
            ChannelKindName::PacketLoss => ChannelModel::packet_loss(self.loss_rate.unwrap_or(0.0), seed)?,
            ChannelKindName::Gaussian => ChannelModel::gaussian(self.sigma.unwrap_or(0.0), seed)?,
        };
        Ok(model.with_links(self.links.into()))
    }

    /// Short label such as `packet_loss(p=0.3)`.
    pub fn label(&self) -> String {
        match self.kind {
            ChannelKindName::Noiseless => "noiseless".into(),
            ChannelKindName::PacketLoss => format!("packet_loss(p={})", self.loss_rate.unwrap_or(0.0)),
            ChannelKindName::Gaussian => format!("gaussian(sigma={})", self.sigma.unwrap_or(0.0)),
        }
    }

    /// Parses `noiseless`, `packet_loss:<p>` or `gaussian:<sigma>`.
    pub fn parse_point(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, value) = match s.split_once(':') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (s, None),
        };
        let number = |v: Option<&str>| -> Result<f64> {
            v.and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::schema("--sweep", format!("`{s}` needs a numeric parameter")))
        };
        let point = match kind {
            "noiseless" if value.is_none() => ChannelConfig::noiseless(),
            "packet_loss" => ChannelConfig::packet_loss(number(value)?),
            "gaussian" => ChannelConfig::gaussian(number(value)?),
            _ => return Err(CliError::schema("--sweep", format!("unknown sweep point `{s}`"))),
        };
        point.validate("--sweep")?;
        Ok(point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub projection: u64,
    pub init: u64,
    /// Drives blob generation, the train/test split and the client partition.
    pub partition: u64,
    pub channel: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Seeds { projection: seed, init: seed, partition: seed, channel: seed }
    }

    /// Shifts every seed by `offset` (wrapping).
    pub fn offset(self, offset: u64) -> Self {
        Seeds {
            projection: self.projection.wrapping_add(offset),
            init: self.init.wrapping_add(offset),
            partition: self.partition.wrapping_add(offset),
            channel: self.channel.wrapping_add(offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub points: Vec<ChannelConfig>,
    /// Each repeat shifts all seeds by the repeat index.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_repeats() -> usize {
    1
}

impl ExperimentConfig {
    /// Reads, parses, applies the seed override from the environment and
    /// validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::schema(path.display().to_string(), format!("cannot read: {e}")))?;
        let mut config = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        if let Ok(raw) = std::env::var(SEED_OVERRIDE_ENV) {
            let seed = raw
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::schema(SEED_OVERRIDE_ENV, format!("`{raw}` is not a non-negative integer")))?;
            config.seeds = Seeds::all(seed);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::schema(toml_error_path(&e, text), e.message().to_owned()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| CliError::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.workers == Some(0) {
            return Err(CliError::schema("workers", "must be at least 1"));
        }

        let d = &self.dataset;
        match d.source {
            DatasetSource::Blobs => {
                let b = d.blobs.as_ref().ok_or_else(|| CliError::schema("dataset.blobs", "required for source = \"blobs\""))?;
                positive("dataset.blobs.num_classes", b.num_classes)?;
                positive("dataset.blobs.per_class", b.per_class)?;
                positive("dataset.blobs.feature_dim", b.feature_dim)?;
                if !(b.separation.is_finite() && b.separation > 0.0) {
                    return Err(CliError::schema("dataset.blobs.separation", format!("must be positive, got {}", b.separation)));
                }
                if d.path.is_some() || d.test_path.is_some() {
                    return Err(CliError::schema("dataset.path", "not used when source = \"blobs\""));
                }
            }
            DatasetSource::Csv | DatasetSource::UciHar => {
                if d.path.is_none() {
                    return Err(CliError::schema("dataset.path", "required for file datasets"));
                }
                if d.blobs.is_some() {
                    return Err(CliError::schema("dataset.blobs", "only used when source = \"blobs\""));
                }
                if d.source == DatasetSource::UciHar && d.test_path.is_some() {
                    return Err(CliError::schema("dataset.test_path", "the HAR directory already holds a test split"));
                }
            }
        }
        if !(d.test_fraction > 0.0 && d.test_fraction < 1.0) {
            return Err(CliError::schema("dataset.test_fraction", format!("must lie in (0, 1), got {}", d.test_fraction)));
        }

        let m = &self.model;
        positive("model.hdc_dim", m.hdc_dim)?;
        positive("model.num_clusters", m.num_clusters)?;
        positive("model.local_epochs", m.local_epochs)?;
        positive("model.knn_k", m.knn_k)?;
        positive("model.rounds", m.rounds)?;
        if m.num_clusters > u32::MAX as usize {
            return Err(CliError::schema("model.num_clusters", "too large"));
        }

        let f = &self.federation;
        positive("federation.num_clients", f.num_clients)?;
        if f.num_clients > u32::MAX as usize {
            return Err(CliError::schema("federation.num_clients", "too large"));
        }
        if !(f.dirichlet_alpha.is_finite() && f.dirichlet_alpha > 0.0) {
            return Err(CliError::schema(
                "federation.dirichlet_alpha",
                format!("must be a positive number, got {}", f.dirichlet_alpha),
            ));
        }
        if f.participation != 1.0 {
            return Err(CliError::schema("federation.participation", "only full participation (1.0) is supported"));
        }

        self.channel.validate("channel")?;
        if let Some(sweep) = &self.sweep {
            positive("sweep.repeats", sweep.repeats)?;
            for (i, p) in sweep.points.iter().enumerate() {
                p.validate(&format!("sweep.points[{i}]"))?;
            }
        }
        Ok(())
    }
}

fn positive(path: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(CliError::schema(path, "must be at least 1"));
    }
    Ok(())
}

// Best effort: the dotted key path at the error span, else `line N`.
fn toml_error_path(e: &toml::de::Error, text: &str) -> String {
    let Some(span) = e.span() else { return "<config>".into() };
    let start = span.start.min(text.len());
    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let line = text[..line_start].matches('\n').count() + 1;
    let table = text[..line_start]
        .lines()
        .map(str::trim)
        .rfind(|t| t.starts_with('[') && t.ends_with(']'))
        .map(|t| t.trim_matches(|c| c == '[' || c == ']').trim().to_owned())
        .unwrap_or_default();
    let key = text[line_start..]
        .lines()
        .next()
        .and_then(|l| l.split_once('='))
        .map(|(k, _)| k.trim().to_owned())
        .filter(|k| !k.is_empty() && !k.starts_with('['));
    match (table.is_empty(), key) {
        (true, Some(k)) => format!("{k} (line {line})"),
        (false, Some(k)) => format!("{table}.{k} (line {line})"),
        (false, None) => format!("{table} (line {line})"),
        (true, None) => format!("line {line}"),
    }
}
