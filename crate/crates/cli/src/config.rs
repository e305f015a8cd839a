//! Run configuration: command-line flags over an optional TOML file over
//! built-in defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use wavedeblur_core::{BinarizeMethod, StyleMode, TransferConfig};

pub const DEFAULT_WINDOW: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinarizeKind {
    #[default]
    Otsu,
    AdaptiveMean,
}

impl fmt::Display for BinarizeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinarizeKind::Otsu => "otsu",
            BinarizeKind::AdaptiveMean => "adaptive-mean",
        })
    }
}

impl FromStr for BinarizeKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "otsu" => Ok(BinarizeKind::Otsu),
            "adaptive-mean" => Ok(BinarizeKind::AdaptiveMean),
            other => bail!("unknown binarization method {other:?} (expected otsu or adaptive-mean)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub level: u32,
    pub style_mode: StyleMode,
    pub epsilon: f64,
    pub seed: u64,
    pub threads: usize,
    pub binarize_method: BinarizeKind,
    pub window: usize,
    pub offset: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TransferConfig::default();
        Self {
            level: t.level,
            style_mode: t.style_mode,
            epsilon: t.epsilon,
            seed: 0,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            binarize_method: BinarizeKind::Otsu,
            window: DEFAULT_WINDOW,
            offset: 0.0,
        }
    }
}

/// Optional values from flags or a config file; `None` defers to the next
/// source.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunOverrides {
    pub level: Option<u32>,
    #[serde(default, deserialize_with = "style_mode_opt")]
    pub style_mode: Option<StyleMode>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub binarize_method: Option<BinarizeKind>,
    pub window: Option<usize>,
    pub offset: Option<f64>,
}

fn style_mode_opt<'de, D>(d: D) -> std::result::Result<Option<StyleMode>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let raw: Option<String> = Option::deserialize(d)?;
    raw.map(|s| s.parse().map_err(serde::de::Error::custom))
        .transpose()
}

impl RunOverrides {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    fn or(self, fallback: RunOverrides) -> RunOverrides {
        RunOverrides {
            level: self.level.or(fallback.level),
            style_mode: self.style_mode.or(fallback.style_mode),
            epsilon: self.epsilon.or(fallback.epsilon),
            seed: self.seed.or(fallback.seed),
            threads: self.threads.or(fallback.threads),
            binarize_method: self.binarize_method.or(fallback.binarize_method),
            window: self.window.or(fallback.window),
            offset: self.offset.or(fallback.offset),
        }
    }
}

impl RunConfig {
    /// Flags win over the config file, which wins over defaults.
    pub fn resolve(flags: RunOverrides, file: Option<RunOverrides>) -> Result<Self> {
        let merged = flags.or(file.unwrap_or_default());
        let d = RunConfig::default();
        let cfg = RunConfig {
            level: merged.level.unwrap_or(d.level),
            style_mode: merged.style_mode.unwrap_or(d.style_mode),
            epsilon: merged.epsilon.unwrap_or(d.epsilon),
            seed: merged.seed.unwrap_or(d.seed),
            threads: merged.threads.unwrap_or(d.threads),
            binarize_method: merged.binarize_method.unwrap_or(d.binarize_method),
            window: merged.window.unwrap_or(d.window),
            offset: merged.offset.unwrap_or(d.offset),
        };
        if cfg.threads == 0 {
            bail!("threads must be at least 1");
        }
        cfg.transfer_config()
            .validate()
            .context("invalid run configuration")?;
        Ok(cfg)
    }

    pub fn binarize(&self) -> BinarizeMethod {
        match self.binarize_method {
            BinarizeKind::Otsu => BinarizeMethod::Otsu,
            BinarizeKind::AdaptiveMean => BinarizeMethod::AdaptiveMean {
                window: self.window,
                offset: self.offset,
            },
        }
    }

    pub fn transfer_config(&self) -> TransferConfig {
        TransferConfig {
            level: self.level,
            epsilon: self.epsilon,
            style_mode: self.style_mode,
            binarize: self.binarize(),
        }
    }
}
