//! Config-file parsing and flag resolution. Precedence: library defaults,
//! then the JSON config file, then explicit command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use beamlab_core::channel::{read_spec, ChannelSpec, GenMode, Level};
use beamlab_core::decoder::{BeamConfig, PenaltyConfig, PenaltyMode};
use clap::Args;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer};

/// f64 that also accepts "inf", "-inf", and "nan" strings, matching the
/// extended notation used in results files.
pub fn parse_extended_f64(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("bad number {other:?}: {e}")),
    }
}

fn de_extended<'de, D: Deserializer<'de>>(de: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }
    match Option::<Raw>::deserialize(de)? {
        None => Ok(None),
        Some(Raw::Num(v)) => Ok(Some(v)),
        Some(Raw::Str(s)) => parse_extended_f64(&s).map(Some).map_err(D::Error::custom),
    }
}

fn de_extended_vec<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }
    Vec::<Raw>::deserialize(de)?
        .into_iter()
        .map(|raw| match raw {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => parse_extended_f64(&s).map_err(D::Error::custom),
        })
        .collect()
}

pub fn parse_level(s: &str) -> Result<Level, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("expected sentence or document, got {s:?}"))
}

pub fn parse_mode(s: &str) -> Result<GenMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("expected train or test, got {s:?}"))
}

pub fn parse_penalty_mode(s: &str) -> Result<PenaltyMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("expected none, eos, or coverage, got {s:?}"))
}

/// Grid of penalty settings swept by `compare`; empty axes fall back to the
/// single resolved flag value.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub alpha: Vec<f64>,
    #[serde(deserialize_with = "de_extended_vec")]
    pub tau: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Sweep {
    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty() && self.tau.is_empty() && self.beta.is_empty()
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub level: Option<Level>,
    pub pairs: Option<usize>,
    pub mode: Option<GenMode>,
    pub spec: Option<PathBuf>,
    pub beam: Option<usize>,
    pub alpha: Option<f64>,
    pub penalty: Option<PenaltyMode>,
    #[serde(deserialize_with = "de_extended")]
    pub tau: Option<f64>,
    pub beta: Option<f64>,
    pub cap: Option<usize>,
    pub beta_cov: Option<f64>,
    pub temperature: Option<f64>,
    pub max_len: Option<usize>,
    pub bin_width: Option<f64>,
    pub sweep: Option<Sweep>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        match path {
            None => Ok(FileConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))
            }
        }
    }
}

/// Decoding flags shared by `decode` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct DecodeFlags {
    /// Beam width
    #[arg(long)]
    pub beam: Option<usize>,
    /// Length-normalization exponent
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Penalty mode: none, eos, or coverage
    #[arg(long, value_parser = parse_penalty_mode)]
    pub penalty: Option<PenaltyMode>,
    /// Risk threshold on the EOS margin; accepts -inf
    #[arg(long, value_parser = parse_extended_f64, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// EOS penalty strength
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Length cap in the EOS penalty weight
    #[arg(long)]
    pub cap: Option<usize>,
    /// Coverage penalty strength
    #[arg(long = "beta-cov", allow_hyphen_values = true)]
    pub beta_cov: Option<f64>,
    /// Softmax temperature applied to step distributions
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Emission length cap; defaults to the per-source bound
    #[arg(long = "max-len")]
    pub max_len: Option<usize>,
}

pub fn resolve_beam(flags: &DecodeFlags, file: &FileConfig) -> Result<BeamConfig> {
    let defaults = BeamConfig::default();
    let beam = BeamConfig {
        beam_size: flags.beam.or(file.beam).unwrap_or(defaults.beam_size),
        alpha: flags.alpha.or(file.alpha).unwrap_or(defaults.alpha),
        max_len: flags.max_len.or(file.max_len).or(defaults.max_len),
        min_len: defaults.min_len,
        expansion_factor: defaults.expansion_factor,
        temperature: flags
            .temperature
            .or(file.temperature)
            .unwrap_or(defaults.temperature),
    };
    beam.validate()?;
    Ok(beam)
}

pub fn resolve_penalty(flags: &DecodeFlags, file: &FileConfig) -> Result<PenaltyConfig> {
    let defaults = PenaltyConfig::default();
    let penalty = PenaltyConfig {
        mode: flags.penalty.or(file.penalty).unwrap_or(defaults.mode),
        tau: flags.tau.or(file.tau).unwrap_or(defaults.tau),
        beta: flags.beta.or(file.beta).unwrap_or(defaults.beta),
        cap: flags.cap.or(file.cap).unwrap_or(defaults.cap),
        beta_cov: flags.beta_cov.or(file.beta_cov).unwrap_or(defaults.beta_cov),
    };
    penalty.validate()?;
    Ok(penalty)
}

/// Channel spec resolution: explicit spec file, else defaults for the level.
pub fn resolve_spec(
    flag_spec: Option<&Path>,
    file: &FileConfig,
    level: Level,
) -> Result<ChannelSpec> {
    let path = flag_spec.or(file.spec.as_deref());
    match path {
        Some(path) => {
            read_spec(path).with_context(|| format!("reading channel spec {}", path.display()))
        }
        None => Ok(match level {
            Level::Sentence => ChannelSpec::sentence(),
            Level::Document => ChannelSpec::document(),
        }),
    }
}
