//! Run configuration: TOML file plus command-line overrides.
//!
//! File layout:
//!
//! ```toml
//! backend = "scripted:fixtures/model.json"   # or "tiny:V,L,d,heads,seed"
//! input = "prompts.jsonl"
//! output = "out.jsonl"
//! trace = "trace.jsonl"                      # optional
//! workers = 1
//!
//! [decoder]
//! alpha = 2.5
//! gamma = 0.3
//! mode = "fmlds"            # or "conmlds"
//! gating = true
//! layers = "auto"           # or "M:N"
//! max_span_len = 8
//! max_candidates = 8
//! commit = "span"           # or "token"
//! length_normalize = true
//! max_new_tokens = 64
//! eos_tokens = [3]
//! seed = 0
//!
//! [judge]
//! endpoint = "https://judge.example/v1/chat/completions"
//! model = "judge-model"
//! ```
//!
//! Command-line flags override file values; anything absent falls back to the
//! defaults alpha=2.5, gamma=0.3, mode=fmlds, gating=on.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use cocoa_core::{
    Backend, CommitMode, DecodeConfig, LayerWindowSpec, MldsMode, ScriptedModel, TinyTransformer,
    TokenId,
};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub decoder: DecoderSection,
    pub judge: Option<JudgeSection>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DecoderSection {
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub mode: Option<String>,
    pub gating: Option<bool>,
    pub layers: Option<String>,
    pub max_span_len: Option<usize>,
    pub max_candidates: Option<usize>,
    pub commit: Option<String>,
    pub length_normalize: Option<bool>,
    pub max_new_tokens: Option<usize>,
    pub eos_tokens: Option<Vec<u32>>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeSection {
    pub endpoint: String,
    pub model: Option<String>,
    pub max_retries: Option<u32>,
}

impl JudgeSection {
    /// Client settings for the configured judge; the credential comes from
    /// the environment.
    pub fn to_judge_config(&self) -> cocoa_eval::JudgeConfig {
        let model = self.model.clone().unwrap_or_else(|| "judge".into());
        let mut config = cocoa_eval::JudgeConfig::new(&self.endpoint, model);
        if let Some(retries) = self.max_retries {
            config.max_retries = retries;
        }
        config
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))
    }
}

/// Which backend a run drives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Scripted(PathBuf),
    Tiny {
        vocab_size: usize,
        num_layers: usize,
        hidden_dim: usize,
        num_heads: usize,
        seed: u64,
    },
}

impl BackendSpec {
    /// Parses `scripted:<path>` or `tiny:V,L,d,heads,seed`.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(path) = spec.strip_prefix("scripted:") {
            if path.is_empty() {
                bail!("scripted backend needs a file path");
            }
            return Ok(BackendSpec::Scripted(PathBuf::from(path)));
        }
        if let Some(dims) = spec.strip_prefix("tiny:") {
            let parts: Vec<&str> = dims.split(',').map(str::trim).collect();
            if parts.len() != 5 {
                bail!("tiny backend spec needs V,L,d,heads,seed, got {dims:?}");
            }
            return Ok(BackendSpec::Tiny {
                vocab_size: parts[0].parse().context("tiny: bad vocab size")?,
                num_layers: parts[1].parse().context("tiny: bad layer count")?,
                hidden_dim: parts[2].parse().context("tiny: bad hidden dim")?,
                num_heads: parts[3].parse().context("tiny: bad head count")?,
                seed: parts[4].parse().context("tiny: bad seed")?,
            });
        }
        bail!("backend spec must start with scripted: or tiny:, got {spec:?}")
    }

    pub fn build(&self) -> Result<Box<dyn Backend>> {
        match self {
            BackendSpec::Scripted(path) => {
                let model = ScriptedModel::load(path)
                    .with_context(|| format!("loading scripted model {}", path.display()))?;
                Ok(Box::new(model))
            }
            BackendSpec::Tiny {
                vocab_size,
                num_layers,
                hidden_dim,
                num_heads,
                seed,
            } => {
                let model =
                    TinyTransformer::new(*vocab_size, *num_layers, *hidden_dim, *num_heads, *seed)
                        .context("building tiny transformer")?;
                Ok(Box::new(model))
            }
        }
    }
}

pub fn parse_mode(text: &str) -> Result<MldsMode> {
    match text {
        "conmlds" => Ok(MldsMode::ConMlds),
        "fmlds" => Ok(MldsMode::FMlds),
        other => bail!("mode must be conmlds or fmlds, got {other:?}"),
    }
}

pub fn parse_gating(text: &str) -> Result<bool> {
    match text {
        "on" => Ok(true),
        "off" => Ok(false),
        other => bail!("gating must be on or off, got {other:?}"),
    }
}

pub fn parse_layers(text: &str) -> Result<LayerWindowSpec> {
    if text == "auto" {
        return Ok(LayerWindowSpec::Auto);
    }
    let (m, n) = text
        .split_once(':')
        .with_context(|| format!("layers must be auto or M:N, got {text:?}"))?;
    Ok(LayerWindowSpec::Explicit {
        m: m.trim().parse().context("layers: bad M")?,
        n: n.trim().parse().context("layers: bad N")?,
    })
}

pub fn parse_commit(text: &str) -> Result<CommitMode> {
    match text {
        "span" => Ok(CommitMode::FullSpan),
        "token" => Ok(CommitMode::FirstToken),
        other => bail!("commit must be span or token, got {other:?}"),
    }
}

/// Fully resolved generate-run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendSpec,
    pub input: PathBuf,
    pub output: PathBuf,
    pub trace: Option<PathBuf>,
    pub workers: usize,
    pub decode: DecodeConfig,
    pub judge: Option<JudgeSection>,
}

/// Flag-level overrides collected by the CLI.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub mode: Option<String>,
    pub gating: Option<String>,
    pub layers: Option<String>,
    pub max_span_len: Option<usize>,
    pub max_candidates: Option<usize>,
    pub commit: Option<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub workers: Option<usize>,
}

pub fn resolve(file: FileConfig, flags: Overrides) -> Result<RunConfig> {
    let defaults = DecodeConfig::default();
    let section = file.decoder;

    let mode = match flags.mode.as_deref().or(section.mode.as_deref()) {
        Some(text) => parse_mode(text)?,
        None => defaults.mode,
    };
    let gating = match flags.gating.as_deref() {
        Some(text) => parse_gating(text)?,
        None => section.gating.unwrap_or(defaults.gating),
    };
    let layer_window = match flags.layers.as_deref().or(section.layers.as_deref()) {
        Some(text) => parse_layers(text)?,
        None => defaults.layer_window,
    };
    let commit_mode = match flags.commit.as_deref().or(section.commit.as_deref()) {
        Some(text) => parse_commit(text)?,
        None => defaults.commit_mode,
    };
    let eos_tokens = section
        .eos_tokens
        .unwrap_or_default()
        .into_iter()
        .map(TokenId)
        .collect();

    let decode = DecodeConfig {
        alpha: flags.alpha.or(section.alpha).unwrap_or(defaults.alpha),
        gamma: flags.gamma.or(section.gamma).unwrap_or(defaults.gamma),
        mode,
        gating,
        layer_window,
        max_span_len: flags
            .max_span_len
            .or(section.max_span_len)
            .unwrap_or(defaults.max_span_len),
        max_candidates: flags
            .max_candidates
            .or(section.max_candidates)
            .unwrap_or(defaults.max_candidates),
        commit_mode,
        length_normalize: section
            .length_normalize
            .unwrap_or(defaults.length_normalize),
        max_new_tokens: section.max_new_tokens.unwrap_or(defaults.max_new_tokens),
        eos_tokens,
        seed: section.seed.unwrap_or(defaults.seed),
    };
    decode
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid decoder settings: {e}"))?;

    let backend = BackendSpec::parse(
        file.backend
            .as_deref()
            .context("config is missing the backend key")?,
    )?;
    let input = flags
        .input
        .or(file.input)
        .context("no input path (config key input or --input)")?;
    let output = flags
        .output
        .or(file.output)
        .context("no output path (config key output or --output)")?;
    let workers = flags.workers.or(file.workers).unwrap_or(1);
    if workers == 0 {
        bail!("workers must be >= 1");
    }

    Ok(RunConfig {
        backend,
        input,
        output,
        trace: flags.trace.or(file.trace),
        workers,
        decode,
        judge: file.judge,
    })
}
