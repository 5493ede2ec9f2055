//! Run configuration: defaults, then the config file, then command-line
//! flags, then environment variables — later layers win. Every command
//! writes a resolved-config snapshot next to its outputs so a run can be
//! reproduced from the snapshot plus the input files.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use qaoa_kit::providers::http::{
    EndpointConfig, HttpChat, HttpEmbedder, CHAT_ENV_PREFIX, EMBED_ENV_PREFIX, JUDGE_ENV_PREFIX,
};
use qaoa_kit::providers::mock::{HashEmbedder, ScriptedChat, SimulatedChat};
use qaoa_kit::providers::{ChatProvider, EmbeddingProvider};

use crate::CliError;

/// `[defaults]` and provider sections of the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct ConfigFile {
    pub defaults: Defaults,
    pub chat: EndpointSection,
    pub judge: EndpointSection,
    pub embed: EndpointSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct Defaults {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub log_level: Option<String>,
    pub providers: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct EndpointSection {
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
}

/// Fully resolved global settings.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub seed: u64,
    pub jobs: usize,
    pub log_level: String,
    pub providers: String,
}

pub struct GlobalFlags {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub log_level: Option<String>,
    pub providers: Option<String>,
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

/// Applies the precedence chain: defaults < config file < flags < env vars.
pub fn resolve(flags: &GlobalFlags) -> Result<(Resolved, ConfigFile), CliError> {
    let file: ConfigFile = match &flags.config {
        None => ConfigFile::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::User(format!("cannot read config file {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| CliError::User(format!("bad config file {}: {e}", path.display())))?
        }
    };

    let mut seed = 0u64;
    let mut jobs = 1usize;
    let mut log_level = "info".to_string();
    let mut providers = "env".to_string();

    if let Some(v) = file.defaults.seed {
        seed = v;
    }
    if let Some(v) = file.defaults.jobs {
        jobs = v;
    }
    if let Some(v) = &file.defaults.log_level {
        log_level = v.clone();
    }
    if let Some(v) = &file.defaults.providers {
        providers = v.clone();
    }

    if let Some(v) = flags.seed {
        seed = v;
    }
    if let Some(v) = flags.jobs {
        jobs = v;
    }
    if let Some(v) = &flags.log_level {
        log_level = v.clone();
    }
    if let Some(v) = &flags.providers {
        providers = v.clone();
    }

    if let Some(v) = env_var("QAOA_SEED") {
        seed = v.parse().map_err(|_| CliError::User(format!("QAOA_SEED '{v}' is not a u64")))?;
    }
    if let Some(v) = env_var("QAOA_JOBS") {
        jobs = v.parse().map_err(|_| CliError::User(format!("QAOA_JOBS '{v}' is not a count")))?;
    }
    if let Some(v) = env_var("QAOA_LOG_LEVEL") {
        log_level = v;
    }
    if let Some(v) = env_var("QAOA_PROVIDERS") {
        providers = v;
    }

    let resolved = Resolved { seed, jobs: jobs.max(1), log_level, providers };
    Ok((resolved, file))
}

/// Provider wiring parsed from the `providers` setting:
///
/// - `env` — HTTP providers from env vars (config-file sections fill gaps);
/// - `mock` / `mock:<seed>` — the deterministic simulated generator/judge
///   and the hash embedder;
/// - `script:<chat.jsonl>[,<judge.jsonl>]` — scripted transcripts.
pub enum ProviderSpec {
    Env,
    Mock { seed: u64 },
    Script { chat: PathBuf, judge: Option<PathBuf> },
}

impl ProviderSpec {
    pub fn parse(spec: &str, default_seed: u64) -> Result<Self, CliError> {
        if spec == "env" {
            return Ok(ProviderSpec::Env);
        }
        if spec == "mock" {
            return Ok(ProviderSpec::Mock { seed: default_seed });
        }
        if let Some(rest) = spec.strip_prefix("mock:") {
            let seed = rest
                .parse()
                .map_err(|_| CliError::User(format!("bad mock seed in '{spec}'")))?;
            return Ok(ProviderSpec::Mock { seed });
        }
        if let Some(rest) = spec.strip_prefix("script:") {
            let mut parts = rest.splitn(2, ',');
            let chat = PathBuf::from(parts.next().unwrap_or_default());
            let judge = parts.next().map(PathBuf::from);
            if chat.as_os_str().is_empty() {
                return Err(CliError::User(format!("no transcript path in '{spec}'")));
            }
            return Ok(ProviderSpec::Script { chat, judge });
        }
        Err(CliError::User(format!(
            "unknown provider spec '{spec}' (expected env, mock[:seed], or script:<path>)"
        )))
    }
}

/// The provider bundle a command runs with.
pub struct Providers {
    pub chat: Box<dyn ChatProvider>,
    pub judge: Box<dyn ChatProvider>,
    pub embedder: Box<dyn EmbeddingProvider>,
}

fn endpoint_from(section: &EndpointSection, prefix: &str) -> Result<EndpointConfig, CliError> {
    let field = |suffix: &str, file_value: &Option<String>| -> Result<String, CliError> {
        let name = format!("{prefix}_{suffix}");
        env_var(&name).or_else(|| file_value.clone()).ok_or_else(|| {
            CliError::User(format!("missing provider setting: set {name} or the config file field"))
        })
    };
    Ok(EndpointConfig::new(
        field("BASE_URL", &section.base_url)?,
        field("API_KEY", &section.api_key)?,
        field("MODEL", &section.model)?,
    ))
}

impl Providers {
    pub fn build(resolved: &Resolved, file: &ConfigFile) -> Result<Self, CliError> {
        match ProviderSpec::parse(&resolved.providers, resolved.seed)? {
            ProviderSpec::Mock { seed } => Ok(Providers {
                chat: Box::new(SimulatedChat::seeded(seed)),
                judge: Box::new(SimulatedChat::seeded(seed.wrapping_add(1))),
                embedder: Box::new(HashEmbedder::default()),
            }),
            ProviderSpec::Script { chat, judge } => {
                let chat_provider = ScriptedChat::from_transcript_file(&chat)
                    .map_err(|e| CliError::User(e.to_string()))?;
                let judge_provider: Box<dyn ChatProvider> = match judge {
                    Some(path) => Box::new(
                        ScriptedChat::from_transcript_file(&path)
                            .map_err(|e| CliError::User(e.to_string()))?,
                    ),
                    None => Box::new(SimulatedChat::seeded(resolved.seed.wrapping_add(1))),
                };
                Ok(Providers {
                    chat: Box::new(chat_provider),
                    judge: judge_provider,
                    embedder: Box::new(HashEmbedder::default()),
                })
            }
            ProviderSpec::Env => {
                let chat = HttpChat::new(endpoint_from(&file.chat, CHAT_ENV_PREFIX)?)
                    .map_err(|e| CliError::Provider(e.to_string()))?;
                // The judge falls back to the chat trio when unset.
                let judge_config = endpoint_from(&file.judge, JUDGE_ENV_PREFIX)
                    .or_else(|_| endpoint_from(&file.chat, CHAT_ENV_PREFIX))?;
                let judge =
                    HttpChat::new(judge_config).map_err(|e| CliError::Provider(e.to_string()))?;
                let embedder = HttpEmbedder::new(endpoint_from(&file.embed, EMBED_ENV_PREFIX)?)
                    .map_err(|e| CliError::Provider(e.to_string()))?;
                Ok(Providers {
                    chat: Box::new(chat),
                    judge: Box::new(judge),
                    embedder: Box::new(embedder),
                })
            }
        }
    }

    /// Embedder-only wiring (curate has no use for chat providers).
    pub fn build_embedder(
        resolved: &Resolved,
        file: &ConfigFile,
    ) -> Result<Box<dyn EmbeddingProvider>, CliError> {
        match ProviderSpec::parse(&resolved.providers, resolved.seed)? {
            ProviderSpec::Env => {
                let embedder = HttpEmbedder::new(endpoint_from(&file.embed, EMBED_ENV_PREFIX)?)
                    .map_err(|e| CliError::Provider(e.to_string()))?;
                Ok(Box::new(embedder))
            }
            _ => Ok(Box::new(HashEmbedder::default())),
        }
    }
}

/// Snapshot written next to every command's primary output.
#[derive(Debug, Serialize)]
pub struct Snapshot<'a> {
    pub command: &'a str,
    pub package_version: &'a str,
    pub seed: u64,
    pub jobs: usize,
    pub log_level: &'a str,
    pub providers: &'a str,
    pub inputs: serde_json::Value,
    pub outputs: serde_json::Value,
    pub options: serde_json::Value,
}

/// Writes the snapshot as `<output>.run.json`.
pub fn write_snapshot(primary_output: &Path, snapshot: &Snapshot<'_>) -> Result<(), CliError> {
    let path = snapshot_path(primary_output);
    let body = serde_json::to_string_pretty(snapshot)
        .map_err(|e| CliError::Internal(format!("snapshot serialization: {e}")))?;
    crate::io::write_atomic(&path, body.as_bytes())
}

pub fn snapshot_path(primary_output: &Path) -> PathBuf {
    let mut name = primary_output.file_name().unwrap_or_default().to_os_string();
    name.push(".run.json");
    primary_output.with_file_name(name)
}
