//! Scenario runner for the quantum dot / Kerr cavity simulator: config
//! parsing, figure presets, output writers and oracle verification.

pub mod config;
pub mod presets;
pub mod run;
pub mod verify;

use std::path::{Path, PathBuf};

pub use config::{ConfigError, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("unknown preset {0:?}; `qdkerr presets` lists them")]
    UnknownPreset(String),
    #[error("oracle: {0}")]
    Oracle(qdkerr::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::UnknownPreset(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Oracle(qdkerr::Error::OracleCapExceeded { .. }) => EXIT_CONFIG,
            CliError::Oracle(_) | CliError::VerificationFailed(_) => EXIT_VERIFY,
            CliError::Io { .. } => EXIT_RUNTIME,
        }
    }
}

/// Scenarios named by a config file or a preset.
pub fn load_scenarios(config: Option<&Path>, preset: Option<&str>) -> Result<Vec<ScenarioConfig>, CliError> {
    match (config, preset) {
        (Some(path), None) => Ok(vec![ScenarioConfig::load(path)?]),
        (None, Some(name)) => presets::preset(name)
            .map(|p| p.variants)
            .ok_or_else(|| CliError::UnknownPreset(name.to_string())),
        (Some(_), Some(_)) => Err(CliError::Usage("give either --config or --preset, not both".into())),
        (None, None) => Err(CliError::Usage("one of --config or --preset is required".into())),
    }
}
