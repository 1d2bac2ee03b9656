use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: weylscope::Error,
    },

    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// 3 for configuration errors, 4 for numerical or output stages.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 3,
            Self::Stage { .. } | Self::Io { .. } => 4,
        }
    }
}

/// Attach a stage name to a library error.
pub trait StageExt<T> {
    fn stage(self, name: &str) -> CliResult<T>;
}

impl<T> StageExt<T> for weylscope::Result<T> {
    fn stage(self, name: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Stage {
            stage: name.to_string(),
            source,
        })
    }
}
