use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed config, unknown kind or key, dangling reference.
    #[error("config error: {0}")]
    Config(String),
    #[error("scenario `{id}` failed: {source}")]
    Scenario {
        id: String,
        #[source]
        source: rdlab::Error,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}
