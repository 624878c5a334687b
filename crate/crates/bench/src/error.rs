use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),

    #[error("line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Solver(#[from] kryrom::Error),
}

impl BenchError {
    /// Phase label for user-facing failure messages.
    pub fn phase(&self) -> &'static str {
        match self {
            BenchError::Config(_) | BenchError::ConfigLine { .. } => "config",
            BenchError::Io { .. } | BenchError::Csv(_) => "output",
            BenchError::Solver(e) => e.phase().unwrap_or("solve"),
        }
    }

    /// Message without the leading phase label.
    pub fn detail(&self) -> String {
        match self {
            BenchError::Solver(kryrom::Error::Phase { source, .. }) => source.to_string(),
            other => other.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> BenchError {
        let path = path.into();
        move |source| BenchError::Io { path, source }
    }
}
