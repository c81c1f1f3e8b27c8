use std::path::{Path, PathBuf};

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Estimation or comparison failure.
pub const EXIT_ESTIMATION: i32 = 1;
/// Bad input data or configuration.
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input file not found: {0}")]
    MissingPath(PathBuf),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{0}")]
    Input(String),
    #[error("data error: {0}")]
    Data(r0_core::Error),
    #[error("estimation failed: {0}")]
    Estimation(r0_core::Error),
    #[error("comparison failed: {0}")]
    ComparisonFailed(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Estimation(_) | PipelineError::ComparisonFailed(_) => EXIT_ESTIMATION,
            _ => EXIT_INPUT,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            PipelineError::MissingPath(path.to_path_buf())
        } else {
            PipelineError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub fn parse(path: &Path, line: u64, message: impl Into<String>) -> Self {
        PipelineError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn csv(path: &Path, err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(e) => PipelineError::io(path, e),
            kind => PipelineError::parse(path, line, format!("{kind:?}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| PipelineError::csv(path, e))
}
