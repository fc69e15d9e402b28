use std::fmt;
use std::io;
use std::path::PathBuf;

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Match,
    Boundary,
    Solve,
    Train,
    Sample,
    Emit,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Match => "match",
            Stage::Boundary => "boundary",
            Stage::Solve => "solve",
            Stage::Train => "train",
            Stage::Sample => "sample",
            Stage::Emit => "emit",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: voxfield_core::Error,
    },
    #[error(transparent)]
    Core(#[from] voxfield_core::Error),
    /// Malformed files, configuration or arguments.
    #[error("{0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            AppError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// Process exit status: 2 bad input, 3 convergence failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            AppError::Stage { source, .. } | AppError::Core(source) => source,
            AppError::Io { .. } => return 4,
            AppError::Input(_) => return 2,
        };
        match core {
            voxfield_core::Error::NotConverged { .. } => 3,
            _ => 2,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn at(self, stage: Stage) -> AppResult<T>;
}

impl<T> StageExt<T> for voxfield_core::Result<T> {
    fn at(self, stage: Stage) -> AppResult<T> {
        self.map_err(|source| AppError::Stage { stage, source })
    }
}
