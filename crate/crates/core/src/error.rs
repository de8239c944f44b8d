use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage that produced an error inside [`crate::implant::run_attack`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Freeze,
    Dimension,
    Magnitude,
    Implant,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Freeze => "freeze",
            Stage::Dimension => "dimension",
            Stage::Magnitude => "magnitude",
            Stage::Implant => "implant",
            Stage::Evaluate => "evaluate",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("tape was produced by a different parameter version ({tape} != {net})")]
    StaleTape { tape: u64, net: u64 },
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("policy produced a non-finite output: {0}")]
    PolicyCorruption(String),
    #[error("invalid action: {0}")]
    Domain(String),
    #[error("attribution estimate failed: {0}")]
    Estimation(String),
    #[error("degenerate range [{min}, {max}] for dimension {dim}")]
    DegenerateRange { dim: usize, min: f64, max: f64 },
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn at(self, stage: Stage) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
