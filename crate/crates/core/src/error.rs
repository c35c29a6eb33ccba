use serde::Serialize;
use thiserror::Error;

/// A failure inside a multi-stage pipeline, tagged with the stage that raised it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageFailure {
    pub stage: String,
    pub vertex: Option<usize>,
    pub message: String,
    pub trace: Vec<String>,
}

impl std::fmt::Display for StageFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.message)?;
        if let Some(v) = self.vertex {
            write!(f, " (vertex {v})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("density is undefined for an empty vertex set")]
    EmptySet,

    #[error("labeling is not a bijection onto 1..={0}")]
    NotABijection(usize),

    #[error("search budget of {budget} exhausted in {what}")]
    Budget { what: &'static str, budget: u64 },

    #[error("proved impossible: {0}")]
    Impossible(String),

    #[error("blocked set empty")]
    BlockedSetEmpty,

    #[error("floor {floor} exceeds minimum degree {min_degree}")]
    FloorAboveMinDegree { floor: usize, min_degree: usize },

    #[error("plan clause ({clause}) violated: {detail}")]
    Clause { clause: char, detail: String },

    #[error("{0}")]
    Stage(Box<StageFailure>),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn stage(stage: &str, vertex: Option<usize>, message: impl Into<String>) -> Self {
        Error::Stage(Box::new(StageFailure {
            stage: stage.to_string(),
            vertex,
            message: message.into(),
            trace: Vec::new(),
        }))
    }

    pub fn stage_with_trace(
        stage: &str,
        vertex: Option<usize>,
        message: impl Into<String>,
        trace: Vec<String>,
    ) -> Self {
        Error::Stage(Box::new(StageFailure {
            stage: stage.to_string(),
            vertex,
            message: message.into(),
            trace,
        }))
    }

    /// Re-tag any error with a pipeline stage, keeping an existing stage failure intact.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            Error::Stage(_) => self,
            other => Error::stage(stage, None, other.to_string()),
        }
    }

    pub fn as_stage(&self) -> Option<&StageFailure> {
        match self {
            Error::Stage(s) => Some(s),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
