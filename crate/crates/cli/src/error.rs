use thiserror::Error;

/// Failures of a run, each mapped to a process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("assumption check failed: {0}")]
    Assumption(String),

    #[error("solver failure in stage `{stage}`: {message}")]
    Solver { stage: String, message: String },

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Assumption(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::Output(_) => 1,
        }
    }

    /// Classifies a library error raised while executing `stage`.
    pub fn from_core(stage: &str, e: waveguide::Error) -> Self {
        use waveguide::Error as E;
        match e {
            E::AssumptionViolated(_) | E::DegenerateMetric { .. } | E::InvalidParameter { .. } => {
                CliError::Assumption(e.to_string())
            }
            E::EvenTransverseCount(_) => CliError::Config {
                path: "grid.n_u".into(),
                message: e.to_string(),
            },
            E::GridMismatch(_) | E::FieldFormat(_) | E::DimensionMismatch(_) => CliError::Config {
                path: "source".into(),
                message: e.to_string(),
            },
            E::Io(_) | E::Csv(_) => CliError::Output(e.to_string()),
            E::NotConverged { stage: inner, .. } => CliError::Solver {
                stage: format!("{stage}/{inner}"),
                message: e.to_string(),
            },
            _ => CliError::Solver {
                stage: stage.to_string(),
                message: e.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
