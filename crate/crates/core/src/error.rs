use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("numerical divergence at iteration {iteration}: {reason}")]
    NumericalDivergence { iteration: usize, reason: String },

    #[error("rectifier solver failed: {0}")]
    SolverFailure(String),

    #[error("pilot signal not received at the base station")]
    DegeneratePilot,

    #[error("infeasible plan: {0}")]
    Infeasible(String),

    #[error("{requested} targets requested but only {available} frequency bands are available")]
    CapacityExceeded { requested: usize, available: usize },

    #[error("configuration rejected:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One violated configuration constraint, addressed by its dotted key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    /// Process exit status for the command-line tool: 2 for anything the
    /// user can fix in the configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::Config(_)
            | Error::UnknownExperiment(_)
            | Error::Infeasible(_)
            | Error::CapacityExceeded { .. }
            | Error::DegenerateGeometry(_) => 2,
            Error::NumericalDivergence { .. } | Error::SolverFailure(_) | Error::DegeneratePilot => 3,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_config_from_numerics() {
        assert_eq!(Error::Config(vec![ConfigIssue::new("seed", "bad")]).exit_code(), 2);
        assert_eq!(Error::UnknownExperiment("x".into()).exit_code(), 2);
        assert_eq!(Error::DegenerateGeometry("x".into()).exit_code(), 2);
        assert_eq!(Error::NumericalDivergence { iteration: 3, reason: "nan".into() }.exit_code(), 3);
        assert_eq!(Error::SolverFailure("x".into()).exit_code(), 3);
        assert_eq!(Error::DegeneratePilot.exit_code(), 3);
    }

    #[test]
    fn config_errors_list_every_path() {
        let e = Error::Config(vec![ConfigIssue::new("a.b", "too small"), ConfigIssue::new("c", "missing")]);
        let text = e.to_string();
        assert!(text.contains("a.b: too small") && text.contains("c: missing"), "{text}");
    }
}
