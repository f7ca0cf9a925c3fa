use erc_core::ErcError;
use thiserror::Error;

/// Failure classes with distinct process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) | CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Divergence(_) => "divergence",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// One JSON object per line for standard error.
    pub fn structured(&self) -> String {
        serde_json::json!({
            "level": "error",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<ErcError> for CliError {
    fn from(e: ErcError) -> Self {
        let msg = e.to_string();
        if e.is_divergence() {
            return CliError::Divergence(msg);
        }
        match root(&e) {
            ErcError::InvalidArgument(_)
            | ErcError::DimensionMismatch { .. }
            | ErcError::UnsupportedDistribution(_) => CliError::Config(msg),
            ErcError::Io(_) => CliError::Io(msg),
            _ => CliError::Numerical(msg),
        }
    }
}

fn root(e: &ErcError) -> &ErcError {
    match e {
        ErcError::Trial { source, .. } => root(source),
        other => other,
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let div = ErcError::Trial {
            trial: 3,
            source: Box::new(ErcError::Divergence { step: 9 }),
        };
        assert_eq!(CliError::from(div).exit_code(), 3);
        assert_eq!(
            CliError::from(ErcError::InvalidArgument("x".into())).exit_code(),
            2
        );
        assert_eq!(CliError::from(ErcError::Io("disk".into())).exit_code(), 4);
        assert_eq!(
            CliError::from(ErcError::UndefinedMetric("m".into())).exit_code(),
            3
        );
    }

    #[test]
    fn structured_line_is_json() {
        let line = CliError::Config("bad key".into()).structured();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["kind"], "config");
        assert_eq!(v["exit_code"], 2);
    }
}
