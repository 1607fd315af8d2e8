use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Engine(#[from] vcqds_core::Error),
}

impl CliError {
    /// 1 for numerical failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(e) if e.is_numerical() => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        use vcqds_core::Error as E;
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Input(_) => "input",
            CliError::Engine(e) => match e {
                E::NoConvergence { .. } => "no_convergence",
                E::ResidualTooLarge { .. } => "residual_too_large",
                E::ClosureCapExceeded { .. } => "closure_cap_exceeded",
                _ => "invalid_input",
            },
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        let mut v = serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        match self {
            CliError::Io { path, .. } => v["path"] = path.display().to_string().into(),
            CliError::Parse { path, line, .. } => {
                v["path"] = path.display().to_string().into();
                v["line"] = (*line).into();
            }
            CliError::Engine(vcqds_core::Error::ClosureCapExceeded { dim, cap }) => {
                v["dimension"] = (*dim).into();
                v["cap"] = (*cap).into();
            }
            _ => {}
        }
        v.to_string()
    }
}
