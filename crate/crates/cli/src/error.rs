use std::fmt;

/// CLI failure, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: files, flags, netlists, model files. Exit code 2.
    Input(String),
    /// Singular matrices and similar numerical breakdowns. Exit code 3.
    Numerical(String),
    /// A checked property did not hold under `--strict`. Exit code 4.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl From<parmor_core::Error> for CliError {
    fn from(e: parmor_core::Error) -> Self {
        use parmor_core::Error as E;
        match e {
            E::NotOrthonormal(_) => CliError::Numerical(e.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn input<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Input(msg.into()))
}
