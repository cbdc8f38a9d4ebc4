use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("line {line}: unknown parameter `{name}`")]
    UnknownParameter { line: usize, name: String },

    #[error("line {line}: duplicate element name `{name}`")]
    DuplicateElement { line: usize, name: String },

    #[error("line {line}: {msg}")]
    InvalidValue { line: usize, msg: String },

    /// Zero pivot while factoring. `column` is the unknown index.
    #[error("singular matrix: zero pivot in column {column}{}", unknown.as_ref().map(|u| format!(" ({u})")).unwrap_or_default())]
    SingularPivot { column: usize, unknown: Option<String> },

    #[error("conductance matrix is singular: no DC path to ground for {}", nodes.join(", "))]
    FloatingSubnetwork { nodes: Vec<String> },

    #[error("singular system at sample {index}: {source}")]
    SingularSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular pencil at s = {re}{im:+}j")]
    SingularPencil { re: f64, im: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("basis is not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("invalid reduction spec: {0}")]
    InvalidSpec(String),

    #[error("system too large for dense oracle: n = {n} exceeds {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("model file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by numerical singularity rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularPivot { .. }
                | Error::FloatingSubnetwork { .. }
                | Error::SingularSample { .. }
                | Error::SingularPencil { .. }
        )
    }
}
