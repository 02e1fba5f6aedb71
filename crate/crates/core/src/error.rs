use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate polytope: {0}")]
    Degenerate(String),

    #[error("resource cap exceeded: {what} {value} > {limit}")]
    Resource {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}

pub(crate) fn dim_mismatch(what: &str, expected: usize, got: usize) -> Error {
    Error::Dimension(format!("{what}: expected {expected}, got {got}"))
}
