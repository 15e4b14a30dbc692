use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes. The CLI maps [`Error::is_numerical`] failures to exit
/// code 2 and everything else to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    #[error("geometry under-resolved: {0}")]
    Geometry(String),

    #[error("config error at line {line}, key `{key}`: {reason}")]
    Config {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("snapshot read error at line {line}: {reason}")]
    Snapshot { line: usize, reason: String },

    #[error("grids are not nested: {0}")]
    Misaligned(String),

    #[error("error collar is empty: {0}")]
    EmptyCollar(String),

    #[error("{sweep} sweep became unstable at step {step} (non-finite value at node ({i}, {j}))")]
    Instability {
        sweep: &'static str,
        step: usize,
        i: usize,
        j: usize,
    },

    #[error("ghost extension diverged at node ({i}, {j})")]
    ExtensionDivergence { i: usize, j: usize },

    #[error("redistancing produced a non-finite value at node ({i}, {j})")]
    RedistanceDivergence { i: usize, j: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Param {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Instability { .. }
                | Error::ExtensionDivergence { .. }
                | Error::RedistanceDivergence { .. }
        )
    }
}
