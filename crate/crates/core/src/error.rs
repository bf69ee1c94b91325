use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    PolicyIo(#[from] PolicyIoError),
    #[error(transparent)]
    Drl(#[from] DrlError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{key}` (line {line})")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("duplicate key `{key}` (line {line})")]
    DuplicateKey { key: String, line: usize },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::InvalidValue {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("the state space is only defined for a finite AoI bound")]
    Unbounded,
    #[error("state space too large: {states} states x {actions} actions")]
    TooLarge { states: usize, actions: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("relative value iteration did not converge after {sweeps} sweeps (last span {span:e})")]
    NotConverged { sweeps: usize, span: f64 },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    StationaryNotConverged { iterations: usize, residual: f64 },
    #[error("could not find a feasible multiplier after {expansions} expansions (last lambda {lambda}, mean transmissions {mean_tx})")]
    BracketExpansion {
        expansions: usize,
        lambda: f64,
        mean_tx: f64,
    },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum PolicyIoError {
    #[error("config digest mismatch: file has {found}, expected {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error("malformed policy file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DrlError {
    #[error("non-finite loss at training step {step}: loss={loss}, max |q|={max_q}")]
    NonFiniteLoss { step: usize, loss: f64, max_q: f64 },
    #[error("invalid network checkpoint: {0}")]
    Checkpoint(String),
    #[error("invalid DRL configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
