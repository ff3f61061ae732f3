use thiserror::Error;

use crate::game::NodeId;

/// Errors raised by the solvers and transforms.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SsgError {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("game is not max-binary")]
    NotMaxBinary,
    #[error("game is not stopping: {0}")]
    NotStopping(String),
    #[error("not canonical form: {0}")]
    NotCanonicalForm(String),
    #[error("strategy does not cover node {0}")]
    IncompleteStrategy(NodeId),
    #[error("node {0} is not switchable")]
    NotSwitchable(NodeId),
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("values are not nondecreasing along the order between {0} and {1}")]
    NotNondecreasing(usize, usize),
    #[error("order {0} still has constrained control nodes")]
    ConstrainedOrder(String),
    #[error("non-absorbing recurrent class in collapsed process at control {0}")]
    NonAbsorbing(usize),
    #[error("oracle guard exceeded: {0}")]
    OracleGuard(String),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, SsgError>;
