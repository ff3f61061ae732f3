//! Exact-arithmetic solvers for simple stochastic games.

pub mod error;
pub mod format;
pub mod game;
pub mod generate;
pub mod control;
pub mod ludwig;
pub mod oracle;
pub mod orders;
pub mod pivot;
pub mod scalar;
pub mod transforms;
pub mod valuation;

pub use error::{Result, SsgError};
pub use game::{NodeId, NodeKind, Ssg, Strategy, Values};
pub use scalar::Scalar;

/// Exact rational scalar used by every trusted solver path.
pub type Rational = num_rational::BigRational;
/// Game over exact rationals.
pub type Game = Ssg<Rational>;
/// Exact value vector.
pub type ValueVector = Values<Rational>;
/// Game over `f64`, used for approximate cross-checks.
pub type GameF64 = Ssg<f64>;
