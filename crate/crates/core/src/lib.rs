//! Reputation-aware task allocation and answer aggregation for binary
//! crowdsourcing tasks, with a Monte Carlo experiment harness.

pub mod allocation;
pub mod answers;
pub mod decision;
pub mod error;
pub mod harness;
pub mod llr;
pub mod population;
pub mod quadrature;
pub mod rng;

pub use allocation::{greedy_allocate, is_feasible, uniform_allocate, Allocation, ObjectiveKind, WeightMatrix};
pub use answers::AnswerMatrix;
pub use decision::DecisionResult;
pub use error::{Error, Result};
pub use population::{ClassProfile, Population, TaskTruths, Training};
