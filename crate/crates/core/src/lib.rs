//! Sequential approval of adaptively chosen model updates on a reusable test set.
//!
//! Each submitted model is tested against the current baseline and only an
//! approve/deny bit is released. Family-wise error control comes from a
//! sequentially rejective graphical procedure over the tree of possible
//! approval histories, with thresholds from one of several [`Policy`] choices.
//!
//! The weight bookkeeping in [`graph`] is generic over the scalar type; the
//! aliases below fix it to `f64`, `f32` or exact rationals.

pub mod graph;
pub mod policy;
pub mod protocol;
pub mod scalar;
pub mod stats;
pub mod thresholds;

use num_rational::BigRational;

pub use graph::{child_history, ApprovalHistory, GraphError, GraphSession, GraphStep, WeightScheme, WeightTree};
pub use policy::Policy;
pub use protocol::{ApprovalSession, SessionConfig, SessionError, SessionInputs};
pub use scalar::Weight;
pub use stats::{EvaluatedModel, HypothesisKind, TestDataset};
pub use thresholds::{CorrelationBlock, OrthantEngine, ThresholdError, ThresholdSolution};

pub type Session = GraphSession<f64>;
pub type Session32 = GraphSession<f32>;
pub type ExactSession = GraphSession<BigRational>;
pub type Scheme = WeightScheme<f64>;
pub type ExactScheme = WeightScheme<BigRational>;
pub type Tree = WeightTree<f64>;
pub type ExactTree = WeightTree<BigRational>;
