//! Boosted decision-diagram compilation of linear threshold functions.
//!
//! The pipeline implemented here:
//!
//! 1. A linear threshold function (a binary neural-network unit) is sampled
//!    over the full ±1 cube and compiled into an *aligned* binary decision
//!    diagram (ABDD) by an entropy-driven boosting loop ([`boosting`]).
//!    All nodes at one depth share a single splitting hypothesis, and a
//!    net-based merge keeps each layer narrow.
//! 2. The margin of the threshold function — which controls how fast the
//!    boosting loop converges and how small the diagram stays — is certified
//!    by a small linear program together with its dual distribution ([`ltf`]).
//! 3. Diagrams are lowered to (∨,∧,¬)-circuits and wired together along the
//!    network topology ([`circuit`], [`bnn`]).
//! 4. Robustness queries (minimum Hamming distance that flips the output)
//!    are answered by a DPLL SAT engine over Tseitin encodings ([`sat`],
//!    [`verify`]).

#![forbid(unsafe_code)]

pub mod bnn;
pub mod boosting;
pub mod circuit;
pub mod data;
pub mod diagram;
pub mod ltf;
pub mod sat;
pub mod simplex;
pub mod verify;

use thiserror::Error;

pub use crate::boosting::{boost, boost_mm_baseline, build_net, BoostConfig, BoostRun, Net};
pub use crate::circuit::Circuit;
pub use crate::data::{BitVector, Distribution, Hypothesis, LabeledSample};
pub use crate::diagram::Diagram;
pub use crate::ltf::ThresholdFunction;

/// Errors shared across the crate. Variants map onto the CLI exit-code
/// contract: input problems, trivial functions, weak-learner failures and
/// timeouts are all distinguishable by the caller.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    /// A node (or index set) carries only one label class, so no balanced
    /// distribution exists. Callers route such nodes to a leaf instead.
    #[error("pure node: {positives} positive / {negatives} negative examples")]
    PureNode { positives: usize, negatives: usize },

    #[error("diagram has no frontier to split")]
    EmptyFrontier,

    /// The hypothesis set produced no positive edge (or no entropy
    /// reduction) on the current mixture distribution.
    #[error("weak learner failure at iteration {iteration}: best edge {edge}")]
    WeakLearnerFailure { iteration: usize, edge: f64 },

    /// The boosting loop hit its iteration cap. The partial run (diagram
    /// built so far plus its trace) is attached.
    #[error("boosting diverged: iteration cap {cap} exceeded")]
    Diverged { cap: usize, partial: Box<BoostRun> },

    #[error("function is constant ({value:+}) on the cube; robustness/margin undefined")]
    TrivialFunction { value: i8 },

    #[error("dimension {n} exceeds cap {cap}")]
    DimensionCap { n: usize, cap: usize },

    /// A SAT query inside a robustness scan timed out; `k_reached` is the
    /// last radius fully decided.
    #[error("robustness query timed out; last decided radius {k_reached}")]
    Indeterminate { k_reached: usize },

    #[error("malformed diagram: {0}")]
    MalformedDiagram(String),

    #[error("malformed circuit: {0}")]
    MalformedCircuit(String),

    #[error("linear program {0}")]
    Lp(crate::simplex::LpFailure),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
