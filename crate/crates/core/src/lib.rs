//! Tree-structured Bayesian network classifiers: Chow-Liu multinets,
//! conditional trees, cutset trees and similarity networks, with exact
//! oracles for small domains.

pub mod cpt;
pub mod error;
pub mod eval;
pub mod exec;
pub mod info;
pub mod io;
pub mod learn;
pub mod model;
pub mod oracle;
pub mod simnet;
pub mod synth;
pub mod tables;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{ClassifierModel, DiscreteModel};
pub use tables::{Dataset, JointTable, PairStats, Role, Schema, Variable, VarId};
