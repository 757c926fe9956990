//! Reachability, avoidance and their compositions on finite deterministic
//! MDPs: value solvers, decompositions of reach-always-avoid and
//! reach-reach objectives, policy synthesis, brute-force oracles, a grid
//! world and advantage estimators.

pub mod advantage;
pub mod compose;
pub mod error;
pub mod gridworld;
pub mod mdp;
pub mod objective;
pub mod oracle;
pub mod policy;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
pub use mdp::{AugmentMode, AugmentedMdp, AugmentedPolicy, FiniteMdp, LabelSet, LabelTable, StationaryPolicy};
pub use objective::{Objective, Tracker};
pub use solvers::{Problem, SolveReport, ValueTable};
