//! Solvers for zero-sum extensive-form games in which a team of players
//! sharing one utility function faces a single adversary.
//!
//! Three equilibrium notions are computed, ordered by how much the team may
//! coordinate:
//!
//! * [`tmecom`]: the team can exchange information through a mediator during
//!   play. Solved in polynomial time by forcing team observability, folding
//!   the team into one perfect-recall player and solving a sequence-form LP.
//! * [`tmecor`]: the team can only agree on a joint plan before play. Solved
//!   by column generation over jointly-reduced plans with an integer-program
//!   best-response oracle (exact) or LP rounding (approximate).
//! * [`tme`]: no coordination at all. Solved by a certified local search over
//!   per-teammate realization plans, with a grid oracle for tiny instances.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, timing and the
//! command-line live in the companion `teamgame` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod game;
pub mod generators;
pub mod inefficiency;
pub mod lp;
pub mod maxmin;
pub mod observable;
pub mod sequence;
pub mod tme;
pub mod tmecom;
pub mod tmecor;

mod budget;

pub use budget::Budget;
pub use game::{GameError, GameTree, InfosetId, NodeId, NodeSpec, PlayerId, TeamSpec};
pub use sequence::{RealizationPlan, SequenceForm};
