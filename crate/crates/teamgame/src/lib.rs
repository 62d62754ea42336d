//! File formats, solver runs and the experiment harness on top of
//! [`teamgame_core`].

pub mod dimacs;
pub mod experiment;
pub mod format;
pub mod plot;
pub mod record;
pub mod run;
pub mod stats;

pub use teamgame_core as core;
