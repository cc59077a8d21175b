//! Asynchronous and priority-synchronized log-linear learning in constrained
//! potential games, with an exact Markov-chain analysis engine.

pub mod chain;
pub mod coverage;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod game;
pub mod policy;
pub mod scheduler;

pub use error::{Error, Result};
pub use game::{ActionProfile, Game, TableGame};
pub use policy::{Policy, PolicyKind, PolicyParams};
pub use scheduler::{Mode, SyncParams, TrajectoryRecord};
