//! Time-bound verification for randomized distributed algorithms under
//! adversarial scheduling.

pub mod adversary;
pub mod cli;
pub mod events;
pub mod models;
pub mod predicate;
pub mod pta;
pub mod rational;
pub mod report;
pub mod verify;
