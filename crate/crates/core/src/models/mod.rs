//! Model families shipped with the toolkit.

pub mod coin;
pub mod lehmann_rabin;
pub mod random;
