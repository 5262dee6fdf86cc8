pub mod cli;
pub mod enveloping;
pub mod error;
pub mod exponentiate;
pub mod fixtures;
pub mod identities;
pub mod lie;
pub mod linalg;
pub mod report;
pub mod repspace;
pub mod semigroup;
pub mod spec;
