pub mod geometry;
pub mod dynamics;
pub mod diagnostics;
pub mod induced;
pub mod observables;
pub mod par;
pub mod stats;
pub mod cli;
