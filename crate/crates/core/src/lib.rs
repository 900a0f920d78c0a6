pub mod geometry;
pub mod network;
pub mod walker;
pub mod experiments;
pub mod cli;
