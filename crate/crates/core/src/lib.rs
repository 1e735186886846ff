pub mod baseline;
pub mod channel;
pub mod circuits;
pub mod comms;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fieldmap;
pub mod geometry;
pub mod harvest;
pub mod lattice;
pub mod multiaccess;
pub mod noise;
pub mod report;

pub use error::{Error, Result};
