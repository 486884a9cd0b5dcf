//! Active diagnosis of discrete-event systems: models, diagnosers, plan
//! synthesis, plan export and a SpaceWire case study with a simulator.

pub mod active;
pub mod cost;
pub mod des;
pub mod diagnoser;
pub mod export;
pub mod planner;
pub mod simulator;
pub mod spacewire;

pub use cost::Cost;
