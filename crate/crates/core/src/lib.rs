//! Object-goal navigation planning library and grid-world simulation harness.

pub mod commonsense;
pub mod frontier;
pub mod grid;
pub mod harness;
pub mod mapio;
pub mod perception;
pub mod planner;
pub mod sim;
pub mod skeleton;
pub mod worlds;
