//! Behavior trees whose actions pick controls from prioritized control
//! barrier function constraints, with a multi-agent AUV simulator.

pub mod bt;
pub mod cbf;
pub mod controller;
pub mod geometry;
pub mod mission;
pub mod sim;
pub mod world;
