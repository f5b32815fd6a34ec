//! Oracles shared by several test targets.
#![allow(dead_code)]

pub mod alloc;
pub mod heuristic;
pub mod motion;
