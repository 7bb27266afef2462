//! Independent reference implementations shared by the oracle tests and the
//! acceptance run.
#![allow(dead_code)]

pub mod agreement;
pub mod estimation;
pub mod geometry;
pub mod metrics;
pub mod morphology;
