//! Fetal ultrasound biometry from per-frame segmentation and class scores.
//!
//! The crate covers the path from a study directory to a report: frame
//! ingest, mask post-processing, contour geometry, measurements, standard
//! plane selection, gestational age and weight estimates, plus evaluation
//! metrics and observer-agreement statistics.

pub mod agreement;
pub mod backend;
pub mod biometry;
pub mod config;
pub mod estimation;
pub mod geometry;
pub mod grid;
pub mod imageio;
pub mod ingest;
pub mod metrics;
pub mod morphology;
pub mod par;
pub mod pipeline;
pub mod planes;

pub use grid::{BinaryMask, Grid, ProbGrid};
