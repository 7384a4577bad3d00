//! Height-adaptive traversability mapping and trajectory planning.
//!
//! The crate turns a reconstructed scene (mesh or point cloud) into a
//! 2.5D traversability grid classified against a quadruped's geometry
//! (pass at full height, pass by ducking, or blocked), trains a small
//! neural collision field over it, and optimizes height-annotated
//! trajectories through the result. An evaluation module scores
//! reconstructed geometry against ground-truth point clouds.
//!
//! Modules follow the processing order:
//!
//! * [`mesh`], [`scenegen`], [`voxel`], [`cloud`] — scene ingestion,
//!   synthetic scene generation, voxelization, surface sampling.
//! * [`heightmap`] — floor estimation and per-column passability analysis.
//! * [`field`] — the online-trained collision/duck probability field.
//! * [`planner`] — seeding, gradient-based waypoint optimization, height
//!   annotation, and path metrics.
//! * [`evalmap`] — reconstruction quality metrics (IoU, P/R/F, SDF RMSE).
//! * [`pipeline`] — end-to-end batch runs and report comparison.

pub mod cloud;
pub mod error;
pub mod evalmap;
pub mod field;
pub mod geom;
pub mod heightmap;
pub mod jsonio;
pub mod mesh;
pub mod pipeline;
pub mod planner;
pub mod raster;
pub mod scenegen;
pub mod seeds;
pub mod voxel;

pub use error::{Error, Result};
