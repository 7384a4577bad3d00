//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("invalid voxel resolution {0}; must be > 0 and finite")]
    InvalidResolution(f64),
    #[error("degenerate bounds: every axis must have positive extent")]
    DegenerateBounds,
    #[error("grid has no occupied voxels")]
    EmptyGrid,
    #[error("column z-centers are not uniformly spaced at the voxel resolution")]
    NonUniformSpacing,
    #[error("invalid field config: {0}")]
    InvalidConfig(String),
    #[error("invalid robot profile: {0}")]
    InvalidProfile(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("start position lies in an impassable cell")]
    StartBlocked,
    #[error("goal position lies in an impassable cell")]
    GoalBlocked,
    #[error("no passable path between start and goal")]
    NoFeasiblePath,
    #[error("objective cost diverged to a non-finite value")]
    DivergedCost,
    #[error("trajectory waypoint lies in a blocked cell")]
    WaypointBlocked,
    #[error("trajectory has too few waypoints ({0})")]
    TooFewWaypoints(usize),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("report schemas do not match: {0}")]
    SchemaMismatch(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tag an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
