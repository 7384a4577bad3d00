//! Python bindings: the main types and operations of the mapping and
//! planning toolkit, with JSON strings at the configuration boundaries.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use hatnav_core::cloud::{self, PointCloud};
use hatnav_core::error::Error;
use hatnav_core::evalmap;
use hatnav_core::field::{self, FieldConfig, NeuralField};
use hatnav_core::heightmap::{self, PlanMode, RobotProfile, TraversabilityGrid};
use hatnav_core::jsonio;
use hatnav_core::mesh::{self, TriMesh};
use hatnav_core::planner::{self, PlannerConfig};
use hatnav_core::raster;
use hatnav_core::scenegen::{self, SceneSpec};
use hatnav_core::voxel::{self, VoxelGrid};

fn py_err(e: Error) -> PyErr {
    match &e {
        Error::Io(_) | Error::FileNotFound(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> PyResult<T> {
    serde_json::from_str(s).map_err(|e| PyValueError::new_err(format!("bad {what} JSON: {e}")))
}

fn parse_mode(mode: &str) -> PyResult<PlanMode> {
    mode.parse().map_err(py_err)
}

/// Triangle mesh.
#[pyclass(name = "Mesh", skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: TriMesh,
}

#[pymethods]
impl PyMesh {
    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertices.len()
    }

    #[getter]
    fn face_count(&self) -> usize {
        self.inner.faces.len()
    }

    fn aabb(&self) -> PyResult<([f64; 3], [f64; 3])> {
        let bb = self
            .inner
            .aabb()
            .ok_or_else(|| PyValueError::new_err("empty mesh"))?;
        Ok((bb.min, bb.max))
    }

    fn total_area(&self) -> f64 {
        self.inner.total_area()
    }

    fn save_obj(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_obj(&path).map_err(py_err)
    }

    /// Area-weighted uniform surface samples, deterministic per seed.
    fn sample_surface(&self, density: f64, seed: u64) -> PyResult<PyCloud> {
        let cloud = cloud::sample_surface(&self.inner, density, seed).map_err(py_err)?;
        Ok(PyCloud { inner: cloud })
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh({} vertices, {} faces)",
            self.inner.vertices.len(),
            self.inner.faces.len()
        )
    }
}

/// Point cloud.
#[pyclass(name = "Cloud", skip_from_py_object)]
#[derive(Clone)]
struct PyCloud {
    inner: PointCloud,
}

#[pymethods]
impl PyCloud {
    fn __len__(&self) -> usize {
        self.inner.points.len()
    }

    fn points(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .points
            .iter()
            .map(|p| (p[0], p[1], p[2]))
            .collect()
    }

    fn translated(&self, dx: f64, dy: f64, dz: f64) -> PyCloud {
        PyCloud {
            inner: self.inner.translated([dx, dy, dz]),
        }
    }

    fn save_ply(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_ply(&path).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Cloud({} points)", self.inner.points.len())
    }
}

/// Dense occupancy voxel grid.
#[pyclass(name = "VoxelGrid", skip_from_py_object)]
#[derive(Clone)]
struct PyVoxelGrid {
    inner: VoxelGrid,
}

#[pymethods]
impl PyVoxelGrid {
    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        (self.inner.dims[0], self.inner.dims[1], self.inner.dims[2])
    }

    #[getter]
    fn resolution(&self) -> f64 {
        self.inner.resolution
    }

    #[getter]
    fn origin(&self) -> (f64, f64, f64) {
        (
            self.inner.origin[0],
            self.inner.origin[1],
            self.inner.origin[2],
        )
    }

    fn occupied_count(&self) -> usize {
        self.inner.occupied_count()
    }

    fn occupied_at(&self, x: f64, y: f64, z: f64) -> bool {
        self.inner
            .world_to_cell([x, y, z])
            .map(|c| self.inner.get(c[0], c[1], c[2]))
            .unwrap_or(false)
    }

    fn estimate_floor(&self) -> PyResult<f64> {
        heightmap::estimate_floor(&self.inner).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        jsonio::write_json(&path, &self.inner.to_file()).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "VoxelGrid({:?} @ {} m, {} occupied)",
            self.inner.dims,
            self.inner.resolution,
            self.inner.occupied_count()
        )
    }
}

/// Height-segmented traversability grid.
#[pyclass(name = "TraversabilityGrid", skip_from_py_object)]
#[derive(Clone)]
struct PyTravGrid {
    inner: TraversabilityGrid,
}

#[pymethods]
impl PyTravGrid {
    #[getter]
    fn dims(&self) -> (usize, usize) {
        (self.inner.dims[0], self.inner.dims[1])
    }

    #[getter]
    fn floor_z(&self) -> f64 {
        self.inner.floor_z
    }

    #[getter]
    fn resolution(&self) -> f64 {
        self.inner.resolution
    }

    /// Cell class at a world position: "free", "duck", "blocked", or
    /// "outside".
    fn class_at(&self, x: f64, y: f64) -> String {
        match self.inner.cell_at_world([x, y]) {
            None => "outside".into(),
            Some(c) => match c.class {
                heightmap::CellClass::Free => "free".into(),
                heightmap::CellClass::Duck => "duck".into(),
                heightmap::CellClass::Blocked => "blocked".into(),
            },
        }
    }

    fn required_height_at(&self, x: f64, y: f64) -> Option<f64> {
        self.inner
            .cell_at_world([x, y])
            .and_then(|c| c.required_height)
    }

    fn class_counts(&self) -> (usize, usize, usize) {
        let mut free = 0;
        let mut duck = 0;
        let mut blocked = 0;
        for c in &self.inner.cells {
            match c.class {
                heightmap::CellClass::Free => free += 1,
                heightmap::CellClass::Duck => duck += 1,
                heightmap::CellClass::Blocked => blocked += 1,
            }
        }
        (free, duck, blocked)
    }

    fn inflate(&self, radius: f64) -> PyResult<PyTravGrid> {
        Ok(PyTravGrid {
            inner: heightmap::inflate(&self.inner, radius).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        jsonio::write_json(&path, &self.inner).map_err(py_err)
    }

    fn save_raster(&self, path: PathBuf) -> PyResult<()> {
        raster::write_class_raster(&self.inner, &path).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let (f, d, b) = self.class_counts();
        format!(
            "TraversabilityGrid({:?}, free={f}, duck={d}, blocked={b})",
            self.inner.dims
        )
    }
}

/// Neural collision field.
#[pyclass(name = "Field", skip_from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: NeuralField,
}

#[pymethods]
impl PyField {
    /// (p_block, p_duck) at a world position.
    fn forward(&self, x: f64, y: f64) -> (f64, f64) {
        self.inner.forward([x, y])
    }

    /// (p_block, p_duck, grad_block, grad_duck) with gradients in world
    /// units.
    fn forward_with_grad(&self, x: f64, y: f64) -> (f64, f64, (f64, f64), (f64, f64)) {
        let (pb, pd, gb, gd) = self.inner.forward_with_input_grad([x, y]);
        (pb, pd, (gb[0], gb[1]), (gd[0], gd[1]))
    }

    fn accuracy(&self, tgrid: &PyTravGrid, mode: &str) -> PyResult<(f64, f64)> {
        Ok(field::field_accuracy(
            &self.inner,
            &tgrid.inner,
            parse_mode(mode)?,
        ))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        jsonio::write_json(&path, &self.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Field({} parameters)", self.inner.parameter_count())
    }
}

/// Height-annotated trajectory.
#[pyclass(name = "Trajectory", skip_from_py_object)]
#[derive(Clone)]
struct PyTrajectory {
    inner: planner::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    /// Waypoints as (x, y, body_height) tuples.
    fn waypoints(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .waypoints
            .iter()
            .map(|w| (w.x, w.y, w.body_height))
            .collect()
    }

    fn length(&self) -> f64 {
        self.inner.planar_length()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        jsonio::write_json(&path, &self.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory({} waypoints, {:.3} m)",
            self.inner.waypoints.len(),
            self.inner.planar_length()
        )
    }
}

/// Generate a synthetic scene mesh from a scene-spec JSON string.
#[pyfunction]
fn gen_scene(spec_json: &str) -> PyResult<PyMesh> {
    let spec: SceneSpec = parse_json("scene spec", spec_json)?;
    Ok(PyMesh {
        inner: scenegen::gen_scene(&spec).map_err(py_err)?,
    })
}

/// Load an ASCII OBJ or PLY mesh.
#[pyfunction]
fn load_mesh(path: PathBuf) -> PyResult<PyMesh> {
    Ok(PyMesh {
        inner: mesh::load_mesh(&path).map_err(py_err)?,
    })
}

/// Surface-voxelize a mesh.
#[pyfunction]
fn voxelize(mesh: &PyMesh, resolution: f64) -> PyResult<PyVoxelGrid> {
    Ok(PyVoxelGrid {
        inner: voxel::voxelize(&mesh.inner, resolution, None).map_err(py_err)?,
    })
}

/// Height-segment a voxel grid against a robot profile (JSON string).
#[pyfunction]
fn segment(grid: &PyVoxelGrid, profile_json: &str) -> PyResult<PyTravGrid> {
    let profile: RobotProfile = parse_json("robot profile", profile_json)?;
    Ok(PyTravGrid {
        inner: heightmap::segment(&grid.inner, &profile).map_err(py_err)?,
    })
}

/// Train a collision field on grid labels; mode is "hat" or "flat2d".
#[pyfunction]
#[pyo3(signature = (tgrid, mode, steps=2000, seed=0))]
fn train_field(tgrid: &PyTravGrid, mode: &str, steps: usize, seed: u64) -> PyResult<PyField> {
    let cfg = FieldConfig {
        seed,
        ..FieldConfig::default()
    };
    let mut fld = field::field_init(&cfg, tgrid.inner.world_rect()).map_err(py_err)?;
    field::field_train(&mut fld, &tgrid.inner, parse_mode(mode)?, steps).map_err(py_err)?;
    Ok(PyField { inner: fld })
}

/// Seed, optimize and height-annotate a trajectory. Returns the trajectory,
/// the path metrics as a JSON string, and a warning flag (true when some
/// waypoint keeps p_block above the stop threshold).
#[pyfunction]
#[pyo3(signature = (tgrid, profile_json, mode, start, goal, seed=0, planner_json=None, max_slope=0.2, speed=0.2))]
#[allow(clippy::too_many_arguments)]
fn plan(
    tgrid: &PyTravGrid,
    profile_json: &str,
    mode: &str,
    start: (f64, f64),
    goal: (f64, f64),
    seed: u64,
    planner_json: Option<&str>,
    max_slope: f64,
    speed: f64,
) -> PyResult<(PyTrajectory, String, bool)> {
    let profile: RobotProfile = parse_json("robot profile", profile_json)?;
    let mode = parse_mode(mode)?;
    let mut cfg: PlannerConfig = match planner_json {
        Some(s) => parse_json("planner config", s)?,
        None => PlannerConfig::default(),
    };
    cfg.footprint_radius = profile.footprint_radius;
    cfg.seed = seed;
    let seeded = planner::seed_path(
        &tgrid.inner,
        [start.0, start.1],
        [goal.0, goal.1],
        mode,
        cfg.n_waypoints,
    )
    .map_err(py_err)?;
    let result = planner::optimize(&seeded, &tgrid.inner, mode, &cfg).map_err(py_err)?;
    let annotated =
        planner::annotate_heights(&result.trajectory, &tgrid.inner, &profile, max_slope)
            .map_err(py_err)?;
    let metrics = planner::path_metrics(&annotated, speed, 2.0, 2.0).map_err(py_err)?;
    let metrics_json = serde_json::to_string(&metrics)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((
        PyTrajectory { inner: annotated },
        metrics_json,
        result.warning,
    ))
}

/// Nearest-neighbor SDF RMSE between two clouds.
#[pyfunction]
fn sdf_rmse(recon: &PyCloud, gt: &PyCloud) -> PyResult<f64> {
    evalmap::sdf_rmse(&recon.inner, &gt.inner).map_err(py_err)
}

/// Bounding-box IoU of two AABBs given as (min, max) corner triples.
#[pyfunction]
fn bbox_iou(a_min: [f64; 3], a_max: [f64; 3], b_min: [f64; 3], b_max: [f64; 3]) -> f64 {
    evalmap::bbox_iou(
        &hatnav_core::geom::Aabb3::new(a_min, a_max),
        &hatnav_core::geom::Aabb3::new(b_min, b_max),
    )
}

/// Run the end-to-end pipeline from a config file path; returns the run
/// report as a JSON string.
#[pyfunction]
fn run_pipeline(config_path: PathBuf) -> PyResult<String> {
    let cfg = hatnav_core::pipeline::load_config(&config_path).map_err(py_err)?;
    let output = hatnav_core::pipeline::run_pipeline(&cfg).map_err(py_err)?;
    serde_json::to_string_pretty(&output.report)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn hatnav_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyCloud>()?;
    m.add_class::<PyVoxelGrid>()?;
    m.add_class::<PyTravGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(gen_scene, m)?)?;
    m.add_function(wrap_pyfunction!(load_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(voxelize, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(train_field, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(sdf_rmse, m)?)?;
    m.add_function(wrap_pyfunction!(bbox_iou, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
