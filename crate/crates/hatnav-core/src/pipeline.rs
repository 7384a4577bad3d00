//! End-to-end batch pipeline: scene -> voxelize -> segment -> plan (both
//! modes) -> evaluate -> report. Every stage persists its artifact so later
//! stages can be re-run from files, and a single root seed drives all
//! stochastic stages.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cloud::{sample_surface, PointCloud};
use crate::error::{Error, Result};
use crate::evalmap::{self, EvalReport, EvalSettings};
use crate::field::NeuralField;
use crate::geom::Vec2;
use crate::heightmap::{self, PlanMode, RobotProfile, TraversabilityGrid};
use crate::jsonio;
use crate::mesh::TriMesh;
use crate::planner::{self, PathMetrics, PlannerConfig, Trajectory};
use crate::raster;
use crate::scenegen::{self, SceneSpec};
use crate::seeds::derive_seed;
use crate::voxel;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Path to the scene spec JSON (relative paths resolve against the
    /// config file's directory when loaded through [`load_config`]).
    pub scene_spec: PathBuf,
    pub profile: RobotProfile,
    pub voxel_resolution: f64,
    pub planner: PlannerConfig,
    #[serde(default)]
    pub eval: EvalSettings,
    pub start: Vec2,
    pub goal: Vec2,
    #[serde(default = "default_max_slope")]
    pub max_slope: f64,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default = "default_turn_time")]
    pub turn_time_per_rad: f64,
    #[serde(default = "default_duck_time")]
    pub duck_transition_time: f64,
    /// Inflate the traversability grid by the footprint radius before
    /// planning.
    #[serde(default = "default_true")]
    pub inflate_by_footprint: bool,
    pub out_dir: PathBuf,
    pub seed: u64,
}

fn default_max_slope() -> f64 {
    0.2
}
fn default_speed() -> f64 {
    0.2
}
fn default_turn_time() -> f64 {
    2.0
}
fn default_duck_time() -> f64 {
    2.0
}
fn default_true() -> bool {
    true
}

/// Load a pipeline config, resolving the scene spec path relative to the
/// config file location.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = jsonio::read_json(path)?;
    if cfg.scene_spec.is_relative() {
        if let Some(dir) = path.parent() {
            cfg.scene_spec = dir.join(&cfg.scene_spec);
        }
    }
    Ok(cfg)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchReport {
    pub metrics: PathMetrics,
    pub final_cost: f64,
    pub warning: bool,
    pub field_block_accuracy: f64,
    pub field_duck_accuracy: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reduction {
    pub length: f64,
    pub est_time: f64,
    pub max_curvature: f64,
}

/// Deterministic run summary. Wall-clock timings are reported separately
/// (see [`StageTimings`]) so two runs with the same seed produce
/// byte-identical reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub eval: EvalReport,
    pub hat: BranchReport,
    pub flat2d: BranchReport,
    /// (flat - hat) / flat per metric.
    pub reduction: Reduction,
}

/// Per-stage wall-clock seconds, written to a sidecar file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub scene_gen: f64,
    pub voxelize: f64,
    pub segment: f64,
    pub plan_hat: f64,
    pub plan_flat2d: f64,
    pub eval: f64,
    pub total: f64,
}

pub struct PipelineOutput {
    pub report: RunReport,
    pub timings: StageTimings,
    pub hat_trajectory: Trajectory,
    pub flat2d_trajectory: Trajectory,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

struct PlanBranch {
    trajectory: Trajectory,
    metrics: PathMetrics,
    report: BranchReport,
    field: NeuralField,
}

fn plan_branch(
    cfg: &PipelineConfig,
    tgrid: &TraversabilityGrid,
    mode: PlanMode,
    seed_tag: &str,
) -> Result<PlanBranch> {
    let mut pcfg = cfg.planner.clone();
    pcfg.footprint_radius = cfg.profile.footprint_radius;
    pcfg.seed = derive_seed(cfg.seed, seed_tag);
    let seeded = planner::seed_path(tgrid, cfg.start, cfg.goal, mode, pcfg.n_waypoints)?;
    let result = planner::optimize(&seeded, tgrid, mode, &pcfg)?;
    let annotated =
        planner::annotate_heights(&result.trajectory, tgrid, &cfg.profile, cfg.max_slope)?;
    let metrics = planner::path_metrics(
        &annotated,
        cfg.speed,
        cfg.turn_time_per_rad,
        cfg.duck_transition_time,
    )?;
    Ok(PlanBranch {
        trajectory: annotated,
        metrics,
        report: BranchReport {
            metrics,
            final_cost: *result.cost_history.last().unwrap_or(&f64::NAN),
            warning: result.warning,
            field_block_accuracy: result.train_stats.block_accuracy,
            field_duck_accuracy: result.train_stats.duck_accuracy,
        },
        field: result.field,
    })
}

/// Run the full pipeline, persisting every intermediate artifact under
/// `cfg.out_dir`. Deterministic given the config seed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let t_total = Instant::now();
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)?;
    let mut timings = StageTimings::default();

    // scene
    let t = Instant::now();
    let spec: SceneSpec = stage("scene_gen", jsonio::read_json(&cfg.scene_spec))?;
    let mesh: TriMesh = stage("scene_gen", scenegen::gen_scene(&spec))?;
    stage("scene_gen", mesh.save_obj(&out.join("scene.obj")))?;
    timings.scene_gen = t.elapsed().as_secs_f64();

    // voxelize
    let t = Instant::now();
    let grid = stage("voxelize", voxel::voxelize(&mesh, cfg.voxel_resolution, None))?;
    stage(
        "voxelize",
        jsonio::write_json(&out.join("grid.json"), &grid.to_file()),
    )?;
    timings.voxelize = t.elapsed().as_secs_f64();

    // segment (+ optional inflation)
    let t = Instant::now();
    let tgrid_raw = stage("segment", heightmap::segment(&grid, &cfg.profile))?;
    stage(
        "segment",
        jsonio::write_json(&out.join("tgrid.json"), &tgrid_raw),
    )?;
    let tgrid = if cfg.inflate_by_footprint {
        let inflated = stage(
            "segment",
            heightmap::inflate(&tgrid_raw, cfg.profile.footprint_radius),
        )?;
        stage(
            "segment",
            jsonio::write_json(&out.join("tgrid_inflated.json"), &inflated),
        )?;
        inflated
    } else {
        tgrid_raw.clone()
    };
    stage(
        "segment",
        raster::write_class_raster(&tgrid, &out.join("tgrid.ppm")),
    )?;
    timings.segment = t.elapsed().as_secs_f64();

    // plan, both modes
    let t = Instant::now();
    let hat = stage("plan_hat", plan_branch(cfg, &tgrid, PlanMode::Hat, "plan-hat"))?;
    stage(
        "plan_hat",
        jsonio::write_json(&out.join("traj_hat.json"), &hat.trajectory),
    )?;
    stage(
        "plan_hat",
        jsonio::write_json(&out.join("metrics_hat.json"), &hat.metrics),
    )?;
    stage(
        "plan_hat",
        jsonio::write_json(&out.join("field_hat.json"), &hat.field),
    )?;
    stage(
        "plan_hat",
        raster::write_field_rasters(&hat.field, tgrid.resolution, &out.join("field_hat.ppm")),
    )?;
    stage(
        "plan_hat",
        raster::write_trajectory_raster(&tgrid, &hat.trajectory, &out.join("traj_hat.ppm")),
    )?;
    timings.plan_hat = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let flat = stage(
        "plan_flat2d",
        plan_branch(cfg, &tgrid, PlanMode::Flat2d, "plan-flat2d"),
    )?;
    stage(
        "plan_flat2d",
        jsonio::write_json(&out.join("traj_flat2d.json"), &flat.trajectory),
    )?;
    stage(
        "plan_flat2d",
        jsonio::write_json(&out.join("metrics_flat2d.json"), &flat.metrics),
    )?;
    stage(
        "plan_flat2d",
        jsonio::write_json(&out.join("field_flat2d.json"), &flat.field),
    )?;
    stage(
        "plan_flat2d",
        raster::write_field_rasters(&flat.field, tgrid.resolution, &out.join("field_flat2d.ppm")),
    )?;
    stage(
        "plan_flat2d",
        raster::write_trajectory_raster(&tgrid, &flat.trajectory, &out.join("traj_flat2d.ppm")),
    )?;
    timings.plan_flat2d = t.elapsed().as_secs_f64();

    // evaluate the reconstruction against its own sampled surface
    let t = Instant::now();
    let gt_cloud: PointCloud = stage(
        "eval",
        sample_surface(&mesh, cfg.eval.surface_density, derive_seed(cfg.seed, "gt-surface")),
    )?;
    stage("eval", gt_cloud.save_ply(&out.join("gt_surface.ply")))?;
    let pred_cloud = stage(
        "eval",
        sample_surface(&mesh, cfg.eval.surface_density, derive_seed(cfg.seed, "pred-surface")),
    )?;
    let eval = stage(
        "eval",
        evalmap::evaluate(&grid, &pred_cloud, &gt_cloud, tgrid_raw.floor_z, &cfg.eval),
    )?;
    stage("eval", jsonio::write_json(&out.join("eval.json"), &eval))?;
    timings.eval = t.elapsed().as_secs_f64();

    let reduction = Reduction {
        length: (flat.metrics.length - hat.metrics.length) / flat.metrics.length,
        est_time: (flat.metrics.est_time - hat.metrics.est_time) / flat.metrics.est_time,
        max_curvature: (flat.metrics.max_curvature - hat.metrics.max_curvature)
            / flat.metrics.max_curvature,
    };
    let report = RunReport {
        seed: cfg.seed,
        eval,
        hat: hat.report,
        flat2d: flat.report,
        reduction,
    };
    jsonio::write_json(&out.join("run_report.json"), &report)?;

    timings.total = t_total.elapsed().as_secs_f64();
    jsonio::write_json(&out.join("timings.json"), &timings)?;

    Ok(PipelineOutput {
        report,
        timings,
        hat_trajectory: hat.trajectory,
        flat2d_trajectory: flat.trajectory,
    })
}

/// One compared metric: values from both reports plus absolute and
/// relative deltas ((b-a)/|a|, absent when a == 0 and b != 0).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricDelta {
    pub a: f64,
    pub b: f64,
    pub abs: f64,
    pub rel: Option<f64>,
}

/// Compare two run-report JSON documents field by field. Both documents
/// must have identical structure (same keys, same array lengths, same leaf
/// kinds); otherwise a SchemaMismatch names the offending path.
pub fn compare_runs(a: &Value, b: &Value) -> Result<BTreeMap<String, MetricDelta>> {
    let mut out = BTreeMap::new();
    walk("", a, b, &mut out)?;
    Ok(out)
}

fn walk(
    path: &str,
    a: &Value,
    b: &Value,
    out: &mut BTreeMap<String, MetricDelta>,
) -> Result<()> {
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            for key in ma.keys() {
                if !mb.contains_key(key) {
                    return Err(Error::SchemaMismatch(format!(
                        "field {} missing from second report",
                        join(path, key)
                    )));
                }
            }
            for key in mb.keys() {
                if !ma.contains_key(key) {
                    return Err(Error::SchemaMismatch(format!(
                        "field {} missing from first report",
                        join(path, key)
                    )));
                }
            }
            for (key, va) in ma {
                walk(&join(path, key), va, &mb[key], out)?;
            }
            Ok(())
        }
        (Value::Array(xa), Value::Array(xb)) => {
            if xa.len() != xb.len() {
                return Err(Error::SchemaMismatch(format!(
                    "array {path} has lengths {} vs {}",
                    xa.len(),
                    xb.len()
                )));
            }
            for (i, (va, vb)) in xa.iter().zip(xb).enumerate() {
                walk(&format!("{path}[{i}]"), va, vb, out)?;
            }
            Ok(())
        }
        (Value::Number(na), Value::Number(nb)) => {
            let fa = na.as_f64().unwrap_or(f64::NAN);
            let fb = nb.as_f64().unwrap_or(f64::NAN);
            let rel = if fa != 0.0 {
                Some((fb - fa) / fa.abs())
            } else if fb == 0.0 {
                Some(0.0)
            } else {
                None
            };
            out.insert(
                path.to_string(),
                MetricDelta {
                    a: fa,
                    b: fb,
                    abs: fb - fa,
                    rel,
                },
            );
            Ok(())
        }
        (Value::String(_), Value::String(_))
        | (Value::Bool(_), Value::Bool(_))
        | (Value::Null, Value::Null) => Ok(()),
        _ => Err(Error::SchemaMismatch(format!(
            "field {path} has mismatched types"
        ))),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Human-readable table of the comparison, largest relative change first.
pub fn format_comparison(deltas: &BTreeMap<String, MetricDelta>) -> String {
    let mut rows: Vec<(&String, &MetricDelta)> = deltas.iter().collect();
    rows.sort_by(|x, y| {
        let rx = x.1.rel.map(f64::abs).unwrap_or(f64::INFINITY);
        let ry = y.1.rel.map(f64::abs).unwrap_or(f64::INFINITY);
        ry.total_cmp(&rx).then_with(|| x.0.cmp(y.0))
    });
    let mut s = String::new();
    let _ = writeln!(s, "{:<44} {:>14} {:>14} {:>12} {:>10}", "metric", "a", "b", "abs", "rel");
    for (path, d) in rows {
        let rel = d
            .rel
            .map(|r| format!("{:+.4}", r))
            .unwrap_or_else(|| "n/a".into());
        let _ = writeln!(
            s,
            "{:<44} {:>14.6} {:>14.6} {:>+12.6} {:>10}",
            path, d.a, d.b, d.abs, rel
        );
    }
    s
}
