//! Command-line front end for the mapping and planning toolkit.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hatnav_core::cloud::PointCloud;
use hatnav_core::error::{Error, Result};
use hatnav_core::evalmap::{self, EvalSettings};
use hatnav_core::field::{self, FieldConfig, NeuralField};
use hatnav_core::heightmap::{self, PlanMode, RobotProfile, TraversabilityGrid};
use hatnav_core::jsonio;
use hatnav_core::mesh;
use hatnav_core::pipeline::{self, PipelineConfig};
use hatnav_core::planner::{self, PlannerConfig};
use hatnav_core::raster;
use hatnav_core::scenegen::{self, SceneSpec};
use hatnav_core::voxel::{self, VoxelGrid, VoxelGridFile};

#[derive(Parser)]
#[command(name = "hatnav", version, about = "Height-adaptive traversability mapping and planning")]
struct Cli {
    /// Root seed override for stochastic stages.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output artifacts (overrides per-command paths'
    /// directory when they are relative).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// JSON config file (planner config for `plan`, pipeline config for
    /// `pipeline run`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scene generation and voxelization.
    Scene {
        #[command(subcommand)]
        cmd: SceneCmd,
    },
    /// Height-segment a voxel grid into a traversability grid.
    Segment(SegmentArgs),
    /// Neural collision field training and rendering.
    Field {
        #[command(subcommand)]
        cmd: FieldCmd,
    },
    /// Plan a trajectory on a traversability grid.
    Plan(PlanArgs),
    /// Evaluate a reconstruction against a ground-truth cloud.
    EvalMap(EvalMapArgs),
    /// End-to-end pipeline runs and report comparison.
    Pipeline {
        #[command(subcommand)]
        cmd: PipelineCmd,
    },
}

#[derive(Subcommand)]
enum SceneCmd {
    /// Generate a mesh from a scene spec JSON.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Voxelize a mesh (OBJ or PLY) into an occupancy grid JSON.
    Voxelize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        res: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// Inflation radius in meters (Chebyshev disc).
    #[arg(long, default_value_t = 0.0)]
    inflate: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    raster: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FieldCmd {
    /// Train a field on traversability grid labels.
    Train {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        mode: PlanMode,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the loss/accuracy stats next to the checkpoint.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Render the probability channels of a stored field to PPM rasters.
    Eval {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        raster: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        res: f64,
    },
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    mode: PlanMode,
    #[arg(long, value_parser = parse_point)]
    start: (f64, f64),
    #[arg(long, value_parser = parse_point)]
    goal: (f64, f64),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    raster: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    max_slope: f64,
    #[arg(long, default_value_t = 0.2)]
    speed: f64,
    #[arg(long, default_value_t = 2.0)]
    turn_time_per_rad: f64,
    #[arg(long, default_value_t = 2.0)]
    duck_transition_time: f64,
}

#[derive(Args)]
struct EvalMapArgs {
    /// Prediction: voxel grid JSON, mesh (OBJ/PLY), or point-cloud PLY.
    #[arg(long)]
    pred: PathBuf,
    /// Ground truth point-cloud PLY.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    iou_threshold: f64,
    #[arg(long)]
    out: PathBuf,
    /// Voxelization resolution when the prediction is a mesh or cloud.
    #[arg(long, default_value_t = 0.05)]
    res: f64,
    /// Surface sampling density when the prediction is a mesh.
    #[arg(long, default_value_t = 4000.0)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    min_object_voxels: usize,
    /// Also report voxel-level volumetric IoU alongside the bounding-box IoU.
    #[arg(long)]
    volumetric_iou: bool,
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Run the full pipeline from a config file.
    Run {
        /// Pipeline config JSON (or use the global --config).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare two run reports.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y got {s:?}"));
    }
    let x: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let y: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((x, y))
}

fn resolve_out(out_dir: &Option<PathBuf>, path: &Path) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn load_grid(path: &Path) -> Result<VoxelGrid> {
    let file: VoxelGridFile = jsonio::read_json(path)?;
    VoxelGrid::from_file(file)
}

fn load_pred(
    path: &Path,
    res: f64,
    density: f64,
    seed: u64,
) -> Result<(VoxelGrid, PointCloud)> {
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "json" => {
            let grid = load_grid(path)?;
            // coarse fallback: occupied voxel centers stand in for the surface
            let points = grid.iter_occupied().map(|c| grid.cell_center(c)).collect();
            Ok((grid, PointCloud::new(points)?))
        }
        "obj" => {
            let m = mesh::load_mesh(path)?;
            let grid = voxel::voxelize(&m, res, None)?;
            let cloud = hatnav_core::cloud::sample_surface(&m, density, seed)?;
            Ok((grid, cloud))
        }
        _ => {
            // PLY: mesh if it has faces, cloud otherwise
            match mesh::load_mesh(path) {
                Ok(m) => {
                    let grid = voxel::voxelize(&m, res, None)?;
                    let cloud = hatnav_core::cloud::sample_surface(&m, density, seed)?;
                    Ok((grid, cloud))
                }
                Err(Error::EmptyMesh) => {
                    let cloud = PointCloud::load_ply(path)?;
                    let m_bb = hatnav_core::geom::Aabb3::from_points(
                        cloud.points.iter().copied(),
                    )
                    .ok_or(Error::EmptyCloud)?;
                    let template = VoxelGrid::new(
                        m_bb.pad(res).min,
                        res,
                        [
                            ((m_bb.extents()[0] + 2.0 * res) / res).ceil() as usize,
                            ((m_bb.extents()[1] + 2.0 * res) / res).ceil() as usize,
                            ((m_bb.extents()[2] + 2.0 * res) / res).ceil() as usize,
                        ],
                    )?;
                    let grid = evalmap::voxelize_cloud(&cloud, &template)?;
                    Ok((grid, cloud))
                }
                Err(e) => Err(e),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scene { cmd } => match cmd {
            SceneCmd::Gen { spec, out } => {
                let spec: SceneSpec = jsonio::read_json(&spec)?;
                let mesh = scenegen::gen_scene(&spec)?;
                let out = resolve_out(&cli.out_dir, &out);
                if let Some(parent) = out.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                mesh.save_obj(&out)?;
                eprintln!(
                    "scene: {} vertices, {} faces -> {}",
                    mesh.vertices.len(),
                    mesh.faces.len(),
                    out.display()
                );
            }
            SceneCmd::Voxelize { input, res, out } => {
                let m = mesh::load_mesh(&input)?;
                let grid = voxel::voxelize(&m, res, None)?;
                let out = resolve_out(&cli.out_dir, &out);
                jsonio::write_json(&out, &grid.to_file())?;
                eprintln!(
                    "voxelized: dims {:?}, {} occupied -> {}",
                    grid.dims,
                    grid.occupied_count(),
                    out.display()
                );
            }
        },
        Command::Segment(args) => {
            let grid = load_grid(&args.grid)?;
            let profile: RobotProfile = jsonio::read_json(&args.profile)?;
            let tgrid = heightmap::segment(&grid, &profile)?;
            let tgrid = heightmap::inflate(&tgrid, args.inflate)?;
            let out = resolve_out(&cli.out_dir, &args.out);
            jsonio::write_json(&out, &tgrid)?;
            if let Some(r) = args.raster {
                raster::write_class_raster(&tgrid, &resolve_out(&cli.out_dir, &r))?;
            }
            eprintln!(
                "segmented: {}x{} cells, floor_z {:.3} -> {}",
                tgrid.dims[0],
                tgrid.dims[1],
                tgrid.floor_z,
                out.display()
            );
        }
        Command::Field { cmd } => match cmd {
            FieldCmd::Train {
                grid,
                mode,
                steps,
                seed,
                out,
                stats,
            } => {
                let tgrid: TraversabilityGrid = jsonio::read_json(&grid)?;
                tgrid.validate()?;
                let cfg = FieldConfig {
                    seed: cli.seed.unwrap_or(seed),
                    ..FieldConfig::default()
                };
                let mut fld = field::field_init(&cfg, tgrid.world_rect())?;
                let train_stats = field::field_train(&mut fld, &tgrid, mode, steps)?;
                let out = resolve_out(&cli.out_dir, &out);
                jsonio::write_json(&out, &fld)?;
                if let Some(s) = stats {
                    jsonio::write_json(&resolve_out(&cli.out_dir, &s), &train_stats)?;
                }
                eprintln!(
                    "trained {steps} steps: block acc {:.3}, duck acc {:.3} -> {}",
                    train_stats.block_accuracy,
                    train_stats.duck_accuracy,
                    out.display()
                );
            }
            FieldCmd::Eval { field, raster: r, res } => {
                let fld: NeuralField = jsonio::read_json(&field)?;
                let out = resolve_out(&cli.out_dir, &r);
                raster::write_field_rasters(&fld, res, &out)?;
                eprintln!("field rasters written next to {}", out.display());
            }
        },
        Command::Plan(args) => {
            let tgrid: TraversabilityGrid = jsonio::read_json(&args.grid)?;
            tgrid.validate()?;
            let profile: RobotProfile = jsonio::read_json(&args.profile)?;
            let mut pcfg: PlannerConfig = match &cli.config {
                Some(path) => jsonio::read_json(path)?,
                None => PlannerConfig::default(),
            };
            pcfg.footprint_radius = profile.footprint_radius;
            pcfg.seed = cli.seed.unwrap_or(args.seed);
            let start = [args.start.0, args.start.1];
            let goal = [args.goal.0, args.goal.1];
            let seeded = planner::seed_path(&tgrid, start, goal, args.mode, pcfg.n_waypoints)?;
            let result = planner::optimize(&seeded, &tgrid, args.mode, &pcfg)?;
            let annotated =
                planner::annotate_heights(&result.trajectory, &tgrid, &profile, args.max_slope)?;
            let metrics = planner::path_metrics(
                &annotated,
                args.speed,
                args.turn_time_per_rad,
                args.duck_transition_time,
            )?;
            let out = resolve_out(&cli.out_dir, &args.out);
            jsonio::write_json(&out, &annotated)?;
            if let Some(m) = args.metrics {
                jsonio::write_json(&resolve_out(&cli.out_dir, &m), &metrics)?;
            }
            if let Some(r) = args.raster {
                raster::write_trajectory_raster(
                    &tgrid,
                    &annotated,
                    &resolve_out(&cli.out_dir, &r),
                )?;
            }
            if result.warning {
                eprintln!("warning: some waypoints keep p_block above p_stop");
            }
            eprintln!(
                "planned ({:?}): length {:.3} m, max curvature {:.3} 1/m, est time {:.1} s -> {}",
                args.mode,
                metrics.length,
                metrics.max_curvature,
                metrics.est_time,
                out.display()
            );
        }
        Command::EvalMap(args) => {
            let t0 = std::time::Instant::now();
            let seed = cli.seed.unwrap_or(args.seed);
            let (pred_grid, pred_cloud) = load_pred(&args.pred, args.res, args.density, seed)?;
            let gt_cloud = PointCloud::load_ply(&args.gt)?;
            let floor_z = heightmap::estimate_floor(&pred_grid)?;
            let settings = EvalSettings {
                iou_threshold: args.iou_threshold,
                surface_density: args.density,
                min_object_voxels: args.min_object_voxels,
                volumetric_iou: args.volumetric_iou,
            };
            let mut report =
                evalmap::evaluate(&pred_grid, &pred_cloud, &gt_cloud, floor_z, &settings)?;
            report.time_sec = t0.elapsed().as_secs_f64();
            let out = resolve_out(&cli.out_dir, &args.out);
            jsonio::write_json(&out, &report)?;
            eprintln!(
                "eval: P {:.3} R {:.3} F {:.3}, IoU {:.1}%, SDF RMSE {:.4} m -> {}",
                report.precision,
                report.recall,
                report.f_score,
                report.iou_pct,
                report.rmse_sdf_m,
                out.display()
            );
        }
        Command::Pipeline { cmd } => match cmd {
            PipelineCmd::Run { config } => {
                let path = config
                    .or(cli.config.clone())
                    .ok_or_else(|| Error::InvalidParameter("pipeline run needs --config".into()))?;
                let mut cfg: PipelineConfig = pipeline::load_config(&path)?;
                if let Some(seed) = cli.seed {
                    cfg.seed = seed;
                }
                if let Some(dir) = &cli.out_dir {
                    cfg.out_dir = dir.clone();
                }
                let output = pipeline::run_pipeline(&cfg)?;
                eprintln!(
                    "pipeline done in {:.1} s: HAT {:.2} m vs FLAT2D {:.2} m (length reduction {:.1}%)",
                    output.timings.total,
                    output.report.hat.metrics.length,
                    output.report.flat2d.metrics.length,
                    output.report.reduction.length * 100.0
                );
                eprintln!("report: {}", cfg.out_dir.join("run_report.json").display());
            }
            PipelineCmd::Compare { a, b, out } => {
                let va: serde_json::Value = serde_json::from_slice(&std::fs::read(&a)?)?;
                let vb: serde_json::Value = serde_json::from_slice(&std::fs::read(&b)?)?;
                let deltas = pipeline::compare_runs(&va, &vb)?;
                print!("{}", pipeline::format_comparison(&deltas));
                if let Some(out) = out {
                    jsonio::write_json(&resolve_out(&cli.out_dir, &out), &deltas)?;
                }
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
