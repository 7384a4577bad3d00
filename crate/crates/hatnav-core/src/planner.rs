//! Trajectory planning: feasible seeding over the traversability grid,
//! alternating neural-field training with gradient-based waypoint
//! optimization, body-height annotation, and path metrics.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, FieldConfig, FieldTrainer, NeuralField, TrainStats};
use crate::geom::{self, Vec2};
use crate::heightmap::{CellClass, PlanMode, RobotProfile, TraversabilityGrid};
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub body_height: f64,
}

impl Waypoint {
    pub fn pos(&self) -> Vec2 {
        [self.x, self.y]
    }
}

// Serialized as the tuple (x, y, body_height).
impl Serialize for Waypoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.x, self.y, self.body_height).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Waypoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (x, y, body_height) = <(f64, f64, f64)>::deserialize(d)?;
        Ok(Waypoint { x, y, body_height })
    }
}

/// Ordered waypoints with fixed start/goal anchors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: Vec2,
    pub goal: Vec2,
    pub waypoints: Vec<Waypoint>,
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::TooFewWaypoints(self.waypoints.len()));
        }
        let first = self.waypoints.first().unwrap();
        let last = self.waypoints.last().unwrap();
        if first.pos() != self.start || last.pos() != self.goal {
            return Err(Error::InvalidParameter(
                "trajectory endpoints must equal the start/goal anchors".into(),
            ));
        }
        for w in self.waypoints.windows(2) {
            if w[0].pos() == w[1].pos() {
                return Err(Error::InvalidParameter(
                    "consecutive waypoints must be distinct".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn planar_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| geom::dist2(w[0].pos(), w[1].pos()))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub n_waypoints: usize,
    pub w_len: f64,
    pub w_smooth: f64,
    pub w_col: f64,
    pub w_duck: f64,
    pub waypoint_lr: f64,
    pub outer_iters: usize,
    /// Field training steps per outer iteration.
    pub field_steps_per_iter: usize,
    /// Waypoint gradient steps per outer iteration.
    pub waypoint_steps_per_iter: usize,
    /// Collision probability above which the result carries a warning.
    pub p_stop: f64,
    /// Samples on the footprint circle for the collision cost.
    pub footprint_samples: usize,
    pub footprint_radius: f64,
    pub seed: u64,
    pub field: FieldConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            n_waypoints: 64,
            w_len: 2.0,
            w_smooth: 8.0,
            w_col: 30.0,
            w_duck: 0.05,
            waypoint_lr: 0.005,
            outer_iters: 300,
            field_steps_per_iter: 10,
            waypoint_steps_per_iter: 5,
            p_stop: 0.3,
            footprint_samples: 8,
            footprint_radius: 0.15,
            seed: 0,
            field: FieldConfig::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_waypoints < 8 {
            return Err(Error::InvalidParameter(
                "n_waypoints must be >= 8".into(),
            ));
        }
        if !(self.p_stop > 0.0 && self.p_stop < 1.0) {
            return Err(Error::InvalidParameter("p_stop must be in (0,1)".into()));
        }
        if self.footprint_samples < 1 {
            return Err(Error::InvalidParameter(
                "footprint_samples must be >= 1".into(),
            ));
        }
        for (name, v) in [
            ("w_len", self.w_len),
            ("w_smooth", self.w_smooth),
            ("w_col", self.w_col),
            ("w_duck", self.w_duck),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0")));
            }
        }
        if !(self.waypoint_lr > 0.0) {
            return Err(Error::InvalidParameter("waypoint_lr must be > 0".into()));
        }
        self.field.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    pub length: f64,
    pub max_curvature: f64,
    pub est_time: f64,
    pub duck_fraction: f64,
}

// ---------------------------------------------------------------------------
// A* seeding
// ---------------------------------------------------------------------------

#[derive(PartialEq)]
struct OpenNode {
    f: f64,
    ix: usize,
    iy: usize,
}

impl Eq for OpenNode {}

impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: invert so the smallest (f, ix, iy) pops
        // first. Lexicographic (ix, iy) tie-breaking keeps runs deterministic.
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.ix.cmp(&self.ix))
            .then_with(|| other.iy.cmp(&self.iy))
    }
}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Seed a feasible path: 8-connected A* over passable cells with Euclidean
/// step costs, arc-length resampled to exactly `n` waypoints. Diagonal moves
/// require both adjacent orthogonal cells to be passable.
pub fn seed_path(
    tgrid: &TraversabilityGrid,
    start: Vec2,
    goal: Vec2,
    mode: PlanMode,
    n: usize,
) -> Result<Trajectory> {
    if n < 2 {
        return Err(Error::TooFewWaypoints(n));
    }
    let passable = |c: [usize; 2]| mode.passable(tgrid.cell(c[0], c[1]).class);
    let start_cell = tgrid.world_to_cell(start).ok_or(Error::StartBlocked)?;
    let goal_cell = tgrid.world_to_cell(goal).ok_or(Error::GoalBlocked)?;
    if !passable(start_cell) {
        return Err(Error::StartBlocked);
    }
    if !passable(goal_cell) {
        return Err(Error::GoalBlocked);
    }

    let [nx, ny] = tgrid.dims;
    let res = tgrid.resolution;
    let idx = |c: [usize; 2]| c[1] * nx + c[0];
    let mut g = vec![f64::INFINITY; nx * ny];
    let mut parent: Vec<u32> = vec![u32::MAX; nx * ny];
    let mut closed = vec![false; nx * ny];
    let heur = |c: [usize; 2]| {
        let dx = (c[0] as f64 - goal_cell[0] as f64) * res;
        let dy = (c[1] as f64 - goal_cell[1] as f64) * res;
        (dx * dx + dy * dy).sqrt()
    };

    let mut open = BinaryHeap::new();
    g[idx(start_cell)] = 0.0;
    open.push(OpenNode {
        f: heur(start_cell),
        ix: start_cell[0],
        iy: start_cell[1],
    });

    const STEPS: [(i64, i64); 8] = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];

    let mut found = false;
    while let Some(node) = open.pop() {
        let c = [node.ix, node.iy];
        let ci = idx(c);
        if closed[ci] {
            continue;
        }
        closed[ci] = true;
        if c == goal_cell {
            found = true;
            break;
        }
        for &(dx, dy) in &STEPS {
            let jx = c[0] as i64 + dx;
            let jy = c[1] as i64 + dy;
            if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                continue;
            }
            let nc = [jx as usize, jy as usize];
            if !passable(nc) {
                continue;
            }
            if dx != 0 && dy != 0 {
                // no corner cutting
                let o1 = [c[0], nc[1]];
                let o2 = [nc[0], c[1]];
                if !passable(o1) || !passable(o2) {
                    continue;
                }
            }
            let step = if dx != 0 && dy != 0 {
                res * std::f64::consts::SQRT_2
            } else {
                res
            };
            let ni = idx(nc);
            let cand = g[ci] + step;
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = ci as u32;
                open.push(OpenNode {
                    f: cand + heur(nc),
                    ix: nc[0],
                    iy: nc[1],
                });
            }
        }
    }
    if !found {
        return Err(Error::NoFeasiblePath);
    }

    // polyline: exact start, cell centers, exact goal
    let mut cells = vec![goal_cell];
    let mut cur = idx(goal_cell);
    while parent[cur] != u32::MAX {
        cur = parent[cur] as usize;
        cells.push([cur % nx, cur / nx]);
    }
    cells.reverse();
    let mut polyline: Vec<Vec2> = Vec::with_capacity(cells.len() + 2);
    polyline.push(start);
    for c in cells {
        polyline.push(tgrid.cell_center(c));
    }
    polyline.push(goal);
    polyline.dedup_by(|a, b| a == b);

    let positions = resample_polyline(&polyline, n, start, goal);
    let waypoints = positions
        .into_iter()
        .map(|p| {
            let cell = tgrid.cell_at_world(p);
            let h = cell
                .and_then(|c| c.required_height)
                .unwrap_or(0.0);
            Waypoint {
                x: p[0],
                y: p[1],
                body_height: h,
            }
        })
        .collect();
    let traj = Trajectory {
        start,
        goal,
        waypoints,
    };
    traj.validate()?;
    Ok(traj)
}

/// Resample a polyline to `n` points evenly spaced by arc length, with the
/// endpoints pinned exactly.
fn resample_polyline(polyline: &[Vec2], n: usize, start: Vec2, goal: Vec2) -> Vec<Vec2> {
    let mut cum = Vec::with_capacity(polyline.len());
    cum.push(0.0);
    for w in polyline.windows(2) {
        let d = geom::dist2(w[0], w[1]);
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    out.push(start);
    let mut seg = 0usize;
    for k in 1..n - 1 {
        let s = total * k as f64 / (n - 1) as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < s {
            seg += 1;
        }
        let seg_len = cum[seg + 1] - cum[seg];
        let t = if seg_len > 0.0 { (s - cum[seg]) / seg_len } else { 0.0 };
        out.push(geom::add2(
            polyline[seg],
            geom::scale2(geom::sub2(polyline[seg + 1], polyline[seg]), t),
        ));
    }
    out.push(goal);
    out
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

fn footprint_offsets(cfg: &PlannerConfig) -> Vec<Vec2> {
    let k = cfg.footprint_samples;
    (0..k)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            [
                cfg.footprint_radius * th.cos(),
                cfg.footprint_radius * th.sin(),
            ]
        })
        .collect()
}

/// Objective cost without gradients.
pub fn objective_cost(traj: &Trajectory, fld: &NeuralField, cfg: &PlannerConfig) -> f64 {
    let offsets = footprint_offsets(cfg);
    objective_cost_with_offsets(traj, fld, cfg, &offsets)
}

fn objective_cost_with_offsets(
    traj: &Trajectory,
    fld: &NeuralField,
    cfg: &PlannerConfig,
    offsets: &[Vec2],
) -> f64 {
    let pts: Vec<Vec2> = traj.waypoints.iter().map(|w| w.pos()).collect();
    let mut cost = 0.0;
    for w in pts.windows(2) {
        let d = geom::sub2(w[1], w[0]);
        cost += cfg.w_len * geom::dot2(d, d);
    }
    for i in 1..pts.len() - 1 {
        let s = [
            pts[i + 1][0] - 2.0 * pts[i][0] + pts[i - 1][0],
            pts[i + 1][1] - 2.0 * pts[i][1] + pts[i - 1][1],
        ];
        cost += cfg.w_smooth * geom::dot2(s, s);
    }
    let inv_k = 1.0 / offsets.len() as f64;
    for p in &pts {
        let mut cb = 0.0;
        let mut cd = 0.0;
        for o in offsets {
            let (pb, pd) = fld.forward(geom::add2(*p, *o));
            cb += pb;
            cd += pd;
        }
        cost += cfg.w_col * cb * inv_k + cfg.w_duck * cd * inv_k;
    }
    cost
}

/// Objective cost and its exact analytic gradient per waypoint (endpoint
/// gradients are forced to zero).
///
/// cost = w_len * sum |p[i+1]-p[i]|^2
///      + w_smooth * sum |p[i+1]-2p[i]+p[i-1]|^2
///      + w_col * sum mean_footprint p_block
///      + w_duck * sum mean_footprint p_duck
pub fn objective(
    traj: &Trajectory,
    fld: &NeuralField,
    cfg: &PlannerConfig,
) -> (f64, Vec<Vec2>) {
    let offsets = footprint_offsets(cfg);
    objective_with_offsets(traj, fld, cfg, &offsets)
}

fn objective_with_offsets(
    traj: &Trajectory,
    fld: &NeuralField,
    cfg: &PlannerConfig,
    offsets: &[Vec2],
) -> (f64, Vec<Vec2>) {
    let pts: Vec<Vec2> = traj.waypoints.iter().map(|w| w.pos()).collect();
    let n = pts.len();
    let mut cost = 0.0;
    let mut grad = vec![[0.0; 2]; n];

    for i in 0..n - 1 {
        let d = geom::sub2(pts[i + 1], pts[i]);
        cost += cfg.w_len * geom::dot2(d, d);
        for a in 0..2 {
            grad[i][a] -= 2.0 * cfg.w_len * d[a];
            grad[i + 1][a] += 2.0 * cfg.w_len * d[a];
        }
    }

    let mut second: Vec<Vec2> = vec![[0.0; 2]; n];
    for i in 1..n - 1 {
        let s = [
            pts[i + 1][0] - 2.0 * pts[i][0] + pts[i - 1][0],
            pts[i + 1][1] - 2.0 * pts[i][1] + pts[i - 1][1],
        ];
        second[i] = s;
        cost += cfg.w_smooth * geom::dot2(s, s);
    }
    for i in 0..n {
        for a in 0..2 {
            let mut acc = 0.0;
            if i >= 1 {
                acc += second[i - 1][a];
            }
            acc -= 2.0 * second[i][a];
            if i + 1 < n {
                acc += second[i + 1][a];
            }
            grad[i][a] += 2.0 * cfg.w_smooth * acc;
        }
    }

    let inv_k = 1.0 / offsets.len() as f64;
    for (i, p) in pts.iter().enumerate() {
        let mut cb = 0.0;
        let mut cd = 0.0;
        let mut gb = [0.0; 2];
        let mut gd = [0.0; 2];
        for o in offsets {
            let (pb, pd, dgb, dgd) = fld.forward_with_input_grad(geom::add2(*p, *o));
            cb += pb;
            cd += pd;
            gb[0] += dgb[0];
            gb[1] += dgb[1];
            gd[0] += dgd[0];
            gd[1] += dgd[1];
        }
        cost += cfg.w_col * cb * inv_k + cfg.w_duck * cd * inv_k;
        for a in 0..2 {
            grad[i][a] += cfg.w_col * gb[a] * inv_k + cfg.w_duck * gd[a] * inv_k;
        }
    }

    grad[0] = [0.0, 0.0];
    grad[n - 1] = [0.0, 0.0];
    (cost, grad)
}

// ---------------------------------------------------------------------------
// Alternating optimization
// ---------------------------------------------------------------------------

/// Result of [`optimize`]: the optimized trajectory, training stats of the
/// online field, the per-outer-iteration cost history, and a warning flag
/// set when some waypoint still sees p_block >= p_stop.
#[derive(Clone, Debug)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    pub field: NeuralField,
    pub train_stats: TrainStats,
    pub cost_history: Vec<f64>,
    pub warning: bool,
}

/// Alternate online field training with Adam steps on the interior
/// waypoints. Steps that would increase the cost (or move a waypoint into a
/// cell that is impassable for the mode) are rejected with halved step
/// scale, up to 10 halvings. Stops early once the relative cost change
/// stays below 1e-4 for 10 consecutive outer iterations.
pub fn optimize(
    traj: &Trajectory,
    tgrid: &TraversabilityGrid,
    mode: PlanMode,
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    cfg.validate()?;
    traj.validate()?;

    let mut field_cfg = cfg.field.clone();
    field_cfg.seed = seeds::derive_seed(cfg.seed, "field-init");
    let mut fld = field::field_init(&field_cfg, tgrid.world_rect())?;
    let mut trainer = FieldTrainer::new(
        &fld,
        tgrid,
        mode,
        seeds::derive_seed(cfg.seed, "field-batches"),
    )?;

    let offsets = footprint_offsets(cfg);
    let mut traj = traj.clone();
    let n = traj.waypoints.len();

    // Adam state over interior waypoint coordinates
    let mut m = vec![[0.0; 2]; n];
    let mut v = vec![[0.0; 2]; n];
    let mut t_step = 0i32;

    let mut cost_history: Vec<f64> = Vec::with_capacity(cfg.outer_iters);
    let mut quiet_iters = 0usize;

    let feasible = |traj: &Trajectory| -> bool {
        for i in 1..n - 1 {
            match tgrid.cell_at_world(traj.waypoints[i].pos()) {
                Some(c) if mode.passable(c.class) => {}
                _ => return false,
            }
        }
        for w in traj.waypoints.windows(2) {
            if w[0].pos() == w[1].pos() {
                return false;
            }
        }
        true
    };

    for _outer in 0..cfg.outer_iters {
        for _ in 0..cfg.field_steps_per_iter {
            trainer.step(&mut fld);
        }

        let mut cost = objective_cost_with_offsets(&traj, &fld, cfg, &offsets);
        for _ in 0..cfg.waypoint_steps_per_iter {
            if !cost.is_finite() {
                return Err(Error::DivergedCost);
            }
            let (c0, grad) = objective_with_offsets(&traj, &fld, cfg, &offsets);
            cost = c0;
            t_step += 1;
            let bc1 = 1.0 - 0.9f64.powi(t_step);
            let bc2 = 1.0 - 0.999f64.powi(t_step);
            let mut dir = vec![[0.0; 2]; n];
            for i in 1..n - 1 {
                for a in 0..2 {
                    let g = grad[i][a];
                    m[i][a] = 0.9 * m[i][a] + 0.1 * g;
                    v[i][a] = 0.999 * v[i][a] + 0.001 * g * g;
                    dir[i][a] = (m[i][a] / bc1) / ((v[i][a] / bc2).sqrt() + 1e-8);
                }
            }

            let mut scale = cfg.waypoint_lr;
            let mut accepted = false;
            for _try in 0..=10 {
                let mut trial = traj.clone();
                for i in 1..n - 1 {
                    trial.waypoints[i].x -= scale * dir[i][0];
                    trial.waypoints[i].y -= scale * dir[i][1];
                }
                let trial_cost = objective_cost_with_offsets(&trial, &fld, cfg, &offsets);
                if trial_cost.is_finite() && trial_cost <= cost + 1e-9 && feasible(&trial) {
                    traj = trial;
                    cost = trial_cost;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                break; // gradient step cannot improve under this field
            }
        }

        if !cost.is_finite() {
            return Err(Error::DivergedCost);
        }
        if let Some(&prev) = cost_history.last() {
            let rel = (cost - prev).abs() / prev.abs().max(1e-12);
            if rel < 1e-4 {
                quiet_iters += 1;
            } else {
                quiet_iters = 0;
            }
        }
        cost_history.push(cost);
        if quiet_iters >= 10 {
            break;
        }
    }

    let warning = traj
        .waypoints
        .iter()
        .any(|w| fld.forward(w.pos()).0 >= cfg.p_stop);

    let (block_accuracy, duck_accuracy) = field::field_accuracy(&fld, tgrid, mode);
    let train_stats = TrainStats {
        losses: trainer.losses.clone(),
        block_accuracy,
        duck_accuracy,
    };

    traj.validate()?;
    Ok(PlanResult {
        trajectory: traj,
        field: fld,
        train_stats,
        cost_history,
        warning,
    })
}

// ---------------------------------------------------------------------------
// Height annotation
// ---------------------------------------------------------------------------

/// Assign per-waypoint body heights: the cell's required height, lowered
/// ahead of duck zones by a forward-backward pass so |dh| <= max_slope * |dp|
/// between neighbors. Heights are never raised above the cell requirement
/// and end up clamped to [h_min, h_max].
pub fn annotate_heights(
    traj: &Trajectory,
    tgrid: &TraversabilityGrid,
    profile: &RobotProfile,
    max_slope: f64,
) -> Result<Trajectory> {
    traj.validate()?;
    profile.validate()?;
    if !(max_slope >= 0.0) {
        return Err(Error::InvalidParameter("max_slope must be >= 0".into()));
    }
    let n = traj.waypoints.len();
    let mut caps = Vec::with_capacity(n);
    for w in &traj.waypoints {
        let cell = tgrid.cell_at_world(w.pos()).ok_or(Error::WaypointBlocked)?;
        if cell.class == CellClass::Blocked {
            return Err(Error::WaypointBlocked);
        }
        caps.push(cell.required_height.unwrap_or(profile.h_max));
    }
    let mut h = caps.clone();
    for i in 1..n {
        let d = geom::dist2(traj.waypoints[i - 1].pos(), traj.waypoints[i].pos());
        h[i] = h[i].min(h[i - 1] + max_slope * d);
    }
    for i in (0..n - 1).rev() {
        let d = geom::dist2(traj.waypoints[i].pos(), traj.waypoints[i + 1].pos());
        h[i] = h[i].min(h[i + 1] + max_slope * d);
    }
    let mut out = traj.clone();
    for (w, hi) in out.waypoints.iter_mut().zip(h) {
        w.body_height = hi.clamp(profile.h_min, profile.h_max);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Path metrics
// ---------------------------------------------------------------------------

/// Planar length, discrete curvature, a parametric time estimate, and the
/// ducked arc-length fraction.
///
/// Curvature at an interior waypoint is its turn angle divided by the mean
/// adjacent segment length. Time = length/speed + turn_time_per_rad * total
/// turn + duck_transition_time * (number of full-height <-> ducked
/// transitions). "Ducked" means below the trajectory's own maximum body
/// height.
pub fn path_metrics(
    traj: &Trajectory,
    speed: f64,
    turn_time_per_rad: f64,
    duck_transition_time: f64,
) -> Result<PathMetrics> {
    traj.validate()?;
    let n = traj.waypoints.len();
    if n < 3 {
        return Err(Error::TooFewWaypoints(n));
    }
    if !(speed > 0.0) {
        return Err(Error::InvalidParameter("speed must be > 0".into()));
    }

    let pts: Vec<Vec2> = traj.waypoints.iter().map(|w| w.pos()).collect();
    let length: f64 = pts.windows(2).map(|w| geom::dist2(w[0], w[1])).sum();

    let mut max_curvature = 0.0f64;
    let mut total_turn = 0.0f64;
    for i in 1..n - 1 {
        let d0 = geom::sub2(pts[i], pts[i - 1]);
        let d1 = geom::sub2(pts[i + 1], pts[i]);
        let cross = d0[0] * d1[1] - d0[1] * d1[0];
        let dot = geom::dot2(d0, d1);
        let theta = cross.atan2(dot).abs();
        total_turn += theta;
        let mean_len = 0.5 * (geom::norm2(d0) + geom::norm2(d1));
        if mean_len > 0.0 {
            max_curvature = max_curvature.max(theta / mean_len);
        }
    }

    let ref_height = traj
        .waypoints
        .iter()
        .map(|w| w.body_height)
        .fold(f64::NEG_INFINITY, f64::max);
    let ducked: Vec<bool> = traj
        .waypoints
        .iter()
        .map(|w| w.body_height < ref_height - 1e-9)
        .collect();
    let transitions = ducked.windows(2).filter(|w| w[0] != w[1]).count();
    let ducked_len: f64 = pts
        .windows(2)
        .enumerate()
        .filter(|(i, _)| ducked[*i] || ducked[*i + 1])
        .map(|(_, w)| geom::dist2(w[0], w[1]))
        .sum();

    let est_time = length / speed
        + turn_time_per_rad * total_turn
        + duck_transition_time * transitions as f64;
    Ok(PathMetrics {
        length,
        max_curvature,
        est_time,
        duck_fraction: if length > 0.0 { ducked_len / length } else { 0.0 },
    })
}
