//! Reconstruction quality metrics: object extraction, bounding-box IoU,
//! precision/recall/F-score via greedy matching, and nearest-neighbor SDF
//! RMSE against a ground-truth cloud.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::Aabb3;
use crate::voxel::VoxelGrid;

/// A connected component of occupied voxels above the floor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectInfo {
    pub id: usize,
    pub aabb: Aabb3,
    /// Member voxel coordinates.
    pub voxels: Vec<[usize; 3]>,
}

impl ObjectInfo {
    pub fn voxel_count(&self) -> usize {
        self.voxels.len()
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ObjectSet {
    pub objects: Vec<ObjectInfo>,
}

/// Extract 26-connected components of occupied voxels whose centers lie
/// strictly above `floor_z + resolution/2`; components smaller than
/// `min_voxels` are discarded. AABBs span the member voxel extents.
pub fn extract_objects(grid: &VoxelGrid, floor_z: f64, min_voxels: usize) -> Result<ObjectSet> {
    if grid.occupied_count() == 0 {
        return Err(Error::EmptyGrid);
    }
    let [nx, ny, nz] = grid.dims;
    let res = grid.resolution;
    let threshold = floor_z + res * 0.5 + 1e-9;
    let qualifies = |c: [usize; 3]| {
        grid.get(c[0], c[1], c[2]) && grid.cell_center(c)[2] > threshold
    };

    let mut visited = vec![false; grid.occupancy.len()];
    let mut objects = Vec::new();
    let mut stack: Vec<[usize; 3]> = Vec::new();
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let seed = [ix, iy, iz];
                let si = grid.index(ix, iy, iz);
                if visited[si] || !qualifies(seed) {
                    continue;
                }
                visited[si] = true;
                stack.push(seed);
                let mut members = Vec::new();
                while let Some(c) = stack.pop() {
                    members.push(c);
                    for dz in -1i64..=1 {
                        for dy in -1i64..=1 {
                            for dx in -1i64..=1 {
                                if dx == 0 && dy == 0 && dz == 0 {
                                    continue;
                                }
                                let (jx, jy, jz) =
                                    (c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz);
                                if jx < 0
                                    || jy < 0
                                    || jz < 0
                                    || jx >= nx as i64
                                    || jy >= ny as i64
                                    || jz >= nz as i64
                                {
                                    continue;
                                }
                                let n = [jx as usize, jy as usize, jz as usize];
                                let ni = grid.index(n[0], n[1], n[2]);
                                if !visited[ni] && qualifies(n) {
                                    visited[ni] = true;
                                    stack.push(n);
                                }
                            }
                        }
                    }
                }
                if members.len() < min_voxels {
                    continue;
                }
                let mut aabb = Aabb3::new(grid.cell_min(members[0]), grid.cell_min(members[0]));
                for &m in &members {
                    let lo = grid.cell_min(m);
                    for a in 0..3 {
                        aabb.min[a] = aabb.min[a].min(lo[a]);
                        aabb.max[a] = aabb.max[a].max(lo[a] + res);
                    }
                }
                members.sort_unstable();
                objects.push(ObjectInfo {
                    id: objects.len(),
                    aabb,
                    voxels: members,
                });
            }
        }
    }
    Ok(ObjectSet { objects })
}

/// Intersection-over-union of two axis-aligned boxes.
pub fn bbox_iou(a: &Aabb3, b: &Aabb3) -> f64 {
    let inter = a.intersection_volume(b);
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    inter / union
}

/// Greedy one-to-one matching in descending IoU order. Pairs at or above
/// the threshold are true positives; unmatched predictions are false
/// positives, unmatched ground truths false negatives.
pub fn match_objects(
    pred: &ObjectSet,
    gt: &ObjectSet,
    iou_threshold: f64,
) -> (usize, usize, usize, Vec<(usize, usize, f64)>) {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for p in &pred.objects {
        for g in &gt.objects {
            let iou = bbox_iou(&p.aabb, &g.aabb);
            if iou >= iou_threshold {
                pairs.push((p.id, g.id, iou));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
    });
    let mut pred_used = vec![false; pred.objects.len()];
    let mut gt_used = vec![false; gt.objects.len()];
    let mut matches = Vec::new();
    for (pi, gi, iou) in pairs {
        if !pred_used[pi] && !gt_used[gi] {
            pred_used[pi] = true;
            gt_used[gi] = true;
            matches.push((pi, gi, iou));
        }
    }
    matches.sort_by_key(|m| m.0);
    let tp = matches.len();
    let fp = pred.objects.len() - tp;
    let fn_ = gt.objects.len() - tp;
    (tp, fp, fn_, matches)
}

/// Voxel-level volumetric IoU of two objects extracted on the same grid
/// frame.
pub fn voxel_iou(a: &ObjectInfo, b: &ObjectInfo) -> f64 {
    let set: std::collections::HashSet<[usize; 3]> = a.voxels.iter().copied().collect();
    let inter = b.voxels.iter().filter(|v| set.contains(*v)).count();
    let union = a.voxels.len() + b.voxels.len() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

/// Precision, recall and F-score with the 0/0 -> 0 convention.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let r = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// Exact nearest-neighbor distances from each reconstructed point to the
/// ground-truth cloud via spatial grid hashing; returns the RMSE.
/// (Unsigned nearest-point distance stands in for the SDF magnitude; a
/// LiDAR-style ground truth carries no inside/outside.)
pub fn sdf_rmse(recon: &PointCloud, gt: &PointCloud) -> Result<f64> {
    if recon.points.is_empty() || gt.points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let nn = NearestNeighborGrid::build(&gt.points);
    let mut sum_sq = 0.0;
    for &p in &recon.points {
        let d = nn.nearest_distance(p);
        sum_sq += d * d;
    }
    Ok((sum_sq / recon.points.len() as f64).sqrt())
}

/// Uniform spatial hash over points supporting exact nearest-neighbor
/// queries by expanding Chebyshev rings until the bound certifies the
/// current best.
pub struct NearestNeighborGrid {
    cell: f64,
    map: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<[f64; 3]>,
    key_min: (i64, i64, i64),
    key_max: (i64, i64, i64),
}

impl NearestNeighborGrid {
    pub fn build(points: &[[f64; 3]]) -> Self {
        let bb = Aabb3::from_points(points.iter().copied())
            .unwrap_or(Aabb3::new([0.0; 3], [1.0; 3]));
        let diag = crate::geom::norm3(bb.extents());
        let n = points.len().max(1) as f64;
        let cell = (diag / n.cbrt()).max(1e-6);
        let key = |p: [f64; 3]| {
            (
                (p[0] / cell).floor() as i64,
                (p[1] / cell).floor() as i64,
                (p[2] / cell).floor() as i64,
            )
        };
        let mut map: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        let mut key_min = (i64::MAX, i64::MAX, i64::MAX);
        let mut key_max = (i64::MIN, i64::MIN, i64::MIN);
        for (i, &p) in points.iter().enumerate() {
            let k = key(p);
            key_min = (key_min.0.min(k.0), key_min.1.min(k.1), key_min.2.min(k.2));
            key_max = (key_max.0.max(k.0), key_max.1.max(k.1), key_max.2.max(k.2));
            map.entry(k).or_default().push(i);
        }
        NearestNeighborGrid {
            cell,
            map,
            points: points.to_vec(),
            key_min,
            key_max,
        }
    }

    pub fn nearest_distance(&self, p: [f64; 3]) -> f64 {
        let base = (
            (p[0] / self.cell).floor() as i64,
            (p[1] / self.cell).floor() as i64,
            (p[2] / self.cell).floor() as i64,
        );
        let max_ring = {
            // enough rings to reach every populated cell from the query
            let dx = (base.0 - self.key_min.0).abs().max((base.0 - self.key_max.0).abs());
            let dy = (base.1 - self.key_min.1).abs().max((base.1 - self.key_max.1).abs());
            let dz = (base.2 - self.key_min.2).abs().max((base.2 - self.key_max.2).abs());
            dx.max(dy).max(dz) + 1
        };
        let mut best = f64::INFINITY;
        for r in 0..=max_ring {
            // any point in a cell at Chebyshev ring r is at least (r-1)*cell away
            if best.is_finite() && (r - 1) as f64 * self.cell > best {
                break;
            }
            for dz in -r..=r {
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        let k = (base.0 + dx, base.1 + dy, base.2 + dz);
                        if let Some(idxs) = self.map.get(&k) {
                            for &i in idxs {
                                let q = self.points[i];
                                let d = crate::geom::dist3(p, q);
                                if d < best {
                                    best = d;
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// Table-style evaluation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub time_sec: f64,
    pub rmse_sdf_m: f64,
    /// Mean bounding-box IoU over matched objects, percent.
    pub iou_pct: f64,
    /// Pooled IoU (sum of intersections over sum of unions), percent.
    pub iou_pooled_pct: f64,
    /// Mean voxel-level volumetric IoU over matched objects, percent;
    /// present only when requested.
    pub iou_voxel_pct: Option<f64>,
    pub per_object_iou: Vec<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvalSettings {
    pub iou_threshold: f64,
    /// Surface sampling density (points per square meter) used when the
    /// prediction is a mesh.
    pub surface_density: f64,
    pub min_object_voxels: usize,
    /// Also report voxel-level volumetric IoU (bounding-box IoU remains the
    /// matching criterion).
    #[serde(default)]
    pub volumetric_iou: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            iou_threshold: 0.5,
            surface_density: 4000.0,
            min_object_voxels: 5,
            volumetric_iou: false,
        }
    }
}

/// Mark the voxels containing each point of a cloud, on the same bounds and
/// resolution as `template`. Points outside the bounds are skipped.
pub fn voxelize_cloud(cloud: &PointCloud, template: &VoxelGrid) -> Result<VoxelGrid> {
    let mut grid = VoxelGrid::new(template.origin, template.resolution, template.dims)?;
    for &p in &cloud.points {
        if let Some(c) = grid.world_to_cell(p) {
            grid.set(c[0], c[1], c[2], true);
        }
    }
    Ok(grid)
}

/// Full evaluation of a predicted grid + surface cloud against a
/// ground-truth cloud. Objects on the GT side come from voxelizing the GT
/// cloud onto the prediction's grid. `time_sec` is left at zero for the
/// caller to fill.
pub fn evaluate(
    pred_grid: &VoxelGrid,
    pred_cloud: &PointCloud,
    gt_cloud: &PointCloud,
    floor_z: f64,
    settings: &EvalSettings,
) -> Result<EvalReport> {
    if !(settings.iou_threshold > 0.0 && settings.iou_threshold < 1.0) {
        return Err(Error::InvalidParameter(
            "iou_threshold must be in (0,1)".into(),
        ));
    }
    let pred_objects = extract_objects(pred_grid, floor_z, settings.min_object_voxels)
        .unwrap_or_default();
    let gt_grid = voxelize_cloud(gt_cloud, pred_grid)?;
    let gt_objects = extract_objects(&gt_grid, floor_z, settings.min_object_voxels)
        .unwrap_or_default();

    let (tp, fp, fn_, matches) = match_objects(&pred_objects, &gt_objects, settings.iou_threshold);
    let (precision, recall, f_score) = prf(tp, fp, fn_);

    let per_object_iou: Vec<f64> = matches.iter().map(|m| m.2).collect();
    let iou_mean = if per_object_iou.is_empty() {
        0.0
    } else {
        per_object_iou.iter().sum::<f64>() / per_object_iou.len() as f64
    };
    let mut inter_sum = 0.0;
    let mut union_sum = 0.0;
    for &(pi, gi, _) in &matches {
        let a = &pred_objects.objects[pi].aabb;
        let b = &gt_objects.objects[gi].aabb;
        let inter = a.intersection_volume(b);
        inter_sum += inter;
        union_sum += a.volume() + b.volume() - inter;
    }
    let iou_pooled = if union_sum > 0.0 {
        inter_sum / union_sum
    } else {
        0.0
    };
    let iou_voxel_pct = if settings.volumetric_iou && !matches.is_empty() {
        let sum: f64 = matches
            .iter()
            .map(|&(pi, gi, _)| {
                voxel_iou(&pred_objects.objects[pi], &gt_objects.objects[gi])
            })
            .sum();
        Some(sum / matches.len() as f64 * 100.0)
    } else {
        None
    };

    let rmse = sdf_rmse(pred_cloud, gt_cloud)?;
    Ok(EvalReport {
        precision,
        recall,
        f_score,
        time_sec: 0.0,
        rmse_sdf_m: rmse,
        iou_pct: iou_mean * 100.0,
        iou_pooled_pct: iou_pooled * 100.0,
        iou_voxel_pct,
        per_object_iou,
        tp,
        fp,
        fn_,
    })
}
