//! Shared test fixtures: synthetic scenes together with their exact box
//! decompositions, and a geometry-direct segmentation oracle.
//!
//! The oracle never touches the mesh sampling path: it derives per-column
//! occupancy from the scene's axis-aligned boxes by exact face/column
//! intersection (a vertical ray cannot see vertical faces, so faces are
//! intersected as rectangles), then classifies each column with an
//! independently written scan. On lattice-aligned scenes the result must
//! match `segment(voxelize(mesh))` on 100% of cells.

use hatnav_core::geom::cell_index;
use hatnav_core::heightmap::{CellClass, RobotProfile, TraversabilityGrid};
use hatnav_core::scenegen::{ArchAxis, Primitive, SceneSpec};
use hatnav_core::voxel::VoxelGrid;

pub type Box3 = ([f64; 3], [f64; 3]);

pub struct OracleScene {
    pub name: &'static str,
    pub spec: SceneSpec,
    pub boxes: Vec<Box3>,
}

fn floor_prim(width: f64, depth: f64) -> (Primitive, Box3) {
    (
        Primitive::Floor {
            width,
            depth,
            thickness: 0.05,
        },
        ([0.0, 0.0, 0.0], [width, depth, 0.05]),
    )
}

fn box_prim(lo: [f64; 3], hi: [f64; 3]) -> (Primitive, Box3) {
    (
        Primitive::Box {
            center: [
                (lo[0] + hi[0]) / 2.0,
                (lo[1] + hi[1]) / 2.0,
                (lo[2] + hi[2]) / 2.0,
            ],
            extents: [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]],
        },
        (lo, hi),
    )
}

/// Arch primitive plus its three boxes (pillars and lintel), travel along x.
fn arch_x(
    center: [f64; 2],
    span: f64,
    pillar_width: f64,
    clearance: f64,
    depth: f64,
    lintel: f64,
) -> (Primitive, Vec<Box3>) {
    let floor_top = 0.05;
    let x0 = center[0] - depth / 2.0;
    let x1 = center[0] + depth / 2.0;
    let inner0 = center[1] - span / 2.0;
    let inner1 = center[1] + span / 2.0;
    let outer0 = inner0 - pillar_width;
    let outer1 = inner1 + pillar_width;
    let z1 = floor_top + clearance;
    let z2 = z1 + lintel;
    (
        Primitive::Arch {
            center,
            axis: ArchAxis::X,
            span,
            pillar_width,
            clearance,
            depth,
            lintel_thickness: lintel,
        },
        vec![
            ([x0, outer0, floor_top], [x1, inner0, z1]),
            ([x0, inner1, floor_top], [x1, outer1, z1]),
            ([x0, outer0, z1], [x1, outer1, z2]),
        ],
    )
}

fn scene_from(name: &'static str, parts: Vec<(Primitive, Vec<Box3>)>) -> OracleScene {
    let mut primitives = Vec::new();
    let mut boxes = Vec::new();
    for (p, bs) in parts {
        primitives.push(p);
        boxes.extend(bs);
    }
    OracleScene {
        name,
        spec: SceneSpec { primitives },
        boxes,
    }
}

fn table_boxes(cx: f64, cy: f64) -> Vec<(Primitive, Vec<Box3>)> {
    // 1.0 x 0.7 top slab on four 0.1 x 0.1 legs; 0.25 m crawl clearance
    let mut parts = Vec::new();
    let (p, b) = box_prim(
        [cx - 0.5, cy - 0.35, 0.30],
        [cx + 0.5, cy + 0.35, 0.35],
    );
    parts.push((p, vec![b]));
    for (lx, ly) in [
        (cx - 0.45, cy - 0.30),
        (cx + 0.35, cy - 0.30),
        (cx - 0.45, cy + 0.20),
        (cx + 0.35, cy + 0.20),
    ] {
        let (p, b) = box_prim([lx, ly, 0.05], [lx + 0.1, ly + 0.1, 0.30]);
        parts.push((p, vec![b]));
    }
    parts
}

/// The five oracle scenes (each <= 100x100 cells at 0.05 m): arch, table,
/// low box, wall, and a combined room.
pub fn oracle_scenes() -> Vec<OracleScene> {
    let mut scenes = Vec::new();

    let (fp, fb) = floor_prim(4.8, 4.8);
    let (arch, arch_boxes) = arch_x([2.4, 2.4], 0.8, 0.2, 0.25, 0.3, 0.1);
    scenes.push(scene_from(
        "arch",
        vec![(fp, vec![fb]), (arch, arch_boxes)],
    ));

    let (fp, fb) = floor_prim(4.8, 4.8);
    let mut parts = vec![(fp, vec![fb])];
    parts.extend(
        table_boxes(2.4, 2.4)
            .into_iter()
            .map(|(p, b)| (p, b)),
    );
    scenes.push(scene_from("table", parts));

    let (fp, fb) = floor_prim(4.8, 4.8);
    let (bp, bb) = box_prim([2.1, 2.1, 0.05], [2.7, 2.7, 0.10]);
    scenes.push(scene_from(
        "low_box",
        vec![(fp, vec![fb]), (bp, vec![bb])],
    ));

    let (fp, fb) = floor_prim(4.8, 4.8);
    let (wp, wb) = box_prim([2.35, 0.8, 0.05], [2.45, 4.0, 0.45]);
    scenes.push(scene_from("wall", vec![(fp, vec![fb]), (wp, vec![wb])]));

    let (fp, fb) = floor_prim(4.8, 4.8);
    let (arch, arch_boxes) = arch_x([1.2, 1.2], 0.8, 0.2, 0.25, 0.3, 0.1);
    let mut parts = vec![(fp, vec![fb]), (arch, arch_boxes)];
    parts.extend(table_boxes(3.5, 1.0));
    let (bp, bb) = box_prim([0.7, 3.2, 0.05], [1.3, 3.8, 0.10]);
    parts.push((bp, vec![bb]));
    let (wp, wb) = box_prim([2.35, 2.4, 0.05], [2.45, 4.8, 0.45]);
    parts.push((wp, vec![wb]));
    scenes.push(scene_from("combined", parts));

    scenes
}

/// The 5x5 m serpentine benchmark room: two thin walls across the room,
/// each with a duck arch on the start-goal chord (y = 2.5) and a free gap
/// in opposite corners, forcing the 2D planner into a long detour.
pub fn benchmark_scene() -> OracleScene {
    let (fp, fb) = floor_prim(5.0, 5.0);
    let mut parts = vec![(fp, vec![fb])];
    // wall A at x = 2.0: segments below/above the opening, lintel over it
    for (lo, hi) in [
        ([1.95, 0.0, 0.05], [2.05, 2.1, 0.30]),
        ([1.95, 2.9, 0.05], [2.05, 4.5, 0.30]),
        ([1.95, 2.0, 0.30], [2.05, 3.0, 0.40]),
        // wall B at x = 3.0: free gap at the bottom corner instead
        ([2.95, 0.5, 0.05], [3.05, 2.1, 0.30]),
        ([2.95, 2.9, 0.05], [3.05, 5.0, 0.30]),
        ([2.95, 2.0, 0.30], [3.05, 3.0, 0.40]),
    ] {
        let (p, b) = box_prim(lo, hi);
        parts.push((p, vec![b]));
    }
    scene_from("benchmark_room", parts)
}

pub fn benchmark_start_goal() -> ([f64; 2], [f64; 2]) {
    ([0.5, 2.5], [4.5, 2.5])
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

const TOL: f64 = 1e-9;
/// In-plane boundary shrink used when quantizing face rectangles; larger
/// than the voxelizer's own edge shrink, smaller than half a cell.
const EDGE: f64 = 1e-4;
/// Solid-side offset for a face lying on a cell boundary.
const NUDGE: f64 = 1e-7;

/// Exact occupancy mirror of the surface voxelization of `boxes` on the
/// grid frame of `grid`.
pub fn oracle_occupancy(boxes: &[Box3], grid: &VoxelGrid) -> Vec<bool> {
    let [nx, ny, nz] = grid.dims;
    let dims = [nx as i64, ny as i64, nz as i64];
    let mut occ = vec![false; nx * ny * nz];
    let mut mark = |c: [i64; 3]| {
        if (0..3).all(|a| c[a] >= 0 && c[a] < dims[a]) {
            let idx = (c[2] as usize * ny + c[1] as usize) * nx + c[0] as usize;
            occ[idx] = true;
        }
    };
    for &(lo, hi) in boxes {
        for axis in 0..3usize {
            for (side, sign) in [(lo, -1.0), (hi, 1.0)] {
                let plane = side[axis];
                let k = cell_index(
                    plane - sign * NUDGE,
                    grid.origin[axis],
                    grid.resolution,
                );
                let others: [usize; 2] = match axis {
                    0 => [1, 2],
                    1 => [0, 2],
                    _ => [0, 1],
                };
                let r0 = cell_index(lo[others[0]] + EDGE, grid.origin[others[0]], grid.resolution)
                    ..=cell_index(hi[others[0]] - EDGE, grid.origin[others[0]], grid.resolution);
                let r1 = cell_index(lo[others[1]] + EDGE, grid.origin[others[1]], grid.resolution)
                    ..=cell_index(hi[others[1]] - EDGE, grid.origin[others[1]], grid.resolution);
                for i0 in r0.clone() {
                    for i1 in r1.clone() {
                        let mut c = [0i64; 3];
                        c[axis] = k;
                        c[others[0]] = i0;
                        c[others[1]] = i1;
                        mark(c);
                    }
                }
            }
        }
    }
    occ
}

#[derive(Debug, PartialEq, Clone, Copy)]
pub struct OracleCell {
    pub class: CellClass,
    pub support_height: f64,
    pub clearance: Option<f64>,
    pub required_height: Option<f64>,
}

/// Independent column classifier working directly on an occupancy column.
fn classify_column(
    column: &[bool],
    origin_z: f64,
    res: f64,
    floor_z: f64,
    p: &RobotProfile,
) -> OracleCell {
    let nz = column.len();
    let bottom = |i: usize| origin_z + i as f64 * res;
    let top = |i: usize| origin_z + (i + 1) as f64 * res;

    // candidate support: scan maximal runs, keep the one with the highest
    // top whose bottom is inside the step window
    let mut best_end: Option<usize> = None;
    let mut i = 0;
    while i < nz {
        if column[i] {
            let s = i;
            while i < nz && column[i] {
                i += 1;
            }
            let e = i - 1;
            let b = bottom(s);
            if b >= floor_z - res - TOL && b <= floor_z + p.step_max + TOL {
                best_end = Some(best_end.map_or(e, |prev: usize| prev.max(e)));
            }
        } else {
            i += 1;
        }
    }
    let support_top = best_end.map_or(floor_z, top);
    let support_height = (support_top - floor_z).max(0.0);

    let mut clearance = None;
    for (i, &occ) in column.iter().enumerate() {
        if occ && origin_z + (i as f64 + 0.5) * res > support_top {
            clearance = Some(bottom(i) - support_top);
            break;
        }
    }

    if support_height > p.step_max + TOL {
        return OracleCell {
            class: CellClass::Blocked,
            support_height,
            clearance,
            required_height: None,
        };
    }
    match clearance {
        None => OracleCell {
            class: CellClass::Free,
            support_height,
            clearance: None,
            required_height: Some(p.h_max),
        },
        Some(c) => {
            let usable = c - p.safety_margin;
            if usable >= p.h_max - TOL {
                OracleCell {
                    class: CellClass::Free,
                    support_height,
                    clearance,
                    required_height: Some(p.h_max),
                }
            } else if usable >= p.h_min - TOL {
                OracleCell {
                    class: CellClass::Duck,
                    support_height,
                    clearance,
                    required_height: Some(usable.max(p.h_min)),
                }
            } else {
                OracleCell {
                    class: CellClass::Blocked,
                    support_height,
                    clearance,
                    required_height: None,
                }
            }
        }
    }
}

/// Full oracle segmentation from the box decomposition.
pub fn oracle_segment(
    boxes: &[Box3],
    grid: &VoxelGrid,
    profile: &RobotProfile,
) -> (Vec<bool>, f64, Vec<OracleCell>) {
    let occ = oracle_occupancy(boxes, grid);
    let [nx, ny, nz] = grid.dims;

    // floor: histogram of per-column lowest occupied layer, ties downward
    let mut counts: std::collections::BTreeMap<usize, usize> = Default::default();
    for iy in 0..ny {
        for ix in 0..nx {
            for iz in 0..nz {
                if occ[(iz * ny + iy) * nx + ix] {
                    *counts.entry(iz).or_insert(0) += 1;
                    break;
                }
            }
        }
    }
    let (&floor_layer, _) = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .expect("oracle scene has no occupancy");
    let floor_z = grid.origin[2] + (floor_layer as f64 + 0.5) * grid.resolution;

    let mut cells = Vec::with_capacity(nx * ny);
    let mut column = vec![false; nz];
    for iy in 0..ny {
        for ix in 0..nx {
            for iz in 0..nz {
                column[iz] = occ[(iz * ny + iy) * nx + ix];
            }
            cells.push(classify_column(
                &column,
                grid.origin[2],
                grid.resolution,
                floor_z,
                profile,
            ));
        }
    }
    (occ, floor_z, cells)
}

/// Compare an implementation traversability grid against the oracle,
/// returning the number of mismatched cells (0 on success) and printing
/// the first few offenders.
pub fn count_mismatches(
    tgrid: &TraversabilityGrid,
    oracle_floor: f64,
    oracle_cells: &[OracleCell],
    scene: &str,
) -> usize {
    assert!(
        (tgrid.floor_z - oracle_floor).abs() < 1e-9,
        "{scene}: floor_z {} vs oracle {}",
        tgrid.floor_z,
        oracle_floor
    );
    let [nx, ny] = tgrid.dims;
    let mut mismatches = 0;
    for iy in 0..ny {
        for ix in 0..nx {
            let got = tgrid.cell(ix, iy);
            let want = &oracle_cells[iy * nx + ix];
            let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (None, None) => true,
                (Some(x), Some(y)) => (x - y).abs() < 1e-9,
                _ => false,
            };
            let ok = got.class == want.class
                && (got.support_height - want.support_height).abs() < 1e-9
                && close(got.clearance, want.clearance)
                && close(got.required_height, want.required_height);
            if !ok {
                if mismatches < 5 {
                    eprintln!(
                        "{scene}: cell ({ix},{iy}) impl {:?} vs oracle {:?}",
                        got, want
                    );
                }
                mismatches += 1;
            }
        }
    }
    mismatches
}
