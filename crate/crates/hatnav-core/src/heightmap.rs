//! Floor estimation and per-column passability analysis: the 2.5D
//! height-segmented traversability grid.
//!
//! Each vertical voxel column is reduced to a walkable support height, the
//! free clearance above it, and a class: `Free` (pass at full body height),
//! `Duck` (pass at a reduced body height), or `Blocked`.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geom::{self, Aabb2, Vec2};
use crate::voxel::VoxelGrid;

/// Comparison slack for threshold tests against geometry-derived values.
const TOL: f64 = 1e-9;

/// Quadruped geometric capability envelope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotProfile {
    /// Maximum body height (m).
    pub h_max: f64,
    /// Minimum (fully ducked) body height (m).
    pub h_min: f64,
    /// Maximum step-over height (m).
    pub step_max: f64,
    /// Half-width of the body footprint (m).
    pub footprint_radius: f64,
    /// Vertical clearance margin subtracted before classification (m).
    pub safety_margin: f64,
}

impl RobotProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_min > 0.0 && self.h_min <= self.h_max) {
            return Err(Error::InvalidProfile(format!(
                "need 0 < h_min <= h_max, got h_min={} h_max={}",
                self.h_min, self.h_max
            )));
        }
        if !(self.step_max >= 0.0 && self.step_max < self.h_min) {
            return Err(Error::InvalidProfile(format!(
                "need 0 <= step_max < h_min, got step_max={} h_min={}",
                self.step_max, self.h_min
            )));
        }
        if !(self.footprint_radius > 0.0) {
            return Err(Error::InvalidProfile("footprint_radius must be > 0".into()));
        }
        if !(self.safety_margin >= 0.0) {
            return Err(Error::InvalidProfile("safety_margin must be >= 0".into()));
        }
        Ok(())
    }
}

impl Default for RobotProfile {
    fn default() -> Self {
        RobotProfile {
            h_max: 0.30,
            h_min: 0.15,
            step_max: 0.08,
            footprint_radius: 0.15,
            safety_margin: 0.02,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellClass {
    Free,
    Duck,
    Blocked,
}

impl CellClass {
    pub fn code(self) -> u8 {
        match self {
            CellClass::Free => 0,
            CellClass::Duck => 1,
            CellClass::Blocked => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<CellClass> {
        match c {
            0 => Some(CellClass::Free),
            1 => Some(CellClass::Duck),
            2 => Some(CellClass::Blocked),
            _ => None,
        }
    }
}

/// Passability semantics for planning and field labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    /// Height-adaptive: FREE and DUCK cells are passable.
    Hat,
    /// 2D baseline: only FREE cells are passable; DUCK counts as an obstacle.
    Flat2d,
}

impl PlanMode {
    pub fn passable(self, class: CellClass) -> bool {
        match self {
            PlanMode::Hat => class != CellClass::Blocked,
            PlanMode::Flat2d => class == CellClass::Free,
        }
    }
}

impl std::str::FromStr for PlanMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hat" => Ok(PlanMode::Hat),
            "flat2d" => Ok(PlanMode::Flat2d),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode {other:?}; expected hat or flat2d"
            ))),
        }
    }
}

/// Per-cell analysis result. `clearance` is `None` when unbounded;
/// `required_height` is `None` for blocked cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellAnalysis {
    pub support_height: f64,
    pub clearance: Option<f64>,
    pub class: CellClass,
    pub required_height: Option<f64>,
}

// Serialized as a compact tuple: [class_code, support, clearance, required].
impl Serialize for CellAnalysis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (
            self.class.code(),
            self.support_height,
            self.clearance,
            self.required_height,
        )
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CellAnalysis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (code, support_height, clearance, required_height): (
            u8,
            f64,
            Option<f64>,
            Option<f64>,
        ) = Deserialize::deserialize(d)?;
        let class = CellClass::from_code(code)
            .ok_or_else(|| D::Error::custom(format!("bad class code {code}")))?;
        Ok(CellAnalysis {
            support_height,
            clearance,
            class,
            required_height,
        })
    }
}

/// 2D grid of per-cell analyses at the source voxel resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraversabilityGrid {
    pub origin: Vec2,
    pub resolution: f64,
    pub dims: [usize; 2],
    pub floor_z: f64,
    pub cells: Vec<CellAnalysis>,
}

impl TraversabilityGrid {
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.dims[0] + ix
    }

    pub fn cell(&self, ix: usize, iy: usize) -> &CellAnalysis {
        &self.cells[self.index(ix, iy)]
    }

    pub fn world_to_cell(&self, p: Vec2) -> Option<[usize; 2]> {
        let ix = geom::cell_index(p[0], self.origin[0], self.resolution);
        let iy = geom::cell_index(p[1], self.origin[1], self.resolution);
        if ix < 0 || iy < 0 || ix as usize >= self.dims[0] || iy as usize >= self.dims[1] {
            return None;
        }
        Some([ix as usize, iy as usize])
    }

    pub fn cell_center(&self, c: [usize; 2]) -> Vec2 {
        [
            self.origin[0] + (c[0] as f64 + 0.5) * self.resolution,
            self.origin[1] + (c[1] as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn cell_at_world(&self, p: Vec2) -> Option<&CellAnalysis> {
        self.world_to_cell(p).map(|c| self.cell(c[0], c[1]))
    }

    pub fn world_rect(&self) -> Aabb2 {
        Aabb2::new(
            self.origin,
            [
                self.origin[0] + self.dims[0] as f64 * self.resolution,
                self.origin[1] + self.dims[1] as f64 * self.resolution,
            ],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.len() != self.dims[0] * self.dims[1] {
            return Err(Error::InvalidParameter(
                "cell count does not match dims".into(),
            ));
        }
        if !self.floor_z.is_finite() {
            return Err(Error::InvalidParameter("floor_z must be finite".into()));
        }
        Ok(())
    }
}

/// Estimate the floor height: per column, take the z-center of its lowest
/// occupied voxel; return the mode over columns (histogram at voxel
/// resolution, ties toward the lower value).
pub fn estimate_floor(grid: &VoxelGrid) -> Result<f64> {
    let [nx, ny, nz] = grid.dims;
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for iy in 0..ny {
        for ix in 0..nx {
            for iz in 0..nz {
                if grid.get(ix, iy, iz) {
                    *histogram.entry(iz).or_insert(0) += 1;
                    break;
                }
            }
        }
    }
    if histogram.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best_layer = 0usize;
    let mut best_count = 0usize;
    for (&layer, &count) in &histogram {
        // ascending keys: strict > keeps ties on the lower layer
        if count > best_count {
            best_count = count;
            best_layer = layer;
        }
    }
    Ok(grid.origin[2] + (best_layer as f64 + 0.5) * grid.resolution)
}

/// Classify one vertical column given its occupancy and z-centers.
///
/// The support run is the maximal contiguous occupied run whose bottom lies
/// within `[floor_z - res, floor_z + step_max]` (highest-top candidate when
/// several qualify). Clearance is measured from the support top to the next
/// occupied voxel above it.
pub fn analyze_column(
    z_centers: &[f64],
    occupied: &[bool],
    resolution: f64,
    floor_z: f64,
    profile: &RobotProfile,
) -> Result<CellAnalysis> {
    profile.validate()?;
    if z_centers.len() != occupied.len() {
        return Err(Error::NonUniformSpacing);
    }
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidResolution(resolution));
    }
    for w in z_centers.windows(2) {
        if ((w[1] - w[0]) - resolution).abs() > TOL {
            return Err(Error::NonUniformSpacing);
        }
    }
    let z0 = z_centers.first().copied().unwrap_or(floor_z);
    Ok(analyze_column_raw(occupied, z0, resolution, floor_z, profile))
}

/// Core column classifier used by [`segment`]; `z0_center` is the z-center
/// of the first entry in `occupied`.
pub(crate) fn analyze_column_raw(
    occupied: &[bool],
    z0_center: f64,
    res: f64,
    floor_z: f64,
    profile: &RobotProfile,
) -> CellAnalysis {
    // maximal contiguous occupied runs as (first, last) indices
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &occ) in occupied.iter().enumerate() {
        match (occ, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, occupied.len() - 1));
    }

    let bottom_of = |i: usize| z0_center + i as f64 * res - res * 0.5;
    let top_of = |i: usize| z0_center + i as f64 * res + res * 0.5;

    // support run: bottom within the step window, highest top wins
    let lo = floor_z - res - TOL;
    let hi = floor_z + profile.step_max + TOL;
    let support_run = runs
        .iter()
        .filter(|&&(s, _)| {
            let b = bottom_of(s);
            b >= lo && b <= hi
        })
        .max_by(|a, b| a.1.cmp(&b.1))
        .copied();

    let support_top = match support_run {
        Some((_, e)) => top_of(e),
        None => floor_z,
    };
    let support_height = (support_top - floor_z).max(0.0);

    // clearance: lowest occupied voxel with center strictly above the support top
    let clearance = occupied
        .iter()
        .enumerate()
        .filter(|&(i, &occ)| occ && z0_center + i as f64 * res > support_top)
        .map(|(i, _)| bottom_of(i) - support_top)
        .next();

    if support_height > profile.step_max + TOL {
        return CellAnalysis {
            support_height,
            clearance,
            class: CellClass::Blocked,
            required_height: None,
        };
    }

    match clearance {
        None => CellAnalysis {
            support_height,
            clearance: None,
            class: CellClass::Free,
            required_height: Some(profile.h_max),
        },
        Some(c) => {
            let usable = c - profile.safety_margin;
            if usable >= profile.h_max - TOL {
                CellAnalysis {
                    support_height,
                    clearance: Some(c),
                    class: CellClass::Free,
                    required_height: Some(profile.h_max),
                }
            } else if usable >= profile.h_min - TOL {
                CellAnalysis {
                    support_height,
                    clearance: Some(c),
                    class: CellClass::Duck,
                    required_height: Some(usable.max(profile.h_min)),
                }
            } else {
                CellAnalysis {
                    support_height,
                    clearance: Some(c),
                    class: CellClass::Blocked,
                    required_height: None,
                }
            }
        }
    }
}

/// Build the traversability grid: estimate the floor, then classify every
/// (x, y) column. Columns are independent; the result is deterministic.
pub fn segment(grid: &VoxelGrid, profile: &RobotProfile) -> Result<TraversabilityGrid> {
    profile.validate()?;
    let floor_z = estimate_floor(grid)?;
    let [nx, ny, nz] = grid.dims;
    let z0_center = grid.origin[2] + 0.5 * grid.resolution;
    let mut cells = Vec::with_capacity(nx * ny);
    let mut column = vec![false; nz];
    for iy in 0..ny {
        for ix in 0..nx {
            for iz in 0..nz {
                column[iz] = grid.get(ix, iy, iz);
            }
            cells.push(analyze_column_raw(
                &column,
                z0_center,
                grid.resolution,
                floor_z,
                profile,
            ));
        }
    }
    Ok(TraversabilityGrid {
        origin: [grid.origin[0], grid.origin[1]],
        resolution: grid.resolution,
        dims: [nx, ny],
        floor_z,
        cells,
    })
}

/// Dilate obstacle classes by a Chebyshev disc of `radius` meters:
/// BLOCKED expands over everything, DUCK expands over FREE cells, and
/// every resulting DUCK cell takes the minimum required height over
/// contributing DUCK cells within the window. Radius 0 is the identity.
pub fn inflate(tgrid: &TraversabilityGrid, radius: f64) -> Result<TraversabilityGrid> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "inflation radius must be >= 0, got {radius}"
        )));
    }
    let r = ((radius / tgrid.resolution) - TOL).ceil().max(0.0) as i64;
    if r == 0 {
        return Ok(tgrid.clone());
    }
    let [nx, ny] = tgrid.dims;
    let mut out = tgrid.clone();
    for iy in 0..ny as i64 {
        for ix in 0..nx as i64 {
            let mut blocked = false;
            let mut duck_req: Option<f64> = None;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (jx, jy) = (ix + dx, iy + dy);
                    if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                        continue;
                    }
                    let src = tgrid.cell(jx as usize, jy as usize);
                    match src.class {
                        CellClass::Blocked => blocked = true,
                        CellClass::Duck => {
                            let req = src.required_height.unwrap_or(f64::INFINITY);
                            duck_req = Some(duck_req.map_or(req, |d: f64| d.min(req)));
                        }
                        CellClass::Free => {}
                    }
                }
                if blocked {
                    break;
                }
            }
            let idx = tgrid.index(ix as usize, iy as usize);
            let cell = &mut out.cells[idx];
            if blocked {
                cell.class = CellClass::Blocked;
                cell.required_height = None;
            } else if let Some(req) = duck_req {
                cell.class = CellClass::Duck;
                cell.required_height = Some(req);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegen::{gen_scene, Primitive, SceneSpec};
    use crate::voxel::voxelize;

    fn profile() -> RobotProfile {
        RobotProfile::default()
    }

    #[test]
    fn profile_invariants() {
        assert!(profile().validate().is_ok());
        let mut p = profile();
        p.h_min = 0.0;
        assert!(p.validate().is_err());
        let mut p = profile();
        p.step_max = p.h_min;
        assert!(p.validate().is_err());
        let mut p = profile();
        p.h_min = p.h_max + 0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn floor_of_flat_slab() {
        // slab occupying z in [0, 0.05] voxelizes into the layer whose
        // center is 0.025
        let spec = SceneSpec {
            primitives: vec![Primitive::Floor {
                width: 1.0,
                depth: 1.0,
                thickness: 0.05,
            }],
        };
        let mesh = gen_scene(&spec).unwrap();
        let grid = voxelize(&mesh, 0.05, None).unwrap();
        let floor = estimate_floor(&grid).unwrap();
        assert!((floor - 0.025).abs() < 1e-9, "floor_z = {floor}");
    }

    #[test]
    fn floor_with_minority_table() {
        // most columns see the slab first, so the slab layer wins the mode
        let spec = SceneSpec {
            primitives: vec![
                Primitive::Floor {
                    width: 2.0,
                    depth: 2.0,
                    thickness: 0.05,
                },
                // floating tabletop over ~16% of the floor
                Primitive::Box {
                    center: [1.0, 1.0, 0.325],
                    extents: [0.8, 0.8, 0.05],
                },
            ],
        };
        let mesh = gen_scene(&spec).unwrap();
        let grid = voxelize(&mesh, 0.05, None).unwrap();

        // brute-force column count: slab-first columns must be the majority
        let [nx, ny, nz] = grid.dims;
        let mut slab_first = 0usize;
        let mut total = 0usize;
        for iy in 0..ny {
            for ix in 0..nx {
                for iz in 0..nz {
                    if grid.get(ix, iy, iz) {
                        total += 1;
                        if iz == 1 {
                            slab_first += 1;
                        }
                        break;
                    }
                }
            }
        }
        assert!(slab_first * 2 > total);
        let floor = estimate_floor(&grid).unwrap();
        assert!((floor - 0.025).abs() < 1e-9);
    }

    #[test]
    fn empty_grid_is_error() {
        let grid = VoxelGrid::new([0.0; 3], 0.1, [4, 4, 4]).unwrap();
        assert!(matches!(estimate_floor(&grid), Err(Error::EmptyGrid)));
        assert!(matches!(
            segment(&grid, &profile()),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn empty_column_is_free() {
        let z: Vec<f64> = (0..10).map(|i| 0.025 + 0.05 * i as f64).collect();
        let occ = vec![false; 10];
        let cell = analyze_column(&z, &occ, 0.05, 0.0, &profile()).unwrap();
        assert_eq!(cell.class, CellClass::Free);
        assert_eq!(cell.support_height, 0.0);
        assert_eq!(cell.clearance, None);
        assert_eq!(cell.required_height, Some(0.30));
    }

    #[test]
    fn overhang_duck_example() {
        // overhang occupying z in [0.20, 0.40] above floor_z = 0:
        // clearance 0.20, duck at required height 0.18
        let z: Vec<f64> = (0..12).map(|i| 0.025 + 0.05 * i as f64).collect();
        let occ: Vec<bool> = z
            .iter()
            .map(|&zc| zc > 0.20 && zc < 0.40)
            .collect();
        let cell = analyze_column(&z, &occ, 0.05, 0.0, &profile()).unwrap();
        assert_eq!(cell.class, CellClass::Duck);
        assert!((cell.clearance.unwrap() - 0.20).abs() < 1e-9);
        assert!((cell.required_height.unwrap() - 0.18).abs() < 1e-9);
    }

    #[test]
    fn solid_wall_is_blocked() {
        let z: Vec<f64> = (0..10).map(|i| 0.025 + 0.05 * i as f64).collect();
        let occ: Vec<bool> = z.iter().map(|&zc| zc < 0.5).collect();
        let cell = analyze_column(&z, &occ, 0.05, 0.0, &profile()).unwrap();
        assert_eq!(cell.class, CellClass::Blocked);
        assert!(cell.support_height > profile().step_max);
        assert_eq!(cell.required_height, None);
    }

    #[test]
    fn non_uniform_spacing_rejected() {
        let z = vec![0.0, 0.05, 0.11];
        let occ = vec![false, true, false];
        assert!(matches!(
            analyze_column(&z, &occ, 0.05, 0.0, &profile()),
            Err(Error::NonUniformSpacing)
        ));
    }

    #[test]
    fn degenerate_duck_interval_yields_no_duck() {
        // h_min == h_max: the DUCK interval is empty everywhere
        let mut p = profile();
        p.h_min = p.h_max;
        let z: Vec<f64> = (0..12).map(|i| 0.025 + 0.05 * i as f64).collect();
        for lintel_gap in [0.10, 0.20, 0.30, 0.40] {
            let occ: Vec<bool> = z
                .iter()
                .map(|&zc| zc > lintel_gap && zc < lintel_gap + 0.1)
                .collect();
            let cell = analyze_column(&z, &occ, 0.05, 0.0, &p).unwrap();
            assert_ne!(cell.class, CellClass::Duck, "gap {lintel_gap}");
        }
    }

    #[test]
    fn standalone_low_box_is_steppable() {
        // box of height 0.06 < step_max 0.08 defining its own floor:
        // footprint cells are FREE via support (step-over)
        let spec = SceneSpec {
            primitives: vec![Primitive::Box {
                center: [0.5, 0.5, 0.03],
                extents: [0.6, 0.6, 0.06],
            }],
        };
        let mesh = gen_scene(&spec).unwrap();
        let grid = voxelize(&mesh, 0.05, None).unwrap();
        let tg = segment(&grid, &profile()).unwrap();
        let cell = tg.cell_at_world([0.5, 0.5]).unwrap();
        assert_eq!(cell.class, CellClass::Free);
        assert!(cell.support_height > 0.0);
        assert!(cell.support_height <= profile().step_max + 1e-9);
    }

    #[test]
    fn arch_scene_segments_into_three_classes() {
        let spec = SceneSpec {
            primitives: vec![
                Primitive::Floor {
                    width: 2.0,
                    depth: 2.0,
                    thickness: 0.05,
                },
                Primitive::Arch {
                    center: [1.0, 1.0],
                    axis: crate::scenegen::ArchAxis::X,
                    span: 0.6,
                    pillar_width: 0.2,
                    clearance: 0.25,
                    depth: 0.3,
                    lintel_thickness: 0.1,
                },
            ],
        };
        let mesh = gen_scene(&spec).unwrap();
        let grid = voxelize(&mesh, 0.05, None).unwrap();
        let tg = segment(&grid, &profile()).unwrap();

        // under the lintel center: DUCK at required height 0.23
        let duck = tg.cell_at_world([1.0, 1.0]).unwrap();
        assert_eq!(duck.class, CellClass::Duck);
        assert!((duck.required_height.unwrap() - 0.23).abs() < 1e-9);
        assert!((duck.clearance.unwrap() - 0.25).abs() < 1e-9);

        // inside a pillar: BLOCKED
        let pillar = tg.cell_at_world([1.0, 1.0 - 0.3 - 0.1]).unwrap();
        assert_eq!(pillar.class, CellClass::Blocked);

        // far corner: FREE
        let free = tg.cell_at_world([0.2, 0.2]).unwrap();
        assert_eq!(free.class, CellClass::Free);
        assert_eq!(free.required_height, Some(0.30));
    }

    #[test]
    fn duck_bound_invariant_on_arch_grid() {
        let spec = SceneSpec {
            primitives: vec![
                Primitive::Floor {
                    width: 2.0,
                    depth: 2.0,
                    thickness: 0.05,
                },
                Primitive::Arch {
                    center: [1.0, 1.0],
                    axis: crate::scenegen::ArchAxis::Y,
                    span: 0.6,
                    pillar_width: 0.2,
                    clearance: 0.25,
                    depth: 0.3,
                    lintel_thickness: 0.1,
                },
            ],
        };
        let p = profile();
        let mesh = gen_scene(&spec).unwrap();
        let grid = voxelize(&mesh, 0.05, None).unwrap();
        let tg = segment(&grid, &p).unwrap();
        let mut duck_cells = 0;
        for cell in &tg.cells {
            if cell.class == CellClass::Duck {
                duck_cells += 1;
                let req = cell.required_height.unwrap();
                assert!(req >= p.h_min - 1e-9);
                assert!(req < p.h_max);
                assert!(req + p.safety_margin <= cell.clearance.unwrap() + 1e-9);
            }
        }
        assert!(duck_cells > 0);
    }

    #[test]
    fn profile_monotonicity() {
        // raising h_min never converts BLOCKED -> DUCK/FREE; lowering
        // step_max never converts BLOCKED -> FREE
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(21);
        let z: Vec<f64> = (0..14).map(|i| 0.025 + 0.05 * i as f64).collect();
        for _ in 0..500 {
            let occ: Vec<bool> = (0..14).map(|_| rng.random::<f64>() < 0.3).collect();
            let base = profile();
            let a = analyze_column(&z, &occ, 0.05, 0.0, &base).unwrap();

            let mut higher_hmin = base;
            higher_hmin.h_min = (base.h_min + 0.05).min(base.h_max);
            higher_hmin.step_max = higher_hmin.step_max.min(higher_hmin.h_min - 1e-6);
            let b = analyze_column(&z, &occ, 0.05, 0.0, &higher_hmin).unwrap();
            if a.class == CellClass::Blocked {
                assert_eq!(b.class, CellClass::Blocked);
            }

            let mut lower_step = base;
            lower_step.step_max = base.step_max * 0.5;
            let c = analyze_column(&z, &occ, 0.05, 0.0, &lower_step).unwrap();
            if a.class == CellClass::Blocked {
                assert_ne!(c.class, CellClass::Free);
            }
        }
    }

    #[test]
    fn inflate_radius_zero_is_identity() {
        let spec = SceneSpec {
            primitives: vec![
                Primitive::Floor {
                    width: 1.0,
                    depth: 1.0,
                    thickness: 0.05,
                },
                Primitive::Box {
                    center: [0.5, 0.5, 0.3],
                    extents: [0.1, 0.1, 0.5],
                },
            ],
        };
        let mesh = gen_scene(&spec).unwrap();
        let grid = voxelize(&mesh, 0.05, None).unwrap();
        let tg = segment(&grid, &profile()).unwrap();
        let out = inflate(&tg, 0.0).unwrap();
        assert_eq!(tg, out);
    }

    #[test]
    fn inflate_single_blocked_cell_one_ring() {
        let mut tg = TraversabilityGrid {
            origin: [0.0, 0.0],
            resolution: 0.05,
            dims: [7, 7],
            floor_z: 0.0,
            cells: vec![
                CellAnalysis {
                    support_height: 0.0,
                    clearance: None,
                    class: CellClass::Free,
                    required_height: Some(0.3),
                };
                49
            ],
        };
        let mid = tg.index(3, 3);
        tg.cells[mid] = CellAnalysis {
            support_height: 0.5,
            clearance: None,
            class: CellClass::Blocked,
            required_height: None,
        };
        // radius of exactly one cell -> 3x3 Chebyshev block
        let out = inflate(&tg, 0.05).unwrap();
        let mut blocked = 0;
        for iy in 0..7 {
            for ix in 0..7 {
                let is_blocked = out.cell(ix, iy).class == CellClass::Blocked;
                let in_block = (2..=4).contains(&ix) && (2..=4).contains(&iy);
                assert_eq!(is_blocked, in_block, "cell ({ix},{iy})");
                blocked += is_blocked as usize;
            }
        }
        assert_eq!(blocked, 9);
    }

    #[test]
    fn inflate_widens_duck_band_and_keeps_blocked() {
        let spec = SceneSpec {
            primitives: vec![
                Primitive::Floor {
                    width: 2.0,
                    depth: 2.0,
                    thickness: 0.05,
                },
                Primitive::Arch {
                    center: [1.0, 1.0],
                    axis: crate::scenegen::ArchAxis::X,
                    span: 0.6,
                    pillar_width: 0.2,
                    clearance: 0.25,
                    depth: 0.3,
                    lintel_thickness: 0.1,
                },
            ],
        };
        let mesh = gen_scene(&spec).unwrap();
        let grid = voxelize(&mesh, 0.05, None).unwrap();
        let tg = segment(&grid, &profile()).unwrap();
        let radius = 0.15;
        let out = inflate(&tg, radius).unwrap();
        let r_cells = 3usize; // ceil(0.15/0.05)

        // brute-force dilation oracle over every cell
        let [nx, ny] = tg.dims;
        for iy in 0..ny {
            for ix in 0..nx {
                let mut expect_blocked = false;
                let mut expect_req: Option<f64> = None;
                for dy in -(r_cells as i64)..=(r_cells as i64) {
                    for dx in -(r_cells as i64)..=(r_cells as i64) {
                        let jx = ix as i64 + dx;
                        let jy = iy as i64 + dy;
                        if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                            continue;
                        }
                        let src = tg.cell(jx as usize, jy as usize);
                        match src.class {
                            CellClass::Blocked => expect_blocked = true,
                            CellClass::Duck => {
                                let req = src.required_height.unwrap();
                                expect_req =
                                    Some(expect_req.map_or(req, |v: f64| v.min(req)));
                            }
                            CellClass::Free => {}
                        }
                    }
                }
                let got = out.cell(ix, iy);
                if expect_blocked {
                    assert_eq!(got.class, CellClass::Blocked);
                } else if let Some(req) = expect_req {
                    assert_eq!(got.class, CellClass::Duck);
                    assert!((got.required_height.unwrap() - req).abs() < 1e-12);
                } else {
                    assert_eq!(got.class, CellClass::Free);
                }
            }
        }

        // original blocked cells never downgraded
        for iy in 0..ny {
            for ix in 0..nx {
                if tg.cell(ix, iy).class == CellClass::Blocked {
                    assert_eq!(out.cell(ix, iy).class, CellClass::Blocked);
                }
            }
        }
    }

    #[test]
    fn floor_stability_under_sparse_obstacles() {
        // obstacles over < 25% of columns do not move the floor estimate
        let base = SceneSpec {
            primitives: vec![Primitive::Floor {
                width: 2.0,
                depth: 2.0,
                thickness: 0.05,
            }],
        };
        let mesh = gen_scene(&base).unwrap();
        let grid = voxelize(&mesh, 0.05, None).unwrap();
        let floor_before = estimate_floor(&grid).unwrap();

        let with_obstacles = SceneSpec {
            primitives: vec![
                Primitive::Floor {
                    width: 2.0,
                    depth: 2.0,
                    thickness: 0.05,
                },
                Primitive::Box {
                    center: [0.4, 0.4, 0.55],
                    extents: [0.5, 0.5, 1.0],
                },
                Primitive::Box {
                    center: [1.5, 1.5, 0.55],
                    extents: [0.6, 0.6, 1.0],
                },
            ],
        };
        let mesh2 = gen_scene(&with_obstacles).unwrap();
        let grid2 = voxelize(&mesh2, 0.05, Some(grid.bounds())).unwrap();
        let floor_after = estimate_floor(&grid2).unwrap();
        assert!((floor_before - floor_after).abs() < 1e-12);
    }

    #[test]
    fn cell_analysis_tuple_serde() {
        let cell = CellAnalysis {
            support_height: 0.025,
            clearance: Some(0.25),
            class: CellClass::Duck,
            required_height: Some(0.23),
        };
        let s = serde_json::to_string(&cell).unwrap();
        assert_eq!(s, "[1,0.025,0.25,0.23]");
        let back: CellAnalysis = serde_json::from_str(&s).unwrap();
        assert_eq!(cell, back);
    }
}
