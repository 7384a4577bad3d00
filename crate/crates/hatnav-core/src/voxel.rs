//! Dense boolean voxel grids and surface voxelization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Aabb3, Vec3};
use crate::mesh::TriMesh;

/// Axis-aligned occupancy volume. Voxel `(ix,iy,iz)` spans
/// `origin + [ix,iy,iz]*res .. origin + [ix+1,iy+1,iz+1]*res`; the flat
/// index is `(iz*ny + iy)*nx + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub origin: Vec3,
    pub resolution: f64,
    pub dims: [usize; 3],
    pub occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn new(origin: Vec3, resolution: f64, dims: [usize; 3]) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidResolution(resolution));
        }
        let len = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or(Error::DegenerateBounds)?;
        if len == 0 {
            return Err(Error::DegenerateBounds);
        }
        Ok(VoxelGrid {
            origin,
            resolution,
            dims,
            occupancy: vec![false; len],
        })
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.dims[1] + iy) * self.dims[0] + ix
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.occupancy[self.index(ix, iy, iz)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, iz: usize, v: bool) {
        let i = self.index(ix, iy, iz);
        self.occupancy[i] = v;
    }

    /// Cell coordinates of a world point, if inside the grid.
    pub fn world_to_cell(&self, p: Vec3) -> Option<[usize; 3]> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let i = geom::cell_index(p[a], self.origin[a], self.resolution);
            if i < 0 || i as usize >= self.dims[a] {
                return None;
            }
            c[a] = i as usize;
        }
        Some(c)
    }

    pub fn cell_min(&self, c: [usize; 3]) -> Vec3 {
        [
            self.origin[0] + c[0] as f64 * self.resolution,
            self.origin[1] + c[1] as f64 * self.resolution,
            self.origin[2] + c[2] as f64 * self.resolution,
        ]
    }

    pub fn cell_center(&self, c: [usize; 3]) -> Vec3 {
        [
            self.origin[0] + (c[0] as f64 + 0.5) * self.resolution,
            self.origin[1] + (c[1] as f64 + 0.5) * self.resolution,
            self.origin[2] + (c[2] as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    pub fn bounds(&self) -> Aabb3 {
        Aabb3::new(
            self.origin,
            [
                self.origin[0] + self.dims[0] as f64 * self.resolution,
                self.origin[1] + self.dims[1] as f64 * self.resolution,
                self.origin[2] + self.dims[2] as f64 * self.resolution,
            ],
        )
    }

    /// Iterator over occupied cell coordinates in flat-index order.
    pub fn iter_occupied(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, _] = self.dims;
        self.occupancy.iter().enumerate().filter_map(move |(i, &b)| {
            if b {
                let ix = i % nx;
                let iy = (i / nx) % ny;
                let iz = i / (nx * ny);
                Some([ix, iy, iz])
            } else {
                None
            }
        })
    }
}

/// Offset, in meters, by which surface samples are nudged toward the solid
/// side (against the triangle normal) before voxel assignment. Resolves
/// faces lying exactly on voxel boundaries toward the material they bound.
const SOLID_NUDGE: f64 = 1e-7;

/// Relative shrink of each sample toward its triangle's centroid. Resolves
/// edge samples lying exactly on voxel boundaries into the face's own
/// cells rather than the neighbors.
const EDGE_SHRINK: f64 = 1e-5;

/// Surface-voxelize a mesh: every triangle is sampled on a lattice of
/// spacing at most `resolution/2` (vertices included) and each sample marks
/// the voxel on its solid side. Grid bounds default to the mesh AABB padded
/// by one voxel.
pub fn voxelize(mesh: &TriMesh, resolution: f64, bounds: Option<Aabb3>) -> Result<VoxelGrid> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidResolution(resolution));
    }
    if mesh.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let aabb = mesh.aabb().ok_or(Error::EmptyMesh)?;
    let bounds = match bounds {
        Some(b) => {
            if b.is_degenerate() {
                return Err(Error::DegenerateBounds);
            }
            b
        }
        None => aabb.pad(resolution),
    };
    let mut dims = [0usize; 3];
    for a in 0..3 {
        let n = ((bounds.max[a] - bounds.min[a]) / resolution - geom::CELL_SNAP).ceil();
        dims[a] = (n as usize).max(1);
    }
    let mut grid = VoxelGrid::new(bounds.min, resolution, dims)?;

    let spacing = resolution * 0.5;
    for fi in 0..mesh.faces.len() {
        let (a, b, c) = mesh.face_vertices(fi);
        let normal = geom::triangle_normal(a, b, c);
        let nudge = match normal {
            Some(n) => geom::scale3(n, SOLID_NUDGE),
            None => [0.0; 3],
        };
        let longest = geom::dist3(a, b)
            .max(geom::dist3(b, c))
            .max(geom::dist3(a, c));
        let n = ((longest / spacing).ceil() as usize).max(1);
        let ab = geom::sub3(b, a);
        let ac = geom::sub3(c, a);
        let centroid = [
            (a[0] + b[0] + c[0]) / 3.0,
            (a[1] + b[1] + c[1]) / 3.0,
            (a[2] + b[2] + c[2]) / 3.0,
        ];
        for i in 0..=n {
            for j in 0..=(n - i) {
                // exact vertices at lattice corners
                let p = if i == 0 && j == 0 {
                    a
                } else if i == n {
                    b
                } else if j == n {
                    c
                } else {
                    let fi = i as f64 / n as f64;
                    let fj = j as f64 / n as f64;
                    geom::add3(a, geom::add3(geom::scale3(ab, fi), geom::scale3(ac, fj)))
                };
                let q = geom::sub3(
                    geom::add3(p, geom::scale3(geom::sub3(centroid, p), EDGE_SHRINK)),
                    nudge,
                );
                if let Some(cell) = grid.world_to_cell(q) {
                    grid.set(cell[0], cell[1], cell[2], true);
                }
            }
        }
    }
    Ok(grid)
}

/// Run-length encode a boolean sequence as alternating run lengths,
/// starting with the length of the leading `false` run (possibly 0).
pub fn encode_rle(occ: &[bool]) -> Vec<u64> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut count: u64 = 0;
    for &b in occ {
        if b == current {
            count += 1;
        } else {
            runs.push(count);
            current = b;
            count = 1;
        }
    }
    runs.push(count);
    if occ.is_empty() {
        runs.clear();
    }
    runs
}

/// Inverse of [`encode_rle`]; validates the total length.
pub fn decode_rle(runs: &[u64], len: usize) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(len);
    let mut value = false;
    for &r in runs {
        for _ in 0..r {
            out.push(value);
        }
        value = !value;
    }
    if out.len() != len {
        return Err(Error::Parse {
            line: 0,
            reason: format!("RLE decodes to {} cells, expected {len}", out.len()),
        });
    }
    Ok(out)
}

/// Serialized form of [`VoxelGrid`].
#[derive(Serialize, Deserialize)]
pub struct VoxelGridFile {
    pub origin: Vec3,
    pub resolution: f64,
    pub dims: [usize; 3],
    pub occupancy_rle: Vec<u64>,
}

impl VoxelGrid {
    pub fn to_file(&self) -> VoxelGridFile {
        VoxelGridFile {
            origin: self.origin,
            resolution: self.resolution,
            dims: self.dims,
            occupancy_rle: encode_rle(&self.occupancy),
        }
    }

    pub fn from_file(f: VoxelGridFile) -> Result<Self> {
        let mut grid = VoxelGrid::new(f.origin, f.resolution, f.dims)?;
        grid.occupancy = decode_rle(&f.occupancy_rle, grid.occupancy.len())?;
        Ok(grid)
    }
}
