//! Point clouds: surface sampling and ASCII PLY I/O.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::mesh::{self, TriMesh};

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Parse {
                line: 0,
                reason: "point cloud contains non-finite coordinates".into(),
            });
        }
        Ok(PointCloud { points })
    }

    pub fn translated(&self, d: Vec3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|&p| geom::add3(p, d)).collect(),
        }
    }

    /// Write as ASCII PLY with double-precision vertex properties.
    pub fn save_ply(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(self.points.len() * 32 + 128);
        writeln!(out, "ply")?;
        writeln!(out, "format ascii 1.0")?;
        writeln!(out, "element vertex {}", self.points.len())?;
        writeln!(out, "property double x")?;
        writeln!(out, "property double y")?;
        writeln!(out, "property double z")?;
        writeln!(out, "end_header")?;
        for p in &self.points {
            writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Load an ASCII PLY point cloud (faces, if present, are ignored).
    pub fn load_ply(path: &Path) -> Result<Self> {
        let text = mesh::read_text(path)?;
        if !mesh::looks_like_ply(&text) {
            return Err(Error::Parse {
                line: 1,
                reason: "not a PLY file".into(),
            });
        }
        let (vertices, _faces) = mesh::parse_ply(&text)?;
        PointCloud::new(vertices)
    }
}

/// Area-weighted uniform surface sampling; `round(total_area * density)`
/// points, deterministic for a fixed seed.
pub fn sample_surface(mesh: &TriMesh, density: f64, seed: u64) -> Result<PointCloud> {
    if !(density > 0.0) || !density.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "density must be > 0, got {density}"
        )));
    }
    if mesh.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0f64;
    for i in 0..mesh.faces.len() {
        let (a, b, c) = mesh.face_vertices(i);
        total += geom::triangle_area(a, b, c);
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::EmptyMesh);
    }
    let count = (total * density).round() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let r = rng.random::<f64>() * total;
        let fi = cumulative.partition_point(|&acc| acc < r).min(mesh.faces.len() - 1);
        let (a, b, c) = mesh.face_vertices(fi);
        let mut u = rng.random::<f64>();
        let mut v = rng.random::<f64>();
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let p = geom::add3(
            a,
            geom::add3(
                geom::scale3(geom::sub3(b, a), u),
                geom::scale3(geom::sub3(c, a), v),
            ),
        );
        points.push(p);
    }
    Ok(PointCloud { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_sampling_count_and_planarity() {
        // right triangle with legs 1, area 0.5; density 100 -> 50 points
        let mesh = TriMesh::new(
            vec![[0.0, 0.0, 0.3], [1.0, 0.0, 0.3], [0.0, 1.0, 0.3]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let cloud = sample_surface(&mesh, 100.0, 42).unwrap();
        assert_eq!(cloud.points.len(), 50);
        for p in &cloud.points {
            assert!((p[2] - 0.3).abs() < 1e-9, "point off the triangle plane");
            assert!(p[0] >= -1e-12 && p[1] >= -1e-12 && p[0] + p[1] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn same_seed_identical_clouds() {
        let mesh = crate::scenegen::axis_box([0.0; 3], [1.0, 2.0, 0.5]);
        let a = sample_surface(&mesh, 200.0, 9).unwrap();
        let b = sample_surface(&mesh, 200.0, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_surface(&mesh, 200.0, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unit_cube_samples_on_surface() {
        // area 6 m^2 at density 1000 -> 6000 points, each on the mesh
        // (brute-force point-to-triangle distance < 1e-9).
        let mesh = crate::scenegen::axis_box([0.5; 3], [1.0; 3]);
        let cloud = sample_surface(&mesh, 1000.0, 5).unwrap();
        assert_eq!(cloud.points.len(), 6000);
        for &p in &cloud.points {
            let d = (0..mesh.faces.len())
                .map(|i| {
                    let (a, b, c) = mesh.face_vertices(i);
                    geom::point_triangle_distance(p, a, b, c)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-9, "sample {p:?} is {d} m off the surface");
        }
    }

    #[test]
    fn ply_roundtrip() {
        let cloud = PointCloud::new(vec![[0.0, 1.0, 2.0], [0.25, -1.5, 3.125]]).unwrap();
        let path = std::env::temp_dir().join(format!(
            "hatnav-cloud-test-{}-{:?}.ply",
            std::process::id(),
            std::thread::current().id()
        ));
        cloud.save_ply(&path).unwrap();
        let back = PointCloud::load_ply(&path).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(cloud, back);
    }

    #[test]
    fn empty_mesh_rejected() {
        let mesh = TriMesh {
            vertices: vec![],
            faces: vec![],
        };
        assert!(matches!(
            sample_surface(&mesh, 10.0, 0),
            Err(Error::EmptyMesh)
        ));
    }
}
