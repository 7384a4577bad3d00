//! Synthetic test scenes built from axis-aligned primitives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriMesh;

/// Declarative scene description: a list of primitives.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
}

/// Direction of travel through an arch opening.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchAxis {
    X,
    Y,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// Floor slab spanning `[0,width] x [0,depth] x [0,thickness]`.
    Floor {
        width: f64,
        depth: f64,
        #[serde(default = "default_floor_thickness")]
        thickness: f64,
    },
    /// Box given by center and full extents.
    Box { center: Vec3, extents: Vec3 },
    /// Two pillars and a lintel leaving an opening of vertical size
    /// `clearance` above the floor slab top. `span` is the clear width
    /// between pillar inner faces, `pillar_width` the width of each pillar,
    /// `depth` the extent along the travel axis.
    Arch {
        center: [f64; 2],
        axis: ArchAxis,
        span: f64,
        pillar_width: f64,
        clearance: f64,
        depth: f64,
        lintel_thickness: f64,
    },
}

fn default_floor_thickness() -> f64 {
    0.05
}

/// Watertight axis-aligned box mesh (8 vertices, 12 triangles, outward
/// normals).
pub fn axis_box(center: Vec3, extents: Vec3) -> TriMesh {
    let h = [extents[0] * 0.5, extents[1] * 0.5, extents[2] * 0.5];
    let lo = [center[0] - h[0], center[1] - h[1], center[2] - h[2]];
    let hi = [center[0] + h[0], center[1] + h[1], center[2] + h[2]];
    box_from_bounds(lo, hi)
}

/// Watertight box mesh from min/max corners.
pub fn box_from_bounds(lo: Vec3, hi: Vec3) -> TriMesh {
    let v = vec![
        [lo[0], lo[1], lo[2]], // 0
        [hi[0], lo[1], lo[2]], // 1
        [hi[0], hi[1], lo[2]], // 2
        [lo[0], hi[1], lo[2]], // 3
        [lo[0], lo[1], hi[2]], // 4
        [hi[0], lo[1], hi[2]], // 5
        [hi[0], hi[1], hi[2]], // 6
        [lo[0], hi[1], hi[2]], // 7
    ];
    // CCW winding seen from outside each face.
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2], // bottom (-z)
        [4, 5, 6],
        [4, 6, 7], // top (+z)
        [0, 1, 5],
        [0, 5, 4], // -y
        [2, 3, 7],
        [2, 7, 6], // +y
        [0, 4, 7],
        [0, 7, 3], // -x
        [1, 2, 6],
        [1, 6, 5], // +x
    ];
    TriMesh { vertices: v, faces }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidSpec(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

/// Generate the triangle mesh for a scene spec.
///
/// The floor slab top defines z=thickness; arch clearances are measured
/// from it (or from z=0 when the scene has no floor).
pub fn gen_scene(spec: &SceneSpec) -> Result<TriMesh> {
    if spec.primitives.is_empty() {
        return Err(Error::EmptyMesh);
    }

    let mut floor_top = 0.0f64;
    for p in &spec.primitives {
        if let Primitive::Floor { thickness, .. } = p {
            require_positive("floor thickness", *thickness)?;
            floor_top = floor_top.max(*thickness);
        }
    }

    let mut mesh = TriMesh {
        vertices: Vec::new(),
        faces: Vec::new(),
    };
    for p in &spec.primitives {
        match p {
            Primitive::Floor {
                width,
                depth,
                thickness,
            } => {
                require_positive("floor width", *width)?;
                require_positive("floor depth", *depth)?;
                mesh.append(&box_from_bounds([0.0, 0.0, 0.0], [*width, *depth, *thickness]));
            }
            Primitive::Box { center, extents } => {
                for (i, name) in ["extent x", "extent y", "extent z"].iter().enumerate() {
                    require_positive(name, extents[i])?;
                }
                mesh.append(&axis_box(*center, *extents));
            }
            Primitive::Arch {
                center,
                axis,
                span,
                pillar_width,
                clearance,
                depth,
                lintel_thickness,
            } => {
                require_positive("arch span", *span)?;
                require_positive("arch pillar_width", *pillar_width)?;
                require_positive("arch clearance", *clearance)?;
                require_positive("arch depth", *depth)?;
                require_positive("arch lintel_thickness", *lintel_thickness)?;
                let total_height = clearance + lintel_thickness;
                if *clearance >= total_height {
                    return Err(Error::InvalidSpec(
                        "arch clearance must be less than its total height".into(),
                    ));
                }
                // Local frame: u = travel axis, v = span axis.
                let (cu, cv) = match axis {
                    ArchAxis::X => (center[0], center[1]),
                    ArchAxis::Y => (center[1], center[0]),
                };
                let u0 = cu - depth * 0.5;
                let u1 = cu + depth * 0.5;
                let inner0 = cv - span * 0.5;
                let inner1 = cv + span * 0.5;
                let outer0 = inner0 - pillar_width;
                let outer1 = inner1 + pillar_width;
                let z0 = floor_top;
                let z1 = floor_top + clearance;
                let z2 = z1 + lintel_thickness;
                let to_world = |u_lo: f64, u_hi: f64, v_lo: f64, v_hi: f64, zl: f64, zh: f64| {
                    match axis {
                        ArchAxis::X => box_from_bounds([u_lo, v_lo, zl], [u_hi, v_hi, zh]),
                        ArchAxis::Y => box_from_bounds([v_lo, u_lo, zl], [v_hi, u_hi, zh]),
                    }
                };
                mesh.append(&to_world(u0, u1, outer0, inner0, z0, z1));
                mesh.append(&to_world(u0, u1, inner1, outer1, z0, z1));
                mesh.append(&to_world(u0, u1, outer0, outer1, z1, z2));
            }
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{self, Vec3};

    #[test]
    fn box_aabb_is_analytic() {
        let spec = SceneSpec {
            primitives: vec![Primitive::Box {
                center: [1.0, 1.0, 0.1],
                extents: [0.4, 0.4, 0.2],
            }],
        };
        let mesh = gen_scene(&spec).unwrap();
        let bb = mesh.aabb().unwrap();
        let expect_min = [0.8, 0.8, 0.0];
        let expect_max = [1.2, 1.2, 0.2];
        for a in 0..3 {
            assert!((bb.min[a] - expect_min[a]).abs() < 1e-12);
            assert!((bb.max[a] - expect_max[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_primitive_list_is_error() {
        let spec = SceneSpec { primitives: vec![] };
        assert!(matches!(gen_scene(&spec), Err(Error::EmptyMesh)));
    }

    #[test]
    fn nonpositive_dimension_is_invalid() {
        let spec = SceneSpec {
            primitives: vec![Primitive::Box {
                center: [0.0; 3],
                extents: [1.0, -1.0, 1.0],
            }],
        };
        assert!(matches!(gen_scene(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn floor_plus_arch_footprint() {
        let spec = SceneSpec {
            primitives: vec![
                Primitive::Floor {
                    width: 5.0,
                    depth: 5.0,
                    thickness: 0.05,
                },
                Primitive::Arch {
                    center: [2.5, 2.5],
                    axis: ArchAxis::X,
                    span: 0.8,
                    pillar_width: 0.2,
                    clearance: 0.25,
                    depth: 0.3,
                    lintel_thickness: 0.1,
                },
            ],
        };
        let mesh = gen_scene(&spec).unwrap();
        let bb = mesh.aabb().unwrap();
        assert!((bb.max[0] - bb.min[0] - 5.0).abs() < 1e-12);
        assert!((bb.max[1] - bb.min[1] - 5.0).abs() < 1e-12);
    }

    /// Intersections of a vertical ray with the mesh, as sorted z values.
    fn vertical_ray_hits(mesh: &TriMesh, x: f64, y: f64) -> Vec<f64> {
        let mut hits = Vec::new();
        for i in 0..mesh.faces.len() {
            let (a, b, c) = mesh.face_vertices(i);
            // Solve a + s(b-a) + t(c-a) = (x, y, z) in the xy plane.
            let e1 = [b[0] - a[0], b[1] - a[1]];
            let e2 = [c[0] - a[0], c[1] - a[1]];
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            if det.abs() < 1e-15 {
                continue; // vertical face: parallel to the ray
            }
            let rx = x - a[0];
            let ry = y - a[1];
            let s = (rx * e2[1] - ry * e2[0]) / det;
            let t = (e1[0] * ry - e1[1] * rx) / det;
            if s >= -1e-12 && t >= -1e-12 && s + t <= 1.0 + 1e-12 {
                hits.push(a[2] + s * (b[2] - a[2]) + t * (c[2] - a[2]));
            }
        }
        hits.sort_by(f64::total_cmp);
        hits
    }

    #[test]
    fn arch_opening_clearance_ray_property() {
        // A vertical ray through the opening center must hit the floor top
        // and the lintel bottom exactly `clearance` apart.
        let clearance = 0.25;
        let spec = SceneSpec {
            primitives: vec![
                Primitive::Floor {
                    width: 5.0,
                    depth: 5.0,
                    thickness: 0.05,
                },
                Primitive::Arch {
                    center: [2.5, 2.5],
                    axis: ArchAxis::X,
                    span: 0.8,
                    pillar_width: 0.2,
                    clearance,
                    depth: 0.3,
                    lintel_thickness: 0.1,
                },
            ],
        };
        let mesh = gen_scene(&spec).unwrap();
        let mut hits = vertical_ray_hits(&mesh, 2.5, 2.5);
        // the ray crosses shared triangle edges; collapse duplicate planes
        hits.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        // floor bottom, floor top, lintel bottom, lintel top
        assert_eq!(hits.len(), 4);
        let floor_top = hits[1];
        let lintel_bottom = hits[2];
        assert!((lintel_bottom - floor_top - clearance).abs() < 1e-9);
    }

    #[test]
    fn outward_normals() {
        let mesh = axis_box([0.0; 3], [2.0, 2.0, 2.0]);
        for i in 0..mesh.faces.len() {
            let (a, b, c) = mesh.face_vertices(i);
            let n = geom::triangle_normal(a, b, c).unwrap();
            let centroid: Vec3 = [
                (a[0] + b[0] + c[0]) / 3.0,
                (a[1] + b[1] + c[1]) / 3.0,
                (a[2] + b[2] + c[2]) / 3.0,
            ];
            // outward: normal points away from the box center (origin)
            assert!(geom::dot3(n, centroid) > 0.0, "face {i} normal is inward");
        }
    }
}
