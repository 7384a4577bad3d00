//! Triangle meshes and ASCII OBJ/PLY loading.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{self, Aabb3, Vec3};

/// Indexed triangle mesh. Every face references three distinct in-range
/// vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Build a mesh, validating the face invariants.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) {
                return Err(Error::Parse {
                    line: 0,
                    reason: format!("face {i} references vertex index out of range"),
                });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Parse {
                    line: 0,
                    reason: format!("face {i} references the same vertex twice"),
                });
            }
        }
        Ok(TriMesh { vertices, faces })
    }

    pub fn face_vertices(&self, i: usize) -> (Vec3, Vec3, Vec3) {
        let [a, b, c] = self.faces[i];
        (self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn aabb(&self) -> Option<Aabb3> {
        Aabb3::from_points(self.vertices.iter().copied())
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len())
            .map(|i| {
                let (a, b, c) = self.face_vertices(i);
                geom::triangle_area(a, b, c)
            })
            .sum()
    }

    /// Concatenate another mesh into this one.
    pub fn append(&mut self, other: &TriMesh) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
    }

    /// Write as ASCII OBJ.
    pub fn save_obj(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(self.vertices.len() * 32);
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for f in &self.faces {
            writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// Load an ASCII OBJ or PLY triangle mesh. Unknown records are ignored;
/// polygonal faces are fan-triangulated.
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let text = read_text(path)?;
    let (vertices, faces) = if looks_like_ply(&text) {
        parse_ply(&text)?
    } else {
        parse_obj(&text)?
    };
    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    TriMesh::new(vertices, faces)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let bytes = fs::read(path)?;
    String::from_utf8(bytes).map_err(|_| Error::Parse {
        line: 0,
        reason: "file is not ASCII/UTF-8 text (binary formats are unsupported)".into(),
    })
}

pub(crate) fn looks_like_ply(text: &str) -> bool {
    text.lines().next().map(|l| l.trim() == "ply").unwrap_or(false)
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("expected a number, got {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            reason: format!("non-finite coordinate {tok:?}"),
        });
    }
    Ok(v)
}

fn parse_obj(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let mut coords = [0.0; 3];
                for c in &mut coords {
                    let tok = toks.next().ok_or(Error::Parse {
                        line: line_no,
                        reason: "vertex record needs 3 coordinates".into(),
                    })?;
                    *c = parse_f64(tok, line_no)?;
                }
                vertices.push(coords);
            }
            Some("f") => {
                let mut idxs: Vec<usize> = Vec::new();
                for tok in toks {
                    // `f v`, `f v/vt`, `f v/vt/vn`, `f v//vn`
                    let first = tok.split('/').next().unwrap_or("");
                    let raw_idx: i64 = first.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        reason: format!("bad face index {tok:?}"),
                    })?;
                    if raw_idx <= 0 {
                        return Err(Error::Parse {
                            line: line_no,
                            reason: format!("face index {raw_idx} is not a positive 1-based index"),
                        });
                    }
                    let zero = (raw_idx - 1) as usize;
                    if zero >= vertices.len() {
                        return Err(Error::Parse {
                            line: line_no,
                            reason: format!(
                                "face index {raw_idx} out of range ({} vertices)",
                                vertices.len()
                            ),
                        });
                    }
                    idxs.push(zero);
                }
                if idxs.len() < 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: "face record needs at least 3 indices".into(),
                    });
                }
                for k in 1..idxs.len() - 1 {
                    let tri = [idxs[0], idxs[k], idxs[k + 1]];
                    if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                        return Err(Error::Parse {
                            line: line_no,
                            reason: "face references the same vertex twice".into(),
                        });
                    }
                    faces.push(tri);
                }
            }
            _ => {} // ignore normals, texture coords, groups, materials, ...
        }
    }
    Ok((vertices, faces))
}

/// Parse ASCII PLY with `vertex` (x/y/z properties) and optional `face`
/// elements. Returns vertices and fan-triangulated faces; faces may be empty
/// (point-cloud PLY).
pub(crate) fn parse_ply(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    struct ElementDecl {
        name: String,
        count: usize,
        // scalar property names in declaration order; list properties are
        // recorded as "<list>".
        props: Vec<String>,
    }

    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "empty file".into(),
    })?;
    if first.trim() != "ply" {
        return Err(Error::Parse {
            line: 1,
            reason: "missing ply magic".into(),
        });
    }

    let mut elements: Vec<ElementDecl> = Vec::new();
    let mut saw_format = false;
    let mut body_start = 0usize;
    for (idx, raw) in &mut lines {
        let line_no = idx + 1;
        let line = raw.trim();
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("format") => {
                let kind = toks.next().unwrap_or("");
                if kind != "ascii" {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("unsupported PLY format {kind:?}; only ascii is accepted"),
                    });
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = toks.next().unwrap_or("").to_string();
                let count: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or(Error::Parse {
                        line: line_no,
                        reason: "element record needs a count".into(),
                    })?;
                elements.push(ElementDecl {
                    name,
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let decl = elements.last_mut().ok_or(Error::Parse {
                    line: line_no,
                    reason: "property before any element".into(),
                })?;
                let ty = toks.next().unwrap_or("");
                if ty == "list" {
                    decl.props.push("<list>".into());
                } else {
                    decl.props.push(toks.next_back().unwrap_or("").to_string());
                }
            }
            Some("end_header") => {
                body_start = line_no;
                break;
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("unexpected header record {line:?}"),
                });
            }
        }
    }
    if !saw_format {
        return Err(Error::Parse {
            line: 1,
            reason: "missing format record".into(),
        });
    }
    if body_start == 0 {
        return Err(Error::Parse {
            line: 1,
            reason: "missing end_header".into(),
        });
    }

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut line_no = body_start;
    for decl in &elements {
        if decl.name == "vertex" {
            let ix = decl.props.iter().position(|p| p == "x");
            let iy = decl.props.iter().position(|p| p == "y");
            let iz = decl.props.iter().position(|p| p == "z");
            let (ix, iy, iz) = match (ix, iy, iz) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(Error::Parse {
                        line: body_start,
                        reason: "vertex element lacks x/y/z properties".into(),
                    })
                }
            };
            for _ in 0..decl.count {
                let (idx, raw) = lines.next().ok_or(Error::Parse {
                    line: line_no,
                    reason: "unexpected end of file in vertex data".into(),
                })?;
                line_no = idx + 1;
                let toks: Vec<&str> = raw.split_whitespace().collect();
                if toks.len() < decl.props.len() {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: "short vertex record".into(),
                    });
                }
                vertices.push([
                    parse_f64(toks[ix], line_no)?,
                    parse_f64(toks[iy], line_no)?,
                    parse_f64(toks[iz], line_no)?,
                ]);
            }
        } else if decl.name == "face" {
            for _ in 0..decl.count {
                let (idx, raw) = lines.next().ok_or(Error::Parse {
                    line: line_no,
                    reason: "unexpected end of file in face data".into(),
                })?;
                line_no = idx + 1;
                let toks: Vec<&str> = raw.split_whitespace().collect();
                let k: usize = toks
                    .first()
                    .and_then(|t| t.parse().ok())
                    .ok_or(Error::Parse {
                        line: line_no,
                        reason: "face record needs a vertex count".into(),
                    })?;
                if toks.len() < 1 + k || k < 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: "short face record".into(),
                    });
                }
                let mut idxs = Vec::with_capacity(k);
                for t in &toks[1..=k] {
                    let v: usize = t.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        reason: format!("bad face index {t:?}"),
                    })?;
                    if v >= vertices.len() {
                        return Err(Error::Parse {
                            line: line_no,
                            reason: format!("face index {v} out of range"),
                        });
                    }
                    idxs.push(v);
                }
                for k in 1..idxs.len() - 1 {
                    let tri = [idxs[0], idxs[k], idxs[k + 1]];
                    if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                        return Err(Error::Parse {
                            line: line_no,
                            reason: "face references the same vertex twice".into(),
                        });
                    }
                    faces.push(tri);
                }
            }
        } else {
            // skip unknown elements line by line
            for _ in 0..decl.count {
                let (idx, _) = lines.next().ok_or(Error::Parse {
                    line: line_no,
                    reason: "unexpected end of file".into(),
                })?;
                line_no = idx + 1;
            }
        }
    }
    Ok((vertices, faces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir();
        let name = format!(
            "hatnav-mesh-test-{}-{:?}.obj",
            std::process::id(),
            std::thread::current().id()
        );
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn minimal_obj() {
        let path = write_temp("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        let mesh = load_mesh(&path).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.faces.len(), 1);
        assert_eq!(mesh.faces[0], [0, 1, 2]);
    }

    #[test]
    fn obj_index_out_of_range() {
        let path = write_temp("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n");
        let err = load_mesh(&path).unwrap_err();
        fs::remove_file(&path).ok();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn obj_duplicate_vertex_in_face() {
        let path = write_temp("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\n");
        let err = load_mesh(&path).unwrap_err();
        fs::remove_file(&path).ok();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn obj_without_faces_is_empty_mesh() {
        let path = write_temp("v 0 0 0\nv 1 0 0\n");
        let err = load_mesh(&path).unwrap_err();
        fs::remove_file(&path).ok();
        assert!(matches!(err, Error::EmptyMesh));
    }

    #[test]
    fn missing_file() {
        let err = load_mesh(Path::new("/nonexistent/mesh.obj")).unwrap_err();
        assert!(matches!(err, Error::FileNotFound(_)));
    }

    #[test]
    fn unknown_records_ignored_and_quads_fanned() {
        let path = write_temp(
            "# comment\nvn 0 0 1\nvt 0 0\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\ng top\nf 1/1 2/2 3/3 4/4\n",
        );
        let mesh = load_mesh(&path).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(mesh.vertices.len(), 4);
        assert_eq!(mesh.faces.len(), 2);
    }

    #[test]
    fn unit_cube_fixture_roundtrip() {
        // hand-built unit cube: 8 vertices, 12 faces, AABB extents (1,1,1)
        let mesh = crate::scenegen::axis_box([0.5, 0.5, 0.5], [1.0, 1.0, 1.0]);
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.faces.len(), 12);
        let bb = mesh.aabb().unwrap();
        for a in 0..3 {
            assert!((bb.max[a] - bb.min[a] - 1.0).abs() < 1e-12);
        }
        let path = write_temp("");
        mesh.save_obj(&path).unwrap();
        let again = load_mesh(&path).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(again.vertices.len(), 8);
        assert_eq!(again.faces.len(), 12);
        let bb2 = again.aabb().unwrap();
        assert_eq!(bb, bb2);
    }

    #[test]
    fn ascii_ply_mesh() {
        let ply = "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let path = write_temp(ply);
        let mesh = load_mesh(&path).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn binary_ply_rejected() {
        let ply = "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n";
        let path = write_temp(ply);
        let err = load_mesh(&path).unwrap_err();
        fs::remove_file(&path).ok();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
