//! Wavefront OBJ subset: `v`, `vn` and triangular `f` records.
//!
//! Coordinates are written in shortest round-trip form, so reading back a
//! written mesh reproduces every coordinate exactly. Texture coordinates,
//! groups, objects, smoothing and material statements are skipped on read.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::WallError;
use crate::geom::Vec3;
use crate::mesh::TriangleMesh;
use crate::scalar::Real;

pub fn write_obj<T: Real>(mesh: &TriangleMesh<T>, out: &mut impl Write) -> io::Result<()> {
    out.write_all(obj_string(mesh).as_bytes())
}

pub fn obj_string<T: Real>(mesh: &TriangleMesh<T>) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 40 + mesh.triangles.len() * 24);
    let _ = writeln!(s, "# brickscan mesh: {} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    if let Some(normals) = &mesh.normals {
        for n in normals {
            let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
        }
        for t in &mesh.triangles {
            let (a, b, c) = (t[0] + 1, t[1] + 1, t[2] + 1);
            let _ = writeln!(s, "f {a}//{a} {b}//{b} {c}//{c}");
        }
    } else {
        for t in &mesh.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
    }
    s
}

/// Parses the OBJ subset.
///
/// Normals are kept only when there is exactly one `vn` per `v`; face normal
/// references are otherwise ignored. Negative (relative) indices are accepted.
pub fn read_obj<T: Real>(bytes: &[u8]) -> Result<TriangleMesh<T>, WallError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| WallError::ObjSyntax { line: 0, message: format!("not UTF-8: {e}") })?;
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut normals: Vec<Vec3<T>> = Vec::new();
    let mut faces: Vec<(usize, [i64; 3])> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(keyword) = parts.next() else { continue };
        match keyword {
            "v" | "vn" => {
                let coords: Vec<&str> = parts.collect();
                // `v` may carry an optional w (or vertex colors); use the first three.
                if coords.len() < 3 || (keyword == "vn" && coords.len() != 3) {
                    return Err(WallError::ObjSyntax {
                        line: line_no,
                        message: format!("{keyword} needs 3 coordinates"),
                    });
                }
                let mut xyz = [T::zero(); 3];
                for (slot, tok) in xyz.iter_mut().zip(&coords) {
                    *slot = tok.parse::<T>().map_err(|_| WallError::ObjSyntax {
                        line: line_no,
                        message: format!("bad number {tok:?}"),
                    })?;
                    if !slot.is_finite() {
                        return Err(WallError::ObjSyntax {
                            line: line_no,
                            message: format!("non-finite number {tok:?}"),
                        });
                    }
                }
                let v = Vec3::from(xyz);
                if keyword == "v" {
                    vertices.push(v);
                } else {
                    normals.push(v);
                }
            }
            "f" => {
                let refs: Vec<&str> = parts.collect();
                if refs.len() != 3 {
                    if refs.len() < 3 {
                        return Err(WallError::ObjSyntax {
                            line: line_no,
                            message: format!("face with {} vertices", refs.len()),
                        });
                    }
                    return Err(WallError::ObjFace { line: line_no, vertices: refs.len() });
                }
                let mut idx = [0i64; 3];
                for (slot, r) in idx.iter_mut().zip(&refs) {
                    let first = r.split('/').next().unwrap_or("");
                    *slot = first.parse::<i64>().map_err(|_| WallError::ObjSyntax {
                        line: line_no,
                        message: format!("bad face index {r:?}"),
                    })?;
                }
                // Relative indices refer to vertices read so far.
                for slot in &mut idx {
                    if *slot < 0 {
                        *slot += vertices.len() as i64 + 1;
                    }
                }
                faces.push((line_no, idx));
            }
            "vt" | "vp" | "o" | "g" | "s" | "mtllib" | "usemtl" | "l" => {}
            other => {
                return Err(WallError::ObjSyntax {
                    line: line_no,
                    message: format!("unsupported statement {other:?}"),
                })
            }
        }
    }

    let count = vertices.len() as i64;
    let mut triangles = Vec::with_capacity(faces.len());
    for (line, idx) in faces {
        let mut tri = [0u32; 3];
        for (slot, &i) in tri.iter_mut().zip(&idx) {
            if i < 1 || i > count {
                return Err(WallError::ObjIndex { line, index: i });
            }
            *slot = (i - 1) as u32;
        }
        triangles.push(tri);
    }

    let normals = (!normals.is_empty() && normals.len() == vertices.len()).then_some(normals);
    Ok(TriangleMesh { vertices, normals, triangles })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_triangle() -> TriangleMesh<f64> {
        TriangleMesh::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.5, 0.0, -2.25), Vec3::new(0.1, 0.7, 1e-7)],
            vec![[0, 1, 2]],
        )
    }

    #[test]
    fn single_triangle_round_trip() {
        let m = one_triangle();
        let text = obj_string(&m);
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 1);
        let back: TriangleMesh<f64> = read_obj(text.as_bytes()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn normals_round_trip() {
        let mut m = one_triangle();
        m.normals = Some(vec![Vec3::unit_z(); 3]);
        let back: TriangleMesh<f64> = read_obj(obj_string(&m).as_bytes()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn quads_and_bad_indices_are_rejected() {
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert_eq!(read_obj::<f64>(quad.as_bytes()).unwrap_err(), WallError::ObjFace { line: 5, vertices: 4 });
        let oob = "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 7\n";
        assert_eq!(read_obj::<f64>(oob.as_bytes()).unwrap_err(), WallError::ObjIndex { line: 4, index: 7 });
        let junk = "v 0 zero 0\n";
        assert!(matches!(read_obj::<f64>(junk.as_bytes()), Err(WallError::ObjSyntax { line: 1, .. })));
        let unknown = "vx 1 2 3\n";
        assert!(matches!(read_obj::<f64>(unknown.as_bytes()), Err(WallError::ObjSyntax { .. })));
    }

    #[test]
    fn slash_forms_and_relative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1/1 -1//1\n";
        let m: TriangleMesh<f64> = read_obj(text.as_bytes()).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }
}
