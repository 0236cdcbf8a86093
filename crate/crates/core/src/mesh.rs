//! Indexed triangle meshes in millimeter world units.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Aabb, Vec3};
use crate::scalar::Real;

/// Smallest triangle area accepted by [`TriangleMesh::validate`], in mm².
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { triangle: usize, index: u32, count: usize },
    #[error("triangle {triangle} is degenerate (area {area:e} mm²)")]
    Degenerate { triangle: usize, area: f64 },
    #[error("normal {index} is not unit length (|n| = {length})")]
    NonUnitNormal { index: usize, length: f64 },
    #[error("expected {expected} normals, found {found}")]
    NormalCount { expected: usize, found: usize },
    #[error("vertex {index} is not finite")]
    NonFinite { index: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    /// Optional per-vertex unit normals.
    pub normals: Option<Vec<Vec3<T>>>,
    pub triangles: Vec<[u32; 3]>,
}

impl<T: Real> TriangleMesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>) -> Self {
        Self { vertices, normals: None, triangles }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Unnormalized geometric normal (twice the area vector).
    pub fn face_cross(&self, i: usize) -> Vec3<T> {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(c - a)
    }

    pub fn triangle_area(&self, i: usize) -> T {
        self.face_cross(i).length() * T::lit(0.5)
    }

    pub fn bounds(&self) -> Aabb<T> {
        Aabb::from_points(self.vertices.iter())
    }

    /// Appends `other`, re-indexing its triangles.
    pub fn append(&mut self, other: &TriangleMesh<T>) {
        let offset = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
        // Normals survive only if both sides carry them.
        self.normals = match (self.normals.take(), &other.normals) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            _ => None,
        };
    }

    pub fn translated(mut self, d: Vec3<T>) -> Self {
        for v in &mut self.vertices {
            *v += d;
        }
        self
    }

    /// Drops triangles whose area is at or below [`MIN_TRIANGLE_AREA`].
    pub fn remove_degenerate(&mut self) {
        let min = T::lit(MIN_TRIANGLE_AREA);
        let verts = &self.vertices;
        self.triangles.retain(|t| {
            let (a, b, c) = (verts[t[0] as usize], verts[t[1] as usize], verts[t[2] as usize]);
            (b - a).cross(c - a).length() * T::lit(0.5) > min
        });
    }

    /// Checks index range, triangle area and normal length invariants.
    pub fn validate(&self) -> Result<(), MeshError> {
        let n = self.vertices.len();
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(MeshError::NonFinite { index: i });
            }
        }
        for (i, tri) in self.triangles.iter().enumerate() {
            for &idx in tri {
                if idx as usize >= n {
                    return Err(MeshError::IndexOutOfRange { triangle: i, index: idx, count: n });
                }
            }
            let area = self.triangle_area(i).as_f64();
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(MeshError::Degenerate { triangle: i, area });
            }
        }
        if let Some(normals) = &self.normals {
            if normals.len() != n {
                return Err(MeshError::NormalCount { expected: n, found: normals.len() });
            }
            for (i, nrm) in normals.iter().enumerate() {
                let len = nrm.length().as_f64();
                if (len - 1.0).abs() > 1e-6 {
                    return Err(MeshError::NonUnitNormal { index: i, length: len });
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned box mesh with outward winding.
    pub fn cuboid(min: Vec3<T>, max: Vec3<T>) -> Self {
        let p = |x: bool, y: bool, z: bool| {
            Vec3::new(
                if x { max.x } else { min.x },
                if y { max.y } else { min.y },
                if z { max.z } else { min.z },
            )
        };
        let vertices = vec![
            p(false, false, false),
            p(true, false, false),
            p(true, true, false),
            p(false, true, false),
            p(false, false, true),
            p(true, false, true),
            p(true, true, true),
            p(false, true, true),
        ];
        let quads: [[u32; 4]; 6] = [
            [4, 5, 6, 7], // +z
            [1, 0, 3, 2], // -z
            [5, 1, 2, 6], // +x
            [0, 4, 7, 3], // -x
            [7, 6, 2, 3], // +y
            [0, 1, 5, 4], // -y
        ];
        let mut triangles = Vec::with_capacity(12);
        for q in quads {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        }
        Self::new(vertices, triangles)
    }

    /// Converts all coordinates to another scalar type.
    pub fn cast<U: Real>(&self) -> TriangleMesh<U> {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| v.cast()).collect(),
            normals: self.normals.as_ref().map(|ns| ns.iter().map(|n| n.cast()).collect()),
            triangles: self.triangles.clone(),
        }
    }
}
