//! Bounding volume hierarchy over a triangle soup.
//!
//! Nearest-hit queries return the smallest `(t, triangle index)` pair, the
//! same answer as scanning every triangle in index order, so the brute-force
//! scan in [`nearest_hit_brute`] serves as an exact oracle.

use crate::geom::{Aabb, Ray, Vec3};
use crate::mesh::TriangleMesh;
use crate::scalar::Real;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit<T> {
    pub t: T,
    pub tri: u32,
}

impl<T: Real> Hit<T> {
    #[inline]
    fn better_than(&self, o: &Option<Hit<T>>) -> bool {
        match o {
            None => true,
            Some(b) => self.t < b.t || (self.t == b.t && self.tri < b.tri),
        }
    }
}

#[derive(Clone, Debug)]
struct Node<T> {
    bounds: Aabb<T>,
    /// Leaf: first index into `order`. Interior: index of the left child
    /// (the right child follows the left subtree).
    start: u32,
    /// Leaf: triangle count. Interior: 0.
    count: u32,
    right: u32,
}

#[derive(Clone, Debug)]
pub struct Bvh<T> {
    nodes: Vec<Node<T>>,
    order: Vec<u32>,
    tris: Vec<[Vec3<T>; 3]>,
}

impl<T: Real> Bvh<T> {
    pub fn build(mesh: &TriangleMesh<T>) -> Self {
        let tris: Vec<[Vec3<T>; 3]> = (0..mesh.triangles.len()).map(|i| mesh.triangle(i)).collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let centroids: Vec<Vec3<T>> = tris
            .iter()
            .map(|t| (t[0] + t[1] + t[2]) * T::lit(1.0 / 3.0))
            .collect();
        let mut bvh = Self { nodes: Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1), order: Vec::new(), tris };
        if !bvh.tris.is_empty() {
            let n = order.len();
            bvh.build_node(&mut order, 0, n, &centroids);
        }
        bvh.order = order;
        bvh
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    fn padded_bounds(&self, idx: &[u32]) -> Aabb<T> {
        let mut b = Aabb::empty();
        for &i in idx {
            for v in &self.tris[i as usize] {
                b.grow(*v);
            }
        }
        // Slack absorbs rounding in the slab test so no hit is pruned.
        let scale = b.min.x.abs().max(b.max.x.abs()).max(b.min.y.abs().max(b.max.y.abs()))
            .max(b.min.z.abs().max(b.max.z.abs()))
            .max(T::one());
        let pad = Vec3::splat(scale * T::epsilon() * T::lit(64.0));
        Aabb { min: b.min - pad, max: b.max + pad }
    }

    fn build_node(&mut self, order: &mut [u32], start: usize, end: usize, centroids: &[Vec3<T>]) -> u32 {
        let node_index = self.nodes.len() as u32;
        let bounds = self.padded_bounds(&order[start..end]);
        self.nodes.push(Node { bounds, start: start as u32, count: (end - start) as u32, right: 0 });
        if end - start <= LEAF_SIZE {
            return node_index;
        }
        let cb = Aabb::from_points(order[start..end].iter().map(|&i| &centroids[i as usize]));
        let axis = cb.largest_axis();
        if cb.extent()[axis] <= T::zero() {
            return node_index;
        }
        let mid = start + (end - start) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a as usize][axis]
                .partial_cmp(&centroids[b as usize][axis])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let left = self.build_node(order, start, mid, centroids);
        let right = self.build_node(order, mid, end, centroids);
        let node = &mut self.nodes[node_index as usize];
        node.start = left;
        node.count = 0;
        node.right = right;
        node_index
    }

    /// Nearest hit with `t` in `[t_min, t_max]`; ties go to the lower
    /// triangle index.
    pub fn nearest_hit(&self, ray: &Ray<T>, t_min: T, t_max: T) -> Option<Hit<T>> {
        let mut best: Option<Hit<T>> = None;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = Vec::with_capacity(64);
        stack.push(0u32);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let limit = best.map_or(t_max, |b| b.t);
            if !node.bounds.hit(ray.origin, ray.inv_dir, t_min, limit) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &tri in &self.order[s..s + node.count as usize] {
                    let [a, b, c] = self.tris[tri as usize];
                    if let Some(t) = ray.intersect_triangle(a, b, c, t_min, limit) {
                        let h = Hit { t, tri };
                        if h.better_than(&best) {
                            best = Some(h);
                        }
                    }
                }
            } else {
                stack.push(node.right);
                stack.push(node.start);
            }
        }
        best
    }

    /// Whether anything is hit with `t` in `[t_min, t_max]`.
    pub fn any_hit(&self, ray: &Ray<T>, t_min: T, t_max: T) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut stack = Vec::with_capacity(64);
        stack.push(0u32);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.bounds.hit(ray.origin, ray.inv_dir, t_min, t_max) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &tri in &self.order[s..s + node.count as usize] {
                    let [a, b, c] = self.tris[tri as usize];
                    if ray.intersect_triangle(a, b, c, t_min, t_max).is_some() {
                        return true;
                    }
                }
            } else {
                stack.push(node.right);
                stack.push(node.start);
            }
        }
        false
    }
}

/// Reference nearest-hit query over every triangle of `mesh`.
pub fn nearest_hit_brute<T: Real>(mesh: &TriangleMesh<T>, ray: &Ray<T>, t_min: T, t_max: T) -> Option<Hit<T>> {
    let mut best: Option<Hit<T>> = None;
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(i);
        if let Some(t) = ray.intersect_triangle(a, b, c, t_min, t_max) {
            let h = Hit { t, tri: i as u32 };
            if h.better_than(&best) {
                best = Some(h);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force_on_random_soup() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mesh = TriangleMesh::<f64>::default();
        for _ in 0..300 {
            let c = Vec3::new(rng.random_range(0.0..50.0), rng.random_range(0.0..50.0), rng.random_range(-20.0..0.0));
            let base = mesh.vertices.len() as u32;
            for _ in 0..3 {
                let d = Vec3::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), rng.random_range(-3.0..3.0));
                mesh.vertices.push(c + d);
            }
            mesh.triangles.push([base, base + 1, base + 2]);
        }
        let bvh = Bvh::build(&mesh);
        for _ in 0..2000 {
            let o = Vec3::new(rng.random_range(-5.0..55.0), rng.random_range(-5.0..55.0), 10.0);
            let ray = Ray::new(o, Vec3::new(0.0, 0.0, -1.0));
            assert_eq!(bvh.nearest_hit(&ray, 0.0, 100.0), nearest_hit_brute(&mesh, &ray, 0.0, 100.0));
            assert_eq!(bvh.any_hit(&ray, 0.0, 100.0), nearest_hit_brute(&mesh, &ray, 0.0, 100.0).is_some());
        }
    }
}
