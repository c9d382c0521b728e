//! Bounding-volume hierarchy over scene elements.

use crate::geom::{Aabb, Point3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    /// Leaf: `(start, len)` into `items`; interior: `len == 0` and `start` is the left child.
    start: usize,
    len: usize,
    right: usize,
}

/// Static AABB tree. Item identifiers are caller-chosen `usize` values.
#[derive(Debug, Clone, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    items: Vec<(usize, Aabb)>,
}

impl Bvh {
    pub fn build(mut items: Vec<(usize, Aabb)>) -> Bvh {
        let mut bvh = Bvh { nodes: Vec::new(), items: Vec::new() };
        if items.is_empty() {
            return bvh;
        }
        let n = items.len();
        bvh.nodes.reserve(2 * n / LEAF_SIZE + 1);
        bvh.split(&mut items, 0, n);
        bvh.items = items;
        bvh
    }

    fn split(&mut self, items: &mut [(usize, Aabb)], offset: usize, len: usize) -> usize {
        let bbox = items.iter().fold(Aabb::empty(), |b, (_, x)| b.union(x));
        let me = self.nodes.len();
        self.nodes.push(Node { bbox, start: offset, len, right: 0 });
        if len <= LEAF_SIZE {
            return me;
        }
        let extent = bbox.max - bbox.min;
        let axis = (0..3).fold(0, |a, i| if extent[i] > extent[a] { i } else { a });
        let key = |b: &Aabb| b.min[axis] + b.max[axis];
        items.sort_by(|a, b| key(&a.1).total_cmp(&key(&b.1)).then(a.0.cmp(&b.0)));
        let half = len / 2;
        let (lo, hi) = items.split_at_mut(half);
        let left = self.split(lo, offset, half);
        let right = self.split(hi, offset + half, len - half);
        self.nodes[me].len = 0;
        self.nodes[me].start = left;
        self.nodes[me].right = right;
        me
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Item minimising `dist`, which must dominate the box distance. Ties
    /// resolve to the smallest identifier, independent of tree shape.
    pub fn nearest<F: Fn(usize) -> f64>(&self, p: &Point3, dist: F) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        if self.nodes.is_empty() {
            return None;
        }
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            let bd = node.bbox.distance_to_point(p);
            if let Some((d, _)) = best {
                if bd > d {
                    continue;
                }
            }
            if node.len > 0 {
                for (id, b) in &self.items[node.start..node.start + node.len] {
                    if let Some((d, _)) = best {
                        if b.distance_to_point(p) > d {
                            continue;
                        }
                    }
                    let d = dist(*id);
                    best = match best {
                        Some((bd, bid)) if bd < d || (bd == d && bid < *id) => Some((bd, bid)),
                        _ => Some((d, *id)),
                    };
                }
            } else {
                let (l, r) = (node.start, node.right);
                let dl = self.nodes[l].bbox.distance_to_point(p);
                let dr = self.nodes[r].bbox.distance_to_point(p);
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best
    }

    /// Identifiers whose box lies within `radius` of `p`, in ascending order.
    pub fn within(&self, p: &Point3, radius: f64) -> Vec<usize> {
        self.collect(|b| b.distance_to_point(p) <= radius)
    }

    /// Identifiers whose box lies within `radius` of box `q`, in ascending order.
    pub fn near_box(&self, q: &Aabb, radius: f64) -> Vec<usize> {
        self.collect(|b| b.distance_to_box(q) <= radius)
    }

    fn collect(&self, hit: impl Fn(&Aabb) -> bool) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !hit(&node.bbox) {
                continue;
            }
            if node.len > 0 {
                out.extend(
                    self.items[node.start..node.start + node.len]
                        .iter()
                        .filter(|(_, b)| hit(b))
                        .map(|(id, _)| *id),
                );
            } else {
                stack.push(node.start);
                stack.push(node.right);
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::p3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point3> =
            (0..500).map(|_| p3(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let bvh = Bvh::build(pts.iter().enumerate().map(|(i, p)| (i, Aabb::from_points([p]))).collect());
        for _ in 0..200 {
            let q = p3(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let (d, i) = bvh.nearest(&q, |i| (pts[i] - q).norm()).unwrap();
            let (bi, bd) = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (p - q).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert_eq!((i, d), (bi, bd));
            let within = bvh.within(&q, 0.3);
            let brute: Vec<usize> = (0..pts.len()).filter(|&i| (pts[i] - q).norm() <= 0.3).collect();
            assert!(brute.iter().all(|i| within.contains(i)));
        }
    }

    #[test]
    fn empty_tree() {
        let bvh = Bvh::build(Vec::new());
        assert!(bvh.nearest(&p3(0.0, 0.0, 0.0), |_| 0.0).is_none());
        assert!(bvh.within(&p3(0.0, 0.0, 0.0), 1.0).is_empty());
    }
}
