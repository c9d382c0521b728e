//! Small geometric kernel: distances between points, segments, polylines and
//! axis-aligned boxes, great-circle sampling, and minimal enclosing balls.

use nalgebra::{Matrix3, Vector3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Point3 = Vector3<f64>;

pub fn p3(x: f64, y: f64, z: f64) -> Point3 {
    Vector3::new(x, y, z)
}

pub fn to_array(p: &Point3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

pub fn from_array(a: [f64; 3]) -> Point3 {
    Vector3::new(a[0], a[1], a[2])
}

/// Closest point to `p` on the closed segment `[a, b]`, with its parameter.
pub fn closest_on_segment(p: &Point3, a: &Point3, b: &Point3) -> (Point3, f64) {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (*a, 0.0);
    }
    let t = ((p - a).dot(&d) / len2).clamp(0.0, 1.0);
    (a + d * t, t)
}

pub fn point_segment_distance(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    (p - closest_on_segment(p, a, b).0).norm()
}

/// Distance between closed segments `[p0, p1]` and `[q0, q1]`.
pub fn segment_segment_distance(p0: &Point3, p1: &Point3, q0: &Point3, q1: &Point3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// Iterate over the segments of a polyline, including the closing segment
/// when `closed`.
pub fn segments(points: &[Point3], closed: bool) -> impl Iterator<Item = (&Point3, &Point3)> + '_ {
    let n = points.len();
    let count = if closed && n > 1 { n } else { n.saturating_sub(1) };
    (0..count).map(move |i| (&points[i], &points[(i + 1) % n]))
}

pub fn point_polyline_distance(p: &Point3, points: &[Point3], closed: bool) -> f64 {
    if points.len() == 1 {
        return (p - points[0]).norm();
    }
    segments(points, closed)
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum distance between two polylines. Segment pairs whose boxes are
/// already farther apart than the running best are skipped.
pub fn polyline_polyline_distance(a: &[Point3], a_closed: bool, b: &[Point3], b_closed: bool) -> f64 {
    let bsegs: Vec<(Aabb, &Point3, &Point3)> = segments(b, b_closed)
        .map(|(q0, q1)| (Aabb::from_points([*q0, *q1].iter()), q0, q1))
        .collect();
    let mut best = f64::INFINITY;
    for (p0, p1) in segments(a, a_closed) {
        let pb = Aabb::from_points([*p0, *p1].iter());
        for (qb, q0, q1) in &bsegs {
            if pb.distance_to_box(qb) >= best {
                continue;
            }
            best = best.min(segment_segment_distance(p0, p1, q0, q1));
        }
    }
    best
}

/// `m` points (endpoints included) on the great-circle arc of radius `radius`
/// between the directions of `a` and `b`.
pub fn great_arc_samples(a: &Point3, b: &Point3, radius: f64, m: usize) -> Vec<Point3> {
    let ua = a.normalize();
    let ub = b.normalize();
    let angle = ua.dot(&ub).clamp(-1.0, 1.0).acos();
    let m = m.max(2);
    (0..m)
        .map(|i| {
            let t = i as f64 / (m - 1) as f64;
            slerp(&ua, &ub, angle, t) * radius
        })
        .collect()
}

pub(crate) fn slerp(ua: &Point3, ub: &Point3, angle: f64, t: f64) -> Point3 {
    if angle < 1e-15 {
        return *ua;
    }
    let s = angle.sin();
    (ua * ((1.0 - t) * angle).sin() + ub * (t * angle).sin()) / s
}

/// Any unit vector orthogonal to `n` (which must be nonzero).
pub fn orthogonal_unit(n: &Point3) -> Point3 {
    let n = n.normalize();
    let helper = if n.x.abs() < 0.9 { p3(1.0, 0.0, 0.0) } else { p3(0.0, 1.0, 0.0) };
    n.cross(&helper).normalize()
}

/// `m` points on the circle with the given center, unit normal and radius.
/// The first point lies along `orthogonal_unit(normal)`.
pub fn circle_samples(center: &Point3, normal: &Point3, radius: f64, m: usize) -> Vec<Point3> {
    let e1 = orthogonal_unit(normal);
    let e2 = normal.normalize().cross(&e1);
    (0..m)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / m as f64;
            center + (e1 * t.cos() + e2 * t.sin()) * radius
        })
        .collect()
}

/// Rotation of `v` about the unit axis `axis` (through the origin) by `angle`.
pub fn rotate_about(v: &Point3, axis: &Point3, angle: f64) -> Point3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Point3::repeat(f64::INFINITY),
            max: Point3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.include(p);
        }
        b
    }

    pub fn include(&mut self, p: &Point3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        Aabb {
            min: self.min.add_scalar(-r),
            max: self.max.add_scalar(r),
        }
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn distance_to_point(&self, p: &Point3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2.sqrt()
    }

    pub fn distance_to_box(&self, o: &Aabb) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let v = (o.min[i] - self.max[i]).max(self.min[i] - o.max[i]).max(0.0);
            d2 += v * v;
        }
        d2.sqrt()
    }
}

/// A closed ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point3,
    pub radius: f64,
}

impl Ball {
    fn contains(&self, p: &Point3) -> bool {
        self.radius >= 0.0 && (p - self.center).norm() <= self.radius * (1.0 + 1e-12) + 1e-15
    }
}

/// Minimal enclosing ball of a point set (Welzl's move-to-front scheme over a
/// seeded shuffle, so results are reproducible). Returns `None` for an empty
/// input.
pub fn min_enclosing_ball(points: &[Point3]) -> Option<Ball> {
    if points.is_empty() {
        return None;
    }
    let mut pts = points.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba11);
    pts.shuffle(&mut rng);
    let n = pts.len();
    let mut support = Vec::with_capacity(4);
    Some(mtf(&mut pts, n, &mut support))
}

fn mtf(pts: &mut [Point3], end: usize, support: &mut Vec<Point3>) -> Ball {
    let mut ball = ball_from_support(support);
    if support.len() == 4 {
        return ball;
    }
    let mut i = 0;
    while i < end {
        if !ball.contains(&pts[i]) {
            support.push(pts[i]);
            ball = mtf(pts, i, support);
            support.pop();
            // move to front
            let p = pts[i];
            pts.copy_within(0..i, 1);
            pts[0] = p;
        }
        i += 1;
    }
    ball
}

fn ball_from_support(s: &[Point3]) -> Ball {
    match s.len() {
        0 => Ball { center: Point3::zeros(), radius: -1.0 },
        1 => Ball { center: s[0], radius: 0.0 },
        2 => {
            let c = (s[0] + s[1]) * 0.5;
            Ball { center: c, radius: (s[0] - c).norm() }
        }
        3 => circumball3(&s[0], &s[1], &s[2]).unwrap_or_else(|| smallest_from_subsets(s)),
        _ => circumball4(&s[0], &s[1], &s[2], &s[3]).unwrap_or_else(|| smallest_from_subsets(s)),
    }
}

/// Smallest ball among the balls of proper subsets that contains every point
/// of `s` (used when the support is degenerate).
fn smallest_from_subsets(s: &[Point3]) -> Ball {
    let n = s.len();
    let mut best: Option<Ball> = None;
    for mask in 1u32..(1 << n) - 1 {
        let sub: Vec<Point3> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| s[i]).collect();
        let b = ball_from_support(&sub);
        if s.iter().all(|p| b.contains(p)) && best.map_or(true, |x| b.radius < x.radius) {
            best = Some(b);
        }
    }
    best.unwrap_or_else(|| {
        let c = s.iter().sum::<Point3>() / n as f64;
        let r = s.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
        Ball { center: c, radius: r }
    })
}

pub(crate) fn circumball3(a: &Point3, b: &Point3, c: &Point3) -> Option<Ball> {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(&ac);
    let n2 = n.norm_squared();
    if n2 <= 1e-24 * ab.norm_squared() * ac.norm_squared() || n2 == 0.0 {
        return None;
    }
    let off = (n.cross(&ab) * ac.norm_squared() + ac.cross(&n) * ab.norm_squared()) / (2.0 * n2);
    Some(Ball { center: a + off, radius: off.norm() })
}

pub(crate) fn circumball4(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> Option<Ball> {
    let m = Matrix3::from_rows(&[(b - a).transpose(), (c - a).transpose(), (d - a).transpose()]);
    let scale = (b - a).norm() * (c - a).norm() * (d - a).norm();
    if m.determinant().abs() <= 1e-12 * scale {
        return None;
    }
    let rhs = Vector3::new(
        (b - a).norm_squared() * 0.5,
        (c - a).norm_squared() * 0.5,
        (d - a).norm_squared() * 0.5,
    );
    let off = m.lu().solve(&rhs)?;
    Some(Ball { center: a + off, radius: off.norm() })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive oracle: smallest ball defined by at most four points that
    /// contains the whole set.
    fn brute_force_ball(pts: &[Point3]) -> f64 {
        let n = pts.len();
        let mut best = f64::INFINITY;
        let mut consider = |b: Option<Ball>| {
            if let Some(b) = b {
                if pts.iter().all(|p| (p - b.center).norm() <= b.radius + 1e-9) {
                    best = best.min(b.radius);
                }
            }
        };
        for i in 0..n {
            for j in i..n {
                let c = (pts[i] + pts[j]) * 0.5;
                consider(Some(Ball { center: c, radius: (pts[i] - c).norm() }));
                for k in j + 1..n {
                    consider(circumball3(&pts[i], &pts[j], &pts[k]));
                    for l in k + 1..n {
                        consider(circumball4(&pts[i], &pts[j], &pts[k], &pts[l]));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn meb_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        use rand::Rng;
        for n in [1usize, 2, 3, 5, 9, 14] {
            for _ in 0..10 {
                let pts: Vec<Point3> = (0..n)
                    .map(|_| p3(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let b = min_enclosing_ball(&pts).unwrap();
                assert!(pts.iter().all(|p| (p - b.center).norm() <= b.radius + 1e-9));
                assert!((b.radius - brute_force_ball(&pts)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn meb_of_planar_circle_is_the_circle() {
        let pts = circle_samples(&p3(0.1, 0.2, 0.3), &p3(0.0, 0.0, 1.0), 0.25, 64);
        let b = min_enclosing_ball(&pts).unwrap();
        assert!((b.radius - 0.25).abs() < 1e-12);
        assert!((b.center - p3(0.1, 0.2, 0.3)).norm() < 1e-12);
    }

    #[test]
    fn segment_distance_cases() {
        let d = segment_segment_distance(&p3(0.0, 0.0, 0.0), &p3(1.0, 0.0, 0.0), &p3(0.5, 1.0, -1.0), &p3(0.5, 1.0, 1.0));
        assert!((d - 1.0).abs() < 1e-15);
        let d = segment_segment_distance(&p3(0.0, 0.0, 0.0), &p3(1.0, 0.0, 0.0), &p3(2.0, 0.0, 0.0), &p3(3.0, 0.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15);
        assert_eq!(point_segment_distance(&p3(0.5, 0.0, 0.0), &p3(0.0, 0.0, 0.0), &p3(1.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn great_arc_lies_on_sphere_and_plane() {
        let a = p3(1.0, -1.0, 1.0);
        let b = p3(1.0, 1.0, 1.0);
        let n = a.cross(&b).normalize();
        for p in great_arc_samples(&a, &b, 0.75, 33) {
            assert!((p.norm() - 0.75).abs() < 1e-15);
            assert!(p.dot(&n).abs() < 1e-15);
        }
    }

    #[test]
    fn rotation_preserves_axis_component() {
        let axis = p3(0.0, 0.6, 0.8);
        let v = p3(0.3, -0.2, 0.9);
        let w = rotate_about(&v, &axis, 1.1);
        assert!((w.norm() - v.norm()).abs() < 1e-14);
        assert!((w.dot(&axis) - v.dot(&axis)).abs() < 1e-14);
        let back = rotate_about(&w, &axis, -1.1);
        assert!((back - v).norm() < 1e-14);
    }
}
