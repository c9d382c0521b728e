//! Indexed triangle meshes: surfaces of revolution and curve tubes.

use crate::geom::{orthogonal_unit, Point3};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn triangle_area(&self, t: &[u32; 3]) -> f64 {
        let [a, b, c] = t.map(|i| self.vertices[i as usize]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| self.triangle_area(t)).sum()
    }

    /// Appends `other`, shifting its indices; returns the first new triangle index.
    pub fn append(&mut self, other: &Mesh) -> usize {
        let base = self.vertices.len() as u32;
        let first = self.triangles.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        first
    }
}

/// Orthonormal frame `(e1, e2, axis)` around a unit axis.
pub fn axis_frame(axis: &Point3) -> (Point3, Point3, Point3) {
    let a = axis.normalize();
    let e1 = orthogonal_unit(&a);
    (e1, a.cross(&e1), a)
}

/// Point of the surface of revolution with profile coordinate `(r, z)` at angle `theta`.
pub fn revolve_point(frame: &(Point3, Point3, Point3), origin: &Point3, r: f64, z: f64, theta: f64) -> Point3 {
    let (e1, e2, a) = frame;
    origin + a * z + (e1 * theta.cos() + e2 * theta.sin()) * r
}

/// Revolves `(r, z)` profile samples about `axis` through `origin` with `sides`
/// angular segments. Rings of radius zero collapse to a single vertex.
pub fn revolve(profile: &[(f64, f64)], origin: &Point3, axis: &Point3, sides: usize) -> Mesh {
    let frame = axis_frame(axis);
    let mut mesh = Mesh::default();
    let mut rings: Vec<Vec<u32>> = Vec::with_capacity(profile.len());
    for &(r, z) in profile {
        let start = mesh.vertices.len() as u32;
        if r == 0.0 {
            mesh.vertices.push(revolve_point(&frame, origin, 0.0, z, 0.0));
            rings.push(vec![start; sides]);
        } else {
            for j in 0..sides {
                let th = std::f64::consts::TAU * j as f64 / sides as f64;
                mesh.vertices.push(revolve_point(&frame, origin, r, z, th));
            }
            rings.push((start..start + sides as u32).collect());
        }
    }
    for w in rings.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        for j in 0..sides {
            let jn = (j + 1) % sides;
            if a[j] != a[jn] {
                mesh.triangles.push([a[j], a[jn], b[jn]]);
            }
            if b[j] != b[jn] {
                mesh.triangles.push([a[j], b[jn], b[j]]);
            }
        }
    }
    mesh
}

/// Tube of the given radius around a polyline, using parallel-transported frames.
pub fn tube(points: &[Point3], closed: bool, radius: f64, sides: usize) -> Mesh {
    let mut mesh = Mesh::default();
    let n = points.len();
    if n < 2 {
        return mesh;
    }
    let tangent = |i: usize| -> Point3 {
        let (prev, next) = if closed {
            (points[(i + n - 1) % n], points[(i + 1) % n])
        } else {
            (points[i.saturating_sub(1)], points[(i + 1).min(n - 1)])
        };
        let t = next - prev;
        if t.norm() > 0.0 {
            t.normalize()
        } else {
            Point3::z()
        }
    };
    let mut normal = orthogonal_unit(&tangent(0));
    for i in 0..n {
        let t = tangent(i);
        normal = normal - t * normal.dot(&t);
        normal = if normal.norm() > 1e-12 { normal.normalize() } else { orthogonal_unit(&t) };
        let binormal = t.cross(&normal);
        for j in 0..sides {
            let th = std::f64::consts::TAU * j as f64 / sides as f64;
            mesh.vertices.push(points[i] + (normal * th.cos() + binormal * th.sin()) * radius);
        }
    }
    let rings = if closed { n } else { n - 1 };
    for i in 0..rings {
        let a = (i * sides) as u32;
        let b = (((i + 1) % n) * sides) as u32;
        for j in 0..sides as u32 {
            let jn = (j + 1) % sides as u32;
            mesh.triangles.push([a + j, a + jn, b + jn]);
            mesh.triangles.push([a + j, b + jn, b + j]);
        }
    }
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::p3;

    #[test]
    fn revolved_sphere_area_converges() {
        let n = 200;
        let prof: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / n as f64;
                (if i == 0 || i == n { 0.0 } else { t.sin() }, -t.cos())
            })
            .collect();
        let m = revolve(&prof, &p3(0.0, 0.0, 0.0), &p3(0.0, 0.0, 1.0), 256);
        assert!((m.area() - 4.0 * std::f64::consts::PI).abs() < 5e-3, "{}", m.area());
        assert_eq!(m.vertices.len(), 2 + (n - 1) * 256);
    }

    #[test]
    fn tube_area_matches_cylinder() {
        let pts: Vec<Point3> = (0..=10).map(|i| p3(0.0, 0.0, i as f64 / 10.0)).collect();
        let m = tube(&pts, false, 0.1, 64);
        let lateral = 2.0 * std::f64::consts::PI * 0.1;
        assert!((m.area() - lateral).abs() / lateral < 2e-3);
        assert!(m.vertices.iter().all(|v| ((v.x * v.x + v.y * v.y).sqrt() - 0.1).abs() < 1e-12));
    }
}
