//! Point location, distances, crossing profiles, curve classification,
//! χ-expansion and limit-set estimation over a built scene.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::complex::{
    cell_neighbors, cube_face_of_direction, face_frame, is_cell_of, lattice_point, sphere_radius, square_bounds,
    CellAddress, Lattice, Role, LATTICE_UNIT,
};
use crate::error::{invalid, Error, Result};
use crate::geom::{point_polyline_distance, segments, Aabb, Point3};
use crate::scaffold::{DomainScene, ElementId, ElementKind, Geometry};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Highest sphere index considered by crossing profiles.
pub const MAX_SPHERE: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Location {
    CoreBall,
    Cell(#[serde(serialize_with = "ser_display")] CellAddress),
    OnScaffold {
        #[serde(serialize_with = "ser_display")]
        element: ElementId,
        distance: f64,
    },
}

fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Index `k` of the shell `[1 − 2⁻ᵏ, 1 − 2⁻⁽ᵏ⁺¹⁾)` containing radius `r`
/// (`0` for the core ball).
pub fn shell_of_radius(r: f64) -> u32 {
    if r < 0.5 {
        return 0;
    }
    let mut k = (-(1.0 - r).log2()).floor().max(1.0) as u32;
    while k > 1 && sphere_radius(k) > r {
        k -= 1;
    }
    while sphere_radius(k + 1) <= r {
        k += 1;
    }
    k
}

fn grid_index(x: f64, grid: u32) -> u32 {
    (((x + 1.0) * 0.5 * grid as f64).floor().max(0.0) as u32).min(grid - 1)
}

/// The 3-cell (or the core ball) whose half-open region contains `p`.
pub fn locate_cell(p: &Point3) -> Result<CellAddress> {
    let r = p.norm();
    if !(r < 1.0) {
        return Err(Error::OutsideDomain([p.x, p.y, p.z]));
    }
    let k = shell_of_radius(r);
    if k == 0 {
        return Ok(CellAddress::CORE);
    }
    let (f, u, v) = cube_face_of_direction(p).expect("nonzero");
    let grid = 1u32 << (k - 1);
    Ok(CellAddress::square(Role::ThreeCell, k, f, grid_index(u, grid), grid_index(v, grid)))
}

/// Point location with scaffold detection (Γ first, then Δ, then faces).
pub fn locate(p: &Point3, scene: &DomainScene, tol: f64) -> Result<Location> {
    let cell = locate_cell(p)?;
    if let Some((d, e)) = scene.nearest_gamma(p) {
        if d <= tol {
            return Ok(Location::OnScaffold { element: e.id, distance: d });
        }
    }
    if let Some((d, id)) = distance_to_delta(p, scene) {
        if d <= tol {
            return Ok(Location::OnScaffold { element: id, distance: d });
        }
    }
    if let Some((id, d)) = nearest_face(p, scene, tol) {
        return Ok(Location::OnScaffold { element: id, distance: d });
    }
    Ok(if cell == CellAddress::CORE { Location::CoreBall } else { Location::Cell(cell) })
}

/// A spherical face or wall of the scene within `tol` of `p`.
fn nearest_face(p: &Point3, scene: &DomainScene, tol: f64) -> Option<(ElementId, f64)> {
    let r = p.norm();
    let k = shell_of_radius(r);
    let (f, u, v) = cube_face_of_direction(p)?;
    for j in [k, k + 1] {
        if j == 0 || j >= scene.max_level {
            continue;
        }
        let d = (r - sphere_radius(j)).abs();
        if d <= tol {
            let grid = 1u32 << (j - 1);
            let face = CellAddress::square(Role::SphericalFace, j, f, grid_index(u, grid), grid_index(v, grid));
            return Some((ElementId { source: face, kind: ElementKind::SphericalFacePatch }, d));
        }
    }
    if k == 0 || k >= scene.max_level {
        return None;
    }
    let (face, d) = nearest_wall(p, k, scene)?;
    (d <= tol).then_some((ElementId { source: face, kind: ElementKind::RadialRectPatch }, d))
}

/// Nearest wall (radial rectangle of shell `k`) to `p` and its plane distance.
fn nearest_wall(p: &Point3, k: u32, scene: &DomainScene) -> Option<(CellAddress, f64)> {
    let (f, u, v) = cube_face_of_direction(p)?;
    let (axis, sign, ua, va) = face_frame(f);
    let level = scene.complex.level(k)?;
    let grid = level.grid;
    let h = p[axis] * sign;
    let step = 2.0 / grid as f64;
    let mut best: Option<(CellAddress, f64)> = None;
    for (along, across, coord, other) in [(ua, va, u, v), (va, ua, v, u)] {
        let i = ((coord + 1.0) / step).round() as i64;
        let c = -1.0 + i as f64 * step;
        let d = (p[along] - c * h).abs() / (1.0 + c * c).sqrt();
        let j = grid_index(other, grid) as i64;
        let lat = |t: i64| {
            let mut l: Lattice = [0; 3];
            l[axis] = sign as i64 * LATTICE_UNIT;
            l[along] = -LATTICE_UNIT + i * level.step();
            l[across] = -LATTICE_UNIT + t * level.step();
            l
        };
        if let Some(e) = level.edge_index(&lat(j), &lat(j + 1)) {
            let addr = level.edge_addr[e as usize];
            let face = addr.with(Role::RadialRectFace, addr.local_index);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((face, d));
            }
        }
    }
    best
}

/// Distance from `p` to Δ and the nearest Δ curve.
pub fn distance_to_delta(p: &Point3, scene: &DomainScene) -> Option<(f64, ElementId)> {
    scene
        .delta_index()
        .nearest(p, |i| match &scene.elements[i].geometry {
            Geometry::Polyline { points, closed } => point_polyline_distance(p, points, *closed),
            _ => f64::INFINITY,
        })
        .map(|(d, i)| (d, scene.elements[i].id))
}

/// Distance from `p` to a disk.
pub fn point_disk_distance(p: &Point3, center: &Point3, normal: &Point3, radius: f64) -> f64 {
    let n = normal.normalize();
    let w = p - center;
    let h = w.dot(&n);
    let inplane = w - n * h;
    let rr = inplane.norm();
    if rr <= radius {
        h.abs()
    } else {
        h.hypot(rr - radius)
    }
}

/// Distance from `p` to the union of W disks.
pub fn distance_to_w(p: &Point3, scene: &DomainScene) -> Option<(f64, ElementId)> {
    scene
        .w_index()
        .nearest(p, |i| match &scene.elements[i].geometry {
            Geometry::Disk { center, normal, radius } => point_disk_distance(p, center, normal, *radius),
            _ => f64::INFINITY,
        })
        .map(|(d, i)| (d, scene.elements[i].id))
}

/// An L disk containing `p` up to `tol` (on a sphere or a wall), if any.
pub fn l_disk_at(p: &Point3, scene: &DomainScene, tol: f64) -> Option<CellAddress> {
    let r = p.norm();
    let k = shell_of_radius(r);
    let (f, u, v) = cube_face_of_direction(p)?;
    for j in [k, k + 1] {
        if j == 0 || j >= scene.max_level || (r - sphere_radius(j)).abs() > tol {
            continue;
        }
        let grid = 1u32 << (j - 1);
        let face = CellAddress::square(Role::SphericalFace, j, f, grid_index(u, grid), grid_index(v, grid));
        if has_l_disk(scene, &face) && scene.face_inset(&face).is_ok_and(|i| i.contains(p, tol)) {
            return Some(face);
        }
    }
    if k == 0 || k >= scene.max_level {
        return None;
    }
    let (face, d) = nearest_wall(p, k, scene)?;
    (d <= tol && has_l_disk(scene, &face) && scene.face_inset(&face).is_ok_and(|i| i.contains(p, tol))).then_some(face)
}

fn has_l_disk(scene: &DomainScene, face: &CellAddress) -> bool {
    scene.element(&ElementId { source: *face, kind: ElementKind::LDisk }).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FacePart {
    LDisk,
    Band,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CrossingTarget {
    /// Sphere index `k`; `face`/`part` present when the sphere carries scene faces.
    Sphere {
        k: u32,
        #[serde(serialize_with = "ser_opt_display")]
        face: Option<CellAddress>,
        part: Option<FacePart>,
        in_thin_tube: bool,
    },
    Wall {
        #[serde(serialize_with = "ser_display")]
        face: CellAddress,
        part: FacePart,
    },
    WDisk(#[serde(serialize_with = "ser_display")] ElementId),
    TubeBoundary,
}

fn ser_opt_display<T: std::fmt::Display, S: serde::Serializer>(
    v: &Option<T>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingEvent {
    pub t: f64,
    pub target: CrossingTarget,
    pub sign: i8,
    pub location: [f64; 3],
    pub tangent: bool,
}

/// Roots of `|a + s(b − a)|² = R²` in `[0, 1]`, with a tangency flag.
fn sphere_roots(a: &Point3, b: &Point3, radius: f64) -> Vec<(f64, bool)> {
    let d = b - a;
    let qa = d.norm_squared();
    let qb = 2.0 * a.dot(&d);
    let qc = a.norm_squared() - radius * radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc <= 1e-14 * qb.abs().max(qa) * radius * radius {
        let s = -qb / (2.0 * qa);
        return if (0.0..=1.0).contains(&s) { vec![(s, true)] } else { Vec::new() };
    }
    let sq = disc.sqrt();
    let q = -0.5 * (qb + qb.signum() * sq);
    let mut r = [q / qa, qc / q];
    r.sort_by(f64::total_cmp);
    r.iter().filter(|s| (0.0..=1.0).contains(*s)).map(|&s| (s, false)).collect()
}

/// Ordered crossing events of an open polyline with the scaffold.
pub fn crossing_profile(path: &[Point3], scene: &DomainScene) -> Result<Vec<CrossingEvent>> {
    crossing_profile_with(path, scene, true)
}

/// As [`crossing_profile`], optionally skipping the tube-boundary scan.
pub fn crossing_profile_with(path: &[Point3], scene: &DomainScene, tube_events: bool) -> Result<Vec<CrossingEvent>> {
    if path.len() < 2 {
        return Err(invalid("path needs at least two vertices"));
    }
    if let Some(p) = path.iter().find(|p| !(p.norm() < 1.0)) {
        return Err(Error::OutsideDomain([p.x, p.y, p.z]));
    }
    let lengths: Vec<f64> = segments(path, false).map(|(a, b)| (b - a).norm()).collect();
    let total: f64 = lengths.iter().sum();
    if !(total > 0.0) {
        return Err(invalid("zero-length path"));
    }
    let tol = DEFAULT_TOL;
    let mut events = Vec::new();
    let mut offset = 0.0;
    for ((a, b), len) in segments(path, false).zip(&lengths) {
        if *len == 0.0 {
            continue;
        }
        let to_t = |s: f64| (offset + s * len) / total;
        let at = |s: f64| a + (b - a) * s;
        let mut cuts = vec![0.0, 1.0];

        for k in 1..=MAX_SPHERE {
            let radius = sphere_radius(k);
            for (s, tangent) in sphere_roots(a, b, radius) {
                cuts.push(s);
                let p = at(s);
                let outward = p.dot(&(b - a)) > 0.0;
                let (face, part, in_thin) = if k < scene.max_level {
                    let (f, u, v) = cube_face_of_direction(&p).expect("on a sphere");
                    let grid = 1u32 << (k - 1);
                    let face = CellAddress::square(Role::SphericalFace, k, f, grid_index(u, grid), grid_index(v, grid));
                    let in_l = has_l_disk(scene, &face) && scene.face_inset(&face).is_ok_and(|i| i.contains(&p, tol));
                    let in_thin = scene.tube_gap(&p, |j| scene.tubes.rho_n(j)) <= tol;
                    (Some(face), Some(if in_l { FacePart::LDisk } else { FacePart::Band }), in_thin)
                } else {
                    (None, None, false)
                };
                events.push(CrossingEvent {
                    t: to_t(s),
                    target: CrossingTarget::Sphere { k, face, part, in_thin_tube: in_thin },
                    sign: if outward { 1 } else { -1 },
                    location: [p.x, p.y, p.z],
                    tangent,
                });
            }
        }

        // Cube-edge planes |x_i| = |x_j| separate the face charts.
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            for sgn in [1.0, -1.0] {
                let fa = a[i] - sgn * a[j];
                let fb = b[i] - sgn * b[j];
                if fa * fb < 0.0 {
                    cuts.push(fa / (fa - fb));
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        for w in cuts.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            if s1 - s0 <= 0.0 {
                continue;
            }
            let mid = at(0.5 * (s0 + s1));
            let k = shell_of_radius(mid.norm());
            if k == 0 || k >= scene.max_level {
                continue;
            }
            let (f, _, _) = cube_face_of_direction(&mid).expect("nonzero");
            let (axis, sign, ua, va) = face_frame(f);
            let grid = 1i64 << (k - 1);
            let step = 2.0 / grid as f64;
            let (p0, p1) = (at(s0), at(s1));
            for along in [ua, va] {
                let coord = |p: &Point3| p[along] / (sign * p[axis]);
                let (c0, c1) = (coord(&p0), coord(&p1));
                let (lo, hi) = (c0.min(c1), c0.max(c1));
                let i0 = ((lo + 1.0) / step).ceil() as i64;
                let i1 = ((hi + 1.0) / step).floor() as i64;
                for i in i0.max(0)..=i1.min(grid) {
                    let c = -1.0 + i as f64 * step;
                    let g0 = a[along] - c * sign * a[axis];
                    let g1 = b[along] - c * sign * b[axis];
                    if g0 == g1 {
                        continue;
                    }
                    let s = g0 / (g0 - g1);
                    if s < s0 || s > s1 || (i == 0 || i == grid) && (s == s0 || s == s1) && s0 != 0.0 && s1 != 1.0 {
                        continue;
                    }
                    let p = at(s);
                    let Some((face, _)) = nearest_wall(&p, k, scene) else { continue };
                    let in_l = has_l_disk(scene, &face) && scene.face_inset(&face).is_ok_and(|i| i.contains(&p, tol));
                    events.push(CrossingEvent {
                        t: to_t(s),
                        target: CrossingTarget::Wall { face, part: if in_l { FacePart::LDisk } else { FacePart::Band } },
                        sign: if c1 > c0 { 1 } else { -1 },
                        location: [p.x, p.y, p.z],
                        tangent: false,
                    });
                }
            }
        }

        let seg_box = Aabb::from_points([a, b]);
        let d = b - a;
        for i in scene.w_index().near_box(&seg_box, 0.0) {
            let e = &scene.elements[i];
            if let Geometry::Disk { center, normal, radius } = &e.geometry {
                let denom = d.dot(normal);
                if denom == 0.0 {
                    continue;
                }
                let s = (center - a).dot(normal) / denom;
                if !(0.0..=1.0).contains(&s) {
                    continue;
                }
                let p = at(s);
                if (p - center).norm() <= *radius {
                    events.push(CrossingEvent {
                        t: to_t(s),
                        target: CrossingTarget::WDisk(e.id),
                        sign: if denom > 0.0 { 1 } else { -1 },
                        location: [p.x, p.y, p.z],
                        tangent: false,
                    });
                }
            }
        }

        if tube_events {
            tube_boundary_events(scene, a, b, *len, &to_t, &mut events);
        }
        offset += len;
    }
    events.sort_by(|x, y| x.t.total_cmp(&y.t));
    Ok(events)
}

/// Sign changes of `g(p) = min_s d(p, s) − ρ_Ñ(s)` along a segment. Steps are
/// `max(|g|, h)`, safe because `g` is 1-Lipschitz; `h` is a quarter of the
/// finest tube radius in the scene.
fn tube_boundary_events(
    scene: &DomainScene,
    a: &Point3,
    b: &Point3,
    len: f64,
    to_t: &dyn Fn(f64) -> f64,
    events: &mut Vec<CrossingEvent>,
) {
    let g = |s: f64| scene.tube_gap(&(a + (b - a) * s), |j| scene.tubes.rho_ntilde(j));
    let h = scene.tubes.rho_ntilde(scene.max_level - 1) / 4.0;
    let mut s = 0.0;
    let mut gs = g(0.0);
    while s < 1.0 {
        let step = (gs.abs().max(h)) / len;
        let s2 = (s + step).min(1.0);
        let g2 = g(s2);
        if (gs <= 0.0) != (g2 <= 0.0) {
            let (mut lo, mut hi) = (s, s2);
            for _ in 0..60 {
                let m = 0.5 * (lo + hi);
                if (g(m) <= 0.0) == (gs <= 0.0) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let p = a + (b - a) * hi;
            events.push(CrossingEvent {
                t: to_t(hi),
                target: CrossingTarget::TubeBoundary,
                sign: if gs <= 0.0 { 1 } else { -1 },
                location: [p.x, p.y, p.z],
                tangent: false,
            });
        }
        s = s2;
        gs = g2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurveClass {
    X1,
    X2,
    X3,
}

/// Ambient classification of a closed curve relative to `∪𝒲`, `∂Ñ(Γ)` and `∪ℒ`.
pub fn classify_closed_curve(
    points: &[Point3],
    closed: bool,
    tol: f64,
    scene: &DomainScene,
) -> Result<Option<CurveClass>> {
    if !closed {
        return Err(invalid("curve must be closed"));
    }
    if points.len() < 3 {
        return Err(invalid("closed curve needs at least three vertices"));
    }
    let near_w = |p: &Point3| distance_to_w(p, scene).is_some_and(|(d, _)| d <= tol);
    if points.iter().all(near_w) {
        return Ok(Some(CurveClass::X1));
    }
    if points.iter().all(|p| !near_w(p) && scene.tube_gap(p, |j| scene.tubes.rho_ntilde(j)).abs() <= tol) {
        return Ok(Some(CurveClass::X2));
    }
    if points.iter().all(|p| l_disk_at(p, scene, tol).is_some()) {
        return Ok(Some(CurveClass::X3));
    }
    Ok(None)
}

/// Seed of a χ expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum ChiSeed {
    Cells(Vec<CellAddress>),
    Polyline(Vec<Point3>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiRegion {
    #[serde(serialize_with = "ser_cells")]
    pub cells: BTreeSet<CellAddress>,
    pub generation: u32,
}

fn ser_cells<S: serde::Serializer>(v: &BTreeSet<CellAddress>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|c| c.to_string()))
}

/// Whether segment `[a, b]` meets the closed region `cone(square) ∩ {r0 ≤ |p| ≤ r1}`.
#[allow(clippy::too_many_arguments)]
fn segment_meets_cone_shell(
    a: &Point3,
    b: &Point3,
    f: u8,
    bounds: (f64, f64, f64, f64),
    r0: f64,
    r1: f64,
    tol: f64,
) -> bool {
    let (axis, sign, ua, va) = face_frame(f);
    let (u0, u1, v0, v1) = bounds;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // Each constraint: g(p) = p[c] − w·sign·p[axis] scaled, g ≥ −tol.
    for (c, w, dir) in [(ua, u0, 1.0), (ua, u1, -1.0), (va, v0, 1.0), (va, v1, -1.0)] {
        let norm = (1.0 + w * w).sqrt();
        let ga = dir * (a[c] - w * sign * a[axis]) / norm + tol;
        let gb = dir * (b[c] - w * sign * b[axis]) / norm + tol;
        if ga < 0.0 && gb < 0.0 {
            return false;
        }
        if ga < 0.0 {
            lo = lo.max(ga / (ga - gb));
        } else if gb < 0.0 {
            hi = hi.min(ga / (ga - gb));
        }
        if lo > hi {
            return false;
        }
    }
    radial_overlap(a, b, lo, hi, r0, r1, tol)
}

/// Whether `|a + s(b − a)|` reaches `[r0, r1]` for some `s ∈ [lo, hi]`.
fn radial_overlap(a: &Point3, b: &Point3, lo: f64, hi: f64, r0: f64, r1: f64, tol: f64) -> bool {
    let d = b - a;
    let q = |s: f64| (a + d * s).norm();
    let qa = d.norm_squared();
    let (mut lo, mut hi) = (lo, hi);
    let outer = r1 + tol;
    if qa > 0.0 {
        // Restrict to |p| ≤ outer.
        let qb = 2.0 * a.dot(&d);
        let qc = a.norm_squared() - outer * outer;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return false;
        }
        let sq = disc.sqrt();
        lo = lo.max((-qb - sq) / (2.0 * qa));
        hi = hi.min((-qb + sq) / (2.0 * qa));
        if lo > hi {
            return false;
        }
    } else if q(lo) > outer {
        return false;
    }
    q(lo).max(q(hi)) >= r0 - tol
}

fn segment_meets_cell(a: &Point3, b: &Point3, cell: &CellAddress, tol: f64) -> bool {
    if cell.role == Role::CoreBall {
        return radial_overlap(a, b, 0.0, 1.0, 0.0, 0.5, tol);
    }
    segment_meets_cone_shell(a, b, cell.cube_face, square_bounds(cell), sphere_radius(cell.level), sphere_radius(cell.level + 1), tol)
}

/// Closed scene cells met by the segment, found by quadtree descent per shell.
fn cells_meeting_segment(a: &Point3, b: &Point3, max_level: u32, tol: f64, out: &mut BTreeSet<CellAddress>) {
    if segment_meets_cell(a, b, &CellAddress::CORE, tol) {
        out.insert(CellAddress::CORE);
    }
    for k in 1..max_level {
        let (r0, r1) = (sphere_radius(k), sphere_radius(k + 1));
        if !radial_overlap(a, b, 0.0, 1.0, r0, r1, tol) {
            continue;
        }
        let mut stack: Vec<CellAddress> = (0..6u8).map(|f| CellAddress::square(Role::ThreeCell, 1, f, 0, 0)).collect();
        while let Some(c) = stack.pop() {
            if !segment_meets_cone_shell(a, b, c.cube_face, square_bounds(&c), r0, r1, tol) {
                continue;
            }
            if c.level == k {
                out.insert(c);
            } else {
                let (iu, iv) = c.grid_index();
                for d in 0..4u32 {
                    stack.push(CellAddress::square(Role::ThreeCell, c.level + 1, c.cube_face, 2 * iu + (d & 1), 2 * iv + (d >> 1)));
                }
            }
        }
    }
}

pub const CHI_TOL: f64 = 1e-12;

/// `χᵢ(seed)`: closed cells meeting the seed, expanded `i − 1` times by adjacency.
/// A cell seed is taken as `χ₁` directly.
pub fn chi(seed: &ChiSeed, i: u32, scene: &DomainScene) -> Result<ChiRegion> {
    if i == 0 {
        return Err(invalid("generation starts at 1"));
    }
    let mut cells = BTreeSet::new();
    match seed {
        ChiSeed::Cells(c) => {
            if c.is_empty() {
                return Err(invalid("empty seed"));
            }
            for a in c {
                if !is_cell_of(a, scene.max_level) {
                    return Err(Error::UnknownCell(a.to_string()));
                }
                cells.insert(*a);
            }
        }
        ChiSeed::Polyline(pts) => {
            if pts.is_empty() {
                return Err(invalid("empty seed"));
            }
            if let Some(p) = pts.iter().find(|p| !(p.norm() < 1.0)) {
                return Err(Error::OutsideDomain([p.x, p.y, p.z]));
            }
            if pts.len() == 1 {
                cells_meeting_segment(&pts[0], &pts[0], scene.max_level, CHI_TOL, &mut cells);
            }
            for (a, b) in segments(pts, false) {
                cells_meeting_segment(a, b, scene.max_level, CHI_TOL, &mut cells);
            }
        }
    }
    let mut region = ChiRegion { cells, generation: 1 };
    while region.generation < i {
        region = expand(&region, scene.max_level)?;
    }
    Ok(region)
}

pub fn expand(region: &ChiRegion, max_level: u32) -> Result<ChiRegion> {
    let mut cells = region.cells.clone();
    for c in &region.cells {
        cells.extend(cell_neighbors(c, max_level)?);
    }
    Ok(ChiRegion { cells, generation: region.generation + 1 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSetEstimate {
    pub epsilon: f64,
    pub delta: f64,
    pub tail_count: usize,
    pub empty: bool,
    pub clusters: Vec<[f64; 3]>,
    pub coverage_fraction: f64,
    pub net_size: usize,
}

/// Fibonacci lattice of `n` unit vectors.
pub fn fibonacci_sphere(n: usize) -> Vec<Point3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            Point3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

struct Hash3 {
    cell: f64,
    map: HashMap<[i64; 3], Vec<usize>>,
}

impl Hash3 {
    fn new(points: &[Point3], cell: f64) -> Self {
        let mut map: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i);
        }
        Hash3 { cell, map }
    }

    fn key(p: &Point3, cell: f64) -> [i64; 3] {
        [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64]
    }

    fn any_within(&self, points: &[Point3], q: &Point3, r: f64) -> bool {
        let k = Self::key(q, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.map.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if ids.iter().any(|&i| (points[i] - q).norm() <= r) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// Finite-sample estimate of the limit set on the unit sphere.
pub fn estimate_limit_set(samples: &[Point3], delta: f64, epsilon: f64) -> Result<LimitSetEstimate> {
    if !(delta > 0.0 && delta < 0.25) || !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(invalid("delta and epsilon must lie in (0, 1/4)"));
    }
    if let Some(p) = samples.iter().find(|p| !(p.norm() < 1.0)) {
        return Err(Error::OutsideDomain([p.x, p.y, p.z]));
    }
    let tail: Vec<Point3> = samples.iter().filter(|p| p.norm() > 1.0 - delta).map(|p| p.normalize()).collect();
    let net_size = (16.0 * std::f64::consts::PI / (epsilon * epsilon)).ceil() as usize;
    if tail.is_empty() {
        return Ok(LimitSetEstimate {
            epsilon,
            delta,
            tail_count: 0,
            empty: true,
            clusters: Vec::new(),
            coverage_fraction: 0.0,
            net_size,
        });
    }
    let mut clusters: Vec<Point3> = Vec::new();
    let sep = epsilon / 2.0;
    let mut chash: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for p in &tail {
        let k = Hash3::key(p, sep);
        let mut near = false;
        'outer: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = chash.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if ids.iter().any(|&i| (clusters[i] - p).norm() < sep) {
                            near = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if !near {
            chash.entry(k).or_default().push(clusters.len());
            clusters.push(*p);
        }
    }
    let hash = Hash3::new(&tail, epsilon);
    let net = fibonacci_sphere(net_size);
    let covered = net.iter().filter(|q| hash.any_within(&tail, q, epsilon)).count();
    Ok(LimitSetEstimate {
        epsilon,
        delta,
        tail_count: tail.len(),
        empty: false,
        clusters: clusters.iter().map(|c| [c.x, c.y, c.z]).collect(),
        coverage_fraction: covered as f64 / net_size as f64,
        net_size,
    })
}

/// Lattice helper for tests and callers: projected direction of a lattice point.
pub fn lattice_direction(l: &Lattice) -> Point3 {
    lattice_point(l).normalize()
}
