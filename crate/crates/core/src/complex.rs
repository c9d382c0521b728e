//! Refined cube-boundary complexes and the cell structure of the ball.
//!
//! The level-`n` complex subdivides each face of `∂[-1,1]³` into a
//! `2ⁿ⁻¹ × 2ⁿ⁻¹` grid of squares. Combinatorics are exact: every vertex is a
//! point of an integer lattice (`LATTICE_UNIT` units per cube half-width), and
//! floating point only enters when a lattice point is radially projected.
//!
//! The ball complex stacks these: shell `k` is the region between the spheres
//! of radius `1 − 2⁻ᵏ` and `1 − 2⁻⁽ᵏ⁺¹⁾`; its 3-cells are radial products of the
//! level-`k` spherical squares, and the ball of radius ½ is the core cell.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{p3, Point3};

/// Cube half-width in lattice units. Supports refinement levels up to 21.
pub const LATTICE_UNIT: i64 = 1 << 20;

/// Default cap on `build_complex` levels (level 10 has 1.5M faces).
pub const DEFAULT_LEVEL_CAP: u32 = 10;

pub type Lattice = [i64; 3];

/// Radius `1 − 2⁻ᵏ` of the sphere `𝕊²ₖ` (`k = 0` gives the origin).
pub fn sphere_radius(k: u32) -> f64 {
    1.0 - (-(k as f64)).exp2()
}

/// Scale-graded radii attached to a level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSchedule {
    pub level: u32,
    pub sphere_radius: f64,
    pub shell_thickness: f64,
    pub nhat_edge_radius: f64,
    pub nhat_vertex_radius: f64,
}

impl LevelSchedule {
    pub fn new(level: u32) -> Result<Self> {
        if level == 0 {
            return Err(invalid("levels start at 1"));
        }
        let scale = (-(level as f64)).exp2();
        Ok(LevelSchedule {
            level,
            sphere_radius: sphere_radius(level),
            shell_thickness: scale * 0.5,
            nhat_edge_radius: scale / 10.0,
            nhat_vertex_radius: scale / 100.0,
        })
    }
}

/// Which kind of cell an address names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Vertex,
    Edge,
    SphericalFace,
    RadialRectFace,
    ThreeCell,
    CoreBall,
}

impl Role {
    fn tag(self) -> char {
        match self {
            Role::Vertex => 'V',
            Role::Edge => 'E',
            Role::SphericalFace => 'S',
            Role::RadialRectFace => 'R',
            Role::ThreeCell => 'C',
            Role::CoreBall => 'B',
        }
    }

    fn from_tag(c: char) -> Option<Role> {
        Some(match c {
            'V' => Role::Vertex,
            'E' => Role::Edge,
            'S' => Role::SphericalFace,
            'R' => Role::RadialRectFace,
            'C' => Role::ThreeCell,
            'B' => Role::CoreBall,
            _ => return None,
        })
    }
}

/// Identifier of a cell: `(role, level, cube face, quadtree path, local index)`.
///
/// The quadtree path is stored as a Morton code whose base-4 digits, most
/// significant first, are the path; child order is `(−,−), (+,−), (−,+), (+,+)`
/// in face-local `(u, v)`. Because the path length is fixed by the level, the
/// derived ordering is the lexicographic order on the tuple.
///
/// Edges and vertices are owned by the first incident square in address order;
/// `local_index` then names the edge (`0`: v-low, `1`: u-high, `2`: v-high,
/// `3`: u-low) or the corner (`0`..`3` in child order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellAddress {
    pub role: Role,
    pub level: u32,
    pub cube_face: u8,
    pub morton: u64,
    pub local_index: u8,
}

impl CellAddress {
    pub const CORE: CellAddress = CellAddress {
        role: Role::CoreBall,
        level: 0,
        cube_face: 0,
        morton: 0,
        local_index: 0,
    };

    pub fn square(role: Role, level: u32, cube_face: u8, iu: u32, iv: u32) -> Self {
        CellAddress { role, level, cube_face, morton: morton_encode(iu, iv), local_index: 0 }
    }

    /// Quadtree path digits, most significant first (length `level − 1`).
    pub fn quadtree_path(&self) -> Vec<u8> {
        if self.role == Role::CoreBall || self.level < 2 {
            return Vec::new();
        }
        let len = self.level - 1;
        (0..len).map(|i| ((self.morton >> (2 * (len - 1 - i))) & 3) as u8).collect()
    }

    /// Face-local grid indices of the owning square.
    pub fn grid_index(&self) -> (u32, u32) {
        morton_decode(self.morton)
    }

    /// Same square, different role and local index.
    pub fn with(&self, role: Role, local_index: u8) -> Self {
        CellAddress { role, local_index, ..*self }
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.role == Role::CoreBall {
            return write!(f, "B");
        }
        let path: String = self.quadtree_path().iter().map(|d| char::from(b'0' + d)).collect();
        let path = if path.is_empty() { "-".to_string() } else { path };
        write!(f, "{}{}.{}.{}.{}", self.role.tag(), self.level, self.cube_face, path, self.local_index)
    }
}

impl FromStr for CellAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Malformed(format!("bad cell address {s:?}"));
        if s == "B" {
            return Ok(CellAddress::CORE);
        }
        let mut chars = s.chars();
        let role = chars.next().and_then(Role::from_tag).ok_or_else(bad)?;
        let rest: Vec<&str> = chars.as_str().split('.').collect();
        if rest.len() != 4 {
            return Err(bad());
        }
        let level: u32 = rest[0].parse().map_err(|_| bad())?;
        let cube_face: u8 = rest[1].parse().map_err(|_| bad())?;
        let local_index: u8 = rest[3].parse().map_err(|_| bad())?;
        if level == 0 || cube_face > 5 {
            return Err(bad());
        }
        let digits = if rest[2] == "-" { "" } else { rest[2] };
        if digits.len() != (level - 1) as usize {
            return Err(bad());
        }
        let mut morton = 0u64;
        for c in digits.chars() {
            let d = c.to_digit(4).ok_or_else(bad)? as u64;
            morton = morton * 4 + d;
        }
        Ok(CellAddress { role, level, cube_face, morton, local_index })
    }
}

pub fn morton_encode(iu: u32, iv: u32) -> u64 {
    let mut m = 0u64;
    for b in 0..32 {
        m |= (((iu >> b) & 1) as u64) << (2 * b);
        m |= (((iv >> b) & 1) as u64) << (2 * b + 1);
    }
    m
}

pub fn morton_decode(m: u64) -> (u32, u32) {
    let (mut iu, mut iv) = (0u32, 0u32);
    for b in 0..32 {
        iu |= (((m >> (2 * b)) & 1) as u32) << b;
        iv |= (((m >> (2 * b + 1)) & 1) as u32) << b;
    }
    (iu, iv)
}

/// Normal axis, sign and `(u, v)` axes of cube face `f`
/// (`0: +x, 1: −x, 2: +y, 3: −y, 4: +z, 5: −z`).
pub fn face_frame(f: u8) -> (usize, f64, usize, usize) {
    let axis = (f / 2) as usize;
    let sign = if f % 2 == 0 { 1.0 } else { -1.0 };
    (axis, sign, (axis + 1) % 3, (axis + 2) % 3)
}

/// Cube face hit by the ray through `d`, with face-local coordinates in
/// `[-1, 1]²`. Ties go to the lowest axis.
pub fn cube_face_of_direction(d: &Point3) -> Option<(u8, f64, f64)> {
    let mut axis = 0;
    for i in 1..3 {
        if d[i].abs() > d[axis].abs() {
            axis = i;
        }
    }
    let m = d[axis].abs();
    if m == 0.0 {
        return None;
    }
    let f = 2 * axis as u8 + u8::from(d[axis] < 0.0);
    let (_, _, ua, va) = face_frame(f);
    Some((f, d[ua] / m, d[va] / m))
}

/// Point of `∂[-1,1]³` on face `f` with local coordinates `(u, v)`.
pub fn face_point(f: u8, u: f64, v: f64) -> Point3 {
    let (axis, sign, ua, va) = face_frame(f);
    let mut p = Point3::zeros();
    p[axis] = sign;
    p[ua] = u;
    p[va] = v;
    p
}

pub fn lattice_point(l: &Lattice) -> Point3 {
    let s = LATTICE_UNIT as f64;
    p3(l[0] as f64 / s, l[1] as f64 / s, l[2] as f64 / s)
}

/// Radial projection `R·p/|p|` of a cube point onto the sphere of radius `R`.
pub fn project_to_sphere(p: &Point3, radius: f64) -> Result<Point3> {
    let n = p.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(invalid("cannot project the origin"));
    }
    if !(radius > 0.0 && radius < 1.0) {
        return Err(invalid(format!("sphere radius {radius} outside (0, 1)")));
    }
    Ok(p * (radius / n))
}

/// `(faces, edges, vertices)` of the level-`n` complex.
pub fn refine_counts(n: u32) -> Result<(u64, u64, u64)> {
    if n == 0 {
        return Err(invalid("refinement level must be positive"));
    }
    let overflow = || invalid(format!("counts overflow at level {n}"));
    let q = 4u64.checked_pow(n - 1).ok_or_else(overflow)?;
    let faces = q.checked_mul(6).ok_or_else(overflow)?;
    let edges = q.checked_mul(12).ok_or_else(overflow)?;
    let vertices = faces.checked_add(2).ok_or_else(overflow)?;
    Ok((faces, edges, vertices))
}

/// A square of a refined cube complex.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    pub cube_face: u8,
    pub iu: u32,
    pub iv: u32,
    /// Vertex indices in child order `(−,−), (+,−), (−,+), (+,+)`.
    pub corners: [u32; 4],
    /// Edge indices: v-low, u-high, v-high, u-low.
    pub edges: [u32; 4],
}

/// Corner pairs of the four square edges, in local edge order.
pub const EDGE_CORNERS: [(usize, usize); 4] = [(0, 1), (1, 3), (2, 3), (0, 2)];

#[derive(Debug, Clone)]
pub struct CubeLevel {
    pub level: u32,
    /// Squares per cube edge, `2ⁿ⁻¹`.
    pub grid: u32,
    pub vertices: Vec<Lattice>,
    pub vertex_addr: Vec<CellAddress>,
    pub edges: Vec<[u32; 2]>,
    pub edge_addr: Vec<CellAddress>,
    pub faces: Vec<Square>,
    vertex_lookup: HashMap<Lattice, u32>,
    edge_lookup: HashMap<(Lattice, Lattice), u32>,
}

fn edge_key(a: Lattice, b: Lattice) -> (Lattice, Lattice) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl CubeLevel {
    fn build(level: u32) -> CubeLevel {
        let grid = 1u32 << (level - 1);
        let step = 2 * LATTICE_UNIT / grid as i64;
        let nfaces = 6 * (grid as usize).pow(2);
        let mut out = CubeLevel {
            level,
            grid,
            vertices: Vec::with_capacity(nfaces + 2),
            vertex_addr: Vec::with_capacity(nfaces + 2),
            edges: Vec::with_capacity(2 * nfaces),
            edge_addr: Vec::with_capacity(2 * nfaces),
            faces: Vec::with_capacity(nfaces),
            vertex_lookup: HashMap::with_capacity(nfaces + 2),
            edge_lookup: HashMap::with_capacity(2 * nfaces),
        };
        for f in 0..6u8 {
            let (axis, sign, ua, va) = face_frame(f);
            for m in 0..(grid as u64).pow(2) {
                let (iu, iv) = morton_decode(m);
                let owner = CellAddress::square(Role::SphericalFace, level, f, iu, iv);
                let mut corners = [0u32; 4];
                for (c, corner) in corners.iter_mut().enumerate() {
                    let mut l = [0i64; 3];
                    l[axis] = sign as i64 * LATTICE_UNIT;
                    l[ua] = -LATTICE_UNIT + (iu as i64 + (c & 1) as i64) * step;
                    l[va] = -LATTICE_UNIT + (iv as i64 + (c >> 1) as i64) * step;
                    *corner = match out.vertex_lookup.get(&l) {
                        Some(&i) => i,
                        None => {
                            let i = out.vertices.len() as u32;
                            out.vertices.push(l);
                            out.vertex_addr.push(owner.with(Role::Vertex, c as u8));
                            out.vertex_lookup.insert(l, i);
                            i
                        }
                    };
                }
                let mut edges = [0u32; 4];
                for (e, &(c0, c1)) in EDGE_CORNERS.iter().enumerate() {
                    let a = corners[c0];
                    let b = corners[c1];
                    let key = edge_key(out.vertices[a as usize], out.vertices[b as usize]);
                    edges[e] = match out.edge_lookup.get(&key) {
                        Some(&i) => i,
                        None => {
                            let i = out.edges.len() as u32;
                            out.edges.push([a, b]);
                            out.edge_addr.push(owner.with(Role::Edge, e as u8));
                            out.edge_lookup.insert(key, i);
                            i
                        }
                    };
                }
                out.faces.push(Square { cube_face: f, iu, iv, corners, edges });
            }
        }
        out
    }

    pub fn face_index(&self, cube_face: u8, iu: u32, iv: u32) -> usize {
        cube_face as usize * (self.grid as usize).pow(2) + morton_encode(iu, iv) as usize
    }

    pub fn vertex_index(&self, l: &Lattice) -> Option<u32> {
        self.vertex_lookup.get(l).copied()
    }

    pub fn edge_index(&self, a: &Lattice, b: &Lattice) -> Option<u32> {
        self.edge_lookup.get(&edge_key(*a, *b)).copied()
    }

    /// Indices of the four children (at the next level) of face `i`.
    pub fn children_of(&self, i: usize) -> [usize; 4] {
        let sq = &self.faces[i];
        let child_grid = 2 * self.grid as usize;
        let base = sq.cube_face as usize * child_grid * child_grid
            + 4 * morton_encode(sq.iu, sq.iv) as usize;
        [base, base + 1, base + 2, base + 3]
    }

    /// Lattice length of a level edge.
    pub fn step(&self) -> i64 {
        2 * LATTICE_UNIT / self.grid as i64
    }
}

/// The refined complexes `𝒳₁ … 𝒳ₙ`.
#[derive(Debug, Clone)]
pub struct CubeComplex {
    pub levels: Vec<CubeLevel>,
}

impl CubeComplex {
    pub fn max_level(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn level(&self, n: u32) -> Option<&CubeLevel> {
        if n == 0 {
            return None;
        }
        self.levels.get(n as usize - 1)
    }

    /// `V − E + F` of level `n`.
    pub fn euler_characteristic(&self, n: u32) -> Option<i64> {
        self.level(n)
            .map(|l| l.vertices.len() as i64 - l.edges.len() as i64 + l.faces.len() as i64)
    }
}

pub fn build_complex(max_level: u32) -> Result<CubeComplex> {
    build_complex_capped(max_level, DEFAULT_LEVEL_CAP)
}

pub fn build_complex_capped(max_level: u32, cap: u32) -> Result<CubeComplex> {
    if max_level == 0 {
        return Err(invalid("max_level must be positive"));
    }
    if max_level > cap || max_level > 21 {
        return Err(Error::Resource(format!("max_level {max_level} exceeds the cap {cap}")));
    }
    let levels = (1..=max_level).map(CubeLevel::build).collect();
    Ok(CubeComplex { levels })
}

/// Closed lattice box `[min, max]` per axis of the level square behind `addr`.
pub fn square_box(addr: &CellAddress) -> ([i64; 3], [i64; 3]) {
    let (axis, sign, ua, va) = face_frame(addr.cube_face);
    let grid = 1i64 << (addr.level - 1);
    let step = 2 * LATTICE_UNIT / grid;
    let (iu, iv) = addr.grid_index();
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    lo[axis] = sign as i64 * LATTICE_UNIT;
    hi[axis] = lo[axis];
    lo[ua] = -LATTICE_UNIT + iu as i64 * step;
    hi[ua] = lo[ua] + step;
    lo[va] = -LATTICE_UNIT + iv as i64 * step;
    hi[va] = lo[va] + step;
    (lo, hi)
}

/// Face-local bounds `(u0, u1, v0, v1)` of the square behind `addr`.
pub fn square_bounds(addr: &CellAddress) -> (f64, f64, f64, f64) {
    let (_, _, ua, va) = face_frame(addr.cube_face);
    let (lo, hi) = square_box(addr);
    let s = LATTICE_UNIT as f64;
    (lo[ua] as f64 / s, hi[ua] as f64 / s, lo[va] as f64 / s, hi[va] as f64 / s)
}

/// Level-`level` squares whose closure meets the closed lattice box `b`.
fn squares_meeting(b: &([i64; 3], [i64; 3]), level: u32) -> Vec<CellAddress> {
    let grid = 1i64 << (level - 1);
    let step = 2 * LATTICE_UNIT / grid;
    let mut out = Vec::new();
    for f in 0..6u8 {
        let (axis, sign, ua, va) = face_frame(f);
        let plane = sign as i64 * LATTICE_UNIT;
        if plane < b.0[axis] || plane > b.1[axis] {
            continue;
        }
        let range = |lo: i64, hi: i64| {
            let first = ((lo + LATTICE_UNIT) as f64 / step as f64).ceil() as i64 - 1;
            let last = (hi + LATTICE_UNIT).div_euclid(step);
            (first.max(0), last.min(grid - 1))
        };
        let (u0, u1) = range(b.0[ua], b.1[ua]);
        let (v0, v1) = range(b.0[va], b.1[va]);
        for iu in u0..=u1 {
            for iv in v0..=v1 {
                out.push(CellAddress::square(Role::ThreeCell, level, f, iu as u32, iv as u32));
            }
        }
    }
    out
}

/// All 3-cells of the ball complex built to `max_level`: the core ball plus
/// the cells of shells `1..max_level`.
pub fn enumerate_cells(max_level: u32) -> Result<Vec<CellAddress>> {
    if max_level == 0 {
        return Err(invalid("max_level must be positive"));
    }
    if max_level > DEFAULT_LEVEL_CAP {
        return Err(Error::Resource(format!("max_level {max_level} exceeds the cap")));
    }
    let mut out = Vec::new();
    for k in 1..max_level {
        let grid = 1u64 << (k - 1);
        for f in 0..6u8 {
            for m in 0..grid * grid {
                out.push(CellAddress { role: Role::ThreeCell, level: k, cube_face: f, morton: m, local_index: 0 });
            }
        }
    }
    out.push(CellAddress::CORE);
    Ok(out)
}

/// Whether `addr` names a 3-cell of the complex built to `max_level`.
pub fn is_cell_of(addr: &CellAddress, max_level: u32) -> bool {
    match addr.role {
        Role::CoreBall => *addr == CellAddress::CORE,
        Role::ThreeCell => {
            addr.level >= 1
                && addr.level < max_level
                && addr.cube_face < 6
                && addr.local_index == 0
                && addr.morton < 1u64 << (2 * (addr.level - 1))
        }
        _ => false,
    }
}

/// 3-cells whose closure meets the closure of `cell` (excluding `cell`).
pub fn cell_neighbors(cell: &CellAddress, max_level: u32) -> Result<Vec<CellAddress>> {
    if !is_cell_of(cell, max_level) {
        return Err(Error::UnknownCell(cell.to_string()));
    }
    let mut out = Vec::new();
    if cell.role == Role::CoreBall {
        if max_level >= 2 {
            for f in 0..6u8 {
                out.push(CellAddress::square(Role::ThreeCell, 1, f, 0, 0));
            }
        }
        return Ok(out);
    }
    let k = cell.level;
    let b = square_box(cell);
    if k == 1 {
        out.push(CellAddress::CORE);
    }
    for l in [k.saturating_sub(1), k, k + 1] {
        if l == 0 || l >= max_level {
            continue;
        }
        for c in squares_meeting(&b, l) {
            if c != *cell {
                out.push(c);
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Closed-cell membership of `p` (within `tol`).
pub fn cell_contains_point(cell: &CellAddress, p: &Point3, tol: f64) -> bool {
    let r = p.norm();
    if cell.role == Role::CoreBall {
        return r <= 0.5 + tol;
    }
    let k = cell.level;
    if r < sphere_radius(k) - tol || r > sphere_radius(k + 1) + tol {
        return false;
    }
    let (axis, sign, ua, va) = face_frame(cell.cube_face);
    let (u0, u1, v0, v1) = square_bounds(cell);
    // Closed cone over the square: p_axis·sign > 0 and u0 ≤ p_u / (sign p_axis) ≤ u1 (same for v),
    // measured as distances to the bounding planes.
    let h = p[axis] * sign;
    let plane_dist = |c: f64, coord: f64| (coord - c * h) / (1.0 + c * c).sqrt();
    if h <= -tol {
        return false;
    }
    plane_dist(u0, p[ua]) >= -tol
        && -plane_dist(u1, p[ua]) >= -tol
        && plane_dist(v0, p[va]) >= -tol
        && -plane_dist(v1, p[va]) >= -tol
}

/// Sample points covering the boundary of the closed 3-cell (its six faces,
/// `m × m` each). Used for enclosing-ball and closure-distance oracles.
pub fn sample_cell_closure(cell: &CellAddress, m: usize) -> Vec<Point3> {
    let m = m.max(2);
    if cell.role == Role::CoreBall {
        // Two-cap sphere lattice of radius 1/2.
        let mut out = Vec::new();
        for f in 0..6u8 {
            for i in 0..m {
                for j in 0..m {
                    let u = -1.0 + 2.0 * i as f64 / (m - 1) as f64;
                    let v = -1.0 + 2.0 * j as f64 / (m - 1) as f64;
                    out.push(face_point(f, u, v).normalize() * 0.5);
                }
            }
        }
        return out;
    }
    let (u0, u1, v0, v1) = square_bounds(cell);
    let r0 = sphere_radius(cell.level);
    let r1 = sphere_radius(cell.level + 1);
    let lerp = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (m - 1) as f64;
    let dir = |u: f64, v: f64| face_point(cell.cube_face, u, v).normalize();
    let mut out = Vec::with_capacity(6 * m * m);
    for i in 0..m {
        for j in 0..m {
            let d = dir(lerp(u0, u1, i), lerp(v0, v1, j));
            out.push(d * r0);
            out.push(d * r1);
        }
    }
    for i in 0..m {
        for j in 0..m {
            let r = lerp(r0, r1, j);
            let t = lerp(0.0, 1.0, i);
            for d in [
                dir(u0 + (u1 - u0) * t, v0),
                dir(u0 + (u1 - u0) * t, v1),
                dir(u0, v0 + (v1 - v0) * t),
                dir(u1, v0 + (v1 - v0) * t),
            ] {
                out.push(d * r);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_formula_examples() {
        assert_eq!(refine_counts(1).unwrap(), (6, 12, 8));
        assert_eq!(refine_counts(2).unwrap(), (24, 48, 26));
        assert_eq!(refine_counts(5).unwrap(), (1536, 3072, 1538));
        assert!(refine_counts(0).is_err());
        assert!(refine_counts(40).is_err());
    }

    #[test]
    fn built_sizes_and_euler_characteristic() {
        let c = build_complex(6).unwrap();
        for n in 1..=6 {
            let l = c.level(n).unwrap();
            let (f, e, v) = refine_counts(n).unwrap();
            assert_eq!((l.faces.len() as u64, l.edges.len() as u64, l.vertices.len() as u64), (f, e, v));
            assert_eq!(c.euler_characteristic(n), Some(2));
        }
    }

    #[test]
    fn level_one_is_the_cube_boundary() {
        let c = build_complex(1).unwrap();
        let l = &c.levels[0];
        for v in &l.vertices {
            assert!(v.iter().all(|x| x.abs() == LATTICE_UNIT));
        }
        for e in &l.edges {
            let a = lattice_point(&l.vertices[e[0] as usize]);
            let b = lattice_point(&l.vertices[e[1] as usize]);
            assert_eq!((a - b).norm(), 2.0);
        }
    }

    #[test]
    fn level_two_edges_have_length_one() {
        let c = build_complex(2).unwrap();
        let l = &c.levels[1];
        for e in &l.edges {
            let a = lattice_point(&l.vertices[e[0] as usize]);
            let b = lattice_point(&l.vertices[e[1] as usize]);
            assert_eq!((a - b).norm(), 1.0);
        }
    }

    #[test]
    fn children_tile_parent() {
        let c = build_complex(4).unwrap();
        for n in 1..4 {
            let parent = c.level(n).unwrap();
            let child = c.level(n + 1).unwrap();
            for (i, sq) in parent.faces.iter().enumerate() {
                let kids = parent.children_of(i);
                let pa = CellAddress::square(Role::SphericalFace, n, sq.cube_face, sq.iu, sq.iv);
                let (pu0, pu1, pv0, pv1) = square_bounds(&pa);
                let mut area = 0.0;
                let mut kid_vertices = Vec::new();
                for (d, &k) in kids.iter().enumerate() {
                    let ks = &child.faces[k];
                    assert_eq!(ks.cube_face, sq.cube_face);
                    assert_eq!((ks.iu, ks.iv), (2 * sq.iu + (d as u32 & 1), 2 * sq.iv + (d as u32 >> 1)));
                    let ka = CellAddress::square(Role::SphericalFace, n + 1, ks.cube_face, ks.iu, ks.iv);
                    assert_eq!(&ka.quadtree_path()[..(n - 1) as usize], &pa.quadtree_path()[..]);
                    let (u0, u1, v0, v1) = square_bounds(&ka);
                    area += (u1 - u0) * (v1 - v0);
                    kid_vertices.extend(ks.corners.iter().map(|&v| child.vertices[v as usize]));
                }
                assert!((area - (pu1 - pu0) * (pv1 - pv0)).abs() < 1e-12);
                for (&cv, e) in sq.corners.iter().zip(0..) {
                    let _ = e;
                    assert!(kid_vertices.contains(&parent.vertices[cv as usize]));
                }
                for &e in &sq.edges {
                    let [a, b] = parent.edges[e as usize];
                    let (la, lb) = (parent.vertices[a as usize], parent.vertices[b as usize]);
                    let mid = [(la[0] + lb[0]) / 2, (la[1] + lb[1]) / 2, (la[2] + lb[2]) / 2];
                    assert!(kid_vertices.contains(&mid));
                }
            }
        }
    }

    #[test]
    fn addresses_are_unique_and_sorted() {
        let c = build_complex(4).unwrap();
        for l in &c.levels {
            for list in [&l.vertex_addr, &l.edge_addr] {
                assert!(list.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn address_text_round_trip() {
        let a = CellAddress { role: Role::Edge, level: 4, cube_face: 3, morton: 0b10_01_11, local_index: 2 };
        assert_eq!(a.quadtree_path(), vec![2, 1, 3]);
        assert_eq!(a.to_string(), "E4.3.213.2");
        assert_eq!("E4.3.213.2".parse::<CellAddress>().unwrap(), a);
        assert_eq!("B".parse::<CellAddress>().unwrap(), CellAddress::CORE);
        assert!("E4.3.21.2".parse::<CellAddress>().is_err());
        let l1 = CellAddress::square(Role::ThreeCell, 1, 0, 0, 0);
        assert_eq!(l1.to_string().parse::<CellAddress>().unwrap(), l1);
    }

    #[test]
    fn projection_examples() {
        let q = project_to_sphere(&p3(1.0, 0.0, 0.0), 0.5).unwrap();
        assert_eq!(q, p3(0.5, 0.0, 0.0));
        let q = project_to_sphere(&p3(1.0, 1.0, 1.0), 0.75).unwrap();
        for i in 0..3 {
            assert!((q[i] - 0.4330127).abs() < 1e-7);
        }
        let q = project_to_sphere(&p3(1.0, 0.5, 0.0), 0.5).unwrap();
        assert!((q.x - 0.4472136).abs() < 1e-7 && (q.y - 0.2236068).abs() < 1e-7 && q.z == 0.0);
        assert!(project_to_sphere(&Point3::zeros(), 0.5).is_err());
    }

    #[test]
    fn projected_level_one_edges_lie_on_great_circles() {
        let c = build_complex(1).unwrap();
        let l = &c.levels[0];
        for e in &l.edges {
            let a = lattice_point(&l.vertices[e[0] as usize]);
            let b = lattice_point(&l.vertices[e[1] as usize]);
            let n = a.cross(&b).normalize();
            for k in 1..=6 {
                let r = sphere_radius(k);
                for i in 0..=20 {
                    let p = a + (b - a) * (i as f64 / 20.0);
                    let q = project_to_sphere(&p, r).unwrap();
                    assert!(q.dot(&n).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn enumerate_cells_examples() {
        assert_eq!(enumerate_cells(1).unwrap(), vec![CellAddress::CORE]);
        let c2 = enumerate_cells(2).unwrap();
        assert_eq!(c2.len(), 7);
        assert!(c2.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_cells(3).unwrap().len(), 31);
    }

    #[test]
    fn core_ball_touches_every_shell_one_cell() {
        let n = cell_neighbors(&CellAddress::CORE, 3).unwrap();
        assert_eq!(n.len(), 6);
        assert!(n.iter().all(|c| c.level == 1));
    }

    #[test]
    fn antipodal_cells_are_not_adjacent() {
        let a = CellAddress::square(Role::ThreeCell, 2, 0, 0, 0);
        let b = CellAddress::square(Role::ThreeCell, 2, 1, 0, 0);
        assert!(!cell_neighbors(&a, 4).unwrap().contains(&b));
    }

    #[test]
    fn shell_one_neighbors_at_level_three() {
        let c = CellAddress::square(Role::ThreeCell, 1, 4, 0, 0);
        let n = cell_neighbors(&c, 3).unwrap();
        // core + 4 side neighbours (shell 1, the +z face touches every face but −z)
        assert!(n.contains(&CellAddress::CORE));
        assert_eq!(n.iter().filter(|a| a.level == 1).count(), 4);
        // its own 4 children plus the ring of level-2 squares around it on the 4 side faces
        assert_eq!(n.iter().filter(|a| a.level == 2).count(), 4 + 4 * 2);
    }

    #[test]
    fn cell_membership_of_sample_points() {
        let c = CellAddress::square(Role::ThreeCell, 2, 0, 1, 2);
        for p in sample_cell_closure(&c, 5) {
            assert!(cell_contains_point(&c, &p, 1e-12));
        }
        assert!(!cell_contains_point(&c, &p3(0.0, 0.0, 0.8), 1e-12));
    }
}
