//! The scaffold: the 1-skeleton Γ, its graded tubes, and the curve system Δ.
//!
//! Every element is derived from a cell address of the cube complex, so the
//! geometry can be regenerated or checked analytically from its id alone.
//! Curves are closed or open polylines, disks are stored analytically, and
//! patches are sampled grids.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{
    build_complex, face_frame, face_point, lattice_point, sphere_radius, square_bounds, CellAddress,
    CubeComplex, CubeLevel, Lattice, LevelSchedule, Role,
};
use crate::error::{invalid, Error, Result};
use crate::geom::{circle_samples, closest_on_segment, point_segment_distance, rotate_about, Aabb, Point3};
use crate::index::Bvh;

pub const DEFAULT_RESOLUTION: usize = 64;
pub const MIN_RESOLUTION: usize = 16;

/// Tube radii per level, as multiples of `2⁻ᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeSchedule {
    pub n_factor: f64,
    pub ntilde_factor: f64,
    pub nhat_edge_factor: f64,
    pub nhat_vertex_factor: f64,
}

impl Default for TubeSchedule {
    fn default() -> Self {
        TubeSchedule { n_factor: 1.0 / 400.0, ntilde_factor: 1.0 / 200.0, nhat_edge_factor: 0.1, nhat_vertex_factor: 0.01 }
    }
}

fn scale(k: u32) -> f64 {
    (-(k as f64)).exp2()
}

impl TubeSchedule {
    pub fn rho_n(&self, k: u32) -> f64 {
        self.n_factor * scale(k)
    }

    pub fn rho_ntilde(&self, k: u32) -> f64 {
        self.ntilde_factor * scale(k)
    }

    pub fn nhat_edge(&self, k: u32) -> f64 {
        self.nhat_edge_factor * scale(k)
    }

    pub fn nhat_vertex(&self, k: u32) -> f64 {
        self.nhat_vertex_factor * scale(k)
    }

    /// `ρ_N < ρ_Ñ < N̂ vertex radius < N̂ edge radius`.
    pub fn is_nested(&self) -> bool {
        0.0 < self.n_factor
            && self.n_factor < self.ntilde_factor
            && self.ntilde_factor < self.nhat_vertex_factor
            && self.nhat_vertex_factor < self.nhat_edge_factor
    }
}

/// Which N̂ stratum a radius refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratum {
    Edge,
    Vertex,
}

pub fn nhat_radius(kind: Stratum, k: u32) -> Result<f64> {
    let s = LevelSchedule::new(k)?;
    Ok(match kind {
        Stratum::Edge => s.nhat_edge_radius,
        Stratum::Vertex => s.nhat_vertex_radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    GammaArc,
    GammaRadialSegment,
    BetaEdgeCurve,
    BetaFaceCurve,
    WDisk,
    LDisk,
    SphericalFacePatch,
    RadialRectPatch,
    TubeComponent,
}

impl ElementKind {
    pub const ALL: [ElementKind; 9] = [
        ElementKind::GammaArc,
        ElementKind::GammaRadialSegment,
        ElementKind::BetaEdgeCurve,
        ElementKind::BetaFaceCurve,
        ElementKind::WDisk,
        ElementKind::LDisk,
        ElementKind::SphericalFacePatch,
        ElementKind::RadialRectPatch,
        ElementKind::TubeComponent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::GammaArc => "gamma_arc",
            ElementKind::GammaRadialSegment => "gamma_radial_segment",
            ElementKind::BetaEdgeCurve => "beta_edge_curve",
            ElementKind::BetaFaceCurve => "beta_face_curve",
            ElementKind::WDisk => "w_disk",
            ElementKind::LDisk => "l_disk",
            ElementKind::SphericalFacePatch => "spherical_face_patch",
            ElementKind::RadialRectPatch => "radial_rect_patch",
            ElementKind::TubeComponent => "tube_component",
        }
    }

    pub fn from_name(s: &str) -> Option<ElementKind> {
        ElementKind::ALL.into_iter().find(|k| k.name() == s)
    }

    fn tag(self) -> &'static str {
        match self {
            ElementKind::GammaArc => "ga",
            ElementKind::GammaRadialSegment => "gr",
            ElementKind::BetaEdgeCurve => "be",
            ElementKind::BetaFaceCurve => "bf",
            ElementKind::WDisk => "w",
            ElementKind::LDisk => "l",
            ElementKind::SphericalFacePatch => "sf",
            ElementKind::RadialRectPatch => "rr",
            ElementKind::TubeComponent => "tc",
        }
    }

    pub fn is_delta(self) -> bool {
        matches!(self, ElementKind::BetaEdgeCurve | ElementKind::BetaFaceCurve)
    }

    pub fn is_gamma(self) -> bool {
        matches!(self, ElementKind::GammaArc | ElementKind::GammaRadialSegment)
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Element identifier: a kind plus the cell address it is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId {
    pub source: CellAddress,
    pub kind: ElementKind,
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.tag(), self.source)
    }
}

impl FromStr for ElementId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, addr) = s.split_once(':').ok_or_else(|| Error::Malformed(format!("bad element id {s:?}")))?;
        let kind = ElementKind::ALL
            .into_iter()
            .find(|k| k.tag() == tag)
            .ok_or_else(|| Error::Malformed(format!("bad element id {s:?}")))?;
        Ok(ElementId { source: addr.parse()?, kind })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Polyline { points: Vec<Point3>, closed: bool },
    Disk { center: Point3, normal: Point3, radius: f64 },
    /// Row-major grid of `rows × cols` samples.
    Patch { rows: usize, cols: usize, points: Vec<Point3> },
    Points { points: Vec<Point3> },
}

impl Geometry {
    /// Representative samples; disks yield their center and `m` boundary points.
    pub fn samples(&self, m: usize) -> Vec<Point3> {
        match self {
            Geometry::Polyline { points, .. } | Geometry::Patch { points, .. } | Geometry::Points { points } => {
                points.clone()
            }
            Geometry::Disk { center, normal, radius } => {
                let mut out = vec![*center];
                out.extend(circle_samples(center, normal, *radius, m));
                out
            }
        }
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            Geometry::Disk { center, radius, .. } => Aabb::from_points([center]).inflate(*radius),
            Geometry::Polyline { points, .. } | Geometry::Patch { points, .. } | Geometry::Points { points } => {
                Aabb::from_points(points.iter())
            }
        }
    }

    pub fn polyline(&self) -> Option<(&[Point3], bool)> {
        match self {
            Geometry::Polyline { points, closed } => Some((points, *closed)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaffoldElement {
    pub id: ElementId,
    pub level: u32,
    pub geometry: Geometry,
}

impl ScaffoldElement {
    pub fn kind(&self) -> ElementKind {
        self.id.kind
    }
}

/// Inward unit normal of the great circle through `a`, `b`, oriented toward `inside`.
fn inward_normal(a: &Point3, b: &Point3, inside: &Point3) -> Point3 {
    let n = a.cross(b).normalize();
    if n.dot(inside) < 0.0 {
        -n
    } else {
        n
    }
}

/// Corner order of a square traversed as a loop.
const LOOP: [usize; 4] = [0, 1, 3, 2];

fn square_corner_dirs(level: &CubeLevel, addr: &CellAddress) -> [Point3; 4] {
    let (iu, iv) = addr.grid_index();
    let sq = &level.faces[level.face_index(addr.cube_face, iu, iv)];
    LOOP.map(|c| lattice_point(&level.vertices[sq.corners[c] as usize]).normalize())
}

/// Inner region of a spherical face: `{|p| = R, nᵢ·p ≥ s}` for the four edge
/// great circles, where `s = R sin ψ` puts the boundary at chord distance `ρ`
/// from each edge circle.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalInset {
    pub radius: f64,
    pub rho: f64,
    pub offset: f64,
    pub center: Point3,
    /// Inward edge normals, edge `i` joining loop corners `i` and `i + 1`.
    pub normals: [Point3; 4],
    pub corners: [Point3; 4],
}

impl SphericalInset {
    pub fn new(corner_dirs: [Point3; 4], radius: f64, rho: f64) -> Result<Self> {
        let center = corner_dirs.iter().sum::<Point3>().normalize();
        let normals: [Point3; 4] =
            std::array::from_fn(|i| inward_normal(&corner_dirs[i], &corner_dirs[(i + 1) % 4], &center));
        let psi = 2.0 * (rho / (2.0 * radius)).asin();
        let offset = radius * psi.sin();
        if offset >= radius * normals.iter().map(|n| n.dot(&center)).fold(f64::INFINITY, f64::min) {
            return Err(Error::Infeasible("inset wider than the face".into()));
        }
        let mut corners = [Point3::zeros(); 4];
        for i in 0..4 {
            let n1 = normals[(i + 3) % 4];
            let n2 = normals[i];
            let c = n1.dot(&n2);
            let a = offset / (1.0 + c);
            let base = (n1 + n2) * a;
            let m = n1.cross(&n2).normalize();
            let g2 = radius * radius - base.norm_squared();
            if g2 <= 0.0 {
                return Err(Error::Infeasible("inset corner does not exist".into()));
            }
            let g = g2.sqrt() * m.dot(&corner_dirs[i]).signum();
            corners[i] = base + m * g;
        }
        Ok(SphericalInset { radius, rho, offset, center: center * radius, normals, corners })
    }

    pub fn contains(&self, p: &Point3, tol: f64) -> bool {
        (p.norm() - self.radius).abs() <= tol
            && p.dot(&self.center) > 0.0
            && self.normals.iter().all(|n| n.dot(p) >= self.offset - tol)
    }

    /// Closed boundary polyline with `per_side` samples per side.
    pub fn boundary(&self, per_side: usize) -> Vec<Point3> {
        let mut out = Vec::with_capacity(4 * per_side);
        for i in 0..4 {
            let n = self.normals[i];
            let o = n * self.offset;
            let a = self.corners[i] - o;
            let b = self.corners[(i + 1) % 4] - o;
            let angle = a.cross(&b).norm().atan2(a.dot(&b));
            let axis = if a.cross(&b).dot(&n) >= 0.0 { n } else { -n };
            for j in 0..per_side {
                let t = j as f64 / per_side as f64;
                out.push(o + rotate_about(&a, &axis, t * angle));
            }
        }
        out
    }
}

/// Inner region of a radial rectangle, in the plane of its two radial sides.
/// In polar coordinates `(r, θ)` about the origin with `θ = 0` along the first
/// side, it is `r_in ≤ r ≤ r_out`, `y ≥ ρ`, and `sin Θ·x − cos Θ·y ≥ ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectInset {
    pub e1: Point3,
    pub e2: Point3,
    pub normal: Point3,
    pub theta: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub rho: f64,
}

impl RectInset {
    pub fn new(a: &Point3, b: &Point3, r_lo: f64, r_hi: f64, rho: f64) -> Result<Self> {
        let e1 = a.normalize();
        let normal = e1.cross(&b.normalize()).normalize();
        let e2 = normal.cross(&e1);
        let theta = e1.dot(&b.normalize()).clamp(-1.0, 1.0).acos();
        let inset = RectInset { e1, e2, normal, theta, r_lo, r_hi, rho };
        if 2.0 * rho >= r_hi - r_lo || inset.theta_range(inset.r_in()).is_none() {
            return Err(Error::Infeasible("inset wider than the rectangle".into()));
        }
        Ok(inset)
    }

    pub fn r_in(&self) -> f64 {
        self.r_lo + self.rho
    }

    pub fn r_out(&self) -> f64 {
        self.r_hi - self.rho
    }

    /// Angular extent of the inset at radius `r`.
    pub fn theta_range(&self, r: f64) -> Option<(f64, f64)> {
        let d = (self.rho / r).asin();
        let lo = d;
        let hi = self.theta - d;
        (lo < hi).then_some((lo, hi))
    }

    pub fn point(&self, r: f64, t: f64) -> Point3 {
        (self.e1 * t.cos() + self.e2 * t.sin()) * r
    }

    pub fn contains(&self, p: &Point3, tol: f64) -> bool {
        if p.dot(&self.normal).abs() > tol {
            return false;
        }
        let x = p.dot(&self.e1);
        let y = p.dot(&self.e2);
        let r = x.hypot(y);
        let (s, c) = self.theta.sin_cos();
        r >= self.r_in() - tol && r <= self.r_out() + tol && y >= self.rho - tol && s * x - c * y >= self.rho - tol
    }

    pub fn boundary(&self, per_side: usize) -> Vec<Point3> {
        let (ri, ro) = (self.r_in(), self.r_out());
        let mut out = Vec::with_capacity(4 * per_side);
        let lerp = |a: f64, b: f64, j: usize| a + (b - a) * j as f64 / per_side as f64;
        let (a0, a1) = self.theta_range(ri).expect("checked at construction");
        for j in 0..per_side {
            out.push(self.point(ri, lerp(a0, a1, j)));
        }
        for j in 0..per_side {
            let r = lerp(ri, ro, j);
            out.push(self.point(r, self.theta - (self.rho / r).asin()));
        }
        let (b0, b1) = self.theta_range(ro).expect("checked at construction");
        for j in 0..per_side {
            out.push(self.point(ro, lerp(b1, b0, j)));
        }
        for j in 0..per_side {
            let r = lerp(ro, ri, j);
            out.push(self.point(r, (self.rho / r).asin()));
        }
        out
    }
}

/// Distance from `p` to the great-circle arc of radius `radius` between the
/// directions `a` and `b` (shorter than a half circle).
pub fn arc_distance(p: &Point3, a: &Point3, b: &Point3, radius: f64) -> f64 {
    let (ua, ub) = (a.normalize(), b.normalize());
    let n = ua.cross(&ub).normalize();
    let q = p - n * p.dot(&n);
    let qn = q.norm();
    if qn > 0.0 {
        let u = q / qn;
        if ua.cross(&u).dot(&n) >= 0.0 && u.cross(&ub).dot(&n) >= 0.0 {
            return (p - u * radius).norm();
        }
    }
    (p - ua * radius).norm().min((p - ub * radius).norm())
}

/// Exact distance from `p` to a Γ element.
pub fn gamma_distance(e: &ScaffoldElement, p: &Point3) -> f64 {
    match (&e.id.kind, &e.geometry) {
        (ElementKind::GammaArc, Geometry::Polyline { points, .. }) => {
            let a = points[0];
            let b = points[points.len() - 1];
            arc_distance(p, &a, &b, a.norm())
        }
        (ElementKind::GammaRadialSegment, Geometry::Polyline { points, .. }) => {
            point_segment_distance(p, &points[0], &points[points.len() - 1])
        }
        _ => f64::INFINITY,
    }
}

/// The built labyrinth: complexes, schedules, elements, and search indices.
#[derive(Debug, Clone)]
pub struct DomainScene {
    pub max_level: u32,
    pub resolution: usize,
    pub complex: CubeComplex,
    pub levels: Vec<LevelSchedule>,
    pub tubes: TubeSchedule,
    pub elements: Vec<ScaffoldElement>,
    by_id: HashMap<ElementId, usize>,
    delta_index: Bvh,
    gamma_index: Bvh,
    w_index: Bvh,
}

impl DomainScene {
    /// Assemble a scene from elements (sorted by id) and build its indices.
    pub fn from_parts(
        max_level: u32,
        resolution: usize,
        tubes: TubeSchedule,
        mut elements: Vec<ScaffoldElement>,
    ) -> Result<DomainScene> {
        if max_level < 2 {
            return Err(invalid("max_level must be at least 2"));
        }
        let complex = build_complex(max_level)?;
        let levels = (1..=max_level).map(LevelSchedule::new).collect::<Result<Vec<_>>>()?;
        elements.par_sort_by_key(|e| e.id);
        let mut by_id = HashMap::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            if by_id.insert(e.id, i).is_some() {
                return Err(Error::InvariantViolation(format!("duplicate element id {}", e.id)));
            }
        }
        let index_of = |pred: fn(ElementKind) -> bool| {
            Bvh::build(
                elements
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| pred(e.kind()))
                    .map(|(i, e)| (i, e.geometry.aabb()))
                    .collect(),
            )
        };
        let delta_index = index_of(ElementKind::is_delta);
        let gamma_index = index_of(ElementKind::is_gamma);
        let w_index = index_of(|k| k == ElementKind::WDisk);
        Ok(DomainScene { max_level, resolution, complex, levels, tubes, elements, by_id, delta_index, gamma_index, w_index })
    }

    pub fn element(&self, id: &ElementId) -> Option<&ScaffoldElement> {
        self.by_id.get(id).map(|&i| &self.elements[i])
    }

    pub fn elements_of(&self, kind: ElementKind) -> impl Iterator<Item = &ScaffoldElement> + '_ {
        self.elements.iter().filter(move |e| e.kind() == kind)
    }

    pub fn delta(&self) -> impl Iterator<Item = &ScaffoldElement> + '_ {
        self.elements.iter().filter(|e| e.kind().is_delta())
    }

    pub fn delta_index(&self) -> &Bvh {
        &self.delta_index
    }

    pub fn gamma_index(&self) -> &Bvh {
        &self.gamma_index
    }

    pub fn w_index(&self) -> &Bvh {
        &self.w_index
    }

    /// Tube radius `ρ_N` attached to a Γ element or face.
    pub fn stratum_rho_n(&self, e: &ScaffoldElement) -> f64 {
        self.tubes.rho_n(e.level)
    }

    /// Nearest Γ element to `p` and its exact distance.
    pub fn nearest_gamma(&self, p: &Point3) -> Option<(f64, &ScaffoldElement)> {
        self.gamma_index
            .nearest(p, |i| gamma_distance(&self.elements[i], p))
            .map(|(d, i)| (d, &self.elements[i]))
    }

    /// `min over Γ strata s of d(p, s) − radius(s)`; nonpositive inside the tube.
    pub fn tube_gap(&self, p: &Point3, radius: impl Fn(u32) -> f64) -> f64 {
        // Largest radius among levels bounds the search window.
        let rmax = radius(1);
        let mut best = f64::INFINITY;
        let (d0, _) = match self.nearest_gamma(p) {
            Some(x) => x,
            None => return best,
        };
        for i in self.gamma_index.within(p, d0 + rmax) {
            let e = &self.elements[i];
            best = best.min(gamma_distance(e, p) - radius(e.level));
        }
        best
    }

    /// Spherical or rectangular inset for a face address.
    pub fn face_inset(&self, face: &CellAddress) -> Result<FaceInset> {
        face_inset(&self.complex, &self.tubes, face)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FaceInset {
    Spherical(SphericalInset),
    Rect(RectInset),
}

impl FaceInset {
    pub fn contains(&self, p: &Point3, tol: f64) -> bool {
        match self {
            FaceInset::Spherical(s) => s.contains(p, tol),
            FaceInset::Rect(r) => r.contains(p, tol),
        }
    }
}

fn edge_endpoints(level: &CubeLevel, addr: &CellAddress) -> (Lattice, Lattice) {
    let (iu, iv) = addr.grid_index();
    let sq = &level.faces[level.face_index(addr.cube_face, iu, iv)];
    let e = level.edges[sq.edges[addr.local_index as usize] as usize];
    (level.vertices[e[0] as usize], level.vertices[e[1] as usize])
}

fn vertex_lattice(level: &CubeLevel, addr: &CellAddress) -> Lattice {
    let (iu, iv) = addr.grid_index();
    let sq = &level.faces[level.face_index(addr.cube_face, iu, iv)];
    level.vertices[sq.corners[addr.local_index as usize] as usize]
}

pub fn face_inset(complex: &CubeComplex, tubes: &TubeSchedule, face: &CellAddress) -> Result<FaceInset> {
    let level = complex.level(face.level).ok_or_else(|| Error::UnknownCell(face.to_string()))?;
    let k = face.level;
    match face.role {
        Role::SphericalFace => Ok(FaceInset::Spherical(SphericalInset::new(
            square_corner_dirs(level, face),
            sphere_radius(k),
            tubes.rho_n(k),
        )?)),
        Role::RadialRectFace => {
            let (a, b) = edge_endpoints(level, face);
            Ok(FaceInset::Rect(RectInset::new(
                &lattice_point(&a),
                &lattice_point(&b),
                sphere_radius(k),
                sphere_radius(k + 1),
                tubes.rho_n(k + 1),
            )?))
        }
        _ => Err(Error::UnknownCell(face.to_string())),
    }
}

struct Builder<'a> {
    complex: &'a CubeComplex,
    tubes: TubeSchedule,
    resolution: usize,
    max_level: u32,
}

impl Builder<'_> {
    fn arc_samples(&self) -> usize {
        (self.resolution / 4 + 1).max(5)
    }

    fn patch_side(&self) -> usize {
        (self.resolution / 8 + 1).max(5)
    }

    fn level_elements(&self, k: u32) -> Result<Vec<ScaffoldElement>> {
        let level = self.complex.level(k).expect("level in range");
        let r0 = sphere_radius(k);
        let r1 = sphere_radius(k + 1);
        let mut out = Vec::new();

        for (i, e) in level.edges.iter().enumerate() {
            let addr = level.edge_addr[i];
            let a = lattice_point(&level.vertices[e[0] as usize]);
            let b = lattice_point(&level.vertices[e[1] as usize]);
            let (ua, ub) = (a.normalize(), b.normalize());
            out.push(ScaffoldElement {
                id: ElementId { source: addr, kind: ElementKind::GammaArc },
                level: k,
                geometry: Geometry::Polyline {
                    points: crate::geom::great_arc_samples(&ua, &ub, r0, self.arc_samples()),
                    closed: false,
                },
            });
            let (beta, w) = beta_edge_arc(&ua, &ub, r0, self.tubes.rho_ntilde(k), self.resolution)?;
            out.push(ScaffoldElement { id: ElementId { source: addr, kind: ElementKind::BetaEdgeCurve }, level: k, geometry: beta });
            out.push(ScaffoldElement { id: ElementId { source: addr, kind: ElementKind::WDisk }, level: k, geometry: w });

            let rect = addr.with(Role::RadialRectFace, addr.local_index);
            out.push(ScaffoldElement {
                id: ElementId { source: rect, kind: ElementKind::RadialRectPatch },
                level: k,
                geometry: rect_patch(&ua, &ub, r0, r1, self.patch_side()),
            });
            let inset = RectInset::new(&ua, &ub, r0, r1, self.tubes.rho_n(k + 1))?;
            let (beta, l) = inset_curves(&FaceInset::Rect(inset), self.resolution, self.patch_side());
            out.push(ScaffoldElement { id: ElementId { source: rect, kind: ElementKind::BetaFaceCurve }, level: k, geometry: beta });
            out.push(ScaffoldElement { id: ElementId { source: rect, kind: ElementKind::LDisk }, level: k, geometry: l });
        }

        for (i, v) in level.vertices.iter().enumerate() {
            let addr = level.vertex_addr[i];
            let u = lattice_point(v).normalize();
            out.push(ScaffoldElement {
                id: ElementId { source: addr, kind: ElementKind::GammaRadialSegment },
                level: k,
                geometry: Geometry::Polyline { points: vec![u * r0, u * r1], closed: false },
            });
            let (beta, w) = beta_edge_radial(&u, r0, r1, self.tubes.rho_ntilde(k), self.resolution)?;
            out.push(ScaffoldElement { id: ElementId { source: addr, kind: ElementKind::BetaEdgeCurve }, level: k, geometry: beta });
            out.push(ScaffoldElement { id: ElementId { source: addr, kind: ElementKind::WDisk }, level: k, geometry: w });
        }

        for sq in &level.faces {
            let addr = CellAddress::square(Role::SphericalFace, k, sq.cube_face, sq.iu, sq.iv);
            out.push(ScaffoldElement {
                id: ElementId { source: addr, kind: ElementKind::SphericalFacePatch },
                level: k,
                geometry: spherical_patch(&addr, r0, self.patch_side()),
            });
            let inset = SphericalInset::new(square_corner_dirs(level, &addr), r0, self.tubes.rho_n(k))?;
            let (beta, l) = inset_curves(&FaceInset::Spherical(inset), self.resolution, self.patch_side());
            out.push(ScaffoldElement { id: ElementId { source: addr, kind: ElementKind::BetaFaceCurve }, level: k, geometry: beta });
            out.push(ScaffoldElement { id: ElementId { source: addr, kind: ElementKind::LDisk }, level: k, geometry: l });
        }

        out.extend(self.tube_components_on_sphere(k));
        if k + 1 == self.max_level {
            out.extend(self.tube_components_on_sphere(k + 1));
        }
        Ok(out)
    }

    /// Vertex stars of Γ on the sphere of index `j`, thickened by `ρ_Ñ`.
    fn tube_components_on_sphere(&self, j: u32) -> Vec<ScaffoldElement> {
        let top = j == self.max_level;
        let vlevel = self.complex.level(if top { j - 1 } else { j }).expect("level in range");
        let rj = sphere_radius(j);
        let mut incident: Vec<Vec<u32>> = vec![Vec::new(); vlevel.vertices.len()];
        if !top {
            for (i, e) in vlevel.edges.iter().enumerate() {
                incident[e[0] as usize].push(i as u32);
                incident[e[1] as usize].push(i as u32);
            }
        }
        let lower = if j >= 2 { self.complex.level(j - 1) } else { None };
        let ns = 4;
        let nc = 8;
        vlevel
            .vertices
            .iter()
            .enumerate()
            .map(|(vi, l)| {
                let u = lattice_point(l).normalize();
                let v = u * rj;
                let mut pts = Vec::new();
                let mut half_edge = |from: Point3, to: Point3, rho: f64, curved: bool| {
                    for s in 0..=ns {
                        let t = s as f64 / ns as f64;
                        let mut c = from + (to - from) * t;
                        if curved {
                            c = c.normalize() * rj;
                        }
                        pts.extend(circle_samples(&c, &(to - from), rho, nc));
                    }
                };
                for &ei in &incident[vi] {
                    let e = vlevel.edges[ei as usize];
                    let other = if e[0] as usize == vi { e[1] } else { e[0] };
                    let w = lattice_point(&vlevel.vertices[other as usize]).normalize();
                    let mid = (u + w).normalize() * rj;
                    half_edge(v, mid, self.tubes.rho_ntilde(j), true);
                }
                if !top {
                    let r1 = sphere_radius(j + 1);
                    half_edge(v, u * (0.5 * (rj + r1)), self.tubes.rho_ntilde(j), false);
                }
                let has_lower = top || lower.map(|lv| lv.vertex_index(l).is_some()).unwrap_or(false);
                if has_lower {
                    let r0 = sphere_radius(j - 1);
                    half_edge(v, u * (0.5 * (rj + r0)), self.tubes.rho_ntilde(j - 1), false);
                }
                let addr = vlevel.vertex_addr[vi];
                let source = CellAddress { level: j, ..addr };
                ScaffoldElement {
                    id: ElementId { source, kind: ElementKind::TubeComponent },
                    level: j,
                    geometry: Geometry::Points { points: pts },
                }
            })
            .collect()
    }
}

fn beta_edge_arc(ua: &Point3, ub: &Point3, radius: f64, rho: f64, m: usize) -> Result<(Geometry, Geometry)> {
    let chord = ub - ua;
    if chord.norm() * radius < 1e-12 {
        return Err(invalid("degenerate edge"));
    }
    let center = (ua + ub).normalize() * radius;
    let normal = chord.normalize();
    Ok((
        Geometry::Polyline { points: circle_samples(&center, &normal, rho, m), closed: true },
        Geometry::Disk { center, normal, radius: rho },
    ))
}

fn beta_edge_radial(u: &Point3, r0: f64, r1: f64, rho: f64, m: usize) -> Result<(Geometry, Geometry)> {
    if r1 - r0 < 1e-12 {
        return Err(invalid("degenerate edge"));
    }
    let center = u * (0.5 * (r0 + r1));
    Ok((
        Geometry::Polyline { points: circle_samples(&center, u, rho, m), closed: true },
        Geometry::Disk { center, normal: *u, radius: rho },
    ))
}

fn spherical_patch(addr: &CellAddress, radius: f64, g: usize) -> Geometry {
    let (u0, u1, v0, v1) = square_bounds(addr);
    let mut points = Vec::with_capacity(g * g);
    for i in 0..g {
        for j in 0..g {
            let u = u0 + (u1 - u0) * j as f64 / (g - 1) as f64;
            let v = v0 + (v1 - v0) * i as f64 / (g - 1) as f64;
            points.push(face_point(addr.cube_face, u, v).normalize() * radius);
        }
    }
    Geometry::Patch { rows: g, cols: g, points }
}

fn rect_patch(ua: &Point3, ub: &Point3, r0: f64, r1: f64, g: usize) -> Geometry {
    let angle = ua.dot(ub).clamp(-1.0, 1.0).acos();
    let mut points = Vec::with_capacity(g * g);
    for i in 0..g {
        let r = r0 + (r1 - r0) * i as f64 / (g - 1) as f64;
        for j in 0..g {
            let t = j as f64 / (g - 1) as f64;
            points.push(crate::geom::slerp(ua, ub, angle, t) * r);
        }
    }
    Geometry::Patch { rows: g, cols: g, points }
}

/// `β(F)` and the sampled inner disk `L(F)` it bounds.
fn inset_curves(inset: &FaceInset, m: usize, rows: usize) -> (Geometry, Geometry) {
    let per_side = (m / 4).max(4);
    match inset {
        FaceInset::Spherical(s) => {
            let boundary = s.boundary(per_side);
            let cols = boundary.len();
            let mut points = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                let t = i as f64 / (rows - 1) as f64;
                for b in &boundary {
                    points.push((s.center + (b - s.center) * t).normalize() * s.radius);
                }
            }
            (Geometry::Polyline { points: boundary, closed: true }, Geometry::Patch { rows, cols, points })
        }
        FaceInset::Rect(r) => {
            let boundary = r.boundary(per_side);
            let cols = rows;
            let mut points = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                let rad = r.r_in() + (r.r_out() - r.r_in()) * i as f64 / (rows - 1) as f64;
                let (t0, t1) = r.theta_range(rad).expect("inside the inset radii");
                for j in 0..cols {
                    points.push(r.point(rad, t0 + (t1 - t0) * j as f64 / (cols - 1) as f64));
                }
            }
            (Geometry::Polyline { points: boundary, closed: true }, Geometry::Patch { rows, cols, points })
        }
    }
}

/// Build the scene to level `max_level` with the default tube schedule.
pub fn build_delta(max_level: u32, resolution: usize) -> Result<DomainScene> {
    build_delta_with(max_level, resolution, TubeSchedule::default())
}

pub fn build_delta_with(max_level: u32, resolution: usize, tubes: TubeSchedule) -> Result<DomainScene> {
    if max_level < 2 {
        return Err(invalid("max_level must be at least 2"));
    }
    if resolution < MIN_RESOLUTION {
        return Err(invalid(format!("resolution must be at least {MIN_RESOLUTION}")));
    }
    let complex = build_complex(max_level)?;
    let builder = Builder { complex: &complex, tubes, resolution, max_level };
    let per_level: Vec<Vec<ScaffoldElement>> =
        (1..max_level).into_par_iter().map(|k| builder.level_elements(k)).collect::<Result<_>>()?;
    let elements = per_level.into_iter().flatten().collect();
    DomainScene::from_parts(max_level, resolution, tubes, elements)
}

fn check_level(k: u32, scene: &DomainScene) -> Result<()> {
    if k == 0 || k >= scene.max_level {
        return Err(invalid(format!("level {k} outside 1..{}", scene.max_level)));
    }
    Ok(())
}

/// Γ arcs on sphere `k` and radial segments of shell `k`.
pub fn gamma_elements(k: u32, scene: &DomainScene) -> Result<Vec<&ScaffoldElement>> {
    check_level(k, scene)?;
    Ok(scene.elements.iter().filter(|e| e.level == k && e.kind().is_gamma()).collect())
}

/// `β(α)` and `W(α)` for a Γ edge, given by its arc or radial-segment element id.
pub fn beta_edge<'a>(alpha: &ElementId, scene: &'a DomainScene) -> Result<(&'a ScaffoldElement, &'a ScaffoldElement)> {
    if !alpha.kind.is_gamma() {
        return Err(invalid(format!("{alpha} is not a Γ edge")));
    }
    let find = |kind| {
        scene
            .element(&ElementId { source: alpha.source, kind })
            .ok_or_else(|| Error::UnknownCell(alpha.to_string()))
    };
    Ok((find(ElementKind::BetaEdgeCurve)?, find(ElementKind::WDisk)?))
}

/// `β(F)` and `L(F)` for a spherical-face or radial-rectangle address.
pub fn beta_face<'a>(face: &CellAddress, scene: &'a DomainScene) -> Result<(&'a ScaffoldElement, &'a ScaffoldElement)> {
    if !matches!(face.role, Role::SphericalFace | Role::RadialRectFace) {
        return Err(invalid(format!("{face} is not a face")));
    }
    let find = |kind| {
        scene.element(&ElementId { source: *face, kind }).ok_or_else(|| Error::UnknownCell(face.to_string()))
    };
    Ok((find(ElementKind::BetaFaceCurve)?, find(ElementKind::LDisk)?))
}

/// Tube components meeting shell `k`: the vertex stars on sphere `k` and the
/// stars on sphere `k + 1` over level-`k` vertices.
pub fn tube_components(k: u32, scene: &DomainScene) -> Result<Vec<&ScaffoldElement>> {
    check_level(k, scene)?;
    let level = scene.complex.level(k).expect("checked");
    Ok(scene
        .elements_of(ElementKind::TubeComponent)
        .filter(|e| {
            e.level == k || (e.level == k + 1 && star_lattice(&scene.complex, e).is_some_and(|l| level.vertex_index(&l).is_some()))
        })
        .collect())
}

/// Lattice point of the Γ vertex behind a tube component.
pub fn star_lattice(complex: &CubeComplex, e: &ScaffoldElement) -> Option<Lattice> {
    let a = e.id.source;
    let vl = if a.level == complex.max_level() { a.level - 1 } else { a.level };
    let lv = complex.level(vl)?;
    let grid = 1u64 << (lv.level - 1);
    let addr = CellAddress { level: lv.level, ..a };
    if addr.morton >= grid * grid || addr.local_index > 3 {
        return None;
    }
    Some(vertex_lattice(lv, &addr))
}

/// Lattice endpoints of the edge behind an arc, rectangle or edge-curve id.
pub fn edge_lattice(complex: &CubeComplex, addr: &CellAddress) -> Option<(Lattice, Lattice)> {
    let lv = complex.level(addr.level)?;
    Some(edge_endpoints(lv, addr))
}

/// Nearest point on a Γ element (used for crossing diagnostics).
pub fn gamma_closest(e: &ScaffoldElement, p: &Point3) -> Option<Point3> {
    let (points, _) = e.geometry.polyline()?;
    let a = points[0];
    let b = points[points.len() - 1];
    match e.kind() {
        ElementKind::GammaRadialSegment => Some(closest_on_segment(p, &a, &b).0),
        ElementKind::GammaArc => {
            let r = a.norm();
            let n = a.cross(&b).normalize();
            let q = p - n * p.dot(&n);
            let u = q.normalize();
            if q.norm() > 0.0 && a.cross(&u).dot(&n) >= 0.0 && u.cross(&b).dot(&n) >= 0.0 {
                Some(u * r)
            } else if (p - a).norm() <= (p - b).norm() {
                Some(a)
            } else {
                Some(b)
            }
        }
        _ => None,
    }
}

/// The cube-face axis frame, re-exported for callers working in face charts.
pub fn frame(f: u8) -> (usize, f64, usize, usize) {
    face_frame(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{p3, point_polyline_distance};

    fn scene(k: u32) -> DomainScene {
        build_delta(k, 32).unwrap()
    }

    #[test]
    fn nhat_examples() {
        assert_eq!(nhat_radius(Stratum::Edge, 1).unwrap(), 0.05);
        assert_eq!(nhat_radius(Stratum::Vertex, 2).unwrap(), 0.0025);
        assert_eq!(nhat_radius(Stratum::Edge, 3).unwrap(), 0.0125);
    }

    #[test]
    fn gamma_counts() {
        let s = scene(3);
        for (k, arcs, segs) in [(1, 12, 8), (2, 48, 26)] {
            let g = gamma_elements(k, &s).unwrap();
            assert_eq!(g.iter().filter(|e| e.kind() == ElementKind::GammaArc).count(), arcs);
            assert_eq!(g.iter().filter(|e| e.kind() == ElementKind::GammaRadialSegment).count(), segs);
        }
        assert!(gamma_elements(3, &s).is_err());
        assert!(gamma_elements(0, &s).is_err());
    }

    #[test]
    fn arcs_lie_on_their_sphere() {
        let s = scene(3);
        for e in s.elements_of(ElementKind::GammaArc) {
            let r = sphere_radius(e.level);
            for p in e.geometry.samples(0) {
                assert!((p.norm() - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn radial_segment_over_pole() {
        let s = scene(4);
        let seg = s
            .elements_of(ElementKind::GammaRadialSegment)
            .find(|e| {
                let (p, _) = e.geometry.polyline().unwrap();
                e.level == 3 && (p[0].normalize() - p3(0.0, 0.0, 1.0)).norm() < 1e-15
            })
            .unwrap();
        let (p, _) = seg.geometry.polyline().unwrap();
        assert_eq!(p[0].z, 0.875);
        assert_eq!(p[1].z, 0.9375);
        let (beta, w) = beta_edge(&seg.id, &s).unwrap();
        match &w.geometry {
            Geometry::Disk { center, normal, radius } => {
                assert_eq!(*radius, 0.000625);
                assert!((center - p3(0.0, 0.0, (0.875 + 0.9375) / 2.0)).norm() < 1e-15);
                assert!((normal - p3(0.0, 0.0, 1.0)).norm() < 1e-15);
            }
            _ => panic!("disk expected"),
        }
        let (bp, _) = beta.geometry.polyline().unwrap();
        for q in bp {
            let d = point_segment_distance(q, &p[0], &p[1]);
            assert!((d - 0.000625).abs() < 1e-9);
        }
    }

    #[test]
    fn spherical_inset_sits_at_rho_from_edges() {
        let s = scene(3);
        let face = CellAddress::square(Role::SphericalFace, 1, 0, 0, 0);
        let (beta, _) = beta_face(&face, &s).unwrap();
        let arcs: Vec<&ScaffoldElement> = s.elements_of(ElementKind::GammaArc).filter(|e| e.level == 1).collect();
        let rho = 1.0 / 800.0;
        for p in beta.geometry.samples(0) {
            assert!((p.norm() - 0.5).abs() < 1e-12);
            let d = arcs.iter().map(|a| gamma_distance(a, &p)).fold(f64::INFINITY, f64::min);
            assert!((d - rho).abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn rect_inset_sits_at_rho_from_boundary() {
        let s = scene(3);
        for r in s.elements_of(ElementKind::BetaFaceCurve).filter(|e| e.id.source.role == Role::RadialRectFace) {
            let rho = s.tubes.rho_n(r.level + 1);
            let mut gamma: Vec<&ScaffoldElement> = Vec::new();
            for p in r.geometry.samples(0).iter().step_by(5) {
                if gamma.is_empty() {
                    gamma = s.elements.iter().filter(|e| e.kind().is_gamma()).collect();
                }
                let d = gamma.iter().map(|g| gamma_distance(g, p)).fold(f64::INFINITY, f64::min);
                // Outer arcs on the last sphere are not in the scene at K = 3.
                if r.level == 1 {
                    assert!((d - rho).abs() < 1e-12, "{} {d}", r.id);
                }
            }
        }
    }

    #[test]
    fn l_disks_avoid_the_thin_tube() {
        let s = scene(3);
        for l in s.elements_of(ElementKind::LDisk).filter(|e| e.level == 1) {
            let rho = match l.id.source.role {
                Role::SphericalFace => s.tubes.rho_n(1),
                _ => s.tubes.rho_n(2),
            };
            for p in l.geometry.samples(0) {
                let (d, _) = s.nearest_gamma(&p).unwrap();
                assert!(d >= rho - 1e-12);
            }
        }
    }

    #[test]
    fn delta_counts_per_shell() {
        let s = scene(4);
        for (k, expect) in [(1, 38), (2, 146), (3, 578)] {
            assert_eq!(s.delta().filter(|e| e.level == k).count(), expect);
        }
    }

    #[test]
    fn tube_component_counts_and_containment() {
        let s = scene(3);
        let c1 = tube_components(1, &s).unwrap();
        assert_eq!(c1.len(), 16);
        let c2 = tube_components(2, &s).unwrap();
        assert_eq!(c2.len(), 26 + 26);
        for c in c1 {
            for p in c.geometry.samples(0) {
                let gap = s.tube_gap(&p, |k| s.tubes.nhat_vertex(k));
                assert!(gap < 0.0);
            }
        }
    }

    #[test]
    fn ids_round_trip_and_are_sorted() {
        let s = scene(2);
        assert!(s.elements.windows(2).all(|w| w[0].id < w[1].id));
        for e in &s.elements {
            assert_eq!(e.id.to_string().parse::<ElementId>().unwrap(), e.id);
        }
    }

    #[test]
    fn beta_circles_link_arcs() {
        let s = scene(3);
        for a in s.elements_of(ElementKind::GammaArc) {
            let (beta, _) = beta_edge(&a.id, &s).unwrap();
            let (pts, closed) = beta.geometry.polyline().unwrap();
            let (ap, _) = a.geometry.polyline().unwrap();
            let d = point_polyline_distance(&((ap[0] + ap[ap.len() - 1]) / 2.0), pts, closed);
            assert!(d > 0.0);
        }
    }
}
