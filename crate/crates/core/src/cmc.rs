//! Constant-mean-curvature surfaces of revolution.
//!
//! Profiles live in a half-plane with coordinates `(r, z)`, `r` the distance
//! to the rotation axis. A unit-speed profile with tangent angle `φ` solves
//!
//! ```text
//! r' = cos φ,   z' = sin φ,   φ' = 2H − sin φ / r
//! ```
//!
//! and conserves `r·sin φ − H·r²`. Principal curvatures are `κ₁ = φ'` and
//! `κ₂ = sin φ / r`; the mean curvature is their average. Positive `H` means
//! the mean curvature vector points toward the axis.
//!
//! The module also builds the nodoid barrier annulus, its rotational sweep,
//! and a nested-sphere surface of revolution joined by polar necks.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::complex::sphere_radius;
use crate::error::{invalid, Error, Result};
use crate::geom::{rotate_about, Point3};
use crate::io::fmt_f64;
use crate::mesh::{revolve, Mesh};
use crate::query::estimate_limit_set;

pub const DEFAULT_STEP: f64 = 1e-4;

/// Barrier base profile: a nodoid of mean curvature one.
pub const NODOID_H: f64 = 1.0;
pub const NODOID_C: f64 = -0.5;
/// Default curvature scale of the barrier relative to the requested bound.
pub const BARRIER_MARGIN: f64 = 1.25;

/// Numerically integrated profile curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileCurve {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub phi: Vec<f64>,
    /// Target mean curvature.
    pub h: f64,
    /// First-integral constant `r·sin φ − H·r²`.
    pub c: f64,
    /// Integration stopped at the axis.
    pub truncated: bool,
}

type State = [f64; 3];

fn deriv(h: f64, st: &State) -> State {
    let (r, phi) = (st[0], st[2]);
    [phi.cos(), phi.sin(), 2.0 * h - phi.sin() / r]
}

fn rk4(h: f64, st: &State, dt: f64) -> State {
    let add = |a: &State, k: &State, f: f64| [a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2]];
    let k1 = deriv(h, st);
    let k2 = deriv(h, &add(st, &k1, dt / 2.0));
    let k3 = deriv(h, &add(st, &k2, dt / 2.0));
    let k4 = deriv(h, &add(st, &k3, dt));
    [0, 1, 2].map(|i| st[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Axis radius of the vertical-tangent point (`φ = π/2`) solving `r − H r² = c`.
/// Takes the smallest positive root.
pub fn neck_radius(h: f64, c: f64) -> Result<f64> {
    if !h.is_finite() || !c.is_finite() {
        return Err(invalid("H and c must be finite"));
    }
    if h == 0.0 {
        return if c > 0.0 { Ok(c) } else { Err(Error::Infeasible(format!("no neck for H = 0, c = {c}"))) };
    }
    let disc = 1.0 - 4.0 * h * c;
    if disc < 0.0 {
        return Err(Error::Infeasible(format!("no neck radius for H = {h}, c = {c}")));
    }
    let sq = disc.sqrt();
    let mut roots = [(1.0 - sq) / (2.0 * h), (1.0 + sq) / (2.0 * h)];
    roots.sort_by(f64::total_cmp);
    roots
        .into_iter()
        .find(|&r| r > 1e-12)
        .ok_or_else(|| Error::Infeasible(format!("no positive neck radius for H = {h}, c = {c}")))
}

/// Integrates with fixed signed step from `st`, stopping when `r` drops below
/// twice the step size. Returns `(s, state)` samples including the start.
fn integrate_from(h: f64, st: State, length: f64, step: f64) -> (Vec<(f64, State)>, bool) {
    let n = (length.abs() / step).ceil().max(1.0) as usize;
    let dt = length / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, st));
    let mut cur = st;
    for i in 1..=n {
        let next = rk4(h, &cur, dt);
        if !(next[0] >= 2.0 * step) || next.iter().any(|v| !v.is_finite()) {
            return (out, true);
        }
        out.push((i as f64 * dt, next));
        cur = next;
    }
    (out, false)
}

/// Profile started at its neck (`φ = π/2`, `z = 0`) and integrated for `s_max`.
pub fn integrate_cmc_profile(h: f64, c: f64, s_max: f64, step: f64) -> Result<ProfileCurve> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step must be positive"));
    }
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(invalid("s_max must be positive"));
    }
    if h == 0.0 && c == 0.0 {
        return Err(invalid("H and c cannot both vanish"));
    }
    if s_max / step > 1e8 {
        return Err(Error::Resource(format!("{} steps requested", s_max / step)));
    }
    let r0 = neck_radius(h, c)?;
    let (samples, truncated) = integrate_from(h, [r0, 0.0, FRAC_PI_2], s_max, step);
    Ok(ProfileCurve::from_samples(h, c, &samples, truncated))
}

impl ProfileCurve {
    fn from_samples(h: f64, c: f64, samples: &[(f64, State)], truncated: bool) -> Self {
        ProfileCurve {
            s: samples.iter().map(|x| x.0).collect(),
            r: samples.iter().map(|x| x.1[0]).collect(),
            z: samples.iter().map(|x| x.1[1]).collect(),
            phi: samples.iter().map(|x| x.1[2]).collect(),
            h,
            c,
            truncated,
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn first_integral(&self, i: usize) -> f64 {
        self.r[i] * self.phi[i].sin() - self.h * self.r[i] * self.r[i]
    }

    /// Maximum drift of the first integral, relative to `max(|c|, |H|·r₀², r₀·10⁻³)`.
    pub fn first_integral_drift(&self) -> f64 {
        let r0 = self.r[0];
        let scale = self.c.abs().max(self.h.abs() * r0 * r0).max(r0 * 1e-3);
        (0..self.len()).map(|i| (self.first_integral(i) - self.c).abs()).fold(0.0, f64::max) / scale
    }

    fn phi_derivative(&self, i: usize) -> f64 {
        let n = self.len();
        if n < 3 {
            return if n == 2 { (self.phi[1] - self.phi[0]) / (self.s[1] - self.s[0]) } else { 0.0 };
        }
        let j = i.clamp(1, n - 2);
        let (a, b, c) = (j - 1, j, j + 1);
        let (x, xa, xb, xc) = (self.s[i], self.s[a], self.s[b], self.s[c]);
        let (fa, fb, fc) = (self.phi[a], self.phi[b], self.phi[c]);
        fa * ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc))
            + fb * ((x - xa) + (x - xc)) / ((xb - xa) * (xb - xc))
            + fc * ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb))
    }

    /// Mean curvature from finite-difference `κ₁` and exact `κ₂` at each sample.
    pub fn numeric_mean_curvature(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let k1 = self.phi_derivative(i);
                let k2 = if self.r[i] > 0.0 { self.phi[i].sin() / self.r[i] } else { k1 };
                0.5 * (k1 + k2)
            })
            .collect()
    }

    /// Largest deviation of the numeric mean curvature from `H` over samples with
    /// `r ≥ r_min`.
    pub fn mean_curvature_deviation(&self, r_min: f64) -> f64 {
        self.numeric_mean_curvature()
            .iter()
            .zip(&self.r)
            .filter(|(_, r)| **r >= r_min)
            .map(|(hn, _)| (hn - self.h).abs())
            .fold(0.0, f64::max)
    }

    /// Largest finite-difference residual of `r' = cos φ`, `z' = sin φ`.
    pub fn ode_residual(&self) -> f64 {
        (1..self.len().saturating_sub(1))
            .map(|i| {
                let ds = self.s[i + 1] - self.s[i - 1];
                let dr = (self.r[i + 1] - self.r[i - 1]) / ds - self.phi[i].cos();
                let dz = (self.z[i + 1] - self.z[i - 1]) / ds - self.phi[i].sin();
                dr.abs().max(dz.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Homothety by `1/λ`: lengths shrink by `λ`, mean curvature grows by `λ`.
    pub fn scaled(&self, lambda: f64) -> ProfileCurve {
        let sc = |v: &Vec<f64>| v.iter().map(|x| x / lambda).collect();
        ProfileCurve {
            s: sc(&self.s),
            r: sc(&self.r),
            z: sc(&self.z),
            phi: self.phi.clone(),
            h: self.h * lambda,
            c: self.c / lambda,
            truncated: self.truncated,
        }
    }

    /// Plain-text table with columns `s r z phi h_numeric`.
    pub fn table(&self) -> String {
        let hn = self.numeric_mean_curvature();
        let rows = (0..self.len()).map(|i| [self.s[i], self.r[i], self.z[i], self.phi[i], hn[i]]);
        profile_table(rows)
    }
}

fn profile_table(rows: impl Iterator<Item = [f64; 5]>) -> String {
    let mut out = String::from("# s r z phi h_numeric\n");
    for row in rows {
        let cols: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cols.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureOrientation {
    TowardAxis,
    AwayFromAxis,
}

/// Nodoid annulus scaled into a thin spherical shell near a point of the unit sphere.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierAnnulus {
    /// Scaled profile segment; `z` is measured along the axis from `offset`.
    pub profile: ProfileCurve,
    /// Unit direction of the rotation axis (the ray through `p`).
    pub axis: Point3,
    /// Axial position of the profile's `z = 0`.
    pub offset: f64,
    pub lambda: f64,
    /// Ring profile `(r, axial height)` used for the mesh and for contact tests.
    pub rings: Vec<(f64, f64)>,
    #[serde(skip)]
    pub mesh: Mesh,
    pub min_mean_curvature: f64,
    pub orientation: CurvatureOrientation,
    pub delta: f64,
    pub epsilon: f64,
    pub samples_checked: usize,
    pub containment_violations: usize,
    pub boundary_error: f64,
}

const BARRIER_RINGS: usize = 101;
const BARRIER_SIDES: usize = 128;

/// Fits a scaled nodoid piece spanning `1 − δ ≤ |x| ≤ 1` inside the ε-ball about `p`
/// with mean curvature at least `H0`.
pub fn fit_barrier(delta: f64, epsilon: f64, h0: f64, p: &Point3) -> Result<BarrierAnnulus> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon must be positive"));
    }
    if !(delta > 0.0 && delta < epsilon / 8.0) {
        return Err(invalid(format!("delta {delta} outside (0, epsilon/8) = (0, {})", epsilon / 8.0)));
    }
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(invalid("H0 must be positive"));
    }
    if !(p.norm() > 0.0 && p.iter().all(|v| v.is_finite())) {
        return Err(invalid("p must be a nonzero vector"));
    }
    let axis = p.normalize();
    let mut lambda = BARRIER_MARGIN * h0;
    for _ in 0..24 {
        if let Some(b) = try_fit(delta, epsilon, h0, &axis, lambda) {
            return Ok(b);
        }
        lambda *= 2.0;
    }
    Err(Error::Infeasible(format!("no barrier scale fits delta {delta}, epsilon {epsilon}, H0 {h0}")))
}

/// Bisects the substep from `st` at which `radius` crosses `target`.
fn refine_crossing(st: &State, dt: f64, radius: impl Fn(&State) -> f64, target: f64) -> (f64, State) {
    let f0 = radius(st) - target;
    let (mut lo, mut hi) = (0.0, dt);
    for _ in 0..100 {
        let m = 0.5 * (lo + hi);
        if (radius(&rk4(NODOID_H, st, m)) - target).signum() == f0.signum() {
            lo = m;
        } else {
            hi = m;
        }
    }
    (hi, rk4(NODOID_H, st, hi))
}

fn try_fit(delta: f64, epsilon: f64, h0: f64, axis: &Point3, lambda: f64) -> Option<BarrierAnnulus> {
    let r0 = neck_radius(NODOID_H, NODOID_C).ok()?;
    let mid = 1.0 - delta / 2.0;
    if r0 / lambda >= mid {
        return None;
    }
    // Unscaled axial offset putting the neck at radius 1 − δ/2.
    let t = ((mid * lambda).powi(2) - r0 * r0).sqrt();
    let radius = |st: &State| (st[0].powi(2) + (st[1] + t).powi(2)).sqrt() / lambda;
    let reach = 2.0 * lambda * delta;
    let start = [r0, 0.0, FRAC_PI_2];
    let step = DEFAULT_STEP;

    let (fwd, _) = integrate_from(NODOID_H, start, reach, step);
    let (bwd, _) = integrate_from(NODOID_H, start, -reach, step);
    let cut = |samples: &[(f64, State)], target: f64, up: bool| -> Option<Vec<(f64, State)>> {
        let mut kept = vec![samples[0]];
        for w in samples.windows(2) {
            let (a, b) = (radius(&w[0].1), radius(&w[1].1));
            if (b > a) != up {
                return None;
            }
            if (up && b >= target) || (!up && b <= target) {
                let (ds, st) = refine_crossing(&w[0].1, w[1].0 - w[0].0, radius, target);
                kept.push((w[0].0 + ds, st));
                return Some(kept);
            }
            kept.push(w[1]);
        }
        None
    };
    let upper = cut(&fwd, 1.0, true)?;
    let lower = cut(&bwd, 1.0 - delta, false)?;
    let samples: Vec<(f64, State)> = lower.iter().rev().chain(upper.iter().skip(1)).copied().collect();
    let unscaled = ProfileCurve::from_samples(NODOID_H, NODOID_C, &samples, false);
    let profile = unscaled.scaled(lambda);
    let offset = t / lambda;

    let hn = profile.numeric_mean_curvature();
    let min_h = hn.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_h >= h0) {
        return None;
    }
    let n = profile.len();
    let rings: Vec<(f64, f64)> = (0..BARRIER_RINGS)
        .map(|j| {
            let i = ((j as f64 / (BARRIER_RINGS - 1) as f64) * (n - 1) as f64).round() as usize;
            (profile.r[i], profile.z[i] + offset)
        })
        .collect();
    let origin = Point3::zeros();
    let mesh = revolve(&rings, &origin, axis, BARRIER_SIDES);
    let p = *axis;
    let tol = 1e-9;
    let violations = mesh
        .vertices
        .iter()
        .filter(|v| {
            let d = v.norm();
            d > 1.0 + tol || d < 1.0 - delta - tol || (*v - p).norm() > epsilon
        })
        .count();
    if violations > 0 {
        return None;
    }
    let sides = BARRIER_SIDES;
    let last = mesh.vertices.len() - sides;
    let boundary_error = (0..sides)
        .map(|j| (mesh.vertices[j].norm() - (1.0 - delta)).abs().max((mesh.vertices[last + j].norm() - 1.0).abs()))
        .fold(0.0, f64::max);
    let orientation = if min_h > 0.0 { CurvatureOrientation::TowardAxis } else { CurvatureOrientation::AwayFromAxis };
    Some(BarrierAnnulus {
        samples_checked: mesh.vertices.len(),
        profile,
        axis: p,
        offset,
        lambda,
        rings,
        mesh,
        min_mean_curvature: min_h,
        orientation,
        delta,
        epsilon,
        containment_violations: violations,
        boundary_error,
    })
}

impl BarrierAnnulus {
    /// Signed distance from `q` to the ring profile in its meridian half-plane,
    /// and whether the nearest point is interior to the profile.
    fn side(&self, q: &Point3) -> (f64, f64, bool) {
        let z = q.dot(&self.axis);
        let r = (q - self.axis * z).norm();
        let mut best = (f64::INFINITY, 0.0, false);
        let n = self.rings.len();
        for i in 0..n - 1 {
            let (a, b) = (self.rings[i], self.rings[i + 1]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            let t = (((r - a.0) * dx + (z - a.1) * dy) / len2).clamp(0.0, 1.0);
            let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
            let d = ((r - cx).powi(2) + (z - cy).powi(2)).sqrt();
            if d < best.0 {
                let cross = dx * (z - a.1) - dy * (r - a.0);
                let interior = !((i == 0 && t == 0.0) || (i == n - 2 && t == 1.0));
                best = (d, cross, interior);
            }
        }
        best
    }

    pub fn distance(&self, q: &Point3) -> f64 {
        self.side(q).0
    }
}

const SWEEP_COARSE: usize = 1024;
pub const CONTACT_TOL: f64 = 1e-9;

/// Smallest rotation angle in `(0, 2π)` about `axis` at which the barrier meets one of
/// the target points transversally, located to within `resolution`.
pub fn sweep_first_contact(
    barrier: &BarrierAnnulus,
    target: &[Point3],
    axis: &Point3,
    resolution: f64,
) -> Result<Option<f64>> {
    if !(resolution > 0.0 && resolution < 1.0) {
        return Err(invalid("resolution must lie in (0, 1)"));
    }
    if target.is_empty() {
        return Err(invalid("empty target"));
    }
    if !(axis.norm() > 0.0) {
        return Err(invalid("sweep axis must be nonzero"));
    }
    let a = axis.normalize();
    if let Some(q) = target.iter().find(|q| barrier.distance(q) <= CONTACT_TOL) {
        return Err(invalid(format!("target point {q:?} meets the barrier at θ = 0")));
    }
    let dtheta = TAU / SWEEP_COARSE as f64;
    let first = target
        .par_iter()
        .filter_map(|q| {
            let at = |th: f64| barrier.side(&rotate_about(q, &a, -th));
            let speed = (q - a * q.dot(&a)).norm();
            let mut prev = at(0.0);
            for i in 1..=SWEEP_COARSE {
                let th = i as f64 * dtheta;
                let cur = at(th);
                if (prev.1 >= 0.0) != (cur.1 >= 0.0) {
                    let (mut lo, mut hi) = (th - dtheta, th);
                    let lo_side = prev.1 >= 0.0;
                    while hi - lo > resolution {
                        let m = 0.5 * (lo + hi);
                        if (at(m).1 >= 0.0) == lo_side {
                            lo = m;
                        } else {
                            hi = m;
                        }
                    }
                    let m = 0.5 * (lo + hi);
                    let (d, _, interior) = at(m);
                    if interior && d <= speed * resolution + CONTACT_TOL && m < TAU {
                        return Some(m);
                    }
                }
                prev = cur;
            }
            None
        })
        .min_by(f64::total_cmp);
    Ok(first)
}

/// Default neck waist radius at level `k`: `4⁻ᵏ / 100`.
pub fn default_neck_scale(k: u32) -> f64 {
    0.25f64.powi(k as i32) / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    Sphere,
    Fillet,
    Neck,
}

/// Constant-curvature profile piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePiece {
    pub kind: PieceKind,
    pub level: u32,
    pub start: (f64, f64),
    pub phi0: f64,
    pub curvature: f64,
    pub length: f64,
}

impl ProfilePiece {
    pub fn point(&self, s: f64) -> (f64, f64) {
        let (r0, z0) = self.start;
        let k = self.curvature;
        if k == 0.0 {
            (r0 + s * self.phi0.cos(), z0 + s * self.phi0.sin())
        } else {
            let ph = self.phi0 + k * s;
            (r0 + (ph.sin() - self.phi0.sin()) / k, z0 - (ph.cos() - self.phi0.cos()) / k)
        }
    }

    pub fn phi(&self, s: f64) -> f64 {
        self.phi0 + self.curvature * s
    }

    pub fn end(&self) -> (f64, f64) {
        self.point(self.length)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RemarkReport {
    pub levels: u32,
    pub max_abs_mean_curvature: f64,
    pub min_mean_curvature: f64,
    pub max_mean_curvature: f64,
    /// `1 − max |H|`; negative when the bound fails.
    pub margin: f64,
    pub junction_position_error: f64,
    pub junction_angle_error: f64,
    pub level_area: Vec<f64>,
    pub cumulative_area: Vec<f64>,
    /// Midrange of `area(≤k)/k` for `k = 3..=K`.
    pub area_growth_constant: f64,
    pub area_growth_deviation: f64,
    pub tail_delta: f64,
    pub coverage_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct RemarkSurface {
    pub pieces: Vec<ProfilePiece>,
    /// `(level, s, r, z, φ, H_numeric)` along the profile.
    pub samples: Vec<(u32, [f64; 5])>,
    pub mesh: Mesh,
    pub triangle_levels: Vec<u32>,
    pub tail: Vec<Point3>,
    pub report: RemarkReport,
}

pub const REMARK_MAX_LEVEL: u32 = 16;
const REMARK_SIDES: usize = 128;
pub const COVERAGE_EPSILON: f64 = 0.15;

/// Expected start point of each piece from the construction, for the C¹ audit.
struct Planned {
    piece: ProfilePiece,
    expected_start: (f64, f64),
}

/// Nested spheres `|x| = 1 − 2⁻ᵏ`, `k = 1..=K`, revolved about the `x₃`-axis and joined
/// at alternating poles by necks of waist `neck_scale(k)` with toroidal fillets of
/// radius a quarter of the gap.
pub fn remark_surface(levels: u32, neck_scale: &dyn Fn(u32) -> f64) -> Result<RemarkSurface> {
    if levels < 2 {
        return Err(invalid("remark surface needs at least 2 levels"));
    }
    if levels > REMARK_MAX_LEVEL {
        return Err(Error::Resource(format!("levels above {REMARK_MAX_LEVEL}")));
    }
    let plan = plan_pieces(levels, neck_scale)?;
    let mut pos_err = 0.0f64;
    let mut ang_err = 0.0f64;
    for w in plan.windows(2) {
        let (e, s) = (w[0].piece.end(), w[1].expected_start);
        pos_err = pos_err.max((e.0 - s.0).hypot(e.1 - s.1));
        ang_err = ang_err.max((w[0].piece.phi(w[0].piece.length) - w[1].piece.phi0).abs());
    }
    let pieces: Vec<ProfilePiece> = plan.into_iter().map(|p| p.piece).collect();

    let mut samples = Vec::new();
    let mut mesh = Mesh::default();
    let mut triangle_levels = Vec::new();
    let mut tail = Vec::new();
    let mut s_acc = 0.0;
    let axis = Point3::z();
    for piece in &pieces {
        let n = ((piece.curvature.abs() * piece.length / 0.01).ceil() as usize).max(16);
        let mut prof = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let s = piece.length * i as f64 / n as f64;
            let (r, z) = piece.point(s);
            let r = if r.abs() < 1e-12 { 0.0 } else { r };
            let phi = piece.phi(s);
            let hn = numeric_piece_curvature(piece, s, r, phi);
            samples.push((piece.level, [s_acc + s, r, z, phi, hn]));
            prof.push((r, z));
        }
        s_acc += piece.length;
        let m = revolve(&prof, &Point3::zeros(), &axis, REMARK_SIDES);
        if piece.level + 1 >= levels {
            tail.extend(m.vertices.iter().copied());
        }
        triangle_levels.extend(std::iter::repeat(piece.level).take(m.triangles.len()));
        mesh.append(&m);
    }

    let hs: Vec<f64> = samples.iter().map(|(_, row)| row[4]).collect();
    let max_abs = hs.iter().map(|h| h.abs()).fold(0.0, f64::max);
    let min_h = hs.iter().copied().fold(f64::INFINITY, f64::min);
    let max_h = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut level_area = vec![0.0; levels as usize];
    for (t, lvl) in mesh.triangles.iter().zip(&triangle_levels) {
        level_area[*lvl as usize - 1] += mesh.triangle_area(t);
    }
    let cumulative_area: Vec<f64> = level_area
        .iter()
        .scan(0.0, |acc, a| {
            *acc += a;
            Some(*acc)
        })
        .collect();
    let ratios: Vec<f64> = (3..=levels).map(|k| cumulative_area[k as usize - 1] / k as f64).collect();
    let (constant, deviation) = if ratios.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let c = 0.5 * (lo + hi);
        (c, ratios.iter().map(|q| (q / c - 1.0).abs()).fold(0.0, f64::max))
    };

    let tail_delta = 0.5f64.powi(levels as i32 - 2).min(0.2);
    let inside: Vec<Point3> = tail.iter().copied().filter(|p| p.norm() < 1.0).collect();
    let coverage = estimate_limit_set(&inside, tail_delta, COVERAGE_EPSILON)?.coverage_fraction;

    Ok(RemarkSurface {
        pieces,
        samples,
        mesh,
        triangle_levels,
        tail,
        report: RemarkReport {
            levels,
            max_abs_mean_curvature: max_abs,
            min_mean_curvature: min_h,
            max_mean_curvature: max_h,
            margin: 1.0 - max_abs,
            junction_position_error: pos_err,
            junction_angle_error: ang_err,
            level_area,
            cumulative_area,
            area_growth_constant: constant,
            area_growth_deviation: deviation,
            tail_delta,
            coverage_fraction: coverage,
        },
    })
}

/// `(κ₁ + κ₂)/2` with `κ₁` differenced from the sampled angle and `κ₂ = sin φ / r`.
fn numeric_piece_curvature(piece: &ProfilePiece, s: f64, r: f64, phi: f64) -> f64 {
    let h = 1e-6 * piece.length.max(1e-12);
    let (a, b) = ((s - h).max(0.0), (s + h).min(piece.length));
    let k1 = (piece.phi(b) - piece.phi(a)) / (b - a);
    let k2 = if r > 1e-9 { phi.sin() / r } else { k1 };
    0.5 * (k1 + k2)
}

fn plan_pieces(levels: u32, neck_scale: &dyn Fn(u32) -> f64) -> Result<Vec<Planned>> {
    struct Neck {
        a: f64,
        rho: f64,
        w_l: f64,
        w_u: f64,
        alpha_l: f64,
        alpha_u: f64,
    }
    let mut necks = Vec::new();
    let mut prev_a = f64::INFINITY;
    for k in 1..levels {
        let a = neck_scale(k);
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(format!("neck scale at level {k} must be positive")));
        }
        if !(a < prev_a) {
            return Err(invalid(format!("neck scale must decrease (level {k})")));
        }
        prev_a = a;
        let (rk, rk1) = (sphere_radius(k), sphere_radius(k + 1));
        let rho = (rk1 - rk) / 4.0;
        if a + rho >= (rk + rho) * FRAC_PI_4.sin() {
            return Err(Error::Infeasible(format!("neck of waist {a} does not fit at level {k}")));
        }
        let w_l = ((rk + rho).powi(2) - (a + rho).powi(2)).sqrt();
        let w_u = ((rk1 - rho).powi(2) - (a + rho).powi(2)).sqrt();
        necks.push(Neck { a, rho, w_l, w_u, alpha_l: (a + rho).atan2(w_l), alpha_u: (a + rho).atan2(w_u) });
    }
    let orient = |k: u32| if k % 2 == 1 { 1.0 } else { -1.0 };
    let mut out: Vec<Planned> = Vec::new();
    let mut cursor = (0.0, -sphere_radius(1));
    let mut phi = 0.0;
    let push = |out: &mut Vec<Planned>, cursor: &mut (f64, f64), phi: &mut f64, kind, level, expected, k: f64, len: f64| {
        let piece = ProfilePiece { kind, level, start: *cursor, phi0: *phi, curvature: k, length: len };
        *cursor = piece.end();
        *phi = piece.phi(len);
        out.push(Planned { piece, expected_start: expected });
    };
    for k in 1..=levels {
        let sg = orient(k);
        let rk = sphere_radius(k);
        let start_angle = if k == 1 { 0.0 } else { necks[k as usize - 2].alpha_u };
        let expected = if k == 1 {
            (0.0, -rk)
        } else {
            let n = &necks[k as usize - 2];
            (rk * n.alpha_u.sin(), -sg * rk * n.alpha_u.cos())
        };
        let end_angle = if k == levels { 0.0 } else { necks[k as usize - 1].alpha_l };
        let sweep = PI - end_angle - start_angle;
        push(&mut out, &mut cursor, &mut phi, PieceKind::Sphere, k, expected, sg / rk, rk * sweep);
        if k == levels {
            break;
        }
        let n = &necks[k as usize - 1];
        let tl = (rk * n.alpha_l.sin(), sg * rk * n.alpha_l.cos());
        let next = k + 1;
        push(&mut out, &mut cursor, &mut phi, PieceKind::Fillet, next, tl, -sg / n.rho, n.rho * (FRAC_PI_2 - n.alpha_l));
        push(&mut out, &mut cursor, &mut phi, PieceKind::Neck, next, (n.a, sg * n.w_l), 0.0, n.w_u - n.w_l);
        push(&mut out, &mut cursor, &mut phi, PieceKind::Fillet, next, (n.a, sg * n.w_u), -sg / n.rho, n.rho * (FRAC_PI_2 + n.alpha_u));
    }
    Ok(out)
}

impl RemarkSurface {
    /// Plain-text table with columns `s r z phi h_numeric`.
    pub fn table(&self) -> String {
        profile_table(self.samples.iter().map(|(_, row)| *row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::p3;

    #[test]
    fn sphere_profile() {
        let p = integrate_cmc_profile(1.0, 0.0, 4.0, DEFAULT_STEP).unwrap();
        assert!(p.truncated);
        assert!((p.s.last().unwrap() - FRAC_PI_2).abs() < 1e-3);
        for i in 0..p.len() {
            assert!((p.r[i].hypot(p.z[i]) - 1.0).abs() < 1e-9);
        }
        assert!(p.mean_curvature_deviation(10.0 * DEFAULT_STEP) < 1e-6);
    }

    #[test]
    fn catenary_profile() {
        let a = 0.3;
        let p = integrate_cmc_profile(0.0, a, 2.0, DEFAULT_STEP).unwrap();
        let err = (0..p.len()).map(|i| (p.r[i] - a * (p.z[i] / a).cosh()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!(p.mean_curvature_deviation(0.0) < 1e-5);
    }

    #[test]
    fn nodoid_conserves_first_integral() {
        let p = integrate_cmc_profile(1.0, -0.1, 10.0, DEFAULT_STEP).unwrap();
        assert!(!p.truncated);
        assert!(p.first_integral_drift() < 1e-8, "{}", p.first_integral_drift());
        assert!(p.ode_residual() < 1e-6);
        assert!(p.mean_curvature_deviation(10.0 * DEFAULT_STEP) < 1e-5);
        let rmin = p.r.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((rmin - (1.4f64.sqrt() - 1.0) / 2.0).abs() < 1e-6);
    }

    #[test]
    fn neck_radius_errors() {
        assert!(neck_radius(1.0, 0.5).is_err());
        assert!(neck_radius(0.0, -1.0).is_err());
        assert!(integrate_cmc_profile(0.0, 0.0, 1.0, 1e-3).is_err());
        assert!(integrate_cmc_profile(1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn homothety_scales_curvature() {
        let p = integrate_cmc_profile(1.0, -0.3, 2.0, 1e-3).unwrap();
        let q = p.scaled(4.0);
        let (a, b) = (p.numeric_mean_curvature(), q.numeric_mean_curvature());
        for i in 0..p.len() {
            assert!((b[i] - 4.0 * a[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn barrier_fit() {
        let b = fit_barrier(0.02, 0.2, 10.0, &p3(0.0, 0.0, 1.0)).unwrap();
        assert!(b.min_mean_curvature >= 10.0);
        assert_eq!(b.containment_violations, 0);
        assert!(b.samples_checked >= 10_000);
        assert!(b.boundary_error < 1e-6, "{}", b.boundary_error);
        assert_eq!(b.orientation, CurvatureOrientation::TowardAxis);
        assert!(fit_barrier(0.05, 0.2, 10.0, &p3(0.0, 0.0, 1.0)).is_err());
        assert!(fit_barrier(0.0, 0.2, 10.0, &p3(0.0, 0.0, 1.0)).is_err());
    }

    fn leading_target(b: &BarrierAnnulus, theta: f64) -> Point3 {
        let mid = (b.rings.len() / 2) * BARRIER_SIDES;
        let v = (mid..mid + BARRIER_SIDES).map(|i| b.mesh.vertices[i]).min_by(|a, c| a.y.total_cmp(&c.y)).unwrap();
        rotate_about(&v, &Point3::x(), theta)
    }

    #[test]
    fn sweep_finds_placed_point() {
        let b = fit_barrier(0.02, 0.2, 10.0, &p3(0.0, 0.0, 1.0)).unwrap();
        let q = leading_target(&b, 0.7);
        let res = 1e-4;
        let th = sweep_first_contact(&b, &[q], &Point3::x(), res).unwrap().unwrap();
        assert!((th - 0.7).abs() <= res, "{th}");
        let th2 = sweep_first_contact(&b, &[q], &Point3::x(), res / 2.0).unwrap().unwrap();
        assert!((th - th2).abs() < res);
        let far = [p3(0.0, 0.0, 0.1)];
        assert_eq!(sweep_first_contact(&b, &far, &Point3::x(), res).unwrap(), None);
        let on = [b.mesh.vertices[BARRIER_SIDES * 50]];
        assert!(sweep_first_contact(&b, &on, &Point3::x(), res).is_err());
    }

    #[test]
    fn remark_junctions_are_c1() {
        let s = remark_surface(3, &default_neck_scale).unwrap();
        assert!(s.report.junction_angle_error < 1e-9);
        assert!(s.report.junction_position_error < 1e-9);
        assert_eq!(s.pieces.len(), 3 + 2 * 3);
        assert!(s.mesh.vertices.iter().all(|v| v.norm() < 1.0));
    }

    #[test]
    fn remark_rejects_oversized_necks() {
        assert!(matches!(remark_surface(3, &|_| 0.3), Err(Error::InvalidInput(_)) | Err(Error::Infeasible(_))));
        assert!(matches!(remark_surface(3, &|k| 0.4 / k as f64), Err(Error::Infeasible(_))));
        assert!(remark_surface(1, &default_neck_scale).is_err());
    }

    #[test]
    fn remark_mean_curvature_alternates() {
        let s = remark_surface(4, &default_neck_scale).unwrap();
        assert!(s.samples.iter().all(|(_, row)| row[4].is_finite()));
        assert!(s.report.max_mean_curvature > 1.0);
        assert!(s.report.min_mean_curvature < -1.0);
    }
}
