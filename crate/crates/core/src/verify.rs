//! Executable checks of the construction's quantitative properties.
//!
//! Every check returns a [`VerificationReport`]; failures carry up to
//! [`MAX_WITNESSES`] witnesses naming the offending items.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::complex::{
    build_complex, enumerate_cells, refine_counts, sample_cell_closure, sphere_radius, CubeComplex, Role,
};
use crate::error::{invalid, Result};
use crate::geom::{min_enclosing_ball, polyline_polyline_distance, rotate_about, slerp, Aabb, Point3};
use crate::query::{crossing_profile_with, CrossingTarget, FacePart};
use crate::scaffold::{build_delta, gamma_distance, DomainScene, ElementId, ElementKind, Geometry, ScaffoldElement};

pub const MAX_WITNESSES: usize = 10;

/// Slack allowed on enclosing-ball radii.
pub const SIZE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub item: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub parameters: BTreeMap<String, Value>,
    pub status: Status,
    pub witnesses: Vec<Witness>,
    pub measured: BTreeMap<String, f64>,
    pub violations: u64,
}

impl VerificationReport {
    fn new(check: &str) -> Self {
        VerificationReport {
            check: check.to_string(),
            parameters: BTreeMap::new(),
            status: Status::Pass,
            witnesses: Vec::new(),
            measured: BTreeMap::new(),
            violations: 0,
        }
    }

    fn param(mut self, key: &str, v: Value) -> Self {
        self.parameters.insert(key.to_string(), v);
        self
    }

    fn fail(&mut self, item: impl Into<String>, detail: impl Into<String>) {
        self.status = Status::Fail;
        self.violations += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness { item: item.into(), detail: detail.into() });
        }
    }

    fn measure(&mut self, key: &str, v: f64) {
        self.measured.insert(key.to_string(), v);
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Sizes and Euler characteristic of levels `1..=K` of a freshly built complex.
pub fn check_counts(max_level: u32) -> Result<VerificationReport> {
    Ok(check_counts_of(&build_complex(max_level)?))
}

/// As [`check_counts`], on a given (possibly mutated) complex.
pub fn check_counts_of(complex: &CubeComplex) -> VerificationReport {
    let mut r = VerificationReport::new("counts").param("levels", json!(complex.max_level()));
    for l in &complex.levels {
        let n = l.level;
        let got = (l.faces.len() as u64, l.edges.len() as u64, l.vertices.len() as u64);
        match refine_counts(n) {
            Ok(want) if want == got => {}
            Ok(want) => r.fail(format!("level {n}"), format!("(F, E, V) = {got:?}, expected {want:?}")),
            Err(e) => r.fail(format!("level {n}"), e.to_string()),
        }
        let chi = got.2 as i64 - got.1 as i64 + got.0 as i64;
        if chi != 2 {
            r.fail(format!("level {n}"), format!("Euler characteristic {chi}"));
        }
    }
    r.measure("levels_checked", complex.levels.len() as f64);
    r
}

fn open_element_reaches(e: &ScaffoldElement, bound: f64) -> bool {
    let k = e.level;
    match e.kind() {
        ElementKind::GammaArc | ElementKind::SphericalFacePatch => sphere_radius(k) >= bound,
        ElementKind::GammaRadialSegment | ElementKind::RadialRectPatch => sphere_radius(k + 1) > bound,
        _ => e.geometry.samples(64).iter().any(|p| p.norm() >= bound - 1e-12),
    }
}

const SIZE_KINDS: [ElementKind; 9] = ElementKind::ALL;

/// Enclosing-ball radius of every qualifying element and 3-cell against `4δ`.
pub fn check_lemma_size(max_level: u32, deltas: &[f64]) -> Result<VerificationReport> {
    validate_deltas(deltas)?;
    let scene = build_delta(max_level, crate::scaffold::DEFAULT_RESOLUTION)?;
    check_lemma_size_scene(&scene, deltas)
}

fn validate_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(invalid("at least one delta is required"));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 0.25)) {
        return Err(invalid(format!("delta {d} outside (0, 1/4)")));
    }
    Ok(())
}

pub fn check_lemma_size_scene(scene: &DomainScene, deltas: &[f64]) -> Result<VerificationReport> {
    validate_deltas(deltas)?;
    let mut r = VerificationReport::new("size")
        .param("levels", json!(scene.max_level))
        .param("deltas", json!(deltas));
    let radii: Vec<(String, f64, f64, bool)> = scene
        .elements
        .par_iter()
        .filter(|e| SIZE_KINDS.contains(&e.kind()))
        .map(|e| {
            let pts = e.geometry.samples(scene.resolution);
            let ball = min_enclosing_ball(&pts).expect("nonempty geometry");
            let reach = pts.iter().map(|p| p.norm()).fold(0.0, f64::max);
            (e.id.to_string(), ball.radius, reach, false)
        })
        .collect();
    let cells = enumerate_cells(scene.max_level)?;
    let cell_radii: Vec<(String, f64, u32)> = cells
        .par_iter()
        .filter(|c| c.role == Role::ThreeCell)
        .map(|c| {
            let ball = min_enclosing_ball(&sample_cell_closure(c, 9)).expect("nonempty");
            (c.to_string(), ball.radius, c.level)
        })
        .collect();

    let mut max_ratio = 0.0f64;
    let mut checked = 0u64;
    for &delta in deltas {
        let bound = 1.0 - delta;
        let limit = 4.0 * delta;
        let mut consider = |item: &str, radius: f64, r: &mut VerificationReport| {
            checked += 1;
            max_ratio = max_ratio.max(radius / limit);
            if radius > limit + SIZE_SLACK {
                r.fail(item, format!("delta {delta}: enclosing radius {radius} > {limit}"));
            }
        };
        for (e, (id, radius, _, _)) in scene.elements.iter().filter(|e| SIZE_KINDS.contains(&e.kind())).zip(&radii) {
            if open_element_reaches(e, bound) {
                consider(id, *radius, &mut r);
            }
        }
        for (id, radius, k) in &cell_radii {
            if sphere_radius(k + 1) > bound {
                consider(id, *radius, &mut r);
            }
        }
    }
    r.measure("max_ratio", max_ratio);
    r.measure("elements_checked", checked as f64);
    Ok(r)
}

fn edge_param(e: &ScaffoldElement) -> Option<impl Fn(f64) -> Point3> {
    let (pts, _) = e.geometry.polyline()?;
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    let arc = e.kind() == ElementKind::GammaArc;
    let (ua, ub) = (a.normalize(), b.normalize());
    let angle = ua.dot(&ub).clamp(-1.0, 1.0).acos();
    let r = a.norm();
    Some(move |t: f64| if arc { slerp(&ua, &ub, angle, t) * r } else { a + (b - a) * t })
}

/// Transversal crossings of the exact edge through its own W disk, and
/// separation of `β(α)` from `α`.
pub fn check_linking(max_level: u32, tol: f64) -> Result<VerificationReport> {
    let scene = build_delta(max_level, crate::scaffold::DEFAULT_RESOLUTION)?;
    Ok(check_linking_scene(&scene, tol))
}

pub fn check_linking_scene(scene: &DomainScene, tol: f64) -> VerificationReport {
    let mut r = VerificationReport::new("linking").param("levels", json!(scene.max_level)).param("tol", json!(tol));
    let edges: Vec<&ScaffoldElement> = scene.elements.iter().filter(|e| e.kind().is_gamma()).collect();
    let results: Vec<(ElementId, std::result::Result<f64, String>)> = edges
        .par_iter()
        .map(|alpha| (alpha.id, link_one(scene, alpha, tol)))
        .collect();
    let mut min_sep = f64::INFINITY;
    for (id, res) in results {
        match res {
            Ok(sep) => min_sep = min_sep.min(sep),
            Err(msg) => r.fail(id.to_string(), msg),
        }
    }
    r.measure("edges_checked", edges.len() as f64);
    r.measure("min_beta_alpha_distance", min_sep);
    r
}

fn link_one(scene: &DomainScene, alpha: &ScaffoldElement, tol: f64) -> std::result::Result<f64, String> {
    let (beta, w) = crate::scaffold::beta_edge(&alpha.id, scene).map_err(|e| e.to_string())?;
    let Geometry::Disk { center, normal, radius } = w.geometry else {
        return Err("W element is not a disk".into());
    };
    let path = edge_param(alpha).ok_or("edge has no polyline")?;
    let f = |t: f64| (path(t) - center).dot(&normal);
    let n = 64;
    let mut crossings = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let v = f(t);
        if v.abs() <= tol && tol > 0.0 {
            continue;
        }
        if v == 0.0 {
            crossings.push(t);
            prev = None;
            continue;
        }
        if let Some((tp, vp)) = prev {
            if (vp < 0.0) != (v < 0.0) {
                let (mut lo, mut hi) = (tp, t);
                for _ in 0..80 {
                    let m = 0.5 * (lo + hi);
                    if (f(m) < 0.0) == (vp < 0.0) {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                crossings.push(0.5 * (lo + hi));
            }
        }
        prev = Some((t, v));
    }
    let inside: Vec<f64> = crossings.iter().copied().filter(|&t| (path(t) - center).norm() <= radius).collect();
    if inside.len() != 1 {
        return Err(format!("{} crossings through W, expected 1", inside.len()));
    }
    let t = inside[0];
    let h = 1e-6;
    let tangent = (path((t + h).min(1.0)) - path((t - h).max(0.0))).normalize();
    if tangent.dot(&normal).abs() < 0.5 {
        return Err(format!("crossing not transversal (cos = {})", tangent.dot(&normal)));
    }
    let (pts, _) = beta.geometry.polyline().ok_or("beta is not a polyline")?;
    let sep = pts.iter().map(|p| gamma_distance(alpha, p)).fold(f64::INFINITY, f64::min);
    if !(sep > tol) {
        return Err(format!("beta meets alpha (distance {sep})"));
    }
    Ok(sep)
}

/// Count of Δ components per shell: `36·4ᵏ⁻¹ + 2`.
pub fn delta_count_formula(k: u32) -> u64 {
    36 * 4u64.pow(k - 1) + 2
}

/// Δ components meeting the closed ball of radius `1 − 2⁻ᵏ`.
pub fn delta_count_within(k: u32) -> u64 {
    (1..k).map(delta_count_formula).sum::<u64>() + 18 * 4u64.pow(k - 1)
}

/// Pairwise disjointness, per-shell counts and cumulative counts of Δ.
pub fn check_disjoint_and_proper(max_level: u32) -> Result<VerificationReport> {
    let scene = build_delta(max_level, crate::scaffold::DEFAULT_RESOLUTION)?;
    Ok(check_disjoint_and_proper_scene(&scene))
}

/// Probe radius for candidate Δ pairs.
const PAIR_PROBE: f64 = 1e-3;

pub fn delta_min_distance(scene: &DomainScene) -> (f64, Option<(ElementId, ElementId)>) {
    let delta: Vec<usize> = (0..scene.elements.len()).filter(|&i| scene.elements[i].kind().is_delta()).collect();
    let best = delta
        .par_iter()
        .map(|&i| {
            let e = &scene.elements[i];
            let (pa, ca) = e.geometry.polyline().expect("Δ curves are polylines");
            let bx: Aabb = e.geometry.aabb();
            let mut best = (f64::INFINITY, None);
            for j in scene.delta_index().near_box(&bx, PAIR_PROBE) {
                if j <= i {
                    continue;
                }
                let o = &scene.elements[j];
                let (pb, cb) = o.geometry.polyline().expect("Δ curves are polylines");
                let d = polyline_polyline_distance(pa, ca, pb, cb);
                if d < best.0 {
                    best = (d, Some((e.id, o.id)));
                }
            }
            best
        })
        .reduce(|| (f64::INFINITY, None), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    best
}

pub fn check_disjoint_and_proper_scene(scene: &DomainScene) -> VerificationReport {
    let mut r = VerificationReport::new("disjoint").param("levels", json!(scene.max_level));
    let (min_d, pair) = delta_min_distance(scene);
    r.measure("min_pairwise_distance", if min_d.is_finite() { min_d } else { PAIR_PROBE });
    if !(min_d > 0.0) {
        let (a, b) = pair.expect("a pair exists when the distance is finite");
        r.fail(format!("{a} / {b}"), format!("distance {min_d}"));
    }
    for k in 1..scene.max_level {
        let got = scene.delta().filter(|e| e.level == k).count() as u64;
        let want = delta_count_formula(k);
        r.measure(&format!("shell_{k}_count"), got as f64);
        if got != want {
            r.fail(format!("shell {k}"), format!("{got} components, expected {want}"));
        }
        let bound = sphere_radius(k) + 1e-12;
        let within = scene
            .delta()
            .filter(|e| e.geometry.samples(0).iter().any(|p| p.norm() <= bound))
            .count() as u64;
        let want = delta_count_within(k);
        if within != want {
            r.fail(format!("ball {k}"), format!("{within} components meet the closed ball, expected {want}"));
        }
    }
    r
}

/// A random shell-spanning path from just inside sphere `k − 1` to just
/// outside sphere `k + 2`, one waypoint per shell within a cap around a
/// uniformly random direction.
pub fn random_path(rng: &mut ChaCha8Rng, k: u32) -> Vec<Point3> {
    let eta = 1e-3 * (-(k as f64 + 3.0)).exp2();
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).sqrt();
    let dir = Point3::new(s * phi.cos(), s * phi.sin(), z);
    let cap = 0.3;
    let waypoint = |r: f64, rng: &mut ChaCha8Rng| {
        let axis = crate::geom::orthogonal_unit(&dir);
        let axis = rotate_about(&axis, &dir, rng.gen_range(0.0..std::f64::consts::TAU));
        rotate_about(&dir, &axis, rng.gen_range(0.0..cap)) * r
    };
    let mut path = vec![waypoint(sphere_radius(k - 1) - eta, rng)];
    for j in (k - 1)..=(k + 1) {
        let r = rng.gen_range(sphere_radius(j)..sphere_radius(j + 1));
        path.push(waypoint(r, rng));
    }
    path.push(waypoint(sphere_radius(k + 2) + eta, rng));
    path.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    path
}

/// Every sphere crossing of a random path lies in `∪ℒ` or within `ρ_N` of Γ.
pub fn check_traversal(max_level: u32, trials: u32, seed: u64) -> Result<VerificationReport> {
    let scene = build_delta(max_level, crate::scaffold::DEFAULT_RESOLUTION)?;
    check_traversal_scene(&scene, trials, seed)
}

pub fn check_traversal_scene(scene: &DomainScene, trials: u32, seed: u64) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if scene.max_level < 5 {
        return Err(invalid("traversal needs max_level ≥ 5"));
    }
    let mut r = VerificationReport::new("traversal")
        .param("levels", json!(scene.max_level))
        .param("trials", json!(trials))
        .param("seed", json!(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths: Vec<(u32, Vec<Point3>)> = (0..trials)
        .map(|_| {
            let k = rng.gen_range(2..=scene.max_level - 3);
            (k, random_path(&mut rng, k))
        })
        .collect();
    let outcomes: Vec<Result<(usize, usize, usize, Vec<String>)>> = paths
        .par_iter()
        .map(|(_, path)| {
            let events = crossing_profile_with(path, scene, false)?;
            let mut crossings = 0;
            let (mut in_l, mut in_n) = (0, 0);
            let mut bad = Vec::new();
            for ev in &events {
                if let CrossingTarget::Sphere { k, part, in_thin_tube, .. } = ev.target {
                    if k >= scene.max_level {
                        continue;
                    }
                    crossings += 1;
                    if part == Some(FacePart::LDisk) {
                        in_l += 1;
                    } else if in_thin_tube {
                        in_n += 1;
                    } else {
                        bad.push(format!("sphere {k} at {:?}", ev.location));
                    }
                }
            }
            if crossings < 3 {
                bad.push(format!("only {crossings} sphere crossings"));
            }
            Ok((crossings, in_l, in_n, bad))
        })
        .collect();
    let (mut total, mut total_l, mut total_n) = (0, 0, 0);
    for (i, o) in outcomes.into_iter().enumerate() {
        let (c, l, n, bad) = o?;
        total += c;
        total_l += l;
        total_n += n;
        for b in bad {
            r.fail(format!("path {i}"), b);
        }
    }
    r.measure("sphere_crossings", total as f64);
    r.measure("in_l_disks", total_l as f64);
    r.measure("in_thin_tube", total_n as f64);
    Ok(r)
}

/// Sampled nesting `N ⊂ Int Ñ` and closed `Ñ ⊂ Int N̂` (N̂ measured by its
/// vertex radius, the thinner stratum).
pub fn check_nesting(max_level: u32, samples: u32, seed: u64) -> Result<VerificationReport> {
    let scene = build_delta(max_level, crate::scaffold::MIN_RESOLUTION)?;
    check_nesting_scene(&scene, samples, seed)
}

pub fn check_nesting_scene(scene: &DomainScene, samples: u32, seed: u64) -> Result<VerificationReport> {
    if samples == 0 {
        return Err(invalid("samples must be at least 1"));
    }
    let mut r = VerificationReport::new("nesting")
        .param("levels", json!(scene.max_level))
        .param("samples_per_level", json!(samples))
        .param("seed", json!(seed));
    let tubes = scene.tubes;
    let mut max_n_gap = f64::NEG_INFINITY;
    let mut max_nt_gap = f64::NEG_INFINITY;
    for k in 1..scene.max_level {
        let gamma: Vec<&ScaffoldElement> = scene.elements.iter().filter(|e| e.level == k && e.kind().is_gamma()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let draws: Vec<(usize, f64, Point3, f64, bool)> = (0..samples)
            .map(|i| {
                let e = rng.gen_range(0..gamma.len());
                let t: f64 = rng.gen_range(0.0..=1.0);
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - z * z).sqrt();
                let dir = Point3::new(s * phi.cos(), s * phi.sin(), z);
                // Half the draws probe N, half probe Ñ. A fifth sit exactly on the probed tube radius.
                let thin = i % 2 == 0;
                let frac = if i % 10 < 2 { 1.0 } else { rng.gen_range(0.0f64..1.0).cbrt() };
                (e, t, dir, frac, thin)
            })
            .collect();
        let gaps: Vec<(f64, f64, bool, Point3)> = draws
            .par_iter()
            .map(|&(e, t, dir, frac, thin)| {
                let path = edge_param(gamma[e]).expect("Γ elements are polylines");
                let rho = if thin { tubes.rho_n(k) } else { tubes.rho_ntilde(k) };
                let p = path(t) + dir * (rho * frac);
                let g_nt = scene.tube_gap(&p, |j| tubes.rho_ntilde(j));
                let g_hat = scene.tube_gap(&p, |j| tubes.nhat_vertex(j));
                (g_nt, g_hat, thin, p)
            })
            .collect();
        for (g_nt, g_hat, thin, p) in gaps {
            if thin {
                max_n_gap = max_n_gap.max(g_nt);
                if !(g_nt < 0.0) {
                    r.fail(format!("level {k}"), format!("point {p:?} of N is not interior to Ñ (gap {g_nt})"));
                }
            } else {
                max_nt_gap = max_nt_gap.max(g_hat);
                if !(g_hat < 0.0) {
                    r.fail(format!("level {k}"), format!("point {p:?} of Ñ is not interior to N̂ (gap {g_hat})"));
                }
            }
        }
    }
    r.measure("max_gap_n_in_ntilde", max_n_gap);
    r.measure("max_gap_ntilde_in_nhat", max_nt_gap);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaffold::{build_delta_with, TubeSchedule};

    #[test]
    fn counts_pass_and_detect_mutation() {
        let r = check_counts(6).unwrap();
        assert!(r.passed());
        assert_eq!(r.measured["levels_checked"], 6.0);
        assert!(check_counts(1).unwrap().passed());
        let mut c = build_complex(3).unwrap();
        c.levels[1].faces.pop();
        let r = check_counts_of(&c);
        assert!(!r.passed());
        assert!(!r.witnesses.is_empty());
    }

    #[test]
    fn size_rejects_large_delta() {
        assert!(check_lemma_size(3, &[0.3]).is_err());
        assert!(check_lemma_size(3, &[]).is_err());
    }

    #[test]
    fn size_passes_small_scene() {
        let r = check_lemma_size(5, &[0.125, 0.0625]).unwrap();
        assert!(r.passed(), "{:?}", r.witnesses);
        assert!(r.measured["max_ratio"] < 1.0);
    }

    #[test]
    fn linking_passes_and_detects_displaced_disk() {
        let s = build_delta(4, 32).unwrap();
        let r = check_linking_scene(&s, 0.0);
        assert!(r.passed(), "{:?}", r.witnesses);
        let mut bad = s.clone();
        let i = bad.elements.iter().position(|e| e.kind() == ElementKind::WDisk).unwrap();
        if let Geometry::Disk { center, normal, radius } = &mut bad.elements[i].geometry {
            *center += crate::geom::orthogonal_unit(normal) * (3.0 * *radius);
        }
        let r = check_linking_scene(&bad, 1e-12);
        assert!(!r.passed());
        assert_eq!(r.witnesses.len(), 1);
    }

    #[test]
    fn disjointness_matches_brute_force_at_three() {
        let s = build_delta(3, 32).unwrap();
        let r = check_disjoint_and_proper_scene(&s);
        assert!(r.passed(), "{:?}", r.witnesses);
        let delta: Vec<&ScaffoldElement> = s.delta().collect();
        let mut brute = f64::INFINITY;
        for i in 0..delta.len() {
            for j in i + 1..delta.len() {
                let (a, ca) = delta[i].geometry.polyline().unwrap();
                let (b, cb) = delta[j].geometry.polyline().unwrap();
                brute = brute.min(polyline_polyline_distance(a, ca, b, cb));
            }
        }
        assert_eq!(r.measured["min_pairwise_distance"], brute);
        assert_eq!(delta_count_formula(1), 38);
        assert_eq!(delta_count_formula(3), 578);
    }

    #[test]
    fn traversal_passes_and_detects_missing_l_disks() {
        let s = build_delta(5, 32).unwrap();
        let r = check_traversal_scene(&s, 40, 42).unwrap();
        assert!(r.passed(), "{:?}", r.witnesses);
        let kept = s.elements.iter().filter(|e| e.kind() != ElementKind::LDisk).cloned().collect();
        let bare = DomainScene::from_parts(5, 32, s.tubes, kept).unwrap();
        let r = check_traversal_scene(&bare, 40, 42).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn path_through_a_vertex_is_in_the_thin_tube() {
        let s = build_delta(5, 32).unwrap();
        let v = crate::geom::p3(1.0, 1.0, 1.0).normalize();
        let path = [v * 0.7, v * 0.8];
        let ev = crossing_profile_with(&path, &s, false).unwrap();
        let hit = ev.iter().find(|e| matches!(e.target, CrossingTarget::Sphere { k: 2, .. })).unwrap();
        assert!(matches!(hit.target, CrossingTarget::Sphere { in_thin_tube: true, .. }));
    }

    #[test]
    fn nesting_passes_and_detects_bad_schedule() {
        let r = check_nesting_scene(&build_delta(4, 16).unwrap(), 2000, 1).unwrap();
        assert!(r.passed(), "{:?}", r.witnesses);
        let bad = TubeSchedule { ntilde_factor: 0.02, ..TubeSchedule::default() };
        let r = check_nesting_scene(&build_delta_with(4, 16, bad).unwrap(), 2000, 1).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn reports_are_deterministic() {
        let s = build_delta(5, 16).unwrap();
        let a = serde_json::to_string(&check_traversal_scene(&s, 10, 7).unwrap()).unwrap();
        let b = serde_json::to_string(&check_traversal_scene(&s, 10, 7).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
