//! Scene persistence, mesh export, text formats and atomic file writes.
//!
//! Every float written by this module uses [`fmt_f64`]: seventeen significant
//! digits in scientific notation, which round-trips `f64` exactly.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geom::{circle_samples, to_array, Point3};
use crate::mesh::{tube, Mesh};
use crate::scaffold::{DomainScene, ElementId, ElementKind, Geometry, ScaffoldElement, TubeSchedule};
use crate::verify::delta_min_distance;

pub const SCENE_VERSION: u64 = 1;

/// Separation below which two loaded Δ curves count as overlapping.
pub const OVERLAP_TOL: f64 = 1e-12;

/// Fixed 17-significant-digit rendering used in every text output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON formatter that renders floats with [`fmt_f64`].
struct Fixed<F>(F);

impl<F: Formatter> Formatter for Fixed<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn to_json_with<T: Serialize + ?Sized, F: Formatter>(value: &T, f: F) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed(f));
    value.serialize(&mut ser).map_err(|e| Error::Malformed(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Indented JSON with fixed-precision floats and a trailing newline.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = to_json_with(value, PrettyFormatter::new())?;
    s.push('\n');
    Ok(s)
}

/// Single-line JSON with fixed-precision floats.
pub fn to_json_compact<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    to_json_with(value, CompactFormatter)
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn point_json(p: &Point3) -> Value {
    json!(to_array(p))
}

fn points_json(ps: &[Point3]) -> Value {
    Value::Array(ps.iter().map(point_json).collect())
}

fn geometry_json(g: &Geometry) -> Value {
    match g {
        Geometry::Polyline { points, closed } => json!({"type": "polyline", "closed": closed, "points": points_json(points)}),
        Geometry::Disk { center, normal, radius } => {
            json!({"type": "disk", "center": point_json(center), "normal": point_json(normal), "radius": radius})
        }
        Geometry::Patch { rows, cols, points } => {
            json!({"type": "patch", "rows": rows, "cols": cols, "points": points_json(points)})
        }
        Geometry::Points { points } => json!({"type": "points", "points": points_json(points)}),
    }
}

fn element_json(e: &ScaffoldElement) -> Value {
    json!({
        "id": e.id.to_string(),
        "kind": e.kind().name(),
        "level": e.level,
        "geometry": geometry_json(&e.geometry),
    })
}

fn check_finite(e: &ScaffoldElement) -> Result<()> {
    if e.geometry.samples(0).iter().all(|p| p.iter().all(|v| v.is_finite())) {
        if let Geometry::Disk { radius, normal, .. } = &e.geometry {
            if !(radius.is_finite() && normal.iter().all(|v| v.is_finite())) {
                return Err(Error::InvariantViolation(format!("non-finite coordinate in {}", e.id)));
            }
        }
        Ok(())
    } else {
        Err(Error::InvariantViolation(format!("non-finite coordinate in {}", e.id)))
    }
}

/// Scene document text: header fields, schedules, then one element per line.
pub fn scene_to_string(scene: &DomainScene) -> Result<String> {
    let schedules = json!({
        "tubes": {
            "n_factor": scene.tubes.n_factor,
            "ntilde_factor": scene.tubes.ntilde_factor,
            "nhat_edge_factor": scene.tubes.nhat_edge_factor,
            "nhat_vertex_factor": scene.tubes.nhat_vertex_factor,
        },
        "levels": scene.levels.iter().map(|l| json!({
            "level": l.level,
            "sphere_radius": l.sphere_radius,
            "shell_thickness": l.shell_thickness,
            "rho_n": scene.tubes.rho_n(l.level),
            "rho_ntilde": scene.tubes.rho_ntilde(l.level),
            "nhat_edge": scene.tubes.nhat_edge(l.level),
            "nhat_vertex": scene.tubes.nhat_vertex(l.level),
        })).collect::<Vec<_>>(),
    });
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "\"version\": {SCENE_VERSION},");
    let _ = writeln!(out, "\"max_level\": {},", scene.max_level);
    let _ = writeln!(out, "\"resolution\": {},", scene.resolution);
    let _ = writeln!(out, "\"schedules\": {},", to_json_compact(&schedules)?);
    out.push_str("\"elements\": [\n");
    for (i, e) in scene.elements.iter().enumerate() {
        check_finite(e)?;
        out.push_str(&to_json_compact(&element_json(e))?);
        out.push_str(if i + 1 < scene.elements.len() { ",\n" } else { "\n" });
    }
    out.push_str("]\n}\n");
    Ok(out)
}

pub fn save_scene(scene: &DomainScene, path: &Path) -> Result<()> {
    write_atomic(path, scene_to_string(scene)?.as_bytes())
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| malformed(format!("missing field {key:?}")))
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| malformed(format!("{what} is not a number")))
}

fn as_u64(v: &Value, what: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| malformed(format!("{what} is not a non-negative integer")))
}

fn as_point(v: &Value) -> Result<Point3> {
    let a = v.as_array().filter(|a| a.len() == 3).ok_or_else(|| malformed("point is not a 3-array"))?;
    Ok(Point3::new(as_f64(&a[0], "coordinate")?, as_f64(&a[1], "coordinate")?, as_f64(&a[2], "coordinate")?))
}

fn as_points(v: &Value) -> Result<Vec<Point3>> {
    v.as_array().ok_or_else(|| malformed("points is not an array"))?.iter().map(as_point).collect()
}

fn parse_geometry(v: &Value) -> Result<Geometry> {
    let g = v.as_object().ok_or_else(|| malformed("geometry is not an object"))?;
    let ty = field(g, "type")?.as_str().ok_or_else(|| malformed("geometry type is not a string"))?;
    let geom = match ty {
        "polyline" => Geometry::Polyline {
            points: as_points(field(g, "points")?)?,
            closed: field(g, "closed")?.as_bool().ok_or_else(|| malformed("closed is not a bool"))?,
        },
        "disk" => Geometry::Disk {
            center: as_point(field(g, "center")?)?,
            normal: as_point(field(g, "normal")?)?,
            radius: as_f64(field(g, "radius")?, "radius")?,
        },
        "patch" => {
            let rows = as_u64(field(g, "rows")?, "rows")? as usize;
            let cols = as_u64(field(g, "cols")?, "cols")? as usize;
            let points = as_points(field(g, "points")?)?;
            if rows.checked_mul(cols) != Some(points.len()) {
                return Err(malformed(format!("patch of {rows}×{cols} has {} points", points.len())));
            }
            Geometry::Patch { rows, cols, points }
        }
        "points" => Geometry::Points { points: as_points(field(g, "points")?)? },
        other => return Err(malformed(format!("unknown geometry type {other:?}"))),
    };
    match &geom {
        Geometry::Polyline { points, .. } | Geometry::Points { points } if points.is_empty() => {
            Err(malformed("empty point list"))
        }
        _ => Ok(geom),
    }
}

fn parse_element(v: &Value, max_level: u32) -> Result<ScaffoldElement> {
    let o = v.as_object().ok_or_else(|| malformed("element is not an object"))?;
    let id_text = field(o, "id")?.as_str().ok_or_else(|| malformed("id is not a string"))?;
    let id: ElementId = id_text.parse().map_err(|e: Error| malformed(format!("bad id {id_text:?}: {e}")))?;
    let kind_text = field(o, "kind")?.as_str().ok_or_else(|| malformed("kind is not a string"))?;
    let kind = ElementKind::from_name(kind_text).ok_or_else(|| malformed(format!("unknown kind {kind_text:?}")))?;
    if kind != id.kind {
        return Err(Error::InvariantViolation(format!("element {id_text} declares kind {kind_text}")));
    }
    let level = as_u64(field(o, "level")?, "level")?;
    if level == 0 || level > max_level as u64 {
        return Err(Error::InvariantViolation(format!("element {id_text} has level {level} outside 1..={max_level}")));
    }
    let e = ScaffoldElement { id, level: level as u32, geometry: parse_geometry(field(o, "geometry")?)? };
    check_finite(&e)?;
    Ok(e)
}

/// Parses and validates a scene document.
pub fn scene_from_str(text: &str) -> Result<DomainScene> {
    let doc: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let top = doc.as_object().ok_or_else(|| malformed("document is not an object"))?;
    let version = as_u64(field(top, "version")?, "version")?;
    if version != SCENE_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: SCENE_VERSION });
    }
    let max_level = as_u64(field(top, "max_level")?, "max_level")?;
    let max_level = u32::try_from(max_level).map_err(|_| malformed("max_level out of range"))?;
    let resolution = as_u64(field(top, "resolution")?, "resolution")? as usize;
    let sched = field(top, "schedules")?.as_object().ok_or_else(|| malformed("schedules is not an object"))?;
    let t = field(sched, "tubes")?.as_object().ok_or_else(|| malformed("tubes is not an object"))?;
    let tubes = TubeSchedule {
        n_factor: as_f64(field(t, "n_factor")?, "n_factor")?,
        ntilde_factor: as_f64(field(t, "ntilde_factor")?, "ntilde_factor")?,
        nhat_edge_factor: as_f64(field(t, "nhat_edge_factor")?, "nhat_edge_factor")?,
        nhat_vertex_factor: as_f64(field(t, "nhat_vertex_factor")?, "nhat_vertex_factor")?,
    };
    let elements = field(top, "elements")?
        .as_array()
        .ok_or_else(|| malformed("elements is not an array"))?
        .iter()
        .map(|v| parse_element(v, max_level))
        .collect::<Result<Vec<_>>>()?;
    let scene = DomainScene::from_parts(max_level, resolution, tubes, elements).map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvariantViolation(m),
        other => other,
    })?;
    let levels = field(sched, "levels")?.as_array().ok_or_else(|| malformed("levels is not an array"))?;
    if levels.len() != scene.levels.len() {
        return Err(Error::InvariantViolation(format!("{} level schedules for {max_level} levels", levels.len())));
    }
    for (v, l) in levels.iter().zip(&scene.levels) {
        let o = v.as_object().ok_or_else(|| malformed("level schedule is not an object"))?;
        let r = as_f64(field(o, "sphere_radius")?, "sphere_radius")?;
        if r != l.sphere_radius {
            return Err(Error::InvariantViolation(format!("level {} sphere radius {r}", l.level)));
        }
    }
    let (d, pair) = delta_min_distance(&scene);
    if d <= OVERLAP_TOL {
        let (a, b) = pair.expect("a finite distance names its pair");
        return Err(Error::InvariantViolation(format!("Δ curves {a} and {b} overlap (distance {d})")));
    }
    Ok(scene)
}

pub fn load_scene(path: &Path) -> Result<DomainScene> {
    scene_from_str(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// Kind selection from a comma-separated list of kind names or the
/// aliases `delta`, `gamma`, `beta`, `w`, `l`, `faces`, `tubes`, `all`.
pub fn parse_kinds(list: &str) -> Result<Vec<ElementKind>> {
    use ElementKind::*;
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let add: Vec<ElementKind> = match name {
            "delta" | "beta" => vec![BetaEdgeCurve, BetaFaceCurve],
            "gamma" => vec![GammaArc, GammaRadialSegment],
            "w" => vec![WDisk],
            "l" => vec![LDisk],
            "faces" => vec![SphericalFacePatch, RadialRectPatch],
            "tubes" => vec![TubeComponent],
            "all" => ElementKind::ALL.to_vec(),
            other => vec![ElementKind::from_name(other).ok_or_else(|| Error::InvalidInput(format!("unknown kind {other:?}")))?],
        };
        for k in add {
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("empty kind selection".into()));
    }
    Ok(out)
}

/// Named mesh groups in export order.
pub type MeshGroups = Vec<(String, Mesh, Vec<Point3>)>;

const TUBE_SIDES: usize = 8;
const DISK_SIDES: usize = 32;

fn element_mesh(scene: &DomainScene, e: &ScaffoldElement) -> (Mesh, Vec<Point3>) {
    match &e.geometry {
        Geometry::Polyline { points, closed } => (tube(points, *closed, scene.tubes.rho_n(e.level) / 4.0, TUBE_SIDES), Vec::new()),
        Geometry::Disk { center, normal, radius } => {
            let mut m = Mesh { vertices: vec![*center], triangles: Vec::new() };
            m.vertices.extend(circle_samples(center, normal, *radius, DISK_SIDES));
            for j in 0..DISK_SIDES as u32 {
                m.triangles.push([0, 1 + j, 1 + (j + 1) % DISK_SIDES as u32]);
            }
            (m, Vec::new())
        }
        Geometry::Patch { rows, cols, points } => {
            let mut m = Mesh { vertices: points.clone(), triangles: Vec::new() };
            let (rows, cols) = (*rows as u32, *cols as u32);
            for i in 0..rows.saturating_sub(1) {
                for j in 0..cols.saturating_sub(1) {
                    let a = i * cols + j;
                    m.triangles.push([a, a + 1, a + cols + 1]);
                    m.triangles.push([a, a + cols + 1, a + cols]);
                }
            }
            (m, Vec::new())
        }
        Geometry::Points { points } => (Mesh::default(), points.clone()),
    }
}

/// Selected elements as groups named `<kind>_k<level>_<id>`.
pub fn scene_groups(scene: &DomainScene, kinds: &[ElementKind], level: Option<u32>) -> Result<MeshGroups> {
    let groups: MeshGroups = scene
        .elements
        .iter()
        .filter(|e| kinds.contains(&e.kind()) && level.is_none_or(|l| e.level == l))
        .map(|e| {
            let (m, pts) = element_mesh(scene, e);
            (format!("{}_k{}_{}", e.kind().name(), e.level, e.id), m, pts)
        })
        .collect();
    if groups.is_empty() {
        return Err(Error::InvalidInput("selection is empty".into()));
    }
    Ok(groups)
}

fn fmt_vertex(p: &Point3) -> String {
    format!("{} {} {}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z))
}

pub fn obj_string(groups: &MeshGroups) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    for (name, mesh, points) in groups {
        let _ = writeln!(out, "g {name}");
        for v in mesh.vertices.iter().chain(points) {
            let _ = writeln!(out, "v {}", fmt_vertex(v));
        }
        for t in &mesh.triangles {
            let _ = writeln!(out, "f {} {} {}", base + t[0] as usize, base + t[1] as usize, base + t[2] as usize);
        }
        let first_point = base + mesh.vertices.len();
        for i in 0..points.len() {
            let _ = writeln!(out, "p {}", first_point + i);
        }
        base += mesh.vertices.len() + points.len();
    }
    out
}

pub fn ply_string(groups: &MeshGroups) -> String {
    let nv: usize = groups.iter().map(|(_, m, p)| m.vertices.len() + p.len()).sum();
    let nf: usize = groups.iter().map(|(_, m, _)| m.triangles.len()).sum();
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {nv}\nproperty double x\nproperty double y\nproperty double z\n\
         element face {nf}\nproperty list uchar int vertex_indices\nend_header\n"
    );
    for (_, m, p) in groups {
        for v in m.vertices.iter().chain(p) {
            let _ = writeln!(out, "{}", fmt_vertex(v));
        }
    }
    let mut base = 0usize;
    for (_, m, p) in groups {
        for t in &m.triangles {
            let _ = writeln!(out, "3 {} {} {}", base + t[0] as usize, base + t[1] as usize, base + t[2] as usize);
        }
        base += m.vertices.len() + p.len();
    }
    out
}

pub fn mesh_string(groups: &MeshGroups, format: MeshFormat) -> String {
    match format {
        MeshFormat::Obj => obj_string(groups),
        MeshFormat::Ply => ply_string(groups),
    }
}

pub fn export_mesh(
    scene: &DomainScene,
    kinds: &[ElementKind],
    level: Option<u32>,
    format: MeshFormat,
    path: &Path,
) -> Result<usize> {
    let groups = scene_groups(scene, kinds, level)?;
    write_atomic(path, mesh_string(&groups, format).as_bytes())?;
    Ok(groups.len())
}

/// Parses a polyline: one `x y z` point per line, `#` comments, and an optional
/// `closed` line marking the curve closed.
pub fn parse_polyline(text: &str) -> Result<(Vec<Point3>, bool)> {
    let mut points = Vec::new();
    let mut closed = false;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.eq_ignore_ascii_case("closed") {
            closed = true;
            continue;
        }
        let vals: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| malformed(format!("line {}: {e}", n + 1)))?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(malformed(format!("line {}: expected three finite coordinates", n + 1)));
        }
        points.push(Point3::new(vals[0], vals[1], vals[2]));
    }
    if points.len() < 2 {
        return Err(malformed("a polyline needs at least two points"));
    }
    Ok((points, closed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaffold::build_delta;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -0.0, 1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let j = to_json_compact(&x).unwrap();
            assert_eq!(serde_json::from_str::<f64>(&j).unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn scene_round_trip_is_byte_identical() {
        let s = build_delta(3, 16).unwrap();
        let a = scene_to_string(&s).unwrap();
        let t = scene_from_str(&a).unwrap();
        assert_eq!(t.elements, s.elements);
        assert_eq!(scene_to_string(&t).unwrap(), a);
    }

    #[test]
    fn load_errors_are_distinct() {
        let s = build_delta(2, 16).unwrap();
        let a = scene_to_string(&s).unwrap();
        assert!(matches!(scene_from_str(&a[..a.len() / 2]), Err(Error::Malformed(_))));
        let v2 = a.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(scene_from_str(&v2), Err(Error::VersionMismatch { found: 2, .. })));
        let mut bad = s.clone();
        let i = bad.elements.iter().position(|e| e.kind() == ElementKind::BetaFaceCurve).unwrap();
        let j = bad.elements.iter().position(|e| e.kind() == ElementKind::BetaEdgeCurve).unwrap();
        bad.elements[i].geometry = bad.elements[j].geometry.clone();
        let text = scene_to_string(&bad).unwrap();
        match scene_from_str(&text) {
            Err(Error::InvariantViolation(m)) => {
                assert!(m.contains(&bad.elements[i].id.to_string()) && m.contains(&bad.elements[j].id.to_string()), "{m}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn export_group_counts() {
        let s = build_delta(3, 16).unwrap();
        let g = scene_groups(&s, &parse_kinds("delta").unwrap(), None).unwrap();
        assert_eq!(g.len(), 38 + 146);
        let g = scene_groups(&s, &parse_kinds("gamma").unwrap(), Some(1)).unwrap();
        assert_eq!(g.len(), 20);
        let obj = obj_string(&g);
        assert_eq!(obj.lines().filter(|l| l.starts_with("g ")).count(), 20);
        assert!(obj.lines().next().unwrap().starts_with("g gamma_"));
        assert!(scene_groups(&s, &[ElementKind::WDisk], Some(9)).is_err());
        assert!(parse_kinds("").is_err());
        assert!(matches!("stl".parse::<MeshFormat>(), Err(Error::UnknownFormat(_))));
        let ply = ply_string(&g);
        assert!(ply.starts_with("ply\n"));
    }

    #[test]
    fn polyline_text() {
        let (p, c) = parse_polyline("# curve\n0 0 0\n0.1, 0.2, 0.3\nclosed\n").unwrap();
        assert_eq!(p.len(), 2);
        assert!(c);
        assert!(parse_polyline("1 2\n3 4 5\n").is_err());
        assert!(parse_polyline("1 2 3\n").is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
