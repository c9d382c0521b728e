//! Property tests for structural invariants across modules.

use std::sync::OnceLock;

use labyrinth::cmc::integrate_cmc_profile;
use labyrinth::complex::{
    build_complex, cell_contains_point, cell_neighbors, morton_decode, morton_encode, project_to_sphere, CellAddress,
    CubeComplex, Role,
};
use labyrinth::geom::{min_enclosing_ball, p3, Point3};
use labyrinth::io::{fmt_f64, parse_polyline};
use labyrinth::query::{chi, locate, locate_cell, ChiSeed, Location};
use labyrinth::scaffold::{build_delta, DomainScene};
use proptest::prelude::*;

fn scene() -> &'static DomainScene {
    static S: OnceLock<DomainScene> = OnceLock::new();
    S.get_or_init(|| build_delta(4, 32).unwrap())
}

fn complex() -> &'static CubeComplex {
    static C: OnceLock<CubeComplex> = OnceLock::new();
    C.get_or_init(|| build_complex(5).unwrap())
}

fn ball_point() -> impl Strategy<Value = Point3> {
    (-0.999f64..0.999, -0.999f64..0.999, -0.999f64..0.999).prop_filter("inside", |(x, y, z)| x * x + y * y + z * z < 0.998)
        .prop_map(|(x, y, z)| p3(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn morton_round_trip(iu in 0u32..1 << 15, iv in 0u32..1 << 15) {
        prop_assert_eq!(morton_decode(morton_encode(iu, iv)), (iu, iv));
    }

    #[test]
    fn address_text_round_trip(level in 1u32..8, f in 0u8..6, iu in 0u32..64, iv in 0u32..64, role in 0usize..4) {
        let g = 1u32 << (level - 1);
        let roles = [Role::Vertex, Role::Edge, Role::SphericalFace, Role::ThreeCell];
        let a = CellAddress::square(roles[role], level, f, iu % g, iv % g);
        let b: CellAddress = a.to_string().parse().unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn children_refine_parent(level in 1u32..5, seed in 0usize..10_000) {
        let l = complex().level(level).unwrap();
        let next = complex().level(level + 1).unwrap();
        let i = seed % l.faces.len();
        let parent = &l.faces[i];
        for c in l.children_of(i) {
            let ch = &next.faces[c];
            prop_assert_eq!(ch.cube_face, parent.cube_face);
            prop_assert_eq!((ch.iu / 2, ch.iv / 2), (parent.iu, parent.iv));
        }
    }

    #[test]
    fn projection_lands_on_sphere(p in ball_point(), r in 0.01f64..0.99) {
        prop_assume!(p.norm() > 1e-6);
        let q = project_to_sphere(&p, r).unwrap();
        prop_assert!((q.norm() - r).abs() < 1e-12);
        prop_assert!(q.normalize().dot(&p.normalize()) > 1.0 - 1e-12);
    }

    #[test]
    fn located_cell_contains_point(p in ball_point()) {
        let c = locate_cell(&p).unwrap();
        prop_assert!(cell_contains_point(&c, &p, 1e-12));
    }

    #[test]
    fn scene_location_is_consistent(p in ball_point()) {
        prop_assume!(p.norm() < 0.93);
        match locate(&p, scene(), 1e-9).unwrap() {
            Location::CoreBall => prop_assert!(p.norm() <= 0.5),
            Location::Cell(c) => prop_assert!(cell_contains_point(&c, &p, 1e-12)),
            Location::OnScaffold { distance, .. } => prop_assert!(distance <= 1e-9),
        }
    }

    #[test]
    fn adjacency_is_symmetric(p in ball_point()) {
        prop_assume!(p.norm() < 0.93);
        let c = locate_cell(&p).unwrap();
        for n in cell_neighbors(&c, 4).unwrap() {
            prop_assert!(cell_neighbors(&n, 4).unwrap().contains(&c));
        }
    }

    #[test]
    fn chi_generations_are_nested(p in ball_point(), q in ball_point()) {
        prop_assume!(p.norm() < 0.93 && q.norm() < 0.93);
        let seed = ChiSeed::Polyline(vec![p, q]);
        let a = chi(&seed, 1, scene()).unwrap().cells;
        let b = chi(&seed, 2, scene()).unwrap().cells;
        prop_assert!(!a.is_empty());
        prop_assert!(a.is_subset(&b));
    }

    #[test]
    fn enclosing_ball_contains_points(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..40)) {
        let pts: Vec<Point3> = pts.into_iter().map(|(x, y, z)| p3(x, y, z)).collect();
        let b = min_enclosing_ball(&pts).unwrap();
        let far = pts.iter().map(|p| (p - b.center).norm()).fold(0.0, f64::max);
        prop_assert!(far <= b.radius * (1.0 + 1e-9) + 1e-12);
        let diam = pts.iter().flat_map(|a| pts.iter().map(move |c| (a - c).norm())).fold(0.0, f64::max);
        prop_assert!(b.radius >= diam / 2.0 - 1e-12);
        prop_assert!(b.radius <= diam * (3.0f64 / 8.0).sqrt() + 1e-12);
    }

    #[test]
    fn float_text_round_trips(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn polyline_text_round_trips(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 2..20), closed in any::<bool>()) {
        let mut text = String::new();
        for (x, y, z) in &pts {
            text.push_str(&format!("{} {} {}\n", fmt_f64(*x), fmt_f64(*y), fmt_f64(*z)));
        }
        if closed {
            text.push_str("closed\n");
        }
        let (got, c) = parse_polyline(&text).unwrap();
        prop_assert_eq!(c, closed);
        prop_assert_eq!(got, pts.iter().map(|(x, y, z)| p3(*x, *y, *z)).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn first_integral_is_conserved(h in 0.2f64..3.0, c in -1.0f64..-0.01) {
        let p = integrate_cmc_profile(h, c, 10.0, 1e-4).unwrap();
        prop_assert!(!p.truncated);
        prop_assert!(p.first_integral_drift() <= 1e-8);
        prop_assert!(p.mean_curvature_deviation(1e-3) <= 1e-5);
    }

    #[test]
    fn homothety_scales_mean_curvature(h in 0.2f64..3.0, c in -1.0f64..-0.01, lambda in 0.1f64..20.0) {
        let p = integrate_cmc_profile(h, c, 2.0, 1e-3).unwrap();
        let q = p.scaled(lambda);
        let (a, b) = (p.numeric_mean_curvature(), q.numeric_mean_curvature());
        for i in 0..a.len() {
            prop_assert!((b[i] - lambda * a[i]).abs() <= 1e-6 * lambda.max(1.0) * a[i].abs().max(1.0));
        }
    }
}
