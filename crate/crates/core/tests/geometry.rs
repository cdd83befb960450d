use std::f64::consts::PI;

use heat_rigidity::geometry::{boundary_curvature, make_domain, read_mesh, refine, write_mesh, DomainSpec};
use proptest::prelude::*;

fn smooth_families(h: f64) -> Vec<DomainSpec> {
    vec![
        DomainSpec::disk(1.0, h),
        DomainSpec::disk(2.0, 2.0 * h),
        DomainSpec::ellipse(1.5, 1.0, h),
        DomainSpec::annulus(0.3, 1.0, h),
        DomainSpec::radial(0.1, 5, h),
    ]
}

#[test]
fn area_error_is_second_order() {
    for spec in smooth_families(0.1) {
        let mesh = make_domain(&spec).unwrap();
        let fine = refine(&mesh).unwrap();
        let e0 = (mesh.area() - spec.area()).abs();
        let e1 = (fine.area() - spec.area()).abs();
        eprintln!("{:?}: {e0:e} -> {e1:e}", spec.family);
        assert!(e1 <= 0.6 * e0, "{:?}: {e0:e} -> {e1:e}", spec.family);
    }
}

#[test]
fn loops_turn_by_two_pi() {
    for spec in smooth_families(0.1).into_iter().chain([DomainSpec::square(1.0, 0.1)]) {
        let mesh = make_domain(&spec).unwrap();
        for l in 0..mesh.boundary_loops.len() {
            let turning = boundary_curvature(&mesh, l).unwrap().total_turning();
            let want = if l == 0 { 2.0 * PI } else { -2.0 * PI };
            assert!((turning - want).abs() <= 1e-6, "{:?} loop {l}: {turning}", spec.family);
        }
    }
}

#[test]
fn curvature_integrates_to_two_pi() {
    for spec in [DomainSpec::disk(1.0, 0.1), DomainSpec::ellipse(1.5, 1.0, 0.1), DomainSpec::radial(0.1, 5, 0.05)] {
        let mesh = make_domain(&spec).unwrap();
        let total = boundary_curvature(&mesh, 0).unwrap().integral();
        assert!((total - 2.0 * PI).abs() <= 0.01 * 2.0 * PI, "{:?}: {total}", spec.family);
    }
}

#[test]
fn annulus_has_two_loops_and_round_trips() {
    let mesh = make_domain(&DomainSpec::annulus(0.3, 1.0, 0.1)).unwrap();
    assert_eq!(mesh.boundary_loops.len(), 2);
    let mut buf = Vec::new();
    write_mesh(&mesh, &mut buf).unwrap();
    let back = read_mesh(buf.as_slice()).unwrap();
    assert_eq!(back.vertices, mesh.vertices);
    assert_eq!(back.triangles, mesh.triangles);
    assert_eq!(back.boundary_loops.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ellipse_meshes_are_valid(a in 0.6f64..2.0, b in 0.6f64..2.0) {
        let spec = DomainSpec::ellipse(a, b, 0.12);
        let mesh = make_domain(&spec).unwrap();
        mesh.validate().unwrap();
        prop_assert!((0..mesh.num_triangles()).all(|t| mesh.signed_area(t) > 0.0));
        prop_assert!((mesh.area() - spec.area()).abs() <= 0.02 * spec.area());
        prop_assert!((mesh.boundary_length() - spec.perimeter()).abs() <= 0.01 * spec.perimeter());
        prop_assert!(mesh.boundary_projection_error() <= 1e-12);
    }

    #[test]
    fn radial_loops_turn_once(eps in -0.2f64..0.2, m in 1u32..7) {
        let mesh = make_domain(&DomainSpec::radial(eps, m, 0.08)).unwrap();
        let turning = boundary_curvature(&mesh, 0).unwrap().total_turning();
        prop_assert!((turning - 2.0 * PI).abs() <= 1e-6);
    }
}
