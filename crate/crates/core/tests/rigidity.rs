use heat_rigidity::fem::assemble;
use heat_rigidity::geometry::{make_domain, DomainSpec};
use heat_rigidity::heatflow::heat_solution;
use heat_rigidity::rigidity::{heat_content, serrin_check, torsion};
use heat_rigidity::spectral::eigenbasis;

#[test]
fn torsion_cross_validation() {
    for spec in [
        DomainSpec::disk(1.0, 0.05),
        DomainSpec::ellipse(1.5, 1.0, 0.05),
        DomainSpec::radial(0.1, 5, 0.05),
        DomainSpec::annulus(0.3, 1.0, 0.05),
    ] {
        let sys = assemble(&make_domain(&spec).unwrap()).unwrap();
        let b = eigenbasis(&sys, 40).unwrap();
        let p = torsion(&sys, &b, 40).unwrap();
        assert!(p.discrepancy <= 1e-2, "{:?}: {}", spec.family, p.discrepancy);
        let flux = serrin_check(&sys, &p).unwrap();
        // Green: the total torsion flux is minus the area.
        assert!((flux.total + sys.area).abs() <= 1e-10 * sys.area);
    }
}

/// `d/ds ∫u(s) = 1ᵀM ∂ₜu(s)`, checked through the heat-content path.
#[test]
fn heat_content_rate_matches_flux_total() {
    let sys = assemble(&make_domain(&DomainSpec::disk(1.0, 0.05)).unwrap()).unwrap();
    let b = eigenbasis(&sys, 120).unwrap();
    let ones = vec![1.0; sys.dofs.num_vertices()];
    let delta = 1e-3;
    for s in [0.3, 0.5, 1.0] {
        let f = |x: f64| heat_content(&sys, &b, &ones, x.sqrt()).unwrap().value;
        let fd = (f(s + delta) - f(s - delta)) / (2.0 * delta);
        let state = heat_solution(&b, s, 1e-10 * sys.area).unwrap();
        let rate: f64 = sys.mass.row_sums().iter().zip(&state.du_dt).map(|(a, d)| a * d).sum();
        assert!((fd - rate).abs() <= 1e-4 * rate.abs(), "s={s}: {fd} {rate}");
    }
}
