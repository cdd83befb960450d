use heat_rigidity::fem::assemble;
use heat_rigidity::geometry::{make_domain, refine, DomainSpec};
use heat_rigidity::spectral::{eigenbasis, eigenbasis_with, EigenMethod, SpectralOptions};
use proptest::prelude::*;

/// `λₖ(h/2) ≤ λₖ(h)` for `k ≤ 10`. Square meshes are exactly nested; the
/// disk's boundary projection only enlarges the domain.
#[test]
fn refinement_monotonicity() {
    for spec in [DomainSpec::square(1.0, 0.1), DomainSpec::disk(1.0, 0.1), DomainSpec::ellipse(1.5, 1.0, 0.1)] {
        let coarse = make_domain(&spec).unwrap();
        let fine = refine(&coarse).unwrap();
        let a = eigenbasis(&assemble(&coarse).unwrap(), 10).unwrap();
        let b = eigenbasis(&assemble(&fine).unwrap(), 10).unwrap();
        for k in 0..10 {
            assert!(b.lambdas[k] <= a.lambdas[k] + 1e-9, "{:?} k={k}: {} > {}", spec.family, b.lambdas[k], a.lambdas[k]);
        }
    }
}

#[test]
fn disk_groups_alternate() {
    let sys = assemble(&make_domain(&DomainSpec::disk(1.0, 0.025)).unwrap()).unwrap();
    let b = eigenbasis(&sys, 10).unwrap();
    // J0, J1 pair, J2 pair, J0', J3 pair, J1' pair.
    let sizes: Vec<usize> = b.group_sizes().into_iter().take(6).collect();
    assert_eq!(sizes, vec![1, 2, 2, 1, 2, 2]);
}

#[test]
fn reconstruction_of_one_improves() {
    let sys = assemble(&make_domain(&DomainSpec::disk(1.0, 0.05)).unwrap()).unwrap();
    let b = eigenbasis(&sys, 40).unwrap();
    let errs: Vec<f64> = [5, 10, 20, 40].iter().map(|&k| b.reconstruction_error(k, &sys.mass)).collect();
    assert!(errs[3] < errs[0], "{errs:?}");
    assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
}

#[test]
fn complete_basis_satisfies_parseval() {
    let sys = assemble(&make_domain(&DomainSpec::disk(1.0, 0.2)).unwrap()).unwrap();
    let n = sys.dofs.num_interior();
    let b = eigenbasis(&sys, n).unwrap();
    assert!(b.is_complete());
    let total: f64 = b.alphas.iter().map(|a| a * a).sum();
    // Parseval: the complete expansion equals the M-projection of 1 onto
    // fields vanishing on the boundary.
    let err = b.reconstruction_error(n, &sys.mass);
    assert!((total + err * err - sys.area).abs() <= 1e-9 * sys.area, "{total} {err}");
    assert!(total <= sys.area * (1.0 + 1e-10));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn m_orthonormal_and_bessel(a in 0.8f64..1.6, b in 0.8f64..1.6, lanczos in any::<bool>()) {
        let sys = assemble(&make_domain(&DomainSpec::ellipse(a, b, 0.08)).unwrap()).unwrap();
        let method = if lanczos { EigenMethod::Lanczos } else { EigenMethod::Dense };
        let basis = eigenbasis_with(&sys, 12, &SpectralOptions { method, ..Default::default() }).unwrap();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let g = sys.mass.bilinear(&basis.modes[i], &basis.modes[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - want).abs() <= 1e-8, "({i},{j}) {g}");
            }
        }
        let total: f64 = basis.alphas.iter().map(|x| x * x).sum();
        prop_assert!(total <= basis.area * (1.0 + 1e-10));
        prop_assert!(basis.alphas.iter().all(|&x| x >= 0.0));
    }
}
