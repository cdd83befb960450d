use heat_rigidity::fem::{assemble, discrete_harmonic_extension, SystemMatrices};
use heat_rigidity::geometry::{make_domain, DomainSpec};
use heat_rigidity::heatflow::{
    boundary_flux, conormal_pairing_with_extension, consistent_flux, heat_solution, heat_solution_fixed, propagate,
};
use heat_rigidity::rigidity::{heat_pairings, zero_average_test_functions};
use heat_rigidity::spectral::{eigenbasis, EigenBasis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn ellipse() -> &'static (SystemMatrices, EigenBasis) {
    static CELL: OnceLock<(SystemMatrices, EigenBasis)> = OnceLock::new();
    CELL.get_or_init(|| {
        let sys = assemble(&make_domain(&DomainSpec::ellipse(1.5, 1.0, 0.1)).unwrap()).unwrap();
        let b = eigenbasis(&sys, 40).unwrap();
        (sys, b)
    })
}

fn m_norm(sys: &SystemMatrices, f: &[f64]) -> f64 {
    sys.mass.bilinear(f, f).max(0.0).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn semigroup(t1 in 0.01f64..0.5, t2 in 0.01f64..0.5) {
        let (sys, b) = ellipse();
        let k = b.len();
        let direct = heat_solution_fixed(b, t1 + t2, k).unwrap();
        let first = heat_solution_fixed(b, t1, k).unwrap();
        let again = propagate(sys, b, &first.u, t2);
        let diff: Vec<f64> = direct.u.iter().zip(&again).map(|(a, c)| a - c).collect();
        prop_assert!(m_norm(sys, &diff) <= 1e-9, "{}", m_norm(sys, &diff));
    }

    #[test]
    fn series_consistency(t in 0.01f64..1.0) {
        let (sys, b) = ellipse();
        let s = heat_solution_fixed(b, t, b.len()).unwrap();
        let q = boundary_flux(sys, &s).unwrap().q;
        let mut sum = vec![0.0; q.len()];
        for k in 0..b.len() {
            let phi: Vec<f64> = b.modes[k].iter().map(|v| b.alphas[k] * v).collect();
            let lap: Vec<f64> = phi.iter().map(|v| -b.lambdas[k] * v).collect();
            let qk = consistent_flux(sys, &phi, &lap, t).unwrap().q;
            let w = (-b.lambdas[k] * t).exp();
            sum.iter_mut().zip(&qk).for_each(|(a, v)| *a += w * v);
        }
        let scale = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, c) in q.iter().zip(&sum) {
            prop_assert!((a - c).abs() <= 1e-10 * scale.max(1.0), "{a} {c}");
        }
    }

    /// Green's identity: the pairing does not depend on the extension.
    #[test]
    fn extension_independence(seed in any::<u64>(), t in 0.02f64..1.0) {
        let (sys, b) = ellipse();
        let s = heat_solution_fixed(b, t, b.len()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi: Vec<f64> = (0..sys.dofs.num_boundary()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ext = discrete_harmonic_extension(sys, &psi).unwrap();
        let reference = conormal_pairing_with_extension(sys, &s.u, &s.du_dt, &ext).unwrap();
        for _ in 0..5 {
            let mut other = ext.clone();
            for &v in &sys.dofs.interior {
                other[v] = rng.random_range(-2.0..2.0);
            }
            let p = conormal_pairing_with_extension(sys, &s.u, &s.du_dt, &other).unwrap();
            prop_assert!((p - reference).abs() <= 1e-9 * reference.abs().max(1e-3), "{p} {reference}");
        }
    }

    /// `q̄ |∂Ω| = d/dt ∫u`.
    #[test]
    fn mean_flux_law(t in 0.02f64..1.5) {
        let (sys, b) = ellipse();
        let s = heat_solution_fixed(b, t, b.len()).unwrap();
        let f = boundary_flux(sys, &s).unwrap();
        let rate: f64 = (0..b.len()).map(|k| -b.lambdas[k] * b.alphas[k].powi(2) * (-b.lambdas[k] * t).exp()).sum();
        let lhs = f.mean * sys.boundary_length;
        prop_assert!((lhs - rate).abs() <= 1e-8 * rate.abs(), "{lhs} {rate}");
        prop_assert!(f.balance_error() <= 1e-8);
    }
}

/// Zero-average test functions are annihilated by the disk flux up to the
/// flux deviation itself.
#[test]
fn disk_annihilates_zero_average_data() {
    let sys = assemble(&make_domain(&DomainSpec::disk(1.0, 0.05)).unwrap()).unwrap();
    let b = eigenbasis(&sys, 80).unwrap();
    let psis = zero_average_test_functions(&sys, 10, 7);
    for t in [0.1, 0.5, 1.0] {
        let s = heat_solution(&b, t, 1e-8).unwrap();
        let noise = boundary_flux(&sys, &s).unwrap().deviation;
        let worst = heat_pairings(&sys, &b, t, 1e-8, &psis).unwrap();
        assert!(worst <= noise * (1.0 + 1e-9), "t={t}: {worst:e} > {noise:e}");
    }
    let ell = ellipse();
    let psis = zero_average_test_functions(&ell.0, 10, 7);
    assert!(heat_pairings(&ell.0, &ell.1, 0.5, 1e-8, &psis).unwrap() > 0.05);
}
