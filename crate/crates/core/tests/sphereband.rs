use std::f64::consts::PI;

use heat_rigidity::sphereband::{band_eigenbasis, band_flux, BandSpec};
use proptest::prelude::*;

#[test]
fn first_eigenvalue_is_grid_converged() {
    for spec in [BandSpec::band(0.6, 2.2, 1000), BandSpec::cap(PI / 2.0, 1000), BandSpec::band(1.0, PI - 1.0, 1000)] {
        let a = band_eigenbasis(&spec, 1).unwrap().lambdas[0];
        let b = band_eigenbasis(&spec.with_points(2000), 1).unwrap().lambdas[0];
        assert!((a - b).abs() <= 1e-3 * b, "{:?}: {a} {b}", spec.shape);
    }
}

#[test]
fn symmetric_band_is_reflection_equivariant() {
    let b = band_eigenbasis(&BandSpec::band(0.7, PI - 0.7, 801), 40).unwrap();
    let n = b.theta.len();
    for i in 0..n {
        assert!((b.theta[i] + b.theta[n - 1 - i] - PI).abs() <= 1e-13);
    }
    for t in [0.01, 0.05, 0.2, 1.0] {
        let (u, _) = b.heat(t);
        let worst = (0..n).map(|i| (u[i] - u[n - 1 - i]).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-9, "t={t}: {worst:e}");
        let (q1, q2) = band_flux(&b, t).unwrap();
        assert!((q1 - q2.unwrap()).abs() <= 1e-6 * q1.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn bessel_inequality(a in 0.2f64..1.4, width in 0.3f64..1.5) {
        let spec = BandSpec::band(a, (a + width).min(PI - 0.1), 300);
        let b = band_eigenbasis(&spec, 20).unwrap();
        let total: f64 = b.alphas.iter().map(|x| x * x).sum();
        prop_assert!(total <= spec.weight_integral() * (1.0 + 1e-10));
        prop_assert!(b.lambdas.windows(2).all(|w| w[0] < w[1]));
    }
}
