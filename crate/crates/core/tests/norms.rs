use fgl_core::norms::*;
use fgl_core::operators::Grid1D;
use fgl_core::Complex64;
use proptest::prelude::*;

fn field(values: Vec<(f64, f64)>) -> GridFunction {
    let grid = Grid1D::new(0.0, 1.0, values.len() + 1).unwrap();
    GridFunction::new(grid, values.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

fn values() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..150)
}

#[test]
fn rejects_non_finite_values() {
    let grid = Grid1D::new(0.0, 1.0, 4).unwrap();
    let v = vec![Complex64::new(f64::NAN, 0.0); 3];
    assert!(GridFunction::new(grid, v).is_err());
}

#[test]
fn sigma_outside_unit_interval_rejected() {
    let u = field(vec![(1.0, 0.0); 5]);
    assert!(frac_seminorm(&u, 1.5).is_err());
    assert!(interpolation_probe(&u, 0.8, 0.5).is_err());
}

#[test]
fn printed_gagliardo_nirenberg_constant_is_too_small() {
    // a single spike already violates the inequality with the printed constant
    let mut v = vec![(0.0, 0.0); 63];
    v[31] = (1.0, 0.0);
    let (lhs, rhs) = gn_probe(&field(v), 0.3, 0.75, 4.0).unwrap();
    assert!(rhs < lhs, "lhs {lhs}, rhs {rhs}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_split(v in values(), sigma in 0.0f64..=1.0) {
        let u = field(v);
        let full = frac_norm_spectral(&u, sigma).unwrap().powi(2);
        let parts = frac_norm(&u, sigma).unwrap().powi(2);
        prop_assert!((full - parts).abs() <= 1e-12 * full.max(1e-300));
    }

    #[test]
    fn interpolation_inequality_holds(v in values(), s in 0.05f64..=1.0, frac in 0.0f64..=1.0) {
        let u = field(v);
        let (lhs, rhs) = interpolation_probe(&u, s * frac, s).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn seminorm_is_homogeneous(v in values(), sigma in 0.0f64..=1.0, c in 0.1f64..10.0) {
        let u = field(v);
        let a = frac_seminorm(&u.scaled(Complex64::new(0.0, c)), sigma).unwrap();
        let b = c * frac_seminorm(&u, sigma).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn lp_norms_are_ordered_by_max(v in values(), p in 1.0f64..8.0) {
        let u = field(v);
        let h = u.h();
        let lp = norm_lph(&u, p).unwrap();
        let linf = norm_lph(&u, f64::INFINITY).unwrap();
        let n = u.values.len() as f64;
        prop_assert!(lp <= (h * n).powf(1.0 / p) * linf * (1.0 + 1e-12));
    }
}
