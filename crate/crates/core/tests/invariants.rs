use proptest::prelude::*;
use rdlab_core::estimates::exponent_table;
use rdlab_core::nonlinearity::{check_f1_growth, check_f1_monotonicity};
use rdlab_core::{decompose, DissipativityConstants, DomainSpec, Field, NonlinearitySpec, ScanSpec, SineTransform};

fn line(m: usize) -> DomainSpec {
    DomainSpec::new(1, 1.0, m).unwrap()
}

fn cubic_decomposition() -> rdlab_core::Decomposition {
    let f = NonlinearitySpec::new(vec![0.0, -1.0, 0.0, 1.0]).unwrap();
    let c = DissipativityConstants::new(4.0, 3.0, 1.0, 0.5, 0.5, 2.0).unwrap();
    decompose(&f, &c, &ScanSpec::new(50.0, 1e-3).unwrap()).unwrap()
}

fn naive_power(values: &[f64], gamma: f64, h: f64) -> f64 {
    values.iter().map(|v| v.abs().powf(gamma)).sum::<f64>() * h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lebesgue_interpolation(values in prop::collection::vec(-5.0f64..5.0, 31), gamma in 2.0f64..9.0) {
        let d = line(31);
        let f = Field::new(d, values).unwrap();
        let lhs = f.lebesgue_power(gamma).unwrap();
        let rhs = f.l2_norm().powi(2) * f.max_abs().powf(gamma - 2.0);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
        let naive = naive_power(f.values(), gamma, d.cell_volume());
        prop_assert!((lhs - naive).abs() <= 1e-12 * naive.max(1e-300));
    }

    #[test]
    fn eigenmode_gradient_norm(k in 1usize..40, amplitude in 0.1f64..10.0) {
        let d = line(127);
        let u = d.eigenmode([k, 0]).scale(amplitude);
        let c = SineTransform::new(d).forward(&u).unwrap();
        let mu = (k as f64 * std::f64::consts::PI).powi(2);
        let expected = mu.sqrt() * u.l2_norm();
        prop_assert!((c.h1_seminorm() - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn transform_round_trip(values in prop::collection::vec(-3.0f64..3.0, 15 * 15)) {
        let d = DomainSpec::new(2, 2.0, 15).unwrap();
        let f = Field::new(d, values).unwrap();
        let mut t = SineTransform::new(d);
        let c = t.forward(&f).unwrap();
        let back = t.inverse(&c).unwrap();
        let err = back.sub(&f).unwrap().max_abs();
        prop_assert!(err <= 1e-12 * (1.0 + f.max_abs()));
    }

    #[test]
    fn exponent_identity(p in 2.0001f64..10.0) {
        let t = exponent_table(p, 50).unwrap();
        prop_assert!(t.identity_residual() <= 1e-12);
        prop_assert!(t.bridge_residual().abs() <= 1e-12);
        for w in t.entries.windows(2) {
            prop_assert!(w[1].a > w[0].a);
        }
        prop_assert!((t.level(2).unwrap().pa - (2.0 * p - 2.0)).abs() <= 1e-12);
    }

    #[test]
    fn taylor_difference_matches_naive(
        coefficients in prop::collection::vec(-3.0f64..3.0, 2..7),
        a in -4.0f64..4.0,
        h in prop_oneof![-2.0f64..-1e-3, 1e-3f64..2.0],
    ) {
        let f = NonlinearitySpec::new(coefficients).unwrap();
        let naive = f.value(a + h) - f.value(a);
        let scale: f64 = f.coefficients().iter().map(|c| c.abs()).sum::<f64>() * 7f64.powi(7);
        let exact = f.exact_difference(a, h).unwrap();
        prop_assert!((exact - naive).abs() <= 1e-12 * scale);
    }

    #[test]
    fn splitting_reassembles(s in -50.0f64..50.0) {
        let d = cubic_decomposition();
        let f = d.nonlinearity();
        let sum = d.f1(s) + d.f2(s);
        prop_assert!((sum - f.value(s)).abs() <= 1e-12 * (1.0 + f.value(s).abs()));
    }

    #[test]
    fn first_part_is_monotone_and_bounded(pairs in prop::collection::vec((-30.0f64..30.0, -30.0f64..30.0), 1..200)) {
        let d = cubic_decomposition();
        prop_assert!(check_f1_monotonicity(&d, &pairs).clean());
        prop_assert!(check_f1_growth(&d, &pairs).clean());
    }
}

#[test]
fn quartic_first_part() {
    let d = cubic_decomposition();
    for s in [-3.0, -0.5, 0.0, 1.0, 2.5] {
        let expected = 0.25 * s * s * s - 2.0;
        assert!((d.f1(s) - expected).abs() < 1e-12);
    }
    let report = d.recertify(&ScanSpec::new(50.0, 1e-3).unwrap()).unwrap();
    assert!(report.pass, "{report:?}");
}
