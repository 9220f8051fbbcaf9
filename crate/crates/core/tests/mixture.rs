use proptest::prelude::*;
use pspin::{e_infinity_pure, EInfinity, Mixture};

fn mixture_strategy() -> impl Strategy<Value = Mixture> {
    prop::collection::vec((2u32..8, 0.05f64..1.5), 1..4).prop_map(|v| Mixture::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_match_central_differences(m in mixture_strategy(), q in 0.05f64..0.95) {
        let h = 1e-5;
        for order in 1..=3u32 {
            let exact = m.eval_derivative(q, order).unwrap();
            let fd = (m.eval_derivative(q + h, order - 1).unwrap() - m.eval_derivative(q - h, order - 1).unwrap()) / (2.0 * h);
            prop_assert!((fd - exact).abs() <= 1e-8 * (1.0 + exact.abs()), "order {order}: {fd} vs {exact}");
        }
    }

    #[test]
    fn dilation_rescales_argument(m in mixture_strategy(), t in 0.5f64..1.0, q in 0.0f64..1.0) {
        let d = m.dilate(t).unwrap();
        let lhs = d.xi(q);
        let rhs = m.xi(t * t * q);
        prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + rhs.abs()));
    }

    #[test]
    fn window_is_ordered(m in mixture_strategy()) {
        if let Some((lo, hi)) = m.e_infinity_pm().window() {
            prop_assert!(lo <= hi);
        }
    }
}

#[test]
fn unit_dilation_is_identity() {
    let m = Mixture::new([(2, 0.7), (5, 0.3)]).unwrap();
    assert_eq!(m.dilate(1.0).unwrap(), m);
}

#[test]
fn quadratic_window_is_double_root() {
    let (lo, hi) = Mixture::pure(2).unwrap().e_infinity_pm().window().unwrap();
    assert!((lo - 2f64.sqrt()).abs() < 1e-12 && (hi - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn cubic_window_matches_high_precision_evaluation() {
    // 30-digit evaluation of the displayed formula at ξ' = 3, ξ'' = 6.
    let oracle = 1.632_993_161_855_452;
    let (lo, hi) = Mixture::pure(3).unwrap().e_infinity_pm().window().unwrap();
    assert!((lo - oracle).abs() < 1e-7 && (hi - oracle).abs() < 1e-7, "{lo} {hi}");
    assert!((e_infinity_pure(3).unwrap() - oracle).abs() < 1e-15);
}

#[test]
fn negative_discriminant_is_reported() {
    // ξ = q² + q⁴: the discriminant is negative in high precision.
    let m = Mixture::new([(2, 1.0), (4, 1.0)]).unwrap();
    assert!(matches!(m.e_infinity_pm(), EInfinity::Undefined { discriminant } if discriminant < 0.0));
}

#[test]
fn pure_thresholds_increase_toward_two() {
    let v: Vec<f64> = (3..40).map(|p| e_infinity_pure(p).unwrap()).collect();
    assert!((v[1] - 1.732_050_807_568_877_2).abs() < 1e-12);
    assert!(v.windows(2).all(|w| w[1] > w[0]));
    assert!(*v.last().unwrap() < 2.0);
}
