//! Property tests for the structural invariants: symmetry and smoothness of
//! the activation family, reparametrization identities, oracle agreement,
//! and the exhaustive dataset case split.

use blowup_lab::activation::ActivationKind;
use blowup_lab::discrete::{classify_data, discrete_risk, fit_two_points, DataCase, DataSet};
use blowup_lab::network::{homogeneous_rescale, realize, rescale_to_unit, ParamVector};
use blowup_lab::risk::{risk_exact, risk_quadrature};
use blowup_lab::target::TargetFunction;
use blowup_lab::Domain;
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = ActivationKind> {
    prop_oneof![
        Just(ActivationKind::softsign()),
        Just(ActivationKind::arctan()),
        (0.1f64..2.9).prop_map(|xi| ActivationKind::isru(xi).unwrap()),
        Just(ActivationKind::elu()),
        Just(ActivationKind::tanh()),
        Just(ActivationKind::logistic()),
        Just(ActivationKind::softplus()),
        Just(ActivationKind::relu()),
        (0.01f64..0.9).prop_map(|g| ActivationKind::leaky_relu(g).unwrap()),
        (2i32..4).prop_map(|k| ActivationKind::repu(k, 0.0).unwrap()),
    ]
}

fn theta_strategy(h: usize) -> impl Strategy<Value = ParamVector> {
    prop::collection::vec(-3.0f64..3.0, 3 * h + 1)
        .prop_map(move |v| ParamVector::new(h, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn derivative_matches_central_difference(kind in kind_strategy(), x in -5.0f64..5.0) {
        // Exclude a small neighborhood of the kink at the origin.
        prop_assume!(x.abs() > 1e-3);
        let h = 1e-6;
        let fd = (kind.eval(x + h).unwrap() - kind.eval(x - h).unwrap()) / (2.0 * h);
        let d = kind.derivative(x).unwrap();
        prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "{kind} at {x}: {d} vs {fd}");
    }

    #[test]
    fn odd_members_are_odd(x in -50.0f64..50.0, xi in 0.1f64..2.9) {
        for kind in [
            ActivationKind::softsign(),
            ActivationKind::tanh(),
            ActivationKind::arctan(),
            ActivationKind::isru(xi).unwrap(),
        ] {
            let s = kind.eval(x).unwrap() + kind.eval(-x).unwrap();
            prop_assert!(s.abs() <= 1e-14, "{kind} at {x}");
        }
        let l = ActivationKind::logistic();
        prop_assert!((l.eval(x).unwrap() + l.eval(-x).unwrap() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn unit_rescale_preserves_realization(
        theta in theta_strategy(2),
        kind in kind_strategy(),
        lo in -3.0f64..1.0,
        len in 0.5f64..4.0,
        y in 0.0f64..1.0,
    ) {
        let domain = Domain::new(lo, lo + len).unwrap();
        let unit = rescale_to_unit(&theta, domain);
        let a = realize(&unit, kind, y).unwrap();
        let b = realize(&theta, kind, domain.from_unit(y)).unwrap();
        prop_assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()), "{a} vs {b}");
    }

    #[test]
    fn homogeneous_rescale_preserves_realization(
        theta in theta_strategy(2),
        k in 1i32..4,
        lambda in 0.1f64..8.0,
        x in -2.0f64..2.0,
    ) {
        let kind = ActivationKind::repu(k, 0.0).unwrap();
        let scaled = homogeneous_rescale(&theta, lambda, kind).unwrap();
        let a = realize(&theta, kind, x).unwrap();
        let b = realize(&scaled, kind, x).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn exact_risk_is_nonnegative_and_matches_quadrature(
        theta in theta_strategy(2),
        k in 1i32..3,
    ) {
        let kind = ActivationKind::repu(k, 0.0).unwrap();
        let domain = Domain::unit();
        let target = TargetFunction::Indicator;
        let e = risk_exact(&theta, kind, &target, domain).unwrap();
        prop_assert!(e.value >= 0.0);
        let q = risk_quadrature(&theta, kind, &target, domain, 1e-10).unwrap();
        prop_assert!((e.value - q.value).abs() <= 1e-9 * (1.0 + e.value), "{} vs {}", e.value, q.value);
    }

    #[test]
    fn three_point_classification_is_a_partition(
        ys in prop::collection::vec(-3.0f64..3.0, 3),
        snap in prop::bool::ANY,
    ) {
        // Snapping some outputs together exercises the tie and plateau
        // branches.
        let mut ys = ys;
        if snap {
            ys[1] = ys[0];
        }
        let data = DataSet::new(vec![0.0, 1.0, 2.0], ys.clone()).unwrap();
        let case = classify_data(&data).unwrap();
        let (y1, y2, y3) = (ys[0], ys[1], ys[2]);
        let constant = y1 == y2 && y2 == y3;
        let interior = y1.min(y3) < y2 && y2 < y1.max(y3);
        let monotone = !constant && !interior && (y1 - y2) * (y3 - y2) >= 0.0;
        match case {
            DataCase::Constant => prop_assert!(constant),
            DataCase::InteriorThree => prop_assert!(interior),
            DataCase::MonotoneThree { j, k } => {
                prop_assert!(monotone);
                prop_assert!((j, k) == (1, 3) || (j, k) == (3, 1));
                let dj = (ys[j - 1] - y2).abs();
                let dk = (ys[k - 1] - y2).abs();
                prop_assert!(dj >= dk);
                if dj == dk {
                    prop_assert_eq!(j, 1);
                }
            }
            DataCase::Other => prop_assert!(!constant && !interior && !monotone),
            DataCase::ExactFitTwo => prop_assert!(false, "two-point case from three points"),
        }
    }

    #[test]
    fn two_point_fit_interpolates(
        x1 in -3.0f64..2.0,
        gap in 0.2f64..3.0,
        y1 in -4.0f64..4.0,
        y2 in -4.0f64..4.0,
    ) {
        let data = DataSet::new(vec![x1, x1 + gap], vec![y1, y2]).unwrap();
        let theta = fit_two_points(&data).unwrap();
        prop_assert!(discrete_risk(&theta, &data).unwrap() <= 1e-20);
    }

    #[test]
    fn dataset_csv_round_trips(
        xs_gaps in prop::collection::vec(0.1f64..2.0, 2..6),
        y0 in -5.0f64..5.0,
    ) {
        let mut xs = vec![0.0];
        for g in &xs_gaps {
            xs.push(xs.last().unwrap() + g);
        }
        let ys: Vec<f64> = xs.iter().map(|x| y0 + x.sin()).collect();
        let data = DataSet::new(xs, ys).unwrap();
        let back = DataSet::from_csv(&data.to_csv()).unwrap();
        prop_assert_eq!(back, data);
    }
}
