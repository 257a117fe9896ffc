use labelcast::labeling::{
    average_soft_labels, dirichlet_mom, hard_labels, importance_weights_from,
};
use labelcast::{EmptyClassPolicy, LogitMatrix};
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = LogitMatrix> {
    (1usize..40, 2usize..6).prop_flat_map(|(n, k)| {
        prop::collection::vec(-8.0f64..8.0, n * k)
            .prop_map(move |v| LogitMatrix::new(n, k, v).unwrap())
    })
}

fn scan_argmax(row: &[f64]) -> u32 {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best as u32
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hard_labels_match_scan_and_are_invariant(m in matrix(), c in -5.0f64..5.0, a in 0.1f64..10.0) {
        let h = hard_labels(&m);
        let oracle: Vec<u32> = m.rows().map(scan_argmax).collect();
        prop_assert_eq!(&h, &oracle);
        let moved: Vec<f64> = m.values().iter().map(|x| a * x + c).collect();
        let moved = LogitMatrix::new(m.n(), m.k(), moved).unwrap();
        prop_assert_eq!(&h, &hard_labels(&moved));
    }

    #[test]
    fn prototypes_and_dirichlet_means_are_distributions(m in matrix(), t in 0.2f64..5.0) {
        let h = hard_labels(&m);
        let protos = average_soft_labels(&m, &h, t, EmptyClassPolicy::Uniform).unwrap();
        let alphas = dirichlet_mom(&m, &h, t, EmptyClassPolicy::Uniform).unwrap();
        for (p, a) in protos.rows().zip(alphas.rows()) {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!(a.iter().all(|&x| x > 0.0));
            let s: f64 = a.iter().sum();
            prop_assert!(s >= 0.1 * (1.0 - 1e-9), "precision below the clip: {}", s);
            prop_assert!((a.iter().map(|x| x / s).sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn weights_have_unit_mean_and_shift_invariance(
        s in prop::collection::vec(-20.0f64..20.0, 1..100),
        c in -50.0f64..50.0,
        t in 0.1f64..10.0,
    ) {
        let w = importance_weights_from(&s, t).unwrap();
        prop_assert!((w.iter().sum::<f64>() / w.len() as f64 - 1.0).abs() <= 1e-9);
        prop_assert!(w.iter().all(|&x| x > 0.0));
        let shifted: Vec<f64> = s.iter().map(|x| x + c).collect();
        for (a, b) in w.iter().zip(importance_weights_from(&shifted, t).unwrap()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
        let scaled: Vec<f64> = s.iter().map(|x| x / t).collect();
        for (a, b) in w.iter().zip(importance_weights_from(&scaled, 1.0).unwrap()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }
}

/// Logits whose softmax is exactly `p` (two classes).
fn two_class(rows: &[[f64; 2]]) -> LogitMatrix {
    LogitMatrix::from_rows(
        &rows
            .iter()
            .map(|p| [p[0].ln(), p[1].ln()])
            .collect::<Vec<_>>(),
    )
    .unwrap()
}

#[test]
fn method_of_moments_fixtures() {
    let m = two_class(&[[0.6, 0.4], [0.8, 0.2]]);
    let protos = average_soft_labels(&m, &[0, 0], 1.0, EmptyClassPolicy::Uniform).unwrap();
    assert!((protos.row(0)[0] - 0.7).abs() < 1e-12);
    let a = dirichlet_mom(&m, &[0, 0], 1.0, EmptyClassPolicy::Uniform).unwrap();
    assert!(
        (a.row(0)[0] - 14.0).abs() < 1e-9 && (a.row(0)[1] - 6.0).abs() < 1e-9,
        "{:?}",
        a.row(0)
    );

    let flat = two_class(&[[0.5, 0.5], [0.5, 0.5]]);
    let a = dirichlet_mom(&flat, &[0, 0], 1.0, EmptyClassPolicy::Uniform).unwrap();
    assert_eq!(a.row(0), [5e5, 5e5]);

    let w = importance_weights_from(&[0.0, 2f64.ln()], 1.0).unwrap();
    assert!((w[0] - 4.0 / 3.0).abs() < 1e-12 && (w[1] - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(importance_weights_from(&[3.0; 5], 0.7).unwrap(), [1.0; 5]);
}

#[test]
fn hard_label_ties_go_low() {
    let m = LogitMatrix::from_rows(&[[0.1, 2.5, -1.0], [1.0, 1.0, 0.0]]).unwrap();
    assert_eq!(hard_labels(&m), [1, 0]);
}
