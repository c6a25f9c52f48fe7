use proptest::prelude::*;
use spikelab_core::eig::{spectral_weights, SymmetricMatrix};

fn case() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..14).prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::vec(-3.0f64..3.0, n * n),
            proptest::collection::vec(-1.0f64..1.0, n),
        )
    })
}

proptest! {
    #[test]
    fn weights_reproduce_quadratic_forms((n, entries, raw) in case()) {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let v: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let m = SymmetricMatrix::from_upper(n, |i, j| entries[i * n + j]);
        let (lambda, w) = spectral_weights(&m, &v).unwrap();
        prop_assert!(lambda.windows(2).all(|p| p[0] >= p[1]));
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let mv = m.matvec(&v);
        let first: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let second: f64 = mv.iter().map(|x| x * x).sum();
        let s1: f64 = lambda.iter().zip(&w).map(|(l, x)| l * x).sum();
        let s2: f64 = lambda.iter().zip(&w).map(|(l, x)| l * l * x).sum();
        prop_assert!((first - s1).abs() < 1e-9 * (1.0 + first.abs()));
        prop_assert!((second - s2).abs() < 1e-9 * (1.0 + second));
    }
}
