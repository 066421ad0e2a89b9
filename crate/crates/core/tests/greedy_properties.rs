use std::collections::BTreeSet;

use eps_greedy::greedy::{f_greedy, lambda_greedy, GreedyConfig, StopReason};
use eps_greedy::kernel_baseline::kernel_f_greedy;
use eps_greedy::nodes::{NodeKind, NodeSpec};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = NodeKind> {
    prop_oneof![Just(NodeKind::Equispaced), Just(NodeKind::Chebyshev), Just(NodeKind::Halton)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn f_greedy_grows_by_one_and_meets_tau(
        kind in kind(),
        n in 10usize..120,
        freq in 0.5f64..12.0,
        shift in -1.0f64..1.0,
        tau in 1e-4f64..1e-1,
    ) {
        let xs = NodeSpec::unit(kind, n).generate().unwrap();
        let v: Vec<f64> = xs.iter().map(|x| (freq * x + shift).sin()).collect();
        let out = f_greedy(&xs, &v, &GreedyConfig::new(2.0, Some(tau))).unwrap();
        let seq = out.trace.selection_sequence();
        prop_assert_eq!(seq.iter().collect::<BTreeSet<_>>().len(), seq.len());
        prop_assert_eq!(out.knots.len(), 4 + seq.len());
        for (k, r) in out.trace.records.iter().enumerate() {
            prop_assert_eq!(r.n_nodes, 4 + k);
            prop_assert!(r.criterion > tau);
        }
        prop_assert!(out.knots.windows(2).all(|w| w[0] < w[1]));
        if out.trace.stop == Some(StopReason::Tolerance) {
            let interp = out.interpolant.as_ref().unwrap();
            for i in (0..n).filter(|i| !out.indices.contains(i)) {
                prop_assert!((v[i] - interp.eval(xs[i]).unwrap()).abs() <= tau);
            }
        } else {
            prop_assert_eq!(out.trace.stop, Some(StopReason::Exhausted));
        }
    }

    #[test]
    fn lambda_greedy_is_repeatable_and_meets_tau(kind in kind(), n in 10usize..150, tau in 1.8f64..6.0) {
        let xs = NodeSpec::unit(kind, n).generate().unwrap();
        let cfg = GreedyConfig::new(2.0, Some(tau));
        let a = lambda_greedy(&xs, &cfg).unwrap();
        let b = lambda_greedy(&xs, &cfg).unwrap();
        prop_assert_eq!(&a.trace, &b.trace);
        if a.trace.stop == Some(StopReason::Tolerance) {
            for i in (0..n).filter(|i| !a.indices.contains(i)) {
                prop_assert!(a.collocation.lebesgue_at(xs[i]).unwrap() <= tau);
            }
        }
        // sparsity never drops as knots are added
        prop_assert!(a.trace.records.windows(2).all(|w| w[1].sparsity >= w[0].sparsity));
    }

    #[test]
    fn kernel_greedy_matches_the_loop_contract(n in 10usize..80, tau in 1e-4f64..1e-1) {
        let xs = NodeSpec::unit(NodeKind::Halton, n).generate().unwrap();
        let v: Vec<f64> = xs.iter().map(|x| (3.0 * x).exp()).collect();
        let out = kernel_f_greedy(&xs, &v, Some(tau), None).unwrap();
        prop_assert_eq!(out.knots.len(), 4 + out.trace.records.len());
        if out.trace.stop == Some(StopReason::Tolerance) {
            for i in (0..n).filter(|i| !out.indices.contains(i)) {
                prop_assert!((v[i] - out.interpolant.eval(xs[i])).abs() <= tau);
            }
        }
    }
}

#[test]
fn max_iter_caps_insertions() {
    let xs = NodeSpec::unit(NodeKind::Equispaced, 300).generate().unwrap();
    let v: Vec<f64> = xs.iter().map(|x| (55.0 * x).atan()).collect();
    let out = f_greedy(&xs, &v, &GreedyConfig::new(2.0, Some(1e-12)).with_max_iter(7)).unwrap();
    assert_eq!(out.trace.stop, Some(StopReason::MaxIter));
    assert_eq!(out.knots.len(), 11);
}
