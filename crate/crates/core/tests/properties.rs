use isocorr::correlate::{correlations, correlations_recursive, BasisStrategy, CorrelationMatrix};
use isocorr::oracle::{build_arrangement, build_ising_graph, exact_correlations};
use isocorr::region::{from_boundary_vectors, RegionError};
use isocorr::sweep::{all_matchings, random_shape};
use isocorr::{Execution, Matching, Region, TolerancePolicy};
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn policy() -> TolerancePolicy {
    TolerancePolicy::default()
}

/// A random matching on `2n ≤ 2 max_n` points and a generic shape for it.
fn shape(max_n: usize) -> impl Strategy<Value = Region> {
    (1..=max_n, any::<u64>()).prop_flat_map(|(n, seed)| {
        let count = all_matchings(n).len();
        (0..count).prop_map(move |i| {
            let m = all_matchings(n).swap_remove(i);
            random_shape(&m, &mut ChaCha8Rng::seed_from_u64(seed))
        })
    })
}

fn is_correlation_matrix(m: &CorrelationMatrix) -> bool {
    let n = m.n();
    (1..=n).all(|j| {
        m.get(j, j) == 1.0
            && (1..=n).all(|k| m.get(j, k) == m.get(k, j) && m.get(j, k).abs() <= 1.0 + 1e-12)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn descents_exist_iff_crossings_exist(r in shape(5)) {
        prop_assert_eq!(r.matching().crossing_number() == 0, r.descents().is_empty());
    }

    #[test]
    fn removing_a_crossing_lowers_the_count_by_one(r in shape(5)) {
        for k in r.descents() {
            let s = r.remove_crossing(k).unwrap();
            prop_assert_eq!(s.matching().crossing_number() + 1, r.matching().crossing_number());
        }
    }

    #[test]
    fn pipeline_yields_a_correlation_matrix(r in shape(5)) {
        let m = correlations(&r, &BasisStrategy::Auto, &policy()).unwrap();
        prop_assert!(is_correlation_matrix(&m));
    }

    #[test]
    fn basis_strategies_agree(r in shape(4)) {
        let reference = correlations(&r, &BasisStrategy::Fourier, &policy()).unwrap();
        for s in [BasisStrategy::Samples(None), BasisStrategy::Derivative(1), BasisStrategy::Recursive] {
            let m = correlations(&r, &s, &policy()).unwrap();
            prop_assert!(m.max_abs_diff(&reference) < 1e-9, "{:?}", s);
        }
        let rec = correlations_recursive(&r, &policy()).unwrap();
        prop_assert!(rec.max_abs_diff(&reference) < 1e-9);
    }

    #[test]
    fn boundary_vector_round_trip(r in shape(4)) {
        let back = from_boundary_vectors(&r.boundary_vectors(), None, &policy()).unwrap();
        prop_assert_eq!(back.matching(), r.matching());
        let a = correlations(&r, &BasisStrategy::Auto, &policy()).unwrap();
        let b = correlations(&back, &BasisStrategy::Auto, &policy()).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-9);
    }

    #[test]
    fn shifting_labels_by_two_shifts_spins(r in shape(4)) {
        let shifted = r.rotate_labels().unwrap().rotate_labels().unwrap();
        let a = correlations(&r, &BasisStrategy::Auto, &policy()).unwrap();
        let b = correlations(&shifted, &BasisStrategy::Auto, &policy()).unwrap();
        let n = r.n();
        for j in 1..=n {
            for k in 1..=n {
                prop_assert!((b.get(j % n + 1, k % n + 1) - a.get(j, k)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn enumeration_is_execution_independent(r in shape(4), seed in any::<u64>()) {
        let a = build_arrangement(r.matching(), seed).unwrap();
        let g = build_ising_graph(&a, &r).unwrap();
        let seq = exact_correlations(&g, Execution::Sequential).unwrap();
        let par = exact_correlations(&g, Execution::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }
}

#[test]
fn invalid_regions_are_rejected() {
    assert!(matches!(
        Matching::from_tau(vec![2, 1, 3]),
        Err(RegionError::OddSize(3))
    ));
    assert!(matches!(
        Matching::from_tau(vec![1, 2]),
        Err(RegionError::FixedPoint(_))
    ));
    assert!(matches!(
        Matching::from_tau(vec![2, 3, 4, 1]),
        Err(RegionError::NotInvolution { .. })
    ));
    let m = Matching::from_tau(vec![3, 4, 1, 2]).unwrap();
    assert!(matches!(
        Region::new(m.clone(), vec![0.0; 3]),
        Err(RegionError::ThetaLength { .. })
    ));
    // closer not a quarter turn above its opener
    assert!(Region::new(
        m.clone(),
        vec![0.0, 0.3, 1.0, 0.3 + std::f64::consts::FRAC_PI_2]
    )
    .is_err());
    assert!(Region::new(m, vec![f64::NAN, 0.3, 1.0, 1.9]).is_err());
}
