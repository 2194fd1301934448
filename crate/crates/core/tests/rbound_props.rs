use anisolab::rbound::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn cmat(r: usize, c: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), r * c).prop_map(move |v| {
        DMatrix::from_iterator(r, c, v.into_iter().map(|(a, b)| Complex64::new(a, b)))
    })
}

fn family() -> impl Strategy<Value = OperatorFamily> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(k, d)| prop::collection::vec(cmat(d, d), k))
        .prop_map(|m| OperatorFamily::new(m).unwrap())
}

fn cvec(d: usize) -> impl Strategy<Value = DVector<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d).prop_map(|v| {
        DVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| Complex64::new(a, b)))
    })
}

fn small_budget(seed: u64) -> RBoundBudget {
    RBoundBudget {
        samples: 32,
        ascent_steps: 10,
        ..RBoundBudget::with_seed(seed).sampling()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampling_stays_below_hilbert_oracle(f in family(), seed in 0u64..1000) {
        let d = f.shape().0;
        let sp = BanachSpaceSpec::euclidean(d);
        let est = rbound_estimate(&f, &sp, &sp, 2.0, &small_budget(seed)).unwrap();
        let oracle = f.members().iter().map(spectral_norm).fold(0.0, f64::max);
        prop_assert!(est.value <= oracle * (1.0 + 1e-9), "{} > {}", est.value, oracle);
        prop_assert!(est.value >= oracle * (1.0 - 1e-9), "{} < sup {}", est.value, oracle);
    }

    #[test]
    fn estimate_is_positively_homogeneous(f in family(), seed in 0u64..1000, c in 0.1f64..10.0, p in 1.0f64..4.0) {
        let d = f.shape().0;
        let sp = BanachSpaceSpec::lp(d, 3.0).unwrap();
        let a = rbound_estimate(&f, &sp, &sp, p, &small_budget(seed)).unwrap();
        let b = rbound_estimate(&f.scaled(c), &sp, &sp, p, &small_budget(seed)).unwrap();
        prop_assert!((b.value - c * a.value).abs() <= 1e-9 * c * a.value, "{} vs {}", b.value, c * a.value);
    }

    #[test]
    fn functional_is_permutation_invariant(
        (ts, xs) in (1usize..=5, 1usize..=3).prop_flat_map(|(n, d)| (prop::collection::vec(cmat(d, d), n), prop::collection::vec(cvec(d), n))),
        p in 1.0f64..4.0,
        shift in 0usize..5,
    ) {
        let d = xs[0].len();
        prop_assume!(xs.iter().any(|x| x.norm() > 1e-6));
        let sp = BanachSpaceSpec::lp(d, 1.5).unwrap();
        let refs: Vec<&DMatrix<Complex64>> = ts.iter().collect();
        let a = rademacher_functional(&refs, &xs, p, &sp, &sp).unwrap();
        let n = ts.len();
        let perm: Vec<usize> = (0..n).map(|j| (j * 3 + shift) % n).collect();
        prop_assume!({ let mut s = perm.clone(); s.sort(); s.dedup(); s.len() == n });
        let rt: Vec<&DMatrix<Complex64>> = perm.iter().map(|&j| &ts[j]).collect();
        let rx: Vec<DVector<Complex64>> = perm.iter().map(|&j| xs[j].clone()).collect();
        let b = rademacher_functional(&rt, &rx, p, &sp, &sp).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn contraction_factor_two(
        (coef, xs) in (1usize..=8, 1usize..=3).prop_flat_map(|(n, d)| (
            prop::collection::vec((0.0f64..1.0, -3.2f64..3.2, 0.0f64..2.0, -3.2f64..3.2), n),
            prop::collection::vec(cvec(d), n),
        )),
        p in 1.0f64..4.0,
    ) {
        let d = xs[0].len();
        let beta: Vec<Complex64> = coef.iter().map(|c| Complex64::from_polar(c.2, c.3)).collect();
        let alpha: Vec<Complex64> = coef.iter().zip(&beta).map(|(c, b)| Complex64::from_polar(c.0 * b.norm(), c.1)).collect();
        let r = contraction_check(&alpha, &beta, &xs, p, &BanachSpaceSpec::lp(d, 1.3).unwrap()).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }
}

#[test]
fn monotone_under_inclusion_with_warm_start() {
    let mut members: Vec<DMatrix<Complex64>> = (0..3)
        .map(|k| {
            DMatrix::from_fn(2, 2, |i, j| {
                Complex64::new((i + 2 * j + k) as f64 * 0.3 - 0.5, (k as f64) * 0.1)
            })
        })
        .collect();
    let sp = BanachSpaceSpec::lp(2, 4.0).unwrap();
    let small = OperatorFamily::new(members.clone()).unwrap();
    let a = rbound_estimate(&small, &sp, &sp, 2.0, &RBoundBudget::with_seed(7)).unwrap();
    members.push(DMatrix::from_fn(2, 2, |i, j| {
        Complex64::new(if i == j { 0.2 } else { -0.7 }, 0.0)
    }));
    let big = OperatorFamily::new(members).unwrap();
    let budget = RBoundBudget {
        warm_start: a.witness.clone(),
        ..RBoundBudget::with_seed(7)
    };
    let b = rbound_estimate(&big, &sp, &sp, 2.0, &budget).unwrap();
    assert!(b.value >= a.value - 1e-12, "{} < {}", b.value, a.value);
}

#[test]
fn kahane_ratios_bounded() {
    let r = kahane_equivalence_check(4.0, 2.0, 200, 8, &BanachSpaceSpec::lp(3, 1.5).unwrap(), 3)
        .unwrap();
    assert!(r.min_ratio >= 1.0 - 1e-12 && r.max_ratio < 2.0, "{r:?}");
}
