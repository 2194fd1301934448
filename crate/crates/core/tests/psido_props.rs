use std::sync::Arc;

use anisolab::aniso::{AnisotropyVector, GridSpec};
use anisolab::psido::*;
use anisolab::rbound::BanachSpaceSpec;
use anisolab::symbol::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> GridSpec {
    GridSpec::new(1, 6.0, 32).unwrap()
}

fn sample(seed: u64, bumps: usize) -> GridFunction {
    random_smooth_function(&grid(), &BanachSpaceSpec::euclidean(1), seed, bumps).unwrap()
}

fn symbol(x_dependent: bool) -> MatrixSymbol {
    let space = SymbolSpace::with_lambda(AnisotropyVector::isotropic(1), 2).unwrap();
    let prof = if x_dependent {
        XProfile::RadialSettling {
            center: 2.0,
            limit: 1.0,
            width: 1.5,
        }
    } else {
        XProfile::default()
    };
    let terms = vec![
        PolyTerm::new(
            DMatrix::from_element(1, 1, Complex64::new(-1.0, 0.0)),
            vec![2],
            0,
            prof,
        ),
        PolyTerm::new(
            DMatrix::from_element(1, 1, Complex64::new(0.0, 0.5)),
            vec![1],
            0,
            XProfile::default(),
        ),
        PolyTerm::new(
            DMatrix::from_element(1, 1, Complex64::new(-1.0, 0.0)),
            vec![0],
            1,
            XProfile::default(),
        ),
    ];
    MatrixSymbol::new(
        space,
        2.0,
        Arc::new(Polynomial::new(terms, (1, 1), 1).unwrap()),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn op_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0, xdep: bool) {
        let (u, v) = (sample(s1, 3), sample(s2, 2));
        let c = Complex64::new(re, im);
        let op = realize(&symbol(xdep), Complex64::new(5.0, 1.0), &grid()).unwrap();
        let lhs = op.apply(&u.add(&v.scale(c)).unwrap()).unwrap();
        let rhs = op.apply(&u).unwrap().add(&op.apply(&v).unwrap().scale(c)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().lp_norm(2.0) <= 1e-11 * (1.0 + lhs.lp_norm(2.0)));
    }

    #[test]
    fn sobolev_zero_is_lp(seed in 0u64..1000, p in 1.0f64..6.0) {
        let u = sample(seed, 3);
        let ell = AnisotropyVector::isotropic(1);
        let a = sobolev_norm(&u, 0.0, p, &ell).unwrap();
        prop_assert!((a - u.lp_norm(p)).abs() <= 1e-12 * a);
    }

    #[test]
    fn sobolev_embedding_is_monotone(seed in 0u64..1000, s in -2.0f64..3.0, t in -2.0f64..3.0) {
        let u = sample(seed, 3);
        let ell = AnisotropyVector::isotropic(1);
        let (hi, lo) = if s >= t { (s, t) } else { (t, s) };
        let a = sobolev_norm(&u, hi, 2.0, &ell).unwrap();
        let b = sobolev_norm(&u, lo, 2.0, &ell).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-12), "{b} > {a}");
    }

    #[test]
    fn multipliers_commute_with_translation(seed in 0u64..1000, shift in 1usize..32) {
        let u = sample(seed, 2);
        let op = realize(&symbol(false), Complex64::new(2.0, -1.0), &grid()).unwrap();
        prop_assert!(op.is_translation_invariant());
        let translate = |w: &GridFunction| {
            let vals = w.values();
            let n = vals.len();
            w.with_values((0..n).map(|j| vals[(j + shift) % n]).collect()).unwrap()
        };
        let a = translate(&op.apply(&u).unwrap());
        let b = op.apply(&translate(&u)).unwrap();
        prop_assert!(a.sub(&b).unwrap().lp_norm(2.0) <= 1e-11 * (1.0 + a.lp_norm(2.0)));
    }

    #[test]
    fn io_roundtrips_are_exact(seed in 0u64..1000) {
        let u = sample(seed, 4);
        let mut bin = Vec::new();
        write_binary_to(&u, &mut bin).unwrap();
        prop_assert_eq!(&read_binary_from(&mut bin.as_slice(), u.fiber.clone()).unwrap(), &u);
        let mut text = Vec::new();
        write_csv_to(&u, &mut text).unwrap();
        prop_assert_eq!(&read_csv_from(text.as_slice(), u.fiber.clone()).unwrap(), &u);
    }
}

#[test]
fn x_independent_symbols_are_diagonal_on_modes() {
    let g = grid();
    let a = symbol(false);
    let l = Complex64::new(3.0, 2.0);
    let op = realize(&a, l, &g).unwrap();
    for k in [-15i64, -3, 0, 1, 7, 15] {
        let u = GridFunction::mode(
            g.clone(),
            BanachSpaceSpec::euclidean(1),
            &[k],
            &[Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        let xi = k as f64 * g.frequency_step();
        let expect = a.eval(&SymbolPoint::new(vec![0.0], vec![xi], l)).unwrap()[(0, 0)];
        let diff = op
            .apply(&u)
            .unwrap()
            .sub(&u.scale(expect))
            .unwrap()
            .lp_norm(2.0);
        assert!(
            diff <= 1e-12 * expect.norm().max(1.0) * u.lp_norm(2.0),
            "k={k}: {diff:e}"
        );
    }
}

#[test]
fn composition_defect_decays_with_order() {
    let g = GridSpec::new(1, 8.0, 128).unwrap();
    let space = SymbolSpace::with_lambda(AnisotropyVector::isotropic(1), 2).unwrap();
    let a = symbol(false);
    let b = MatrixSymbol::new(
        space,
        0.0,
        Arc::new(
            Polynomial::new(
                vec![PolyTerm::new(
                    DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
                    vec![0],
                    0,
                    XProfile::RadialSettling {
                        center: 2.0,
                        limit: 1.0,
                        width: 1.0,
                    },
                )],
                (1, 1),
                1,
            )
            .unwrap(),
        ),
    );
    let u = GridFunction::from_fn(g, BanachSpaceSpec::euclidean(1), |x| {
        vec![Complex64::new((-x[0] * x[0]).exp(), 0.0)]
    })
    .unwrap();
    let lambdas: Vec<Complex64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&r| Complex64::from_polar(r, 0.4))
        .collect();
    for n in 0..=2 {
        let r = composition_defect(&a, &b, n, &lambdas, &u).unwrap();
        assert!(r.slope <= r.target + 0.25, "{r:?}");
    }
}
