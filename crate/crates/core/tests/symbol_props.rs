use std::sync::Arc;

use anisolab::aniso::{AnisotropyVector, SectorSpec};
use anisolab::elliptic::{build_full_symbol, laplacian};
use anisolab::rbound::RBoundBudget;
use anisolab::symbol::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn one(v: f64) -> DMatrix<Complex64> {
    DMatrix::from_element(1, 1, Complex64::new(v, 0.0))
}

fn settling(center: f64, limit: f64) -> XProfile {
    XProfile::RadialSettling {
        center,
        limit,
        width: 1.0,
    }
}

fn poly(space: &SymbolSpace, order: f64, terms: Vec<PolyTerm>) -> MatrixSymbol {
    MatrixSymbol::new(
        space.clone(),
        order,
        Arc::new(Polynomial::new(terms, (1, 1), 1).unwrap()),
    )
}

#[test]
fn composition_is_associative_up_to_remainder_order() {
    let space = SymbolSpace::xi_only(AnisotropyVector::isotropic(1));
    let a = poly(
        &space,
        2.0,
        vec![PolyTerm::new(one(1.0), vec![2], 0, settling(2.0, 1.0))],
    );
    let b = poly(
        &space,
        1.0,
        vec![
            PolyTerm::new(one(1.0), vec![1], 0, settling(0.5, 1.0)),
            PolyTerm::new(one(1.0), vec![0], 0, XProfile::default()),
        ],
    );
    let c = poly(
        &space,
        0.0,
        vec![PolyTerm::new(one(1.0), vec![0], 0, settling(3.0, 1.0))],
    );
    let cfg = OrderConfig::default();
    for n in 0..=2 {
        let left = compose(&compose(&a, &b, n).unwrap(), &c, n).unwrap();
        let right = compose(&a, &compose(&b, &c, n).unwrap(), n).unwrap();
        let fit = measured_order(&left.sub(&right), &[], &cfg).unwrap();
        let target = a.order + b.order + c.order - n as f64 - 1.0;
        assert!(fit.within(target, cfg.tolerance), "N={n}: {fit:?}");
    }
}

#[test]
fn derivatives_keep_finite_seminorms() {
    let heat = build_full_symbol(&laplacian(1, -1.0)).unwrap();
    let a = heat.symbol();
    let probes = ProbeSet::generate(&a.space, &ProbeConfig::default()).unwrap();
    for beta in [
        vec![],
        vec![(Var::Xi(0), 1)],
        vec![(Var::Xi(0), 2)],
        vec![(Var::LamRe, 1)],
    ] {
        let r = seminorm(
            &a,
            &beta,
            SeminormKind::Sup,
            &probes,
            &RBoundBudget::default(),
        )
        .unwrap();
        assert!(r.value.is_finite() && r.value > 0.0, "{beta:?}: {r:?}");
    }
}

fn heat_inverse() -> MatrixSymbol {
    let heat = build_full_symbol(&laplacian(1, -1.0)).unwrap();
    let sector = SectorSpec::right_half_plane(1.0).unwrap();
    let probes = ProbeSet::generate(&heat.space, &ProbeConfig::default()).unwrap();
    principal_inverse(&heat, &sector, &probes)
        .unwrap()
        .symbol
        .assembled()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn principal_inverse_commutes_with_dilation(
        xi in -20.0f64..20.0,
        arg in -1.5f64..1.5,
        r in 0.0f64..400.0,
        rho in 1.0f64..8.0,
    ) {
        let b = heat_inverse();
        let lambda = Complex64::from_polar(r, arg);
        prop_assume!(xi.abs() + lambda.norm().sqrt() > 8.0);
        let p = SymbolPoint::new(vec![0.3], vec![xi], lambda);
        let q = SymbolPoint::new(vec![0.3], vec![rho * xi], lambda * rho * rho);
        let lhs = b.eval(&q).unwrap()[(0, 0)];
        let rhs = b.eval(&p).unwrap()[(0, 0)] / (rho * rho);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm(), "{lhs} vs {rhs}");
        let exact = -1.0 / (Complex64::new(xi * xi, 0.0) + lambda);
        prop_assert!((b.eval(&p).unwrap()[(0, 0)] - exact).norm() <= 1e-12 * exact.norm());
    }
}
