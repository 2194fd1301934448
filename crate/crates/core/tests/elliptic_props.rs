use anisolab::aniso::{AnisotropyVector, GridSpec, SectorSpec};
use anisolab::elliptic::*;
use anisolab::rbound::{BanachSpaceSpec, RBoundBudget};
use anisolab::symbol::{OrderConfig, PolyTerm, ProbeConfig, XProfile};
use anisolab::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn perturbed_heat(eps: f64) -> DifferentialOperatorSpec {
    let one = |v: f64| DMatrix::from_element(1, 1, Complex64::new(v, 0.0));
    DifferentialOperatorSpec::new(
        AnisotropyVector::isotropic(1),
        1,
        vec![
            PolyTerm::new(one(-1.0), vec![2], 0, XProfile::default()),
            PolyTerm::new(
                one(eps),
                vec![0],
                0,
                XProfile::RadialSettling {
                    center: 1.0,
                    limit: 0.0,
                    width: 1.0,
                },
            ),
        ],
    )
    .unwrap()
}

#[test]
fn resolvent_identity_on_grid() {
    let g = GridSpec::new(1, 5.0, 48).unwrap();
    let sector = SectorSpec::right_half_plane(1.0).unwrap();
    let lambdas: Vec<Complex64> = [-1.4, 0.0, 1.4]
        .iter()
        .flat_map(|&t| [50.0, 500.0].map(|r| Complex64::from_polar(r, t)))
        .collect();
    let r = resolvent_via_parametrix(
        &perturbed_heat(0.3),
        &sector,
        &lambdas,
        1,
        &g,
        &OrderConfig::default(),
    )
    .unwrap();
    for s in &r.samples {
        assert!(
            s.identity_residual <= 1e-8 * s.resolvent_norm.max(1.0),
            "{s:?}"
        );
        assert!(s.remainder_norm < 1.0);
    }
}

#[test]
fn positive_laplacian_is_rejected_twice() {
    let a = laplacian(1, 1.0);
    let sector = SectorSpec::right_half_plane(1.0).unwrap();
    let rep = ellipticity_check(&a, &sector, &ProbeConfig::default(), ELLIPTICITY_MARGIN).unwrap();
    assert!(!rep.pass && !rep.principal_ok);
    let g = GridSpec::new(1, 4.0, 16).unwrap();
    let lambdas: Vec<Complex64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&r| Complex64::new(r, 0.0))
        .collect();
    let err = resolvent_rbound(
        &a,
        &sector,
        &lambdas,
        0.0,
        2.0,
        &BanachSpaceSpec::euclidean(1),
        &g,
        &RBoundBudget::default(),
    );
    assert!(matches!(err, Err(Error::NotInvertible { .. })), "{err:?}");
}

#[test]
fn ellipticity_report_is_reproducible() {
    let a = perturbed_heat(0.5);
    let sector = SectorSpec::new(2.5, 1.0).unwrap();
    let cfg = ProbeConfig {
        seed: 11,
        ..ProbeConfig::default()
    };
    let r1 = format!(
        "{:?}",
        ellipticity_check(&a, &sector, &cfg, ELLIPTICITY_MARGIN).unwrap()
    );
    let r2 = format!(
        "{:?}",
        ellipticity_check(&a, &sector, &cfg, ELLIPTICITY_MARGIN).unwrap()
    );
    assert_eq!(r1, r2);
}

#[test]
fn maxreg_constant_dominates_samples() {
    let a = laplacian(1, -1.0);
    let g = GridSpec::new(1, std::f64::consts::PI, 16).unwrap();
    let gamma = choose_shift(&a, &g, ELLIPTICITY_MARGIN).unwrap().gamma;
    let forcing = ForcingConfig {
        samples: 4,
        ..ForcingConfig::default()
    };
    let r = maxreg_experiment(
        &a,
        gamma,
        3.0,
        &TimeGrid {
            t_end: 4.0,
            steps: 200,
        },
        &forcing,
        &g,
    )
    .unwrap();
    let best = r.samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    assert!(r.c_p >= best && r.c_p.is_finite(), "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn resolvent_rbound_is_scale_invariant(c in 0.2f64..5.0, seed in 0u64..100) {
        let g = GridSpec::new(1, 4.0, 16).unwrap();
        let sector = SectorSpec::right_half_plane(1.0).unwrap();
        let lambdas: Vec<Complex64> = [-1.2, 0.3, 1.5].iter().map(|&t| Complex64::from_polar(20.0, t)).collect();
        let scaled: Vec<Complex64> = lambdas.iter().map(|l| l * c).collect();
        let budget = RBoundBudget { samples: 16, ascent_steps: 5, ..RBoundBudget::with_seed(seed).sampling() };
        let fib = BanachSpaceSpec::lp(1, 3.0).unwrap();
        let a = perturbed_heat(0.4);
        let r1 = resolvent_rbound(&a, &sector, &lambdas, 0.0, 2.0, &fib, &g, &budget).unwrap();
        let r2 = resolvent_rbound(&a.scaled(c), &sector, &scaled, 0.0, 2.0, &fib, &g, &budget).unwrap();
        prop_assert!((r1.value - r2.value).abs() <= 1e-8 * r1.value, "{} vs {}", r1.value, r2.value);
    }
}
