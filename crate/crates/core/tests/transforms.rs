use beltrami_core::expr::{Expr, RadialProfile};
use beltrami_core::experiment::run::{mean_zero_bump, right_inverse_error};
use beltrami_core::field::{evaluate_at, sample, ComplexField, DiskGrid};
use beltrami_core::transforms::{probe_transform, QuadSpec, TransformEngine, TransformKind, UnitDiskIndicator};
use beltrami_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn indicator(grid: &DiskGrid) -> ComplexField {
    sample(grid, |z| Complex64::new(if z.norm() < 1.0 { 1.0 } else { 0.0 }, 0.0)).unwrap()
}

#[test]
fn right_inverse_converges_at_second_order() {
    let e256 = right_inverse_error(&DiskGrid::with_n(256).unwrap()).unwrap();
    let e512 = right_inverse_error(&DiskGrid::with_n(512).unwrap()).unwrap();
    assert!(e512 < 1e-3, "{e512}");
    assert!((e256 / e512).log2() >= 2.0, "{e256} -> {e512}");
}

#[test]
fn beurling_is_an_l2_isometry_on_mean_zero_data() {
    let grid = DiskGrid::with_n(512).unwrap();
    let phi = sample(&grid, mean_zero_bump).unwrap();
    let s = TransformEngine::shared(&grid).apply(TransformKind::Beurling, &phi).unwrap();
    let l2 = |u: &ComplexField| {
        (0..grid.len())
            .filter(|&i| grid.node_at(i).norm() <= 1.5)
            .map(|i| u.values()[i].norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let ratio = l2(&s) / l2(&phi);
    assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
}

#[test]
fn transform_of_a_jump_is_continuous() {
    let grid = DiskGrid::with_n(512).unwrap();
    let u = TransformEngine::shared(&grid).apply(TransformKind::DzInv, &indicator(&grid)).unwrap();
    let h = grid.spacing();
    let mut jump = 0.0f64;
    for j in 0..grid.n() {
        for i in 0..grid.n() - 1 {
            if grid.node(i, j).norm() <= 1.5 {
                jump = jump.max((u.at(i + 1, j) - u.at(i, j)).norm());
            }
        }
    }
    assert!(jump <= 2.0 * h * (1.0 + h.ln().abs()), "{jump} vs h = {h}");
}

#[test]
fn probe_quadrature_matches_the_grid_transform() {
    // a smooth density with exact point values, evaluated both ways
    let density = Expr::radial(RadialProfile::Cutoff { inner: 0.25, outer: 0.5 })
        .mul(&Expr::monomial(Complex64::new(1.0, 0.5), 0, 1, 0));
    let grid = DiskGrid::with_n(1024).unwrap();
    let phi = sample(&grid, |z| density.eval(z)).unwrap();
    let u = TransformEngine::shared(&grid).apply(TransformKind::DzInv, &phi).unwrap();
    let quad = QuadSpec::with_rel_tol(1e-9);
    for z in [Complex64::new(0.05, 0.02), Complex64::new(-0.01, 0.1)] {
        let exact = probe_transform(TransformKind::DzInv, &density, z, &quad).unwrap();
        let on_grid = evaluate_at(&u, z).unwrap();
        assert!((exact - on_grid).norm() < 1e-4 * exact.norm().max(1e-3), "{exact} vs {on_grid}");
    }
}

#[test]
fn probe_reports_divergence_with_its_estimate() {
    let quad = QuadSpec {
        rel_tol: 1e-16,
        max_levels: 1,
        ..QuadSpec::default()
    };
    match probe_transform(TransformKind::DzInv, &UnitDiskIndicator, Complex64::new(0.01, 0.003), &quad) {
        Err(Error::QuadratureDiverged { estimate, .. }) => assert!(estimate.is_finite()),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn transforms_are_linear_and_conjugation_symmetric(
        seed in any::<u64>(),
        alpha_re in -2.0f64..2.0,
        alpha_im in -2.0f64..2.0,
    ) {
        let grid = DiskGrid::with_n(256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = move || rng.gen_range(-0.5..0.5);
        let mut field = || {
            let vals = (0..grid.len())
                .map(|i| if grid.node_at(i).norm() <= 1.0 { Complex64::new(next(), next()) } else { Complex64::new(0.0, 0.0) })
                .collect();
            ComplexField::from_values(grid, vals).unwrap()
        };
        let (phi, psi) = (field(), field());
        let alpha = Complex64::new(alpha_re, alpha_im);
        let engine = TransformEngine::shared(&grid);
        for kind in [TransformKind::DzInv, TransformKind::DzbarInv, TransformKind::Beurling] {
            let lhs = engine.apply(kind, &phi.scale(alpha).add(&psi)).unwrap();
            let rhs = engine.apply(kind, &phi).unwrap().scale(alpha).add(&engine.apply(kind, &psi).unwrap());
            prop_assert!(lhs.sub(&rhs).sup_norm() <= 1e-12 * (1.0 + rhs.sup_norm()));
        }
        let a = engine.apply(TransformKind::DzInv, &phi).unwrap();
        let b = engine.apply(TransformKind::DzbarInv, &phi.conj()).unwrap().conj();
        prop_assert_eq!(a, b);
    }
}
