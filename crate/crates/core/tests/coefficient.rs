use beltrami_core::coeff::{verify_properties, CounterexampleCoefficient};
use beltrami_core::expr::{Expr, RadialProfile};
use beltrami_core::field::{DiskGrid, ProbeSet};
use beltrami_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn l(r: f64) -> f64 {
    -r.ln()
}

#[test]
fn closed_form_values_at_a_quarter() {
    let c = CounterexampleCoefficient::new(1).unwrap();
    let z = Complex64::new(0.25, 0.0);
    // oracle: direct arithmetic on z^2 sqrt(-log |z|)
    let b = 0.0625 * l(0.25).sqrt();
    assert!((c.eval_b(z).unwrap().re - b).abs() < 1e-15);
    assert!((b - 0.0735881).abs() < 1e-7);
    let a = -0.0625 / (400.0 * 0.25 * l(0.25).sqrt());
    assert!((c.eval_a(z) - Complex64::new(a, 0.0)).norm() < 1e-17);
    assert!((a + 5.30826e-4).abs() < 1e-9);
}

#[test]
fn second_zbar_derivative_closed_form() {
    let c = CounterexampleCoefficient::new(1).unwrap();
    let z = Complex64::new(2f64.powi(-10), 0.0);
    // oracle: hand-differentiated d_zbar^2 (zbar^2 L^{1/2}) for real z
    let ll = l(z.re);
    let exact = 2.0 * ll.sqrt() - 0.75 / ll.sqrt() - ll.powf(-1.5) / 16.0;
    let v = c.eval_b_deriv(z, 0, 2).unwrap();
    assert!((v.re - exact).abs() < 1e-12, "{v} vs {exact}");
    assert!(v.im.abs() < 1e-12);
    // the leading term alone is off by O(L^{-1/2})
    assert!((v.re - 2.0 * ll.sqrt()).abs() > 0.25);
}

#[test]
fn domain_and_origin_handling() {
    let c = CounterexampleCoefficient::new(2).unwrap();
    assert!(matches!(c.eval_b(Complex64::new(1.0, 0.0)), Err(Error::OutOfDomain(_))));
    assert_eq!(c.eval_b(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
    assert_eq!(c.eval_a(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    assert!(matches!(CounterexampleCoefficient::new(4), Err(Error::UnsupportedK(4))));
}

#[test]
fn audit_passes_for_all_supported_k() {
    let grid = DiskGrid::with_n(512).unwrap();
    let probes = ProbeSet::new(5, 14, 32).unwrap();
    for k in 1..=3 {
        let rep = verify_properties(&CounterexampleCoefficient::new(k).unwrap(), &grid, &probes);
        assert!(rep.all_pass(), "{rep:?}");
        assert!(rep.sup_abs_a < 0.004);
    }
}

#[test]
fn audit_flags_a_coefficient_without_decay() {
    let grid = DiskGrid::with_n(256).unwrap();
    let probes = ProbeSet::new(5, 14, 16).unwrap();
    let flat = Expr::radial(RadialProfile::Cutoff { inner: 0.5, outer: 0.75 }).scale(Complex64::new(0.05, 0.0));
    let rep = verify_properties(&CounterexampleCoefficient::custom(1, flat).unwrap(), &grid, &probes);
    assert!(!rep.check("(iii) vanishing order at 0").unwrap().pass);
    let zero = CounterexampleCoefficient::custom(1, Expr::zero()).unwrap();
    assert!(verify_properties(&zero, &grid, &probes).all_pass());
}

proptest! {
    #[test]
    fn normalized_modulus_is_exactly_one_over_400(k in 1u32..=3, r in 1e-6f64..0.5, t in 0.0f64..std::f64::consts::TAU) {
        let c = CounterexampleCoefficient::new(k).unwrap();
        let z = Complex64::from_polar(r, t);
        let m = c.eval_a(z).norm() * l(r).sqrt() / r.powi(k as i32);
        prop_assert!((m * 400.0 - 1.0).abs() < 1e-12);
        // both closed forms of a agree where the taper is one
        let alt = c.eval_b_deriv(z, 1, 0).unwrap() / 100.0;
        prop_assert!((alt - c.eval_a(z)).norm() <= 1e-14 * c.eval_a(z).norm());
    }

    #[test]
    fn zbar_derivative_matches_differences(k in 1u32..=3, r in 1e-3f64..0.45, t in 0.0f64..std::f64::consts::TAU) {
        let c = CounterexampleCoefficient::new(k).unwrap();
        let z = Complex64::from_polar(r, t);
        let h = 1e-4 * r;
        let i = Complex64::i();
        let fd = ((c.eval_a(z + h) - c.eval_a(z - h)) + i * (c.eval_a(z + i * h) - c.eval_a(z - i * h))) / (4.0 * h);
        let exact = c.eval_a_zbar(z);
        prop_assert!((fd - exact).norm() <= 1e-6 * exact.norm(), "{} vs {}", fd, exact);
    }
}
