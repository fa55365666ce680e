//! The coefficient `a`, its potential `b` and the cutoffs, in closed form.
//!
//! On `0 < |z| < 1/2`
//!
//! ```text
//! b(z) = zbar^(k+1) L^(1/2),    a(z) = (1/100) d_z b = -zbar^(k+1) / (400 z L^(1/2)),
//! ```
//! with `L = -log|z|`. Outside that disk `a` is multiplied by a smooth taper
//! `psi` (1 on `r <= 1/2`, 0 on `r >= 3/4`). The cutoff `chi` is 1 on
//! `r <= 1/8` and 0 on `r >= 3/8`.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, RadialProfile};
use crate::field::{DiskGrid, ProbeSet};

pub const SCALE: f64 = 0.01;
pub const DELTA_0: f64 = 0.1;
pub const TAPER: RadialProfile = RadialProfile::Cutoff { inner: 0.5, outer: 0.75 };
pub const CHI: RadialProfile = RadialProfile::Cutoff { inner: 0.125, outer: 0.375 };

/// Growth allowed across a probe window before a quantity counts as unbounded.
const BOUNDED_SLACK: f64 = 1.5;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug)]
pub struct CounterexampleCoefficient {
    k: u32,
    a: Expr,
    b: Expr,
    chi: Expr,
    a_derivs: HashMap<(usize, usize), Expr>,
    b_derivs: HashMap<(usize, usize), Expr>,
}

impl CounterexampleCoefficient {
    pub fn new(k: u32) -> Result<Self> {
        check_k(k)?;
        let b = Expr::monomial(ONE, 0, k as i32 + 1, 1);
        let a = b.d_z().scale(SCALE.into()).mul(&Expr::radial(TAPER));
        Ok(Self::build(k, a, b))
    }

    /// A coefficient with an arbitrary closed-form `a`; `b` keeps its
    /// standard form. Used to audit alternative constructions.
    pub fn custom(k: u32, a: Expr) -> Result<Self> {
        check_k(k)?;
        let b = Expr::monomial(ONE, 0, k as i32 + 1, 1);
        Ok(Self::build(k, a, b))
    }

    fn build(k: u32, a: Expr, b: Expr) -> Self {
        let max = k as usize + 2;
        Self {
            k,
            a_derivs: derivative_table(&a, max),
            b_derivs: derivative_table(&b, max),
            a,
            b,
            chi: Expr::radial(CHI),
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn max_order(&self) -> usize {
        self.k as usize + 2
    }

    pub fn a_expr(&self) -> &Expr {
        &self.a
    }

    pub fn b_expr(&self) -> &Expr {
        &self.b
    }

    pub fn chi_expr(&self) -> &Expr {
        &self.chi
    }

    /// `d_z^p d_zbar^q a` as an expression, `p + q <= k + 2`.
    pub fn a_derivative_expr(&self, p: usize, q: usize) -> Result<&Expr> {
        self.a_derivs.get(&(p, q)).ok_or(Error::DerivativeOrder {
            order: p + q,
            max: self.max_order(),
        })
    }

    /// `d_z^p d_zbar^q b` as an expression, `p + q <= k + 2`.
    pub fn b_derivative_expr(&self, p: usize, q: usize) -> Result<&Expr> {
        self.b_derivs.get(&(p, q)).ok_or(Error::DerivativeOrder {
            order: p + q,
            max: self.max_order(),
        })
    }

    /// `d_zbar^(k-1) (chi a_zbar)`, the density whose conjugated Cauchy-Green
    /// transform carries the obstruction after commuting `k - 1` derivatives.
    pub fn obstruction_density(&self) -> Expr {
        self.chi
            .mul(&self.a.d_zbar())
            .derivative(0, self.k as usize - 1)
    }

    pub fn eval_b(&self, z: Complex64) -> Result<Complex64> {
        self.eval_b_deriv(z, 0, 0)
    }

    pub fn eval_b_deriv(&self, z: Complex64, p: usize, q: usize) -> Result<Complex64> {
        let e = self.b_derivative_expr(p, q)?;
        let r = z.norm();
        if r >= 1.0 {
            return Err(Error::OutOfDomain(r));
        }
        if r == 0.0 {
            return if p + q <= self.k as usize {
                Ok(Complex64::new(0.0, 0.0))
            } else {
                Err(Error::SingularAtOrigin { p, q })
            };
        }
        Ok(e.eval(z))
    }

    /// `a(z)`; total, with `a(0) = 0`.
    pub fn eval_a(&self, z: Complex64) -> Complex64 {
        if z == Complex64::new(0.0, 0.0) {
            return z;
        }
        self.a.eval(z)
    }

    pub fn eval_a_z(&self, z: Complex64) -> Complex64 {
        self.eval_a_deriv(z, 1, 0).unwrap_or_default()
    }

    pub fn eval_a_zbar(&self, z: Complex64) -> Complex64 {
        self.eval_a_deriv(z, 0, 1).unwrap_or_default()
    }

    /// `d_z(abar) = conj(d_zbar a)`.
    pub fn eval_abar_z(&self, z: Complex64) -> Complex64 {
        self.eval_a_zbar(z).conj()
    }

    /// `d_z^p d_zbar^q a`. At the origin derivatives of order `<= k` vanish;
    /// higher orders are singular there.
    pub fn eval_a_deriv(&self, z: Complex64, p: usize, q: usize) -> Result<Complex64> {
        let e = self.a_derivative_expr(p, q)?;
        if z == Complex64::new(0.0, 0.0) {
            return if p + q <= self.k as usize {
                Ok(z)
            } else {
                Err(Error::SingularAtOrigin { p, q })
            };
        }
        Ok(e.eval(z))
    }

    pub fn eval_chi(&self, z: Complex64) -> f64 {
        CHI.value(z.norm())
    }

    pub fn eval_chi_z(&self, z: Complex64) -> Complex64 {
        if z.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.chi.d_z().eval(z)
    }

    pub fn eval_chi_zbar(&self, z: Complex64) -> Complex64 {
        self.eval_chi_z(z).conj()
    }
}

fn check_k(k: u32) -> Result<()> {
    if (1..=3).contains(&k) {
        Ok(())
    } else {
        Err(Error::UnsupportedK(k))
    }
}

fn derivative_table(e: &Expr, max: usize) -> HashMap<(usize, usize), Expr> {
    let mut table = HashMap::new();
    let mut row = e.clone();
    for p in 0..=max {
        let mut cell = row.clone();
        for q in 0..=(max - p) {
            table.insert((p, q), cell.clone());
            cell = cell.d_zbar();
        }
        row = row.d_z();
    }
    table
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub k: u32,
    pub sup_abs_a: f64,
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks smoothness away from 0 (i), the vanishing-order conditions (iii),
/// support (iv) and the sup bound (v). Property (ii) is the blow-up measured
/// by the lemma experiment and is not part of this report.
pub fn verify_properties(coeff: &CounterexampleCoefficient, grid: &DiskGrid, probes: &ProbeSet) -> PropertyReport {
    let k = coeff.k as usize;
    let angles = probes.angles();
    let circle = |r: f64| angles.iter().map(move |t| Complex64::from_polar(r, *t));

    // (i): every derivative up to order k + 2 finite on dyadic annuli down to the probe floor.
    let mut worst = 0.0f64;
    let mut finite = true;
    for j in 0..=probes.j_max() {
        for frac in [1.0, 0.75, 0.55] {
            for z in circle(frac * 0.5f64.powi(j as i32)) {
                for ((p, q), e) in &coeff.a_derivs {
                    if p + q > k + 2 {
                        continue;
                    }
                    let v = e.eval(z).norm();
                    finite &= v.is_finite();
                    worst = worst.max(v);
                }
            }
        }
    }
    let smooth = PropertyCheck {
        name: "(i) smooth away from 0".into(),
        pass: finite,
        measured: worst,
        detail: format!("max |D^m a|, m <= {}, over annuli 2^-{}..1", k + 2, probes.j_max() + 1),
    };

    // (iii): z a in C^(k+1) and a / z in C^(k-1), judged by the growth of
    // their top derivatives along the probe radii.
    let za = coeff.a.mul_monomial(1, 0);
    let a_over_z = coeff.a.mul_monomial(-1, 0);
    let (za_growth, za_ok) = growth_along_probes(&za, k + 1, probes, &circle);
    let (az_growth, az_ok) = growth_along_probes(&a_over_z, k - 1, probes, &circle);
    let decay = PropertyCheck {
        name: "(iii) vanishing order at 0".into(),
        pass: za_ok && az_ok,
        measured: za_growth.max(az_growth),
        detail: format!(
            "growth of order-{} derivatives of z*a: {:.3}; of order-{} derivatives of a/z: {:.3}",
            k + 1,
            za_growth,
            k - 1,
            az_growth
        ),
    };

    // (iv) and (v) on the grid.
    let (outside_max, sup) = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let z = grid.node_at(idx);
            let v = coeff.eval_a(z).norm();
            let outside = if z.norm() >= 1.0 { v } else { 0.0 };
            (outside, v)
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));
    let support = PropertyCheck {
        name: "(iv) supp a in unit disk".into(),
        pass: outside_max == 0.0,
        measured: outside_max,
        detail: "max |a| over grid nodes with |z| >= 1".into(),
    };
    let bound = PropertyCheck {
        name: "(v) sup |a| < delta_0".into(),
        pass: sup < DELTA_0,
        measured: sup,
        detail: format!("sup over {} grid nodes, delta_0 = {DELTA_0}", grid.len()),
    };

    PropertyReport {
        k: coeff.k,
        sup_abs_a: sup,
        checks: vec![smooth, decay, support, bound],
    }
}

/// Ratio of the largest order-`m` derivative magnitude on the finest probe
/// circles to that on the coarsest one; bounded when at most `BOUNDED_SLACK`.
fn growth_along_probes<I: Iterator<Item = Complex64>>(
    e: &Expr,
    m: usize,
    probes: &ProbeSet,
    circle: &impl Fn(f64) -> I,
) -> (f64, bool) {
    let derivs: Vec<Expr> = (0..=m).map(|p| e.derivative(p, m - p)).collect();
    let level = |r: f64| {
        circle(r)
            .flat_map(|z| derivs.iter().map(move |d| d.eval(z).norm()))
            .fold(0.0f64, f64::max)
    };
    let radii = probes.radii();
    let coarse = level(radii[0]);
    let fine = radii[1..].iter().map(|&r| level(r)).fold(0.0f64, f64::max);
    if !fine.is_finite() {
        return (f64::INFINITY, false);
    }
    if coarse == 0.0 {
        return if fine == 0.0 { (0.0, true) } else { (f64::INFINITY, false) };
    }
    let g = fine / coarse;
    (g, g <= BOUNDED_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn k_range() {
        assert!(matches!(CounterexampleCoefficient::new(0), Err(Error::UnsupportedK(0))));
        assert!(CounterexampleCoefficient::new(4).is_err());
        for k in 1..=3 {
            assert!(CounterexampleCoefficient::new(k).is_ok());
        }
    }

    #[test]
    fn b_reference_values() {
        let co = CounterexampleCoefficient::new(1).unwrap();
        assert_eq!(co.eval_b(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let b = co.eval_b(c(0.25, 0.0)).unwrap();
        let oracle = 0.0625 * (4f64.ln()).sqrt();
        assert!((b - oracle).norm() < 1e-15);
        assert!((b.re - 0.0735881).abs() < 1e-7);
        assert!(matches!(co.eval_b(c(1.0, 0.0)), Err(Error::OutOfDomain(_))));
        assert!(co.eval_b_deriv(c(0.1, 0.0), 2, 2).is_err());
    }

    #[test]
    fn second_zbar_derivative_of_b() {
        let co = CounterexampleCoefficient::new(1).unwrap();
        let z = c(2f64.powi(-10), 0.0);
        let l = -z.norm().ln();
        // direct Leibniz expansion for k = 1
        let oracle = 2.0 * l.sqrt() - 0.75 / l.sqrt() - 1.0 / (16.0 * l.powf(1.5));
        let v = co.eval_b_deriv(z, 0, 2).unwrap();
        assert!((v - oracle).norm() < 1e-13, "{v} vs {oracle}");
        assert!((2.0 * l.sqrt() - 5.265538).abs() < 1e-6);
        let w = co.eval_b_deriv(Complex64::from_polar(2f64.powi(-10), 1.1), 0, 2).unwrap();
        assert!((w - oracle).norm() < 1e-13);
    }

    #[test]
    fn a_reference_value_and_forms() {
        let co = CounterexampleCoefficient::new(1).unwrap();
        let a = co.eval_a(c(0.25, 0.0));
        assert!((a.re + 5.30826e-4).abs() < 1e-9, "{a}");
        assert_eq!(co.eval_a(c(0.0, 0.0)), c(0.0, 0.0));
        assert_eq!(co.eval_a(c(0.8, 0.0)), c(0.0, 0.0));
        for z in [c(0.1, 0.2), c(-0.3, 0.05), c(0.001, -0.002)] {
            let r = z.norm();
            let l = -r.ln();
            // (1/100) zbar^2 d_z (L^(1/2)), with d_z L = -1/(2z)
            let first = 0.01 * z.conj().powi(2) * (-0.5 / l.sqrt()) * (0.5 / z);
            assert!((co.eval_a(z) - first).norm() <= 1e-14 * first.norm());
            let second = 0.01 * co.eval_b_deriv(z, 1, 0).unwrap();
            assert!((co.eval_a(z) - second).norm() <= 1e-14 * first.norm());
        }
    }

    #[test]
    fn a_matches_differences_of_b() {
        let co = CounterexampleCoefficient::new(1).unwrap();
        let z = c(0.25, 0.0);
        let h = 1e-6;
        let dx = (co.eval_b(z + h).unwrap() - co.eval_b(z - h).unwrap()) / (2.0 * h);
        let dy = (co.eval_b(z + c(0.0, h)).unwrap() - co.eval_b(z - c(0.0, h)).unwrap()) / (2.0 * h);
        let fd = 0.01 * 0.5 * (dx - Complex64::i() * dy);
        let a = co.eval_a(z);
        assert!((fd - a).norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn a_zbar_matches_differences() {
        for k in 1..=3 {
            let co = CounterexampleCoefficient::new(k).unwrap();
            for &r in &[1e-3, 0.01, 0.1, 0.3, 0.45] {
                for t in [0.3, 2.0, 4.4] {
                    let z = Complex64::from_polar(r, t);
                    let h = r * 1e-4;
                    let f = |w| co.eval_a(w);
                    let d = |s: Complex64| {
                        (8.0 * (f(z + s * h) - f(z - s * h)) - (f(z + s * 2.0 * h) - f(z - s * 2.0 * h)))
                            / (12.0 * h)
                    };
                    let dx = d(c(1.0, 0.0));
                    let dy = d(c(0.0, 1.0));
                    let fd = 0.5 * (dx + Complex64::i() * dy);
                    let exact = co.eval_a_zbar(z);
                    assert!((fd - exact).norm() <= 1e-6 * exact.norm(), "k={k} r={r}: {fd} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn normalized_modulus_is_constant() {
        for k in 1..=3 {
            let co = CounterexampleCoefficient::new(k).unwrap();
            for &r in &[1e-9, 1e-4, 0.01, 0.2, 0.5] {
                let z = Complex64::from_polar(r, 0.7);
                let v = co.eval_a(z).norm() * (-r.ln()).sqrt() / r.powi(k as i32);
                assert!((v - 1.0 / 400.0).abs() < 1e-12, "k={k} r={r}: {v}");
            }
        }
    }

    #[test]
    fn origin_behaviour() {
        let co = CounterexampleCoefficient::new(2).unwrap();
        let zero = c(0.0, 0.0);
        assert_eq!(co.eval_a_deriv(zero, 1, 1).unwrap(), zero);
        assert!(matches!(co.eval_a_deriv(zero, 2, 1), Err(Error::SingularAtOrigin { .. })));
        assert!(matches!(co.eval_a_deriv(zero, 5, 0), Err(Error::DerivativeOrder { .. })));
    }

    #[test]
    fn obstruction_density_has_mode_minus_two() {
        for k in 1..=3 {
            let co = CounterexampleCoefficient::new(k).unwrap();
            assert_eq!(co.obstruction_density().angular_mode(), Some(-2));
        }
    }

    #[test]
    fn chi_cutoff() {
        let co = CounterexampleCoefficient::new(1).unwrap();
        assert_eq!(co.eval_chi(c(0.1, 0.0)), 1.0);
        assert_eq!(co.eval_chi(c(0.0, 0.38)), 0.0);
        assert_eq!(co.eval_chi_z(c(0.1, 0.0)), c(0.0, 0.0));
        assert!(co.eval_chi_z(c(0.25, 0.0)).norm() > 0.0);
    }
}
