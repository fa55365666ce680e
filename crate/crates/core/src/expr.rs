//! Closed-form expressions that stay closed under Wirtinger differentiation.
//!
//! An [`Expr`] is a finite sum of terms
//!
//! ```text
//! c * z^p * zbar^q * L^(s/2) * prod_i (D^{d_i} F_i)(|z|),     L = -log|z|
//! ```
//!
//! where each `F_i` is a [`RadialProfile`] and `D = (1/r) d/dr`. The rules
//!
//! ```text
//! d_z z^p = p z^(p-1)          d_z L^g = -(g/2) z^-1 L^(g-1)
//! d_z (D^d F)(r) = (zbar/2) (D^(d+1) F)(r)
//! ```
//! and their conjugates make every mixed derivative `d_z^p d_zbar^q` another
//! sum of such terms, so derivatives are exact Leibniz expansions rather
//! than difference quotients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::jet::{Jet, JET_ORDER};

/// Smooth radial factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RadialProfile {
    /// `1` on `r <= inner`, `0` on `r >= outer`, and the `C^inf` step
    /// `S((outer - r) / (outer - inner))` in between, with
    /// `S(t) = s(t) / (s(t) + s(1 - t))`, `s(t) = exp(-1/t)` for `t > 0`.
    Cutoff { inner: f64, outer: f64 },
    /// `exp(-r^2 / width^2)`.
    Gaussian { width: f64 },
}

impl RadialProfile {
    /// Radius beyond which the profile and all its derivatives vanish.
    pub fn support(&self) -> Option<f64> {
        match self {
            RadialProfile::Cutoff { outer, .. } => Some(*outer),
            RadialProfile::Gaussian { .. } => None,
        }
    }

    /// Radius below which the profile is identically one.
    pub fn plateau(&self) -> Option<f64> {
        match self {
            RadialProfile::Cutoff { inner, .. } => Some(*inner),
            RadialProfile::Gaussian { .. } => None,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).value()
    }

    /// Taylor jet of the profile in `r`.
    pub fn jet(&self, r: f64) -> Jet {
        match *self {
            RadialProfile::Cutoff { inner, outer } => {
                let w = outer - inner;
                let t = (Jet::variable(r).scale(-1.0) + outer).scale(1.0 / w);
                smooth_step(t)
            }
            RadialProfile::Gaussian { width } => {
                let x = Jet::variable(r).scale(1.0 / width);
                (x * x).scale(-1.0).exp()
            }
        }
    }

    fn key(&self) -> (u8, u64, u64) {
        match *self {
            RadialProfile::Cutoff { inner, outer } => (0, inner.to_bits(), outer.to_bits()),
            RadialProfile::Gaussian { width } => (1, width.to_bits(), 0),
        }
    }
}

/// `S(t)`: 0 for `t <= 0`, 1 for `t >= 1`, `C^inf` in between.
pub fn smooth_step(t: Jet) -> Jet {
    let t0 = t.value();
    if t0 <= 0.0 {
        return Jet::constant(0.0);
    }
    if t0 >= 1.0 {
        return Jet::constant(1.0);
    }
    let s = |u: Jet| u.recip().scale(-1.0).exp();
    let a = s(t);
    let b = s(t.scale(-1.0) + 1.0);
    a * (a + b).recip()
}

#[derive(Clone, Debug, PartialEq)]
struct Term {
    coeff: Complex64,
    zp: i32,
    zbp: i32,
    /// twice the power of `L = -log|z|`
    lp2: i32,
    /// `(profile, d)` meaning `D^d profile`, sorted by profile key
    radial: Vec<(RadialProfile, u8)>,
}

impl Term {
    /// Limit at `z = 0`: terms of positive degree vanish, negative powers and
    /// positive powers of `L` diverge, and derivatives of a profile vanish on
    /// its plateau. Derivatives of a profile without plateau are not resolved
    /// and yield NaN.
    fn at_origin(&self) -> Complex64 {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        if self.zp < 0 || self.zbp < 0 {
            return nan;
        }
        if self.zp + self.zbp > 0 || self.lp2 < 0 {
            return Complex64::new(0.0, 0.0);
        }
        if self.lp2 > 0 {
            return nan;
        }
        let mut v = self.coeff;
        for &(p, d) in &self.radial {
            v *= match (d, p.plateau()) {
                (0, _) => p.value(0.0),
                (_, Some(inner)) if inner > 0.0 => 0.0,
                _ => return nan,
            };
        }
        v
    }

    fn same_shape(&self, other: &Term) -> bool {
        self.zp == other.zp && self.zbp == other.zbp && self.lp2 == other.lp2 && self.radial == other.radial
    }

    fn sort_key(&self) -> (i32, i32, i32, Vec<((u8, u64, u64), u8)>) {
        (
            self.zp,
            self.zbp,
            self.lp2,
            self.radial.iter().map(|(p, d)| (p.key(), *d)).collect(),
        )
    }

    /// Smallest radius beyond which the term vanishes identically.
    fn support(&self) -> Option<f64> {
        self.radial
            .iter()
            .filter_map(|(p, _)| p.support())
            .fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.min(s))))
    }
}

/// Sum of monomial-log-radial terms; see the module documentation.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Expr {
    terms: Vec<Term>,
}

impl Expr {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(c, 0, 0, 0)
    }

    /// `c * z^zp * zbar^zbp * L^(lp2/2)`.
    pub fn monomial(coeff: Complex64, zp: i32, zbp: i32, lp2: i32) -> Self {
        Self {
            terms: vec![Term {
                coeff,
                zp,
                zbp,
                lp2,
                radial: Vec::new(),
            }],
        }
        .normalized()
    }

    pub fn radial(profile: RadialProfile) -> Self {
        Self {
            terms: vec![Term {
                coeff: Complex64::new(1.0, 0.0),
                zp: 0,
                zbp: 0,
                lp2: 0,
                radial: vec![(profile, 0)],
            }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Radius outside of which the expression vanishes, if every term carries
    /// a compactly supported profile.
    pub fn support_radius(&self) -> Option<f64> {
        let mut out: f64 = 0.0;
        for t in &self.terms {
            out = out.max(t.support()?);
        }
        Some(out)
    }

    /// Common angular frequency `m` if every term is `R(r) e^{i m theta}`.
    pub fn angular_mode(&self) -> Option<i32> {
        let mut modes = self.terms.iter().map(|t| t.zp - t.zbp);
        let first = modes.next()?;
        modes.all(|m| m == first).then_some(first)
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Expr { terms }.normalized()
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * c,
                    ..t.clone()
                })
                .collect(),
        }
        .normalized()
    }

    /// Multiply by `z^zp zbar^zbp`.
    pub fn mul_monomial(&self, zp: i32, zbp: i32) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    zp: t.zp + zp,
                    zbp: t.zbp + zbp,
                    ..t.clone()
                })
                .collect(),
        }
        .normalized()
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut radial = a.radial.clone();
                radial.extend(b.radial.iter().copied());
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    zp: a.zp + b.zp,
                    zbp: a.zbp + b.zbp,
                    lp2: a.lp2 + b.lp2,
                    radial,
                });
            }
        }
        Expr { terms }.normalized()
    }

    /// Complex conjugate: swaps the roles of `z` and `zbar`.
    pub fn conj(&self) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    zp: t.zbp,
                    zbp: t.zp,
                    lp2: t.lp2,
                    radial: t.radial.clone(),
                })
                .collect(),
        }
        .normalized()
    }

    pub fn d_z(&self) -> Expr {
        self.differentiate(false)
    }

    pub fn d_zbar(&self) -> Expr {
        self.differentiate(true)
    }

    /// `d_z^p d_zbar^q`.
    pub fn derivative(&self, p: usize, q: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..p {
            e = e.d_z();
        }
        for _ in 0..q {
            e = e.d_zbar();
        }
        e
    }

    fn differentiate(&self, bar: bool) -> Expr {
        let mut out = Vec::new();
        for t in &self.terms {
            let (own, other) = if bar { (t.zbp, t.zp) } else { (t.zp, t.zbp) };
            let shift = |own_delta: i32, other_delta: i32| -> (i32, i32) {
                let (o, x) = (own + own_delta, other + other_delta);
                if bar {
                    (x, o)
                } else {
                    (o, x)
                }
            };
            if own != 0 {
                let (zp, zbp) = shift(-1, 0);
                out.push(Term {
                    coeff: t.coeff * own as f64,
                    zp,
                    zbp,
                    ..t.clone()
                });
            }
            if t.lp2 != 0 {
                let (zp, zbp) = shift(-1, 0);
                out.push(Term {
                    coeff: t.coeff * (-(t.lp2 as f64) / 4.0),
                    zp,
                    zbp,
                    lp2: t.lp2 - 2,
                    radial: t.radial.clone(),
                });
            }
            for k in 0..t.radial.len() {
                let (zp, zbp) = shift(0, 1);
                let mut radial = t.radial.clone();
                radial[k].1 += 1;
                out.push(Term {
                    coeff: t.coeff * 0.5,
                    zp,
                    zbp,
                    lp2: t.lp2,
                    radial,
                });
            }
        }
        Expr { terms: out }.normalized()
    }

    fn normalized(mut self) -> Expr {
        let mut kept = Vec::with_capacity(self.terms.len());
        'terms: for mut t in self.terms.drain(..) {
            if t.coeff == Complex64::new(0.0, 0.0) {
                continue;
            }
            t.radial.sort_by(|a, b| (a.0.key(), a.1).cmp(&(b.0.key(), b.1)));
            // A factor that is identically 1 on the support of another factor
            // can be dropped; if it is differentiated the product vanishes.
            let support = t.support();
            if let Some(s) = support {
                let mut radial = Vec::with_capacity(t.radial.len());
                for (p, d) in t.radial.iter().copied() {
                    let redundant = p.plateau().is_some_and(|pl| pl >= s) && p.support() != Some(s);
                    if redundant {
                        if d > 0 {
                            continue 'terms;
                        }
                    } else {
                        radial.push((p, d));
                    }
                }
                t.radial = radial;
            }
            kept.push(t);
        }
        kept.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let mut merged: Vec<Term> = Vec::with_capacity(kept.len());
        for t in kept {
            match merged.last_mut() {
                Some(last) if last.same_shape(&t) => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
        Expr { terms: merged }
    }

    /// Pointwise value for `z != 0`. Terms carrying a log power are only
    /// meaningful for `|z| < 1`; outside the support of their radial factors
    /// they are skipped.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let r = z.norm();
        if r == 0.0 {
            return self.terms.iter().map(Term::at_origin).sum();
        }
        let unit = z / r;
        let log_l = -r.ln();
        let sqrt_l = log_l.sqrt();
        let mut cache: [(Option<RadialProfile>, [f64; JET_ORDER]); 4] = [(None, [0.0; JET_ORDER]); 4];
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            if let Some(s) = t.support() {
                if r >= s {
                    continue;
                }
            }
            let mut v = t.coeff * r.powi(t.zp + t.zbp) * unit.powi(t.zp - t.zbp);
            if t.lp2 != 0 {
                v *= sqrt_l.powi(t.lp2);
            }
            for &(p, d) in &t.radial {
                let derivs = radial_derivatives(&mut cache, p, r);
                v *= d_power(&derivs, d as usize, r);
            }
            acc += v;
        }
        acc
    }
}

fn radial_derivatives(
    cache: &mut [(Option<RadialProfile>, [f64; JET_ORDER]); 4],
    p: RadialProfile,
    r: f64,
) -> [f64; JET_ORDER] {
    for slot in cache.iter_mut() {
        match slot.0 {
            Some(q) if q == p => return slot.1,
            None => {
                let d = p.jet(r).derivatives();
                *slot = (Some(p), d);
                return d;
            }
            _ => {}
        }
    }
    p.jet(r).derivatives()
}

/// `(D^d F)(r)` with `D = (1/r) d/dr`, from the plain derivatives of `F`:
/// `D^d F = sum_i c_{d,i} F^(i) r^(i - 2d)`.
fn d_power(derivs: &[f64; JET_ORDER], d: usize, r: f64) -> f64 {
    if d == 0 {
        return derivs[0];
    }
    assert!(d < JET_ORDER, "radial derivative order {d} too high");
    let mut coeffs = [0.0f64; JET_ORDER];
    coeffs[0] = 1.0;
    for step in 0..d {
        let mut next = [0.0f64; JET_ORDER];
        for i in 0..=step {
            let c = coeffs[i];
            if c == 0.0 {
                continue;
            }
            next[i + 1] += c;
            next[i] += c * (i as f64 - 2.0 * step as f64);
        }
        coeffs = next;
    }
    (1..=d)
        .map(|i| coeffs[i] * derivs[i] * r.powi(i as i32 - 2 * d as i32))
        .sum()
}
