//! Truncated univariate Taylor series (forward-mode derivatives of any order
//! up to [`JET_ORDER`]) used to differentiate the smooth radial cutoffs.

use std::ops::{Add, Mul, Neg, Sub};

/// Number of Taylor coefficients carried (derivatives `0..JET_ORDER`).
pub const JET_ORDER: usize = 10;

/// `c[i]` is the `i`-th Taylor coefficient, i.e. `f^(i)(x0) / i!`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [f64; JET_ORDER],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; JET_ORDER];
        c[0] = v;
        Self { c }
    }

    /// The independent variable at `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [0.0; JET_ORDER];
        c[0] = x0;
        c[1] = 1.0;
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Derivatives `f^(i)(x0)`, `i = 0..JET_ORDER`.
    pub fn derivatives(&self) -> [f64; JET_ORDER] {
        let mut out = self.c;
        let mut fact = 1.0;
        for (i, v) in out.iter_mut().enumerate().skip(1) {
            fact *= i as f64;
            *v *= fact;
        }
        out
    }

    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        let mut r = [0.0; JET_ORDER];
        r[0] = 1.0 / a0;
        for n in 1..JET_ORDER {
            let s: f64 = (1..=n).map(|k| self.c[k] * r[n - k]).sum();
            r[n] = -s / a0;
        }
        Self { c: r }
    }

    pub fn exp(&self) -> Self {
        // f' = a' f  =>  n f_n = sum_{k=1}^{n} k a_k f_{n-k}
        let mut f = [0.0; JET_ORDER];
        f[0] = self.c[0].exp();
        for n in 1..JET_ORDER {
            let s: f64 = (1..=n).map(|k| k as f64 * self.c[k] * f[n - k]).sum();
            f[n] = s / n as f64;
        }
        Self { c: f }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= s);
        Self { c }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(rhs.c).for_each(|(a, b)| *a += b);
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut c = [0.0; JET_ORDER];
        for (n, slot) in c.iter_mut().enumerate() {
            *slot = (0..=n).map(|k| self.c[k] * rhs.c[n - k]).sum();
        }
        Jet { c }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_and_recip_match_closed_forms() {
        let x = Jet::variable(0.7);
        let e = (x.scale(2.0)).exp().derivatives();
        for (i, d) in e.iter().enumerate() {
            let exact = 2f64.powi(i as i32) * (1.4f64).exp();
            assert!((d - exact).abs() < 1e-10 * exact, "order {i}");
        }
        let r = x.recip().derivatives();
        let mut fact = 1.0;
        for (i, d) in r.iter().enumerate() {
            if i > 0 {
                fact *= i as f64;
            }
            let exact = (-1f64).powi(i as i32) * fact / 0.7f64.powi(i as i32 + 1);
            assert!((d - exact).abs() < 1e-9 * exact.abs(), "order {i}");
        }
    }

    #[test]
    fn product_rule() {
        let x = Jet::variable(1.3);
        let p = (x * x * x).derivatives();
        assert!((p[0] - 1.3f64.powi(3)).abs() < 1e-14);
        assert!((p[1] - 3.0 * 1.69).abs() < 1e-13);
        assert!((p[2] - 6.0 * 1.3).abs() < 1e-13);
        assert!((p[3] - 6.0).abs() < 1e-13);
        assert_eq!(p[4], 0.0);
    }
}
