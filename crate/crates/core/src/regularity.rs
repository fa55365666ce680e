//! Scale-resolved seminorm tables near the origin and their regression
//! against `sqrt(-log r)`.

use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff::CounterexampleCoefficient;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{differentiate, evaluate_at, ComplexField, Direction, ProbeSet};
use crate::transforms::{probe_transform, PointDensity, QuadSpec, TransformKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormRow {
    pub scale: f64,
    pub value: f64,
    pub pairs: usize,
}

/// Rows ordered by strictly decreasing scale, finite values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormTable {
    rows: Vec<SeminormRow>,
}

impl SeminormTable {
    pub fn new(rows: Vec<SeminormRow>) -> Result<Self> {
        for w in rows.windows(2) {
            if !(w[1].scale < w[0].scale) {
                return Err(Error::InvalidProbes("table scales must strictly decrease".into()));
            }
        }
        if let Some(r) = rows.iter().find(|r| !r.value.is_finite() || r.value < 0.0 || !(r.scale > 0.0)) {
            return Err(Error::InvalidProbes(format!(
                "non-finite or negative entry at scale {}: {}",
                r.scale, r.value
            )));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[SeminormRow] {
        &self.rows
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Dyadic exponents `j` with `scale = 2^-j` of the first and last rows.
    pub fn window(&self) -> (u32, u32) {
        let j = |r: f64| (-r.log2()).round().max(0.0) as u32;
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => (j(a.scale), j(b.scale)),
            _ => (0, 0),
        }
    }

    /// Largest value over the table divided by the value at the coarsest scale.
    pub fn growth_over_coarsest(&self) -> f64 {
        let first = self.rows.first().map_or(0.0, |r| r.value);
        let max = self.rows.iter().map(|r| r.value).fold(0.0, f64::max);
        if first == 0.0 {
            if max == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            max / first
        }
    }

    /// Whether values never decrease as the scale shrinks, allowing up to
    /// `inversions` drops of relative size at most `slack`.
    pub fn is_nondecreasing(&self, inversions: usize, slack: f64) -> bool {
        let mut used = 0;
        for w in self.rows.windows(2) {
            if w[1].value < w[0].value {
                if w[1].value < w[0].value * (1.0 - slack) {
                    return false;
                }
                used += 1;
            }
        }
        used <= inversions
    }

    /// CSV with header `scale_r,sqrt_neg_log_r,value,pairs`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "scale_r,sqrt_neg_log_r,value,pairs")?;
        for r in &self.rows {
            writeln!(out, "{:e},{:.12e},{:.12e},{}", r.scale, (-r.scale.ln()).sqrt(), r.value, r.pairs)?;
        }
        Ok(())
    }
}

/// Least-squares fit `M(r) = slope * sqrt(-log r) + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: (u32, u32),
}

/// JSON record of a fit checked against a target slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: (u32, u32),
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl LogFit {
    /// Relative deviation of the slope from `target`.
    pub fn relative_error(&self, target: f64) -> f64 {
        (self.slope - target).abs() / target.abs()
    }

    pub fn record(&self, target: Option<f64>, tolerance: Option<f64>) -> FitRecord {
        let pass = match (target, tolerance) {
            (Some(t), Some(tol)) => Some(self.relative_error(t) <= tol),
            _ => None,
        };
        FitRecord {
            slope: self.slope,
            intercept: self.intercept,
            r2: self.r2,
            window: self.window,
            target,
            tolerance,
            pass,
        }
    }
}

pub fn fit_sqrt_log(table: &SeminormTable) -> Result<LogFit> {
    let rows = table.rows();
    if rows.len() < 5 {
        return Err(Error::TooFewRows(rows.len()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (-r.scale.ln()).sqrt()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - slope * x - intercept;
            e * e
        })
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(LogFit {
        slope,
        intercept,
        r2,
        window: table.window(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GrowthClass {
    /// `M(r) ~ r^-exponent`
    PowerLaw { exponent: f64 },
    SqrtLog { slope: f64 },
    Bounded,
}

/// Ratio-of-increments classification: a power law keeps a constant doubling
/// ratio `2^alpha`, a `sqrt(-log r)` profile has ratios tending to 1 with
/// positive growth, and a bounded profile does not grow.
pub fn classify_growth(table: &SeminormTable) -> Result<GrowthClass> {
    let v = table.values();
    if v.len() < 5 {
        return Err(Error::TooFewRows(v.len()));
    }
    let logs: Vec<f64> = v
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[1] / w[0]).log2())
        .collect();
    let tail = &logs[logs.len() / 2..];
    let alpha = if tail.is_empty() { 0.0 } else { tail.iter().sum::<f64>() / tail.len() as f64 };
    if alpha > 0.2 {
        return Ok(GrowthClass::PowerLaw { exponent: alpha });
    }
    let fit = fit_sqrt_log(table)?;
    let first = v[0];
    let last = *v.last().expect("non-empty");
    if fit.slope > 0.0 && fit.r2 >= 0.9 && last > 1.05 * first {
        Ok(GrowthClass::SqrtLog { slope: fit.slope })
    } else {
        Ok(GrowthClass::Bounded)
    }
}

/// Pointwise access to all Wirtinger derivatives of one order.
pub trait ProbeField: Sync {
    /// `[d_z^p d_zbar^(m-p) u (z) for p in 0..=m]`.
    fn derivatives(&self, z: Complex64, m: usize) -> Result<Vec<Complex64>>;
}

/// Closed-form field with exact derivatives.
#[derive(Clone, Debug)]
pub struct ExprField {
    by_order: Vec<Vec<Expr>>,
}

impl ExprField {
    pub fn new(e: &Expr, max_order: usize) -> Self {
        let by_order = (0..=max_order)
            .map(|m| (0..=m).map(|p| e.derivative(p, m - p)).collect())
            .collect();
        Self { by_order }
    }
}

impl ProbeField for ExprField {
    fn derivatives(&self, z: Complex64, m: usize) -> Result<Vec<Complex64>> {
        let exprs = self.by_order.get(m).ok_or(Error::DerivativeOrder {
            order: m,
            max: self.by_order.len() - 1,
        })?;
        Ok(exprs.iter().map(|e| e.eval(z)).collect())
    }
}

/// Grid field: derivatives by order-4 differences, values by bicubic interpolation.
#[derive(Clone, Debug)]
pub struct GridField {
    by_order: HashMap<usize, Vec<ComplexField>>,
}

impl GridField {
    pub fn new(field: &ComplexField, orders: &[usize]) -> Result<Self> {
        let mut by_order = HashMap::new();
        for &m in orders {
            let mut fields = Vec::with_capacity(m + 1);
            for p in 0..=m {
                let dz = differentiate(field, Direction::Z, p)?;
                fields.push(differentiate(&dz, Direction::Zbar, m - p)?);
            }
            by_order.insert(m, fields);
        }
        Ok(Self { by_order })
    }
}

impl ProbeField for GridField {
    fn derivatives(&self, z: Complex64, m: usize) -> Result<Vec<Complex64>> {
        let fields = self.by_order.get(&m).ok_or(Error::DerivativeOrder { order: m, max: 4 })?;
        fields.iter().map(|f| evaluate_at(f, z)).collect()
    }
}

/// Pointwise closure; derivatives by Richardson-extrapolated centred
/// differences with step `|z| / 64`.
pub struct FnField<F> {
    f: F,
}

impl<F: Fn(Complex64) -> Complex64 + Sync> FnField<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F: Fn(Complex64) -> Complex64 + Sync> ProbeField for FnField<F> {
    fn derivatives(&self, z: Complex64, m: usize) -> Result<Vec<Complex64>> {
        if m > 2 {
            return Err(Error::DerivativeOrder { order: m, max: 2 });
        }
        let s = z.norm() / 64.0;
        if m > 0 && s == 0.0 {
            return Err(Error::SingularAtOrigin { p: m, q: 0 });
        }
        let f = |w: Complex64| Ok((self.f)(w));
        Ok((0..=m)
            .map(|p| nested_difference(&f, z, p, m - p, s))
            .collect::<Result<Vec<_>>>()?)
    }
}

fn nested_difference(
    f: &(dyn Fn(Complex64) -> Result<Complex64> + Sync),
    z: Complex64,
    p: usize,
    q: usize,
    s: f64,
) -> Result<Complex64> {
    if p == 0 && q == 0 {
        return f(z);
    }
    let dir = if p > 0 { Direction::Z } else { Direction::Zbar };
    let (np, nq) = if p > 0 { (p - 1, q) } else { (p, q - 1) };
    let inner = |w: Complex64| nested_difference(f, w, np, nq, s);
    richardson_wirtinger(&inner, z, s, dir)
}

/// `[(u(z+s) - u(z-s)) -/+ i (u(z+is) - u(z-is))] / (4s)`, extrapolated
/// from steps `s` and `s/2`.
pub fn richardson_wirtinger(
    u: &(dyn Fn(Complex64) -> Result<Complex64> + Sync),
    z: Complex64,
    s: f64,
    dir: Direction,
) -> Result<Complex64> {
    let i = Complex64::i();
    let sign = match dir {
        Direction::Z => -1.0,
        Direction::Zbar => 1.0,
    };
    let d = |h: f64| -> Result<Complex64> {
        let dx = u(z + h)? - u(z - h)?;
        let dy = u(z + i * h)? - u(z - i * h)?;
        Ok((dx + sign * i * dy) / (4.0 * h))
    };
    let coarse = d(s)?;
    let fine = d(0.5 * s)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Pair sampling controls shared by the seminorm tables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub pairs: usize,
    pub seed: u64,
    /// Separation band `[sep_min * r, sep_max * r]`.
    pub sep_min: f64,
    pub sep_max: f64,
}

impl Default for PairSpec {
    fn default() -> Self {
        Self {
            pairs: 256,
            seed: 0x5eed,
            sep_min: 0.25,
            sep_max: 1.0,
        }
    }
}

fn scale_rng(spec: &PairSpec, j: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(spec.seed ^ (u64::from(j) << 32))
}

fn annulus_point(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    // uniform in area on r <= |z| <= 2r
    let rho = (r * r + rng.gen::<f64>() * 3.0 * r * r).sqrt();
    Complex64::from_polar(rho, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Pairs `(z1, z2)` with both points in `[r, 2r]` and `|z1 - z2|` in the band.
fn sample_pairs(spec: &PairSpec, j: u32, r: f64) -> Vec<(Complex64, Complex64)> {
    let mut rng = scale_rng(spec, j);
    let mut out = Vec::with_capacity(spec.pairs);
    let mut attempts = 0usize;
    while out.len() < spec.pairs && attempts < spec.pairs * 1000 {
        attempts += 1;
        let z1 = annulus_point(&mut rng, r);
        let d = r * rng.gen_range(spec.sep_min..=spec.sep_max);
        let z2 = z1 + Complex64::from_polar(d, rng.gen_range(0.0..std::f64::consts::TAU));
        let m = z2.norm();
        if m >= r && m <= 2.0 * r {
            out.push((z1, z2));
        }
    }
    out
}

fn difference_table(
    u: &dyn ProbeField,
    m: usize,
    alpha: f64,
    probes: &ProbeSet,
    spec: &PairSpec,
) -> Result<SeminormTable> {
    let mut rows = Vec::new();
    for j in probes.exponents() {
        let r = 0.5f64.powi(j as i32);
        let pairs = sample_pairs(spec, j, r);
        let value = pairs
            .par_iter()
            .map(|&(z1, z2)| -> Result<f64> {
                let a = u.derivatives(z1, m)?;
                let b = u.derivatives(z2, m)?;
                let num = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                Ok(num / (z1 - z2).norm().powf(alpha))
            })
            .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))?;
        rows.push(SeminormRow {
            scale: r,
            value,
            pairs: pairs.len(),
        });
    }
    SeminormTable::new(rows)
}

/// `M(r) = max |D^m u(z1) - D^m u(z2)| / |z1 - z2|` over sampled pairs at each scale.
pub fn lipschitz_quotient(u: &dyn ProbeField, m: usize, probes: &ProbeSet, spec: &PairSpec) -> Result<SeminormTable> {
    difference_table(u, m, 1.0, probes, spec)
}

/// As [`lipschitz_quotient`] with denominator `|z1 - z2|^alpha`.
pub fn holder_seminorm(
    u: &dyn ProbeField,
    m: usize,
    alpha: f64,
    probes: &ProbeSet,
    spec: &PairSpec,
) -> Result<SeminormTable> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidProbes(format!("Hoelder exponent {alpha} outside (0, 1)")));
    }
    difference_table(u, m, alpha, probes, spec)
}

/// `M(r) = max |D^m u(z+h) - 2 D^m u(z) + D^m u(z-h)| / |h|` with centres in
/// `[r, 2r]` and `|h| = r`.
pub fn zygmund_seminorm(u: &dyn ProbeField, m: usize, probes: &ProbeSet, spec: &PairSpec) -> Result<SeminormTable> {
    let mut rows = Vec::new();
    for j in probes.exponents() {
        let r = 0.5f64.powi(j as i32);
        let mut rng = scale_rng(spec, j);
        let samples: Vec<(Complex64, Complex64)> = (0..spec.pairs)
            .map(|_| {
                let z = annulus_point(&mut rng, r);
                (z, Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU)))
            })
            .collect();
        let value = samples
            .par_iter()
            .map(|&(z, h)| -> Result<f64> {
                let p = u.derivatives(z + h, m)?;
                let c = u.derivatives(z, m)?;
                let q = u.derivatives(z - h, m)?;
                let num = (0..p.len())
                    .map(|i| (p[i] - 2.0 * c[i] + q[i]).norm())
                    .fold(0.0, f64::max);
                Ok(num / h.norm())
            })
            .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))?;
        rows.push(SeminormRow {
            scale: r,
            value,
            pairs: samples.len(),
        });
    }
    SeminormTable::new(rows)
}

/// Per radius, `max_theta |d_zbar v|` with `d_zbar` taken by
/// [`richardson_wirtinger`] at step `r / 64`.
pub fn zbar_derivative_table(
    v: &(dyn Fn(Complex64) -> Result<Complex64> + Sync),
    probes: &ProbeSet,
) -> Result<SeminormTable> {
    let mut rows = Vec::new();
    for j in probes.exponents() {
        let r = 0.5f64.powi(j as i32);
        let circle = probes.circle(j);
        let value = circle
            .par_iter()
            .map(|&z| richardson_wirtinger(v, z, r / 64.0, Direction::Zbar).map(|d| d.norm()))
            .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))?;
        rows.push(SeminormRow {
            scale: r,
            value,
            pairs: circle.len(),
        });
    }
    SeminormTable::new(rows)
}

/// Tables and fits of the lemma experiment for one `k`.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaBlowup {
    pub k: u32,
    pub target: f64,
    pub transform: SeminormTable,
    pub transform_fit: LogFit,
    pub surrogate: SeminormTable,
    pub surrogate_fit: LogFit,
    /// `|slope - surrogate slope| / surrogate slope`
    pub slope_difference: f64,
}

/// Quadrature used by the lemma experiment: the derivative is a difference
/// quotient over `r / 64`, so transform values need far more digits than
/// the probe default.
pub fn lemma_quadrature() -> QuadSpec {
    QuadSpec::with_rel_tol(1e-6)
}

/// `(k + 1)! / 100`.
pub fn lemma_target(k: u32) -> f64 {
    (1..=k + 1).product::<u32>() as f64 / 100.0
}

/// `max_theta |d_zbar^k DzInv(chi a_zbar)|` per radius, with `k - 1` of the
/// derivatives moved onto the density, fitted against `sqrt(-log r)`; the
/// same derivative step applied to `d_zbar^k b / 100` gives the surrogate.
pub fn lemma_blowup_experiment(k: u32, probes: &ProbeSet, quad: &QuadSpec) -> Result<LemmaBlowup> {
    let coeff = CounterexampleCoefficient::new(k)?;
    let density = coeff.obstruction_density();
    let transform = obstruction_table(&density, probes, quad)?;
    let transform_fit = fit_sqrt_log(&transform)?;

    let surrogate_expr = coeff.b_derivative_expr(0, k as usize)?.scale(Complex64::new(0.01, 0.0));
    let surrogate = zbar_derivative_table(&|z| Ok(surrogate_expr.eval(z)), probes)?;
    let surrogate_fit = fit_sqrt_log(&surrogate)?;
    let slope_difference = (transform_fit.slope - surrogate_fit.slope).abs() / surrogate_fit.slope.abs();
    Ok(LemmaBlowup {
        k,
        target: lemma_target(k),
        transform,
        transform_fit,
        surrogate,
        surrogate_fit,
        slope_difference,
    })
}

/// `max_theta |d_zbar DzInv(density)|` per probe radius.
pub fn obstruction_table(density: &dyn PointDensity, probes: &ProbeSet, quad: &QuadSpec) -> Result<SeminormTable> {
    let v = |z: Complex64| probe_transform(TransformKind::DzInv, density, z, quad);
    zbar_derivative_table(&v, probes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(f: impl Fn(f64) -> f64, js: std::ops::RangeInclusive<u32>) -> SeminormTable {
        SeminormTable::new(
            js.map(|j| {
                let r = 0.5f64.powi(j as i32);
                SeminormRow {
                    scale: r,
                    value: f(r),
                    pairs: 1,
                }
            })
            .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_sqrt_log_fit() {
        let t = table(|r| 3.0 * (-r.ln()).sqrt() + 1.0, 5..=14);
        let fit = fit_sqrt_log(&t).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert_eq!(fit.window, (5, 14));
    }

    #[test]
    fn constant_table_has_zero_slope() {
        let fit = fit_sqrt_log(&table(|_| 2.5, 3..=9)).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn fit_needs_five_rows() {
        assert!(matches!(fit_sqrt_log(&table(|_| 1.0, 3..=6)), Err(Error::TooFewRows(4))));
    }

    #[test]
    fn table_validation() {
        let bad = vec![
            SeminormRow { scale: 0.1, value: 1.0, pairs: 1 },
            SeminormRow { scale: 0.2, value: 1.0, pairs: 1 },
        ];
        assert!(SeminormTable::new(bad).is_err());
        let nan = vec![SeminormRow { scale: 0.1, value: f64::NAN, pairs: 1 }];
        assert!(SeminormTable::new(nan).is_err());
    }

    #[test]
    fn classification() {
        let power = table(|r| r.powf(-0.5), 3..=12);
        assert!(matches!(classify_growth(&power).unwrap(), GrowthClass::PowerLaw { exponent } if (exponent - 0.5).abs() < 1e-9));
        let slog = table(|r| 2.0 * (-r.ln()).sqrt(), 3..=12);
        assert!(matches!(classify_growth(&slog).unwrap(), GrowthClass::SqrtLog { .. }));
        let flat = table(|r| 1.0 + r, 3..=12);
        assert_eq!(classify_growth(&flat).unwrap(), GrowthClass::Bounded);
    }

    #[test]
    fn csv_schema() {
        let mut buf = Vec::new();
        table(|_| 1.0, 3..=3).write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("scale_r,sqrt_neg_log_r,value,pairs\n1.25e-1,"));
    }

    #[test]
    fn lemma_targets() {
        assert_eq!(lemma_target(1), 0.02);
        assert_eq!(lemma_target(2), 0.06);
        assert!((lemma_target(3) - 0.24).abs() < 1e-15);
    }

    #[test]
    fn pair_sampling_respects_bands() {
        let spec = PairSpec::default();
        let r = 0.01;
        let pairs = sample_pairs(&spec, 7, r);
        assert_eq!(pairs.len(), spec.pairs);
        for (a, b) in pairs {
            for z in [a, b] {
                assert!(z.norm() >= r * (1.0 - 1e-12) && z.norm() <= 2.0 * r * (1.0 + 1e-12));
            }
            let d = (a - b).norm();
            assert!(d >= 0.25 * r * (1.0 - 1e-12) && d <= r * (1.0 + 1e-12));
        }
        assert_eq!(sample_pairs(&spec, 7, r), sample_pairs(&spec, 7, r));
    }

    #[test]
    fn conjugate_isometry_has_unit_quotient() {
        let probes = ProbeSet::new(3, 10, 16).unwrap();
        let u = FnField::new(|z: Complex64| z.conj());
        let t = lipschitz_quotient(&u, 0, &probes, &PairSpec::default()).unwrap();
        for row in t.rows() {
            assert!((row.value - 1.0).abs() < 1e-12);
        }
        assert!(fit_sqrt_log(&t).unwrap().slope.abs() < 1e-10);
    }

    #[test]
    fn richardson_derivative_of_polynomial() {
        let u = |z: Complex64| Ok(z * z * z.conj());
        let z = Complex64::new(0.3, -0.1);
        let d = richardson_wirtinger(&u, z, 0.01, Direction::Zbar).unwrap();
        assert!((d - z * z).norm() < 1e-12);
        let d = richardson_wirtinger(&u, z, 0.01, Direction::Z).unwrap();
        assert!((d - 2.0 * z * z.conj()).norm() < 1e-12);
    }
}
