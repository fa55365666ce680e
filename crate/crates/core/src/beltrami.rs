//! Chart equation `w_zbar + abar w_z = 0` solved by Neumann iteration, the
//! logarithm `f = log w_z`, and the cutoff decomposition of `g = chi f`.
//!
//! With `mu = -abar` the iteration is `h <- mu (1 + S h)` from `h = 0`, and
//! `w = z + DzbarInv h`, `w_z = 1 + S h`, `w_zbar = h`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::coeff::CounterexampleCoefficient;
use crate::error::{Error, Result};
use crate::field::{differentiate, sample, wirtinger_pair, ComplexField, Direction};
use crate::transforms::{check_masked, TransformEngine, TransformKind};

/// Radius of the region on which residuals are trusted.
pub const TRUSTED_RADIUS: f64 = 0.9;
/// Inner radius of the annulus used for residuals of the equations for `f`, `g`, `h`.
pub const ANNULUS_INNER: f64 = 1.0 / 32.0;
/// Outer radius for the residual of the equation for `f`.
pub const EQ2_OUTER: f64 = 0.5;
/// Sup bound on `mu` accepted by the solver.
pub const MAX_MU: f64 = 0.25;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub mu: ComplexField,
    pub w: ComplexField,
    pub w_z: ComplexField,
    pub w_zbar: ComplexField,
    pub f: ComplexField,
    /// `sup |w_zbar + abar w_z|` on `|z| <= 0.9`, derivatives of `w` by differences.
    pub residual: f64,
    pub iterations: usize,
    /// `sup |h_{m+1} - h_m|` for every sweep.
    pub increments: Vec<f64>,
    pub log: LogReport,
}

/// Outcome of taking `f = log w_z`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogReport {
    /// `sup |f_zbar + abar f_z + abar_z|` on `1/32 <= |z| <= 1/2`.
    pub eq2_residual: f64,
    /// `sup |abar_z|` on the same annulus.
    pub eq2_scale: f64,
    /// The principal branch was not usable and `f` was continued along rows.
    pub path_continued: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartSummary {
    pub n: usize,
    pub iterations: usize,
    pub increments: Vec<f64>,
    pub residual: f64,
    pub eq2_residual: f64,
    pub eq2_scale: f64,
    pub path_continued: bool,
    pub sup_mu: f64,
    pub sup_f: f64,
}

impl Chart {
    pub fn summary(&self) -> ChartSummary {
        ChartSummary {
            n: self.w.grid().n(),
            iterations: self.iterations,
            increments: self.increments.clone(),
            residual: self.residual,
            eq2_residual: self.log.eq2_residual,
            eq2_scale: self.log.eq2_scale,
            path_continued: self.log.path_continued,
            sup_mu: self.mu.sup_norm(),
            sup_f: self.f.sup_norm(),
        }
    }

    /// Per-node CSV: `x,y,w_re,w_im,wz_re,wz_im,wzbar_re,wzbar_im,f_re,f_im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,w_re,w_im,wz_re,wz_im,wzbar_re,wzbar_im,f_re,f_im")?;
        let grid = self.w.grid();
        for idx in 0..grid.len() {
            let z = grid.node_at(idx);
            let (w, wz, wzb, f) = (
                self.w.values()[idx],
                self.w_z.values()[idx],
                self.w_zbar.values()[idx],
                self.f.values()[idx],
            );
            writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                z.re, z.im, w.re, w.im, wz.re, wz.im, wzb.re, wzb.im, f.re, f.im
            )?;
        }
        Ok(())
    }
}

/// Solve `w_zbar = mu w_z` for `mu` supported in the unit disk with `sup|mu| < 1/4`.
pub fn solve_beltrami(mu: &ComplexField, opts: &SolverOptions) -> Result<Chart> {
    let sup = mu.sup_norm();
    if sup >= MAX_MU {
        return Err(Error::CoefficientTooLarge(sup));
    }
    check_masked(mu)?;
    let grid = *mu.grid();
    let engine = TransformEngine::shared(&grid);

    let mut h = ComplexField::zeros(grid);
    let mut increments = Vec::new();
    loop {
        let s = engine.apply_unchecked(TransformKind::Beurling, &h);
        let next = mu.zip_with(&s, |m, sh| m * (ONE + sh));
        let inc = next.sub(&h).sup_norm();
        increments.push(inc);
        h = next;
        if inc <= opts.tol {
            break;
        }
        if increments.len() >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations: increments.len(),
                increment: inc,
            });
        }
    }

    let cauchy = engine.apply_unchecked(TransformKind::DzbarInv, &h);
    let w_z = engine.apply_unchecked(TransformKind::Beurling, &h).map(|v| ONE + v);
    let c = w_z.at_origin();
    if c.norm() == 0.0 {
        return Err(Error::VanishingDerivative(grid.node_at(grid.origin_index())));
    }
    let shift = cauchy.at_origin();
    let w = cauchy.map_with_node(|z, v| (z + v - shift) / c);
    let w_z = w_z.scale(1.0 / c);
    let w_zbar = h.scale(1.0 / c);

    let (fd_z, fd_zbar) = wirtinger_pair(&w);
    let residual = fd_zbar
        .values()
        .iter()
        .zip(fd_z.values())
        .zip(mu.values())
        .enumerate()
        .filter(|(idx, _)| grid.node_at(*idx).norm() <= TRUSTED_RADIUS)
        .map(|(_, ((wzb, wz), m))| (wzb - m * wz).norm())
        .fold(0.0, f64::max);

    let mut chart = Chart {
        mu: mu.clone(),
        w,
        w_z,
        w_zbar,
        f: ComplexField::zeros(grid),
        residual,
        iterations: increments.len(),
        increments,
        log: LogReport {
            eq2_residual: 0.0,
            eq2_scale: 0.0,
            path_continued: false,
        },
    };
    let (f, log) = compute_f(&chart)?;
    chart.f = f;
    chart.log = log;
    Ok(chart)
}

/// `f = log w_z` with `f(0) = 0`, plus the residual of
/// `f_zbar + abar f_z = -abar_z` (with `abar = -mu`) on `1/32 <= |z| <= 1/2`.
///
/// The principal branch is used when `|w_z - 1| < 1` on the trusted disk;
/// otherwise the argument is continued along the centre column and then
/// along rows.
pub fn compute_f(chart: &Chart) -> Result<(ComplexField, LogReport)> {
    let grid = *chart.w_z.grid();
    let wz = chart.w_z.values();
    let mut principal_ok = true;
    for (idx, v) in wz.iter().enumerate() {
        let z = grid.node_at(idx);
        if z.norm() <= TRUSTED_RADIUS {
            if v.norm() == 0.0 {
                return Err(Error::VanishingDerivative(z));
            }
            principal_ok &= (v - ONE).norm() < 1.0;
        }
    }
    let values: Vec<Complex64> = if principal_ok {
        wz.iter().map(|v| v.ln()).collect()
    } else {
        continued_log(&chart.w_z)
    };
    let f = ComplexField::from_values(grid, values)?;

    let (f_z, f_zbar) = wirtinger_pair(&f);
    let mu_z = differentiate(&chart.mu, Direction::Z, 1)?;
    let mut residual = 0.0f64;
    let mut scale = 0.0f64;
    for idx in 0..grid.len() {
        let r = grid.node_at(idx).norm();
        if !(ANNULUS_INNER..=EQ2_OUTER).contains(&r) {
            continue;
        }
        let m = chart.mu.values()[idx];
        // abar = -mu, abar_z = -mu_z
        let res = f_zbar.values()[idx] - m * f_z.values()[idx] - mu_z.values()[idx];
        residual = residual.max(res.norm());
        scale = scale.max(mu_z.values()[idx].norm());
    }
    Ok((
        f,
        LogReport {
            eq2_residual: residual,
            eq2_scale: scale,
            path_continued: !principal_ok,
        },
    ))
}

fn continued_log(w_z: &ComplexField) -> Vec<Complex64> {
    let grid = w_z.grid();
    let n = grid.n();
    let v = w_z.values();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    let unwrap = |raw: Complex64, near: Complex64| {
        let k = ((near.im - raw.im) / (2.0 * PI)).round();
        Complex64::new(raw.re, raw.im + 2.0 * PI * k)
    };
    let c = n / 2;
    out[grid.index(c, c)] = v[grid.index(c, c)].ln();
    for j in (c + 1)..n {
        out[grid.index(c, j)] = unwrap(v[grid.index(c, j)].ln(), out[grid.index(c, j - 1)]);
    }
    for j in (0..c).rev() {
        out[grid.index(c, j)] = unwrap(v[grid.index(c, j)].ln(), out[grid.index(c, j + 1)]);
    }
    for j in 0..n {
        for i in (c + 1)..n {
            out[grid.index(i, j)] = unwrap(v[grid.index(i, j)].ln(), out[grid.index(i - 1, j)]);
        }
        for i in (0..c).rev() {
            out[grid.index(i, j)] = unwrap(v[grid.index(i, j)].ln(), out[grid.index(i + 1, j)]);
        }
    }
    out
}

/// `g = chi f`, `h = zbar g` and the four terms whose sum reproduces `g`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub g: ComplexField,
    pub h: ComplexField,
    /// `g - DzbarInv(g_zbar)`
    pub antiholo: ComplexField,
    /// `DzbarInv(chi_zbar f + chi_z abar f)`
    pub smooth_cutoff: ComplexField,
    /// `-DzbarInv(abar g_z)`
    pub gain: ComplexField,
    /// `-DzbarInv(chi abar_z)`
    pub obstruction: ComplexField,
    pub diagnostics: DecompositionDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionDiagnostics {
    /// `sup |g|`
    pub g_sup: f64,
    /// `sup |g_zbar + abar g_z - (chi_zbar f + chi_z abar f - chi abar_z)|` on the annulus.
    pub eq3_residual: f64,
    pub eq3_scale: f64,
    /// Same for `h` and its right-hand side.
    pub eq4_residual: f64,
    pub eq4_scale: f64,
    /// `sup |sum of terms - g|` on `|z| <= 0.9`.
    pub sum_residual: f64,
    /// `sup |d_z antiholo|` on `|z| <= 0.9`.
    pub antiholo_dz: f64,
    /// `L^2` norm of `d_z antiholo` on `|z| <= 0.9` relative to that of `g`.
    pub antiholo_dz_l2_rel: f64,
    /// `sup |chi_zbar f + chi_z abar f|` on `r <= 1/8` together with `r >= 3/8`.
    pub cutoff_outside_transition: f64,
}

/// Relative residual bound for the equations satisfied by `g` and `h`.
pub const DECOMPOSITION_TOL: f64 = 1e-2;

/// The `g` and `h` residuals skip nodes within this many grid spacings of the
/// origin, where difference stencils straddle the singularity of `a_z`.
pub const STENCIL_CLEARANCE: f64 = 8.0;

pub fn decompose(chart: &Chart, coeff: &CounterexampleCoefficient) -> Result<Decomposition> {
    let grid = *chart.f.grid();
    let engine = TransformEngine::shared(&grid);
    let f = &chart.f;

    let chi = sample(&grid, |z| Complex64::new(coeff.eval_chi(z), 0.0))?;
    let chi_z = sample(&grid, |z| coeff.eval_chi_z(z))?;
    let chi_zbar = chi_z.conj();
    let abar = chart.mu.scale(Complex64::new(-1.0, 0.0));
    let abar_z = sample(&grid, |z| coeff.eval_abar_z(z))?;

    let g = chi.mul(f);
    let h = g.map_with_node(|z, v| z.conj() * v);
    let (g_z, g_zbar) = wirtinger_pair(&g);
    let (h_z, h_zbar) = wirtinger_pair(&h);

    // chi_zbar f + chi_z abar f
    let cutoff_density = chi_zbar.mul(f).add(&chi_z.mul(&abar).mul(f));
    let chi_abar_z = chi.mul(&abar_z);

    let antiholo = g.sub(&engine.apply(TransformKind::DzbarInv, &g_zbar.masked(1.0))?);
    let smooth_cutoff = engine.apply(TransformKind::DzbarInv, &cutoff_density)?;
    let gain = engine
        .apply(TransformKind::DzbarInv, &abar.mul(&g_z).masked(1.0))?
        .scale(Complex64::new(-1.0, 0.0));
    let obstruction = engine
        .apply(TransformKind::DzbarInv, &chi_abar_z)?
        .scale(Complex64::new(-1.0, 0.0));

    let rhs3 = cutoff_density.sub(&chi_abar_z);
    let lhs3 = g_zbar.add(&abar.mul(&g_z));
    let rhs4 = g.add(&rhs3.map_with_node(|z, v| z.conj() * v));
    let lhs4 = h_zbar.add(&abar.mul(&h_z));
    let (eq3_residual, eq3_scale) = annulus_residual(&lhs3, &rhs3);
    let (eq4_residual, eq4_scale) = annulus_residual(&lhs4, &rhs4);

    let sum = antiholo.add(&smooth_cutoff).add(&gain).add(&obstruction);
    let sum_residual = sum.sub(&g).sup_norm_within(TRUSTED_RADIUS);
    let dz_antiholo = differentiate(&antiholo, Direction::Z, 1)?;
    let antiholo_dz = dz_antiholo.sup_norm_within(TRUSTED_RADIUS);
    let l2_within = |u: &ComplexField| {
        u.values()
            .iter()
            .enumerate()
            .filter(|(idx, _)| grid.node_at(*idx).norm() <= TRUSTED_RADIUS)
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let g_l2 = l2_within(&g);
    let antiholo_dz_l2_rel = if g_l2 > 0.0 { l2_within(&dz_antiholo) / g_l2 } else { 0.0 };
    let cutoff_outside_transition = cutoff_density
        .values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| {
            let r = grid.node_at(*idx).norm();
            r <= 0.125 || r >= 0.375
        })
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);

    let diagnostics = DecompositionDiagnostics {
        g_sup: g.sup_norm(),
        eq3_residual,
        eq3_scale,
        eq4_residual,
        eq4_scale,
        sum_residual,
        antiholo_dz,
        antiholo_dz_l2_rel,
        cutoff_outside_transition,
    };
    let mut failures = Vec::new();
    if eq3_residual > DECOMPOSITION_TOL * eq3_scale {
        failures.push(format!("g equation: residual {eq3_residual:e} vs scale {eq3_scale:e}"));
    }
    if eq4_residual > DECOMPOSITION_TOL * eq4_scale {
        failures.push(format!("h equation: residual {eq4_residual:e} vs scale {eq4_scale:e}"));
    }
    if !failures.is_empty() {
        return Err(Error::Residual(failures.join("; ")));
    }
    Ok(Decomposition {
        g,
        h,
        antiholo,
        smooth_cutoff,
        gain,
        obstruction,
        diagnostics,
    })
}

/// `(sup |lhs - rhs|, sup |rhs|)` on `1/32 <= |z| <= 0.9`.
fn annulus_residual(lhs: &ComplexField, rhs: &ComplexField) -> (f64, f64) {
    let grid = lhs.grid();
    let mut res = 0.0f64;
    let mut scale = 0.0f64;
    let inner = ANNULUS_INNER.max(STENCIL_CLEARANCE * grid.spacing());
    for idx in 0..grid.len() {
        let r = grid.node_at(idx).norm();
        if !(inner..=TRUSTED_RADIUS).contains(&r) {
            continue;
        }
        res = res.max((lhs.values()[idx] - rhs.values()[idx]).norm());
        scale = scale.max(rhs.values()[idx].norm());
    }
    (res, scale)
}

/// `mu = -abar` sampled on the grid.
pub fn mu_from_coefficient(grid: &crate::field::DiskGrid, coeff: &CounterexampleCoefficient) -> Result<ComplexField> {
    sample(grid, |z| -coeff.eval_a(z).conj())
}
