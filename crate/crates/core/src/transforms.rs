//! Cauchy-Green transforms on the padded grid and pointwise probe quadrature.
//!
//! `DzbarInv` convolves with `1/(pi z)`, `DzInv` with `1/(pi zbar)`, and
//! `Beurling` is `d_z` composed with `DzbarInv`. Grid transforms are circular
//! FFT convolutions; with `L >= 2` and data supported in the unit disk the
//! wrap-around never reaches the disk.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{smooth_step, Expr};
use crate::fft::{signed_frequency, Fft2};
use crate::field::{ComplexField, DiskGrid};
use crate::jet::Jet;
use crate::quadrature::GaussLegendre;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformKind {
    /// Conjugated Cauchy-Green operator, kernel `1/(pi zbar)`; right inverse of `d_z`.
    DzInv,
    /// Cauchy-Green operator, kernel `1/(pi z)`; right inverse of `d_zbar`.
    DzbarInv,
    /// `d_z DzbarInv`.
    Beurling,
}

/// Precomputed kernel spectra for one grid.
#[derive(Debug)]
pub struct TransformEngine {
    grid: DiskGrid,
    fft: Fft2,
    cauchy: Vec<Complex64>,
    beurling: Vec<Complex64>,
}

impl TransformEngine {
    pub fn new(grid: DiskGrid) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let fft = Fft2::new(n);
        let half = n / 2;
        let mut weights = vec![ZERO; n * n];
        for j in 0..n {
            for i in 0..n {
                // The singular cell and the unpaired Nyquist offsets carry no weight.
                if (i == 0 && j == 0) || i == half || j == half {
                    continue;
                }
                let (mx, my) = (signed_frequency(i, n) as f64, signed_frequency(j, n) as f64);
                weights[j * n + i] = h / (PI * Complex64::new(mx, my));
            }
        }
        fft.forward(&mut weights);
        let cauchy = weights;
        // Beurling symbol: kernel spectrum times the symbol of the order-4 d_z stencil.
        let mut beurling = vec![ZERO; n * n];
        let stencil = |m: usize| {
            let t = 2.0 * PI * m as f64 / n as f64;
            (8.0 * t.sin() - (2.0 * t).sin()) / (6.0 * h)
        };
        for j in 0..n {
            let sy = stencil(j);
            for i in 0..n {
                let sx = stencil(i);
                let dz = 0.5 * Complex64::new(sy, sx);
                beurling[j * n + i] = cauchy[j * n + i] * dz;
            }
        }
        beurling[0] = ZERO;
        Self {
            grid,
            fft,
            cauchy,
            beurling,
        }
    }

    /// Engine shared through a process-wide cache keyed by the grid.
    pub fn shared(grid: &DiskGrid) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<TransformEngine>>>> = OnceLock::new();
        let key = (grid.n(), grid.half_width().to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("transform cache poisoned");
        if guard.len() > 4 {
            guard.clear();
        }
        guard
            .entry(key)
            .or_insert_with(|| Arc::new(TransformEngine::new(*grid)))
            .clone()
    }

    pub fn grid(&self) -> &DiskGrid {
        &self.grid
    }

    /// Apply any of the three transforms.
    pub fn apply(&self, kind: TransformKind, phi: &ComplexField) -> Result<ComplexField> {
        self.check_input(phi)?;
        Ok(self.apply_unchecked(kind, phi))
    }

    pub fn cauchy_green(&self, kind: TransformKind, phi: &ComplexField) -> Result<ComplexField> {
        if kind == TransformKind::Beurling {
            return Err(Error::UnsupportedKind(kind));
        }
        self.apply(kind, phi)
    }

    pub fn beurling(&self, phi: &ComplexField) -> Result<ComplexField> {
        self.apply(TransformKind::Beurling, phi)
    }

    /// Transform without the mask check; the caller guarantees the support.
    pub(crate) fn apply_unchecked(&self, kind: TransformKind, phi: &ComplexField) -> ComplexField {
        match kind {
            TransformKind::DzbarInv => self.multiply(phi.values(), &self.cauchy),
            TransformKind::Beurling => self.multiply(phi.values(), &self.beurling),
            TransformKind::DzInv => {
                let conj: Vec<Complex64> = phi.values().iter().map(|v| v.conj()).collect();
                self.multiply(&conj, &self.cauchy).conj()
            }
        }
    }

    fn multiply(&self, values: &[Complex64], symbol: &[Complex64]) -> ComplexField {
        let mut data = values.to_vec();
        self.fft.forward(&mut data);
        data.iter_mut().zip(symbol).for_each(|(d, s)| *d *= s);
        self.fft.inverse(&mut data);
        ComplexField::from_values_unchecked(self.grid, data)
    }

    fn check_input(&self, phi: &ComplexField) -> Result<()> {
        if phi.grid() != &self.grid {
            return Err(Error::InvalidGrid("field grid differs from the transform grid".into()));
        }
        check_masked(phi)
    }
}

/// Error unless the field vanishes at every node outside the closed unit disk.
pub fn check_masked(phi: &ComplexField) -> Result<()> {
    let grid = phi.grid();
    for (idx, v) in phi.values().iter().enumerate() {
        let z = grid.node_at(idx);
        if z.norm() > 1.0 && *v != ZERO {
            return Err(Error::NotMasked { z, value: v.norm() });
        }
    }
    Ok(())
}

/// `DzInv` or `DzbarInv` of a field supported in the unit disk.
pub fn cauchy_green(kind: TransformKind, phi: &ComplexField) -> Result<ComplexField> {
    TransformEngine::shared(phi.grid()).cauchy_green(kind, phi)
}

/// Beurling transform of a field supported in the unit disk.
pub fn beurling(phi: &ComplexField) -> Result<ComplexField> {
    TransformEngine::shared(phi.grid()).beurling(phi)
}

/// A density known pointwise, for [`probe_transform`].
pub trait PointDensity: Sync {
    fn eval(&self, zeta: Complex64) -> Complex64;

    /// Radius outside of which the density vanishes.
    fn support_radius(&self) -> f64;

    /// Radii across which the density is not smooth (radial quadrature breaks there).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl PointDensity for Expr {
    fn eval(&self, zeta: Complex64) -> Complex64 {
        Expr::eval(self, zeta)
    }

    fn support_radius(&self) -> f64 {
        Expr::support_radius(self).unwrap_or(1.0).min(1.0)
    }
}

/// Indicator of the open unit disk.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitDiskIndicator;

impl PointDensity for UnitDiskIndicator {
    fn eval(&self, zeta: Complex64) -> Complex64 {
        if zeta.norm() < 1.0 {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        }
    }

    fn support_radius(&self) -> f64 {
        1.0
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![1.0]
    }
}

/// A closure density with an explicit support radius.
pub struct FnDensity<F> {
    pub f: F,
    pub support: f64,
}

impl<F: Fn(Complex64) -> Complex64 + Sync> PointDensity for FnDensity<F> {
    fn eval(&self, zeta: Complex64) -> Complex64 {
        if zeta.norm() >= self.support {
            ZERO
        } else {
            (self.f)(zeta)
        }
    }

    fn support_radius(&self) -> f64 {
        self.support
    }
}

/// Probe quadrature controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Convergence target relative to the summed piece magnitudes.
    pub rel_tol: f64,
    /// Doublings allowed per piece.
    pub max_levels: usize,
    /// Gauss nodes per radial interval at the coarsest level.
    pub radial_nodes: usize,
    /// Trapezoid nodes per circle at the coarsest level.
    pub angular_nodes: usize,
    /// Innermost annulus radius as a fraction of `|point|`.
    pub inner_fraction: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            max_levels: 7,
            radial_nodes: 8,
            angular_nodes: 32,
            inner_fraction: 2f64.powi(-20),
        }
    }
}

impl QuadSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

/// One region of the probe integral: either the patch around the point
/// (polar about the point) or an annulus about the origin.
#[derive(Clone, Copy, Debug)]
enum Piece {
    Patch,
    Annulus(f64, f64),
}

struct Probe<'a> {
    kind: TransformKind,
    phi: &'a dyn PointDensity,
    z: Complex64,
    /// patch radius
    rho: f64,
    phi_z: Complex64,
}

impl Probe<'_> {
    /// Partition-of-unity weight of the patch: 1 within `rho/2` of the point,
    /// 0 beyond `rho`.
    fn eta(&self, dist: f64) -> f64 {
        if dist <= 0.5 * self.rho {
            1.0
        } else if dist >= self.rho {
            0.0
        } else {
            smooth_step(Jet::constant(2.0 * (1.0 - dist / self.rho))).value()
        }
    }

    fn kernel(&self, d: Complex64) -> Complex64 {
        // d = z - zeta
        match self.kind {
            TransformKind::DzbarInv => 1.0 / (PI * d),
            TransformKind::DzInv => 1.0 / (PI * d.conj()),
            TransformKind::Beurling => -1.0 / (PI * d * d),
        }
    }

    fn integrate(&self, piece: Piece, level: usize, spec: &QuadSpec) -> Complex64 {
        let nr = spec.radial_nodes << level;
        let nt = spec.angular_nodes << level;
        let gauss = GaussLegendre::cached(nr);
        let dt = 2.0 * PI / nt as f64;
        let rotations: Vec<Complex64> = (0..nt)
            .map(|m| Complex64::from_polar(1.0, (m as f64 + 0.5) * dt))
            .collect();
        let mut acc = ZERO;
        match piece {
            Piece::Patch => {
                for (a, b) in [(0.0, 0.5 * self.rho), (0.5 * self.rho, self.rho)] {
                    for (rr, wr) in gauss.mapped(a, b) {
                        let mut ring = ZERO;
                        for e in &rotations {
                            let zeta = self.z + rr * e;
                            let v = self.eta(rr) * self.phi.eval(zeta);
                            ring += match self.kind {
                                // zeta - z = rr e; 1/(pi (z - zeta)) dA = -conj(e)/pi drr dt
                                TransformKind::DzbarInv => -v * e.conj(),
                                TransformKind::DzInv => -v * e,
                                TransformKind::Beurling => -(v - self.phi_z) * e.conj() * e.conj() / rr,
                            };
                        }
                        acc += wr * ring;
                    }
                }
                acc * dt / PI
            }
            Piece::Annulus(a, b) => {
                for (rr, wr) in gauss.mapped(a, b) {
                    let mut ring = ZERO;
                    for e in &rotations {
                        let zeta = rr * e;
                        let d = self.z - zeta;
                        let w = 1.0 - self.eta(d.norm());
                        if w == 0.0 {
                            continue;
                        }
                        ring += w * self.phi.eval(zeta) * self.kernel(d);
                    }
                    acc += wr * rr * ring;
                }
                acc * dt
            }
        }
    }
}

/// Pointwise value of a transform of a closed-form density at `0 < |point| < 1/8`.
///
/// The integrand is split by a smooth partition of unity into a patch of radius
/// `|point|/2` around the point, integrated in polar coordinates centred there
/// (the kernel singularity cancels against the area element), and the rest,
/// integrated over dyadic annuli about the origin. Each piece is refined by
/// doubling both rules until successive levels agree.
pub fn probe_transform(
    kind: TransformKind,
    phi: &dyn PointDensity,
    point: Complex64,
    quad: &QuadSpec,
) -> Result<Complex64> {
    let r = point.norm();
    if !(r > 0.0 && r < 0.125) {
        return Err(Error::ProbeOutOfRange(r));
    }
    let probe = Probe {
        kind,
        phi,
        z: point,
        rho: 0.5 * r,
        phi_z: phi.eval(point),
    };
    let pieces = pieces(phi, r, quad);

    let mut coarse = Vec::with_capacity(pieces.len());
    for &p in &pieces {
        coarse.push(probe.integrate(p, 0, quad));
    }
    let scale: f64 = coarse.iter().map(|v| v.norm()).sum();
    let target = quad.rel_tol * scale / (pieces.len() as f64).sqrt();

    let mut total = ZERO;
    for (idx, &piece) in pieces.iter().enumerate() {
        total += refine(&probe, piece, coarse[idx], target, quad)?;
    }
    Ok(total)
}

fn pieces(phi: &dyn PointDensity, r: f64, quad: &QuadSpec) -> Vec<Piece> {
    let support = phi.support_radius();
    let floor = r * quad.inner_fraction;
    let mut cuts = vec![support];
    cuts.extend(phi.breakpoints().into_iter().filter(|&b| b > floor && b < support));
    let mut x = support;
    while x > floor {
        x *= 0.5;
        cuts.push(x);
    }
    cuts.push(0.0);
    cuts.sort_by(|a, b| b.partial_cmp(a).expect("finite radii"));
    cuts.dedup();
    let mut out = vec![Piece::Patch];
    out.extend(cuts.windows(2).map(|w| Piece::Annulus(w[1], w[0])));
    out
}

fn refine(probe: &Probe<'_>, piece: Piece, first: Complex64, target: f64, quad: &QuadSpec) -> Result<Complex64> {
    let mut prev = first;
    let mut prev_err = f64::INFINITY;
    let mut rises = 0;
    for level in 1..=quad.max_levels {
        let next = probe.integrate(piece, level, quad);
        let err = (next - prev).norm();
        if err <= target {
            return Ok(next);
        }
        if err > prev_err {
            rises += 1;
            if rises >= 2 && level >= 3 {
                return Err(diverged(piece, err));
            }
        }
        prev = next;
        prev_err = err;
    }
    Err(diverged(piece, prev_err))
}

fn diverged(piece: Piece, estimate: f64) -> Error {
    let piece = match piece {
        Piece::Patch => "patch around the probe point".to_string(),
        Piece::Annulus(a, b) => format!("annulus {a:e} <= |zeta| <= {b:e}"),
    };
    Error::QuadratureDiverged { piece, estimate }
}
