//! Uniform grids over the padded square `[-L, L]^2`, complex samples on them,
//! Wirtinger finite differences, bicubic interpolation and dyadic probe sets.
//!
//! Node `(i, j)` sits at `x = -L + i h`, `y = -L + j h` with `h = 2L / n`, and
//! samples are stored row-major (`j` is the row). Because `n` is even the
//! origin is always the node `(n/2, n/2)`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid accepted by [`DiskGrid::new`].
pub const MIN_GRID_N: usize = 256;

/// Largest derivative order accepted by [`differentiate`].
pub const MAX_DERIVATIVE_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskGrid {
    n: usize,
    half_width: f64,
}

impl DiskGrid {
    /// Build a grid with `n` samples per axis on `[-half_width, half_width]^2`.
    ///
    /// `n` must be even and at least 256, and `half_width >= 2` so that circular
    /// convolution of data supported in the unit disk does not alias back onto
    /// the disk.
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < MIN_GRID_N || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be even and >= {MIN_GRID_N}"
            )));
        }
        if !half_width.is_finite() || half_width < 2.0 {
            return Err(Error::InvalidGrid(format!(
                "half width {half_width} must be >= 2"
            )));
        }
        Ok(Self { n, half_width })
    }

    /// Grid with the default padding `L = 2`.
    pub fn with_n(n: usize) -> Result<Self> {
        Self::new(n, 2.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        let h = self.spacing();
        Complex64::new(
            -self.half_width + i as f64 * h,
            -self.half_width + j as f64 * h,
        )
    }

    /// Node coordinate of flat index `idx`.
    #[inline]
    pub fn node_at(&self, idx: usize) -> Complex64 {
        self.node(idx % self.n, idx / self.n)
    }

    /// Flat index of the node at the origin.
    pub fn origin_index(&self) -> usize {
        self.index(self.n / 2, self.n / 2)
    }

    /// Number of boundary nodes per side whose derivatives of the given order
    /// are computed with reduced-order stencils and must not be trusted.
    pub fn untrusted_band(&self, order: usize) -> usize {
        2 * order
    }

    /// Iterator over `(flat index, z)` for nodes with `|z| <= radius`.
    pub fn nodes_within(&self, radius: f64) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (0..self.len())
            .map(move |idx| (idx, self.node_at(idx)))
            .filter(move |(_, z)| z.norm() <= radius)
    }
}

/// Complex samples on a [`DiskGrid`]; every sample is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: DiskGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: DiskGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: DiskGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                got: values.len(),
                expected: grid.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let n = grid.n();
            return Err(Error::NonFinite {
                i: idx % n,
                j: idx / n,
                z: grid.node_at(idx),
                value: values[idx],
            });
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for results of finite arithmetic on finite data.
    pub(crate) fn from_values_unchecked(grid: DiskGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &DiskGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn at_origin(&self) -> Complex64 {
        self.values[self.grid.origin_index()]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_values_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `f(z, value)`.
    pub fn map_with_node(&self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(self.grid.node_at(idx), v))
            .collect();
        Self::from_values_unchecked(self.grid, values)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_values_unchecked(self.grid, values)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Supremum of `|value|` over nodes with `inner <= |z| <= outer`.
    pub fn sup_norm_on_annulus(&self, inner: f64, outer: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                let r = self.grid.node_at(*idx).norm();
                r >= inner && r <= outer
            })
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Supremum of `|value|` over the closed disk `|z| <= radius`.
    pub fn sup_norm_within(&self, radius: f64) -> f64 {
        self.sup_norm_on_annulus(0.0, radius)
    }

    /// Discrete `L^2` norm `(sum |v|^2 h^2)^(1/2)` over the whole grid.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h).sqrt()
    }

    /// Zero every sample with `|z| > radius`.
    pub fn masked(&self, radius: f64) -> Self {
        self.map_with_node(|z, v| if z.norm() > radius { Complex64::new(0.0, 0.0) } else { v })
    }

    /// Row-major CSV dump with header `x,y,re,im`. Debugging aid only.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,re,im")?;
        for (idx, v) in self.values.iter().enumerate() {
            let z = self.grid.node_at(idx);
            writeln!(out, "{},{},{},{}", z.re, z.im, v.re, v.im)?;
        }
        Ok(())
    }

    /// Row-major little-endian `f64` pairs `(re, im)`, no header.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        for v in &self.values {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Sample a pointwise function at every node.
pub fn sample(grid: &DiskGrid, f: impl Fn(Complex64) -> Complex64) -> Result<ComplexField> {
    let values: Vec<Complex64> = (0..grid.len()).map(|idx| f(grid.node_at(idx))).collect();
    ComplexField::from_values(*grid, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// `d_z = (d_x - i d_y) / 2`
    Z,
    /// `d_zbar = (d_x + i d_y) / 2`
    Zbar,
}

/// Wirtinger derivative of the given order by centered order-4 differences.
///
/// The two outermost rows/columns fall back to lower-order stencils; see
/// [`DiskGrid::untrusted_band`].
pub fn differentiate(field: &ComplexField, direction: Direction, order: usize) -> Result<ComplexField> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::OrderTooLarge(order));
    }
    let mut current = field.clone();
    for _ in 0..order {
        current = wirtinger_once(&current, direction);
    }
    Ok(current)
}

/// Both first-order Wirtinger derivatives `(d_z u, d_zbar u)`.
pub fn wirtinger_pair(field: &ComplexField) -> (ComplexField, ComplexField) {
    let (dx, dy) = partials(field);
    let i = Complex64::i();
    let dz = dx.zip_with(&dy, |a, b| 0.5 * (a - i * b));
    let dzb = dx.zip_with(&dy, |a, b| 0.5 * (a + i * b));
    (dz, dzb)
}

fn wirtinger_once(field: &ComplexField, direction: Direction) -> ComplexField {
    let (dx, dy) = partials(field);
    let i = Complex64::i();
    match direction {
        Direction::Z => dx.zip_with(&dy, |a, b| 0.5 * (a - i * b)),
        Direction::Zbar => dx.zip_with(&dy, |a, b| 0.5 * (a + i * b)),
    }
}

#[inline]
fn stencil(get: impl Fn(usize) -> Complex64, k: usize, n: usize, h: f64) -> Complex64 {
    if k >= 2 && k + 2 < n {
        (get(k - 2) - 8.0 * get(k - 1) + 8.0 * get(k + 1) - get(k + 2)) / (12.0 * h)
    } else if k >= 1 && k + 1 < n {
        (get(k + 1) - get(k - 1)) / (2.0 * h)
    } else if k == 0 {
        (get(1) - get(0)) / h
    } else {
        (get(k) - get(k - 1)) / h
    }
}

fn partials(field: &ComplexField) -> (ComplexField, ComplexField) {
    let grid = *field.grid();
    let n = grid.n();
    let h = grid.spacing();
    let v = field.values();
    let mut dx = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut dy = vec![Complex64::new(0.0, 0.0); grid.len()];
    for j in 0..n {
        let row = &v[j * n..(j + 1) * n];
        for i in 0..n {
            dx[j * n + i] = stencil(|k| row[k], i, n, h);
        }
    }
    for j in 0..n {
        for i in 0..n {
            dy[j * n + i] = stencil(|k| v[k * n + i], j, n, h);
        }
    }
    (
        ComplexField::from_values_unchecked(grid, dx),
        ComplexField::from_values_unchecked(grid, dy),
    )
}

/// Four-point Lagrange weights for nodes at offsets -1, 0, 1, 2 and fractional
/// position `t` in `[0, 1)`.
#[inline]
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Bicubic (tensor four-point Lagrange) interpolation; exact at nodes and for
/// polynomials of degree three in each variable.
pub fn evaluate_at(field: &ComplexField, point: Complex64) -> Result<Complex64> {
    let grid = field.grid();
    let n = grid.n();
    let h = grid.spacing();
    let sx = (point.re + grid.half_width()) / h;
    let sy = (point.im + grid.half_width()) / h;
    if !sx.is_finite() || !sy.is_finite() {
        return Err(Error::OutsideGrid(point));
    }
    let i0 = sx.floor();
    let j0 = sy.floor();
    if i0 < 1.0 || j0 < 1.0 || i0 + 2.0 > (n - 1) as f64 || j0 + 2.0 > (n - 1) as f64 {
        return Err(Error::OutsideGrid(point));
    }
    let (i0, j0) = (i0 as usize, j0 as usize);
    let wx = lagrange4(sx - i0 as f64);
    let wy = lagrange4(sy - j0 as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, wyb) in wy.iter().enumerate() {
        if *wyb == 0.0 {
            continue;
        }
        let mut row = Complex64::new(0.0, 0.0);
        for (a, wxa) in wx.iter().enumerate() {
            if *wxa != 0.0 {
                row += field.at(i0 + a - 1, j0 + b - 1) * *wxa;
            }
        }
        acc += row * *wyb;
    }
    Ok(acc)
}

/// Dyadic probe radii `r_j = 2^-j`, `j_min <= j <= j_max`, with `angles`
/// equally spaced angles per radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSet {
    j_min: u32,
    j_max: u32,
    angles: usize,
}

impl ProbeSet {
    pub fn new(j_min: u32, j_max: u32, angles: usize) -> Result<Self> {
        if j_min < 3 {
            return Err(Error::InvalidProbes(format!(
                "j_min = {j_min}: coarsest radius must be <= 1/8"
            )));
        }
        if j_max <= j_min {
            return Err(Error::InvalidProbes(format!(
                "j_max = {j_max} must exceed j_min = {j_min}"
            )));
        }
        if j_max > 40 {
            return Err(Error::InvalidProbes(format!("j_max = {j_max} is below double resolution")));
        }
        if angles < 16 {
            return Err(Error::InvalidProbes(format!("need at least 16 angles, got {angles}")));
        }
        Ok(Self { j_min, j_max, angles })
    }

    pub fn j_min(&self) -> u32 {
        self.j_min
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    pub fn angle_count(&self) -> usize {
        self.angles
    }

    pub fn exponents(&self) -> impl Iterator<Item = u32> {
        self.j_min..=self.j_max
    }

    /// Radii from coarsest to finest.
    pub fn radii(&self) -> Vec<f64> {
        self.exponents().map(|j| (-(j as f64)).exp2()).collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.angles)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / self.angles as f64)
            .collect()
    }

    /// Probe points on the circle of radius `2^-j`.
    pub fn circle(&self, j: u32) -> Vec<Complex64> {
        let r = (-(j as f64)).exp2();
        self.angles()
            .into_iter()
            .map(|t| Complex64::from_polar(r, t))
            .collect()
    }
}
