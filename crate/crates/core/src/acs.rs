//! Almost complex structures built from the coefficient `a`, their lift to
//! `R^{2n}`, and finite-difference integrability checks.
//!
//! Real coordinates are ordered `(x1, y1, x2, y2, ...)`. The `i`-eigenvector of
//! the planar structure is `d_z + a d_zbar`, whose real components are
//! `((1 + a)/2, i(a - 1)/2)`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coeff::CounterexampleCoefficient;
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Real components of `d_z + a d_zbar`.
pub fn eigenvector(a: Complex64) -> [Complex64; 2] {
    [(1.0 + a) * 0.5, I * (a - 1.0) * 0.5]
}

/// The real `2x2` matrix with `J v = i v` for `v = d_z + a d_zbar`, from the
/// four real equations obtained by splitting `J v = i v` into real and
/// imaginary parts.
pub fn j_from_a(a: Complex64) -> Result<Matrix2<f64>> {
    if (a.norm() - 1.0).abs() <= 1e-12 {
        return Err(Error::Degenerate(a.norm()));
    }
    let [vx, vy] = eigenvector(a);
    // unknowns (p, q, r, s) of J = [[p, q], [r, s]]
    let m = Matrix4::new(
        vx.re, vy.re, 0.0, 0.0, //
        vx.im, vy.im, 0.0, 0.0, //
        0.0, 0.0, vx.re, vy.re, //
        0.0, 0.0, vx.im, vy.im,
    );
    let rhs = Vector4::new(-vx.im, vx.re, -vy.im, vy.re);
    let sol = m.lu().solve(&rhs).ok_or(Error::Degenerate(a.norm()))?;
    Ok(Matrix2::new(sol[0], sol[1], sol[2], sol[3]))
}

/// A smooth field of complex structures on `R^{dim}`.
pub trait StructureField: Sync {
    fn dim(&self) -> usize;

    fn j(&self, p: &[f64]) -> DMatrix<f64>;

    /// Distance from `p` to the set where the structure is not smooth.
    fn singular_distance(&self, _p: &[f64]) -> f64 {
        f64::INFINITY
    }
}

type CoefficientFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Planar structure whose `i`-eigenbundle is spanned by `d_z + a d_zbar`.
#[derive(Clone)]
pub struct AlmostComplexStructure2D {
    a: CoefficientFn,
    singular_at_origin: bool,
}

impl std::fmt::Debug for AlmostComplexStructure2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AlmostComplexStructure2D")
            .field("singular_at_origin", &self.singular_at_origin)
            .finish()
    }
}

impl AlmostComplexStructure2D {
    pub fn standard() -> Self {
        Self::from_fn(|_| Complex64::new(0.0, 0.0), false)
    }

    pub fn from_coefficient(coeff: &CounterexampleCoefficient) -> Self {
        let c = coeff.clone();
        Self::from_fn(move |z| c.eval_a(z), true)
    }

    pub fn from_fn(a: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static, singular_at_origin: bool) -> Self {
        Self {
            a: Arc::new(a),
            singular_at_origin,
        }
    }

    pub fn coefficient(&self, z: Complex64) -> Complex64 {
        (self.a)(z)
    }

    pub fn j_matrix(&self, z: Complex64) -> Result<Matrix2<f64>> {
        j_from_a(self.coefficient(z))
    }
}

impl StructureField for AlmostComplexStructure2D {
    fn dim(&self) -> usize {
        2
    }

    fn j(&self, p: &[f64]) -> DMatrix<f64> {
        let m = self
            .j_matrix(Complex64::new(p[0], p[1]))
            .expect("coefficient must satisfy |a| != 1");
        DMatrix::from_column_slice(2, 2, m.as_slice())
    }

    fn singular_distance(&self, p: &[f64]) -> f64 {
        if self.singular_at_origin {
            p[0].hypot(p[1])
        } else {
            f64::INFINITY
        }
    }
}

/// `J = J_1(z^1)` on the first plane and the standard structure on the others.
#[derive(Clone, Debug)]
pub struct LiftedStructureND {
    n: usize,
    base: AlmostComplexStructure2D,
}

pub fn lift(base: &AlmostComplexStructure2D, n: usize) -> Result<LiftedStructureND> {
    if !(1..=3).contains(&n) {
        return Err(Error::Dimension { expected: 3, got: n });
    }
    Ok(LiftedStructureND { n, base: base.clone() })
}

impl LiftedStructureND {
    pub fn n(&self) -> usize {
        self.n
    }

    fn a_at(&self, p: &[f64]) -> Complex64 {
        self.base.coefficient(Complex64::new(p[0], p[1]))
    }

    /// Frame of the `i`-eigenbundle: `Z_1 = d_{z^1} + a d_{zbar^1}`, `Z_j = d_{z^j}`,
    /// each as complex components in the real coordinate basis.
    pub fn frame(&self, p: &[f64]) -> Vec<DVector<Complex64>> {
        let dim = 2 * self.n;
        let mut out = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let mut v = DVector::from_element(dim, Complex64::new(0.0, 0.0));
            let [vx, vy] = eigenvector(if j == 0 { self.a_at(p) } else { Complex64::new(0.0, 0.0) });
            v[2 * j] = vx;
            v[2 * j + 1] = vy;
            out.push(v);
        }
        out
    }

    /// Annihilator of the frame: `theta = dzbar^1 - a dz^1` and `dzbar^j`, `j >= 2`.
    pub fn coframe(&self, p: &[f64]) -> Vec<DVector<Complex64>> {
        let dim = 2 * self.n;
        let mut out = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let mut c = DVector::from_element(dim, Complex64::new(0.0, 0.0));
            let a = if j == 0 { self.a_at(p) } else { Complex64::new(0.0, 0.0) };
            // dzbar = dx - i dy, dz = dx + i dy
            c[2 * j] = 1.0 - a;
            c[2 * j + 1] = -I - I * a;
            out.push(c);
        }
        out
    }
}

impl StructureField for LiftedStructureND {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn j(&self, p: &[f64]) -> DMatrix<f64> {
        let dim = 2 * self.n;
        let mut m = DMatrix::zeros(dim, dim);
        let j1 = self.base.j(p);
        m.view_mut((0, 0), (2, 2)).copy_from(&j1);
        for b in 1..self.n {
            m[(2 * b, 2 * b + 1)] = -1.0;
            m[(2 * b + 1, 2 * b)] = 1.0;
        }
        m
    }

    fn singular_distance(&self, p: &[f64]) -> f64 {
        self.base.singular_distance(p)
    }
}

/// Polynomial vector field on `R^dim`: component `k` is
/// `sum coeff * prod_i x_i^{exps[i]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField {
    dim: usize,
    components: Vec<Vec<(f64, Vec<u32>)>>,
}

impl PolyVectorField {
    pub fn new(dim: usize, components: Vec<Vec<(f64, Vec<u32>)>>) -> Result<Self> {
        if components.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: components.len(),
            });
        }
        for (_, e) in components.iter().flatten() {
            if e.len() != dim {
                return Err(Error::Dimension { expected: dim, got: e.len() });
            }
        }
        Ok(Self { dim, components })
    }

    /// `X(p) = A p + b`.
    pub fn affine(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        let dim = b.len();
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: a.nrows(),
            });
        }
        let components = (0..dim)
            .map(|k| {
                let mut terms = vec![(b[k], vec![0; dim])];
                for m in 0..dim {
                    let mut e = vec![0; dim];
                    e[m] = 1;
                    terms.push((a[(k, m)], e));
                }
                terms
            })
            .collect();
        Self::new(dim, components)
    }

    /// Random polynomial field of total degree `<= degree`, coefficients in `[-1, 1]`.
    pub fn random(dim: usize, degree: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut exps: Vec<Vec<u32>> = vec![vec![0; dim]];
        for _ in 0..degree {
            let mut next = exps.clone();
            for e in &exps {
                for m in 0..dim {
                    let mut f = e.clone();
                    f[m] += 1;
                    if !next.contains(&f) {
                        next.push(f);
                    }
                }
            }
            exps = next;
        }
        let components = (0..dim)
            .map(|_| exps.iter().map(|e| (rng.gen_range(-1.0..1.0), e.clone())).collect())
            .collect();
        Self { dim, components }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.dim,
            self.components.iter().map(|terms| {
                terms
                    .iter()
                    .map(|(c, e)| c * e.iter().zip(p).map(|(&k, x)| x.powi(k as i32)).product::<f64>())
                    .sum()
            }),
        )
    }

    /// Exact Jacobian, `J[(k, m)] = d_m X^k`.
    pub fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (k, terms) in self.components.iter().enumerate() {
            for (c, e) in terms {
                for m in 0..self.dim {
                    if e[m] == 0 {
                        continue;
                    }
                    let mut v = c * e[m] as f64;
                    for (i, (&ki, x)) in e.iter().zip(p).enumerate() {
                        let pow = if i == m { ki - 1 } else { ki };
                        v *= x.powi(pow as i32);
                    }
                    out[(k, m)] += v;
                }
            }
        }
        out
    }
}

/// Order-4 centred difference weights at offsets `-2, -1, 1, 2`.
const FD4: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];

fn shifted(p: &[f64], k: usize, by: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[k] += by;
    q
}

/// `[U, V] = DV U - DU V`.
fn bracket(u: &DVector<f64>, du: &DMatrix<f64>, v: &DVector<f64>, dv: &DMatrix<f64>) -> DVector<f64> {
    dv * u - du * v
}

/// `N_J(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y]` at `point`, with the
/// derivatives of `J` taken by order-4 centred differences of width `step`.
pub fn nijenhuis(
    j: &dyn StructureField,
    x: &PolyVectorField,
    y: &PolyVectorField,
    point: &[f64],
    step: f64,
) -> Result<DVector<f64>> {
    let dim = j.dim();
    for got in [x.dim(), y.dim(), point.len()] {
        if got != dim {
            return Err(Error::Dimension { expected: dim, got });
        }
    }
    if j.singular_distance(point) <= 2.0 * step {
        return Err(Error::NearBoundary);
    }
    let j0 = j.j(point);
    let dj: Vec<DMatrix<f64>> = (0..dim)
        .map(|k| {
            FD4.iter()
                .map(|&(o, w)| j.j(&shifted(point, k, o * step)) * (w / step))
                .fold(DMatrix::zeros(dim, dim), |acc, m| acc + m)
        })
        .collect();

    let (xv, dx) = (x.eval(point), x.jacobian(point));
    let (yv, dy) = (y.eval(point), y.jacobian(point));
    let apply_j = |v: &DVector<f64>, dv: &DMatrix<f64>| {
        let jv = &j0 * v;
        let mut djv = &j0 * dv;
        for k in 0..dim {
            let col = &dj[k] * v;
            for r in 0..dim {
                djv[(r, k)] += col[r];
            }
        }
        (jv, djv)
    };
    let (jx, djx) = apply_j(&xv, &dx);
    let (jy, djy) = apply_j(&yv, &dy);

    let n = bracket(&jx, &djx, &jy, &djy)
        - &j0 * bracket(&jx, &djx, &yv, &dy)
        - &j0 * bracket(&xv, &dx, &jy, &djy)
        - bracket(&xv, &dx, &yv, &dy);
    Ok(n)
}

/// Which frame of the eigenbundle to bracket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FrameChoice {
    /// `Z_1 = d_{z^1} + a d_{zbar^1}`, `Z_j = d_{z^j}`.
    Canonical,
    /// `Y_i = sum_j G_ij(x) Z_j` with `G = I + amplitude * P(x)`, where the
    /// entries of `P` are `sin(frequency <c_ij, x> + phase_ij)` for seeded
    /// unit vectors `c_ij` and phases.
    Generic { amplitude: f64, frequency: f64, seed: u64 },
}

impl FrameChoice {
    pub fn generic_default() -> Self {
        FrameChoice::Generic {
            amplitude: 0.25,
            frequency: 8.0,
            seed: 7,
        }
    }
}

struct FrameModulation {
    directions: Vec<Vec<DVector<f64>>>,
    phases: Vec<Vec<f64>>,
    amplitude: f64,
    frequency: f64,
}

impl FrameModulation {
    fn new(n: usize, dim: usize, amplitude: f64, frequency: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut directions = Vec::with_capacity(n);
        let mut phases = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(n);
            let mut prow = Vec::with_capacity(n);
            for _ in 0..n {
                let v: DVector<f64> = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
                let norm = v.norm().max(1e-3);
                row.push(v / norm);
                prow.push(rng.gen_range(0.0..std::f64::consts::TAU));
            }
            directions.push(row);
            phases.push(prow);
        }
        Self {
            directions,
            phases,
            amplitude,
            frequency,
        }
    }

    fn g(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.directions.len();
        let x = DVector::from_column_slice(p);
        DMatrix::from_fn(n, n, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            base + self.amplitude * (self.frequency * self.directions[i][j].dot(&x) + self.phases[i][j]).sin()
        })
    }
}

fn frame_fields(lift: &LiftedStructureND, modulation: Option<&FrameModulation>, p: &[f64]) -> Vec<DVector<Complex64>> {
    let z = lift.frame(p);
    match modulation {
        None => z,
        Some(m) => {
            let g = m.g(p);
            (0..z.len())
                .map(|i| {
                    z.iter()
                        .enumerate()
                        .fold(DVector::from_element(p.len(), Complex64::new(0.0, 0.0)), |acc, (j, zj)| {
                            acc + zj * Complex64::new(g[(i, j)], 0.0)
                        })
                })
                .collect()
        }
    }
}

/// Largest coframe component of the brackets `[Y_i, Y_j]`, `i < j`, at one point.
pub fn bracket_defect(lift: &LiftedStructureND, point: &[f64], step: f64, frame: FrameChoice) -> f64 {
    let dim = 2 * lift.n;
    let modulation = match frame {
        FrameChoice::Canonical => None,
        FrameChoice::Generic {
            amplitude,
            frequency,
            seed,
        } => Some(FrameModulation::new(lift.n, dim, amplitude, frequency, seed)),
    };
    let y0 = frame_fields(lift, modulation.as_ref(), point);
    // dy[k][i] = d_k Y_i
    let dy: Vec<Vec<DVector<Complex64>>> = (0..dim)
        .map(|k| {
            let mut acc = vec![DVector::from_element(dim, Complex64::new(0.0, 0.0)); lift.n];
            for &(o, w) in &FD4 {
                let ys = frame_fields(lift, modulation.as_ref(), &shifted(point, k, o * step));
                for (a, y) in acc.iter_mut().zip(ys) {
                    *a += y * Complex64::new(w / step, 0.0);
                }
            }
            acc
        })
        .collect();
    let coframe = lift.coframe(point);
    let mut worst = 0.0f64;
    for i in 0..lift.n {
        for j in (i + 1)..lift.n {
            // [Y_i, Y_j]^r = sum_k Y_i^k d_k Y_j^r - Y_j^k d_k Y_i^r
            let mut b = DVector::from_element(dim, Complex64::new(0.0, 0.0));
            for k in 0..dim {
                b += &dy[k][j] * y0[i][k] - &dy[k][i] * y0[j][k];
            }
            for c in &coframe {
                worst = worst.max(c.dot(&b).norm());
            }
        }
    }
    worst
}

/// Max bracket defect over the points.
pub fn involutivity_check(lift: &LiftedStructureND, points: &[Vec<f64>], step: f64, frame: FrameChoice) -> f64 {
    points
        .iter()
        .map(|p| bracket_defect(lift, p, step, frame))
        .fold(0.0, f64::max)
}

/// Uniform random points in the polydisc of the given radius in `C^n`.
pub fn polydisc_points(n: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut p = Vec::with_capacity(2 * n);
            for _ in 0..n {
                let r = radius * rng.gen::<f64>().sqrt();
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                p.push(r * t.cos());
                p.push(r * t.sin());
            }
            p
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectRow {
    pub point: Vec<f64>,
    pub step: f64,
    pub defect: f64,
}

/// CSV with columns `point, step, defect`; the point is `;`-separated.
pub fn write_defect_csv<W: Write>(rows: &[DefectRow], mut out: W) -> Result<()> {
    writeln!(out, "point,step,defect")?;
    for r in rows {
        let p: Vec<String> = r.point.iter().map(|x| format!("{x}")).collect();
        writeln!(out, "{},{:e},{:e}", p.join(";"), r.step, r.defect)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    #[test]
    fn standard_structure() {
        let j = j_from_a(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(j, Matrix2::new(0.0, -1.0, 1.0, 0.0));
    }

    #[test]
    fn degenerate_coefficient() {
        assert!(matches!(j_from_a(Complex64::new(1.0, 0.0)), Err(Error::Degenerate(_))));
        assert!(j_from_a(Complex64::from_polar(1.0 + 1e-13, 0.4)).is_err());
    }

    #[test]
    fn real_coefficient_eigen_residual() {
        let a = Complex64::new(0.1, 0.0);
        let j = j_from_a(a).unwrap();
        let sq = j * j + Matrix2::identity();
        assert!(sq.norm() < 1e-12);
        let [vx, vy] = eigenvector(a);
        let jv0 = j[(0, 0)] * vx + j[(0, 1)] * vy - I * vx;
        let jv1 = j[(1, 0)] * vx + j[(1, 1)] * vy - I * vy;
        assert!(jv0.norm() < 1e-12 && jv1.norm() < 1e-12);
    }

    #[test]
    fn matches_diagonalisation() {
        for a in [Complex64::new(0.3, -0.2), Complex64::new(-0.05, 0.6), Complex64::new(1.7, 0.2)] {
            let [vx, vy] = eigenvector(a);
            let m = nalgebra::Matrix2::new(vx, vx.conj(), vy, vy.conj());
            let d = nalgebra::Matrix2::new(I, Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), -I);
            let dual = m * d * m.try_inverse().unwrap();
            let j = j_from_a(a).unwrap();
            for r in 0..2 {
                for c in 0..2 {
                    assert!((dual[(r, c)] - j[(r, c)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn standard_structure_has_no_torsion() {
        let s = AlmostComplexStructure2D::standard();
        let x = PolyVectorField::random(2, 2, 1);
        let y = PolyVectorField::random(2, 3, 2);
        let n = nijenhuis(&s, &x, &y, &[0.2, -0.4], 1e-3).unwrap();
        assert!(n.norm() < 1e-10);
    }

    #[test]
    fn nijenhuis_guards_singular_point_and_dimension() {
        let co = CounterexampleCoefficient::new(1).unwrap();
        let s = AlmostComplexStructure2D::from_coefficient(&co);
        let x = PolyVectorField::random(2, 1, 1);
        assert!(matches!(nijenhuis(&s, &x, &x, &[1e-3, 0.0], 1e-3), Err(Error::NearBoundary)));
        let x4 = PolyVectorField::random(4, 1, 1);
        assert!(matches!(nijenhuis(&s, &x4, &x, &[0.3, 0.1], 1e-3), Err(Error::Dimension { .. })));
    }

    #[test]
    fn polynomial_jacobian() {
        // X = (x^2 y, 3 y^3 - x)
        let x = PolyVectorField::new(2, vec![vec![(1.0, vec![2, 1])], vec![(3.0, vec![0, 3]), (-1.0, vec![1, 0])]]).unwrap();
        let p = [0.5, -2.0];
        let j = x.jacobian(&p);
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[2.0 * 0.5 * -2.0, 0.25, -1.0, 9.0 * 4.0]));
        assert_eq!(x.eval(&p), DVector::from_vec(vec![-0.5, -24.5]));
    }

    #[test]
    fn coframe_annihilates_frame() {
        let co = CounterexampleCoefficient::new(2).unwrap();
        let s = AlmostComplexStructure2D::from_coefficient(&co);
        let lift = lift(&s, 3).unwrap();
        let p = [0.1, 0.2, -0.3, 0.0, 0.2, 0.2];
        for c in lift.coframe(&p) {
            for v in lift.frame(&p) {
                assert_eq!(c.dot(&v), Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn lifted_j_squares_to_minus_identity() {
        let co = CounterexampleCoefficient::new(1).unwrap();
        let lift = lift(&AlmostComplexStructure2D::from_coefficient(&co), 2).unwrap();
        let j = lift.j(&[0.2, 0.1, 0.3, -0.3]);
        let sq = &j * &j + DMatrix::identity(4, 4);
        assert!(sq.norm() < 1e-14);
    }

    #[test]
    fn single_field_and_flat_cases() {
        let co = CounterexampleCoefficient::new(1).unwrap();
        let one = lift(&AlmostComplexStructure2D::from_coefficient(&co), 1).unwrap();
        let pts = polydisc_points(1, 10, 0.4, 3);
        assert_eq!(involutivity_check(&one, &pts, 1e-3, FrameChoice::generic_default()), 0.0);
        let flat = lift(&AlmostComplexStructure2D::standard(), 2).unwrap();
        let pts = polydisc_points(2, 10, 0.4, 3);
        assert!(involutivity_check(&flat, &pts, 1e-3, FrameChoice::Canonical) < 1e-12);
        assert!(lift(&AlmostComplexStructure2D::standard(), 4).is_err());
    }

    #[test]
    fn defect_csv() {
        let rows = vec![DefectRow {
            point: vec![0.1, 0.2],
            step: 1e-3,
            defect: 2e-9,
        }];
        let mut buf = Vec::new();
        write_defect_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "point,step,defect\n0.1;0.2,1e-3,2e-9\n");
    }
}
