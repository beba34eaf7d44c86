//! Dense complex linear algebra for the small dimensions used throughout the
//! crate (qubit, qubit+ancilla, and general-engine codes up to [`MAX_DIM`]).
//!
//! Matrices are stored row-major as `Vec<C64>`. Every operation is a pure
//! function returning a fresh value.

use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 16;

/// Tolerance on `‖h − h†‖_max` accepted by [`hermitian_eig`], relative to
/// `max(1, ‖h‖_max)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues below this are reported as a PSD violation by [`sqrtm_psd`].
pub const PSD_TOL: f64 = 1e-8;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {dim}x{dim} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from nested rows; panics on ragged input, so only use
    /// it for literals.
    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { dim: N, data }
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self { dim: N, data }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// `|u⟩⟨v|`
    pub fn outer(u: &CVector, v: &CVector) -> Self {
        let dim = u.dim();
        assert_eq!(
            dim,
            v.dim(),
            "outer product of vectors with different dimensions"
        );
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn projector(v: &CVector) -> Self {
        Self::outer(v, v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `u · self · u†`
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.dagger())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &self.matmul(other) + &other.matmul(self)
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(self.dim, v.dim(), "matrix-vector dimension mismatch");
        let n = self.dim;
        let data = (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect();
        CVector { data }
    }

    /// `⟨v|self|v⟩`
    pub fn expectation(&self, v: &CVector) -> C64 {
        v.inner(&self.apply(v))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(
            self.dim, other.dim,
            "comparison of matrices with different dimensions"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn one_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖self − self†‖_max`
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `(self + self†) / 2`
    pub fn hermitian_part(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CVector {
    data: Vec<C64>,
}

impl std::ops::Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl CVector {
    pub fn new(data: Vec<C64>) -> Self {
        Self { data }
    }

    pub fn from_real(data: &[f64]) -> Self {
        Self {
            data: data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut data = vec![ZERO; dim];
        data[index] = ONE;
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(C64::new(1.0 / n, 0.0))
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .flat_map(|&a| other.data.iter().map(move |&b| a * b))
            .collect();
        Self { data }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// A validated density matrix: Hermitian, unit trace and positive
/// semidefinite within the tolerances below.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-8;
    pub const TRACE_TOL: f64 = 1e-6;
    pub const POSITIVITY_TOL: f64 = 1e-7;

    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let deviation = m.hermiticity_deviation();
        if deviation > Self::HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = m.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::Domain(format!(
                "density matrix trace {:.9} is not 1",
                tr.re
            )));
        }
        let m = m.hermitian_part();
        let eig = hermitian_eig(&m)?;
        let min = eig.values[0];
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix the caller already knows to be a state (e.g. the output
    /// of a trace-preserving map); only the Hermitian part is kept.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self(m.hermitian_part())
    }

    pub fn pure(psi: &CVector) -> Self {
        Self(CMatrix::projector(&psi.normalized()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.0).map(|e| e.values).unwrap_or_default()
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0).re
    }
}

impl Deref for DensityMatrix {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_rows([[ZERO, ONE], [ONE, ZERO]])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows([[ZERO, -I], [I, ZERO]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_rows([[ONE, ZERO], [ZERO, -ONE]])
}

/// `(|00⟩ + |11⟩)/√2`
pub fn bell_state() -> CVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_real(&[h, 0.0, 0.0, h])
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let (n, m) = (a.dim(), b.dim());
    let dim = n * m;
    if dim > MAX_DIM {
        return Err(Error::Dimension(format!(
            "kron of {n}x{n} and {m}x{m} exceeds the maximum dimension {MAX_DIM}"
        )));
    }
    let mut out = CMatrix::zeros(dim);
    for i in 0..n {
        for j in 0..n {
            let aij = a[(i, j)];
            for k in 0..m {
                for l in 0..m {
                    out[(i * m + k, j * m + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// `a ⊗ I₂`, the probe-only embedding used by every two-spin model.
pub fn on_probe(a: &CMatrix) -> CMatrix {
    kron(a, &CMatrix::identity(2)).expect("2x2 probe operator")
}

#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn vector(&self, i: usize) -> CVector {
        let n = self.vectors.dim();
        CVector::new((0..n).map(|r| self.vectors[(r, i)]).collect())
    }

    /// `V f(Λ) V†`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.vectors.dim();
        let mut out = CMatrix::zeros(n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
pub fn hermitian_eig(h: &CMatrix) -> Result<Eigen> {
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let deviation = h.hermiticity_deviation();
    if deviation > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let n = h.dim();
    let mut a = h.hermitian_part();
    let mut v = CMatrix::identity(n);

    let total = a.frobenius_norm();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-17 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane.
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;

                // a ← a·J
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * jpp + arq * jqp;
                    a[(r, q)] = arp * jpq + arq * jqq;
                }
                // a ← J†·a
                for col in 0..n {
                    let apc = a[(p, col)];
                    let aqc = a[(q, col)];
                    a[(p, col)] = jpp.conj() * apc + jqp.conj() * aqc;
                    a[(q, col)] = jpq.conj() * apc + jqq.conj() * aqc;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                // v ← v·J
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * jpp + vrq * jqp;
                    v[(r, q)] = vrp * jpq + vrq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, new)] = v[(r, old)];
        }
    }
    Ok(Eigen { values, vectors })
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.dim();
    let norm = a.one_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(squarings));

    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=40 {
        term = term.matmul(&scaled).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.max_abs() < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    Ok(sum)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero.
pub fn sqrtm_psd(rho: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(rho)?;
    let min = eig.values[0];
    if min < -PSD_TOL {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let floor = 1e-14 * eig.values.last().copied().unwrap_or(0.0).max(0.0);
    Ok(eig.reconstruct_with(|l| if l > floor { l.sqrt() } else { 0.0 }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Reduces a two-qubit operator to the `keep` qubit.
pub fn partial_trace(rho: &CMatrix, keep: Subsystem) -> Result<CMatrix> {
    if rho.dim() != 4 {
        return Err(Error::Dimension(format!(
            "partial trace expects a 4x4 matrix, got {0}x{0}",
            rho.dim()
        )));
    }
    let mut out = CMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = (0..2)
                .map(|k| match keep {
                    Subsystem::First => rho[(2 * i + k, 2 * j + k)],
                    Subsystem::Second => rho[(2 * k + i, 2 * k + j)],
                })
                .sum();
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PolarIsometry {
    /// Partial isometry supported on the code space: `m = scale · u · Π_C`.
    pub isometry: CMatrix,
    pub scale: f64,
    /// `m` vanished on the code space; `isometry` is zero.
    pub degenerate: bool,
}

/// Polar decomposition of an operator whose Gram matrix on the code space is
/// isotropic, `m†m = scale² Π_C`.
pub fn polar_isometry(m: &CMatrix, code_projector: &CMatrix, tol: f64) -> Result<PolarIsometry> {
    if m.dim() != code_projector.dim() {
        return Err(Error::Dimension(
            "operator and code projector differ in dimension".into(),
        ));
    }
    let gram = m.dagger().matmul(m);
    let code_dim = code_projector.trace().re;
    let scale_sq = (gram.trace().re / code_dim).max(0.0);
    let residual = gram.max_abs_diff(&code_projector.scale_real(scale_sq));
    if residual > tol {
        return Err(Error::NonIsotropic { residual });
    }
    let scale = scale_sq.sqrt();
    if scale <= 1e-12 {
        return Ok(PolarIsometry {
            isometry: CMatrix::zeros(m.dim()),
            scale,
            degenerate: true,
        });
    }
    let isometry = m.matmul(code_projector).scale_real(1.0 / scale);
    Ok(PolarIsometry {
        isometry,
        scale,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn sigma_n(theta: f64) -> CMatrix {
        &pauli_x().scale_real(theta.cos()) + &pauli_z().scale_real(theta.sin())
    }

    #[test]
    fn kron_identity() {
        let k = kron(&CMatrix::identity(2), &CMatrix::identity(2)).unwrap();
        assert_eq!(k, CMatrix::identity(4));
    }

    #[test]
    fn kron_bit_flip_on_first_qubit() {
        let x1 = kron(&pauli_x(), &CMatrix::identity(2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let out = x1.apply(&bell_state());
        assert!(out.max_abs_diff(&CVector::from_real(&[0.0, h, h, 0.0])) < 1e-15);
    }

    #[test]
    fn kron_zz_spectrum() {
        let zz = kron(&pauli_z(), &pauli_z()).unwrap();
        let e = hermitian_eig(&zz).unwrap();
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in e.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn kron_rejects_large_dimensions() {
        let a = CMatrix::identity(4);
        let b = CMatrix::identity(8);
        assert!(matches!(kron(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn eig_of_sigma_z() {
        let e = hermitian_eig(&pauli_z()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        assert!((e.vector(0)[1].norm() - 1.0).abs() < 1e-15);
        assert!((e.vector(1)[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_of_pauli_vector() {
        let e = hermitian_eig(&sigma_n(FRAC_PI_4)).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMatrix::from_real_rows([[0.0, 1.0], [0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_residuals_on_complex_matrix() {
        let h = CMatrix::from_rows([
            [C64::new(1.0, 0.0), C64::new(0.3, -0.7), C64::new(0.0, 0.2)],
            [C64::new(0.3, 0.7), C64::new(-0.5, 0.0), C64::new(1.1, 0.4)],
            [C64::new(0.0, -0.2), C64::new(1.1, -0.4), C64::new(2.0, 0.0)],
        ]);
        let e = hermitian_eig(&h).unwrap();
        for i in 0..3 {
            let v = e.vector(i);
            let hv = h.apply(&v);
            assert!(hv.max_abs_diff(&v.scale(C64::new(e.values[i], 0.0))) < 1e-12);
            for j in 0..3 {
                let ip = v.inner(&e.vector(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        assert!(
            expm(&CMatrix::zeros(4))
                .unwrap()
                .max_abs_diff(&CMatrix::identity(4))
                < 1e-15
        );
    }

    #[test]
    fn expm_pauli_quarter_turn() {
        let a = pauli_x().scale(C64::new(0.0, -FRAC_PI_2));
        let expected = pauli_x().scale(-I);
        assert!(expm(&a).unwrap().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn expm_matches_unscaled_taylor_series() {
        // Oracle: plain Taylor summation with no scaling, 60 terms.
        let a = sigma_n(0.0).scale(C64::new(0.0, -1.0));
        let mut sum = CMatrix::identity(2);
        let mut term = CMatrix::identity(2);
        for k in 1..60 {
            term = term.matmul(&a).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        let expected =
            &CMatrix::identity(2).scale_real(1f64.cos()) - &pauli_x().scale(I * 1f64.sin());
        assert!(sum.max_abs_diff(&expected) < 1e-14);
        assert!(expm(&a).unwrap().max_abs_diff(&sum) < 1e-12);
    }

    #[test]
    fn sqrtm_examples() {
        let half = CMatrix::identity(2).scale_real(0.5);
        let r = sqrtm_psd(&half).unwrap();
        assert!(r.max_abs_diff(&CMatrix::identity(2).scale_real(0.5f64.sqrt())) < 1e-14);

        let p0 = CMatrix::projector(&CVector::basis(2, 0));
        assert!(sqrtm_psd(&p0).unwrap().max_abs_diff(&p0) < 1e-14);

        let d = CMatrix::from_real_rows([[0.25, 0.0], [0.0, 0.75]]);
        let expected = CMatrix::from_real_rows([[0.5, 0.0], [0.0, 0.75f64.sqrt()]]);
        assert!(sqrtm_psd(&d).unwrap().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn sqrtm_rejects_negative_spectrum() {
        let m = CMatrix::from_real_rows([[1.0, 0.0], [0.0, -1e-3]]);
        assert!(matches!(sqrtm_psd(&m), Err(Error::NotPsd { .. })));
        // Tiny negative tails are clamped.
        let m = CMatrix::from_real_rows([[1.0, 0.0], [0.0, -1e-11]]);
        assert!(sqrtm_psd(&m).is_ok());
    }

    #[test]
    fn partial_trace_examples() {
        let p00 = CMatrix::projector(&CVector::basis(4, 0));
        let p0 = CMatrix::projector(&CVector::basis(2, 0));
        assert!(
            partial_trace(&p00, Subsystem::First)
                .unwrap()
                .max_abs_diff(&p0)
                < 1e-15
        );

        let bell = CMatrix::projector(&bell_state());
        let half = CMatrix::identity(2).scale_real(0.5);
        assert!(
            partial_trace(&bell, Subsystem::First)
                .unwrap()
                .max_abs_diff(&half)
                < 1e-15
        );

        let rho = CMatrix::from_real_rows([[0.7, 0.1], [0.1, 0.3]]);
        let sigma = CMatrix::from_rows([
            [C64::new(0.4, 0.0), C64::new(0.1, 0.2)],
            [C64::new(0.1, -0.2), C64::new(0.6, 0.0)],
        ]);
        let prod = kron(&rho, &sigma).unwrap();
        assert!(
            partial_trace(&prod, Subsystem::Second)
                .unwrap()
                .max_abs_diff(&sigma)
                < 1e-15
        );
        assert!(
            partial_trace(&prod, Subsystem::First)
                .unwrap()
                .max_abs_diff(&rho)
                < 1e-15
        );
    }

    #[test]
    fn partial_trace_requires_two_qubits() {
        assert!(partial_trace(&CMatrix::identity(2), Subsystem::First).is_err());
    }

    #[test]
    fn polar_single_direction() {
        let code = CMatrix::projector(&CVector::basis(2, 0));
        let m = pauli_x().matmul(&code);
        let p = polar_isometry(&m, &code, 1e-12).unwrap();
        assert!((p.scale - 1.0).abs() < 1e-15);
        assert!(
            p.isometry
                .apply(&CVector::basis(2, 0))
                .max_abs_diff(&CVector::basis(2, 1))
                < 1e-15
        );
    }

    #[test]
    fn polar_zero_operator_is_degenerate() {
        let code = CMatrix::projector(&CVector::basis(2, 0));
        let p = polar_isometry(&CMatrix::zeros(2), &code, 1e-12).unwrap();
        assert_eq!(p.scale, 0.0);
        assert!(p.degenerate);
    }

    #[test]
    fn polar_rejects_anisotropic_operator() {
        let code = CMatrix::identity(2);
        let m = CMatrix::from_real_rows([[1.0, 0.0], [0.0, 0.5]]);
        assert!(matches!(
            polar_isometry(&m, &code, 1e-8),
            Err(Error::NonIsotropic { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(CMatrix::identity(2)).is_err());
        assert!(DensityMatrix::new(CMatrix::from_real_rows([[1.5, 0.0], [0.0, -0.5]])).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(2).scale_real(0.5)).is_ok());
        let p = DensityMatrix::pure(&bell_state());
        assert!((p.purity() - 1.0).abs() < 1e-14);
    }
}
