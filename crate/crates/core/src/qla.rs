//! Dense complex linear algebra for the small fixed dimensions (2, 3 and 4)
//! that appear in one- and two-qubit problems, plus the state functionals
//! built on top of it.
//!
//! Matrices are stored inline (no heap allocation) so they are `Copy` and
//! cheap to pass around in tight Monte Carlo loops.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_DIM: usize = 4;

/// Tolerance on the Hermiticity residual of a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|tr ρ - 1|` for a density matrix.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted in a density matrix.
pub const MIN_EIGENVALUE: f64 = -1e-10;
/// Unitarity residual accepted for a [`UnitaryMatrix`].
pub const UNITARY_TOL: f64 = 1e-12;

/// Hermiticity tolerance accepted by the eigensolver.
const EIG_HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues of a PSD input below this are treated as a hard error.
const PSD_REJECT: f64 = -1e-8;
/// Off-diagonal Frobenius mass at which the Jacobi sweep stops.
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

pub(crate) const C0: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const C1: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const CI: Complex64 = Complex64::new(0.0, 1.0);

/// A complex matrix with at most 4 rows and 4 columns, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: [Complex64; MAX_DIM * MAX_DIM],
}

impl ComplexMatrix {
    fn check_shape(rows: usize, cols: usize) -> Result<()> {
        if !(2..=MAX_DIM).contains(&rows) || !(2..=MAX_DIM).contains(&cols) {
            return Err(Error::invalid(format!(
                "matrix shape {rows}x{cols} outside the supported 2..=4 range"
            )));
        }
        Ok(())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::check_shape(rows, cols)?;
        Ok(Self::zeros_unchecked(rows, cols))
    }

    pub(crate) fn zeros_unchecked(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: [C0; MAX_DIM * MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim, dim)?;
        for i in 0..dim {
            m[(i, i)] = C1;
        }
        Ok(m)
    }

    pub(crate) fn identity_unchecked(dim: usize) -> Self {
        let mut m = Self::zeros_unchecked(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C1;
        }
        m
    }

    /// Build from row-major entries. Non-finite entries are rejected.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        Self::check_shape(rows, cols)?;
        if entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        let mut m = Self::zeros_unchecked(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = entries[r * cols + c];
            }
        }
        Ok(m)
    }

    /// Build a square matrix from rows of entries.
    pub fn from_rows<const N: usize>(rows: [[Complex64; N]; N]) -> Result<Self> {
        let flat: Vec<Complex64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(N, N, &flat)
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self> {
        let flat: Vec<Complex64> = rows
            .iter()
            .flatten()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        Self::from_row_major(N, N, &flat)
    }

    pub fn diag(values: &[Complex64]) -> Result<Self> {
        let mut m = Self::zeros(values.len(), values.len())?;
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        Ok(m)
    }

    pub fn real_diag(values: &[f64]) -> Result<Self> {
        let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    /// `|v⟩⟨v|` for a column vector `v`.
    pub fn outer(v: &[Complex64]) -> Result<Self> {
        let n = v.len();
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn iter(&self) -> impl Iterator<Item = &Complex64> + '_ {
        (0..self.rows).flat_map(move |r| self.data[r * MAX_DIM..r * MAX_DIM + self.cols].iter())
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros_unchecked(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros_unchecked(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)];
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let mut m = *self;
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] *= k;
            }
        }
        m
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(Complex64::new(k, 0.0))
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut m = Self::zeros_unchecked(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == C0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    m.data[r * MAX_DIM + c] += a * rhs.data[k * MAX_DIM + c];
                }
            }
        }
        m
    }

    /// `self · x · self†`.
    pub fn conjugate(&self, x: &Self) -> Self {
        self.matmul(x).matmul(&self.adjoint())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut worst = 0.0_f64;
        for r in 0..self.rows {
            for c in 0..self.cols {
                worst = worst.max((self[(r, c)] - other[(r, c)]).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `max |m_ij - conj(m_ji)|`; infinite for non-square input.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `(m + m†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        let mut m = *self;
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = (self[(r, c)] + adj[(r, c)]) * 0.5;
            }
        }
        m
    }

    /// `max |m m† - I|`; infinite for non-square input.
    pub fn unitary_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.matmul(&self.adjoint())
            .max_abs_diff(&Self::identity_unchecked(self.rows))
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * MAX_DIM + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * MAX_DIM + c]
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> Self {
        self.matmul(&rhs)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(mut self, rhs: Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for r in 0..self.rows {
            for c in 0..self.cols {
                self[(r, c)] += rhs[(r, c)];
            }
        }
        self
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(mut self, rhs: Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for r in 0..self.rows {
            for c in 0..self.cols {
                self[(r, c)] -= rhs[(r, c)];
            }
        }
        self
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, " ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Pauli matrices and the 2×2 identity.
pub mod pauli {
    use super::*;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity_unchecked(2)
    }

    pub fn x() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros_unchecked(2, 2);
        m[(0, 1)] = C1;
        m[(1, 0)] = C1;
        m
    }

    pub fn y() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros_unchecked(2, 2);
        m[(0, 1)] = -CI;
        m[(1, 0)] = CI;
        m
    }

    pub fn z() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros_unchecked(2, 2);
        m[(0, 0)] = C1;
        m[(1, 1)] = -C1;
        m
    }

    /// `[σ_x, σ_y, σ_z]`.
    pub fn xyz() -> [ComplexMatrix; 3] {
        [x(), y(), z()]
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::invalid(format!(
            "kron result {rows}x{cols} exceeds the 4x4 limit"
        )));
    }
    let mut m = ComplexMatrix::zeros_unchecked(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            for k in 0..b.rows {
                for l in 0..b.cols {
                    m[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(m)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Copy, Debug)]
pub struct HermitianEigen {
    dim: usize,
    values: [f64; MAX_DIM],
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Eigenvalues in descending order.
    pub fn values(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.dim - 1]
    }

    /// `V · diag(f(λ)) · V†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim;
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros_unchecked(n, n);
        for k in 0..n {
            let w = f(self.values[k]);
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = v[(r, k)] * w;
                for c in 0..n {
                    out[(r, c)] += vr * v[(c, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix.
///
/// 2×2 inputs use the closed form; 3×3 and 4×4 use cyclic complex Jacobi
/// rotations until the off-diagonal Frobenius mass drops below `1e-14`
/// (relative to the matrix scale when that exceeds one).
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::invalid("eigendecomposition needs a square matrix"));
    }
    if !m.is_finite() {
        return Err(Error::invalid("matrix entries must be finite"));
    }
    let res = m.hermitian_residual();
    if res > EIG_HERMITIAN_TOL {
        return Err(Error::invalid(format!(
            "matrix is not Hermitian (residual {res:e})"
        )));
    }
    let h = m.hermitian_part();
    Ok(match m.rows {
        2 => eig2(&h),
        _ => jacobi_eig(&h),
    })
}

fn eig2(m: &ComplexMatrix) -> HermitianEigen {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let hi = mean + half_gap;
    let lo = mean - half_gap;

    let mut vectors = ComplexMatrix::zeros_unchecked(2, 2);
    if b.norm() <= f64::EPSILON * (a.abs() + d.abs()).max(f64::MIN_POSITIVE) {
        // Already diagonal (up to rounding).
        if a >= d {
            vectors[(0, 0)] = C1;
            vectors[(1, 1)] = C1;
        } else {
            vectors[(1, 0)] = C1;
            vectors[(0, 1)] = C1;
        }
        let (hi, lo) = if a >= d { (a, d) } else { (d, a) };
        return HermitianEigen {
            dim: 2,
            values: [hi, lo, 0.0, 0.0],
            vectors,
        };
    }
    for (k, lambda) in [hi, lo].into_iter().enumerate() {
        // Two candidate null vectors of (m - λ); take the better conditioned one.
        let u = [b, Complex64::new(lambda - a, 0.0)];
        let w = [Complex64::new(lambda - d, 0.0), b.conj()];
        let nu = u[0].norm_sqr() + u[1].norm_sqr();
        let nw = w[0].norm_sqr() + w[1].norm_sqr();
        let (v, n) = if nu >= nw { (u, nu) } else { (w, nw) };
        let n = n.sqrt();
        vectors[(0, k)] = v[0] / n;
        vectors[(1, k)] = v[1] / n;
    }
    HermitianEigen {
        dim: 2,
        values: [hi, lo, 0.0, 0.0],
        vectors,
    }
}

fn off_diagonal_mass(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[(p, q)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi_eig(m: &ComplexMatrix) -> HermitianEigen {
    let n = m.rows;
    let mut a = *m;
    let mut v = ComplexMatrix::identity_unchecked(n);
    let scale = m.frobenius_norm_sqr().sqrt().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_mass(&a) <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag < f64::MIN_POSITIVE {
                    continue;
                }
                // The phase e^{-iφ} on column q makes the (p,q) block real
                // symmetric; a real Jacobi rotation then annihilates it.
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = D·R with D = diag(1, conj(phase)) on (p, q).
                let j_pp = Complex64::new(c, 0.0);
                let j_pq = Complex64::new(s, 0.0);
                let j_qp = phase.conj() * (-s);
                let j_qq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * j_pp + akq * j_qp;
                    a[(k, q)] = akp * j_pq + akq * j_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
                    a[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
                }
                a[(p, q)] = C0;
                a[(q, p)] = C0;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * j_pp + vkq * j_qp;
                    v[(k, q)] = vkp * j_pq + vkq * j_qq;
                }
            }
        }
    }

    let mut order: [usize; MAX_DIM] = [0, 1, 2, 3];
    order[..n].sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let mut values = [0.0; MAX_DIM];
    let mut vectors = ComplexMatrix::zeros_unchecked(n, n);
    for (k, &src) in order[..n].iter().enumerate() {
        values[k] = a[(src, src)].re;
        for r in 0..n {
            vectors[(r, k)] = v[(r, src)];
        }
    }
    HermitianEigen {
        dim: n,
        values,
        vectors,
    }
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::invalid("trace norm needs a square matrix"));
    }
    if m.hermitian_residual() <= EIG_HERMITIAN_TOL {
        return Ok(hermitian_eig(m)?.values().iter().map(|l| l.abs()).sum());
    }
    let gram = m.adjoint().matmul(m);
    Ok(hermitian_eig(&gram)?
        .values()
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum())
}

/// Square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues in `[-1e-8, 0)` are clamped to zero; anything more negative
/// is rejected.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    if eig.min() < PSD_REJECT {
        return Err(Error::invalid(format!(
            "matrix is not positive semidefinite (eigenvalue {:e})",
            eig.min()
        )));
    }
    Ok(eig.map_values(|l| l.max(0.0).sqrt()))
}

/// Which tensor factor of a two-qubit state. The global basis index is
/// `2·control + auxiliary`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    Control,
    Auxiliary,
}

/// A validated density matrix of one or two qubits.
#[derive(Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validate `mat` against all density-matrix invariants.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() || !(mat.rows == 2 || mat.rows == 4) {
            return Err(Error::invalid(format!(
                "density matrices are 2x2 or 4x4, got {}x{}",
                mat.rows, mat.cols
            )));
        }
        if !mat.is_finite() {
            return Err(Error::invalid("density matrix entries must be finite"));
        }
        let herm = mat.hermitian_residual();
        if herm > HERMITIAN_TOL {
            return Err(Error::invalid(format!(
                "density matrix is not Hermitian (residual {herm:e})"
            )));
        }
        let tr = mat.trace();
        if (tr - C1).norm() > TRACE_TOL {
            return Err(Error::invalid(format!(
                "density matrix trace {} differs from one",
                tr.re
            )));
        }
        let min = hermitian_eig(&mat)?.min();
        if min < MIN_EIGENVALUE {
            return Err(Error::invalid(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(Self { mat })
    }

    /// Hermitize and renormalize a computed matrix, then validate it.
    /// For matrices produced by products of valid states and unitaries,
    /// where rounding pushes the residuals slightly off.
    pub fn from_computed(mat: ComplexMatrix) -> Result<Self> {
        let h = mat.hermitian_part();
        let tr = h.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::invalid(format!("state has non-positive trace {tr}")));
        }
        Self::new(h.scale_real(1.0 / tr))
    }

    /// Skip validation; callers guarantee the invariants by construction.
    pub(crate) fn trusted(mat: ComplexMatrix) -> Self {
        debug_assert!(mat.hermitian_residual() <= 1e-9);
        Self { mat }
    }

    /// Pure state `|ψ⟩⟨ψ|`; `psi` is normalized here.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("state vector must be non-zero and finite"));
        }
        let v: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Self::from_computed(ComplexMatrix::outer(&v)?)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::invalid("dimension must be 2 or 4"));
        }
        Ok(Self {
            mat: ComplexMatrix::identity_unchecked(dim).scale_real(1.0 / dim as f64),
        })
    }

    /// `ρ_a ⊗ ρ_b` for two single-qubit states.
    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        if a.dim() != 2 || b.dim() != 2 {
            return Err(Error::invalid("product states combine two qubit states"));
        }
        Ok(Self::trusted(kron(&a.mat, &b.mat)?))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn eigen(&self) -> HermitianEigen {
        // Valid density matrices are Hermitian, so this cannot fail.
        hermitian_eig(&self.mat).expect("density matrix is Hermitian")
    }

    /// Conjugate by a unitary of matching dimension.
    pub fn evolve(&self, u: &UnitaryMatrix) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(Error::invalid("unitary and state dimensions differ"));
        }
        Self::from_computed(u.matrix().conjugate(&self.mat))
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix({:?})", self.mat)
    }
}

/// A validated unitary matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct UnitaryMatrix {
    mat: ComplexMatrix,
}

impl UnitaryMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_finite() {
            return Err(Error::invalid("unitary entries must be finite"));
        }
        let res = mat.unitary_residual();
        if res > UNITARY_TOL {
            return Err(Error::invalid(format!(
                "matrix is not unitary (residual {res:e})"
            )));
        }
        Ok(Self { mat })
    }

    pub(crate) fn trusted(mat: ComplexMatrix) -> Self {
        debug_assert!(mat.unitary_residual() <= 1e-9);
        Self { mat }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(Self {
            mat: ComplexMatrix::identity(dim)?,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn compose(&self, other: &UnitaryMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::invalid("unitary dimensions differ"));
        }
        Ok(Self {
            mat: self.mat.matmul(&other.mat),
        })
    }
}

impl fmt::Debug for UnitaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnitaryMatrix({:?})", self.mat)
    }
}

fn require_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::invalid("operation needs a two-qubit (4x4) state"));
    }
    Ok(())
}

pub(crate) fn partial_trace_raw(m: &ComplexMatrix, keep: Subsystem) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros_unchecked(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = match keep {
                Subsystem::Control => m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)],
                Subsystem::Auxiliary => m[(i, j)] + m[(2 + i, 2 + j)],
            };
        }
    }
    out
}

/// Reduced state of the kept qubit.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    require_two_qubit(rho)?;
    DensityMatrix::from_computed(partial_trace_raw(&rho.mat, keep))
}

/// Transpose on one tensor factor. The result is Hermitian with unit trace
/// but need not be positive.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: Subsystem) -> Result<ComplexMatrix> {
    require_two_qubit(rho)?;
    let m = &rho.mat;
    let mut out = ComplexMatrix::zeros_unchecked(4, 4);
    for c in 0..2 {
        for a in 0..2 {
            for c2 in 0..2 {
                for a2 in 0..2 {
                    let (src_r, src_c) = match subsystem {
                        Subsystem::Control => (2 * c2 + a, 2 * c + a2),
                        Subsystem::Auxiliary => (2 * c + a2, 2 * c2 + a),
                    };
                    out[(2 * c + a, 2 * c2 + a2)] = m[(src_r, src_c)];
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn purity_raw(m: &ComplexMatrix) -> f64 {
    m.frobenius_norm_sqr()
}

/// `tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    purity_raw(&rho.mat)
}

/// Eigenvalues of a density matrix below this count as zero when bounding
/// the rank of `√ρ1 ρ2 √ρ1`.
const RANK_TOL: f64 = 1e-12;

/// Uhlmann fidelity `(tr √(√ρ1 ρ2 √ρ1))²`.
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::invalid("fidelity needs states of equal dimension"));
    }
    let e1 = rho1.eigen();
    let e2 = rho2.eigen();
    let rank = |e: &HermitianEigen| e.values().iter().filter(|&&l| l > RANK_TOL).count();
    let rank = rank(&e1).min(rank(&e2));
    if rank == 0 {
        return Ok(0.0);
    }
    let s1 = e1.map_values(|l| if l > RANK_TOL { l.sqrt() } else { 0.0 });
    let inner = s1.matmul(&rho2.mat).matmul(&s1).hermitian_part();
    // The product has rank at most min(rank ρ1, rank ρ2); the remaining
    // eigenvalues are rounding noise whose square roots would dominate.
    let root_trace: f64 = hermitian_eig(&inner)?.values()[..rank]
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}
