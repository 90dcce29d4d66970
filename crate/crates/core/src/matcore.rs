//! Dense complex linear algebra used by every other module.
//!
//! Matrices are small (d up to ~16, design matrices up to a few dozen rows),
//! so everything here is a straightforward row-major implementation with no
//! blocking. The Hermitian eigensolver is a cyclic Jacobi sweep, which is
//! deterministic and accurate to a few ulps at these sizes.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default Hermiticity tolerance (relative to `max(1, ‖A‖_F)`).
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Jacobi stops once the off-diagonal Frobenius norm falls below this
/// fraction of `‖A‖_F`.
pub const JACOBI_OFF_DIAG_REL: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative eigenvalue floor used by the positive-definiteness gates.
pub const PD_REL_FLOOR: f64 = 1e-12;

/// Pivots smaller than this fraction of the largest entry are treated as zero.
pub const PIVOT_REL_TOL: f64 = 1e-13;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `⟨u|v⟩ = Σ conj(u_k) v_k`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(v: &[C64]) -> Result<Vec<C64>> {
    let n = norm(v);
    if n <= 1e-13 {
        return Err(Error::ZeroVector { norm: n });
    }
    Ok(v.iter().map(|z| z / n).collect())
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: (data.len(), 1),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| cr(x)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| cr(x)).collect();
        Self::diag(&v)
    }

    pub fn column(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    /// `|u⟩⟨u|`.
    pub fn projector(u: &[C64]) -> Self {
        Self::outer(u, u)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(cr(s))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: (self.cols, other.cols),
                found: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mat_vec shape mismatch");
        (0..self.rows).map(|r| inner_plain(self.row(r), v)).collect()
    }

    /// `A X A†`, the conjugation used by every channel in the crate.
    pub fn conjugate_by(&self, x: &Self) -> Self {
        &(self * x) * &self.adjoint()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_{r,c} |A_rc - B_rc|`; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).frobenius_norm()
    }

    /// `‖A − A†‖_F`.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self - &self.adjoint()).frobenius_norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol * self.frobenius_norm().max(1.0)
    }

    /// `(A + A†)/2`.
    pub fn hermitize(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && (&(&self.adjoint() * self) - &Self::identity(self.rows)).frobenius_norm() <= tol
    }
}

fn inner_plain(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matmul shape mismatch")
    }
}

/// `tr(A†B)`.
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: a.shape(),
            found: b.shape(),
        });
    }
    Ok(inner(a.as_slice(), b.as_slice()))
}

/// Row-major stacking of a square matrix into a `d² × 1` column.
pub fn vectorize(a: &CMatrix) -> CMatrix {
    CMatrix::column(a.as_slice())
}

pub fn devectorize(v: &CMatrix) -> Result<CMatrix> {
    let n = v.rows() * v.cols();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::InvalidInput(format!(
            "cannot devectorize a vector of length {n}"
        )));
    }
    CMatrix::from_vec(d, d, v.as_slice().to_vec())
}

#[derive(Debug, Clone)]
pub struct HermitianEigenSystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenvectors.
    pub eigenvectors: CMatrix,
}

impl HermitianEigenSystem {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        CMatrix::from_fn(n, n, |r, c| {
            (0..n)
                .map(|k| v[(r, k)] * mapped[k] * v[(c, k)].conj())
                .sum()
        })
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eigen(a: &CMatrix, tol: f64) -> Result<HermitianEigenSystem> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch {
            expected: (a.rows(), a.rows()),
            found: a.shape(),
        });
    }
    let scale = a.frobenius_norm();
    let residual = a.hermitian_residual();
    if residual > tol * scale.max(1.0) {
        return Err(Error::NotHermitian { residual });
    }

    let n = a.rows();
    let mut m = a.hermitize();
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = CMatrix::identity(n);
    let threshold = JACOBI_OFF_DIAG_REL * scale;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&m) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > threshold {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += m[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

// One Jacobi step zeroing m[p][q]: m <- U† m U, v <- v U, where
// U = diag-phase(e^{-iφ} on q) · real rotation(c, s).
fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g < 1e-300 {
        return;
    }
    let phase = apq / g;
    let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * g);
    let t = if tau.abs() > 1e150 {
        0.5 / tau
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;

    let ph = phase.conj();
    let u_pp = cr(cs);
    let u_pq = cr(sn);
    let u_qp = ph * (-sn);
    let u_qq = ph * cs;

    let n = m.rows();
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * u_pp + akq * u_qp;
        m[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        m[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    m[(p, q)] = cr(0.0);
    m[(q, p)] = cr(0.0);
    m[(p, p)].im = 0.0;
    m[(q, q)].im = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// `A^{-1/2}` for Hermitian positive definite `A`, as `V diag(λ^{-1/2}) V†`.
///
/// `eig_floor` defaults to `1e-12 · λ_max`.
pub fn inv_sqrt_pd(a: &CMatrix, eig_floor: Option<f64>) -> Result<CMatrix> {
    let eig = hermitian_eigen(a, HERMITIAN_TOL)?;
    check_pd(&eig, eig_floor)?;
    Ok(eig.apply_fn(|l| 1.0 / l.sqrt()).hermitize())
}

/// Principal square root of a Hermitian PSD matrix.
pub fn sqrt_psd(a: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigen(a, HERMITIAN_TOL)?;
    Ok(eig.apply_fn(|l| l.max(0.0).sqrt()).hermitize())
}

pub(crate) fn check_pd(eig: &HermitianEigenSystem, eig_floor: Option<f64>) -> Result<()> {
    let max = eig.max();
    let min = eig.min();
    let floor = eig_floor.unwrap_or(PD_REL_FLOOR * max);
    if max <= 0.0 || min < floor || min <= 0.0 {
        return Err(Error::NotPositiveDefinite { min, max });
    }
    Ok(())
}

struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

fn lu_decompose(a: &CMatrix) -> Lu {
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let scale = a.max_abs();
    let mut singular = scale == 0.0;
    for k in 0..n {
        let (piv, best) = (k..n)
            .map(|r| (r, lu[(r, k)].norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < PIVOT_REL_TOL * scale || best == 0.0 {
            singular = true;
        }
        if piv != k {
            for c in 0..n {
                let tmp = lu[(k, c)];
                lu[(k, c)] = lu[(piv, c)];
                lu[(piv, c)] = tmp;
            }
            perm.swap(k, piv);
            sign = -sign;
        }
        let pivot = lu[(k, k)];
        if pivot.norm() == 0.0 {
            continue;
        }
        for r in (k + 1)..n {
            let f = lu[(r, k)] / pivot;
            lu[(r, k)] = f;
            if f == cr(0.0) {
                continue;
            }
            for c in (k + 1)..n {
                let t = lu[(k, c)];
                lu[(r, c)] -= f * t;
            }
        }
    }
    Lu {
        lu,
        perm,
        sign,
        singular,
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve_linear(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::ShapeMismatch {
            expected: (a.rows(), b.cols()),
            found: b.shape(),
        });
    }
    let n = a.rows();
    let Lu {
        lu, perm, singular, ..
    } = lu_decompose(a);
    if singular {
        return Err(Error::Singular);
    }
    let mut x = CMatrix::from_fn(n, b.cols(), |r, c| b[(perm[r], c)]);
    for col in 0..b.cols() {
        for r in 0..n {
            let mut s = x[(r, col)];
            for k in 0..r {
                s -= lu[(r, k)] * x[(k, col)];
            }
            x[(r, col)] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[(r, col)];
            for k in (r + 1)..n {
                s -= lu[(r, k)] * x[(k, col)];
            }
            x[(r, col)] = s / lu[(r, r)];
        }
    }
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve_linear(a, &CMatrix::identity(a.rows()))
}

pub fn determinant(a: &CMatrix) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch {
            expected: (a.rows(), a.rows()),
            found: a.shape(),
        });
    }
    let Lu { lu, sign, .. } = lu_decompose(a);
    let mut det = cr(sign);
    for i in 0..a.rows() {
        det *= lu[(i, i)];
    }
    Ok(det)
}

/// Least-squares solution of `A x ≈ b` through `(A†A) x = A†b`.
pub fn lstsq_via_normal_equations(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let ah = a.adjoint();
    let gram = &ah * a;
    let rhs = ah.matmul(b)?;
    solve_linear(&gram, &rhs)
}

/// Singular values of `A`, descending, `min(rows, cols)` of them.
///
/// One-sided Jacobi on the columns: small singular values keep their
/// relative accuracy, unlike the eigenvalues of `A†A`.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    let w = if a.rows() < a.cols() { a.adjoint() } else { a.clone() };
    let (m, n) = w.shape();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|c| w.col(c)).collect();
    let scale: f64 = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    // columns below this squared norm are numerically zero
    let negligible = scale * f64::EPSILON * f64::EPSILON;
    let tol = m as f64 * f64::EPSILON;
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        converged = true;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = inner(&cols[p], &cols[q]);
                let g = gamma.norm();
                if alpha <= negligible || beta <= negligible || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..m {
                    let ap = cols[p][r];
                    let aq = cols[q][r] * phase;
                    cols[p][r] = ap * cs - aq * sn;
                    cols[q][r] = ap * sn + aq * cs;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Spectral condition number `‖A‖₂‖A⁻¹‖₂` (∞ when singular).
///
/// Square inputs go through the explicit inverse so that tiny singular
/// values are not lost to the squaring in `A†A`.
pub fn condition_number(a: &CMatrix) -> Result<f64> {
    let largest = |m: &CMatrix| -> Result<f64> {
        Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
    };
    if a.is_square() {
        return match inverse(a) {
            Ok(inv) => Ok(largest(a)? * largest(&inv)?),
            Err(Error::Singular) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        };
    }
    let sv = singular_values(a)?;
    let max = sv.first().copied().unwrap_or(0.0);
    let min = sv.last().copied().unwrap_or(0.0);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

pub fn random_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(u) = normalized(&v) {
            return u;
        }
    }
}

/// `G G† / tr(G G†)` for a complex Gaussian `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = random_gaussian_matrix(d, d, rng);
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    let mut rho = gg.scale_real(1.0 / tr).hermitize();
    for i in 0..d {
        rho[(i, i)].im = 0.0;
    }
    rho
}

pub fn random_density_matrix_seeded(d: usize, seed: u64) -> CMatrix {
    random_density_matrix(d, &mut crate::rng::stream(seed, 0))
}

/// Random Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    random_gaussian_matrix(d, d, rng).hermitize()
}
