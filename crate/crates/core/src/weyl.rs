//! Weyl–Heisenberg operators `M_α = X^j Z^k`, `α = j·d + k`, for any `d ≥ 2`.
//!
//! Phases are taken from exact integer exponents of `ω = e^{2πi/d}` so the
//! trace-orthogonality holds to rounding for every `d`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matcore::{self, cr, CMatrix, C64};

const BASIS_TOL: f64 = 1e-12;
pub const FIDUCIAL_TOL: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-10;

/// `ω^m` with the exponent reduced mod `d` before touching floating point.
pub fn omega_pow(d: usize, m: i64) -> C64 {
    let r = m.rem_euclid(d as i64) as f64;
    C64::from_polar(1.0, 2.0 * PI * r / d as f64)
}

/// Cyclic shift `X|t⟩ = |t+1⟩`.
pub fn shift(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, c| cr(if r == (c + 1) % d { 1.0 } else { 0.0 }))
}

/// Clock `Z|t⟩ = ω^t|t⟩`.
pub fn clock(d: usize) -> CMatrix {
    CMatrix::diag(&(0..d).map(|t| omega_pow(d, t as i64)).collect::<Vec<_>>())
}

/// `X^j Z^k`: column `t` holds `ω^{tk}` in row `(t + j) mod d`.
pub fn weyl_operator(d: usize, j: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for t in 0..d {
        m[((t + j) % d, t)] = omega_pow(d, (t * k) as i64);
    }
    m
}

#[derive(Debug, Clone)]
pub struct WeylHeisenbergBasis {
    d: usize,
    operators: Vec<CMatrix>,
}

pub fn build_basis(d: usize) -> Result<WeylHeisenbergBasis> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { d });
    }
    let operators: Vec<CMatrix> = (0..d * d)
        .map(|a| weyl_operator(d, a / d, a % d))
        .collect();
    let basis = WeylHeisenbergBasis { d, operators };
    basis.certify()?;
    Ok(basis)
}

impl WeylHeisenbergBasis {
    fn certify(&self) -> Result<()> {
        let d = self.d as f64;
        let id_dev = self.operators[0].dist(&CMatrix::identity(self.d));
        if id_dev > BASIS_TOL {
            return Err(Error::CertificationFailed {
                index: 0,
                residual: id_dev,
            });
        }
        for (a, ma) in self.operators.iter().enumerate() {
            if a > 0 && ma.trace().norm() > BASIS_TOL {
                return Err(Error::CertificationFailed {
                    index: a,
                    residual: ma.trace().norm(),
                });
            }
            for (b, mb) in self.operators.iter().enumerate().skip(a) {
                let g = matcore::frobenius_inner(ma, mb)?;
                let expect = if a == b { d } else { 0.0 };
                if (g - cr(expect)).norm() > BASIS_TOL {
                    return Err(Error::CertificationFailed {
                        index: a,
                        residual: (g - cr(expect)).norm(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn omega(&self) -> C64 {
        omega_pow(self.d, 1)
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operator(&self, j: usize, k: usize) -> &CMatrix {
        &self.operators[self.index(j, k)]
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        (j % self.d) * self.d + k % self.d
    }

    pub fn split(&self, alpha: usize) -> (usize, usize) {
        (alpha / self.d, alpha % self.d)
    }

    /// Index `σ(α)` and phase `c` with `M_α† = c · M_{σ(α)}`.
    ///
    /// `(X^jZ^k)† = ω^{jk} X^{−j}Z^{−k}`; `σ` is an involution.
    pub fn adjoint_index(&self, alpha: usize) -> (usize, C64) {
        let d = self.d;
        let (j, k) = self.split(alpha);
        let sigma = self.index((d - j) % d, (d - k) % d);
        (sigma, omega_pow(d, (j * k) as i64))
    }
}

/// The scalar `c` with `X^jZ^k = c·Z^kX^j`.
pub fn commutation_check(basis: &WeylHeisenbergBasis, j: usize, k: usize) -> C64 {
    let d = basis.d;
    let xj = weyl_operator(d, j, 0);
    let zk = weyl_operator(d, 0, k);
    let lhs = &xj * &zk;
    let rhs = &zk * &xj;
    // both sides are monomial: one unit-modulus entry per column
    let r = (0..d).find(|&r| rhs[(r, 0)].norm() > 0.5).unwrap_or(0);
    lhs[(r, 0)] / rhs[(r, 0)]
}

/// `Σ_α M_α ρ M_α†`.
pub fn twirl(basis: &WeylHeisenbergBasis, rho: &CMatrix) -> CMatrix {
    let mut acc = CMatrix::zeros(basis.d, basis.d);
    for m in &basis.operators {
        acc = &acc + &m.conjugate_by(rho);
    }
    acc
}

/// Coefficients `c_α = tr(M_α† ρ)`.
pub fn wh_expand(basis: &WeylHeisenbergBasis, rho: &CMatrix) -> Result<Vec<C64>> {
    basis
        .operators
        .iter()
        .map(|m| matcore::frobenius_inner(m, rho))
        .collect()
}

/// `(1/d) Σ c_α M_α`.
pub fn reassemble(basis: &WeylHeisenbergBasis, coeffs: &[C64]) -> Result<CMatrix> {
    if coeffs.len() != basis.len() {
        return Err(Error::WrongCount {
            expected: basis.len(),
            found: coeffs.len(),
        });
    }
    let mut acc = CMatrix::zeros(basis.d, basis.d);
    for (m, c) in basis.operators.iter().zip(coeffs) {
        acc = &acc + &m.scale(*c);
    }
    Ok(acc.scale_real(1.0 / basis.d as f64))
}

fn check_unit(phi: &[C64], d: usize) -> Result<()> {
    if phi.len() != d {
        return Err(Error::ShapeMismatch {
            expected: (d, 1),
            found: (phi.len(), 1),
        });
    }
    let n = matcore::norm(phi);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidInput(format!(
            "state must have unit norm, got {n}"
        )));
    }
    Ok(())
}

/// `|φ_α⟩ = M_α|φ⟩`.
pub fn orbit(basis: &WeylHeisenbergBasis, phi: &[C64]) -> Result<Vec<Vec<C64>>> {
    check_unit(phi, basis.d)?;
    Ok(basis.operators.iter().map(|m| m.mat_vec(phi)).collect())
}

/// `|⟨φ|M_α|φ⟩|²` for every `α`.
pub fn fiducial_overlaps(basis: &WeylHeisenbergBasis, phi: &[C64]) -> Result<Vec<f64>> {
    check_unit(phi, basis.d)?;
    Ok(basis
        .operators
        .iter()
        .map(|m| matcore::inner(phi, &m.mat_vec(phi)).norm_sqr())
        .collect())
}

/// Checks `|⟨φ|M_α|φ⟩|² = 1/(d+1)` for all `α ≠ 0` within 1e-9.
pub fn check_fiducial(basis: &WeylHeisenbergBasis, phi: &[C64]) -> Result<()> {
    let target = 1.0 / (basis.d as f64 + 1.0);
    let deviation = fiducial_overlaps(basis, phi)?
        .iter()
        .skip(1)
        .map(|o| (o - target).abs())
        .fold(0.0, f64::max);
    if deviation > FIDUCIAL_TOL {
        return Err(Error::NotAFiducial { deviation });
    }
    Ok(())
}

/// Built-in SIC fiducials for `d = 2` and `d = 3`.
pub fn fiducial(d: usize) -> Option<Vec<C64>> {
    match d {
        2 => {
            let s3 = 3f64.sqrt();
            let n = 1.0 / 6f64.sqrt();
            Some(vec![
                cr(n * (3.0 + s3).sqrt()),
                C64::from_polar(n * (3.0 - s3).sqrt(), PI / 4.0),
            ])
        }
        3 => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            Some(vec![cr(0.0), cr(h), cr(-h)])
        }
        _ => None,
    }
}
